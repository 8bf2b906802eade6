"""Complete elliptic integrals, the ratio map Psi and its inverse Phi, and the decay integral J.

Every function takes the elliptic modulus k (not the parameter m = k^2).
Scalar input gives a float back, array input an ndarray.
"""

import math
from typing import Callable, Tuple, Union

import numpy as np

from ..shared.errors import ConvergenceError, DomainError
from ..shared.logging import logger
from ..shared.models import JValue
from .config import settings
from .eigen_linalg import gauss_legendre_rule

ArrayLike = Union[float, np.ndarray]

_AGM_MAX_ITER = 60
_AGM_TOL = 4.0 * np.finfo(float).eps
# panel orders tried in turn; the sum is accepted once two successive orders agree
_PANEL_ORDERS = (32, 48, 64, 96)
_GRADING = 0.25
# innermost panel stays this many ulps of the endpoint wide, so no node rounds onto it
_ENDPOINT_ULPS = 4096

LN4_MINUS_1 = math.log(4.0) - 1.0


class Modulus(float):
    """Elliptic modulus k with 0 <= k <= 1."""

    def __new__(cls, k: float):
        value = float(k)
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"elliptic modulus must lie in [0, 1], got {k}")
        return super().__new__(cls, value)

    @classmethod
    def from_parameter(cls, m: float) -> "Modulus":
        """Build from the parameter m = k^2."""
        if not 0.0 <= m <= 1.0:
            raise DomainError(f"elliptic parameter must lie in [0, 1], got {m}")
        return cls(math.sqrt(m))

    @property
    def complement(self) -> float:
        """k' = sqrt(1 - k^2), computed without cancellation."""
        return math.sqrt((1.0 - self) * (1.0 + self))


def _as_modulus_array(k: ArrayLike, allow_one: bool) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(k, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"elliptic modulus must lie in [0, 1], got {k}")
    if not allow_one and np.any(arr == 1.0):
        raise DomainError("K(k) diverges at k = 1")
    return arr, scalar


def _unwrap(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values[0]) if scalar else values


def _agm(k: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """K and E for 0 <= k < 1 by the arithmetic-geometric mean."""
    a = np.ones_like(k)
    b = np.sqrt((1.0 - k) * (1.0 + k))
    # E/K = 1 - sum 2^(j-1) c_j^2 with c_0 = k
    total = 0.5 * k * k
    weight = 0.5
    for _ in range(_AGM_MAX_ITER):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        weight *= 2.0
        total = total + weight * c * c
        # a and b may settle one ulp apart, so |c| never reaches zero
        if np.all(np.abs(c) <= _AGM_TOL * a):
            break
    else:
        raise ConvergenceError("AGM did not converge", diagnostics={"k": k.tolist()})
    K = np.pi / (2.0 * a)
    return K, K * (1.0 - total)


def complete_elliptic_K(k: ArrayLike) -> ArrayLike:
    """K(k) = integral_0^1 dt / sqrt((1 - t^2)(1 - k^2 t^2)) for 0 <= k < 1."""
    arr, scalar = _as_modulus_array(k, allow_one=False)
    K, _ = _agm(arr)
    return _unwrap(K, scalar)


def complete_elliptic_E(k: ArrayLike) -> ArrayLike:
    """E(k) = integral_0^1 sqrt((1 - k^2 t^2) / (1 - t^2)) dt for 0 <= k <= 1; E(1) = 1."""
    arr, scalar = _as_modulus_array(k, allow_one=True)
    out = np.ones_like(arr)
    inner = arr < 1.0
    if np.any(inner):
        _, E = _agm(arr[inner])
        out[inner] = E
    return _unwrap(out, scalar)


def complete_elliptic_KE(k: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """K and E from a single AGM pass."""
    arr, scalar = _as_modulus_array(k, allow_one=False)
    K, E = _agm(arr)
    return _unwrap(K, scalar), _unwrap(E, scalar)


def psi_ratio(k: ArrayLike) -> ArrayLike:
    """Psi(k) = k / E(k); increasing from [0, 1] onto [0, 1]."""
    arr, scalar = _as_modulus_array(k, allow_one=True)
    return _unwrap(arr / complete_elliptic_E(arr), scalar)


def psi_derivative(k: ArrayLike) -> ArrayLike:
    """Psi'(k) = K(k) / E(k)^2 for 0 <= k < 1."""
    K, E = complete_elliptic_KE(k)
    return K / (E * E)


def phi_inverse(x: ArrayLike) -> Union["Modulus", np.ndarray]:
    """Phi = Psi^{-1}, so that Psi(Phi(x)) = x and x <= Phi(x) <= pi x / 2 on [0, 1].

    Safeguarded Newton with derivative K/E^2, falling back to bisection.
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    x = np.atleast_1d(arr)
    if np.any(np.isnan(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError(f"Phi is defined on [0, 1], got {arr}")

    lo = x.copy()
    hi = np.minimum(1.0, 0.5 * np.pi * x)
    k = np.clip(0.99 * hi, lo, hi)
    done = (x == 0.0) | (x == 1.0) | (hi <= lo)
    k = np.where(x == 0.0, 0.0, np.where(x == 1.0, 1.0, k))
    k_max = settings.elliptic_k_max

    for step in range(settings.phi_newton_steps + 200):
        active = ~done
        if not np.any(active):
            break
        ka = k[active]
        f = psi_ratio(ka) - x[active]
        converged = np.abs(f) <= settings.phi_tol
        lo_a = np.where(f < 0.0, ka, lo[active])
        hi_a = np.where(f > 0.0, ka, hi[active])

        kk = np.minimum(ka, k_max)
        K, E = complete_elliptic_KE(kk)
        newton = ka - f * (E * E) / K
        bisect = (step >= settings.phi_newton_steps) | ~((newton > lo_a) & (newton < hi_a))
        k_new = np.where(bisect, 0.5 * (lo_a + hi_a), newton)
        k_new = np.where(converged, ka, k_new)
        collapsed = (hi_a - lo_a) <= 2.0 * np.finfo(float).eps * hi_a

        k[active] = k_new
        lo[active] = lo_a
        hi[active] = hi_a
        done[active] = converged | collapsed
    else:
        raise ConvergenceError("Phi inversion did not converge", diagnostics={"x": x.tolist()})

    if scalar:
        return Modulus(min(max(float(k[0]), 0.0), 1.0))
    return k


def _panel_sum(f: Callable[[np.ndarray], np.ndarray], breaks: np.ndarray, order: int) -> float:
    rule = gauss_legendre_rule(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    x = rule.nodes[None, :]
    # measured from the nearer panel end, so nodes next to an endpoint keep their offset
    nodes = np.where(x >= 0.0, b - half * (1.0 - x), a + half * (1.0 + x))
    weights = half * rule.weights[None, :]
    return float(np.sum(weights * f(nodes)))


def _graded_breaks(a: float, b: float, toward_upper: bool = True) -> np.ndarray:
    """Panel breakpoints refined geometrically toward one end of [a, b]."""
    length = b - a
    end = b if toward_upper else a
    floor = max(1e-15 * length, _ENDPOINT_ULPS * np.finfo(float).eps * abs(end))
    widths = [length]
    while widths[-1] * _GRADING > floor:
        widths.append(widths[-1] * _GRADING)
    widths = np.array(widths[1:])
    if toward_upper:
        return np.concatenate([[a], b - widths, [b]])
    return np.concatenate([[a], a + widths[::-1], [b]])


def graded_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    toward_upper: bool = True,
    tol: float = 1e-13,
) -> Tuple[float, float]:
    """Composite Gauss-Legendre on panels graded toward an endpoint singularity.

    The panel order is raised until two successive sums agree to tol (relative
    to max(1, |value|)). Returns (value, error estimate).
    """
    if b <= a:
        return 0.0, 0.0
    breaks = _graded_breaks(a, b, toward_upper)
    previous = _panel_sum(f, breaks, _PANEL_ORDERS[0])
    change = math.inf
    for order in _PANEL_ORDERS[1:]:
        current = _panel_sum(f, breaks, order)
        change = abs(current - previous)
        if change <= tol * max(1.0, abs(current)):
            return current, change
        previous = current
    raise ConvergenceError(
        "graded quadrature did not converge",
        diagnostics={"interval": (a, b), "panels": breaks.size - 1, "orders": _PANEL_ORDERS, "change": change},
    )


def _reciprocal_e_squared(t: np.ndarray) -> np.ndarray:
    E = complete_elliptic_E(np.clip(t, 0.0, 1.0))
    return 1.0 / (E * E)


def log_integral_from(y: float) -> Tuple[float, float]:
    """(pi^2/4) integral_y^1 dt / (t E(t)^2) for 0 < y <= 1, in the variable u = ln t."""
    if not 0.0 < y <= 1.0:
        raise DomainError(f"lower limit must lie in (0, 1], got {y}")
    if y == 1.0:
        return 0.0, 0.0
    value, err = graded_quadrature(
        lambda u: _reciprocal_e_squared(np.exp(u)),
        math.log(y),
        0.0,
        toward_upper=True,
        tol=settings.j_rel_tol,
    )
    scale = 0.25 * math.pi ** 2
    return scale * value, scale * err


def _phi_argument(x: float, upper: float, what: str) -> float:
    if not x > 0.0:
        raise DomainError(f"{what} requires x > 0, got {x}")
    ratio = x / upper
    if ratio > 1.0 + 1e-14:
        raise DomainError(f"{what} requires x <= {upper:g}, got {x}")
    return min(ratio, 1.0)


def j_integral(x: float) -> JValue:
    """J(x) = (pi^2/4) integral_{Phi(2x/pi)}^1 dt / (t E(t)^2) for 0 < x <= pi/2."""
    arg = _phi_argument(x, 0.5 * math.pi, "J")
    y = float(phi_inverse(arg))
    if y == 0.0:
        raise DomainError(f"J is unbounded as x -> 0, got {x}")
    value, err = log_integral_from(y)
    return JValue(x=x, value=max(value, 0.0), quadrature_error_estimate=err)


def j_asymptotic(x: ArrayLike) -> ArrayLike:
    """ln(4 / (e x)), the small-x form of J."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError(f"J asymptote requires x > 0, got {x}")
    out = LN4_MINUS_1 - np.log(arr)
    return float(out) if out.ndim == 0 else out


def delta_consistency(y: float) -> float:
    """(pi^2/4) integral_y^1 dt / (t E^2) + ln y; tends to 2 ln 2 - 1 as y -> 0."""
    value, _ = log_integral_from(y)
    return value + math.log(y)


def delta_constant() -> float:
    """integral_0^1 (pi^2/4 - E(t)^2) / (t E(t)^2) dt, which equals 2 ln 2 - 1."""

    def integrand(t: np.ndarray) -> np.ndarray:
        E = complete_elliptic_E(np.clip(t, 0.0, 1.0))
        return (0.25 * math.pi ** 2 - E * E) / (t * E * E)

    value, err = graded_quadrature(integrand, 0.0, 1.0, toward_upper=True, tol=settings.j_rel_tol)
    logger.debug(f"delta constant {value:.16f} (quadrature change {err:.1e})")
    return value


def j_l(l: float, c: float) -> float:
    """J_l(c) = l J(c / l) for 0 < c <= pi l / 2."""
    if not l > 0.0:
        raise DomainError(f"J_l requires l > 0, got {l}")
    if c > 0.5 * math.pi * l * (1.0 + 1e-14):
        raise DomainError(f"J_l requires c <= pi l / 2, got c={c}, l={l}")
    return l * j_integral(c / l).value


def j_l_direct(l: float, c: float) -> float:
    """(pi/2) integral_c^{pi l/2} dtau / (Phi(2tau/(pi l)) K(Phi(2tau/(pi l)))).

    Evaluated independently of j_l so the two can be cross-checked.
    """
    if not l > 0.0 or not c > 0.0:
        raise DomainError(f"J_l requires l > 0 and c > 0, got l={l}, c={c}")
    upper = 0.5 * math.pi * l
    if c > upper * (1.0 + 1e-14):
        raise DomainError(f"J_l requires c <= pi l / 2, got c={c}, l={l}")
    if c >= upper:
        return 0.0

    def integrand(tau: np.ndarray) -> np.ndarray:
        shape = tau.shape
        s = phi_inverse(np.minimum(tau.ravel() / upper, 1.0))
        s = np.minimum(s, settings.elliptic_k_max)
        return (1.0 / (s * complete_elliptic_K(s))).reshape(shape)

    value, _ = graded_quadrature(integrand, c, upper, toward_upper=True, tol=1e-12)
    return 0.5 * math.pi * value


def e_minus_one_bound(k: ArrayLike) -> ArrayLike:
    """Upper bound (1 - k^2)(ln(1/(1 - k^2))/4 + ln 2) for E(k) - 1."""
    arr, scalar = _as_modulus_array(k, allow_one=True)
    m1 = (1.0 - arr) * (1.0 + arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(m1 > 0.0, m1 * (0.25 * np.log(1.0 / m1) + math.log(2.0)), 0.0)
    return _unwrap(out, scalar)


def k_comparison(k: ArrayLike) -> ArrayLike:
    """(1 - k^2) K(k) - (E(k) - 1), which is nonnegative on [0, 1)."""
    arr, scalar = _as_modulus_array(k, allow_one=False)
    K, E = _agm(arr)
    out = (1.0 - arr) * (1.0 + arr) * K - (E - 1.0)
    return _unwrap(out, scalar)
