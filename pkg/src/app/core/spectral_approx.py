"""Closed-form approximations of chi_n(c), psi_n(1)^2 and lambda_n(c), with their bounds.

All lambda-like values are natural logarithms.
"""

import math
from typing import Optional, Tuple

from ..shared.errors import DomainError, ValidityError
from ..shared.logging import logger
from ..shared.models import (
    ApproxBundle,
    ErrorBudget,
    KappaBound,
    KappaCondition,
    ProlateEigenpair,
    SpectralPoint,
    TheoremConstants,
)
from .config import settings
from .prolate_oracle import prolate_solve
from .special_functions import complete_elliptic_K, j_integral, j_l, phi_inverse

LOG_HALF = math.log(0.5)
LOG_TWO = math.log(2.0)

# Constants of the psi_n(1)^2 bracket
ALPHA = 1.5
BETA = 0.35


def _require_valid(point: SpectralPoint) -> float:
    arg = point.phi_argument
    if arg > 1.0:
        raise ValidityError(
            f"2c/(pi(n+1/2)) = {arg:.6f} > 1 at {point}; approximation undefined",
            condition="2c/(pi(n+1/2)) <= 1",
        )
    return arg


def sqrt_q_tilde(point: SpectralPoint) -> float:
    """Phi(2c / (pi (n + 1/2))), the approximation of sqrt(q) = c / sqrt(chi_n)."""
    arg = _require_valid(point)
    value = float(phi_inverse(arg))
    if not arg <= value <= 0.5 * math.pi * arg * (1.0 + 1e-15):
        raise ValidityError(f"Phi({arg}) = {value} escapes [x, pi x/2]", condition="x <= Phi(x) <= pi x/2")
    return value


def q_tilde(point: SpectralPoint) -> float:
    return sqrt_q_tilde(point) ** 2


def sqrt_chi_tilde(point: SpectralPoint) -> float:
    return point.c / sqrt_q_tilde(point)


def chi_tilde(point: SpectralPoint) -> float:
    return sqrt_chi_tilde(point) ** 2


def kappa_proxy(point: SpectralPoint) -> float:
    """(1 - q~) sqrt(chi~), with 1 - q~ formed as (1 - sqrt q~)(1 + sqrt q~)."""
    s = sqrt_q_tilde(point)
    return (1.0 - s) * (1.0 + s) * point.c / s


def psi1_sq_estimate(point: SpectralPoint, sqrt_q: Optional[float] = None) -> float:
    """pi c / (2 sqrt(q) K(sqrt(q))); uses q~ unless an oracle sqrt(q) is supplied."""
    s = sqrt_q_tilde(point) if sqrt_q is None else sqrt_q
    if not 0.0 < s < 1.0:
        raise ValidityError(f"sqrt(q) = {s} outside (0, 1) at {point}", condition="q < 1")
    return math.pi * point.c / (2.0 * s * complete_elliptic_K(s))


def delta_kappa(kappa: float, typeset: bool = False) -> float:
    """delta(kappa) = eta (2 + eta / kappa) for kappa >= 4.

    The default reading of eta's first term, beta / sqrt(2 - beta/kappa),
    gives delta(4) = 77.2, delta(12) = 7.64 and the limit 4.74. The
    typeset form beta / (1 + sqrt(1 - beta/kappa)) is kept behind ``typeset``.
    """
    if kappa < 4.0:
        raise DomainError(f"delta(kappa) needs kappa >= 4, got {kappa}")
    root = math.sqrt(1.0 - BETA / kappa)
    growth = math.sqrt(2.0) * ALPHA * (1.0 + ALPHA / kappa)
    c_inverse = root - growth / kappa
    if c_inverse <= 0.0:
        raise DomainError(f"C(kappa)^-1 = {c_inverse} is not positive for kappa = {kappa}")
    if typeset:
        lead = BETA / (1.0 + root)
    else:
        lead = BETA / math.sqrt(1.0 + root * root)
    eta = (lead + growth) / c_inverse
    return eta * (2.0 + eta / kappa)


def psi1_sq_bracket(
    point: SpectralPoint, kappa: Optional[float] = None, pair: Optional[ProlateEigenpair] = None
) -> KappaBound:
    """Bracket (pi sqrt(chi_n) / (2 K(sqrt q))) (1 -+ delta(kappa) eps_n), eps_n = 1 / ((1 - q) sqrt(chi_n))."""
    kappa = settings.kappa_default if kappa is None else kappa
    if kappa < 4.0:
        raise DomainError(f"the psi_n(1)^2 bracket needs kappa >= 4, got {kappa}")
    pair = pair or prolate_solve(point)
    observed = pair.kappa_observed
    if not (pair.q < 1.0 and observed > kappa):
        condition = kappa_condition(point, kappa) if point.n >= 3 else None
        detail = f"; sufficient condition: {condition.branch or 'none holds'}" if condition else ""
        raise ValidityError(
            f"(1 - q) sqrt(chi_n) = {observed:.6f} does not exceed kappa = {kappa} at {point}{detail}",
            condition="(1 - q) sqrt(chi_n) > kappa",
        )
    eps = 1.0 / observed
    delta = delta_kappa(kappa)
    centre = math.pi * math.sqrt(pair.chi) / (2.0 * complete_elliptic_K(pair.sqrt_q))
    return KappaBound(
        kappa=kappa,
        epsilon_n=eps,
        delta_of_kappa=delta,
        lower=centre * (1.0 - delta * eps),
        upper=centre * (1.0 + delta * eps),
    )


def c_n_kappa(n: int, kappa: float) -> float:
    return max(0.5 * math.pi * n - 0.25 * kappa * (math.log(n) + 6.0), 0.5 * (n + 1))


def crude_kappa_lower_bound(point: SpectralPoint) -> float:
    """((n - 2c/pi) - 1/e) / (ln n + 5), a lower bound of (1 - q) sqrt(chi_n) for n >= 2."""
    n, c = point.n, point.c
    if n < 2:
        raise DomainError(f"the crude bound needs n >= 2, got {n}")
    return ((n - 2.0 * c / math.pi) - math.exp(-1.0)) / (math.log(n) + 5.0)


def kappa_condition(point: SpectralPoint, kappa: float) -> KappaCondition:
    """Sufficient conditions on (n, c) for (1 - q) sqrt(chi_n) > kappa."""
    n, c = point.n, point.c
    if n < 3 or kappa < 4.0:
        raise DomainError(f"kappa condition needs n >= 3 and kappa >= 4, got n={n}, kappa={kappa}")
    margin = 0.5 * math.pi * n - c
    log_n = math.log(n)
    branch = None
    if c <= n - kappa:
        branch = "c <= n - kappa"
    elif margin > 0.25 * kappa * (log_n + 9.0):
        branch = "pi n/2 - c > kappa/4 (ln n + 9)"
    elif c > 0.5 * (n + 1) and margin > 0.25 * kappa * (log_n + 6.0):
        branch = "c > (n+1)/2 and pi n/2 - c > kappa/4 (ln n + 6)"
    return KappaCondition(
        satisfied=branch is not None,
        branch=branch,
        c_n_kappa=c_n_kappa(n, kappa),
        crude_lower_bound=crude_kappa_lower_bound(point),
    )


def lambda_tilde(point: SpectralPoint) -> float:
    """log lambda~ = log(1/2) - (2n + 1) J(c / (n + 1/2))."""
    _require_valid(point)
    return LOG_HALF - (2 * point.n + 1) * j_integral(point.c / point.n_half).value


def lambda_hat(point: SpectralPoint) -> float:
    """log lambda^ = log 2 + log lambda~."""
    return LOG_TWO + lambda_tilde(point)


def lambda_widom(point: SpectralPoint) -> float:
    """(2n + 1) log(e c / (4 (n + 1/2)))."""
    return (2 * point.n + 1) * math.log(math.e * point.c / (4.0 * point.n_half))


def mu_abs_from_loglambda(c: float, log_lambda: float) -> float:
    """log |mu| = (log(2 pi / c) + log lambda) / 2."""
    if not c > 0.0:
        raise DomainError(f"bandwidth must be positive, got {c}")
    return 0.5 * (math.log(2.0 * math.pi / c) + log_lambda)


def loglambda_from_mu_abs(c: float, log_mu: float) -> float:
    if not c > 0.0:
        raise DomainError(f"bandwidth must be positive, got {c}")
    return 2.0 * log_mu + math.log(c / (2.0 * math.pi))


def tilde_bracket(point: SpectralPoint) -> Tuple[float, float]:
    """log(1/2) + log lambda^W -+ pi^2 c^2 / (4 (n + 1/2)).

    Raises ValidityError if log lambda~ falls outside, beyond the J quadrature tolerance.
    """
    _require_valid(point)
    centre = LOG_HALF + lambda_widom(point)
    half_width = 0.25 * math.pi ** 2 * point.c ** 2 / point.n_half
    lower, upper = centre - half_width, centre + half_width
    tilde = lambda_tilde(point)
    slack = (2 * point.n + 1) * settings.j_rel_tol * max(1.0, abs(tilde))
    if not lower - slack <= tilde <= upper + slack:
        raise ValidityError(
            f"log lambda~ = {tilde:.6g} outside [{lower:.6g}, {upper:.6g}] at {point}",
            condition="log lambda~ within its Widom bracket",
        )
    return lower, upper


def theorem_constants(kappa: float) -> TheoremConstants:
    delta = delta_kappa(kappa)
    pk = math.pi * kappa
    return TheoremConstants(
        kappa=kappa,
        delta1=22.0 + 3.0 * pk * (2.0 + delta),
        delta2=math.pi ** 2 / 8.0 + pk + 2.0 * delta * (1.0 + pk / 4.0),
        delta3=math.pi ** 2 / 8.0 + 2.0 * delta * (1.0 + pk / 4.0),
    )


def tail_integral_bound(n: int, kappa: float) -> float:
    """pi kappa ln n + 6 pi kappa + 2 pi^2, bounding the tail from c_n^kappa to c*_n."""
    if n < 2 * kappa + 1:
        raise DomainError(f"tail bound needs n >= 2 kappa + 1, got n={n}, kappa={kappa}")
    return math.pi * kappa * math.log(n) + 6.0 * math.pi * kappa + 2.0 * math.pi ** 2


def error_budget(n: int, c: float, kappa: float) -> ErrorBudget:
    """Explicit bound on |I(c, c*_n) - (n + 1/2) J(c / (n + 1/2))|, split by source."""
    if n < 3 or not c > 0.0:
        raise DomainError(f"error budget needs n >= 3 and c > 0, got n={n}, c={c}")
    delta = delta_kappa(kappa)
    log_n = math.log(n)
    tail = math.pi * kappa * log_n + 6.0 * math.pi * kappa + 2.0 * math.pi ** 2
    remainder = 2.0 * delta * (
        (1.0 + 0.25 * math.pi * kappa) * log_n
        + max(0.0, math.log(1.0 / c))
        + 1.5 * math.pi * kappa
    )
    comparison = (math.pi ** 2 / 8.0) * math.log(math.pi * (n + 0.5) / (2.0 * c)) + math.pi ** 3 / 16.0
    return ErrorBudget(
        n=n, c=c, kappa=kappa, tail=tail, psi_remainder=remainder, j_comparison=comparison
    )


def envelope_log_factor(n: int, c: float, kappa: float) -> float:
    """log A(n, c) = log delta1 + delta2 log n - delta3 log(c/(c+1)) + pi^2 c^2 / (4n)."""
    k = theorem_constants(kappa)
    return (
        math.log(k.delta1)
        + k.delta2 * math.log(n)
        - k.delta3 * math.log(c / (c + 1.0))
        + 0.25 * math.pi ** 2 * c ** 2 / n
    )


def observed_kappa_delta(
    c: float, n: int, pair: Optional[ProlateEigenpair] = None
) -> Tuple[float, float]:
    """(1 - q) sqrt(chi_n) and the delta that turns the psi_n(1)^2 bracket into an equality."""
    pair = pair or prolate_solve(SpectralPoint(n=n, c=c))
    if not pair.q < 1.0:
        raise ValidityError(f"q = {pair.q:.6f} >= 1 at {pair.point}", condition="q < 1")
    kappa_obs = pair.kappa_observed
    estimate = math.pi * math.sqrt(pair.chi) / (2.0 * complete_elliptic_K(pair.sqrt_q))
    delta_obs = abs(pair.psi1_sq / estimate - 1.0) * kappa_obs
    return kappa_obs, delta_obs


def improved_error_bounds(
    point: SpectralPoint, kappa: float, pair: Optional[ProlateEigenpair] = None
) -> Tuple[float, float]:
    """Large-n bounds on |sqrt q - sqrt q~| and |sqrt chi~ - sqrt chi_n| for a given kappa."""
    pair = pair or prolate_solve(point)
    if not pair.q < 1.0:
        raise ValidityError(f"q = {pair.q:.6f} >= 1 at {point}", condition="q < 1")
    one_minus_q = 1.0 - pair.q
    dq = point.c * kappa / (one_minus_q * pair.chi * sqrt_chi_tilde(point))
    dchi = kappa / (one_minus_q * math.sqrt(pair.chi))
    return dq, dchi


def tilde_errors(
    point: SpectralPoint, pair: Optional[ProlateEigenpair] = None
) -> Tuple[float, float, float]:
    """(|sqrt q - sqrt q~|, its bound c / (2 sqrt(chi_n) sqrt(chi~)), |sqrt chi_n - sqrt chi~|).

    For n >= 2c / pi the last one is at most 1/2.
    """
    if point.n < 2.0 * point.c / math.pi:
        raise ValidityError(f"tilde error guarantees need n >= 2c/pi at {point}", condition="n >= 2c/pi")
    pair = pair or prolate_solve(point)
    root_chi_tilde = sqrt_chi_tilde(point)
    dq = abs(pair.sqrt_q - sqrt_q_tilde(point))
    dq_bound = point.c / (2.0 * math.sqrt(pair.chi) * root_chi_tilde)
    return dq, dq_bound, abs(math.sqrt(pair.chi) - root_chi_tilde)


def kappa_proxy_gap(point: SpectralPoint, chi: float) -> Tuple[float, float]:
    """|(1 - q) sqrt(chi_n) - (1 - q~) sqrt(chi~)| and its bound 3/2 - q~/2."""
    observed = (1.0 - point.c ** 2 / chi) * math.sqrt(chi)
    gap = abs(observed - kappa_proxy(point))
    return gap, 1.5 - 0.5 * q_tilde(point)


def j_l_comparison(n: int, c: float) -> Tuple[float, float, float]:
    """Lower bound, J_{n+1/2}(c) and upper bound from comparing J_{n+1} and J_n."""
    if not 0.0 < c <= 0.5 * math.pi * n:
        raise DomainError(f"comparison needs 0 < c <= pi n / 2, got n={n}, c={c}")
    shift = math.pi ** 3 / 16.0
    lower = j_l(n + 1.0, c) - (math.pi ** 2 / 8.0) * math.log(math.pi * (n + 1) / (2.0 * c)) - shift
    middle = j_l(n + 0.5, c)
    # the J_n side carries + (pi^2/8) ln(.), mirroring the J_{n+1} side
    upper = j_l(float(n), c) + (math.pi ** 2 / 8.0) * math.log(math.pi * (n + 0.5) / (2.0 * c)) + shift
    return lower, middle, upper


def small_c_psi1_deviation(n: int, tau: float, pair: Optional[ProlateEigenpair] = None) -> Tuple[float, float]:
    """| |psi_{n,tau}(1)| - sqrt(n + 1/2) | and its bound tau^2 / sqrt(3 (n + 1/2)), for tau <= 1."""
    if not 0.0 < tau <= 1.0:
        raise DomainError(f"small-bandwidth bound needs 0 < tau <= 1, got {tau}")
    pair = pair or prolate_solve(SpectralPoint(n=n, c=tau))
    deviation = abs(abs(pair.psi_at_1) - math.sqrt(n + 0.5))
    return deviation, tau ** 2 / math.sqrt(3.0 * (n + 0.5))


def exponential_decay_margin(n: int, c: float) -> float:
    """2 ln(4n / (e c)) - pi^2 c^2 / (4 n^2); positive once n > 1.35 c."""
    if n < 1 or not c > 0.0:
        raise DomainError(f"decay margin needs n >= 1 and c > 0, got n={n}, c={c}")
    return 2.0 * math.log(4.0 * n / (math.e * c)) - 0.25 * math.pi ** 2 * c ** 2 / n ** 2


def approx_bundle(point: SpectralPoint) -> ApproxBundle:
    """Every closed-form approximant at one point; q~-based fields stay empty when invalid."""
    widom = lambda_widom(point)
    if not point.q_valid:
        logger.debug(f"{point} outside the approximation domain; only the Widom form applies")
        return ApproxBundle(point=point, q_valid=False, log_lambda_widom=widom)

    s = sqrt_q_tilde(point)
    tilde = lambda_tilde(point)
    hat = LOG_TWO + tilde
    return ApproxBundle(
        point=point,
        q_valid=True,
        sqrt_q_tilde=s,
        chi_tilde=(point.c / s) ** 2,
        psi1_sq_estimate=psi1_sq_estimate(point, s) if s < 1.0 else None,
        log_lambda_tilde=tilde,
        log_lambda_hat=hat,
        log_lambda_widom=widom,
        log_mu_hat=mu_abs_from_loglambda(point.c, hat),
        kappa_proxy=(1.0 - s) * (1.0 + s) * point.c / s,
    )
