"""High-accuracy reference values for chi_n(c), psi_n(1) and lambda_n(c).

Three tiers produce lambda_n(c):

* ``nystrom``: eigenvalues of the symmetrized Gauss-Legendre discretization
  of the sinc kernel, good down to about 1e-12.
* ``ratio``: the eigenrelation evaluated at x = 0 with Legendre coefficients
  from the Galerkin solve, good while the leading coefficient stays above
  the ratio floor.
* ``integral``: log lambda from d(log lambda)/dc = 2 psi_n(1)^2 / c,
  integrated from c up to the point where lambda_n = 1/2.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from ..shared.errors import BelowFloorError, ConvergenceError, DomainError
from ..shared.logging import logger
from ..shared.models import LambdaMethod, LogLambda, Parity, ProlateEigenpair, SpectralPoint
from .config import settings
from .eigen_linalg import (
    SymDenseMatrix,
    SymTridiagonal,
    dense_sym_eigen,
    gauss_legendre_rule,
    legendre_coupling,
    normalized_legendre_table,
    tridiag_eigen,
)

LOG_HALF = math.log(0.5)
_ONE_BELOW = float(np.nextafter(1.0, 0.0))


def default_truncation(point: SpectralPoint) -> int:
    """Number of Legendre degrees kept before any doubling."""
    return max(2 * point.n + 30, int(math.ceil(2.0 * point.c)) + 30)


def galerkin_matrix(c: float, parity: Parity, N: int) -> SymTridiagonal:
    """Matrix of L_c on the normalized Legendre polynomials of one parity with degree < N."""
    if N < 4:
        raise DomainError(f"truncation must be at least 4, got {N}")
    if c < 0.0:
        raise DomainError(f"bandwidth must be non-negative, got {c}")
    start = 0 if parity == Parity.EVEN else 1
    k = np.arange(start, N, 2, dtype=float)
    c2 = c * c
    a_k = legendre_coupling(k)
    a_k1 = legendre_coupling(k + 1.0)
    a_k2 = legendre_coupling(k[:-1] + 2.0)
    diag = k * (k + 1.0) + c2 * (a_k1 ** 2 + a_k ** 2)
    offdiag = c2 * a_k1[:-1] * a_k2
    return SymTridiagonal(diag=diag, offdiag=offdiag)


def galerkin_quadrature_matrix(c: float, parity: Parity, N: int) -> np.ndarray:
    """Dense galerkin_matrix with the x^2 inner products taken by Gauss-Legendre quadrature."""
    if N < 4:
        raise DomainError(f"truncation must be at least 4, got {N}")
    degrees = np.arange(0 if parity == Parity.EVEN else 1, N, 2)
    # exact for the degree 2N integrands
    rule = gauss_legendre_rule(N + 2)
    table = normalized_legendre_table(N - 1, rule.nodes)[degrees]
    moments = (table * (rule.weights * rule.nodes ** 2)) @ table.T
    return np.diag(degrees * (degrees + 1.0)) + c * c * moments


def prolate_solve(point: SpectralPoint, truncation: Optional[int] = None) -> ProlateEigenpair:
    """chi_n(c) and the Legendre coefficients of psi_n, normalized to unit L2 norm on [-1, 1].

    The truncation doubles until the last retained coefficient is below
    settings.galerkin_tail_tol relative to the largest.
    """
    n, c = point.n, point.c
    size = truncation or default_truncation(point)
    if size < 4:
        raise DomainError(f"truncation must be at least 4, got {size}")
    j = n // 2
    chi_bounds = (n * (n + 1.0), n * (n + 1.0) + c * c)

    for attempt in range(settings.galerkin_max_doublings + 1):
        if size // 2 <= j:
            size = 2 * (j + 2) + 2
        T = galerkin_matrix(c, point.parity, size)
        result = tridiag_eigen(T, want_vectors=True, index_range=range(j, j + 1), bounds=chi_bounds)
        v = result.vectors[:, 0]
        tail = abs(v[-1]) / np.max(np.abs(v))
        if tail <= settings.galerkin_tail_tol:
            break
        logger.debug(f"Galerkin tail {tail:.1e} at {point} with N={size}; doubling")
        size *= 2
    else:
        raise ConvergenceError(
            f"Galerkin coefficients did not decay at {point}",
            diagnostics={"truncation": size // 2, "tail": tail},
        )

    chi = float(result.values[0])
    degrees = np.arange(0 if point.parity == Parity.EVEN else 1, size, 2)
    beta = np.zeros(size)
    beta[degrees] = v

    psi_at_1 = float(np.dot(beta, np.sqrt(np.arange(size) + 0.5)))
    psi_at_0: Optional[float] = None
    dpsi_at_0: Optional[float] = None
    if point.parity == Parity.EVEN:
        values_at_0 = normalized_legendre_table(size - 1, 0.0)[:, 0]
        psi_at_0 = float(np.dot(beta, values_at_0))
        sign = 1.0 if psi_at_0 > 0.0 else -1.0
    else:
        # P_k'(0) = k P_{k-1}(0)
        raw = normalized_legendre_table(size - 1, 0.0)[:, 0] / np.sqrt(np.arange(size) + 0.5)
        k = np.arange(size)
        slopes = np.zeros(size)
        slopes[1:] = k[1:] * raw[:-1] * np.sqrt(k[1:] + 0.5)
        dpsi_at_0 = float(np.dot(beta, slopes))
        sign = 1.0 if dpsi_at_0 > 0.0 else -1.0

    return ProlateEigenpair(
        point=point,
        chi=chi,
        beta=sign * beta,
        psi_at_1=sign * psi_at_1,
        psi_at_0=None if psi_at_0 is None else sign * psi_at_0,
        dpsi_at_0=None if dpsi_at_0 is None else sign * dpsi_at_0,
        truncation=size,
    )


def nystrom_order(c: float, count: int) -> int:
    return max(int(math.ceil(1.5 * c)) + 60, 2 * count + 40)


def nystrom_spectrum(c: float, m: int) -> np.ndarray:
    """All m eigenvalues (descending) of the symmetrized Nystrom matrix of Q_c."""
    if not c > 0.0:
        raise DomainError(f"bandwidth must be positive, got {c}")
    if m < 1 or m > settings.nystrom_max_order:
        raise DomainError(f"Nystrom order must lie in [1, {settings.nystrom_max_order}], got {m}")
    rule = gauss_legendre_rule(m)
    x, w = rule.nodes, rule.weights
    # sin(c d) / (pi d) = (c/pi) sinc(c d / pi), with value c/pi on the diagonal
    kernel = (c / math.pi) * np.sinc((c / math.pi) * (x[:, None] - x[None, :]))
    root_w = np.sqrt(w)
    A = root_w[:, None] * kernel * root_w[None, :]
    A = 0.5 * (A + A.T)
    return dense_sym_eigen(SymDenseMatrix(A), want_vectors=False).values


def _nystrom_log(value: float, n: int, c: float) -> LogLambda:
    if value < settings.nystrom_floor:
        raise BelowFloorError("nystrom", float(value), settings.nystrom_floor, index=n)
    error = 1e-14 * (2.0 * c / math.pi) / value
    return LogLambda(
        log_value=math.log(min(float(value), _ONE_BELOW)),
        method=LambdaMethod.NYSTROM,
        error_estimate=error,
        point=SpectralPoint(n=n, c=c),
    )


def nystrom_lambda(c: float, count: int, m: Optional[int] = None) -> List[LogLambda]:
    """The largest ``count`` eigenvalues lambda_0 > lambda_1 > ... of Q_c.

    Raises BelowFloorError when one of them is below settings.nystrom_floor.
    """
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    m = m or nystrom_order(c, count)
    if m < count + 10:
        raise DomainError(f"Nystrom order {m} is too small for {count} eigenvalues (need at least {count + 10})")
    values = nystrom_spectrum(c, m)
    return [_nystrom_log(values[i], i, c) for i in range(count)]


def mu_ratio(pair: ProlateEigenpair) -> LogLambda:
    """log lambda_n from the eigenrelation at x = 0.

    Even n: |mu_n| = sqrt(2) |beta_0| / |psi_n(0)|.
    Odd n:  |mu_n| = c sqrt(2/3) |beta_1| / |psi_n'(0)|.
    """
    point = pair.point
    c = point.c
    if point.parity == Parity.EVEN:
        lead, at_zero = abs(pair.beta[0]), abs(pair.psi_at_0 or 0.0)
        mu = math.sqrt(2.0) * lead / at_zero if at_zero > 0.0 else 0.0
    else:
        lead, at_zero = abs(pair.beta[1]), abs(pair.dpsi_at_0 or 0.0)
        mu = c * math.sqrt(2.0 / 3.0) * lead / at_zero if at_zero > 0.0 else 0.0
    if lead < settings.ratio_floor or mu == 0.0:
        raise BelowFloorError("ratio", float(lead), settings.ratio_floor, index=point.n)

    log_lambda = 2.0 * math.log(mu) + math.log(c / (2.0 * math.pi))
    return LogLambda(
        log_value=min(log_lambda, math.log(_ONE_BELOW)),
        method=LambdaMethod.RATIO,
        error_estimate=2e-12,
        point=point,
    )


def _nystrom_single(n: int, c: float) -> float:
    return float(nystrom_spectrum(c, nystrom_order(c, n + 1))[n])


@lru_cache(maxsize=256)
def c_star(n: int) -> float:
    """The bandwidth at which lambda_n(c) = 1/2, found by Brent's method on the Nystrom tier.

    The root lies in [pi (n-1)/2, pi (n+1)/2].
    """
    if n < 1:
        raise DomainError(f"c_star requires n >= 1, got {n}")
    lo = max(0.5 * math.pi * (n - 1), 1e-3)
    hi = 0.5 * math.pi * (n + 1)

    def f(c: float) -> float:
        return _nystrom_single(n, c) - 0.5

    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0.0:
        raise ConvergenceError(
            f"lambda_{n} - 1/2 has no sign change on [{lo:.6f}, {hi:.6f}]",
            diagnostics={"f_lo": f_lo, "f_hi": f_hi},
        )
    root = brentq(f, lo, hi, xtol=1e-13, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    logger.debug(f"c*_{n} = {root:.15f}")
    return float(root)


def _psi1_sq_over_tau(n: int, taus: Sequence[float]) -> np.ndarray:
    def one(tau: float) -> float:
        pair = prolate_solve(SpectralPoint(n=n, c=tau))
        return pair.psi1_sq / tau

    if settings.max_workers > 1 and len(taus) > 1:
        with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
            return np.array(list(pool.map(one, taus)))
    return np.array([one(t) for t in taus])


def _panel(n: int, a: float, b: float) -> float:
    rule = gauss_legendre_rule(32)
    x, w = rule.mapped(a, b)
    return float(np.dot(w, _psi1_sq_over_tau(n, list(x))))


def log_lambda_integral(point: SpectralPoint) -> LogLambda:
    """log lambda_n(c) = log(1/2) - 2 integral_c^{c*} psi_{n,tau}(1)^2 / tau dtau.

    Adaptive 32-point Gauss-Legendre panels; a panel is accepted once its
    halves change the log value by less than its share of settings.integral_log_tol.
    """
    n, c = point.n, point.c
    if n < 1:
        raise DomainError("the integral tier needs n >= 1; lambda_0 is never small")
    upper = c_star(n)
    if c > upper:
        raise DomainError(f"integral tier requires c <= c*_{n} = {upper:.6f}, got {c}")
    if c == upper:
        return LogLambda(log_value=LOG_HALF, method=LambdaMethod.INTEGRAL, point=point)

    length = upper - c
    tol = 0.5 * settings.integral_log_tol
    pending: List[Tuple[float, float, float]] = [(c, upper, _panel(n, c, upper))]
    total = 0.0
    error = 0.0
    panels = 0
    while pending:
        a, b, whole = pending.pop()
        mid = 0.5 * (a + b)
        left, right = _panel(n, a, mid), _panel(n, mid, b)
        change = abs(left + right - whole)
        panels += 1
        if change <= tol * (b - a) / length or panels >= settings.integral_max_panels:
            total += left + right
            error += change
        else:
            pending.append((a, mid, left))
            pending.append((mid, b, right))
    if panels >= settings.integral_max_panels and error > tol:
        raise ConvergenceError(
            f"log-domain integral did not converge at {point}",
            diagnostics={"panels": panels, "error": error},
        )

    log_value = LOG_HALF - 2.0 * total
    logger.debug(f"integral tier at {point}: log lambda = {log_value:.12f} over {panels} panels")
    return LogLambda(
        log_value=log_value,
        method=LambdaMethod.INTEGRAL,
        error_estimate=2.0 * error,
        point=point,
    )


def _predicted_log_lambda(point: SpectralPoint) -> float:
    from .spectral_approx import lambda_hat

    if not point.q_valid:
        return 0.0
    return lambda_hat(point)


def _tier_order(predicted: float) -> List[LambdaMethod]:
    tiers = [LambdaMethod.NYSTROM, LambdaMethod.RATIO, LambdaMethod.INTEGRAL]
    if predicted >= math.log(settings.tier_nystrom_min):
        return tiers
    if predicted >= math.log(settings.tier_ratio_min):
        return tiers[1:]
    return tiers[2:]


def _run_tier(method: LambdaMethod, point: SpectralPoint) -> LogLambda:
    if method == LambdaMethod.NYSTROM:
        return _nystrom_log(_nystrom_single(point.n, point.c), point.n, point.c)
    if method == LambdaMethod.RATIO:
        return mu_ratio(prolate_solve(point))
    return log_lambda_integral(point)


def lambda_best(point: SpectralPoint) -> LogLambda:
    """log lambda_n(c) from the most accurate tier for the predicted magnitude.

    A tier that reports its floor hands over to the next one. Near a tier
    boundary both tiers run and their disagreement becomes the error estimate.
    """
    predicted = _predicted_log_lambda(point)
    order = _tier_order(predicted)

    best: Optional[LogLambda] = None
    for position, method in enumerate(order):
        try:
            best = _run_tier(method, point)
        except BelowFloorError as exc:
            logger.warning(f"{exc}; falling back from {method.value} at {point}")
            continue
        rest = order[position + 1:]
        near_boundary = any(
            abs(predicted - math.log(limit)) < math.log(100.0)
            for limit in (settings.tier_nystrom_min, settings.tier_ratio_min)
        )
        if rest and near_boundary and point.n >= 1:
            try:
                other = _run_tier(rest[0], point)
                gap = abs(other.log_value - best.log_value)
                best = best.model_copy(update={"error_estimate": max(best.error_estimate, gap)})
            except (BelowFloorError, DomainError) as exc:
                logger.debug(f"overlap check skipped at {point}: {exc}")
        return best

    raise BelowFloorError("integral", math.exp(predicted), 0.0, index=point.n)


def lambda_series(c: float, ns: Iterable[int]) -> List[LogLambda]:
    """lambda_best for many n at one c, sharing a single Nystrom solve."""
    ns = list(ns)
    points = [SpectralPoint(n=n, c=c) for n in ns]
    predictions = [_predicted_log_lambda(p) for p in points]
    use_nystrom = [
        n for n, pred in zip(ns, predictions) if pred >= math.log(settings.tier_nystrom_min)
    ]

    shared = {}
    if use_nystrom:
        count = max(use_nystrom) + 1
        values = nystrom_spectrum(c, nystrom_order(c, count))
        for n in use_nystrom:
            if values[n] >= settings.nystrom_floor:
                shared[n] = _nystrom_log(values[n], n, c)

    return [shared[p.n] if p.n in shared else lambda_best(p) for p in points]
