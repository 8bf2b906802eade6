"""Small self-contained linear algebra kernels.

Gauss-Legendre rules, normalized Legendre polynomials, a bisection and
inverse-iteration eigensolver for symmetric tridiagonal matrices and a
cyclic Jacobi solver for dense symmetric matrices.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded

from ..shared.errors import ConvergenceError, DomainError
from ..shared.logging import logger
from .config import settings

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny

# Interior shifts per multisection pass
_MULTISECTION_SHIFTS = 31


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of an m-point rule on [-1, 1]."""
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise DomainError("nodes and weights must be 1-D arrays of equal length")
        if np.any(self.weights <= 0.0):
            raise DomainError("quadrature weights must be positive")

    @property
    def order(self) -> int:
        return int(self.nodes.size)

    def mapped(self, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes and weights transplanted to [a, b]."""
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.nodes, half * self.weights

    def integrate(self, f, a: float = -1.0, b: float = 1.0) -> float:
        x, w = self.mapped(a, b)
        return float(np.dot(w, f(x)))


@dataclass(frozen=True)
class SymTridiagonal:
    """Symmetric tridiagonal matrix stored as its diagonal and off-diagonal."""
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        if self.diag.ndim != 1 or self.offdiag.size != max(self.diag.size - 1, 0):
            raise DomainError(
                f"off-diagonal must have length {self.diag.size - 1}, got {self.offdiag.size}"
            )

    @property
    def order(self) -> int:
        return int(self.diag.size)

    def gershgorin(self) -> Tuple[float, float]:
        radius = np.zeros_like(self.diag)
        radius[:-1] += np.abs(self.offdiag)
        radius[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - radius)), float(np.max(self.diag + radius))

    @property
    def norm(self) -> float:
        """Infinity norm."""
        lo, hi = self.gershgorin()
        return max(abs(lo), abs(hi), _TINY)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out


@dataclass(frozen=True)
class SymDenseMatrix:
    """Dense symmetric matrix; symmetry is checked on construction."""
    entries: np.ndarray

    def __post_init__(self):
        a = self.entries
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {a.shape}")
        scale = max(float(np.max(np.abs(a))) if a.size else 0.0, _TINY)
        if a.size and float(np.max(np.abs(a - a.T))) > 1e-15 * scale:
            raise DomainError("matrix is not symmetric")

    @property
    def order(self) -> int:
        return int(self.entries.shape[0])


@dataclass
class EigenResult:
    """Eigenvalues with optional unit eigenvectors stored as columns."""
    values: np.ndarray
    vectors: Optional[np.ndarray] = None
    method: str = ""
    sweeps: int = 0


@lru_cache(maxsize=64)
def gauss_legendre_rule(m: int) -> QuadratureRule:
    """m-point Gauss-Legendre rule by Newton iteration on the three-term recurrence.

    Nodes are returned in increasing order and exactly symmetric about 0.
    """
    if m < 1:
        raise DomainError(f"rule order must be positive, got {m}")

    # Positive half only; the rule is mirrored afterwards
    half = (m + 1) // 2
    i = np.arange(1, half + 1)
    x = np.cos(np.pi * (i - 0.25) / (m + 0.5))

    for _ in range(100):
        p_prev = np.ones_like(x)
        p = x.copy()
        for j in range(2, m + 1):
            p_prev, p = p, ((2 * j - 1) * x * p - (j - 1) * p_prev) / j
        dp = m * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= 2.0 * _EPS:
            break
    else:
        raise ConvergenceError(f"Gauss-Legendre nodes did not converge for m={m}")

    # Weights from the converged nodes
    p_prev = np.ones_like(x)
    p = x.copy()
    for j in range(2, m + 1):
        p_prev, p = p, ((2 * j - 1) * x * p - (j - 1) * p_prev) / j
    dp = m * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)

    if m % 2 == 1:
        x[-1] = 0.0
        nodes = np.concatenate([-x, x[-2::-1]])
        weights = np.concatenate([w, w[-2::-1]])
    else:
        nodes = np.concatenate([-x, x[::-1]])
        weights = np.concatenate([w, w[::-1]])

    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights)


def legendre_coupling(k) -> np.ndarray:
    """a_k = k / sqrt(4k^2 - 1), the coupling x P_k-bar = a_{k+1} P_{k+1}-bar + a_k P_{k-1}-bar."""
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = k / np.sqrt(4.0 * k * k - 1.0)
    return np.where(k == 0.0, 0.0, a)


def normalized_legendre_table(k_max: int, x) -> np.ndarray:
    """Rows P_0-bar .. P_{k_max}-bar evaluated at the points x."""
    if k_max < 0:
        raise DomainError(f"degree must be non-negative, got {k_max}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    table = np.empty((k_max + 1, x.size))
    table[0] = 1.0
    if k_max >= 1:
        table[1] = x
    for j in range(1, k_max):
        table[j + 1] = ((2 * j + 1) * x * table[j] - j * table[j - 1]) / (j + 1)
    scale = np.sqrt(np.arange(k_max + 1) + 0.5)
    return table * scale[:, None]


def legendre_eval(k: int, x) -> Tuple[np.ndarray, np.ndarray]:
    """Normalized Legendre polynomial P_k-bar and its derivative at x."""
    if k < 0:
        raise DomainError(f"degree must be non-negative, got {k}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1.0):
        raise DomainError("Legendre polynomials are evaluated on [-1, 1] only")

    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    for j in range(k):
        p_prev, p = p, ((2 * j + 1) * x * p - j * p_prev) / (j + 1)

    edge = np.abs(x) == 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = np.where(edge, 0.0, k * (x * p - p_prev) / (x * x - 1.0))
    if np.any(edge):
        # P_k'(+-1) = (+-1)^(k-1) k(k+1)/2
        dp = np.where(edge, np.sign(x) ** (k - 1) * k * (k + 1) / 2.0, dp)

    scale = np.sqrt(k + 0.5)
    return scale * p, scale * dp


def _sturm_counts(diag: np.ndarray, off_sq: np.ndarray, shifts: np.ndarray, pivmin: float) -> np.ndarray:
    """Number of eigenvalues strictly below each shift."""
    q = diag[0] - shifts
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count = (q < 0.0).astype(np.int64)
    for i in range(1, diag.size):
        q = diag[i] - shifts - off_sq[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0.0
    return count


def _bisect(T: SymTridiagonal, indices: np.ndarray, bounds: Optional[Tuple[float, float]]) -> np.ndarray:
    diag, off_sq = T.diag, T.offdiag ** 2
    pivmin = _TINY * max(1.0, float(np.max(off_sq)) if off_sq.size else 1.0)
    glo, ghi = T.gershgorin()
    span = max(ghi - glo, _TINY)
    glo, ghi = glo - 2.0 * _EPS * span - pivmin, ghi + 2.0 * _EPS * span + pivmin

    lo = np.full(indices.size, glo)
    hi = np.full(indices.size, ghi)
    if bounds is not None:
        blo, bhi = max(bounds[0], glo), min(bounds[1], ghi)
        counts = _sturm_counts(diag, off_sq, np.array([blo, bhi]), pivmin)
        ok = (counts[0] <= indices) & (counts[1] >= indices + 1)
        lo = np.where(ok, blo, lo)
        hi = np.where(ok, bhi, hi)

    fractions = np.arange(1, _MULTISECTION_SHIFTS + 1) / (_MULTISECTION_SHIFTS + 1)
    stalled = np.zeros(indices.size, dtype=bool)
    for _ in range(200):
        width = hi - lo
        resolved = stalled | (width <= 4.0 * _EPS * np.maximum(np.abs(lo), np.abs(hi)) + pivmin)
        if np.all(resolved):
            break
        shifts = lo[:, None] + width[:, None] * fractions[None, :]
        counts = _sturm_counts(diag, off_sq, shifts.ravel(), pivmin).reshape(shifts.shape)
        # Last shift with count <= j becomes the new lower end
        below = counts <= indices[:, None]
        n_below = below.sum(axis=1)
        new_lo = np.where(n_below > 0, shifts[np.arange(indices.size), np.maximum(n_below - 1, 0)], lo)
        new_hi = np.where(
            n_below < _MULTISECTION_SHIFTS,
            shifts[np.arange(indices.size), np.minimum(n_below, _MULTISECTION_SHIFTS - 1)],
            hi,
        )
        lo = np.where(resolved, lo, new_lo)
        hi = np.where(resolved, hi, new_hi)
        stalled = (hi - lo) >= width
    else:
        raise ConvergenceError("bisection did not resolve the requested eigenvalues")

    return 0.5 * (lo + hi)


def _refine_tails(T: SymTridiagonal, lam: float, v: np.ndarray, cutoff: float = 1e-3) -> np.ndarray:
    """Recompute the decaying ends of an eigenvector from continued-fraction ratios.

    Inverse iteration fixes small components only to about eps times the
    largest one; the ratios keep them accurate relative to themselves.
    """
    size = v.size
    if size < 3:
        return v
    d = T.diag - lam
    e = T.offdiag
    big = np.abs(v) >= cutoff * np.max(np.abs(v))
    first = int(np.argmax(big))
    last = size - 1 - int(np.argmax(big[::-1]))
    out = v.copy()

    if first > 0:
        ratios = np.empty(first)
        prev = 0.0
        for k in range(first):
            denom = d[k] + (e[k - 1] * prev if k > 0 else 0.0)
            if denom == 0.0:
                return v
            prev = -e[k] / denom
            ratios[k] = prev
        for k in range(first - 1, -1, -1):
            out[k] = ratios[k] * out[k + 1]

    if last < size - 1:
        ratios = np.empty(size)
        nxt = 0.0
        for k in range(size - 1, last, -1):
            denom = d[k] + (e[k] * nxt if k < size - 1 else 0.0)
            if denom == 0.0:
                return v
            nxt = -e[k - 1] / denom
            ratios[k] = nxt
        for k in range(last + 1, size):
            out[k] = ratios[k] * out[k - 1]

    if not np.all(np.isfinite(out)):
        return v
    return out / np.linalg.norm(out)


def _inverse_iteration(T: SymTridiagonal, lam: float, previous: List[Tuple[float, np.ndarray]]) -> np.ndarray:
    size = T.order
    norm = T.norm
    shift = lam + 4.0 * _EPS * norm
    ab = np.zeros((3, size))
    ab[0, 1:] = T.offdiag
    ab[1] = T.diag - shift
    ab[2, :-1] = T.offdiag

    v = np.cos(0.7 * np.arange(size) + 0.3)
    v /= np.linalg.norm(v)
    close = [u for mu, u in previous if abs(mu - lam) <= 1e-3 * norm]
    for _ in range(6):
        for u in close:
            v = v - np.dot(u, v) * u
        x = solve_banded((1, 1), ab, v)
        v = x / np.linalg.norm(x)
        residual = np.linalg.norm(T.matvec(v) - lam * v)
        if residual <= 1e-12 * norm:
            break
    for u in close:
        v = v - np.dot(u, v) * u
    return v / np.linalg.norm(v)


def tridiag_eigen(
    T: SymTridiagonal,
    want_vectors: bool = False,
    index_range: Optional[Iterable[int]] = None,
    bounds: Optional[Tuple[float, float]] = None,
) -> EigenResult:
    """Eigenvalues (ascending) of a symmetric tridiagonal matrix for the given indices.

    bounds is an optional bracket known to contain every requested eigenvalue;
    it is verified with Sturm counts and ignored when wrong.
    """
    size = T.order
    indices = np.arange(size) if index_range is None else np.asarray(list(index_range), dtype=np.int64)
    if indices.size == 0:
        raise DomainError("empty index range")
    if np.any(indices < 0) or np.any(indices >= size):
        raise DomainError(f"index range must lie in [0, {size})")
    indices = np.sort(indices)

    values = _bisect(T, indices, bounds)
    if not want_vectors:
        return EigenResult(values=values, method="bisection")

    vectors = np.empty((size, indices.size))
    done: List[Tuple[float, np.ndarray]] = []
    for col, lam in enumerate(values):
        v = _inverse_iteration(T, float(lam), done)
        v = _refine_tails(T, float(lam), v)
        vectors[:, col] = v
        done.append((float(lam), v))
    return EigenResult(values=values, vectors=vectors, method="bisection")


@lru_cache(maxsize=32)
def _round_robin(order: int) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
    """Disjoint index pairs for each step of a round-robin sweep."""
    players = list(range(order)) + ([-1] if order % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _jacobi(a: np.ndarray, want_vectors: bool, max_sweeps: int = 60) -> EigenResult:
    a = np.array(a, dtype=float)
    size = a.shape[0]
    v = np.eye(size) if want_vectors else None
    scale = max(float(np.linalg.norm(a)), _TINY)
    # Entries below this never matter at working precision
    floor = _EPS * scale / size

    for sweep in range(1, max_sweeps + 1):
        rotated = 0
        for p, q in _round_robin(size):
            if p.size == 0:
                continue
            app, aqq, apq = a[p, p], a[q, q], a[p, q]
            active = np.abs(apq) > np.maximum(size * _EPS * np.sqrt(np.abs(app * aqq)), floor)
            if not np.any(active):
                continue
            p, q = p[active], q[active]
            app, aqq, apq = app[active], aqq[active], apq[active]
            rotated += p.size

            theta = (aqq - app) / (2.0 * apq)
            t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            cs = 1.0 / np.sqrt(t * t + 1.0)
            sn = t * cs

            row_p, row_q = a[p, :].copy(), a[q, :].copy()
            a[p, :] = cs[:, None] * row_p - sn[:, None] * row_q
            a[q, :] = sn[:, None] * row_p + cs[:, None] * row_q
            col_p, col_q = a[:, p].copy(), a[:, q].copy()
            a[:, p] = col_p * cs - col_q * sn
            a[:, q] = col_p * sn + col_q * cs
            a[p, q] = 0.0
            a[q, p] = 0.0
            if v is not None:
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = vp * cs - vq * sn
                v[:, q] = vp * sn + vq * cs

        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if rotated == 0 or off <= 1e-15 * scale:
            values = np.diag(a).copy()
            order = np.argsort(values)[::-1]
            return EigenResult(
                values=values[order],
                vectors=v[:, order] if v is not None else None,
                method="jacobi",
                sweeps=sweep,
            )

    raise ConvergenceError(
        f"Jacobi did not converge in {max_sweeps} sweeps",
        diagnostics={"order": size, "off_norm": off, "norm": scale},
    )


def dense_sym_eigen(
    A: SymDenseMatrix,
    want_vectors: bool = True,
    engine: str = "auto",
) -> EigenResult:
    """Full spectrum of a dense symmetric matrix, eigenvalues in descending order.

    engine is "jacobi", "lapack" or "auto" (Jacobi up to settings.jacobi_max_order).
    """
    if engine not in ("auto", "jacobi", "lapack"):
        raise DomainError(f"unknown engine: {engine}")
    if A.order == 0:
        return EigenResult(values=np.empty(0), vectors=np.empty((0, 0)) if want_vectors else None)

    use_jacobi = engine == "jacobi" or (engine == "auto" and A.order <= settings.jacobi_max_order)
    if use_jacobi:
        return _jacobi(A.entries, want_vectors)

    logger.debug(f"order {A.order} above Jacobi limit, using LAPACK")
    if want_vectors:
        values, vectors = np.linalg.eigh(A.entries)
        return EigenResult(values=values[::-1], vectors=vectors[:, ::-1], method="lapack")
    return EigenResult(values=np.linalg.eigvalsh(A.entries)[::-1], method="lapack")
