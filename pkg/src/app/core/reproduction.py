"""Reproduction of the published tables and figure data, plus one-shot queries and sweeps."""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence

from ..adapters.storage import LocalStorageAdapter, ReferenceTable
from ..shared.errors import ProlateError
from ..shared.logging import logger, run_logger
from ..shared.models import (
    LambdaMethod,
    QueryRecord,
    ReproReport,
    ReproRow,
    SpectralPoint,
    TableId,
)
from .config import settings
from .prolate_oracle import lambda_best, lambda_series, log_lambda_integral, mu_ratio, nystrom_lambda, prolate_solve
from .spectral_approx import (
    approx_bundle,
    kappa_condition,
    kappa_proxy,
    lambda_hat,
    mu_abs_from_loglambda,
    observed_kappa_delta,
    q_tilde,
    sqrt_q_tilde,
)

# Envelope on |ln(lambda^ / lambda)| checked by figure 2
ENVELOPE = math.log(2.0) + 0.5
ENVELOPE_MIN_LOG_LAMBDA = math.log(1e-60)


def _deviation(computed: Optional[float], reference: Optional[float], tolerance: Dict[str, Any]):
    """(deviation, within tolerance) for one column."""
    if computed is None or reference is None:
        return None, True
    diff = abs(computed - reference)
    if tolerance.get("kind") == "relative":
        diff = diff / abs(reference) if reference != 0.0 else diff
    if tolerance.get("kind") == "report":
        return diff, True
    return diff, diff <= float(tolerance["value"])


def _compare(
    label: str,
    inputs: Dict[str, float],
    computed: Dict[str, Optional[float]],
    reference: Dict[str, Optional[float]],
    table: ReferenceTable,
    ref: Optional[Dict[str, Any]] = None,
) -> ReproRow:
    deviations: Dict[str, Optional[float]] = {}
    failed: List[str] = []
    for column, ref_value in reference.items():
        dev, ok = _deviation(computed.get(column), ref_value, table.tolerance(column, ref))
        deviations[column] = dev
        if not ok:
            failed.append(column)
    return ReproRow(
        label=label,
        inputs=inputs,
        computed=computed,
        reference=reference,
        deviations=deviations,
        passed=not failed,
        reason=f"outside tolerance: {', '.join(failed)}" if failed else None,
    )


def _failed_row(label: str, inputs: Dict[str, float], exc: Exception) -> ReproRow:
    logger.warning(f"row {label} failed: {exc}")
    return ReproRow(label=label, inputs=inputs, passed=False, reason=f"{type(exc).__name__}: {exc}")


def _map_rows(func: Callable[[Any], ReproRow], items: Sequence[Any]) -> List[ReproRow]:
    """Evaluate rows concurrently, keeping the input order."""
    if settings.max_workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def _table1(table: ReferenceTable, with_oracle: bool) -> List[ReproRow]:
    def row(ref: Dict[str, Any]) -> ReproRow:
        c = ref["c_over_pi"] * math.pi
        n_c = int(math.floor(2.0 * c / math.pi + 1e-9))
        label = f"c={ref['c_over_pi']}pi"
        inputs = {"c": c, "n_c": float(n_c)}
        try:
            kappa_c, delta_c = observed_kappa_delta(c, n_c)
            max_delta = max(observed_kappa_delta(c, n)[1] for n in range(n_c, n_c + 41))
        except ProlateError as exc:
            return _failed_row(label, inputs, exc)
        computed = {"kappa_c": kappa_c, "delta_kappa_c": delta_c, "max_delta": max_delta}
        reference = {k: float(ref[k]) for k in ("kappa_c", "delta_kappa_c", "max_delta")}
        return _compare(label, inputs, computed, reference, table, ref)

    return _map_rows(row, table.rows)


def _table2(table: ReferenceTable, with_oracle: bool) -> List[ReproRow]:
    def row(ref: Dict[str, Any]) -> ReproRow:
        point = SpectralPoint(n=int(ref["n"]), c=float(ref["c"]))
        label = f"c={ref['c']},n={ref['n']}"
        inputs = {"c": point.c, "n": float(point.n)}
        try:
            computed = {
                "sqrt_q_tilde": sqrt_q_tilde(point),
                "sqrt_q": prolate_solve(point).sqrt_q if with_oracle else None,
            }
        except ProlateError as exc:
            return _failed_row(label, inputs, exc)
        reference = {"sqrt_q_tilde": float(ref["sqrt_q_tilde"]), "sqrt_q": float(ref["sqrt_q"])}
        return _compare(label, inputs, computed, reference, table, ref)

    return _map_rows(row, table.rows)


def _table3(table: ReferenceTable, with_oracle: bool) -> List[ReproRow]:
    oracle_max_c = float(table.extras.get("oracle_max_c", 1000))

    def row(ref: Dict[str, Any]) -> ReproRow:
        point = SpectralPoint(n=int(ref["n"]), c=float(ref["c"]))
        label = f"c={ref['c']:g},n={ref['n']}"
        inputs = {"c": point.c, "n": float(point.n)}
        try:
            log_mu_hat = mu_abs_from_loglambda(point.c, lambda_hat(point))
            computed: Dict[str, Optional[float]] = {
                "q_tilde": q_tilde(point),
                "kappa_proxy": kappa_proxy(point),
                "mu_hat": math.exp(log_mu_hat),
                "mu": None,
            }
            if with_oracle and point.c <= oracle_max_c:
                log_mu = mu_abs_from_loglambda(point.c, log_lambda_integral(point).log_value)
                computed["mu"] = math.exp(log_mu)
        except ProlateError as exc:
            return _failed_row(label, inputs, exc)
        reference = {k: float(ref[k]) for k in ("q_tilde", "kappa_proxy", "mu_hat", "mu")}
        return _compare(label, inputs, computed, reference, table, ref)

    return _map_rows(row, table.rows)


_TABLES = {
    TableId.TABLE1: _table1,
    TableId.TABLE2: _table2,
    TableId.TABLE3: _table3,
}


def run_table(
    table_id: TableId,
    with_oracle: bool = True,
    tolerances: Optional[Dict[str, float]] = None,
    storage: Optional[LocalStorageAdapter] = None,
) -> ReproReport:
    """Recompute a published table and compare it column by column.

    ``tolerances`` overrides the stored per-column tolerance values.
    """
    if table_id not in _TABLES:
        raise ValueError(f"{table_id.value} is not a table")
    storage = storage or LocalStorageAdapter()
    table = storage.load_reference_table(table_id)
    for column, value in (tolerances or {}).items():
        table.tolerances[column] = {**table.tolerance(column), "value": value}

    log = run_logger("table", table_id.value)
    log.info(f"reproducing {len(table.rows)} rows")
    start = time.perf_counter()
    rows = _TABLES[table_id](table, with_oracle)
    elapsed = time.perf_counter() - start

    columns = ["label", *rows[0].inputs.keys()] if rows else ["label"]
    for column in table.columns:
        columns += [column, f"ref_{column}", f"dev_{column}"]
    columns += ["passed", "reason"]

    report = ReproReport(
        table_id=table_id,
        rows=rows,
        tolerances={c: float(table.tolerance(c)["value"]) for c in table.columns},
        columns=columns,
        elapsed_seconds=elapsed,
    )
    log.info(f"{'pass' if report.passed else 'FAIL'} in {elapsed:.1f}s")
    return report


def default_figure_range(c: float) -> range:
    return range(0, int(math.ceil(2.0 * c / math.pi - 1e-9)) + 41)


def run_figure(figure_id: TableId, c: float, ns: Optional[Sequence[int]] = None) -> ReproReport:
    """Per-n ln lambda (oracle), ln lambda^, ln lambda^W and ln(lambda^ / lambda) at one bandwidth.

    figure2 rows fail when |ln(lambda^ / lambda)| exceeds the envelope
    while lambda >= 1e-60 and the approximation applies.
    """
    if figure_id not in (TableId.FIGURE1, TableId.FIGURE2):
        raise ValueError(f"{figure_id.value} is not a figure")
    ns = list(ns if ns is not None else default_figure_range(c))
    log = run_logger("figure", f"{figure_id.value} c={c:g}")
    log.info(f"n={ns[0]}..{ns[-1]}")
    start = time.perf_counter()

    oracle = lambda_series(c, ns)
    rows: List[ReproRow] = []
    for n, best in zip(ns, oracle):
        point = SpectralPoint(n=n, c=c)
        bundle = approx_bundle(point)
        ratio = None
        if bundle.q_valid and bundle.log_lambda_hat is not None:
            ratio = bundle.log_lambda_hat - best.log_value
        computed = {
            "ln_lambda": best.log_value,
            "ln_lambda_hat": bundle.log_lambda_hat,
            "ln_lambda_widom": bundle.log_lambda_widom,
            "ln_ratio": ratio,
            "q_valid": float(bundle.q_valid),
        }
        passed, reason = True, None
        if not bundle.q_valid:
            reason = "approximation undefined: 2c/(pi(n+1/2)) > 1"
        elif (
            figure_id == TableId.FIGURE2
            and best.log_value >= ENVELOPE_MIN_LOG_LAMBDA
            and abs(ratio) > ENVELOPE
        ):
            passed, reason = False, f"|ln ratio| = {abs(ratio):.3f} exceeds {ENVELOPE:.3f}"
        rows.append(ReproRow(
            label=f"n={n}",
            inputs={"c": c, "n": float(n)},
            method=best.method,
            computed=computed,
            passed=passed,
            reason=reason,
        ))

    columns = ["label", "c", "n", "ln_lambda", "method"]
    if figure_id == TableId.FIGURE1:
        columns += ["ln_lambda_hat", "ln_lambda_widom"]
    else:
        columns += ["ln_ratio"]
    columns += ["q_valid", "passed", "reason"]

    return ReproReport(
        table_id=figure_id,
        rows=rows,
        tolerances={"ln_ratio": ENVELOPE} if figure_id == TableId.FIGURE2 else {},
        columns=columns,
        elapsed_seconds=time.perf_counter() - start,
    )


def query(n: int, c: float, tier: Optional[LambdaMethod] = None) -> QueryRecord:
    """Approximations and oracle values at one (n, c); failures land in ``errors``."""
    point = SpectralPoint(n=n, c=c)
    bundle = approx_bundle(point)
    record = QueryRecord(point=point, bundle=bundle)
    record.flags["q_tilde_valid"] = bundle.q_valid

    try:
        pair = prolate_solve(point)
        record.chi = pair.chi
        record.sqrt_q = pair.sqrt_q
        record.psi1_sq = pair.psi1_sq
        record.flags["q_below_one"] = pair.q < 1.0
        if pair.q < 1.0:
            record.kappa_observed = pair.kappa_observed
    except ProlateError as exc:
        record.errors["galerkin"] = str(exc)

    if n >= 3:
        try:
            record.flags["kappa_condition"] = kappa_condition(point, settings.kappa_default).satisfied
        except ProlateError as exc:
            record.errors["kappa_condition"] = str(exc)

    try:
        if tier is None:
            best = lambda_best(point)
        elif tier == LambdaMethod.NYSTROM:
            best = nystrom_lambda(c, n + 1)[n]
        elif tier == LambdaMethod.RATIO:
            best = mu_ratio(prolate_solve(point))
        else:
            best = log_lambda_integral(point)
        record.log_lambda = best.log_value
        record.lambda_method = best.method
        record.log_mu = mu_abs_from_loglambda(c, best.log_value)
        if bundle.log_mu_hat is not None:
            record.mu_hat_rel_deviation = abs(math.expm1(bundle.log_mu_hat - record.log_mu))
    except ProlateError as exc:
        record.errors["lambda"] = str(exc)

    return record


def sweep(c: float, n_from: int, n_to: int) -> ReproReport:
    """Per-n oracle and approximation values on n_from..n_to at one bandwidth."""
    if n_to < n_from or n_from < 0:
        raise ValueError(f"empty or negative range {n_from}..{n_to}")
    start = time.perf_counter()
    ns = list(range(n_from, n_to + 1))

    def row(n: int) -> ReproRow:
        record = query(n, c)
        bundle = record.bundle
        computed = {
            "chi": record.chi,
            "sqrt_q": record.sqrt_q,
            "psi1_sq": record.psi1_sq,
            "kappa_observed": record.kappa_observed,
            "ln_lambda": record.log_lambda,
            "sqrt_q_tilde": bundle.sqrt_q_tilde,
            "kappa_proxy": bundle.kappa_proxy,
            "ln_lambda_hat": bundle.log_lambda_hat,
            "ln_lambda_widom": bundle.log_lambda_widom,
            "kappa_condition": (
                float(record.flags["kappa_condition"]) if "kappa_condition" in record.flags else None
            ),
        }
        return ReproRow(
            label=f"n={n}",
            inputs={"c": c, "n": float(n)},
            method=record.lambda_method,
            computed=computed,
            passed=not record.errors,
            reason="; ".join(f"{k}: {v}" for k, v in record.errors.items()) or None,
        )

    rows = _map_rows(row, ns)
    columns = ["label", "c", "n", "method", "chi", "sqrt_q", "psi1_sq", "kappa_observed",
               "ln_lambda", "sqrt_q_tilde", "kappa_proxy", "ln_lambda_hat", "ln_lambda_widom",
               "kappa_condition", "passed", "reason"]
    return ReproReport(
        table_id=TableId.SWEEP,
        rows=rows,
        columns=columns,
        elapsed_seconds=time.perf_counter() - start,
    )
