"""Pydantic models for prolate spectrum computations."""

import math
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator


class Parity(str, Enum):
    """Parity class of an eigenfunction index."""
    EVEN = "even"
    ODD = "odd"


class LambdaMethod(str, Enum):
    """How an eigenvalue of Q_c was obtained."""
    NYSTROM = "nystrom"
    RATIO = "ratio"
    INTEGRAL = "integral"


class TableId(str, Enum):
    """Reproducible artefacts."""
    TABLE1 = "table1"
    TABLE2 = "table2"
    TABLE3 = "table3"
    FIGURE1 = "figure1"
    FIGURE2 = "figure2"
    SWEEP = "sweep"


class SpectralPoint(BaseModel):
    """The pair (n, c) indexing one eigenvalue problem."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=0)
    c: float = Field(gt=0.0)

    @property
    def parity(self) -> Parity:
        return Parity.EVEN if self.n % 2 == 0 else Parity.ODD

    @property
    def n_half(self) -> float:
        return self.n + 0.5

    @property
    def phi_argument(self) -> float:
        """2c / (pi (n + 1/2)); the approximations need it to be at most 1."""
        return 2.0 * self.c / (math.pi * self.n_half)

    @property
    def q_valid(self) -> bool:
        return self.phi_argument <= 1.0

    def __str__(self) -> str:
        return f"(n={self.n}, c={self.c:g})"


class JValue(BaseModel):
    """Value of the decay integral J(x)."""
    x: float = Field(gt=0.0)
    value: float = Field(ge=0.0)
    quadrature_error_estimate: float = Field(ge=0.0)


class ProlateEigenpair(BaseModel):
    """Eigenvalue of L_c with the Legendre coefficients of its eigenfunction."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    point: SpectralPoint
    chi: float
    beta: np.ndarray = Field(exclude=True)  # beta[k] multiplies the normalized P_k
    psi_at_1: float
    psi_at_0: Optional[float] = None
    dpsi_at_0: Optional[float] = None
    truncation: int

    @property
    def sqrt_q(self) -> float:
        return self.point.c / math.sqrt(self.chi)

    @property
    def q(self) -> float:
        return self.point.c ** 2 / self.chi

    @property
    def psi1_sq(self) -> float:
        return self.psi_at_1 ** 2

    @property
    def kappa_observed(self) -> float:
        """(1 - q) sqrt(chi_n)."""
        return (1.0 - self.q) * math.sqrt(self.chi)


class LogLambda(BaseModel):
    """An eigenvalue of Q_c carried as its natural logarithm."""
    log_value: float
    method: LambdaMethod
    error_estimate: float = Field(default=0.0, ge=0.0)
    point: Optional[SpectralPoint] = None

    @field_validator("log_value")
    @classmethod
    def validate_log_value(cls, v: float) -> float:
        """All eigenvalues of Q_c lie in (0, 1)."""
        if not v < 0.0:
            raise ValueError(f"log of an eigenvalue of Q_c must be negative, got {v}")
        return v

    @property
    def value(self) -> float:
        """lambda itself; underflows to 0 below about 1e-308."""
        return math.exp(self.log_value)

    @property
    def log10(self) -> float:
        return self.log_value / math.log(10.0)


class ApproxBundle(BaseModel):
    """Every closed-form approximant at one point."""
    point: SpectralPoint
    q_valid: bool
    sqrt_q_tilde: Optional[float] = None
    chi_tilde: Optional[float] = None
    psi1_sq_estimate: Optional[float] = None
    log_lambda_tilde: Optional[float] = None
    log_lambda_hat: Optional[float] = None
    log_lambda_widom: float
    log_mu_hat: Optional[float] = None
    kappa_proxy: Optional[float] = None  # (1 - q~) sqrt(chi~)


class KappaBound(BaseModel):
    """Bracket for psi_n(1)^2 under the condition (1 - q) sqrt(chi_n) > kappa."""
    kappa: float = Field(ge=0.0)
    epsilon_n: float
    delta_of_kappa: float
    lower: float
    upper: float

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


class KappaCondition(BaseModel):
    """Outcome of the sufficient conditions for (1 - q) sqrt(chi_n) > kappa."""
    satisfied: bool
    branch: Optional[str] = None
    c_n_kappa: float
    crude_lower_bound: Optional[float] = None


class TheoremConstants(BaseModel):
    """The explicit constants delta1, delta2, delta3 for a given kappa."""
    kappa: float
    delta1: float = Field(ge=0.0)
    delta2: float = Field(ge=0.0)
    delta3: float = Field(ge=0.0)


class ErrorBudget(BaseModel):
    """Explicit bound on |E| split into its three contributions."""
    n: int
    c: float
    kappa: float
    tail: float
    psi_remainder: float
    j_comparison: float

    @computed_field
    @property
    def total(self) -> float:
        return self.tail + self.psi_remainder + self.j_comparison


class ReproRow(BaseModel):
    """One row of a reproduced table or figure."""
    label: str
    inputs: Dict[str, float]
    method: Optional[LambdaMethod] = None  # eigenvalue tier, for figure and sweep rows
    computed: Dict[str, Optional[float]] = {}
    reference: Dict[str, Optional[float]] = {}
    deviations: Dict[str, Optional[float]] = {}
    passed: bool = True
    reason: Optional[str] = None


class ReproReport(BaseModel):
    """A reproduced table or figure with its comparison against reference values."""
    table_id: TableId
    rows: List[ReproRow]
    tolerances: Dict[str, float] = {}
    columns: List[str] = []
    elapsed_seconds: float = 0.0

    @computed_field
    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


class SuiteResult(BaseModel):
    """Outcome of one invariant suite."""
    name: str
    checks: int = 0
    failures: List[str] = []
    error: Optional[str] = None
    elapsed_seconds: float = 0.0

    @computed_field
    @property
    def passed(self) -> bool:
        return self.error is None and not self.failures


class ValidationSummary(BaseModel):
    """Pass/fail matrix across suites."""
    suites: List[SuiteResult]

    @computed_field
    @property
    def failing(self) -> int:
        return sum(1 for s in self.suites if not s.passed)


class QueryRecord(BaseModel):
    """One-shot evaluation at a single (n, c)."""
    point: SpectralPoint
    bundle: ApproxBundle
    chi: Optional[float] = None
    sqrt_q: Optional[float] = None
    psi1_sq: Optional[float] = None
    kappa_observed: Optional[float] = None
    log_lambda: Optional[float] = None
    lambda_method: Optional[LambdaMethod] = None
    log_mu: Optional[float] = None
    mu_hat_rel_deviation: Optional[float] = None
    flags: Dict[str, bool] = {}
    errors: Dict[str, str] = {}
