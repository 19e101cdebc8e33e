"""
Data models for operators, vectors, coefficient policies and reports.
Using Pydantic for validation and type safety.
"""
from enum import Enum
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


MAX_DIM = 64

# Relative violation margin shared by every inequality report
VIOLATION_RTOL = 1e-9

TARGETS = (
    'thm0',
    'thm1',
    'thm1-paper-literal',
    'lambda',
    'refine',
    'thm3',
    'hh',
    'thm6',
    'cor6',
    'thm5',
    'cor7',
)


def violation_margin(rhs: float) -> float:
    return VIOLATION_RTOL * max(1.0, abs(rhs))


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f'Expected a {ndim}-dimensional array, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise ValueError('Entries must be finite')
    arr.flags.writeable = False
    return arr


class SpectrumInterval(BaseModel):
    """Interval [m, M] enclosing a spectrum"""
    model_config = ConfigDict(frozen=True)

    m: float
    M: float
    positivity_override: bool = False

    @model_validator(mode='after')
    def check_bounds(self):
        if not self.m < self.M:
            raise ValueError(f'Interval requires m < M, got [{self.m}, {self.M}]')
        if self.m <= 0 and not self.positivity_override:
            raise ValueError(f'Interval requires 0 < m, got m={self.m}')
        return self

    @property
    def width(self) -> float:
        return self.M - self.m

    def contains(self, value: float, tol: float = 1e-10) -> bool:
        return self.m - tol <= value <= self.M + tol

    def __str__(self) -> str:
        return f'[{self.m:g}, {self.M:g}]'


class HermitianMatrix(BaseModel):
    """
    Real symmetric n x n operator.
    Construction symmetrizes the input as (v + v^T) / 2.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray

    @field_validator('entries', mode='before')
    @classmethod
    def symmetrize(cls, v):
        arr = np.array(v, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f'Matrix must be square, got shape {arr.shape}')
        if not 1 <= arr.shape[0] <= MAX_DIM:
            raise ValueError(f'Matrix dimension must be in [1, {MAX_DIM}], got {arr.shape[0]}')
        return _frozen_array((arr + arr.T) / 2.0, 2)

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> 'HermitianMatrix':
        return cls(entries=np.diag(np.asarray(values, dtype=float)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries)))

    @cached_property
    def eigen(self) -> 'EigenDecomposition':
        """Cached eigendecomposition"""
        from opjensen.core.spectral import eigh
        return eigh(self)

    def to_rows(self) -> List[List[float]]:
        return self.entries.tolist()


class EigenDecomposition(BaseModel):
    """Eigenvalues ascending, eigenvectors as orthonormal columns"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: Optional[int] = None

    @field_validator('eigenvalues', mode='before')
    @classmethod
    def check_eigenvalues(cls, v):
        arr = _frozen_array(v, 1)
        if np.any(np.diff(arr) < 0):
            raise ValueError('Eigenvalues must be sorted ascending')
        return arr

    @field_validator('eigenvectors', mode='before')
    @classmethod
    def check_eigenvectors(cls, v):
        arr = _frozen_array(v, 2)
        residual = np.max(np.abs(arr.T @ arr - np.eye(arr.shape[1])))
        if residual > 1e-10:
            raise ValueError(f'Eigenvectors not orthonormal (residual {residual:.3e})')
        return arr

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


class UnitVector(BaseModel):
    """Vector x with ||x|| = 1"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    components: np.ndarray

    @field_validator('components', mode='before')
    @classmethod
    def check_norm(cls, v):
        arr = _frozen_array(v, 1)
        if arr.size < 1:
            raise ValueError('Vector must have at least one component')
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f'Vector must have unit norm, got {norm!r}')
        return arr

    @classmethod
    def normalized(cls, values: Sequence[float]) -> 'UnitVector':
        arr = np.asarray(values, dtype=float)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ValueError('Cannot normalize the zero vector')
        return cls(components=arr / norm)

    @property
    def dim(self) -> int:
        return self.components.shape[0]


class VectorFamily(BaseModel):
    """Vectors x_1..x_n with sum of squared norms equal to 1"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    vectors: Tuple[np.ndarray, ...]

    @field_validator('vectors', mode='before')
    @classmethod
    def check_family(cls, v):
        arrays = tuple(_frozen_array(x, 1) for x in v)
        if not arrays:
            raise ValueError('Vector family must be nonempty')
        total = sum(float(x @ x) for x in arrays)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f'Sum of squared norms must be 1, got {total!r}')
        return arrays

    def stacked(self) -> UnitVector:
        return UnitVector.normalized(np.concatenate(self.vectors))


class PolicyMode(str, Enum):
    PAPER_LITERAL = 'paper'
    SAFE = 'safe'
    POINTWISE_LAMBDA = 'lambda'


class CoefficientPolicy(BaseModel):
    """Which Jensen coefficient multiplies <f(A)x, x>"""
    model_config = ConfigDict(frozen=True)

    mode: PolicyMode = PolicyMode.SAFE
    lam: Optional[float] = None

    @model_validator(mode='after')
    def check_lambda(self):
        if self.mode is PolicyMode.POINTWISE_LAMBDA:
            if self.lam is None or not 0.0 < self.lam < 1.0:
                raise ValueError(f'Pointwise policy needs lambda in (0, 1), got {self.lam}')
        elif self.lam is not None:
            raise ValueError(f'Policy {self.mode.value} takes no lambda')
        return self

    @classmethod
    def safe(cls) -> 'CoefficientPolicy':
        return cls(mode=PolicyMode.SAFE)

    @classmethod
    def paper_literal(cls) -> 'CoefficientPolicy':
        return cls(mode=PolicyMode.PAPER_LITERAL)

    @classmethod
    def pointwise(cls, lam: float) -> 'CoefficientPolicy':
        return cls(mode=PolicyMode.POINTWISE_LAMBDA, lam=lam)

    @property
    def label(self) -> str:
        if self.mode is PolicyMode.POINTWISE_LAMBDA:
            return f'lambda:{self.lam!r}'
        return self.mode.value


class ConvexityViolation(BaseModel):
    u: float
    v: float
    lam: float
    lhs: float
    rhs: float


class ConvexityWitness(BaseModel):
    """Outcome of the sampled h-convexity test"""
    holds: bool
    trials: int
    violation: Optional[ConvexityViolation] = None

    @model_validator(mode='after')
    def check_witness(self):
        if not self.holds and self.violation is None:
            raise ValueError('A failed convexity check must carry its violation')
        return self


class Witness(BaseModel):
    """Everything needed to replay a report"""
    n: int
    matrix: List[List[float]]
    x: List[float]
    f: str
    h: str
    seed: Optional[int] = None
    override: bool = False

    @classmethod
    def capture(cls, A: HermitianMatrix, x: UnitVector, f_spec: str, h_spec: str,
                seed: Optional[int] = None, override: bool = False) -> 'Witness':
        return cls(
            n=A.dim,
            matrix=A.to_rows(),
            x=x.components.tolist(),
            f=f_spec,
            h=h_spec,
            seed=seed,
            override=override
        )

    def operator(self) -> HermitianMatrix:
        return HermitianMatrix(entries=self.matrix)

    def vector(self) -> UnitVector:
        return UnitVector(components=self.x)


class InequalityReport(BaseModel):
    """One verified or violated inequality instance"""
    name: str
    lhs: float
    rhs: float
    coefficient: float
    policy: str
    slack: float
    holds: bool
    witness: Witness
    vacuous: bool = Field(default=False, exclude=True)
    agreement_residual: Optional[float] = Field(default=None, exclude=True)

    @model_validator(mode='after')
    def check_consistency(self):
        expected = bool(self.slack >= -violation_margin(self.rhs))
        if self.holds != expected:
            raise ValueError(f'holds={self.holds} contradicts slack={self.slack!r}')
        return self

    @classmethod
    def evaluate(cls, name: str, lhs: float, rhs: float, coefficient: float,
                 policy: str, witness: Witness, **extra) -> 'InequalityReport':
        """Build a report, deriving slack and holds from lhs and rhs"""
        slack = rhs - lhs
        return cls(
            name=name,
            lhs=lhs,
            rhs=rhs,
            coefficient=coefficient,
            policy=policy,
            slack=slack,
            holds=bool(slack >= -violation_margin(rhs)),
            witness=witness,
            **extra
        )

    def to_json(self) -> str:
        return self.model_dump_json()


class RefinementStatus(str, Enum):
    REFINED = 'refined'
    NOT_APPLICABLE = 'not_applicable'
    VIOLATED = 'violated'


class RefinementReport(BaseModel):
    """Tri-state outcome of the refinement check"""
    status: RefinementStatus
    coefficient: float
    report: InequalityReport


class HermiteHadamardReports(BaseModel):
    """Lower and upper bound of the chain, plus the squared-coefficient chain"""
    lower: InequalityReport
    upper: InequalityReport
    squared_chain: InequalityReport

    @property
    def reports(self) -> List[InequalityReport]:
        return [self.lower, self.upper, self.squared_chain]

    @property
    def holds(self) -> bool:
        return self.lower.holds and self.upper.holds


class PieceClass(str, Enum):
    CONVEX = 'convex'
    CONCAVE = 'concave'
    FLAT_OR_NEITHER = 'flat_or_neither'


class PieceData(BaseModel):
    """One piece [x_lo, x_hi] of a subdivision and its contribution"""
    model_config = ConfigDict(populate_by_name=True)

    i: int
    x_lo: float
    x_hi: float
    mu: float
    piece_class: PieceClass = Field(alias='class')
    t_bar_ratio: Optional[float] = None
    t_bar_diff: Optional[float] = None
    lambda_ratio: Optional[float] = None
    lambda_diff: Optional[float] = None

    def chord(self, t, f_lo: float):
        """L_i(t) = f(x_lo) + mu (t - x_lo)"""
        return f_lo + self.mu * (t - self.x_lo)


class ConverseConstants(BaseModel):
    """Multiplicative and additive converse constants with per-piece data"""
    alpha: float
    beta: float
    coefficient: float
    pieces: List[PieceData]

    @model_validator(mode='after')
    def check_floors(self):
        if self.alpha < 1.0 - 1e-12:
            raise ValueError(f'alpha must be >= 1, got {self.alpha!r}')
        if self.beta < -1e-12:
            raise ValueError(f'beta must be >= 0, got {self.beta!r}')
        return self

    @property
    def prefactor_multiplicative(self) -> float:
        """1 / (C alpha), the prefactor of the multiplicative converse"""
        return 1.0 / (self.coefficient * self.alpha)

    @property
    def prefactor_additive(self) -> float:
        """1 / C, the prefactor of the additive converse"""
        return 1.0 / self.coefficient

    def to_dict(self) -> dict:
        return self.model_dump(mode='json', by_alias=True)


class CampaignConfig(BaseModel):
    """Configuration of one verification campaign"""
    target: str
    f: str = 'square'
    h: str = 'identity'
    n_min: int = Field(default=1, ge=1, le=MAX_DIM)
    n_max: int = Field(default=8, ge=1, le=MAX_DIM)
    m: float = 1.0
    M: float = 2.0
    trials: int = Field(default=100, ge=1)
    seed: int = 0
    policy: str = 'safe'
    override_positivity: bool = False
    lam: Optional[float] = None
    p: Optional[float] = Field(default=None, ge=0)
    q: Optional[float] = Field(default=None, ge=0)
    operators: int = Field(default=2, ge=1, le=16)
    knots: Optional[List[float]] = None
    refine: bool = False
    skip_convexity_check: bool = False
    boundary_instance: bool = False

    @field_validator('target')
    @classmethod
    def check_target(cls, v):
        if v not in TARGETS:
            raise ValueError(f'Unknown target {v!r}; expected one of {", ".join(TARGETS)}')
        return v

    @field_validator('policy')
    @classmethod
    def check_policy(cls, v):
        from opjensen.core.parsers import parse_policy
        parse_policy(v)
        return v

    @model_validator(mode='after')
    def check_ranges(self):
        if self.n_min > self.n_max:
            raise ValueError(f'n range is empty: {self.n_min} > {self.n_max}')
        # Raises on an invalid interval
        _ = self.interval
        if self.lam is not None and not 0.0 < self.lam < 1.0:
            raise ValueError(f'lambda must lie in (0, 1), got {self.lam}')
        if (self.p is None) != (self.q is None):
            raise ValueError('p and q must be given together')
        if self.p is not None and self.p + self.q <= 0:
            raise ValueError('p + q must be positive')
        return self

    @property
    def interval(self) -> SpectrumInterval:
        return SpectrumInterval(m=self.m, M=self.M, positivity_override=self.override_positivity)

    @property
    def seeds(self) -> range:
        return range(self.seed, self.seed + self.trials)


class CampaignSummary(BaseModel):
    """Aggregated outcome of a campaign"""
    target: str
    total: int = 0
    held: int = 0
    violated: int = 0
    vacuous: int = 0
    errors: int = 0
    worst_slack: Optional[float] = None
    first_violation: Optional[InequalityReport] = None
    wall_time_seconds: float = 0.0

    def add_report(self, report: InequalityReport):
        self.total += 1
        if report.vacuous:
            self.vacuous += 1
            return
        if report.holds:
            self.held += 1
        else:
            self.violated += 1
            if self.first_violation is None:
                self.first_violation = report
        if self.worst_slack is None or report.slack < self.worst_slack:
            self.worst_slack = report.slack

    def add_error(self):
        self.errors += 1

    @property
    def clean(self) -> bool:
        return self.violated == 0 and self.errors == 0


class SearchResult(BaseModel):
    """Counterexample search split at lambda = 1/2"""
    above_half: CampaignSummary
    below_half: CampaignSummary
    h_over_t_decreasing: bool
    wall_time_seconds: float = 0.0

    @property
    def consistent(self) -> bool:
        """No violation below 1/2 whenever h(t)/t is decreasing"""
        return not self.h_over_t_decreasing or self.below_half.violated == 0

    @property
    def violations(self) -> int:
        return self.above_half.violated + self.below_half.violated
