"""
Inequality verification engine.

Each check evaluates both sides of one inequality on a concrete operator
instance and returns an InequalityReport that carries a replayable witness.
"""
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from opjensen.core.coefficients import jensen_coefficient
from opjensen.core.errors import ObjectiveError, OpJensenError, PreconditionError
from opjensen.core.functions import HFunction, ScalarFunction
from opjensen.core.models import (
    CoefficientPolicy,
    HermiteHadamardReports,
    HermitianMatrix,
    InequalityReport,
    RefinementReport,
    RefinementStatus,
    SpectrumInterval,
    UnitVector,
    VectorFamily,
    Witness,
)
from opjensen.core.search import golden_section_maximize
from opjensen.core.spectral import (
    block_diag,
    ensure_contained,
    ensure_positive,
    matrix_function,
    quadratic_form,
    scalar_value,
    spectrum_bounds,
)
from opjensen.utils.decorators import audit_log


logger = logging.getLogger(__name__)

BARYCENTER_TOL = 1e-9
BLOCK_AGREEMENT_RTOL = 1e-10
WEIGHT_SUM_TOL = 1e-12
STRICT_MARGIN = 1e-12
MONOTONICITY_SAMPLES = 100


def _report(name: str, lhs: float, rhs: float, coefficient: float,
            policy: str, witness: Witness, **extra) -> InequalityReport:
    """Build a report; an infinite coefficient makes it hold vacuously"""
    if not math.isfinite(coefficient):
        return InequalityReport(
            name=name, lhs=lhs, rhs=math.inf, coefficient=coefficient, policy=policy,
            slack=math.inf, holds=True, witness=witness, vacuous=True, **extra
        )
    return InequalityReport.evaluate(name, lhs, rhs, coefficient, policy, witness, **extra)


def _inner(A: HermitianMatrix, f: ScalarFunction, x: UnitVector) -> float:
    """<f(A)x, x>"""
    return quadratic_form(matrix_function(A, f), x)


def _single_operator(name: str, f: ScalarFunction, h: HFunction, A: HermitianMatrix,
                     x: UnitVector, policy: CoefficientPolicy, override: bool,
                     seed: Optional[int]) -> InequalityReport:
    ensure_positive(A, override)
    coefficient = jensen_coefficient(h, policy)

    lhs = scalar_value(f, quadratic_form(A, x))
    rhs = coefficient * _inner(A, f, x) if math.isfinite(coefficient) else math.inf

    witness = Witness.capture(A, x, f.spec, h.spec, seed, override)
    return _report(name, lhs, rhs, coefficient, policy.label, witness)


@audit_log
def mond_pecaric_check(f: ScalarFunction, h: HFunction, A: HermitianMatrix, x: UnitVector,
                       policy: CoefficientPolicy = CoefficientPolicy.safe(), *,
                       override: bool = False, seed: Optional[int] = None) -> InequalityReport:
    """
    Check f(<Ax,x>) <= C <f(A)x,x> with C = jensen_coefficient(h, policy).

    Args:
        f: h-convex function (not re-verified here)
        h: Weight function
        A: Operator with positive spectrum, unless override is set
        x: Unit vector
        policy: Coefficient policy
        override: Skip the positivity check on Sp(A)
        seed: Seed recorded in the witness

    Returns:
        InequalityReport named 'thm1'; vacuous when C is infinite
    """
    return _single_operator('thm1', f, h, A, x, policy, override, seed)


@audit_log
def classical_jensen_check(f: ScalarFunction, A: HermitianMatrix, x: UnitVector, *,
                           override: bool = False, seed: Optional[int] = None) -> InequalityReport:
    """Operator Jensen inequality for convex f: coefficient exactly 1"""
    return _single_operator(
        'thm0', f, HFunction.identity(), A, x, CoefficientPolicy.safe(), override, seed
    )


@audit_log
def lambda_pointwise_check(f: ScalarFunction, h: HFunction, A: HermitianMatrix, x: UnitVector,
                           lam: float, *, override: bool = False,
                           seed: Optional[int] = None) -> InequalityReport:
    """Same as mond_pecaric_check with coefficient h(lam)/lam"""
    if not 0.0 < lam < 1.0:
        raise PreconditionError(f'lambda must lie in (0, 1), got {lam!r}')
    return _single_operator(
        'thm1-lambda', f, h, A, x, CoefficientPolicy.pointwise(lam), override, seed
    )


@audit_log
def refinement_check(f: ScalarFunction, h: HFunction, A: HermitianMatrix, x: UnitVector, *,
                     override: bool = False, seed: Optional[int] = None) -> RefinementReport:
    """
    Refinement f(<Ax,x>) <= M(h) <f(A)x,x> < <f(A)x,x> where M(h) = inf h(t)/t.

    Applies only when M(h) < 1 and f(<Ax,x>) < <f(A)x,x> strictly;
    otherwise the report is not_applicable and marked vacuous.
    """
    ensure_positive(A, override)
    policy = CoefficientPolicy.paper_literal()
    coefficient = jensen_coefficient(h, policy)

    lhs = scalar_value(f, quadratic_form(A, x))
    inner = _inner(A, f, x)
    rhs = coefficient * inner if math.isfinite(coefficient) else math.inf
    witness = Witness.capture(A, x, f.spec, h.spec, seed, override)

    applicable = coefficient < 1.0 and inner - lhs > STRICT_MARGIN
    report = InequalityReport.evaluate(
        'refine', lhs, rhs, coefficient, policy.label, witness, vacuous=not applicable
    )

    if not applicable:
        status = RefinementStatus.NOT_APPLICABLE
    elif report.holds:
        status = RefinementStatus.REFINED
    else:
        status = RefinementStatus.VIOLATED

    return RefinementReport(status=status, coefficient=coefficient, report=report)


def _working_interval(A: HermitianMatrix, interval: Optional[SpectrumInterval],
                      override: bool) -> SpectrumInterval:
    if interval is None:
        return spectrum_bounds(A, allow_nonpositive=override)
    ensure_contained(A, interval)
    return interval


def chord_value(f: ScalarFunction, interval: SpectrumInterval, t: float) -> float:
    """((M - t) f(m) + (t - m) f(M)) / (M - m)"""
    m, M = interval.m, interval.M
    return ((M - t) * scalar_value(f, m) + (t - m) * scalar_value(f, M)) / (M - m)


@audit_log
def endpoint_bound_check(f: ScalarFunction, h: HFunction, A: HermitianMatrix, x: UnitVector,
                         policy: CoefficientPolicy = CoefficientPolicy.safe(), *,
                         interval: Optional[SpectrumInterval] = None, override: bool = False,
                         seed: Optional[int] = None) -> InequalityReport:
    """
    Check <f(A)x,x> <= C [((M - g)/(M - m)) f(m) + ((g - m)/(M - m)) f(M)], g = <Ax,x>.

    [m, M] is the spectrum hull unless an enclosing interval is given.

    Raises:
        SpectrumError: If m == M or the interval does not contain Sp(A)
    """
    ensure_positive(A, override)
    bounds = _working_interval(A, interval, override)
    coefficient = jensen_coefficient(h, policy)

    lhs = _inner(A, f, x)
    chord = chord_value(f, bounds, quadratic_form(A, x))
    rhs = coefficient * chord if math.isfinite(coefficient) else math.inf

    witness = Witness.capture(A, x, f.spec, h.spec, seed, override)
    return _report('thm3', lhs, rhs, coefficient, policy.label, witness)


class FObjective(BaseModel):
    """Objective F(u, v), nondecreasing in u"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    rule: Callable[[float, float], float]
    monotone_in_u: bool = True

    @classmethod
    def difference(cls) -> 'FObjective':
        return cls(name='u-v', rule=lambda u, v: u - v)

    @classmethod
    def ratio(cls) -> 'FObjective':
        return cls(name='u/v', rule=lambda u, v: u / v)

    @classmethod
    def scaled_difference(cls, c: float) -> 'FObjective':
        return cls(name=f'u-{c!r}v', rule=lambda u, v: u - c * v)

    def __call__(self, u: float, v: float) -> float:
        try:
            value = self.rule(float(u), float(v))
        except ArithmeticError as e:
            raise ObjectiveError(f'F={self.name} failed at u={u!r}, v={v!r}: {e}') from e
        if not math.isfinite(value):
            raise ObjectiveError(f'F={self.name} is not finite at u={u!r}, v={v!r}')
        return float(value)

    def check_monotone(self, u_range: Tuple[float, float], v_range: Tuple[float, float],
                       samples: int = MONOTONICITY_SAMPLES, seed: int = 0):
        """
        Spot-check F(u, v) <= F(u', v) for u <= u' at random triples.

        Raises:
            ObjectiveError: On the first decreasing triple
        """
        if not self.monotone_in_u:
            raise ObjectiveError(f'F={self.name} is not declared monotone in u')

        rng = np.random.default_rng(seed)
        for _ in range(samples):
            u, u_prime = sorted(rng.uniform(*u_range, 2))
            v = rng.uniform(*v_range)
            low, high = self(u, v), self(u_prime, v)
            if low > high + 1e-12 * max(1.0, abs(high)):
                raise ObjectiveError(
                    f'F={self.name} decreases in u: F({u!r}, {v!r})={low!r} > '
                    f'F({u_prime!r}, {v!r})={high!r}'
                )


def _tie_margin(value: float) -> float:
    return 1e-14 * max(1.0, abs(value))


def maximize_F(F: FObjective, f: ScalarFunction, h: HFunction, interval: SpectrumInterval,
               policy: CoefficientPolicy = CoefficientPolicy.safe(), grid: int = 1001,
               tol: float = 1e-10) -> Tuple[float, float]:
    """
    Maximize theta -> F(C (theta f(m) + (1-theta) f(M)), f(theta m + (1-theta) M)) on [0, 1].

    Uniform grid search followed by golden-section refinement around the
    best grid point. Ties go to the smaller theta.

    Returns:
        (theta*, max value)
    """
    if grid < 3:
        raise PreconditionError(f'grid must be >= 3, got {grid}')

    coefficient = jensen_coefficient(h, policy)
    if not math.isfinite(coefficient):
        raise ObjectiveError(f'Coefficient of {h.spec} under {policy.label} is infinite')

    m, M = interval.m, interval.M
    f_m, f_M = scalar_value(f, m), scalar_value(f, M)

    f_range = f(np.linspace(m, M, 101))
    F.check_monotone(
        (0.0, coefficient * max(f_m, f_M)),
        (float(np.min(f_range)), float(np.max(f_range)))
    )

    def objective(theta: float) -> float:
        u = coefficient * (theta * f_m + (1.0 - theta) * f_M)
        v = scalar_value(f, theta * m + (1.0 - theta) * M)
        return F(u, v)

    thetas = np.linspace(0.0, 1.0, grid)
    values = np.array([objective(t) for t in thetas])

    best = float(np.max(values))
    k = int(np.flatnonzero(values >= best - _tie_margin(best))[0])
    theta_star, value = float(thetas[k]), float(values[k])

    lo, hi = thetas[max(k - 1, 0)], thetas[min(k + 1, grid - 1)]
    refined_theta, refined_value = golden_section_maximize(objective, lo, hi, tol)
    if refined_value > value + _tie_margin(value):
        theta_star, value = refined_theta, refined_value

    logger.debug(f'max F={F.name} for {f.spec} on {interval}: theta*={theta_star!r}, value={value!r}')
    return theta_star, value


@audit_log
def hermite_hadamard_check(f: ScalarFunction, h: HFunction, A: HermitianMatrix, x: UnitVector,
                           p: float, q: float,
                           policy: CoefficientPolicy = CoefficientPolicy.safe(), *,
                           interval: Optional[SpectrumInterval] = None, override: bool = False,
                           seed: Optional[int] = None) -> HermiteHadamardReports:
    """
    Two-sided bound
        (1/C) f((pm + qM)/(p + q)) <= <f(A)x,x> <= C (p f(m) + q f(M))/(p + q)
    for x with <Ax,x> at the barycenter (pm + qM)/(p + q).

    A third report compares the outer terms with C^2, the constant the
    two-step chain actually yields.

    Raises:
        PreconditionError: If p, q are invalid or <Ax,x> misses the barycenter
    """
    if p < 0 or q < 0 or p + q <= 0:
        raise PreconditionError(f'Need p, q >= 0 with p + q > 0, got p={p!r}, q={q!r}')

    ensure_positive(A, override)
    bounds = _working_interval(A, interval, override)
    m, M = bounds.m, bounds.M

    barycenter = (p * m + q * M) / (p + q)
    residual = abs(quadratic_form(A, x) - barycenter)
    if residual > BARYCENTER_TOL:
        raise PreconditionError(
            f'<Ax,x> misses the barycenter {barycenter!r} by {residual:.3e}'
        )

    coefficient = jensen_coefficient(h, policy)
    inner = _inner(A, f, x)
    at_barycenter = scalar_value(f, barycenter)
    endpoints = (p * scalar_value(f, m) + q * scalar_value(f, M)) / (p + q)
    witness = Witness.capture(A, x, f.spec, h.spec, seed, override)

    if not math.isfinite(coefficient):
        lower = _report('hh-lower', 0.0, inner, coefficient, policy.label, witness)
    else:
        lower = _report('hh-lower', at_barycenter / coefficient, inner, coefficient,
                        policy.label, witness)

    upper = _report('hh-upper', inner, coefficient * endpoints, coefficient,
                    policy.label, witness)
    squared = _report('hh-squared', at_barycenter, coefficient ** 2 * endpoints,
                      coefficient ** 2, policy.label, witness)

    return HermiteHadamardReports(lower=lower, upper=upper, squared_chain=squared)


def family_sums(f: ScalarFunction, As: Sequence[HermitianMatrix],
                 vectors: Sequence[np.ndarray]) -> Tuple[float, float]:
    """(sum <A_i x_i, x_i>, sum <f(A_i) x_i, x_i>)"""
    g = 0.0
    inner = 0.0
    for A, x in zip(As, vectors):
        if A.dim != x.shape[0]:
            raise PreconditionError(f'Dimension mismatch: operator {A.dim}, vector {x.shape[0]}')
        g += float(x @ A.entries @ x)
        inner += float(x @ matrix_function(A, f).entries @ x)
    return g, inner


def _block_report(name: str, f: ScalarFunction, h: HFunction, As: Sequence[HermitianMatrix],
                  vectors: Sequence[np.ndarray], policy: CoefficientPolicy,
                  override: bool, seed: Optional[int],
                  direct: Optional[Callable[[], Tuple[float, float]]] = None) -> InequalityReport:
    """
    Sum form of the inequality, cross-checked against the block-diagonal operator
    and, when given, against the sums returned by direct().
    """
    if len(As) != len(vectors):
        raise PreconditionError(f'{len(As)} operators but {len(vectors)} vectors')
    for A in As:
        ensure_positive(A, override)

    coefficient = jensen_coefficient(h, policy)
    g, inner = family_sums(f, As, vectors)
    lhs = scalar_value(f, g)

    block = block_diag(As)
    stacked = UnitVector.normalized(np.concatenate(vectors))
    block_lhs = scalar_value(f, quadratic_form(block, stacked))
    block_inner = _inner(block, f, stacked)

    residual = max(abs(lhs - block_lhs), abs(inner - block_inner))
    if direct is not None:
        g_direct, inner_direct = direct()
        residual = max(residual, abs(g - g_direct), abs(inner - inner_direct))
    if residual > BLOCK_AGREEMENT_RTOL * max(1.0, abs(lhs), abs(inner)):
        raise OpJensenError(
            f'Block-diagonal path disagrees with the sum form by {residual:.3e}'
        )

    rhs = coefficient * inner if math.isfinite(coefficient) else math.inf
    witness = Witness.capture(block, stacked, f.spec, h.spec, seed, override)
    return _report(name, lhs, rhs, coefficient, policy.label, witness,
                   agreement_residual=residual)


@audit_log
def multi_operator_check(f: ScalarFunction, h: HFunction, As: Sequence[HermitianMatrix],
                         xs: VectorFamily, policy: CoefficientPolicy = CoefficientPolicy.safe(), *,
                         override: bool = False, seed: Optional[int] = None) -> InequalityReport:
    """
    f(sum <A_i x_i, x_i>) <= C sum <f(A_i) x_i, x_i> for sum ||x_i||^2 = 1.

    The witness is the block-diagonal operator with the stacked vector;
    agreement_residual records the distance between both evaluation paths.
    """
    return _block_report('thm6', f, h, As, xs.vectors, policy, override, seed)


def weighted_family(x: UnitVector, ps: Sequence[float]) -> VectorFamily:
    """x_i = sqrt(p_i) x"""
    return VectorFamily(vectors=[math.sqrt(p) * x.components for p in ps])


def _check_weights(ps: Sequence[float]) -> np.ndarray:
    weights = np.asarray(ps, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise PreconditionError('Weights must be a nonempty sequence')
    if np.any(weights < 0):
        raise PreconditionError(f'Weights must be nonnegative, got {weights.tolist()}')
    total = float(np.sum(weights))
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise PreconditionError(f'Weights must sum to 1, got {total!r}')
    return weights


@audit_log
def weighted_multi_check(f: ScalarFunction, h: HFunction, As: Sequence[HermitianMatrix],
                         x: UnitVector, ps: Sequence[float],
                         policy: CoefficientPolicy = CoefficientPolicy.safe(), *,
                         override: bool = False, seed: Optional[int] = None) -> InequalityReport:
    """f(sum p_i <A_i x, x>) <= C sum p_i <f(A_i) x, x> for weights summing to 1"""
    weights = _check_weights(ps)
    if len(As) != weights.size:
        raise PreconditionError(f'{len(As)} operators but {weights.size} weights')

    family = weighted_family(x, weights)
    return _block_report('cor6', f, h, As, family.vectors, policy, override, seed,
                         direct=lambda: weighted_sums(f, As, x, weights))


def weighted_sums(f: ScalarFunction, As: Sequence[HermitianMatrix], x: UnitVector,
                  ps: Sequence[float]) -> Tuple[float, float]:
    """(sum p_i <A_i x, x>, sum p_i <f(A_i) x, x>) evaluated directly"""
    weights = _check_weights(ps)
    g = sum(p * quadratic_form(A, x) for p, A in zip(weights, As))
    inner = sum(p * _inner(A, f, x) for p, A in zip(weights, As))
    return float(g), float(inner)


# Report names whose witness alone determines both sides
_SINGLE_OPERATOR_NAMES = ('thm1', 'thm1-lambda', 'thm6', 'cor6')
REPLAYABLE_NAMES = ('thm0', 'refine', 'thm3') + _SINGLE_OPERATOR_NAMES


def replay(report: InequalityReport) -> InequalityReport:
    """
    Re-run the witness of a report through the engine.

    Jensen-form reports (thm0, thm1, thm1-lambda, thm6, cor6, refine) and
    endpoint reports over the spectrum hull can be replayed.

    Raises:
        PreconditionError: For reports whose witness lacks the extra inputs
    """
    from opjensen.core.parsers import parse_f, parse_h, parse_policy

    w = report.witness
    f, h = parse_f(w.f), parse_h(w.h)
    A, x = w.operator(), w.vector()
    policy = parse_policy(report.policy)

    if report.name == 'thm0':
        replayed = classical_jensen_check(f, A, x, override=w.override, seed=w.seed)
    elif report.name in _SINGLE_OPERATOR_NAMES:
        replayed = mond_pecaric_check(f, h, A, x, policy, override=w.override, seed=w.seed)
    elif report.name == 'refine':
        replayed = refinement_check(f, h, A, x, override=w.override, seed=w.seed).report
    elif report.name == 'thm3':
        replayed = endpoint_bound_check(f, h, A, x, policy, override=w.override, seed=w.seed)
    else:
        raise PreconditionError(f'Reports named {report.name!r} cannot be replayed')

    return replayed.model_copy(update={'name': report.name})


def replay_residual(report: InequalityReport) -> float:
    """max(|lhs - lhs'|, |rhs - rhs'|) against the replayed report"""
    replayed = replay(report)
    if math.isinf(report.rhs) and math.isinf(replayed.rhs):
        return abs(report.lhs - replayed.lhs)
    return max(abs(report.lhs - replayed.lhs), abs(report.rhs - replayed.rhs))


def reports_from(results) -> List[InequalityReport]:
    """Flatten the result of any check into a list of reports"""
    if isinstance(results, InequalityReport):
        return [results]
    if isinstance(results, RefinementReport):
        return [results.report]
    if isinstance(results, HermiteHadamardReports):
        return results.reports
    return [r for item in results for r in reports_from(item)]
