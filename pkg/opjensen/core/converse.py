"""
Converse constants alpha and beta for piecewise C^2 functions.

On each piece [x_lo, x_hi] of a subdivision the chord
L(t) = f(x_lo) + mu (t - x_lo) is compared with f, multiplicatively
through L/f and additively through L - f. The maxima of those comparisons,
floored at 1 and 0, bound <f(A)x,x> by f(<Ax,x>).
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from opjensen.core.coefficients import classify_coefficient, jensen_coefficient
from opjensen.core.errors import (
    BracketingError,
    ConverseError,
    PreconditionError,
    SubdivisionError,
)
from opjensen.core.functions import HFunction, ScalarFunction
from opjensen.core.inequalities import family_sums
from opjensen.core.models import (
    CoefficientPolicy,
    ConverseConstants,
    HermitianMatrix,
    InequalityReport,
    PieceClass,
    PieceData,
    SpectrumInterval,
    UnitVector,
    VectorFamily,
    Witness,
)
from opjensen.core.search import bisect
from opjensen.core.spectral import (
    block_diag,
    ensure_contained,
    ensure_positive,
    matrix_function,
    quadratic_form,
    scalar_value,
)
from opjensen.utils.decorators import audit_log


logger = logging.getLogger(__name__)

INTERIOR_SAMPLES = 101
CURVATURE_TOL = 1e-12
POSITIVITY_FLOOR = 1e-12
POSITIVITY_SAMPLES = 1001
STATIONARY_TOL = 1e-12
REFINE_TOL = 1e-10

# Offset, relative to the piece width, at which one-sided limits of f'' are read
LIMIT_OFFSET = 1e-6


class PiecewiseC2Function(BaseModel):
    """f with a subdivision m = x_0 < x_1 < ... < x_n = M adapted to its curvature"""
    model_config = ConfigDict(frozen=True)

    base: ScalarFunction
    knots: Tuple[float, ...]

    @field_validator('knots')
    @classmethod
    def check_knots(cls, v):
        if len(v) < 2:
            raise ValueError('A subdivision needs at least the two endpoints')
        if not all(math.isfinite(k) for k in v):
            raise ValueError('Knots must be finite')
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f'Knots must be strictly increasing, got {list(v)}')
        return v

    @classmethod
    def trivial(cls, f: ScalarFunction, interval: SpectrumInterval) -> 'PiecewiseC2Function':
        return cls(base=f, knots=(interval.m, interval.M))

    @classmethod
    def with_knots(cls, f: ScalarFunction, interval: SpectrumInterval,
                   interior: Sequence[float]) -> 'PiecewiseC2Function':
        """Subdivision of the interval at the given interior knots"""
        for k in interior:
            if not interval.m < k < interval.M:
                raise PreconditionError(f'Knot {k!r} lies outside the open interval {interval}')
        return cls(base=f, knots=(interval.m, *sorted(interior), interval.M))

    @property
    def interval(self) -> SpectrumInterval:
        return SpectrumInterval(m=self.knots[0], M=self.knots[-1], positivity_override=True)

    @property
    def pieces(self) -> List[Tuple[float, float]]:
        return list(zip(self.knots, self.knots[1:]))


def refine_subdivision(f: ScalarFunction, interval: SpectrumInterval,
                       samples: int = POSITIVITY_SAMPLES,
                       tol: float = REFINE_TOL) -> PiecewiseC2Function:
    """
    Subdivide [m, M] at the sign changes of f''.

    Sign changes are located on a uniform grid and polished by bisection.
    """
    grid = np.linspace(interval.m, interval.M, samples)
    curvature = f.second_derivative(grid)

    knots = []
    last = None
    for k, value in enumerate(curvature):
        if abs(value) <= CURVATURE_TOL:
            continue
        if last is not None and math.copysign(1.0, value) != math.copysign(1.0, curvature[last]):
            knot = bisect(f.second_derivative, float(grid[last]), float(grid[k]), tol)
            if interval.m + tol < knot < interval.M - tol and (not knots or knot - knots[-1] > tol):
                knots.append(knot)
        last = k

    if knots:
        logger.info(f'Refined subdivision of {f.spec} on {interval} at {knots}')
    return PiecewiseC2Function(base=f, knots=(interval.m, *knots, interval.M))


def classify_intervals(pf: PiecewiseC2Function) -> List[PieceData]:
    """
    Label every piece convex, concave or flat_or_neither by the sign of f''.

    Raises:
        SubdivisionError: If f'' takes both signs inside a piece
    """
    f = pf.base
    pieces = []
    for i, (lo, hi) in enumerate(pf.pieces, start=1):
        interior = np.linspace(lo, hi, INTERIOR_SAMPLES + 2)[1:-1]
        curvature = f.second_derivative(interior)
        positive = curvature > CURVATURE_TOL
        negative = curvature < -CURVATURE_TOL

        if positive.any() and negative.any():
            raise SubdivisionError(
                f"f'' of {f.spec} changes sign on piece {i} [{lo!r}, {hi!r}]; "
                f"refine the subdivision at the inflection points"
            )

        offset = LIMIT_OFFSET * (hi - lo)
        limits = (f.second_derivative(lo + offset), f.second_derivative(hi - offset))

        if positive.all() and min(limits) > 0:
            piece_class = PieceClass.CONVEX
        elif negative.all() and max(limits) < 0:
            piece_class = PieceClass.CONCAVE
        else:
            piece_class = PieceClass.FLAT_OR_NEITHER

        mu = (scalar_value(f, hi) - scalar_value(f, lo)) / (hi - lo)
        pieces.append(PieceData(i=i, x_lo=lo, x_hi=hi, mu=mu, piece_class=piece_class))

    return pieces


def _require_convex(piece: PieceData):
    if piece.piece_class is not PieceClass.CONVEX:
        raise PreconditionError(f'Piece {piece.i} is {piece.piece_class.value}, not convex')
    if piece.mu == 0.0:
        raise PreconditionError(f'Piece {piece.i} has zero chord slope')


def solve_ratio_stationary(piece: PieceData, f: ScalarFunction) -> float:
    """
    Root of G(t) = mu f(t) - L(t) f'(t) on a convex piece.

    Raises:
        BracketingError: If G has no sign change on the piece
    """
    _require_convex(piece)
    f_lo = scalar_value(f, piece.x_lo)

    def G(t: float) -> float:
        return piece.mu * f(t) - piece.chord(t, f_lo) * f.derivative(t)

    return bisect(G, piece.x_lo, piece.x_hi, STATIONARY_TOL)


def solve_diff_stationary(piece: PieceData, f: ScalarFunction) -> float:
    """Root of mu - f'(t) on a convex piece"""
    _require_convex(piece)
    return bisect(lambda t: piece.mu - f.derivative(t), piece.x_lo, piece.x_hi, STATIONARY_TOL)


def _zero_slope(piece: PieceData, f_lo: float, f_hi: float) -> bool:
    return abs(piece.mu) <= 1e-12 * max(1.0, abs(f_lo), abs(f_hi))


def _flat_contribution(piece: PieceData, f: ScalarFunction,
                       f_lo: float) -> Tuple[Optional[float], float, float]:
    """
    Contribution of a piece with zero chord slope.

    The stationary point of f is found by bisection on f'; a constant
    piece contributes the floor values.
    """
    interior = np.linspace(piece.x_lo, piece.x_hi, INTERIOR_SAMPLES)
    if np.all(np.abs(f.derivative(interior)) <= CURVATURE_TOL):
        return None, 1.0, 0.0

    try:
        t_bar = bisect(f.derivative, piece.x_lo, piece.x_hi, STATIONARY_TOL)
    except BracketingError as e:
        raise ConverseError(
            f'Piece {piece.i} has zero chord slope but no interior stationary point: {e}'
        ) from e

    f_bar = scalar_value(f, t_bar)
    return t_bar, f_lo / f_bar, f_lo - f_bar


def _ensure_positive_f(f: ScalarFunction, interval: SpectrumInterval):
    grid = np.linspace(interval.m, interval.M, POSITIVITY_SAMPLES)
    values = f(grid)
    low = np.flatnonzero(values < POSITIVITY_FLOOR)
    if low.size:
        t = grid[low[0]]
        raise ConverseError(
            f'{f.spec} must be positive on {interval} for the multiplicative constant; '
            f'f({t!r}) = {values[low[0]]!r}'
        )


def _assemble(pf: PiecewiseC2Function, coefficient: float) -> ConverseConstants:
    f = pf.base
    _ensure_positive_f(f, pf.interval)

    pieces = []
    alpha, beta = 1.0, 0.0
    for piece in classify_intervals(pf):
        f_lo = scalar_value(f, piece.x_lo)
        f_hi = scalar_value(f, piece.x_hi)
        t_ratio = t_diff = None

        if _zero_slope(piece, f_lo, f_hi):
            t_ratio, ratio, diff = _flat_contribution(piece, f, f_lo)
            t_diff = t_ratio
        elif piece.piece_class is PieceClass.CONVEX:
            t_ratio = solve_ratio_stationary(piece, f)
            t_diff = solve_diff_stationary(piece, f)
            ratio = piece.mu / f.derivative(t_ratio)
            diff = piece.chord(t_diff, f_lo) - scalar_value(f, t_diff)
        else:
            # Concave pieces lie above their chord; linear pieces equal it
            ratio, diff = 1.0, 0.0

        alpha = max(alpha, ratio)
        beta = max(beta, diff)
        pieces.append(piece.model_copy(update={
            't_bar_ratio': t_ratio,
            't_bar_diff': t_diff,
            'lambda_ratio': coefficient * ratio,
            'lambda_diff': coefficient * diff,
        }))

    return ConverseConstants(alpha=alpha, beta=beta, coefficient=coefficient, pieces=pieces)


def compute_constants(pf: PiecewiseC2Function, h: HFunction,
                      policy: CoefficientPolicy = CoefficientPolicy.safe()) -> ConverseConstants:
    """
    Converse constants of f under the coefficient C = jensen_coefficient(h, policy).

    alpha = max(1, max over pieces of L/f at its stationary point)
    beta = max(0, max over pieces of L - f at its stationary point)

    Raises:
        ConverseError: If f is not positive or C is infinite
        SubdivisionError: If the subdivision is not adapted to f
    """
    coefficient = jensen_coefficient(h, policy)
    if not math.isfinite(coefficient):
        raise ConverseError(f'Coefficient of {h.spec} under {policy.label} is infinite')

    constants = _assemble(pf, coefficient)
    logger.debug(
        f'Converse constants of {pf.base.spec} on {pf.interval}: '
        f'alpha={constants.alpha!r}, beta={constants.beta!r}, C={coefficient!r}'
    )
    return constants


def corollary4_constants(pf: PiecewiseC2Function, h: HFunction) -> ConverseConstants:
    """
    Constants with the closed-form Safe coefficient of a named h family.
    The prefactors are 1/(C alpha) and 1/C.
    """
    return _assemble(pf, classify_coefficient(h))


def _converse_reports(prefix: str, fg: float, inner: float, constants: ConverseConstants,
                      policy: str, witness: Witness) -> Tuple[InequalityReport, InequalityReport]:
    multiplicative = InequalityReport.evaluate(
        f'{prefix}-i', inner * constants.prefactor_multiplicative, fg,
        constants.coefficient, policy, witness
    )
    additive = InequalityReport.evaluate(
        f'{prefix}-ii', inner * constants.prefactor_additive - constants.beta, fg,
        constants.coefficient, policy, witness
    )
    return multiplicative, additive


@audit_log
def converse_check(pf: PiecewiseC2Function, h: HFunction, A: HermitianMatrix, x: UnitVector,
                   policy: CoefficientPolicy = CoefficientPolicy.safe(), *,
                   constants: Optional[ConverseConstants] = None, override: bool = False,
                   seed: Optional[int] = None) -> Tuple[InequalityReport, InequalityReport]:
    """
    Check both converse inequalities
        (i)  (1/(C alpha)) <f(A)x,x> <= f(<Ax,x>)
        (ii) (1/C) <f(A)x,x> - beta <= f(<Ax,x>)

    Args:
        constants: Precomputed constants for pf, h and policy

    Returns:
        (report (i), report (ii))
    """
    if constants is None:
        constants = compute_constants(pf, h, policy)

    f = pf.base
    ensure_positive(A, override)
    ensure_contained(A, pf.interval)

    fg = scalar_value(f, quadratic_form(A, x))
    inner = quadratic_form(matrix_function(A, f), x)
    witness = Witness.capture(A, x, f.spec, h.spec, seed, override)
    return _converse_reports('thm5', fg, inner, constants, policy.label, witness)


@audit_log
def multi_converse_check(pf: PiecewiseC2Function, h: HFunction, As: Sequence[HermitianMatrix],
                         xs: VectorFamily, policy: CoefficientPolicy = CoefficientPolicy.safe(), *,
                         constants: Optional[ConverseConstants] = None, override: bool = False,
                         seed: Optional[int] = None) -> Tuple[InequalityReport, InequalityReport]:
    """Converse inequalities for sum <A_i x_i, x_i> with sum ||x_i||^2 = 1"""
    if len(As) != len(xs.vectors):
        raise PreconditionError(f'{len(As)} operators but {len(xs.vectors)} vectors')
    if constants is None:
        constants = compute_constants(pf, h, policy)

    f = pf.base
    for A in As:
        ensure_positive(A, override)
        ensure_contained(A, pf.interval)

    g, inner = family_sums(f, As, xs.vectors)
    fg = scalar_value(f, g)
    witness = Witness.capture(block_diag(As), xs.stacked(), f.spec, h.spec, seed, override)
    return _converse_reports('cor7', fg, inner, constants, policy.label, witness)
