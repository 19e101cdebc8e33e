"""
Jensen coefficients and the sampled h-convexity oracle.
"""
import logging
import math
from typing import Iterable, List, Tuple

import numpy as np

from opjensen.core.errors import NonNegativityError, PreconditionError
from opjensen.core.functions import F_REGISTRY_SPECS, HFamily, HFunction, ScalarFunction
from opjensen.core.models import (
    CoefficientPolicy,
    ConvexityViolation,
    ConvexityWitness,
    PolicyMode,
    SpectrumInterval,
)
from opjensen.core.search import golden_section_minimize


logger = logging.getLogger(__name__)

# Grid for the infimum of h(t)/t; t = 0 is excluded
GRID_LO = 1e-6
GRID_HI = 1.0 - 1e-6
GRID_POINTS = 10001

# A grid minimum above this is reported as +inf
DIVERGENCE_LIMIT = 1e12

LAMBDA_FLOOR = 1e-9
CONVEXITY_RTOL = 1e-9


def _tabulated_infimum(h: HFunction, tol: float) -> float:
    grid = np.linspace(GRID_LO, GRID_HI, GRID_POINTS)
    values = h(grid)

    negative = np.flatnonzero(values < 0)
    if negative.size:
        t = grid[negative[0]]
        raise NonNegativityError(f'{h.spec} is negative at t={t!r}: h(t)={values[negative[0]]!r}')

    ratios = values / grid
    k = int(np.argmin(ratios))
    if ratios[k] > DIVERGENCE_LIMIT:
        return math.inf

    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, GRID_POINTS - 1)]
    _, refined = golden_section_minimize(lambda t: float(h(t)) / t, lo, hi, tol)
    return float(min(ratios[k], refined))


def _paper_literal(h: HFunction, tol: float) -> float:
    """inf over (0, 1) of h(t)/t"""
    family = h.family
    if family is HFamily.CONSTANT:
        # c/t decreases towards c as t -> 1
        return float(h.param)
    if family in (HFamily.IDENTITY, HFamily.POWER, HFamily.RECIPROCAL, HFamily.RECIPROCAL_POWER):
        # h(t)/t is 1 or decreases to 1 as t -> 1
        return 1.0
    return _tabulated_infimum(h, tol)


def jensen_coefficient(h: HFunction, policy: CoefficientPolicy = CoefficientPolicy.safe(),
                       tol: float = 1e-10) -> float:
    """
    Coefficient C in f(<Ax,x>) <= C <f(A)x,x>.

    Args:
        h: Weight function
        policy: PaperLiteral (inf of h(t)/t on (0, 1)), Safe (2 h(1/2))
                or PointwiseLambda (h(lambda)/lambda)
        tol: Tolerance of the numerical infimum for tabulated h

    Returns:
        The coefficient; +inf when the tabulated infimum diverges
    """
    if tol <= 0:
        raise PreconditionError(f'tol must be positive, got {tol}')

    if policy.mode is PolicyMode.SAFE:
        return 2.0 * float(h(0.5))
    if policy.mode is PolicyMode.POINTWISE_LAMBDA:
        return float(h(policy.lam)) / policy.lam
    return _paper_literal(h, tol)


def classify_coefficient(h: HFunction) -> float:
    """
    Closed-form Safe coefficient of the five named families:
    identity 1, constant c 2c, power 2^(1-s), reciprocal 4, recpower 2^(1+s).
    """
    family = h.family
    if family is HFamily.IDENTITY:
        return 1.0
    if family is HFamily.CONSTANT:
        return 2.0 * h.param
    if family is HFamily.POWER:
        return 2.0 ** (1.0 - h.param)
    if family is HFamily.RECIPROCAL:
        return 4.0
    if family is HFamily.RECIPROCAL_POWER:
        return 2.0 ** (1.0 + h.param)
    raise PreconditionError(f'No closed-form coefficient for family {h.spec}')


def is_h_over_t_decreasing(h: HFunction, samples: int = 1001) -> bool:
    """
    Whether h(t)/t is (weakly) decreasing on (0, 1).
    Named families answer in closed form; tabulated h is checked on a grid.
    """
    if samples < 2:
        raise PreconditionError(f'samples must be >= 2, got {samples}')
    if h.is_named_family:
        return True

    grid = np.linspace(GRID_LO, GRID_HI, samples)
    ratios = h(grid) / grid
    return bool(np.all(np.diff(ratios) <= 1e-12))


def convexity_sides(f: ScalarFunction, h: HFunction, u, v, lam) -> Tuple[np.ndarray, np.ndarray]:
    """Both sides of f(lam u + (1-lam) v) <= h(lam) f(u) + h(1-lam) f(v)"""
    lhs = f(lam * u + (1.0 - lam) * v)
    rhs = h(lam) * f(u) + h(1.0 - lam) * f(v)
    return lhs, rhs


def check_h_convex(f: ScalarFunction, h: HFunction, interval: SpectrumInterval,
                   trials: int = 1000, seed: int = 0) -> ConvexityWitness:
    """
    Sample (u, v, lambda) and test the defining h-convexity inequality.

    Returns:
        ConvexityWitness carrying the worst violating triple, if any

    Raises:
        NonNegativityError: If f is negative at a sample
    """
    if trials < 1:
        raise PreconditionError(f'trials must be >= 1, got {trials}')

    rng = np.random.default_rng(seed)
    u = rng.uniform(interval.m, interval.M, trials)
    v = rng.uniform(interval.m, interval.M, trials)
    lam = rng.uniform(LAMBDA_FLOOR, 1.0 - LAMBDA_FLOOR, trials)

    for points in (u, v):
        values = f(points)
        negative = np.flatnonzero(values < 0)
        if negative.size:
            t = points[negative[0]]
            raise NonNegativityError(f'{f.spec} is negative at t={t!r}')

    lhs, rhs = convexity_sides(f, h, u, v, lam)
    excess = lhs - rhs
    margin = CONVEXITY_RTOL * np.maximum(1.0, np.abs(rhs))
    bad = np.flatnonzero(excess > margin)

    if not bad.size:
        return ConvexityWitness(holds=True, trials=trials)

    k = bad[np.argmax(excess[bad])]
    logger.debug(f'{f.spec} is not {h.spec}-convex on {interval}: {bad.size}/{trials} violations')
    return ConvexityWitness(
        holds=False,
        trials=trials,
        violation=ConvexityViolation(
            u=float(u[k]), v=float(v[k]), lam=float(lam[k]),
            lhs=float(lhs[k]), rhs=float(rhs[k])
        )
    )


def admissible_functions(h: HFunction, interval: SpectrumInterval,
                         specs: Iterable[str] = F_REGISTRY_SPECS,
                         trials: int = 2000, seed: int = 0) -> List[ScalarFunction]:
    """Registry functions that are nonnegative and pass check_h_convex for h"""
    from opjensen.core.parsers import parse_f

    admitted = []
    for spec in specs:
        f = parse_f(spec)
        try:
            f.ensure_nonnegative(interval)
            witness = check_h_convex(f, h, interval, trials, seed)
        except NonNegativityError as e:
            logger.debug(f'Skipping {spec}: {e}')
            continue
        if witness.holds:
            admitted.append(f)
    return admitted
