"""
One-dimensional solvers: bisection on a sign change and golden-section
search for unimodal functions.
"""
import math
from typing import Callable, Tuple

from opjensen.core.errors import BracketingError


INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARED = (3 - math.sqrt(5)) / 2  # 1 / phi^2


def bisect(func: Callable[[float], float], lo: float, hi: float,
           tol: float = 1e-12, max_iter: int = 200) -> float:
    """
    Find a root of func in [lo, hi] by bisection.

    Args:
        func: Continuous function with func(lo) and func(hi) of opposite sign
        lo: Lower end of the bracket
        hi: Upper end of the bracket
        tol: Stop once the bracket is narrower than tol
        max_iter: Iteration cap

    Returns:
        Midpoint of the final bracket

    Raises:
        BracketingError: If func does not change sign on [lo, hi]
    """
    f_lo = func(lo)
    f_hi = func(hi)

    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        raise BracketingError(f"No sign change on [{lo!r}, {hi!r}]", f_lo, f_hi)

    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = func(mid)
        if f_mid == 0.0:
            return mid
        if math.copysign(1.0, f_mid) == math.copysign(1.0, f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid

    return 0.5 * (lo + hi)


def golden_section_search(func: Callable[[float], float], a: float, b: float,
                          tol: float = 1e-10) -> Tuple[float, float]:
    """
    Given a function with a single local minimum in [a, b], return a
    subinterval [c, d] containing the minimum with d - c <= tol.
    Function evaluations are reused, one new evaluation per step.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return a, b

    # Required steps to achieve tolerance
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARED * h
    d = a + INV_PHI * h
    yc = func(c)
    yd = func(d)

    for _ in range(n - 1):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARED * h
            yc = func(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = func(d)

    if yc < yd:
        return a, d
    return c, b


def golden_section_minimize(func: Callable[[float], float], a: float, b: float,
                            tol: float = 1e-10) -> Tuple[float, float]:
    """Minimizer and minimum of a unimodal function on [a, b]"""
    c, d = golden_section_search(func, a, b, tol)
    x = 0.5 * (c + d)
    return x, func(x)


def golden_section_maximize(func: Callable[[float], float], a: float, b: float,
                            tol: float = 1e-10) -> Tuple[float, float]:
    """Maximizer and maximum of a unimodal function on [a, b]"""
    x, neg = golden_section_minimize(lambda t: -func(t), a, b, tol)
    return x, -neg
