"""
Weight functions h and scalar functions f.

h is a nonnegative weight on (0, 1] drawn from a parametric family;
f is a nonnegative function on an interval with first and second
derivative rules, evaluated elementwise on numpy arrays.
"""
import math
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from opjensen.core.errors import NonNegativityError
from opjensen.core.models import SpectrumInterval


# The five families with closed-form coefficients
FIVE_FAMILY_SPECS = ('identity', 'constant:1', 'power:0.5', 'reciprocal', 'recpower:0.5')

# Scalar functions tried by registry campaigns
F_REGISTRY_SPECS = (
    'affine:1,0',
    'affine:2,1',
    'square',
    'power:3',
    'sqrt',
    'exp',
    'poly:1,0,1',
)


def format_number(value: float) -> str:
    """Shortest round-tripping text for a parameter, without a trailing .0"""
    text = repr(float(value))
    return text[:-2] if text.endswith('.0') else text


def _as_output(values: np.ndarray, t):
    return float(values) if np.ndim(t) == 0 else values


class HFamily(str, Enum):
    IDENTITY = 'identity'
    CONSTANT = 'constant'
    POWER = 'power'
    RECIPROCAL = 'reciprocal'
    RECIPROCAL_POWER = 'recpower'
    TABULATED = 'tabulated'


class HFunction(BaseModel):
    """
    Weight function h on (0, 1].

    Tabulated weights carry an arbitrary evaluation rule; every other
    family is determined by its parameter.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    family: HFamily
    param: Optional[float] = None
    rule: Optional[Callable] = None
    name: Optional[str] = None

    @model_validator(mode='after')
    def check_parameters(self):
        family = self.family
        if family in (HFamily.POWER, HFamily.RECIPROCAL_POWER):
            if self.param is None or not 0.0 < self.param <= 1.0:
                raise ValueError(f'{family.value} needs s in (0, 1], got {self.param}')
        elif family is HFamily.CONSTANT:
            # h must not vanish identically
            if self.param is None or not self.param > 0.0:
                raise ValueError(f'constant h needs c > 0, got {self.param}')
        elif family is HFamily.TABULATED:
            if self.rule is None:
                raise ValueError('tabulated h needs an evaluation rule')
        elif self.param is not None:
            raise ValueError(f'{family.value} takes no parameter')
        return self

    @classmethod
    def identity(cls) -> 'HFunction':
        return cls(family=HFamily.IDENTITY)

    @classmethod
    def constant(cls, c: float = 1.0) -> 'HFunction':
        return cls(family=HFamily.CONSTANT, param=c)

    @classmethod
    def power(cls, s: float) -> 'HFunction':
        return cls(family=HFamily.POWER, param=s)

    @classmethod
    def reciprocal(cls) -> 'HFunction':
        return cls(family=HFamily.RECIPROCAL)

    @classmethod
    def reciprocal_power(cls, s: float) -> 'HFunction':
        return cls(family=HFamily.RECIPROCAL_POWER, param=s)

    @classmethod
    def tabulated(cls, rule: Callable, name: str = 'custom') -> 'HFunction':
        return cls(family=HFamily.TABULATED, rule=rule, name=name)

    @property
    def is_named_family(self) -> bool:
        return self.family is not HFamily.TABULATED

    @property
    def spec(self) -> str:
        if self.family is HFamily.TABULATED:
            return f'tabulated:{self.name}'
        if self.param is None:
            return self.family.value
        return f'{self.family.value}:{format_number(self.param)}'

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        family = self.family
        if family is HFamily.IDENTITY:
            values = arr.copy()
        elif family is HFamily.CONSTANT:
            values = np.full_like(arr, self.param)
        elif family is HFamily.POWER:
            values = arr ** self.param
        elif family is HFamily.RECIPROCAL:
            values = 1.0 / arr
        elif family is HFamily.RECIPROCAL_POWER:
            values = arr ** (-self.param)
        else:
            values = np.broadcast_to(np.asarray(self.rule(arr), dtype=float), arr.shape).copy()
        return _as_output(values, t)

    def __str__(self) -> str:
        return self.spec


class FFamily(str, Enum):
    AFFINE = 'affine'
    SQUARE = 'square'
    POWER = 'power'
    SQRT = 'sqrt'
    EXP = 'exp'
    POLY = 'poly'


_ARITY = {
    FFamily.AFFINE: 2,
    FFamily.SQUARE: 0,
    FFamily.POWER: 1,
    FFamily.SQRT: 0,
    FFamily.EXP: 0,
}


class ScalarFunction(BaseModel):
    """
    Scalar function f with value, f' and f'' rules.

    Affine(a, b) is a t + b; Poly(c0, c1, ...) is c0 + c1 t + c2 t^2 + ...
    """
    model_config = ConfigDict(frozen=True)

    family: FFamily
    params: Tuple[float, ...] = ()

    @model_validator(mode='after')
    def check_parameters(self):
        if self.family is FFamily.POLY:
            if len(self.params) < 1:
                raise ValueError('poly needs at least one coefficient')
        elif len(self.params) != _ARITY[self.family]:
            raise ValueError(
                f'{self.family.value} takes {_ARITY[self.family]} parameter(s), '
                f'got {len(self.params)}'
            )
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError('Parameters must be finite')
        return self

    @classmethod
    def affine(cls, a: float, b: float) -> 'ScalarFunction':
        return cls(family=FFamily.AFFINE, params=(a, b))

    @classmethod
    def square(cls) -> 'ScalarFunction':
        return cls(family=FFamily.SQUARE)

    @classmethod
    def power(cls, p: float) -> 'ScalarFunction':
        return cls(family=FFamily.POWER, params=(p,))

    @classmethod
    def sqrt(cls) -> 'ScalarFunction':
        return cls(family=FFamily.SQRT)

    @classmethod
    def exp(cls) -> 'ScalarFunction':
        return cls(family=FFamily.EXP)

    @classmethod
    def poly(cls, *coeffs: float) -> 'ScalarFunction':
        return cls(family=FFamily.POLY, params=tuple(coeffs))

    @property
    def spec(self) -> str:
        if not self.params:
            return self.family.value
        return f'{self.family.value}:' + ','.join(format_number(p) for p in self.params)

    @property
    def domain(self) -> Tuple[float, float, bool]:
        """(lo, hi, lo_closed)"""
        if self.family is FFamily.SQRT:
            return 0.0, math.inf, True
        if self.family is FFamily.POWER:
            return 0.0, math.inf, self.params[0] > 0
        return -math.inf, math.inf, True

    def in_domain(self, t) -> np.ndarray:
        lo, hi, lo_closed = self.domain
        arr = np.asarray(t, dtype=float)
        above = arr >= lo if lo_closed else arr > lo
        return above & (arr <= hi)

    def _polynomial(self, order: int) -> np.polynomial.Polynomial:
        poly = np.polynomial.Polynomial(self.params)
        return poly.deriv(order) if order else poly

    def _evaluate(self, t, order: int):
        arr = np.asarray(t, dtype=float)
        family = self.family
        with np.errstate(divide='ignore', invalid='ignore'):
            if family is FFamily.AFFINE:
                a, b = self.params
                values = (a * arr + b, np.full_like(arr, a), np.zeros_like(arr))[order]
            elif family is FFamily.SQUARE:
                values = (arr * arr, 2.0 * arr, np.full_like(arr, 2.0))[order]
            elif family is FFamily.POWER:
                p = self.params[0]
                coeff = (1.0, p, p * (p - 1.0))[order]
                values = coeff * arr ** (p - order) if coeff != 0.0 else np.zeros_like(arr)
            elif family is FFamily.SQRT:
                root = np.sqrt(arr)
                values = (root, 0.5 / root, -0.25 / (arr * root))[order]
            elif family is FFamily.EXP:
                values = np.exp(arr)
            else:
                values = self._polynomial(order)(arr)
        return _as_output(np.asarray(values, dtype=float), t)

    def __call__(self, t):
        return self._evaluate(t, 0)

    def derivative(self, t):
        return self._evaluate(t, 1)

    def second_derivative(self, t):
        return self._evaluate(t, 2)

    def ensure_nonnegative(self, interval: SpectrumInterval, samples: int = 1001):
        """
        Check f >= 0 on a uniform grid over the interval.

        Raises:
            NonNegativityError: With the first negative sample
        """
        grid = np.linspace(interval.m, interval.M, samples)
        values = self(grid)
        negative = np.flatnonzero(values < 0)
        if negative.size:
            t = grid[negative[0]]
            raise NonNegativityError(
                f'{self.spec} is negative at t={t!r}: f(t)={values[negative[0]]!r}'
            )

    def __str__(self) -> str:
        return self.spec
