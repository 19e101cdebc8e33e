"""
Parsers for function, policy and interval specifiers.

Grammar: name[:arg,arg,...]. h specifiers: identity, constant:c, power:s,
reciprocal, recpower:s, tabulated:c0,c1,... (polynomial rule), plus the
class names convex, p-class, s-convex:s, godunova-levin and
s-godunova-levin:s. f specifiers: affine:a,b, square, power:p, sqrt, exp,
poly:c0,c1,...
"""
import math
import re
from typing import List, Optional, Tuple

import numpy as np

from opjensen.core.errors import ParserError
from opjensen.core.functions import HFunction, ScalarFunction, format_number
from opjensen.core.models import CoefficientPolicy


_NAME_PATTERN = re.compile(r'[a-z][a-z0-9_-]*')

# Class names resolved to (family, default argument)
_H_ALIASES = {
    'convex': ('identity', None),
    'p-class': ('constant', '1'),
    's-convex': ('power', None),
    'godunova-levin': ('reciprocal', None),
    's-godunova-levin': ('recpower', None),
}


def _split(spec: str) -> Tuple[str, Optional[str], int]:
    """Split a specifier into (name, raw arguments, offset of arguments)"""
    if spec is None or not spec.strip():
        raise ParserError('Empty specifier', spec or '', 0)

    head, sep, args = spec.partition(':')
    name = head.strip().lower()
    if not _NAME_PATTERN.fullmatch(name):
        raise ParserError(f'Invalid name {head!r}', spec, 0)

    return name, (args if sep else None), len(head) + 1


def _numbers(spec: str, args: Optional[str], offset: int) -> List[float]:
    """Parse a comma separated list of finite floats"""
    if args is None:
        return []

    values = []
    position = offset
    for token in args.split(','):
        text = token.strip()
        try:
            value = float(text)
        except ValueError:
            raise ParserError(f'Invalid number {text!r}', spec, position) from None
        if not math.isfinite(value):
            raise ParserError(f'Number must be finite, got {text!r}', spec, position)
        values.append(value)
        position += len(token) + 1

    return values


def _expect(spec: str, name: str, values: List[float], arity: int, offset: int):
    if len(values) != arity:
        raise ParserError(
            f'{name} takes {arity} argument(s), got {len(values)}',
            spec,
            offset if values else len(spec)
        )


def parse_h(spec: str) -> HFunction:
    """
    Parse an h specifier.

    Args:
        spec: e.g. "power:0.5" or "reciprocal"

    Returns:
        HFunction

    Raises:
        ParserError: With the position of the offending token
    """
    name, args, offset = _split(spec)

    if name in _H_ALIASES:
        name, default = _H_ALIASES[name]
        if args is None and default is not None:
            args = default

    values = _numbers(spec, args, offset)

    try:
        if name == 'identity':
            _expect(spec, name, values, 0, offset)
            return HFunction.identity()
        if name == 'constant':
            _expect(spec, name, values, 1, offset)
            return HFunction.constant(values[0])
        if name == 'power':
            _expect(spec, name, values, 1, offset)
            return HFunction.power(values[0])
        if name == 'reciprocal':
            _expect(spec, name, values, 0, offset)
            return HFunction.reciprocal()
        if name == 'recpower':
            _expect(spec, name, values, 1, offset)
            return HFunction.reciprocal_power(values[0])
        if name == 'tabulated':
            if not values:
                raise ParserError('tabulated needs polynomial coefficients', spec, len(spec))
            poly = np.polynomial.Polynomial(values)
            label = ','.join(format_number(v) for v in values)
            return HFunction.tabulated(poly, name=label)
    except ValueError as e:
        # Parameter range violations reported by the model
        raise ParserError(f'Invalid parameter for {name}: {e}', spec, offset) from None

    raise ParserError(f'Unknown h family {name!r}', spec, 0)


def parse_f(spec: str) -> ScalarFunction:
    """
    Parse an f specifier.

    Args:
        spec: e.g. "affine:1,0" or "poly:0,0,1"

    Returns:
        ScalarFunction

    Raises:
        ParserError: With the position of the offending token
    """
    name, args, offset = _split(spec)
    values = _numbers(spec, args, offset)

    if name == 'affine':
        _expect(spec, name, values, 2, offset)
        return ScalarFunction.affine(*values)
    if name in ('square', 'sqrt', 'exp'):
        _expect(spec, name, values, 0, offset)
        return ScalarFunction(family=name)
    if name == 'power':
        _expect(spec, name, values, 1, offset)
        return ScalarFunction.power(values[0])
    if name == 'poly':
        if not values:
            raise ParserError('poly needs at least one coefficient', spec, len(spec))
        return ScalarFunction.poly(*values)

    raise ParserError(f'Unknown f family {name!r}', spec, 0)


def parse_policy(spec: str) -> CoefficientPolicy:
    """Parse "paper", "safe" or "lambda:x" """
    name, args, offset = _split(spec)

    if name in ('paper', 'paper-literal') and args is None:
        return CoefficientPolicy.paper_literal()
    if name == 'safe' and args is None:
        return CoefficientPolicy.safe()
    if name == 'lambda':
        values = _numbers(spec, args, offset)
        _expect(spec, name, values, 1, offset)
        if not 0.0 < values[0] < 1.0:
            raise ParserError(f'lambda must lie in (0, 1), got {values[0]!r}', spec, offset)
        return CoefficientPolicy.pointwise(values[0])

    raise ParserError(f'Unknown policy {spec!r}', spec, 0)


def parse_floats(text: str) -> List[float]:
    """Parse "1,1.5,2" into floats"""
    return _numbers(text, text, 0)


def parse_interval(text: str) -> Tuple[float, float]:
    """Parse "m,M" """
    values = parse_floats(text)
    if len(values) != 2:
        raise ParserError(f'Interval takes 2 numbers, got {len(values)}', text, 0)
    return values[0], values[1]


def parse_n_range(text: str) -> Tuple[int, int]:
    """Parse "4" or "1-8" into an inclusive dimension range"""
    lo, sep, hi = text.partition('-')
    try:
        n_min = int(lo)
        n_max = int(hi) if sep else n_min
    except ValueError:
        raise ParserError(f'Invalid dimension range {text!r}', text, 0) from None
    return n_min, n_max
