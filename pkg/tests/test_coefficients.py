"""
Unit tests for Jensen coefficients and the sampled h-convexity check.
"""
import math

import numpy as np
import pytest

from opjensen.core.coefficients import (
    admissible_functions,
    check_h_convex,
    classify_coefficient,
    convexity_sides,
    is_h_over_t_decreasing,
    jensen_coefficient,
)
from opjensen.core.errors import NonNegativityError, PreconditionError
from opjensen.core.functions import HFunction, ScalarFunction
from opjensen.core.models import CoefficientPolicy, SpectrumInterval
from opjensen.core.parsers import parse_f, parse_h


@pytest.fixture
def interval():
    """The working interval [1, 2]"""
    return SpectrumInterval(m=1.0, M=2.0)


@pytest.fixture
def paper():
    """Infimum of h(t)/t policy"""
    return CoefficientPolicy.paper_literal()


class TestJensenCoefficient:
    """Coefficients under the three policies"""

    @pytest.mark.parametrize('spec,expected', [
        ('identity', 1.0),
        ('constant:1', 2.0),
        ('power:0.5', math.sqrt(2.0)),
        ('reciprocal', 4.0),
        ('recpower:0.5', 2.0 ** 1.5),
    ])
    def test_safe_named_families(self, spec, expected):
        """Safe coefficient 2 h(1/2) of the five families"""
        assert jensen_coefficient(parse_h(spec)) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize('s', [0.1 * k for k in range(1, 11)])
    def test_safe_matches_closed_form(self, s):
        """Closed forms agree with 2 h(1/2) for every s"""
        for h in (HFunction.power(s), HFunction.reciprocal_power(s)):
            assert classify_coefficient(h) == pytest.approx(jensen_coefficient(h), abs=1e-12)

    @pytest.mark.parametrize('spec,expected', [
        ('identity', 1.0),
        ('constant:3', 3.0),
        ('power:0.5', 1.0),
        ('reciprocal', 1.0),
        ('recpower:0.5', 1.0),
    ])
    def test_paper_literal_closed_forms(self, spec, expected, paper):
        """inf over (0, 1) of h(t)/t"""
        assert jensen_coefficient(parse_h(spec), paper) == expected

    def test_pointwise(self):
        """h(lambda)/lambda for s = 1/2 at 0.64"""
        h = parse_h('power:0.5')
        assert jensen_coefficient(h, CoefficientPolicy.pointwise(0.64)) == pytest.approx(1.25)
        assert jensen_coefficient(h, CoefficientPolicy.pointwise(0.5)) == pytest.approx(math.sqrt(2.0))

    def test_tabulated_infimum(self, paper):
        """h(t) = t/2 has h(t)/t = 1/2 everywhere"""
        assert jensen_coefficient(parse_h('tabulated:0,0.5'), paper) == pytest.approx(0.5, abs=1e-9)

    def test_tabulated_infimum_at_zero(self, paper):
        """h(t) = t^2 has infimum 0 approached as t -> 0"""
        assert jensen_coefficient(parse_h('tabulated:0,0,1'), paper) < 1e-5

    def test_tabulated_divergence(self, paper):
        """An infimum above the divergence limit is reported as infinite"""
        assert jensen_coefficient(parse_h('tabulated:1e13'), paper) == math.inf

    def test_tabulated_negative(self, paper):
        """Negative weights are rejected"""
        with pytest.raises(NonNegativityError):
            jensen_coefficient(parse_h('tabulated:-1'), paper)

    def test_tolerance_must_be_positive(self):
        """tol = 0 is a precondition failure"""
        with pytest.raises(PreconditionError):
            jensen_coefficient(HFunction.identity(), tol=0.0)


class TestClassifyCoefficient:
    """Closed-form Safe coefficients"""

    def test_constant(self):
        """2c for h = c"""
        assert classify_coefficient(HFunction.constant(1.5)) == 3.0

    def test_reciprocal(self):
        """4 for h(t) = 1/t"""
        assert classify_coefficient(HFunction.reciprocal()) == 4.0

    def test_tabulated_has_no_closed_form(self):
        """Tabulated h has no closed-form entry"""
        with pytest.raises(PreconditionError):
            classify_coefficient(parse_h('tabulated:0,1'))


class TestMonotonicity:
    """Whether h(t)/t decreases on (0, 1)"""

    @pytest.mark.parametrize('spec', ['identity', 'constant:1', 'power:0.5', 'reciprocal', 'recpower:0.5'])
    def test_named_families_decrease(self, spec):
        """All five families have decreasing h(t)/t"""
        assert is_h_over_t_decreasing(parse_h(spec))

    def test_tabulated_constant_decreases(self):
        """1/t decreases"""
        assert is_h_over_t_decreasing(parse_h('tabulated:1'))

    def test_tabulated_square_increases(self):
        """t^2 / t = t increases"""
        assert not is_h_over_t_decreasing(parse_h('tabulated:0,0,1'))


class TestConvexityCheck:
    """Sampled test of f(lam u + (1-lam) v) <= h(lam) f(u) + h(1-lam) f(v)"""

    def test_square_is_convex(self, interval):
        """t^2 passes for h = identity"""
        witness = check_h_convex(ScalarFunction.square(), HFunction.identity(), interval)
        assert witness.holds
        assert witness.violation is None

    def test_sqrt_is_s_convex(self, interval):
        """sqrt passes for h(t) = t^(1/2)"""
        assert check_h_convex(ScalarFunction.sqrt(), HFunction.power(0.5), interval).holds

    def test_sqrt_is_not_convex(self, interval):
        """sqrt fails for h = identity"""
        assert not check_h_convex(ScalarFunction.sqrt(), HFunction.identity(), interval).holds

    @pytest.mark.parametrize('spec', ['affine:1,0', 'affine:2,1', 'affine:0.5,3'])
    def test_affine_is_convex_on_any_positive_interval(self, spec):
        """Nonnegative affine f never fails for h = identity across 1000 seeds"""
        f, h = parse_f(spec), HFunction.identity()
        rng = np.random.default_rng(17)
        for seed in range(1000):
            m = float(rng.uniform(1e-3, 5.0))
            bounds = SpectrumInterval(m=m, M=m + float(rng.uniform(1e-3, 10.0)))
            assert check_h_convex(f, h, bounds, seed=seed).holds, f'seed {seed} on {bounds}'

    def test_violation_witness_replays(self, interval):
        """The reported triple violates the inequality"""
        f, h = ScalarFunction.square(), parse_h('tabulated:0,0,1')
        witness = check_h_convex(f, h, interval, seed=3)
        assert not witness.holds
        v = witness.violation
        lhs, rhs = convexity_sides(f, h, v.u, v.v, v.lam)
        assert lhs == pytest.approx(v.lhs)
        assert rhs == pytest.approx(v.rhs)
        assert lhs > rhs

    def test_deterministic(self, interval):
        """The same seed reports the same witness"""
        f, h = ScalarFunction.square(), parse_h('tabulated:0,0,1')
        assert check_h_convex(f, h, interval, seed=9) == check_h_convex(f, h, interval, seed=9)

    def test_negative_f(self, interval):
        """f must be nonnegative on the interval"""
        with pytest.raises(NonNegativityError):
            check_h_convex(ScalarFunction.affine(1.0, -5.0), HFunction.identity(), interval)

    def test_admissible_functions(self, interval):
        """Registry filter keeps the convex functions for h = identity"""
        specs = [f.spec for f in admissible_functions(HFunction.identity(), interval)]
        assert 'square' in specs
        assert 'exp' in specs
        assert 'affine:1,0' in specs
        assert 'sqrt' not in specs

    def test_admissible_skips_negative(self, interval):
        """Negative registry entries are skipped, not raised"""
        specs = ['affine:1,-5', 'square']
        admitted = admissible_functions(HFunction.identity(), interval, specs=specs)
        assert [f.spec for f in admitted] == ['square']

    def test_p_class_admits_sqrt(self, interval):
        """Every nonnegative convex or concave f is in the P class"""
        admitted = admissible_functions(parse_h('p-class'), interval)
        assert parse_f('sqrt') in admitted
