"""
Per-trial dispatch for verification campaigns.

A TrialRunner is built once from a CampaignConfig and turns a trial seed
into the reports of the selected target. Instances depend on the seed
alone, so trials can run in any order or in parallel.
"""
import logging
from typing import Iterator, List, Optional, Tuple

import numpy as np

from opjensen.core.coefficients import (
    admissible_functions,
    check_h_convex,
    is_h_over_t_decreasing,
)
from opjensen.core.converse import (
    PiecewiseC2Function,
    compute_constants,
    converse_check,
    multi_converse_check,
    refine_subdivision,
)
from opjensen.core.errors import ConfigError
from opjensen.core.functions import HFunction, ScalarFunction
from opjensen.core.inequalities import (
    classical_jensen_check,
    endpoint_bound_check,
    hermite_hadamard_check,
    lambda_pointwise_check,
    mond_pecaric_check,
    multi_operator_check,
    refinement_check,
    reports_from,
    weighted_multi_check,
)
from opjensen.core.models import (
    MAX_DIM,
    CampaignConfig,
    CampaignSummary,
    CoefficientPolicy,
    ConverseConstants,
    HermitianMatrix,
    InequalityReport,
    SearchResult,
    SpectrumInterval,
    UnitVector,
)
from opjensen.core.parsers import parse_f, parse_h, parse_policy
from opjensen.core.spectral import (
    barycenter_instance,
    boundary_instance,
    random_family,
    random_instance,
    random_operator,
    random_unit,
    random_weights,
)
from opjensen.utils.decorators import performance_context


logger = logging.getLogger(__name__)

REGISTRY = 'registry'

# Targets whose inequality presumes f is h-convex
H_CONVEX_TARGETS = ('thm0', 'thm1', 'thm1-paper-literal', 'lambda', 'thm3', 'hh', 'thm6', 'cor6')
CONVERSE_TARGETS = ('thm5', 'cor7')
MULTI_TARGETS = ('thm6', 'cor6', 'cor7')
# Targets that need at least two eigenvalues
PAIRED_TARGETS = ('thm3', 'hh')

DEFAULT_LAMBDA = 0.5


def require_h_convex(f: ScalarFunction, h: HFunction, interval: SpectrumInterval, seed: int):
    """
    Reject f before any trial runs when the sampled oracle finds an
    h-convexity violation on the working interval.

    Raises:
        ConfigError: With the violating (u, v, lambda)
    """
    witness = check_h_convex(f, h, interval, seed=seed)
    if not witness.holds:
        v = witness.violation
        raise ConfigError(
            f'{f.spec} is not {h.spec}-convex on {interval}: '
            f'u={v.u!r}, v={v.v!r}, lambda={v.lam!r} gives {v.lhs!r} > {v.rhs!r}'
        )


def trial_seeds(config: CampaignConfig) -> Iterator[Tuple[int, int]]:
    """Yield (trial index, seed) with seed = config.seed + index"""
    for index, seed in enumerate(config.seeds):
        yield index, seed


class TrialRunner:
    """
    Runs one trial of a campaign target.

    Parsing, the h-convexity filter and converse constants are resolved
    once at construction; run_trial only builds the seeded instance.
    """

    def __init__(self, config: CampaignConfig):
        """
        Args:
            config: Validated campaign configuration

        Raises:
            ConfigError: If f fails the h-convexity check for an h-convex target
        """
        self.config = config
        self.interval = config.interval
        self.h = HFunction.identity() if config.target == 'thm0' else parse_h(config.h)
        self.policy = self._resolve_policy(config)
        self.functions = self._resolve_functions(config)
        self.constants: Optional[ConverseConstants] = None
        self.piecewise: Optional[PiecewiseC2Function] = None

        if config.target in CONVERSE_TARGETS:
            self._prepare_converse()

    @staticmethod
    def _resolve_policy(config: CampaignConfig) -> CoefficientPolicy:
        if config.target == 'thm1-paper-literal':
            return CoefficientPolicy.paper_literal()
        if config.target == 'lambda':
            return CoefficientPolicy.pointwise(config.lam or DEFAULT_LAMBDA)
        return parse_policy(config.policy)

    def _resolve_functions(self, config: CampaignConfig) -> List[ScalarFunction]:
        if config.f == REGISTRY:
            with performance_context(f'registry filter for {self.h.spec}'):
                functions = admissible_functions(self.h, self.interval)
            if not functions:
                raise ConfigError(f'No registry function is {self.h.spec}-convex on {self.interval}')
            logger.info(
                f"Registry functions admitted for {self.h.spec}: "
                f"{', '.join(f.spec for f in functions)}"
            )
            return functions

        f = parse_f(config.f)
        if config.target in H_CONVEX_TARGETS and not config.skip_convexity_check:
            require_h_convex(f, self.h, self.interval, config.seed)
        return [f]

    def _prepare_converse(self):
        f = self.functions[0]
        if self.config.knots:
            self.piecewise = PiecewiseC2Function.with_knots(f, self.interval, self.config.knots)
        elif self.config.refine:
            self.piecewise = refine_subdivision(f, self.interval)
        else:
            self.piecewise = PiecewiseC2Function.trivial(f, self.interval)
        self.constants = compute_constants(self.piecewise, self.h, self.policy)

    def new_summary(self) -> CampaignSummary:
        return CampaignSummary(target=self.config.target)

    def record(self, summary: CampaignSummary, reports: List[InequalityReport]):
        for report in reports:
            summary.add_report(report)

    def record_error(self, summary: CampaignSummary):
        summary.add_error()

    def dimension(self, seed: int) -> int:
        """Operator size for a trial, cycling through the configured range"""
        n_min, n_max = self.config.n_min, self.config.n_max
        n = n_min + seed % (n_max - n_min + 1)
        if self.config.target in PAIRED_TARGETS:
            n = max(n, 2)
        if self.config.target in MULTI_TARGETS:
            n = min(n, MAX_DIM // self.config.operators)
        return n

    def instance(self, seed: int) -> Tuple[HermitianMatrix, UnitVector]:
        if self.config.boundary_instance:
            return boundary_instance()
        return random_instance(self.dimension(seed), self.interval, seed)

    def run_trial(self, seed: int) -> List[InequalityReport]:
        """All reports of one trial, one per admitted f"""
        reports = []
        for f in self.functions:
            reports.extend(reports_from(self._dispatch(f, seed)))
        return reports

    def _dispatch(self, f: ScalarFunction, seed: int):
        target = self.config.target
        override = self.config.override_positivity
        h, policy = self.h, self.policy

        if target == 'thm0':
            A, x = self.instance(seed)
            return classical_jensen_check(f, A, x, override=override, seed=seed)
        if target in ('thm1', 'thm1-paper-literal'):
            A, x = self.instance(seed)
            return mond_pecaric_check(f, h, A, x, policy, override=override, seed=seed)
        if target == 'lambda':
            A, x = self.instance(seed)
            return lambda_pointwise_check(f, h, A, x, policy.lam, override=override, seed=seed)
        if target == 'refine':
            A, x = self.instance(seed)
            return refinement_check(f, h, A, x, override=override, seed=seed)
        if target == 'thm3':
            A, x = self.instance(seed)
            return endpoint_bound_check(f, h, A, x, policy, override=override, seed=seed)
        if target == 'hh':
            return self._hermite_hadamard(f, seed)
        if target == 'thm6':
            As, xs = random_family(self.config.operators, self.dimension(seed), self.interval, seed)
            return multi_operator_check(f, h, As, xs, policy, override=override, seed=seed)
        if target == 'cor6':
            As, x, ps = self._weighted_instance(seed)
            return weighted_multi_check(f, h, As, x, ps, policy, override=override, seed=seed)
        if target == 'thm5':
            A, x = self.instance(seed)
            return converse_check(self.piecewise, h, A, x, policy, constants=self.constants,
                                  override=override, seed=seed)
        if target == 'cor7':
            As, xs = random_family(self.config.operators, self.dimension(seed), self.interval, seed)
            return multi_converse_check(self.piecewise, h, As, xs, policy,
                                        constants=self.constants, override=override, seed=seed)

        raise ConfigError(f'Unknown target {target!r}')

    def _hermite_hadamard(self, f: ScalarFunction, seed: int):
        m, M = self.interval.m, self.interval.M
        if self.config.p is not None:
            p, q = self.config.p, self.config.q
        else:
            p, q = np.random.default_rng([seed, 1]).uniform(0.0, 1.0, 2)
        barycenter = (p * m + q * M) / (p + q)
        A, x = barycenter_instance(self.dimension(seed), self.interval, barycenter, seed)
        return hermite_hadamard_check(f, self.h, A, x, float(p), float(q), self.policy,
                                      interval=self.interval,
                                      override=self.config.override_positivity, seed=seed)

    def _weighted_instance(self, seed: int):
        rng = np.random.default_rng(seed)
        n = self.dimension(seed)
        As = [random_operator(n, self.interval, rng) for _ in range(self.config.operators)]
        x = random_unit(n, rng)
        return As, x, random_weights(self.config.operators, rng)


class CounterexampleSearch:
    """
    Falsification of the pointwise inequality with coefficient h(lambda)/lambda.

    Every trial draws one lambda in [1/2, 1) and one in (0, 1/2]. Violations
    above 1/2 are recorded; below 1/2 none may occur when h(t)/t is
    decreasing.
    """

    def __init__(self, config: CampaignConfig):
        """
        Raises:
            ConfigError: If f fails the h-convexity check, unless skipped
        """
        self.config = config
        self.f = parse_f(config.f)
        self.h = parse_h(config.h)
        self.interval = config.interval
        if not config.skip_convexity_check:
            require_h_convex(self.f, self.h, self.interval, config.seed)
        self.decreasing = is_h_over_t_decreasing(self.h)

    def instance(self, seed: int) -> Tuple[HermitianMatrix, UnitVector]:
        if self.config.boundary_instance:
            return boundary_instance()
        n_min, n_max = self.config.n_min, self.config.n_max
        return random_instance(n_min + seed % (n_max - n_min + 1), self.interval, seed)

    @staticmethod
    def lambdas(seed: int) -> Tuple[float, float]:
        """(lambda in [1/2, 1), lambda in (0, 1/2])"""
        r_above, r_below = np.random.default_rng([seed, 2]).random(2)
        return 0.5 + 0.5 * r_above, 0.5 - 0.5 * r_below

    def run_trial(self, seed: int) -> List[InequalityReport]:
        A, x = self.instance(seed)
        override = self.config.override_positivity
        return [
            lambda_pointwise_check(self.f, self.h, A, x, lam, override=override, seed=seed)
            for lam in self.lambdas(seed)
        ]

    def new_summary(self) -> SearchResult:
        return SearchResult(
            above_half=CampaignSummary(target='search-above-half'),
            below_half=CampaignSummary(target='search-below-half'),
            h_over_t_decreasing=self.decreasing
        )

    def record(self, summary: SearchResult, reports: List[InequalityReport]):
        above, below = reports
        summary.above_half.add_report(above)
        summary.below_half.add_report(below)
        if not below.holds and self.decreasing:
            logger.error(
                f'Violation below lambda = 1/2 although h(t)/t is decreasing: '
                f'{below.policy}, seed {below.witness.seed}'
            )

    def record_error(self, summary: SearchResult):
        # A failed trial yields neither report
        summary.above_half.add_error()
        summary.below_half.add_error()
