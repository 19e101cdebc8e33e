"""
Tests for campaign dispatch, batch and concurrent execution and the
counterexample search.
"""
import pytest

from opjensen.core.errors import ConfigError, ParserError
from opjensen.core.functions import FIVE_FAMILY_SPECS
from opjensen.core.models import CampaignConfig, CampaignSummary
from opjensen.processing.batch import BatchRunner
from opjensen.processing.campaigns import CounterexampleSearch, TrialRunner
from opjensen.processing.concurrent import ConcurrentRunner


def run(config, runner=None):
    """Run a campaign and return (summary, reports)"""
    reports = []
    trials = TrialRunner(config)
    summary = (runner or BatchRunner()).run(trials, config, callback=reports.append)
    return summary, reports


@pytest.fixture
def thm1_config():
    """Mond-Pecaric campaign for t^2 and h = identity"""
    return CampaignConfig(target='thm1', f='square', h='identity', n_min=1, n_max=8, trials=60, seed=42)


class TestConfig:
    """Campaign configuration validation"""

    def test_unknown_target(self):
        """Targets come from a fixed list"""
        with pytest.raises(ValueError):
            CampaignConfig(target='thm9')

    def test_empty_dimension_range(self):
        """n_min must not exceed n_max"""
        with pytest.raises(ValueError):
            CampaignConfig(target='thm1', n_min=5, n_max=2)

    def test_invalid_interval(self):
        """m < M with m > 0"""
        with pytest.raises(ValueError):
            CampaignConfig(target='thm1', m=0.0, M=1.0)

    def test_p_without_q(self):
        """Barycenter weights come in pairs"""
        with pytest.raises(ValueError):
            CampaignConfig(target='hh', p=1.0)

    def test_seeds(self):
        """Trial seeds are consecutive from the base seed"""
        assert list(CampaignConfig(target='thm1', trials=3, seed=10).seeds) == [10, 11, 12]

    def test_not_h_convex(self):
        """sqrt is rejected for h = identity before any trial runs"""
        with pytest.raises(ConfigError):
            TrialRunner(CampaignConfig(target='thm1', f='sqrt', h='identity'))

    def test_skip_convexity_check(self):
        """The check can be skipped explicitly"""
        config = CampaignConfig(target='thm1', f='sqrt', h='identity', skip_convexity_check=True)
        assert TrialRunner(config).functions[0].spec == 'sqrt'

    def test_bad_specifier(self):
        """Parser errors surface at construction"""
        with pytest.raises(ParserError):
            TrialRunner(CampaignConfig(target='thm1', f='cosine'))


class TestSummary:
    """Aggregation of reports"""

    def test_counts(self, thm1_config):
        """Every report is held, violated or vacuous"""
        summary, reports = run(thm1_config)
        assert summary.total == len(reports) == 60
        assert summary.held + summary.violated + summary.vacuous == summary.total
        assert summary.clean
        assert summary.worst_slack >= -1e-9

    def test_errors_are_counted(self):
        """Trials that raise are counted and leave the summary unclean"""
        # diag(1, 0) without the positivity override fails in every trial
        config = CampaignConfig(target='thm1', f='square', h='identity', trials=5, boundary_instance=True)
        summary, reports = run(config)
        assert summary.errors == 5
        assert summary.total == 0
        assert reports == []
        assert not summary.clean

    def test_first_violation(self):
        """The first violating report is kept"""
        config = CampaignConfig(target='thm1-paper-literal', f='sqrt', h='power:0.5', trials=5,
                                override_positivity=True, boundary_instance=True)
        summary, reports = run(config)
        assert summary.violated == 5
        assert summary.first_violation == reports[0]
        assert not summary.clean

    def test_add_error(self):
        """add_error only touches the error counter"""
        summary = CampaignSummary(target='thm1')
        summary.add_error()
        assert (summary.errors, summary.total, summary.clean) == (1, 0, False)

    def test_wall_time_is_recorded(self, thm1_config):
        """measure_performance attaches the elapsed time"""
        summary, _ = run(thm1_config)
        assert summary.wall_time_seconds > 0


class TestDeterminism:
    """Output depends on the seed alone"""

    def test_trial_is_reproducible(self, thm1_config):
        """The same seed yields the same reports"""
        runner = TrialRunner(thm1_config)
        first = [r.to_json() for r in runner.run_trial(7)]
        second = [r.to_json() for r in runner.run_trial(7)]
        assert first == second

    def test_concurrent_matches_batch(self, thm1_config):
        """Thread pool output is identical to sequential output"""
        _, sequential = run(thm1_config)
        _, concurrent = run(thm1_config, ConcurrentRunner(max_workers=4))
        assert [r.to_json() for r in sequential] == [r.to_json() for r in concurrent]

    def test_dimensions_cycle(self, thm1_config):
        """n runs through the configured range"""
        runner = TrialRunner(thm1_config)
        assert [runner.dimension(seed) for seed in range(8)] == [1, 2, 3, 4, 5, 6, 7, 8]

    def test_paired_targets_need_two(self):
        """Endpoint bounds use at least 2 x 2 operators"""
        runner = TrialRunner(CampaignConfig(target='thm3', n_min=1, n_max=1))
        assert runner.dimension(0) == 2


class TestTargets:
    """Every target runs end to end on [1, 2]"""

    @pytest.mark.parametrize('target,per_trial', [
        ('thm0', 1),
        ('thm1', 1),
        ('lambda', 1),
        ('thm3', 1),
        ('hh', 3),
        ('thm6', 1),
        ('cor6', 1),
        ('thm5', 2),
        ('cor7', 2),
    ])
    def test_square_identity(self, target, per_trial):
        """t^2 with h = identity holds everywhere"""
        config = CampaignConfig(target=target, f='square', h='identity', trials=20, seed=3, lam=0.3)
        summary, reports = run(config)
        assert len(reports) == 20 * per_trial
        assert summary.clean

    def test_refine_target(self):
        """One refinement report per trial"""
        config = CampaignConfig(target='refine', f='square', h='tabulated:0,0.5', trials=20, n_min=2)
        summary, reports = run(config)
        assert len(reports) == 20
        assert summary.errors == 0

    def test_hh_fixed_weights(self):
        """Fixed p, q put every instance on the same barycenter"""
        config = CampaignConfig(target='hh', f='exp', h='identity', trials=10, p=2.0, q=1.0)
        summary, _ = run(config)
        assert summary.clean

    def test_converse_with_knots(self):
        """An interior knot makes the multiplicative converse fail somewhere"""
        config = CampaignConfig(target='thm5', f='square', h='identity', trials=200, knots=[1.5], n_min=2)
        summary, _ = run(config)
        assert summary.violated > 0

    def test_multi_dimension_cap(self):
        """Block operators stay within the size limit"""
        config = CampaignConfig(target='thm6', f='square', trials=3, n_min=60, n_max=64, operators=4)
        runner = TrialRunner(config)
        assert runner.dimension(0) == 16

    def test_registry(self):
        """Registry campaigns run every admitted function"""
        config = CampaignConfig(target='thm1', f='registry', h='identity', trials=10)
        runner = TrialRunner(config)
        summary, reports = run(config)
        assert len(reports) == 10 * len(runner.functions)
        assert summary.clean

    @pytest.mark.slow
    @pytest.mark.parametrize('h', FIVE_FAMILY_SPECS)
    def test_safe_policy_is_sound(self, h):
        """No violations for any admitted f across 1000 trials"""
        config = CampaignConfig(target='thm1', f='registry', h=h, trials=1000, policy='safe')
        summary, _ = run(config)
        assert summary.violated == 0
        assert summary.errors == 0

    @pytest.mark.slow
    def test_classical_jensen(self):
        """Coefficient 1 for convex f across 1000 trials"""
        config = CampaignConfig(target='thm0', f='exp', trials=1000)
        summary, _ = run(config)
        assert summary.clean


class TestCounterexampleSearch:
    """Pointwise inequality split at lambda = 1/2"""

    def test_lambdas(self):
        """One lambda on each side of 1/2"""
        for seed in range(20):
            above, below = CounterexampleSearch.lambdas(seed)
            assert 0.5 <= above < 1.0
            assert 0.0 < below <= 0.5

    def test_boundary_instance(self):
        """Violations above 1/2 only"""
        config = CampaignConfig(target='lambda', f='sqrt', h='power:0.5', trials=200,
                                override_positivity=True, boundary_instance=True)
        result = BatchRunner().run(CounterexampleSearch(config), config)
        assert result.h_over_t_decreasing
        assert result.above_half.violated == 200
        assert result.below_half.violated == 0
        assert result.consistent

    def test_identity_has_no_violations(self):
        """Coefficient h(lambda)/lambda = 1 for convex f"""
        config = CampaignConfig(target='lambda', f='square', h='identity', trials=100)
        result = BatchRunner().run(CounterexampleSearch(config), config)
        assert result.violations == 0
        assert result.consistent

    def test_concurrent_matches_batch(self):
        """Search output is independent of the runner"""
        config = CampaignConfig(target='lambda', f='sqrt', h='power:0.5', trials=50)
        first, second = [], []
        BatchRunner().run(CounterexampleSearch(config), config, callback=first.append)
        ConcurrentRunner(max_workers=3).run(CounterexampleSearch(config), config, callback=second.append)
        assert [r.to_json() for r in first] == [r.to_json() for r in second]

    def test_rejects_f_that_is_not_h_convex(self):
        """sqrt is concave, so the search refuses h = identity"""
        config = CampaignConfig(target='lambda', f='sqrt', h='identity', trials=50)
        with pytest.raises(ConfigError, match='sqrt is not identity-convex'):
            CounterexampleSearch(config)

    def test_skip_convexity_check(self):
        """The gate can be bypassed on request"""
        config = CampaignConfig(target='lambda', f='sqrt', h='identity', trials=50,
                                skip_convexity_check=True)
        search = CounterexampleSearch(config)
        assert search.f.spec == 'sqrt'

    def test_failed_trials_count_on_both_sides(self):
        """A trial that raises yields an error on each side of 1/2"""
        config = CampaignConfig(target='lambda', f='sqrt', h='power:0.5', trials=5,
                                boundary_instance=True)
        result = BatchRunner().run(CounterexampleSearch(config), config)
        assert result.above_half.errors == 5
        assert result.below_half.errors == 5
        assert result.above_half.total == 0
        assert result.below_half.total == 0
