"""
Sequential campaign execution using generators.
Trials are produced one at a time, so memory stays flat for long campaigns.
"""
import logging
from typing import Callable, Generator, List, Optional, Tuple

from opjensen.core.errors import OpJensenError
from opjensen.core.models import CampaignConfig, InequalityReport
from opjensen.processing.campaigns import trial_seeds
from opjensen.utils.decorators import measure_performance


logger = logging.getLogger(__name__)

PROGRESS_INTERVAL = 100

TrialOutcome = Tuple[int, int, Optional[List[InequalityReport]], Optional[Exception]]


def run_one(runner, seed: int) -> Tuple[Optional[List[InequalityReport]], Optional[Exception]]:
    """Run a trial, returning (reports, None) or (None, error)"""
    try:
        return runner.run_trial(seed), None
    except OpJensenError as e:
        logger.error(f"Trial with seed {seed} failed: {e}")
        return None, e
    except Exception as e:
        logger.exception(f"Unexpected error in trial with seed {seed}: {e}")
        return None, e


def trial_generator(runner, config: CampaignConfig) -> Generator[TrialOutcome, None, None]:
    """
    Yield (index, seed, reports, error) for every trial in seed order.

    Args:
        runner: TrialRunner or CounterexampleSearch
        config: Campaign configuration providing the seeds
    """
    for index, seed in trial_seeds(config):
        reports, error = run_one(runner, seed)
        yield index, seed, reports, error


def collect(runner, outcomes, total: int,
            callback: Optional[Callable[[InequalityReport], None]] = None):
    """Fold trial outcomes, in the order given, into the runner's summary"""
    summary = runner.new_summary()

    for index, seed, reports, error in outcomes:
        if error is not None:
            runner.record_error(summary)
        else:
            runner.record(summary, reports)
            if callback:
                for report in reports:
                    callback(report)

        # Log progress every 100 trials
        if (index + 1) % PROGRESS_INTERVAL == 0:
            logger.info(f"Completed {index + 1}/{total} trials")

    return summary


class BatchRunner:
    """
    Sequential campaign runner.
    Single-threaded; output order equals seed order.
    """

    @measure_performance
    def run(self, runner, config: CampaignConfig,
            callback: Optional[Callable[[InequalityReport], None]] = None):
        """
        Run every trial of a campaign.

        Args:
            runner: TrialRunner or CounterexampleSearch built from config
            config: Campaign configuration
            callback: Called with every report, in seed order

        Returns:
            The runner's summary (CampaignSummary or SearchResult)
        """
        logger.info(f"Starting campaign {config.target}: {config.trials} trials from seed {config.seed}")

        summary = collect(runner, trial_generator(runner, config), config.trials, callback)

        logger.info(f"Campaign {config.target} complete: {config.trials} trials")
        return summary
