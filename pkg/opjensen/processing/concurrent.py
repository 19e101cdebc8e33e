"""
Concurrent campaign execution using ThreadPoolExecutor.
Trials are partitioned by seed; results are merged back in seed order.
"""
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Dict, Optional

from opjensen.core.models import CampaignConfig, InequalityReport
from opjensen.processing.batch import collect, run_one
from opjensen.processing.campaigns import trial_seeds
from opjensen.utils.decorators import measure_performance


logger = logging.getLogger(__name__)


class ConcurrentRunner:
    """
    Thread pool campaign runner.

    Every trial builds its own instance from its seed, so workers share
    nothing but the read-only runner. Output is identical to BatchRunner.
    """

    def __init__(self, max_workers: Optional[int] = None):
        """
        Args:
            max_workers: Maximum number of worker threads (default: executor default)
        """
        self.max_workers = max_workers

    @measure_performance
    def run(self, runner, config: CampaignConfig,
            callback: Optional[Callable[[InequalityReport], None]] = None):
        """
        Run every trial of a campaign concurrently.

        Args:
            runner: TrialRunner or CounterexampleSearch built from config
            config: Campaign configuration
            callback: Called with every report, in seed order after all trials finish

        Returns:
            The runner's summary (CampaignSummary or SearchResult)
        """
        logger.info(
            f"Starting campaign {config.target}: {config.trials} trials "
            f"on {self.max_workers or 'default'} workers"
        )

        outcomes: Dict[int, tuple] = {}
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            future_to_trial = {
                executor.submit(run_one, runner, seed): (index, seed)
                for index, seed in trial_seeds(config)
            }

            # Collect results as they complete
            for future in as_completed(future_to_trial):
                index, seed = future_to_trial[future]
                reports, error = future.result()
                outcomes[index] = (index, seed, reports, error)

        # Merge in seed order
        ordered = (outcomes[index] for index in sorted(outcomes))
        summary = collect(runner, ordered, config.trials, callback)

        logger.info(f"Campaign {config.target} complete: {config.trials} trials")
        return summary
