"""opjensen - Processing Package"""

from opjensen.processing.batch import BatchRunner
from opjensen.processing.campaigns import CounterexampleSearch, TrialRunner
from opjensen.processing.concurrent import ConcurrentRunner

__all__ = [
    'BatchRunner',
    'ConcurrentRunner',
    'CounterexampleSearch',
    'TrialRunner',
]
