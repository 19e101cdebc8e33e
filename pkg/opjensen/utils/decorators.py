"""
Audit and timing decorators for checks and campaign runners.
"""
import functools
import logging
import time
from contextlib import contextmanager
from typing import Callable

# Audit trail of every inequality check, separate from the app logger
audit_logger = logging.getLogger('opjensen.audit')
perf_logger = logging.getLogger('opjensen.performance')


def _describe(result) -> str:
    """Short status string for an engine result"""
    if hasattr(result, 'status'):
        return str(getattr(result.status, 'value', result.status)).upper()
    if hasattr(result, 'holds'):
        return 'HOLDS' if result.holds else 'VIOLATED'
    if isinstance(result, tuple) and result and all(hasattr(r, 'holds') for r in result):
        return 'HOLDS' if all(r.holds for r in result) else 'VIOLATED'
    return 'DONE'


def _trial_count(result) -> int:
    """Reports (plus failed trials) behind a summary or search result"""
    if hasattr(result, 'above_half'):
        return _trial_count(result.above_half) + _trial_count(result.below_half)
    return getattr(result, 'total', 0) + getattr(result, 'errors', 0)


def audit_log(func: Callable) -> Callable:
    """
    Log entry, outcome and failure of a check on 'opjensen.audit'.

    The seed keyword identifies the instance; failures are logged at ERROR
    and re-raised.

    Usage:
        @audit_log
        def mond_pecaric_check(f, h, A, x, policy, seed=None):
            ...
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        name = func.__qualname__
        seed = kwargs.get('seed')
        tag = f"{name} | seed={seed if seed is not None else '-'}"

        audit_logger.debug(f"CALL | {tag}")
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            audit_logger.error(f"FAILURE | {tag} | {type(e).__name__}: {e}")
            raise

        audit_logger.debug(f"SUCCESS | {tag} | {_describe(result)}")
        return result

    return wrapper


def measure_performance(func: Callable) -> Callable:
    """
    Time a campaign runner and record the result on the returned summary.

    Summaries and search results carry a wall_time_seconds field, which is
    overwritten with the measured time; the throughput goes to
    'opjensen.performance'.
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            perf_logger.warning(
                f"{func.__qualname__} aborted after {time.perf_counter() - start:.3f}s: {e}"
            )
            raise

        elapsed = time.perf_counter() - start
        if hasattr(result, 'wall_time_seconds'):
            result.wall_time_seconds = elapsed

        count = _trial_count(result)
        rate = count / elapsed if elapsed > 0 else float('inf')
        perf_logger.info(f"{func.__qualname__}: {count} reports in {elapsed:.3f}s ({rate:.0f}/s)")
        return result

    return wrapper


@contextmanager
def performance_context(operation_name: str):
    """
    Time a block on 'opjensen.performance'.

    Usage:
        with performance_context("registry filter"):
            admissible_functions(h, interval)
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        perf_logger.debug(f"{operation_name}: {time.perf_counter() - start:.3f}s")
