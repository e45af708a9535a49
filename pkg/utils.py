"""
utils.py - Shared helpers for the road-field front analyzer

Logging helpers, the debug trace file, error types shared across modules,
bracket growth for root finding and the worker pool used for batch
evaluation.
"""

import os
import logging
from datetime import datetime
from concurrent.futures import ProcessPoolExecutor

# Import state directly
import state

logger = logging.getLogger(__name__)

THREADS_ENV = "RF_THREADS"
DEBUG_LOG_ENV = "RF_DEBUG_LOG"


# === Error Types ===
class ConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree"""


class BoundaryProximityError(RuntimeError):
    """The simulated front came too close to a truncated far boundary"""


class SolverError(RuntimeError):
    """A root or minimum could not be located for in-range input"""


# === Logging ===
def add_log_entry(msg, debug_only=False):
    """Add entry to the session log and, when enabled, to the debug file"""
    if not debug_only:
        state.log_entries.append(msg)
        logger.info(msg)

    if os.environ.get(DEBUG_LOG_ENV):
        write_debug_log(msg)


def init_debug_log():
    """Initialize a new debug log file"""
    if state.debug_log_file:
        state.debug_log_file.close()

    state.debug_log_counter += 1
    state.debug_log_entries = 0
    filename = f'rf_debug_log_{state.debug_log_counter:03d}.txt'
    state.debug_log_file = open(filename, 'w', encoding='utf-8')
    state.debug_log_file.write(f"Road-Field Debug Log File #{state.debug_log_counter}\n")
    state.debug_log_file.write(f"Created at: {datetime.now()}\n")
    state.debug_log_file.write("-" * 50 + "\n")
    state.debug_log_file.flush()


def write_debug_log(msg):
    """Write a message to the debug log, creating a new file if needed"""
    if state.debug_log_file is None:
        init_debug_log()

    timestamp = datetime.now().strftime("%H:%M:%S.%f")[:-3]
    state.debug_log_file.write(f"[{timestamp}] {msg}\n")
    state.debug_log_file.flush()
    state.debug_log_entries += 1

    if state.debug_log_entries >= state.max_log_entries_per_file:
        init_debug_log()


# === Numerical Helpers ===
def grow_bracket(func, lower, upper, target=0.0, factor=2.0, max_steps=200):
    """
    Grow the upper end of a bracket until func(upper) exceeds target

    Args:
        func: Nondecreasing scalar function
        lower: Fixed lower end, with func(lower) <= target
        upper: Initial guess for the upper end (> lower)
        target: Level to be crossed
        factor: Geometric growth factor for the distance from lower
        max_steps: Give up after this many enlargements

    Returns:
        float: an upper end with func(upper) > target

    Raises:
        SolverError: if no crossing is found within max_steps
    """
    width = upper - lower
    for _ in range(max_steps):
        if func(lower + width) > target:
            return lower + width
        width *= factor
    raise SolverError(f"Could not bracket level {target} above {lower}")


def worker_count(requested=None):
    """Number of worker processes, capped by the RF_THREADS environment variable"""
    cap = os.environ.get(THREADS_ENV)
    try:
        cap = max(1, int(cap)) if cap else None
    except ValueError:
        logging.error(f"Ignoring non-integer {THREADS_ENV}={cap!r}")
        cap = None

    workers = 1 if requested is None else max(1, int(requested))
    if requested is None and cap is not None:
        workers = cap
    if cap is not None:
        workers = min(workers, cap)
    return workers


def parallel_map(func, items, workers=None):
    """
    Map a picklable function over items, in order

    Results come back in input order whatever the worker count, so
    outputs are identical for serial and parallel runs.
    """
    items = list(items)
    workers = worker_count(workers)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
