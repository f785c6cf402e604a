"""Measure the variability potential stored in the ordering of machine up/down events.

A historical up/down sequence is simulated on a single FIFO tool and
compared against uniformly shuffled copies of itself run on the same arrival
scenarios.  See :func:`varpot.experiment.run_experiment`.
"""

from .engine import simulate_run
from .experiment import interarrival_for_utilization, next_budget_action, run_experiment, sweep
from .model import (
    ArrivalScenario,
    EffectEstimate,
    ExperimentReport,
    Interval,
    RunResult,
    SimConfig,
    State,
    TTestTriplet,
    UpDownSequence,
    Verdict,
)
from .sequences import gen_autocorrelated, gen_iid, gen_periodic_maintenance, shuffle
from .stats import classify, effect_of_s0, family_false_positive, iid_band, ttest_triplet

__version__ = "0.1.0"
