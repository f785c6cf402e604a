"""Single-tool FIFO queue with a wall-clock up/down calendar.

The tool processes one agent at a time with a constant process time.  A
DOWN span suspends the agent in service; it resumes with its remaining
work when the tool comes back UP.  Arrivals stop at the end of the
calendar, after which the tool stays UP until the queue drains.

Two engines are provided:

``simulate_run``
    The production path.  Because service is preempt-resume and FIFO, the
    system is an ordinary D-server queue when time is measured on the
    *uptime* clock ``U(t)`` (hours of UP time elapsed since 0).  Arrivals
    are mapped to uptime, the Lindley recursion runs there, and completions
    are mapped back to wall-clock time as the earliest instant at which
    ``U`` reaches the completion uptime.

``trace_run``
    A plain next-event simulation used as a reference and for auditing.
    Events at equal timestamps are handled as: calendar transition, then
    service completion, then arrival.  A service whose remaining work hits
    zero exactly at a failure instant completes at that instant.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyScenario, HorizonMismatch, InvalidConfig
from .model import ArrivalScenario, RunResult, State, UpDownSequence


def _check_inputs(sequence: UpDownSequence, arrivals: ArrivalScenario, process_time: float):
    if not (process_time > 0 and math.isfinite(process_time)):
        raise InvalidConfig(f"process_time must be > 0, got {process_time!r}")
    if len(arrivals) == 0:
        raise EmptyScenario(f"scenario {arrivals.scenario_id} has no arrivals")
    if arrivals.horizon != sequence.total_duration:
        raise HorizonMismatch(
            f"scenario horizon {arrivals.horizon!r} != sequence duration {sequence.total_duration!r}"
        )


def uptime_at(sequence: UpDownSequence, t: np.ndarray) -> np.ndarray:
    """Cumulative UP hours on ``[0, t)`` for times inside the calendar."""
    times, uptime = sequence.calendar
    k = np.searchsorted(times, t, side="right") - 1
    k = np.minimum(k, len(sequence) - 1)
    seg_up = (k % 2 == 0) == (sequence.initial_state is State.UP)
    return uptime[k] + np.where(seg_up, t - times[k], 0.0)


def wallclock_at(sequence: UpDownSequence, u: np.ndarray) -> np.ndarray:
    """Earliest wall-clock time at which the uptime clock reaches ``u``.

    Beyond the calendar the tool is UP, so the clocks advance together.
    """
    times, uptime = sequence.calendar
    k = np.searchsorted(uptime, u, side="left")
    last = len(uptime) - 1
    kc = np.minimum(k, last)
    km1 = np.maximum(kc - 1, 0)
    exact = (k <= last) & (uptime[kc] == u)
    inside = times[km1] + (u - uptime[km1])
    beyond = times[last] + (u - uptime[last])
    return np.where(k > last, beyond, np.where(exact, times[kc], inside))


def cycle_times(sequence: UpDownSequence, arrival_times: np.ndarray, process_time: float) -> np.ndarray:
    """Per-agent cycle times (exit minus arrival), in arrival order."""
    a = np.asarray(arrival_times, dtype=np.float64)
    tau = uptime_at(sequence, a)
    steps = process_time * np.arange(a.size, dtype=np.float64)
    # c_k = max(tau_k, c_{k-1}) + p, unrolled as a running maximum
    done = steps + process_time + np.maximum.accumulate(tau - steps)
    exits = wallclock_at(sequence, done)
    # every agent holds the tool for at least p; clamp away rounding below it
    return np.maximum(exits - a, process_time)


def simulate_run(
    sequence: UpDownSequence,
    arrivals: ArrivalScenario,
    process_time: float,
    sequence_id: int = 0,
) -> RunResult:
    """Simulate one (sequence, scenario) cell and return its mean cycle time."""
    _check_inputs(sequence, arrivals, process_time)
    ct = cycle_times(sequence, arrivals.arrival_times, process_time)
    return RunResult(
        sequence_id=sequence_id,
        scenario_id=arrivals.scenario_id,
        mean_cycle_time=float(ct.mean()),
        agent_count=int(ct.size),
    )


# ---------------------------------------------------------------------------
# reference event-driven engine


@dataclass
class Trace:
    exit_times: np.ndarray
    events: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    def cycle_times(self, arrival_times) -> np.ndarray:
        return self.exit_times - np.asarray(arrival_times, dtype=np.float64)


_TRANSITION, _COMPLETION, _ARRIVAL = 0, 1, 2


def trace_run(
    sequence: UpDownSequence,
    arrival_times,
    process_time: float,
    audit: bool = False,
) -> Trace:
    """Event-by-event simulation; returns exit times and, if ``audit``, the event log.

    With ``audit`` set, each processed event is logged as
    ``(time, kind, queue_length, busy, up)`` and invariant breaches
    (idle while UP with work waiting, clock going backwards, remaining work
    outside ``(0, p]``) are collected in ``Trace.violations``.
    """
    arr = np.asarray(arrival_times, dtype=np.float64)
    n = arr.size
    times = sequence.calendar[0]
    transitions = []
    for k in range(1, len(sequence) + 1):
        new = sequence.state_at(k) if k < len(sequence) else State.UP
        if new is not sequence.state_at(k - 1):
            transitions.append((float(times[k]), new))

    exits = np.full(n, np.nan)
    up = sequence.initial_state is State.UP
    queue: deque[int] = deque()
    busy = None  # [agent, remaining work, resume time or None]
    clock = 0.0
    next_arrival = 0
    next_tr = 0
    log: list = []
    bad: list = []

    def start_next(t):
        nonlocal busy
        if up and busy is None and queue:
            busy = [queue.popleft(), process_time, t]

    while next_arrival < n or queue or busy is not None:
        t_tr = transitions[next_tr][0] if next_tr < len(transitions) else math.inf
        t_c = busy[2] + busy[1] if (busy is not None and busy[2] is not None) else math.inf
        t_a = float(arr[next_arrival]) if next_arrival < n else math.inf
        t, kind = min((t_tr, _TRANSITION), (t_c, _COMPLETION), (t_a, _ARRIVAL))
        if audit and t < clock:
            bad.append(("clock went backwards", clock, t))
        clock = t

        if kind == _TRANSITION:
            up = transitions[next_tr][1] is State.UP
            next_tr += 1
            if busy is not None:
                if up:
                    busy[2] = t
                else:
                    busy[1] -= t - busy[2]
                    busy[2] = None
                    if busy[1] <= 0.0:
                        exits[busy[0]] = t
                        busy = None
        elif kind == _COMPLETION:
            exits[busy[0]] = t
            busy = None
        else:
            queue.append(next_arrival)
            next_arrival += 1
        start_next(t)

        if audit:
            log.append((t, ("transition", "completion", "arrival")[kind], len(queue), busy is not None, up))
            if up and queue and busy is None:
                bad.append(("idle while UP with queue", t))
            if busy is not None and not (0.0 < busy[1] <= process_time):
                bad.append(("remaining work out of range", t, busy[1]))

    return Trace(exit_times=exits, events=log, violations=bad)


def simulate_run_events(
    sequence: UpDownSequence,
    arrivals: ArrivalScenario,
    process_time: float,
    sequence_id: int = 0,
) -> RunResult:
    """Same contract as :func:`simulate_run`, computed by the event engine."""
    _check_inputs(sequence, arrivals, process_time)
    tr = trace_run(sequence, arrivals.arrival_times, process_time)
    ct = tr.cycle_times(arrivals.arrival_times)
    return RunResult(sequence_id, arrivals.scenario_id, float(ct.mean()), int(ct.size))
