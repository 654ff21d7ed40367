"""Discrete-event simulation of the update-and-decision pipeline.

Updates arrive as a Poisson stream and are served one at a time, either
by a length-1 blocking queue (arrivals during service are discarded) or
by an FCFS infinite-buffer queue. Decisions occur at Poisson or periodic
epochs; at each decision epoch the sampled age is the time since the
generation of the most recently *departed* update. An update is counted
as missed when no decision epoch falls inside its usage interval, i.e.
between its own departure and the next departure.

The engine materializes the raw event streams (every arrival, including
dropped ones) and resolves the queue dynamics exactly:

* blocking: the next successful update is the first arrival after the
  in-service departure, found by an index chase over the arrival array;
* FCFS: departure times follow the max-plus recurrence
  dep[k] = max(arr[k], dep[k-1]) + s[k], evaluated with a running max.

Equal timestamps are resolved as departure, then decision, then arrival,
so a decision coinciding with a departure sees the just-departed update
and an arrival coinciding with a departure finds a free server.

Measurement discards every decision before the first departure (the age
is undefined there) plus ``warmup`` further decisions, then counts
exactly ``horizon`` decisions. Missing-probability accounting uses only
inter-departure intervals completed inside the measurement window; the
final in-flight update is excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import (DECISION_PERIODIC, DECISION_POISSON, SERVICE_GENERAL,
                     ArrivalModel, DecisionModel, RngStream, ServiceModel,
                     sample_n)

BLOCKING1 = "blocking1"
FCFS_INFINITE = "fcfs"

# Tie-breaking ranks for the merged event log.
_EVENT_RANK = {"departure": 0, "decision": 1, "arrival": 2, "drop": 2}


@dataclass(frozen=True)
class SystemSpec:
    """Full queue description: arrivals, service, decisions, discipline."""

    arrival: ArrivalModel
    service: ServiceModel
    decision: DecisionModel
    discipline: str = BLOCKING1

    def __post_init__(self) -> None:
        if self.discipline not in (BLOCKING1, FCFS_INFINITE):
            raise ValueError(f"unknown discipline: {self.discipline!r}")

    @property
    def rho(self) -> float:
        return self.arrival.lam * self.service.mean


@dataclass(frozen=True)
class SimRunConfig:
    """One run: system, measured decision count, warm-up, and seed.

    ``horizon`` decisions are measured after the warm-up is discarded;
    the run simulates slightly past the last measured decision.
    """

    spec: SystemSpec
    horizon: int
    warmup: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        if self.horizon <= self.warmup:
            raise ValueError("horizon too small: must exceed warmup")


@dataclass(frozen=True)
class SimEstimate:
    """Empirical averages with counts and standard errors.

    For the blocking discipline the counts satisfy
    n_generated = n_successful + n_dropped over the measurement window,
    and missing_prob = n_missed_updates / n_successful. For FCFS,
    n_successful counts updates whose usage interval completed in-window
    (queued arrivals may enter the window generated-count without a
    completed interval, so the blocking conservation law does not apply).
    """

    avg_aud: float
    missing_prob: float
    n_decisions: int
    n_generated: int
    n_successful: int
    n_dropped: int
    n_missed_updates: int
    aud_stderr: float
    pmis_stderr: float


@dataclass
class EventTrace:
    """Chronological event log: (event_type, time, value) records.

    Values: update index for arrival/departure records, -1.0 for dropped
    arrivals, and the sampled age for decision records (NaN for decisions
    before the first departure, where the age is undefined).
    """

    records: list[tuple[str, float, float]]

    def times(self, event_type: str) -> np.ndarray:
        return np.array([t for k, t, _ in self.records if k == event_type])

    def values(self, event_type: str) -> np.ndarray:
        return np.array([v for k, t, v in self.records if k == event_type])

    def aud_samples(self) -> np.ndarray:
        """Defined age samples, one per decision at or after the first departure."""
        vals = self.values("decision")
        return vals[~np.isnan(vals)] if vals.size else vals

    def to_lines(self) -> list[str]:
        return [f"{k}\t{t!r}\t{v!r}" for k, t, v in self.records]


@dataclass
class _Paths:
    """Raw sample paths of one run, sufficient for estimation and tracing."""

    arrivals: np.ndarray        # every arrival epoch
    successful: np.ndarray      # indices into arrivals, in service order
    arr_succ: np.ndarray        # arrival epochs of successful updates
    departures: np.ndarray      # departure epochs, same order
    decisions: np.ndarray       # decision epochs
    skip: int                   # decisions strictly before the first departure
    is_blocking: bool


def _chase_blocking(arrivals: np.ndarray, services: np.ndarray) -> np.ndarray:
    """Indices of successful arrivals under the blocking discipline.

    next_free[i] is the first arrival index at or after the departure of
    update i (ties: the departure happens first, so an arrival exactly at
    a departure enters service). Starting from index 0, the chain of
    next_free jumps visits exactly the successful arrivals.
    """
    next_free = np.searchsorted(arrivals, arrivals + services, side="left")
    hops = next_free.tolist()
    out: list[int] = []
    append = out.append
    i, n = 0, len(hops)
    while i < n:
        append(i)
        i = hops[i]
    return np.asarray(out, dtype=np.int64)


def _fcfs_departures(arrivals: np.ndarray, services: np.ndarray) -> np.ndarray:
    """FCFS departure epochs via the max-plus recurrence, vectorized."""
    csum = np.cumsum(services)
    return np.maximum.accumulate(arrivals - (csum - services)) + csum


def _build_paths(config: SimRunConfig, substream_id: int,
                 n_decisions_needed: int) -> _Paths:
    spec = config.spec
    lam = spec.arrival.lam
    nu = spec.decision.nu
    is_blocking = spec.discipline == BLOCKING1

    if spec.service.kind == SERVICE_GENERAL and spec.service.sampler is None:
        raise ValueError("no sampler available for moment-only service model")
    if not is_blocking and spec.rho >= 1.0:
        raise ValueError(f"FCFS infinite queue is unstable at rho={spec.rho:g}")

    g_arrival, g_service, g_decision, g_phase = \
        RngStream(config.seed, substream_id).lanes(4)

    # Slack covers the decisions expected before the first departure;
    # deterministic extension below handles the rare shortfall.
    mean_y = 1.0 / lam + spec.service.mean
    slack = int(4.0 * nu * mean_y) + 16

    def more_decisions(current: Optional[np.ndarray], count: int) -> np.ndarray:
        if spec.decision.kind == DECISION_POISSON:
            block = np.cumsum(g_decision.exponential(1.0 / nu, count))
        else:
            block = (1.0 + np.arange(count, dtype=float)) / nu
        if current is None:
            if spec.decision.kind == DECISION_PERIODIC:
                phase = (spec.decision.phase if spec.decision.phase is not None
                         else float(g_phase.uniform(0.0, 1.0 / nu)))
                return phase + np.concatenate([[0.0], block[:-1]])
            return block
        return np.concatenate([current, current[-1] + block])

    decisions = more_decisions(None, n_decisions_needed + slack)
    arrivals = np.empty(0)
    services = np.empty(0)
    # Index of the last decision the measurement can touch, assuming no
    # decisions are lost before the first departure; corrected once the
    # first departure (hence the true skip count) is known.
    target = n_decisions_needed - 1
    for _ in range(64):
        t_need = decisions[target]
        while arrivals.size == 0 or arrivals[-1] <= t_need:
            t_last = arrivals[-1] if arrivals.size else 0.0
            n_more = int(lam * (t_need - t_last)
                         + 6.0 * math.sqrt(lam * max(t_need - t_last, 1.0))) + 64
            gaps = sample_n(spec.arrival, g_arrival, n_more)
            arrivals = np.concatenate([arrivals, t_last + np.cumsum(gaps)])
            services = np.concatenate(
                [services, sample_n(spec.service, g_service, n_more)])

        if is_blocking:
            successful = _chase_blocking(arrivals, services)
            arr_succ = arrivals[successful]
            departures = arr_succ + services[successful]
        else:
            successful = np.arange(arrivals.size, dtype=np.int64)
            arr_succ = arrivals
            departures = _fcfs_departures(arrivals, services)

        skip = int(np.searchsorted(decisions, departures[0], side="left"))
        needed_end = skip + n_decisions_needed - 1
        if needed_end >= decisions.size:
            decisions = more_decisions(decisions,
                                       needed_end - decisions.size + 1 + slack)
        if needed_end <= target:
            return _Paths(arrivals, successful, arr_succ, departures,
                          decisions, skip, is_blocking)
        target = needed_end
    raise RuntimeError("simulation failed to cover the decision horizon")


def _batch_stderr(samples: np.ndarray) -> float:
    """Standard error of an autocorrelated mean via batch means."""
    n = samples.size
    if n < 2:
        return float("nan")
    n_batches = 64 if n >= 2048 else (16 if n >= 64 else 0)
    if n_batches:
        usable = n - n % n_batches
        means = samples[:usable].reshape(n_batches, -1).mean(axis=1)
        return float(means.std(ddof=1) / math.sqrt(n_batches))
    return float(samples.std(ddof=1) / math.sqrt(n))


def _count_in(sorted_times: np.ndarray, lo: float, hi: float) -> int:
    """Number of entries in the half-open window [lo, hi)."""
    return int(np.searchsorted(sorted_times, hi, side="left")
               - np.searchsorted(sorted_times, lo, side="left"))


def _estimate(paths: _Paths, horizon: int, warmup: int) -> SimEstimate:
    lo = paths.skip + warmup
    hi = lo + horizon
    taus = paths.decisions[lo:hi]
    t_start = paths.decisions[lo - 1] if lo > 0 else 0.0
    t_end = taus[-1]

    # Age upon each measured decision: time since the generation (arrival
    # epoch) of the most recently departed update.
    current = np.searchsorted(paths.departures, taus, side="right") - 1
    aud = taus - paths.arr_succ[current]
    avg_aud = float(aud.mean())
    aud_stderr = _batch_stderr(aud)

    # Usage intervals [dep[k], dep[k+1]) completed strictly inside the
    # measurement window; update k is missed when no decision lands there.
    kmin = int(np.searchsorted(paths.departures, t_start, side="right"))
    kmax = int(np.searchsorted(paths.departures, t_end, side="right")) - 1
    n_intervals = max(0, kmax - kmin)
    if n_intervals:
        starts = np.searchsorted(paths.decisions,
                                 paths.departures[kmin:kmax], side="left")
        ends = np.searchsorted(paths.decisions,
                               paths.departures[kmin + 1:kmax + 1], side="left")
        n_missed = int((ends == starts).sum())
        missing_prob = n_missed / n_intervals
        pmis_stderr = math.sqrt(missing_prob * (1.0 - missing_prob) / n_intervals)
        w_lo, w_hi = paths.departures[kmin], paths.departures[kmax]
        n_generated = _count_in(paths.arrivals, w_lo, w_hi)
        if paths.is_blocking:
            n_successful = _count_in(paths.arr_succ, w_lo, w_hi)
            n_dropped = n_generated - n_successful
        else:
            n_successful = n_intervals
            n_dropped = 0
    else:
        n_missed = 0
        missing_prob = float("nan")
        pmis_stderr = float("nan")
        n_generated = n_successful = n_dropped = 0

    return SimEstimate(avg_aud=avg_aud, missing_prob=missing_prob,
                       n_decisions=horizon, n_generated=n_generated,
                       n_successful=n_successful, n_dropped=n_dropped,
                       n_missed_updates=n_missed, aud_stderr=aud_stderr,
                       pmis_stderr=pmis_stderr)


def _execute(config: SimRunConfig, substream_id: int) -> SimEstimate:
    paths = _build_paths(config, substream_id,
                         config.warmup + config.horizon)
    return _estimate(paths, config.horizon, config.warmup)


def run(config: SimRunConfig) -> SimEstimate:
    """Simulate one run and estimate the average age and missing probability."""
    return _execute(config, substream_id=0)


def replicate(config: SimRunConfig, n_reps: int) -> SimEstimate:
    """Pool independent replications (substream = replication index).

    The pooled mean is the unweighted mean of the replication means
    (horizons are equal by construction) and the standard errors are
    estimated across replications; counts are summed. Deterministic
    given (seed, n_reps), and identical to :func:`run` for n_reps=1.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    estimates = [_execute(config, r) for r in range(n_reps)]
    if n_reps == 1:
        return estimates[0]
    auds = np.array([e.avg_aud for e in estimates])
    pms = np.array([e.missing_prob for e in estimates])
    return SimEstimate(
        avg_aud=float(auds.mean()),
        missing_prob=float(pms.mean()),
        n_decisions=sum(e.n_decisions for e in estimates),
        n_generated=sum(e.n_generated for e in estimates),
        n_successful=sum(e.n_successful for e in estimates),
        n_dropped=sum(e.n_dropped for e in estimates),
        n_missed_updates=sum(e.n_missed_updates for e in estimates),
        aud_stderr=float(auds.std(ddof=1) / math.sqrt(n_reps)),
        pmis_stderr=float(pms.std(ddof=1) / math.sqrt(n_reps)),
    )


def trace(config: SimRunConfig, max_events: int) -> EventTrace:
    """Event log of the first ``max_events`` records of a run.

    Intended as a diagnostic at small scale; the log starts at time zero
    and ignores the warm-up, so decisions before the first departure
    appear with a NaN age.
    """
    if max_events < 1:
        raise ValueError("max_events must be >= 1")
    paths = _build_paths(config, substream_id=0,
                         n_decisions_needed=max(16, max_events))

    succ_set = paths.successful
    succ_rank = {int(i): k for k, i in enumerate(succ_set)}
    records: list[tuple[str, float, float]] = []
    for i, t in enumerate(paths.arrivals):
        k = succ_rank.get(i)
        if k is None:
            records.append(("drop", float(t), -1.0))
        else:
            records.append(("arrival", float(t), float(k)))
    for k, t in enumerate(paths.departures):
        records.append(("departure", float(t), float(k)))
    current = np.searchsorted(paths.departures, paths.decisions, side="right") - 1
    for j, tau in enumerate(paths.decisions):
        if current[j] < 0:
            records.append(("decision", float(tau), float("nan")))
        else:
            records.append(("decision", float(tau),
                            float(tau - paths.arr_succ[current[j]])))
    records.sort(key=lambda r: (r[1], _EVENT_RANK[r[0]]))
    return EventTrace(records[:max_events])
