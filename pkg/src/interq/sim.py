"""Discrete-event simulation of workloads against a platform.

Jobs enter at their arrival times; each arrival burst is scheduled by the
configured policy over the still-waiting jobs and then executed by the
shared event engine with a seeded stochastic pair sampler. Identical
(workload, platform, config, seed) inputs reproduce bit-identical traces.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import NotQuantumLink
from .model import (
    Fragment,
    JobSpec,
    LinkKind,
    LinkProfile,
    Platform,
    Schedule,
    validate_platform,
)
from .metrics import MetricsReport, build_metrics
from .scheduler import SchedulerConfig, SchedulerResult, build_schedule
from .timeline import _PRIO, Event, OpRecord, realize


class RngStream:
    """Seeded root for named substreams; one substream per stochastic
    process keeps draws stable when unrelated processes are added."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, random.Random] = {}

    def stream(self, name: str) -> random.Random:
        if name not in self._streams:
            self._streams[name] = random.Random(f"{self.seed}/{name}")
        return self._streams[name]


def geometric_attempts(rng: random.Random, succ_prob: float) -> int:
    """Number of Bernoulli trials until the first success (inverse CDF)."""
    if succ_prob >= 1.0:
        return 1
    u = rng.random()
    return int(math.log(1.0 - u) / math.log(1.0 - succ_prob)) + 1


def generate_pair(link: LinkProfile, rng: random.Random) -> int:
    """Delay until a Bell pair is ready on `link`: retries until success,
    each attempt costing one generation period."""
    if link.kind is not LinkKind.QUANTUM:
        raise NotQuantumLink(f"link {link.id} is not quantum")
    return geometric_attempts(rng, link.succ_prob) * link.pair_time


def remote_op_duration(link: LinkProfile, rng: random.Random) -> int:
    """Full remote-op pipeline delay: pair generation, Bell measurement,
    correction."""
    return generate_pair(link, rng) + link.bell_op_time + link.corr_time


@dataclass(frozen=True)
class SimResult:
    schedule: Schedule                 # as executed
    trace: tuple[Event, ...]
    metrics: MetricsReport
    ops: tuple[OpRecord, ...]
    planned: tuple[SchedulerResult, ...]   # one scheduling outcome per arrival burst


def _bursts(workload: Sequence[JobSpec]) -> list[tuple[int, list[JobSpec]]]:
    ordered = sorted(range(len(workload)), key=lambda i: (workload[i].arrival_ns, i))
    bursts: list[tuple[int, list[JobSpec]]] = []
    for i in ordered:
        job = workload[i]
        if bursts and bursts[-1][0] == job.arrival_ns:
            bursts[-1][1].append(job)
        else:
            bursts.append((job.arrival_ns, [job]))
    return bursts


def _merge_trace(events: Iterable[Event]) -> tuple[Event, ...]:
    ordered = sorted(enumerate(events), key=lambda item: (item[1].time_ns,
                                                          _PRIO[item[1].kind],
                                                          item[0]))
    return tuple(Event(e.time_ns, e.kind, e.payload, seq)
                 for seq, (_, e) in enumerate(ordered))


def format_trace(trace: Iterable[Event]) -> str:
    """Line-delimited trace with a stable field order: time, kind, payload."""
    return "".join(f"{e.time_ns}\t{e.kind}\t{e.payload}\n" for e in trace)


def run_simulation(workload: Sequence[JobSpec], platform: Platform,
                   config: SchedulerConfig, seed: int = 0) -> SimResult:
    """Schedule and execute a workload; returns the executed schedule, the
    full event trace, and the metrics report."""
    validate_platform(platform)
    ids = [job.id for job in workload]
    if len(set(ids)) != len(ids):
        raise ValueError("workload job ids must be unique")

    rng = RngStream(seed)

    def stochastic_sampler(link: LinkProfile) -> int:
        return generate_pair(link, rng.stream(f"pair/{link.id}"))

    entries = []
    reservations = []
    precedence = []
    fragments: list[Fragment] = []
    omitted: list[str] = []
    events: list[Event] = []
    ops: list[OpRecord] = []
    planned: list[SchedulerResult] = []
    module_free: dict[str, int] = {}
    link_free: dict[str, int] = {}

    for job in workload:
        events.append(Event(job.arrival_ns, "JOB_ARRIVAL", f"job={job.id}", 0))

    for burst_time, burst_jobs in _bursts(workload):
        result = build_schedule(burst_jobs, platform, config)
        planned.append(result)
        omitted.extend(result.schedule.omitted)
        if not result.schedule.entries:
            continue
        burst_fragments = result.schedule.fragment_map()
        arrivals = {job.id: job.arrival_ns for job in burst_jobs}
        arrival_by_fragment = {f.id: arrivals[f.origin_job]
                               for f in burst_fragments.values()}
        groups = [entry.group for entry in result.schedule.entries]
        executed = realize(groups, burst_fragments, platform, arrival_by_fragment,
                           stochastic_sampler, module_free, link_free)
        entries.extend(executed.entries)
        reservations.extend(executed.link_reservations)
        precedence.extend(executed.precedence_edges)
        fragments.extend(result.schedule.fragments)
        events.extend(executed.events)
        ops.extend(executed.ops)
        module_free.update(executed.module_free)
        link_free.update(executed.link_free)

    schedule = Schedule(
        entries=tuple(entries),
        link_reservations=tuple(reservations),
        precedence_edges=tuple(precedence),
        fragments=tuple(fragments),
        omitted=tuple(omitted),
    )
    trace = _merge_trace(events)
    metrics = build_metrics(schedule, workload, platform, ops)
    return SimResult(schedule=schedule, trace=trace, metrics=metrics,
                     ops=tuple(ops), planned=tuple(planned))
