"""Scheduling policies: greedy communication-aware grouping with an
improvement loop, and a serial round-robin baseline.

The improvement loop builds an initial grouped schedule, then repeatedly
offers each still-whole job its partition candidates; a candidate is adopted
only when the rescheduled objective strictly decreases, so the loop
terminates (each job is cut at most once, each acceptance lowers a bounded
objective, and a round cap backstops everything).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .costs import check_group_feasible, fragment_runtime, group_cost, schedule_objective
from .errors import UnplaceableUnit
from .model import (
    CostWeights,
    Fragment,
    Group,
    JobSpec,
    Platform,
    Schedule,
    validate_platform,
)
from .partition import intercomm_modes, whole_job_fragment
from .timeline import PairSampler, expected_pair_sampler, realize


class Policy(str, Enum):
    INTERQ = "interq"
    SERIAL_RR = "serial-rr"


@dataclass(frozen=True)
class SchedulerConfig:
    weights: CostWeights = CostWeights()
    policy: Policy = Policy.INTERQ
    max_improvement_rounds: int = 64

    def __post_init__(self):
        if self.max_improvement_rounds < 1:
            raise ValueError("max_improvement_rounds must be >= 1")


@dataclass(frozen=True)
class SchedulerResult:
    schedule: Schedule
    objective: float
    objective_trace: tuple[float, ...]   # initial objective, then each accepted value
    accepted: tuple[str, ...]            # job ids whose repartition was adopted
    rounds: int


def _min_runtime(fragment: Fragment, platform: Platform) -> float:
    feasible = [m for m in platform.modules if m.capacity >= fragment.qubits]
    if not feasible:
        return float("inf")
    return min(fragment_runtime(fragment, m) for m in feasible)


def sort_by_runtime(units: Sequence[Fragment], platform: Platform) -> tuple[Fragment, ...]:
    """Units in descending estimated runtime on their fastest feasible
    module; ties break on ascending id, so any permutation of the input
    sorts identically."""
    return tuple(sorted(units, key=lambda f: (-_min_runtime(f, platform), f.id)))


def _partner_map(fragments: Mapping[str, Fragment]) -> dict[str, set[str]]:
    partners: dict[str, set[str]] = {fid: set() for fid in fragments}
    for f in fragments.values():
        for pid, _ in f.remote_pairs:
            partners[f.id].add(pid)
            if pid in partners:
                partners[pid].add(f.id)
    return partners


def partition_interq(units: Sequence[Fragment], platform: Platform,
                     weights: CostWeights) -> tuple[Group, ...]:
    """Greedy grouping and placement.

    Repeatedly packs the pending units onto every module (skipping units
    that break capacity, stage compatibility, or link budgets) and emits the
    candidate with the lowest communication-aware cost; score ties break on
    the module's estimated backlog, then its id, so identical modules share
    the work instead of serializing on the first one. Downstream fragments
    wait until their upstream sibling has been emitted so the mapped order
    never inverts a feed-forward edge, and remote fragments that share ops
    may not land on one module in different (time-separated) groups.
    """
    fragments = {f.id: f for f in units}
    partners_of = _partner_map(fragments)
    pending = list(sort_by_runtime(units, platform))
    modules = sorted(platform.modules, key=lambda m: m.id)
    emitted: list[Group] = []
    placed_module: dict[str, str] = {}
    backlog: dict[str, int] = {m.id: 0 for m in modules}

    while pending:
        best: tuple[tuple[float, int, str], Group] | None = None
        for module in modules:
            pack: list[Fragment] = []
            used = 0
            for unit in pending:
                if used + unit.qubits > module.capacity:
                    continue
                if any(pred not in placed_module for pred, _ in unit.precedence_in):
                    continue
                stages = {f.parent: f.stage for f in pack if f.parent is not None}
                if unit.parent is not None and stages.get(unit.parent, unit.stage) is not unit.stage:
                    continue
                if any(placed_module.get(p) == module.id for p in partners_of[unit.id]):
                    continue
                candidate = Group(fragments=tuple(f.id for f in pack) + (unit.id,),
                                  module=module.id)
                if not check_group_feasible(candidate, fragments, platform):
                    continue
                pack.append(unit)
                used += unit.qubits
            if not pack:
                continue
            group = Group(fragments=tuple(f.id for f in pack), module=module.id)
            score = group_cost(group, fragments, platform, weights, placed_module).total
            key = (score, backlog[module.id], module.id)
            if best is None or key < best[0]:
                best = (key, Group(fragments=group.fragments, module=module.id, score=score))
        if best is None:
            stuck = ", ".join(f.id for f in pending)
            raise UnplaceableUnit(f"no module can host any of: {stuck}")
        group = best[1]
        emitted.append(group)
        members = set(group.fragments)
        module = platform.module(group.module)
        backlog[group.module] += max(
            fragment_runtime(fragments[fid], module) for fid in group.fragments
        )
        for fid in group.fragments:
            placed_module[fid] = group.module
        pending = [f for f in pending if f.id not in members]
    return tuple(emitted)


def map_groups(groups: Sequence[Group], fragments: Mapping[str, Fragment],
               platform: Platform, arrival_ns: Mapping[str, int] | None = None,
               sampler: PairSampler = expected_pair_sampler,
               module_free: Mapping[str, int] | None = None,
               link_free: Mapping[str, int] | None = None) -> Schedule:
    """Timed placement of grouped fragments, in nondecreasing queue order.

    Start times come from the shared event engine, so they respect module
    serialization, feed-forward delays, and link parallelism exactly as the
    simulator will realize them.
    """
    result = realize(groups, fragments, platform, arrival_ns or {}, sampler,
                     module_free, link_free)
    ordered = [fragments[fid] for g in groups for fid in g.fragments]
    return Schedule(
        entries=result.entries,
        link_reservations=result.link_reservations,
        precedence_edges=result.precedence_edges,
        fragments=tuple(ordered),
        omitted=(),
    )


def _fits_somewhere(fragment: Fragment, platform: Platform) -> bool:
    return any(fragment.qubits <= m.capacity for m in platform.modules)


def _build(units: Mapping[str, tuple[Fragment, ...]], queue: Sequence[JobSpec],
           platform: Platform, weights: CostWeights,
           arrivals: Mapping[str, int]) -> tuple[Schedule, float]:
    pool = [f for job in queue if job.id in units for f in units[job.id]]
    groups = partition_interq(pool, platform, weights)
    fragments = {f.id: f for f in pool}
    arrival_by_fragment = {f.id: arrivals[f.origin_job] for f in pool}
    schedule = map_groups(groups, fragments, platform, arrival_by_fragment)
    return schedule, schedule_objective(schedule, platform, weights)


def schedule_interq(queue: Sequence[JobSpec], platform: Platform,
                    config: SchedulerConfig) -> SchedulerResult:
    """Adaptive scheduling: place whole jobs, cut what cannot fit, and adopt
    further cuts only when they strictly lower the schedule objective."""
    validate_platform(platform)
    weights = config.weights
    arrivals = {job.id: job.arrival_ns for job in queue}

    units: dict[str, tuple[Fragment, ...]] = {}
    omitted: list[str] = []
    for job in queue:
        if _fits_somewhere(whole_job_fragment(job), platform):
            units[job.id] = (whole_job_fragment(job),)
            continue
        candidates = intercomm_modes(job, platform)
        candidates = [c for c in candidates if all(_fits_somewhere(f, platform) for f in c)]
        if candidates:
            units[job.id] = candidates[0]
        else:
            omitted.append(job.id)

    if not units:
        return SchedulerResult(
            schedule=Schedule(entries=(), fragments=(), omitted=tuple(omitted)),
            objective=0.0, objective_trace=(0.0,), accepted=(), rounds=0,
        )

    schedule, objective = _build(units, queue, platform, weights, arrivals)
    trace = [objective]
    accepted: list[str] = []
    rounds = 0

    jobs_by_id = {job.id: job for job in queue}
    for _ in range(config.max_improvement_rounds):
        rounds += 1
        improved = False
        whole = [jid for jid, frags in units.items()
                 if len(frags) == 1 and frags[0].id == jid]
        for jid in sorted(whole, key=lambda j: (-jobs_by_id[j].qubits, j)):
            for candidate in intercomm_modes(jobs_by_id[jid], platform):
                if len(candidate) == 1 and candidate[0].id == jid:
                    continue   # the degenerate candidate changes nothing
                if not all(_fits_somewhere(f, platform) for f in candidate):
                    continue
                trial = dict(units)
                trial[jid] = candidate
                try:
                    cand_schedule, cand_objective = _build(trial, queue, platform,
                                                           weights, arrivals)
                except UnplaceableUnit:
                    continue
                if cand_objective < objective:
                    units = trial
                    schedule, objective = cand_schedule, cand_objective
                    trace.append(objective)
                    accepted.append(jid)
                    improved = True
                    break
            if improved:
                break
        if not improved:
            break

    schedule = dataclasses.replace(schedule, omitted=tuple(omitted))
    return SchedulerResult(
        schedule=schedule,
        objective=objective,
        objective_trace=tuple(trace),
        accepted=tuple(accepted),
        rounds=rounds,
    )


def schedule_serial_rr(queue: Sequence[JobSpec], platform: Platform) -> SchedulerResult:
    """Baseline: whole jobs only, one per group, dealt to modules round-robin
    in arrival order with no co-residency and no cutting. Jobs that fit no
    module are omitted and reported."""
    validate_platform(platform)
    modules = sorted(platform.modules, key=lambda m: m.id)
    order = sorted(range(len(queue)), key=lambda i: (queue[i].arrival_ns, i))

    groups: list[Group] = []
    fragments: dict[str, Fragment] = {}
    arrivals: dict[str, int] = {}
    omitted: list[str] = []
    cursor = 0
    for i in order:
        job = queue[i]
        unit = whole_job_fragment(job)
        chosen = None
        for offset in range(len(modules)):
            module = modules[(cursor + offset) % len(modules)]
            if unit.qubits <= module.capacity:
                chosen = module
                cursor = (cursor + offset + 1) % len(modules)
                break
        if chosen is None:
            omitted.append(job.id)
            continue
        fragments[unit.id] = unit
        arrivals[unit.id] = job.arrival_ns
        groups.append(Group(fragments=(unit.id,), module=chosen.id, score=0.0))

    schedule = map_groups(groups, fragments, platform, arrivals)
    schedule = dataclasses.replace(schedule, omitted=tuple(omitted))
    return SchedulerResult(schedule=schedule, objective=0.0, objective_trace=(0.0,),
                           accepted=(), rounds=0)


def build_schedule(queue: Sequence[JobSpec], platform: Platform,
                   config: SchedulerConfig) -> SchedulerResult:
    if config.policy is Policy.SERIAL_RR:
        return schedule_serial_rr(queue, platform)
    return schedule_interq(queue, platform, config)
