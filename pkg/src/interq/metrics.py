"""Post-processing of executed schedules and traces into reported metrics.

Times are reported in seconds (internal nanoseconds / 1e9). Per-job fidelity
multiplies two-qubit gate fidelity per gate, measurement fidelity per
measured qubit, the remote-op fidelity per consumed pair, and a
measure-plus-correct penalty per feed-forward wire cut. TiIF normalizes each
job's fidelity by its uncut monolithic estimate on the best module, so an
uncutting baseline scores exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .costs import remote_op_fidelity
from .errors import IncompleteJob, ZeroFidelity, ZeroMakespan
from .model import Fragment, JobSpec, Platform, Schedule, parse_fragment_id
from .timeline import Event, OpRecord

_NS = 1e-9


@dataclass(frozen=True)
class MetricsReport:
    avg_queue_length: float
    avg_queue_time: float        # seconds
    avg_run_time: float          # seconds
    avg_total_time: float        # seconds
    workload_changes: int
    trf: float | None
    tirf: float | None
    avg_tiif: float
    avg_lpst: float
    makespan: float              # seconds
    jobs_completed: int
    jobs_omitted: int

    def to_dict(self) -> dict:
        return {
            "avg_queue_length": self.avg_queue_length,
            "avg_queue_time": self.avg_queue_time,
            "avg_run_time": self.avg_run_time,
            "avg_total_time": self.avg_total_time,
            "workload_changes": self.workload_changes,
            "trf": self.trf,
            "tirf": self.tirf,
            "avg_tiif": self.avg_tiif,
            "avg_lpst": self.avg_lpst,
            "makespan": self.makespan,
            "jobs_completed": self.jobs_completed,
            "jobs_omitted": self.jobs_omitted,
        }


@dataclass(frozen=True)
class JobOutcome:
    job_id: str
    arrival_ns: int
    start_ns: int
    end_ns: int
    fidelity: float
    reference_fidelity: float

    @property
    def tiif(self) -> float:
        return self.fidelity / self.reference_fidelity

    @property
    def wait_ns(self) -> int:
        return self.start_ns - self.arrival_ns

    @property
    def run_ns(self) -> int:
        return self.end_ns - self.start_ns


def lpst(fidelity: float) -> float:
    """Log probability of successful trial; 0 at perfect fidelity."""
    if fidelity <= 0.0:
        raise ZeroFidelity("fidelity must be positive")
    return math.log(fidelity)


def uncut_reference_fidelity(job: JobSpec, platform: Platform) -> float:
    """Fidelity of the job executed monolithically on its best module
    (capacity ignored: this is a normalization reference, not a placement)."""
    def estimate(module) -> float:
        return (module.gate_fidelity_2q ** job.total_twoq_gates
                * module.meas_fidelity ** job.qubits)
    return max((estimate(m), m.id) for m in platform.modules)[0]


def job_fidelity(job: JobSpec, schedule: Schedule, platform: Platform,
                 ops: Sequence[OpRecord]) -> float:
    """End-to-end fidelity of one executed job.

    Local gates and measurements are charged on the module each fragment ran
    on; every consumed Bell pair multiplies the remote-op fidelity of its
    link (co-located ops count as one local gate); every feed-forward cut
    charges one extra measurement upstream and one conditioned gate
    downstream.
    """
    placements = {fid: entry.group.module
                  for entry in schedule.entries for fid in entry.group.fragments}
    members = [f for f in schedule.fragments if f.origin_job == job.id]
    if not members or any(f.id not in placements for f in members):
        raise IncompleteJob(f"job {job.id} has unexecuted fragments")

    fidelity = 1.0
    for f in members:
        module = platform.module(placements[f.id])
        fidelity *= module.gate_fidelity_2q ** f.twoq_gates
        fidelity *= module.meas_fidelity ** (f.qubits - f.ancilla_qubits)
        if f.wire_cuts:
            upstream_module = platform.module(placements[f.precedence_in[0][0]])
            penalty = upstream_module.meas_fidelity * module.gate_fidelity_2q
            fidelity *= penalty ** f.wire_cuts

    member_ids = {f.id for f in members}
    for op in ops:
        if op.owner not in member_ids:
            continue
        module = platform.module(op.module)
        if op.link_id is None:
            fidelity *= module.gate_fidelity_2q
        else:
            fidelity *= remote_op_fidelity(platform.link(op.link_id), module)
    return fidelity


def job_outcomes(schedule: Schedule, workload: Sequence[JobSpec], platform: Platform,
                 ops: Sequence[OpRecord]) -> list[JobOutcome]:
    omitted = set(schedule.omitted)
    outcomes = []
    for job in workload:
        if job.id in omitted:
            continue
        members = [f for f in schedule.fragments if f.origin_job == job.id]
        if not members:
            continue
        starts = [schedule.start_of(f.id) for f in members]
        ends = [schedule.end_of(f.id) for f in members]
        outcomes.append(JobOutcome(
            job_id=job.id,
            arrival_ns=job.arrival_ns,
            start_ns=min(starts),
            end_ns=max(ends),
            fidelity=job_fidelity(job, schedule, platform, ops),
            reference_fidelity=uncut_reference_fidelity(job, platform),
        ))
    return outcomes


def queue_stats(trace: Iterable[Event]) -> tuple[float, float, float, float, int]:
    """(avg queue length, mean wait s, mean run s, mean total s, group starts)
    recomputed from the event trace alone.

    A job waits from its arrival until the first group containing one of its
    fragments starts; it runs until its last fragment ends. Jobs that never
    start (omissions) are excluded from the waiting integral and the means.
    """
    arrival: dict[str, int] = {}
    start: dict[str, int] = {}
    end: dict[str, int] = {}
    group_starts = 0
    for event in trace:
        if event.kind == "JOB_ARRIVAL":
            arrival[_payload_field(event.payload, "job")] = event.time_ns
        elif event.kind == "GROUP_START":
            group_starts += 1
            for fid in _payload_field(event.payload, "fragments").split("|"):
                job = _origin_of(fid)
                if job not in start:
                    start[job] = event.time_ns
                else:
                    start[job] = min(start[job], event.time_ns)
        elif event.kind == "FRAGMENT_END":
            fid = _payload_field(event.payload, "fragment")
            job = _origin_of(fid)
            end[job] = max(end.get(job, 0), event.time_ns)

    completed = [j for j in arrival if j in start and j in end]
    if not completed:
        return 0.0, 0.0, 0.0, 0.0, group_starts

    first_arrival = min(arrival[j] for j in completed)
    last_end = max(end[j] for j in completed)
    makespan_ns = last_end - first_arrival
    waiting_integral = sum(start[j] - arrival[j] for j in completed)
    avg_queue_length = waiting_integral / makespan_ns if makespan_ns > 0 else 0.0

    n = len(completed)
    mean_wait = sum(start[j] - arrival[j] for j in completed) / n * _NS
    mean_run = sum(end[j] - start[j] for j in completed) / n * _NS
    mean_total = sum(end[j] - arrival[j] for j in completed) / n * _NS
    return avg_queue_length, mean_wait, mean_run, mean_total, group_starts


def _payload_field(payload: str, key: str) -> str:
    for token in payload.split():
        k, _, v = token.partition("=")
        if k == key:
            return v
    raise KeyError(f"{key} not in payload {payload!r}")


def _origin_of(fragment_id: str) -> str:
    _, parent = parse_fragment_id(fragment_id)
    return parent if parent is not None else fragment_id


def build_metrics(schedule: Schedule, workload: Sequence[JobSpec], platform: Platform,
                  ops: Sequence[OpRecord], trace: Iterable[Event] | None = None,
                  baseline: "MetricsReport | None" = None) -> MetricsReport:
    """Assemble the full report from an executed schedule.

    Queue statistics are derived from the schedule directly (the trace-based
    queue_stats recomputes the same quantities for cross-checking).
    """
    outcomes = job_outcomes(schedule, workload, platform, ops)
    completed = len(outcomes)
    omitted = len(schedule.omitted)
    if completed == 0:
        return MetricsReport(
            avg_queue_length=0.0, avg_queue_time=0.0, avg_run_time=0.0,
            avg_total_time=0.0, workload_changes=0, trf=None, tirf=None,
            avg_tiif=1.0, avg_lpst=0.0, makespan=0.0,
            jobs_completed=0, jobs_omitted=omitted,
        )

    first_arrival = min(o.arrival_ns for o in outcomes)
    last_end = max(o.end_ns for o in outcomes)
    makespan_ns = last_end - first_arrival
    waiting_integral = sum(o.wait_ns for o in outcomes)
    avg_queue_length = waiting_integral / makespan_ns if makespan_ns > 0 else 0.0

    avg_wait = sum(o.wait_ns for o in outcomes) / completed * _NS
    avg_run = sum(o.run_ns for o in outcomes) / completed * _NS
    avg_total = sum(o.end_ns - o.arrival_ns for o in outcomes) / completed * _NS
    avg_tiif = sum(o.tiif for o in outcomes) / completed
    avg_lpst = sum(lpst(o.fidelity) for o in outcomes) / completed

    report = MetricsReport(
        avg_queue_length=avg_queue_length,
        avg_queue_time=avg_wait,
        avg_run_time=avg_run,
        avg_total_time=avg_total,
        workload_changes=len(schedule.entries),
        trf=None,
        tirf=None,
        avg_tiif=avg_tiif,
        avg_lpst=avg_lpst,
        makespan=makespan_ns * _NS,
        jobs_completed=completed,
        jobs_omitted=omitted,
    )
    if baseline is not None:
        trf, tirf, _ = comparative_factors(report, baseline)
        report = MetricsReport(**{**report.to_dict(), "trf": trf, "tirf": tirf})
    return report


def comparative_factors(run: MetricsReport,
                        baseline: MetricsReport) -> tuple[float, float, float]:
    """(throughput ratio, time reduction, fidelity factor) of `run` versus
    `baseline`; a run compared against itself yields (1, 1, 1)."""
    if run.makespan <= 0 or baseline.makespan <= 0:
        raise ZeroMakespan("comparative factors need positive makespans")
    if baseline.jobs_completed == 0:
        raise ZeroMakespan("baseline completed no jobs")
    trf = (run.jobs_completed / run.makespan) / (baseline.jobs_completed / baseline.makespan)
    tirf = baseline.makespan / run.makespan
    tiif = run.avg_tiif / baseline.avg_tiif
    return trf, tirf, tiif
