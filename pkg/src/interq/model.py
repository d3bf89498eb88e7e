"""Core domain types shared by the partitioner, cost model, scheduler, and simulator.

All types are immutable values (frozen dataclasses) and all times are integer
nanoseconds. Reports convert to seconds at the presentation boundary only.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, asdict
from enum import Enum

from .errors import (
    ClassicalLinkWithQuantumFields,
    DanglingLinkEndpoint,
    InvalidFidelity,
    UnknownModule,
)


class CommMode(str, Enum):
    """Distributed-execution regime for a cut circuit."""

    LO = "LO"
    LOCC = "LOCC"
    QCOMM = "QCOMM"


class Stage(str, Enum):
    """Execution stage of a fragment.

    FLAT fragments run independently (uncut jobs or LO cutting); UPSTREAM and
    DOWNSTREAM form the measure/feed-forward halves of an LOCC cut; REMOTE
    fragments coordinate through Bell pairs on quantum links.
    """

    FLAT = "FLAT"
    UPSTREAM = "UPSTREAM"
    DOWNSTREAM = "DOWNSTREAM"
    REMOTE = "REMOTE"


class LinkKind(str, Enum):
    CLASSICAL = "CLASSICAL"
    QUANTUM = "QUANTUM"


class CutKind(str, Enum):
    WIRE = "WIRE"
    GATE = "GATE"


Edge = tuple[int, int, int]  # (u, v, weight) with u < v, weight >= 1


@dataclass(frozen=True)
class JobSpec:
    """A submitted circuit job.

    `edges` is the qubit interaction graph: one entry per qubit pair that
    shares two-qubit gates, weighted by the gate count between that pair.
    """

    id: str
    qubits: int
    depth: int
    shots: int
    edges: tuple[Edge, ...] = ()
    modes: frozenset[CommMode] = frozenset({CommMode.LO, CommMode.LOCC, CommMode.QCOMM})
    arrival_ns: int = 0

    def __post_init__(self):
        if self.qubits < 1 or self.depth < 1 or self.shots < 1:
            raise ValueError(f"job {self.id}: qubits, depth, shots must be >= 1")
        if not self.modes:
            raise ValueError(f"job {self.id}: modes must be non-empty")
        if self.arrival_ns < 0:
            raise ValueError(f"job {self.id}: arrival_ns must be >= 0")
        for (u, v, w) in self.edges:
            if not (0 <= u < self.qubits and 0 <= v < self.qubits):
                raise ValueError(f"job {self.id}: edge ({u},{v}) references qubit >= {self.qubits}")
            if u == v:
                raise ValueError(f"job {self.id}: self-loop edge on qubit {u}")
            if w < 1 or not isinstance(w, int):
                raise ValueError(f"job {self.id}: edge ({u},{v}) weight must be a positive integer")

    @property
    def total_twoq_gates(self) -> int:
        return sum(w for (_, _, w) in self.edges)


@dataclass(frozen=True)
class ModuleProfile:
    """One QPU: capacity plus scalarized timing/fidelity calibration."""

    id: str
    capacity: int
    layer_time: int          # ns per circuit layer
    shot_overhead: int       # ns per shot (readout + reset)
    gate_fidelity_1q: float = 1.0
    gate_fidelity_2q: float = 1.0
    meas_fidelity: float = 1.0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"module {self.id}: capacity must be >= 1")
        if self.layer_time < 0 or self.shot_overhead < 0:
            raise ValueError(f"module {self.id}: timing fields must be >= 0")
        for name in ("gate_fidelity_1q", "gate_fidelity_2q", "meas_fidelity"):
            val = getattr(self, name)
            if not (0.0 < val <= 1.0):
                raise InvalidFidelity(f"module {self.id}: {name}={val} outside (0,1]")


@dataclass(frozen=True)
class LinkProfile:
    """One interconnect edge between two modules.

    Classical links carry only the latency triplet (classical_latency,
    meas_latency, ctrl_latency); every Bell-pair field must stay at its zero
    default. Quantum links use the pair-generation fields and keep the
    latency triplet available for feed-forward corrections.
    """

    id: str
    a: str
    b: str
    kind: LinkKind
    classical_latency: int = 0   # transmission latency per message
    meas_latency: int = 0        # upstream measurement latency
    ctrl_latency: int = 0        # downstream conditioned-operation latency
    pair_time: int = 0           # ns per Bell-pair generation attempt
    succ_prob: float = 0.0       # per-attempt generation success probability
    bell_op_time: int = 0        # local Bell-measurement latency per remote op
    corr_time: int = 0           # correction/feed-forward latency per remote op
    pair_fidelity: float = 0.0   # fidelity of a distributed pair
    ttl: int = 0                 # Bell-pair lifetime before regeneration
    parallelism: int = 1         # concurrent generations allowed
    budget: int | None = None    # max Bell pairs one scheduling group may demand

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"link {self.id}: endpoints must differ")
        if self.parallelism < 1:
            raise ValueError(f"link {self.id}: parallelism must be >= 1")
        for name in ("classical_latency", "meas_latency", "ctrl_latency",
                     "pair_time", "bell_op_time", "corr_time", "ttl"):
            if getattr(self, name) < 0:
                raise ValueError(f"link {self.id}: {name} must be >= 0")
        if self.kind is LinkKind.QUANTUM:
            if not (0.0 < self.succ_prob <= 1.0):
                raise InvalidFidelity(f"link {self.id}: succ_prob={self.succ_prob} outside (0,1]")
            if not (0.0 < self.pair_fidelity <= 1.0):
                raise InvalidFidelity(f"link {self.id}: pair_fidelity={self.pair_fidelity} outside (0,1]")
            if self.ttl <= 0:
                raise ValueError(f"link {self.id}: quantum link needs ttl > 0")
            if self.pair_time <= 0:
                raise ValueError(f"link {self.id}: quantum link needs pair_time > 0")
        else:
            quantum_fields = (self.pair_time, self.bell_op_time, self.corr_time,
                              self.ttl, self.succ_prob, self.pair_fidelity)
            if any(quantum_fields):
                raise ClassicalLinkWithQuantumFields(
                    f"link {self.id}: classical link carries Bell-pair parameters"
                )

    @property
    def effective_budget(self) -> int:
        """Group-level Bell-pair budget; defaults to the steady-state pair
        inventory the link can sustain (parallelism * ttl / pair_time)."""
        if self.budget is not None:
            return self.budget
        if self.kind is not LinkKind.QUANTUM or self.pair_time <= 0:
            return 0
        return (self.parallelism * self.ttl) // self.pair_time

    def endpoints(self) -> frozenset[str]:
        return frozenset((self.a, self.b))


def classical_link(id: str, a: str, b: str, *, tx: int = 0, meas: int = 0,
                   ctrl: int = 0) -> LinkProfile:
    return LinkProfile(id=id, a=a, b=b, kind=LinkKind.CLASSICAL,
                       classical_latency=tx, meas_latency=meas, ctrl_latency=ctrl)


def quantum_link(id: str, a: str, b: str, *, pair_time: int, succ_prob: float = 1.0,
                 bell_op_time: int = 0, corr_time: int = 0, pair_fidelity: float = 1.0,
                 ttl: int = 1, parallelism: int = 1, budget: int | None = None,
                 tx: int = 0) -> LinkProfile:
    return LinkProfile(id=id, a=a, b=b, kind=LinkKind.QUANTUM,
                       classical_latency=tx, pair_time=pair_time, succ_prob=succ_prob,
                       bell_op_time=bell_op_time, corr_time=corr_time,
                       pair_fidelity=pair_fidelity, ttl=ttl, parallelism=parallelism,
                       budget=budget)


@dataclass(frozen=True)
class Platform:
    """The modular cloud: modules, interconnects, and scheduling budgets."""

    modules: tuple[ModuleProfile, ...]
    links: tuple[LinkProfile, ...] = ()
    comm_mode: CommMode = CommMode.LO
    cut_budget: float = float("inf")    # max admissible sampling overhead per job
    comm_budget: float = float("inf")   # max admissible link-cost sum per job (ns)
    sampling_factor: float = 1.0        # shot multiplier applied to cut fragments

    def __post_init__(self):
        if self.sampling_factor < 1.0:
            raise ValueError("sampling_factor must be >= 1")

    def module(self, module_id: str) -> ModuleProfile:
        for m in self.modules:
            if m.id == module_id:
                return m
        raise UnknownModule(f"no module with id {module_id!r}")

    def link(self, link_id: str) -> LinkProfile:
        for e in self.links:
            if e.id == link_id:
                return e
        raise UnknownModule(f"no link with id {link_id!r}")

    @property
    def max_capacity(self) -> int:
        return max(m.capacity for m in self.modules)

    def quantum_links(self) -> tuple[LinkProfile, ...]:
        return tuple(e for e in self.links if e.kind is LinkKind.QUANTUM)

    def classical_links(self) -> tuple[LinkProfile, ...]:
        return tuple(e for e in self.links if e.kind is LinkKind.CLASSICAL)


def validate_platform(platform: Platform) -> Platform:
    """Check cross-object invariants and return the platform unchanged.

    Type-level invariants (fidelity ranges, classical links without Bell
    fields) are enforced at construction; this adds referential checks.
    """
    if not platform.modules:
        raise DanglingLinkEndpoint("platform has no modules")
    module_ids = [m.id for m in platform.modules]
    if len(set(module_ids)) != len(module_ids):
        raise ValueError("duplicate module ids on platform")
    link_ids = [e.id for e in platform.links]
    if len(set(link_ids)) != len(link_ids):
        raise ValueError("duplicate link ids on platform")
    known = set(module_ids)
    for e in platform.links:
        if e.a not in known or e.b not in known:
            raise DanglingLinkEndpoint(
                f"link {e.id} references unknown module ({e.a!r}, {e.b!r})"
            )
    return platform


def incident_links(platform: Platform, module_id: str) -> tuple[str, ...]:
    """Ids of every link with `module_id` as an endpoint, in platform order."""
    if all(m.id != module_id for m in platform.modules):
        raise UnknownModule(f"no module with id {module_id!r}")
    return tuple(e.id for e in platform.links if module_id in (e.a, e.b))


def links_between(platform: Platform, a: str, b: str,
                  kind: LinkKind | None = None) -> tuple[LinkProfile, ...]:
    pair = frozenset((a, b))
    out = tuple(e for e in platform.links if e.endpoints() == pair
                and (kind is None or e.kind is kind))
    return out


# --------------------------------------------------------------------------
# fragments, groups, schedules
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Fragment:
    """A schedulable unit derived from a job (or the whole uncut job).

    `qubits` includes teleportation ancillas; `ancilla_qubits` says how many,
    so the logical (measured) width is `qubits - ancilla_qubits`.
    `remote_pairs` lists (partner fragment id, op count) for the remote
    operations this fragment owns; each cross-fragment op is owned by exactly
    one side so execution never double-counts it.
    """

    id: str
    parent: str | None
    stage: Stage
    qubits: int
    depth: int
    shots_effective: int
    cut_overhead: float = 1.0                              # sampling multiplier
    comm_cost: float = 0.0                                 # ns-equivalent link cost
    remote_ops: int = 0
    bell_demand: tuple[tuple[str, int], ...] = ()          # (link id, pairs)
    precedence_in: tuple[tuple[str, int], ...] = ()        # (predecessor id, sync delay ns)
    twoq_gates: int = 0                                    # gates internal to this fragment
    ancilla_qubits: int = 0
    wire_cuts: int = 0                                     # cut count carried by the downstream side
    remote_pairs: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.qubits < 1 or self.depth < 1 or self.shots_effective < 1:
            raise ValueError(f"fragment {self.id}: qubits, depth, shots must be >= 1")
        if self.cut_overhead < 1.0:
            raise ValueError(f"fragment {self.id}: cut_overhead must be >= 1")
        if self.comm_cost < 0 or self.remote_ops < 0:
            raise ValueError(f"fragment {self.id}: negative communication annotation")
        if self.precedence_in and self.stage is not Stage.DOWNSTREAM:
            raise ValueError(f"fragment {self.id}: only DOWNSTREAM fragments take precedence edges")

    @property
    def origin_job(self) -> str:
        """Id of the job this unit executes work for."""
        return self.parent if self.parent is not None else self.id


_FRAGMENT_ID_PATTERNS = (
    (re.compile(r"^(?P<job>.+)-LO-(?P<n>\d+)$"), Stage.FLAT),
    (re.compile(r"^(?P<job>.+)-U-(?P<n>\d+)$"), Stage.UPSTREAM),
    (re.compile(r"^(?P<job>.+)-D-(?P<n>\d+)$"), Stage.DOWNSTREAM),
    (re.compile(r"^(?P<job>.+)_P$"), Stage.REMOTE),
    (re.compile(r"^(?P<job>.+)_X(?P<n>\d+)$"), Stage.REMOTE),
)


def parse_fragment_id(fragment_id: str) -> tuple[Stage, str | None]:
    """Recover (stage, parent job id) from a generated fragment id.

    Ids that match none of the generated patterns are whole uncut jobs:
    stage FLAT with no parent.
    """
    for pattern, stage in _FRAGMENT_ID_PATTERNS:
        m = pattern.match(fragment_id)
        if m:
            return stage, m.group("job")
    return Stage.FLAT, None


@dataclass(frozen=True)
class Group:
    """Fragments co-placed on one module, with the cost score they won on."""

    fragments: tuple[str, ...]
    module: str
    score: float = 0.0

    def __post_init__(self):
        if not self.fragments:
            raise ValueError("group must contain at least one fragment")


@dataclass(frozen=True)
class CostWeights:
    """Weights for the group cost terms: imbalance, sync delay,
    communication pressure, cut overhead."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        vals = (self.alpha, self.beta, self.gamma, self.eta)
        if any(v < 0 for v in vals):
            raise ValueError("cost weights must be non-negative")
        if not any(v > 0 for v in vals):
            raise ValueError("at least one cost weight must be positive")


@dataclass(frozen=True)
class ScheduleEntry:
    group: Group
    start_ns: int
    end_ns: tuple[tuple[str, int], ...]   # (fragment id, end time) per member

    def group_end(self) -> int:
        return max(t for _, t in self.end_ns)


@dataclass(frozen=True)
class LinkReservation:
    link_id: str
    start_ns: int
    end_ns: int
    pairs: int


@dataclass(frozen=True)
class Schedule:
    """A timed assignment of groups to modules with link reservations.

    Carries the fragment set it schedules so the value is self-contained for
    serialization, costing, and execution. `omitted` lists job ids that were
    dropped (baseline behavior for oversized jobs, or pruned candidates).
    """

    entries: tuple[ScheduleEntry, ...]
    link_reservations: tuple[LinkReservation, ...] = ()
    precedence_edges: tuple[tuple[str, str, int], ...] = ()   # (u, v, delay ns)
    fragments: tuple[Fragment, ...] = ()
    omitted: tuple[str, ...] = ()

    def fragment_map(self) -> dict[str, Fragment]:
        return {f.id: f for f in self.fragments}

    def start_of(self, fragment_id: str) -> int:
        for entry in self.entries:
            if fragment_id in entry.group.fragments:
                return entry.start_ns
        raise KeyError(fragment_id)

    def end_of(self, fragment_id: str) -> int:
        for entry in self.entries:
            for fid, t in entry.end_ns:
                if fid == fragment_id:
                    return t
        raise KeyError(fragment_id)

    def makespan_ns(self) -> int:
        if not self.entries:
            return 0
        return max(entry.group_end() for entry in self.entries)


# --------------------------------------------------------------------------
# serialization (JSON-compatible dicts; field names match the dataclasses)
# --------------------------------------------------------------------------

def job_to_dict(job: JobSpec) -> dict:
    return {
        "id": job.id,
        "qubits": job.qubits,
        "depth": job.depth,
        "shots": job.shots,
        "edges": [[u, v, w] for (u, v, w) in job.edges],
        "modes": sorted(m.value for m in job.modes),
        "arrival_ns": job.arrival_ns,
    }


def job_from_dict(data: dict) -> JobSpec:
    edges = []
    for e in data.get("edges", ()):
        if len(e) == 2:
            u, v = e
            w = 1
        else:
            u, v, w = e
        u, v = (u, v) if u < v else (v, u)
        edges.append((int(u), int(v), int(w)))
    modes = frozenset(CommMode(m) for m in data.get("modes", ["LO", "LOCC", "QCOMM"]))
    return JobSpec(
        id=str(data["id"]),
        qubits=int(data["qubits"]),
        depth=int(data["depth"]),
        shots=int(data["shots"]),
        edges=tuple(sorted(edges)),
        modes=modes,
        arrival_ns=int(data.get("arrival_ns", 0)),
    )


def platform_to_dict(platform: Platform) -> dict:
    def link_dict(e: LinkProfile) -> dict:
        d = asdict(e)
        d["kind"] = e.kind.value
        return d

    def module_dict(m: ModuleProfile) -> dict:
        return asdict(m)

    return {
        "modules": [module_dict(m) for m in platform.modules],
        "links": [link_dict(e) for e in platform.links],
        "comm_mode": platform.comm_mode.value,
        "cut_budget": platform.cut_budget,
        "comm_budget": platform.comm_budget,
        "sampling_factor": platform.sampling_factor,
    }


def platform_from_dict(data: dict) -> Platform:
    modules = tuple(ModuleProfile(**m) for m in data["modules"])
    links = []
    for e in data.get("links", ()):
        e = dict(e)
        e["kind"] = LinkKind(e["kind"])
        links.append(LinkProfile(**e))
    platform = Platform(
        modules=modules,
        links=tuple(links),
        comm_mode=CommMode(data.get("comm_mode", "LO")),
        cut_budget=float(data.get("cut_budget", float("inf"))),
        comm_budget=float(data.get("comm_budget", float("inf"))),
        sampling_factor=float(data.get("sampling_factor", 1.0)),
    )
    return validate_platform(platform)


def fragment_to_dict(f: Fragment) -> dict:
    return {
        "id": f.id,
        "parent": f.parent,
        "stage": f.stage.value,
        "qubits": f.qubits,
        "depth": f.depth,
        "shots_effective": f.shots_effective,
        "cut_overhead": f.cut_overhead,
        "comm_cost": f.comm_cost,
        "remote_ops": f.remote_ops,
        "bell_demand": [[link, n] for link, n in f.bell_demand],
        "precedence_in": [[pred, delay] for pred, delay in f.precedence_in],
        "twoq_gates": f.twoq_gates,
        "ancilla_qubits": f.ancilla_qubits,
        "wire_cuts": f.wire_cuts,
        "remote_pairs": [[pid, n] for pid, n in f.remote_pairs],
    }


def fragment_from_dict(data: dict) -> Fragment:
    return Fragment(
        id=data["id"],
        parent=data.get("parent"),
        stage=Stage(data["stage"]),
        qubits=int(data["qubits"]),
        depth=int(data["depth"]),
        shots_effective=int(data["shots_effective"]),
        cut_overhead=float(data.get("cut_overhead", 1.0)),
        comm_cost=float(data.get("comm_cost", 0.0)),
        remote_ops=int(data.get("remote_ops", 0)),
        bell_demand=tuple((str(l), int(n)) for l, n in data.get("bell_demand", ())),
        precedence_in=tuple((str(p), int(d)) for p, d in data.get("precedence_in", ())),
        twoq_gates=int(data.get("twoq_gates", 0)),
        ancilla_qubits=int(data.get("ancilla_qubits", 0)),
        wire_cuts=int(data.get("wire_cuts", 0)),
        remote_pairs=tuple((str(p), int(n)) for p, n in data.get("remote_pairs", ())),
    )


def schedule_to_dict(schedule: Schedule) -> dict:
    return {
        "entries": [
            {
                "group": {
                    "fragments": list(entry.group.fragments),
                    "module": entry.group.module,
                    "score": entry.group.score,
                },
                "start_ns": entry.start_ns,
                "end_ns": [[fid, t] for fid, t in entry.end_ns],
            }
            for entry in schedule.entries
        ],
        "link_reservations": [
            {"link_id": r.link_id, "start_ns": r.start_ns, "end_ns": r.end_ns, "pairs": r.pairs}
            for r in schedule.link_reservations
        ],
        "precedence_edges": [[u, v, d] for u, v, d in schedule.precedence_edges],
        "fragments": [fragment_to_dict(f) for f in schedule.fragments],
        "omitted": list(schedule.omitted),
    }


def schedule_from_dict(data: dict) -> Schedule:
    entries = tuple(
        ScheduleEntry(
            group=Group(
                fragments=tuple(e["group"]["fragments"]),
                module=e["group"]["module"],
                score=float(e["group"]["score"]),
            ),
            start_ns=int(e["start_ns"]),
            end_ns=tuple((str(fid), int(t)) for fid, t in e["end_ns"]),
        )
        for e in data.get("entries", ())
    )
    reservations = tuple(
        LinkReservation(r["link_id"], int(r["start_ns"]), int(r["end_ns"]), int(r["pairs"]))
        for r in data.get("link_reservations", ())
    )
    return Schedule(
        entries=entries,
        link_reservations=reservations,
        precedence_edges=tuple((str(u), str(v), int(d))
                               for u, v, d in data.get("precedence_edges", ())),
        fragments=tuple(fragment_from_dict(f) for f in data.get("fragments", ())),
        omitted=tuple(data.get("omitted", ())),
    )


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)
