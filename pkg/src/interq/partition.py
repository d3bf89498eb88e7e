"""Adaptive circuit partitioning: candidate fragment sets per communication mode.

A job that exceeds single-module capacity is split over its qubit interaction
graph. The split minimizes crossing gate weight with a greedy balanced
chunking refined by Kernighan-Lin style swaps, recursing on the part count
until every part (plus its teleportation ancillas, for quantum-link mode)
fits the platform. Candidates whose cut or communication overhead exceeds
the platform budgets are pruned before the scheduler ever sees them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .costs import remote_op_cost
from .errors import NoClassicalLink, NoQuantumLink, OverheadOverflow
from .model import (
    CommMode,
    CutKind,
    Edge,
    Fragment,
    JobSpec,
    Platform,
    Stage,
)

_OVERFLOW_LIMIT = 10 ** 18


# --------------------------------------------------------------------------
# sampling-overhead laws
# --------------------------------------------------------------------------

def lo_cut_overhead(k_wire: int, k_gate: int) -> float:
    """Sampling overhead of offline reconstruction: 16 per cut wire,
    9 per cut gate, multiplicative."""
    if k_wire < 0 or k_gate < 0:
        raise ValueError("cut counts must be >= 0")
    value = 16 ** k_wire * 9 ** k_gate
    if value > _OVERFLOW_LIMIT:
        raise OverheadOverflow(f"overhead 16^{k_wire} * 9^{k_gate} is absurd")
    return float(value)


def locc_cut_overhead(k_wire: int) -> float:
    """Sampling overhead with classical feed-forward: 4 per cut wire."""
    if k_wire < 0:
        raise ValueError("cut count must be >= 0")
    value = 4 ** k_wire
    if value > _OVERFLOW_LIMIT:
        raise OverheadOverflow(f"overhead 4^{k_wire} is absurd")
    return float(value)


# --------------------------------------------------------------------------
# partition plans
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanMeta:
    """Reconstruction metadata: the quasiprobability norm for offline
    stitching, upstream->downstream part pairs for feed-forward, and the
    crossing-edge list (part_a, part_b, gate weight) for remote execution."""

    kappa: float = 1.0
    precedence_pairs: tuple[tuple[int, int], ...] = ()
    remote_edges: tuple[tuple[int, int, int], ...] = ()


@dataclass(frozen=True)
class PartitionPlan:
    mode: CommMode
    parts: tuple[tuple[int, ...], ...]
    cut_edges: tuple[tuple[Edge, CutKind], ...] = ()
    k_wire: int = 0
    k_gate: int = 0
    meta: PlanMeta = PlanMeta()

    @property
    def degenerate(self) -> bool:
        return len(self.parts) == 1


def _adjacency(job: JobSpec) -> dict[int, dict[int, int]]:
    adj: dict[int, dict[int, int]] = {v: {} for v in range(job.qubits)}
    for u, v, w in job.edges:
        adj[u][v] = adj[u].get(v, 0) + w
        adj[v][u] = adj[v].get(u, 0) + w
    return adj


def _crossing_edges(job: JobSpec, assignment: dict[int, int]) -> list[tuple[Edge, int, int]]:
    """Edges whose endpoints land in different parts, with their part pair."""
    out = []
    for u, v, w in job.edges:
        pu, pv = assignment[u], assignment[v]
        if pu != pv:
            lo, hi = (pu, pv) if pu < pv else (pv, pu)
            out.append(((u, v, w), lo, hi))
    return out


def _crossing_weight(job: JobSpec, assignment: dict[int, int]) -> int:
    return sum(w for (_, _, w), _, _ in _crossing_edges(job, assignment))


def _balanced_sizes(n: int, k: int) -> list[int]:
    base, extra = divmod(n, k)
    return [base + 1 if i < extra else base for i in range(k)]


def _initial_assignment(n: int, sizes: list[int]) -> dict[int, int]:
    assignment = {}
    vertex = 0
    for part, size in enumerate(sizes):
        for _ in range(size):
            assignment[vertex] = part
            vertex += 1
    return assignment


def _refine_pair(adj: dict[int, dict[int, int]], assignment: dict[int, int],
                 pa: int, pb: int, max_swaps: int = 64) -> None:
    """Greedy swap refinement between two parts, preserving part sizes.

    Each accepted swap strictly reduces the crossing weight between the two
    parts (edges toward third parts stay crossing either way, so total
    crossing weight falls by the same amount). Ties break on the lowest
    qubit index for determinism.
    """
    side_a = sorted(v for v, p in assignment.items() if p == pa)
    side_b = sorted(v for v, p in assignment.items() if p == pb)
    if not side_a or not side_b:
        return

    def gain_terms(side: list[int], own: int, other: int) -> dict[int, int]:
        # external-minus-internal weight per vertex, restricted to the pair
        d = {}
        for v in side:
            ext = sum(w for nb, w in adj[v].items() if assignment.get(nb) == other)
            internal = sum(w for nb, w in adj[v].items() if assignment.get(nb) == own)
            d[v] = ext - internal
        return d

    for _ in range(max_swaps):
        da = gain_terms(side_a, pa, pb)
        db = gain_terms(side_b, pb, pa)
        top_a = sorted(side_a, key=lambda v: (-da[v], v))[:8]
        top_b = sorted(side_b, key=lambda v: (-db[v], v))[:8]
        candidates = [(x, y) for x in top_a for y in top_b]
        # pairs joined by an edge can beat the top combinations only through
        # the -2w correction, so consider every crossing edge too
        for x in side_a:
            for nb, _ in adj[x].items():
                if assignment.get(nb) == pb:
                    candidates.append((x, nb))
        best = None
        for x, y in candidates:
            gain = da[x] + db[y] - 2 * adj[x].get(y, 0)
            key = (gain, -x, -y)
            if best is None or key > best[0]:
                best = (key, x, y)
        if best is None or best[0][0] <= 0:
            return
        _, x, y = best
        assignment[x], assignment[y] = pb, pa
        side_a[side_a.index(x)] = y
        side_b[side_b.index(y)] = x
        side_a.sort()
        side_b.sort()


def _split(job: JobSpec, k: int, refine_rounds: int = 2) -> dict[int, int]:
    """Deterministic k-way balanced split minimizing crossing weight."""
    sizes = _balanced_sizes(job.qubits, k)
    assignment = _initial_assignment(job.qubits, sizes)
    if k == 1:
        return assignment
    adj = _adjacency(job)
    for _ in range(refine_rounds):
        before = _crossing_weight(job, assignment)
        for pa in range(k):
            for pb in range(pa + 1, k):
                _refine_pair(adj, assignment, pa, pb)
        if _crossing_weight(job, assignment) == before:
            break
    return assignment


def _parts_from_assignment(assignment: dict[int, int], k: int) -> tuple[tuple[int, ...], ...]:
    parts: list[list[int]] = [[] for _ in range(k)]
    for v in sorted(assignment):
        parts[assignment[v]].append(v)
    return tuple(tuple(p) for p in parts)


def _partner_counts(job: JobSpec, assignment: dict[int, int], k: int) -> list[int]:
    partners: list[set[int]] = [set() for _ in range(k)]
    for _, lo, hi in _crossing_edges(job, assignment):
        partners[lo].add(hi)
        partners[hi].add(lo)
    return [len(s) for s in partners]


def _qcomm_fits(job: JobSpec, assignment: dict[int, int], k: int,
                capacities: list[int]) -> bool:
    """Each part plus its ancilla allowance must fit a distinct module."""
    if k > len(capacities):
        return False
    sizes = [0] * k
    for part in assignment.values():
        sizes[part] += 1
    ancillas = _partner_counts(job, assignment, k)
    demands = sorted((s + a for s, a in zip(sizes, ancillas)), reverse=True)
    caps = sorted(capacities, reverse=True)
    return all(d <= c for d, c in zip(demands, caps))


def find_partition(job: JobSpec, mode: CommMode, platform: Platform) -> PartitionPlan | None:
    """Partition `job` for `mode`, or None when no feasible split exists.

    A job that already fits the largest module yields the degenerate
    single-part plan with no cuts. LOCC splits are strict bipartitions
    (one upstream, one downstream). Quantum-link splits sweep the part
    count upward until the parts plus their ancillas map onto distinct
    modules; local-only splits just need each part to fit somewhere.
    """
    if mode not in job.modes:
        raise ValueError(f"mode {mode.value} not admissible for job {job.id}")
    qmax = platform.max_capacity
    if job.qubits <= qmax:
        return PartitionPlan(mode=mode, parts=(tuple(range(job.qubits)),))

    if mode is CommMode.LOCC:
        if job.qubits > 2 * qmax:
            return None
        assignment = _split(job, 2)
        crossing = _crossing_edges(job, assignment)
        cut_edges = tuple((edge, CutKind.WIRE) for edge, _, _ in crossing)
        k_wire = len(cut_edges)
        return PartitionPlan(
            mode=mode,
            parts=_parts_from_assignment(assignment, 2),
            cut_edges=cut_edges,
            k_wire=k_wire,
            meta=PlanMeta(kappa=locc_cut_overhead(k_wire), precedence_pairs=((0, 1),)),
        )

    if mode is CommMode.LO:
        k = math.ceil(job.qubits / qmax)
        assignment = _split(job, k)
        crossing = _crossing_edges(job, assignment)
        # single gates are cheaper to cut than the wire carrying them;
        # heavier edges cut the wire once instead
        cut_edges = tuple(
            (edge, CutKind.GATE if edge[2] == 1 else CutKind.WIRE)
            for edge, _, _ in crossing
        )
        k_gate = sum(1 for _, kind in cut_edges if kind is CutKind.GATE)
        k_wire = len(cut_edges) - k_gate
        return PartitionPlan(
            mode=mode,
            parts=_parts_from_assignment(assignment, k),
            cut_edges=cut_edges,
            k_wire=k_wire,
            k_gate=k_gate,
            meta=PlanMeta(kappa=lo_cut_overhead(k_wire, k_gate)),
        )

    # quantum-link execution: parts are co-resident, so they must map onto
    # distinct modules with room for one ancilla per partner part
    capacities = [m.capacity for m in platform.modules]
    k_min = math.ceil(job.qubits / qmax)
    for k in range(max(2, k_min), len(platform.modules) + 1):
        assignment = _split(job, k)
        if not _qcomm_fits(job, assignment, k, capacities):
            continue
        crossing = _crossing_edges(job, assignment)
        remote = {}
        for (_, _, w), lo, hi in crossing:
            remote[(lo, hi)] = remote.get((lo, hi), 0) + w
        remote_edges = tuple((lo, hi, w) for (lo, hi), w in sorted(remote.items()))
        return PartitionPlan(
            mode=mode,
            parts=_parts_from_assignment(assignment, k),
            meta=PlanMeta(remote_edges=remote_edges),
        )
    return None


# --------------------------------------------------------------------------
# fragment expansion
# --------------------------------------------------------------------------

def whole_job_fragment(job: JobSpec) -> Fragment:
    """The uncut job as a single schedulable unit."""
    return Fragment(
        id=job.id,
        parent=None,
        stage=Stage.FLAT,
        qubits=job.qubits,
        depth=job.depth,
        shots_effective=job.shots,
        twoq_gates=job.total_twoq_gates,
    )


def _internal_weight(job: JobSpec, part: tuple[int, ...]) -> int:
    inside = set(part)
    return sum(w for u, v, w in job.edges if u in inside and v in inside)


def _effective_shots(job: JobSpec, platform: Platform, overhead: float) -> int:
    return math.ceil(job.shots * platform.sampling_factor * overhead)


def expand_lo(job: JobSpec, plan: PartitionPlan, platform: Platform) -> tuple[Fragment, ...]:
    """One independent flat fragment per part; the whole-plan sampling
    overhead multiplies every fragment's effective shots, because stitching
    needs all fragments at the inflated sample count."""
    if plan.mode is not CommMode.LO:
        raise ValueError("expand_lo needs an LO plan")
    if plan.degenerate:
        return (whole_job_fragment(job),)
    overhead = lo_cut_overhead(plan.k_wire, plan.k_gate)
    shots = _effective_shots(job, platform, overhead)
    return tuple(
        Fragment(
            id=f"{job.id}-LO-{n}",
            parent=job.id,
            stage=Stage.FLAT,
            qubits=len(part),
            depth=job.depth,
            shots_effective=shots,
            cut_overhead=overhead,
            twoq_gates=_internal_weight(job, part),
        )
        for n, part in enumerate(plan.parts, start=1)
    )


def expand_locc(job: JobSpec, plan: PartitionPlan, platform: Platform) -> tuple[Fragment, ...]:
    """Upstream/downstream fragment pair with a feed-forward precedence edge.

    The sync delay is the measure+transmit+condition latency of the
    cheapest classical link; crossing gates are charged to the downstream
    fragment, which executes them as conditioned corrections.
    """
    if plan.mode is not CommMode.LOCC:
        raise ValueError("expand_locc needs an LOCC plan")
    if plan.degenerate:
        return (whole_job_fragment(job),)
    classical = platform.classical_links()
    if not classical:
        raise NoClassicalLink("no classical link to carry feed-forward")
    best = min(classical,
               key=lambda e: (e.meas_latency + e.classical_latency + e.ctrl_latency, e.id))
    delay = best.meas_latency + best.classical_latency + best.ctrl_latency

    overhead = locc_cut_overhead(plan.k_wire)
    shots = _effective_shots(job, platform, overhead)
    up_part, down_part = plan.parts
    crossing_weight = sum(w for (_, _, w), _ in plan.cut_edges)
    up_id = f"{job.id}-U-1"
    upstream = Fragment(
        id=up_id,
        parent=job.id,
        stage=Stage.UPSTREAM,
        qubits=len(up_part),
        depth=job.depth,
        shots_effective=shots,
        cut_overhead=overhead,
        twoq_gates=_internal_weight(job, up_part),
    )
    downstream = Fragment(
        id=f"{job.id}-D-1",
        parent=job.id,
        stage=Stage.DOWNSTREAM,
        qubits=len(down_part),
        depth=job.depth,
        shots_effective=shots,
        cut_overhead=overhead,
        precedence_in=((up_id, delay),),
        twoq_gates=_internal_weight(job, down_part) + crossing_weight,
        wire_cuts=plan.k_wire,
    )
    return (upstream, downstream)


def _qcomm_fragment_id(job_id: str, index: int) -> str:
    return f"{job_id}_P" if index == 0 else f"{job_id}_X{index}"


def expand_qcomm(job: JobSpec, plan: PartitionPlan, platform: Platform) -> tuple[Fragment, ...]:
    """One remote fragment per part, annotated with remote-op counts,
    Bell-pair demand, and one communication ancilla per partner part.

    Demand is recorded optimistically on the platform's cheapest quantum
    link; the cost model re-prices it against actual placements later.
    Each crossing op is owned by its lower-indexed part for execution.
    """
    if plan.mode is not CommMode.QCOMM:
        raise ValueError("expand_qcomm needs a QCOMM plan")
    if plan.degenerate:
        return (whole_job_fragment(job),)
    qlinks = platform.quantum_links()
    if not qlinks:
        raise NoQuantumLink("no quantum link for remote operations")
    cheapest = min(qlinks, key=lambda e: (remote_op_cost(e), e.id))
    per_op = remote_op_cost(cheapest)

    k = len(plan.parts)
    remote_count = [0] * k
    partners: list[set[int]] = [set() for _ in range(k)]
    for lo, hi, w in plan.meta.remote_edges:
        remote_count[lo] += w
        remote_count[hi] += w
        partners[lo].add(hi)
        partners[hi].add(lo)

    shots = _effective_shots(job, platform, 1.0)
    ids = [_qcomm_fragment_id(job.id, i) for i in range(k)]
    owned: list[list[tuple[str, int]]] = [[] for _ in range(k)]
    for lo, hi, w in plan.meta.remote_edges:
        owned[lo].append((ids[hi], w))

    fragments = []
    for i, part in enumerate(plan.parts):
        ancillas = len(partners[i])
        r = remote_count[i]
        fragments.append(Fragment(
            id=ids[i],
            parent=job.id,
            stage=Stage.REMOTE,
            qubits=len(part) + ancillas,
            depth=job.depth,
            shots_effective=shots,
            comm_cost=r * per_op,
            remote_ops=r,
            bell_demand=((cheapest.id, r),) if r else (),
            twoq_gates=_internal_weight(job, part),
            ancilla_qubits=ancillas,
            remote_pairs=tuple(owned[i]),
        ))
    return tuple(fragments)


# --------------------------------------------------------------------------
# candidate generation
# --------------------------------------------------------------------------

_EXPANDERS = {
    CommMode.LO: expand_lo,
    CommMode.LOCC: expand_locc,
    CommMode.QCOMM: expand_qcomm,
}


def supported_modes(platform: Platform) -> frozenset[CommMode]:
    """The execution regime this platform runs, provided the links exist."""
    mode = platform.comm_mode
    if mode is CommMode.LO:
        return frozenset({mode})
    if mode is CommMode.LOCC and platform.classical_links():
        return frozenset({mode})
    if mode is CommMode.QCOMM and platform.quantum_links():
        return frozenset({mode})
    return frozenset()


def intercomm_modes(job: JobSpec, platform: Platform) -> list[tuple[Fragment, ...]]:
    """Candidate fragment sets for every admissible communication mode,
    pruned by the platform's cut and communication budgets."""
    candidates = []
    modes = sorted(job.modes & supported_modes(platform), key=lambda m: m.value)
    for mode in modes:
        plan = find_partition(job, mode, platform)
        if plan is None:
            continue
        fragments = _EXPANDERS[mode](job, plan, platform)
        if sum(f.cut_overhead for f in fragments) > platform.cut_budget:
            continue
        if sum(f.comm_cost for f in fragments) > platform.comm_budget:
            continue
        candidates.append(fragments)
    return candidates
