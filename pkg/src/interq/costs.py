"""Feasibility predicates and the communication-aware cost model.

Everything here is pure: same inputs, same verdicts. Times are integer
nanoseconds except cost totals, which are floats after normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import CapacityExceeded, InfeasibleGroup, NotQuantumLink
from .model import (
    CostWeights,
    Fragment,
    Group,
    Platform,
    LinkKind,
    LinkProfile,
    ModuleProfile,
    incident_links,
    links_between,
)


def fragment_runtime(fragment: Fragment, module: ModuleProfile) -> int:
    """Execution time of one fragment on one module, in ns.

    Linear model: depth * layer_time + effective shots * per-shot overhead,
    clamped to >= 1 ns so a scheduled fragment always occupies time.
    """
    if fragment.qubits > module.capacity:
        raise CapacityExceeded(
            f"fragment {fragment.id} needs {fragment.qubits} qubits, "
            f"module {module.id} has {module.capacity}"
        )
    t = fragment.depth * module.layer_time + fragment.shots_effective * module.shot_overhead
    return max(t, 1)


def remote_op_cost(link: LinkProfile) -> float:
    """Scheduler-facing cost of one remote operation over a quantum link:
    expected pair-generation time plus Bell-measurement and correction."""
    if link.kind is not LinkKind.QUANTUM:
        raise NotQuantumLink(f"link {link.id} is not quantum")
    return link.pair_time / link.succ_prob + link.bell_op_time + link.corr_time


def remote_op_fidelity(link: LinkProfile, module: ModuleProfile) -> float:
    """Multiplicative fidelity of one remote operation: pair quality times
    local two-qubit gate and measurement fidelity on the executing module."""
    if link.kind is not LinkKind.QUANTUM:
        raise NotQuantumLink(f"link {link.id} is not quantum")
    return link.pair_fidelity * module.gate_fidelity_2q * module.meas_fidelity


# --------------------------------------------------------------------------
# group feasibility
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    violation: str | None = None   # "Capacity" | "StageConflict" | "LinkBudget"
    detail: str = ""

    def __bool__(self) -> bool:
        return self.feasible


FEASIBLE = FeasibilityVerdict(True)


def _link_loads(members: list[Fragment], module_id: str,
                platform: Platform) -> dict[str, int] | None:
    """Bell-pair demand per link, re-attributed to the module's incident links.

    Demand recorded on a link not incident to this module is served by the
    module's cheapest incident quantum link instead. Returns None when demand
    exists but the module has no quantum link to carry it.
    """
    incident = set(incident_links(platform, module_id))
    incident_quantum = [platform.link(lid) for lid in sorted(incident)
                        if platform.link(lid).kind is LinkKind.QUANTUM]
    cheapest = min(incident_quantum, key=lambda e: (remote_op_cost(e), e.id)) \
        if incident_quantum else None
    loads: dict[str, int] = {}
    for f in members:
        for link_id, pairs in f.bell_demand:
            if pairs == 0:
                continue
            if link_id in incident:
                loads[link_id] = loads.get(link_id, 0) + pairs
            elif cheapest is not None:
                loads[cheapest.id] = loads.get(cheapest.id, 0) + pairs
            else:
                return None
    return loads


def check_group_feasible(group: Group, fragments: Mapping[str, Fragment],
                         platform: Platform) -> FeasibilityVerdict:
    """Capacity, stage-conflict, and link-budget predicates for one group.

    The first violated predicate (in that order) names the verdict.
    """
    module = platform.module(group.module)
    members = [fragments[fid] for fid in group.fragments]

    demand = sum(f.qubits for f in members)
    if demand > module.capacity:
        return FeasibilityVerdict(False, "Capacity",
                                  f"{demand} qubits > {module.capacity} on {module.id}")

    stage_by_parent: dict[str, object] = {}
    for f in members:
        if f.parent is None:
            continue
        seen = stage_by_parent.setdefault(f.parent, f.stage)
        if seen is not f.stage:
            return FeasibilityVerdict(False, "StageConflict",
                                      f"fragments of job {f.parent} mix stages in one group")

    loads = _link_loads(members, group.module, platform)
    if loads is None:
        return FeasibilityVerdict(False, "LinkBudget",
                                  f"Bell demand on {module.id} with no incident quantum link")
    for link_id in sorted(loads):
        budget = platform.link(link_id).effective_budget
        if loads[link_id] > budget:
            return FeasibilityVerdict(False, "LinkBudget",
                                      f"{loads[link_id]} pairs > budget {budget} on {link_id}")
    return FEASIBLE


# --------------------------------------------------------------------------
# group cost
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupCostBreakdown:
    """Cost terms for one (group, module) assignment.

    a: runtime imbalance (dimensionless); b: synchronization delay (ns);
    c: communication pressure (ns); h: cut overhead above the uncut baseline
    (sum of overhead - 1 per fragment); h_raw keeps the unshifted sum for
    auditing. total weights a and h directly and b, c after normalizing by
    the platform's reference time.
    """

    a: float
    b: float
    c: float
    h: float
    total: float
    h_raw: float


def _time_norm(platform: Platform) -> float:
    norm = max(m.layer_time for m in platform.modules) * 1000
    return float(norm) if norm > 0 else 1.0


def _partner_map(fragments: Mapping[str, Fragment]) -> dict[str, list[tuple[str, int]]]:
    """Remote-op partners per fragment, both directions."""
    partners: dict[str, list[tuple[str, int]]] = {fid: [] for fid in fragments}
    for f in fragments.values():
        for partner_id, count in f.remote_pairs:
            partners[f.id].append((partner_id, count))
            if partner_id in partners:
                partners[partner_id].append((f.id, count))
    return partners


def _min_quantum_cost(platform: Platform) -> float | None:
    qlinks = platform.quantum_links()
    if not qlinks:
        return None
    return min(remote_op_cost(e) for e in qlinks)


def repriced_comm_cost(fragment: Fragment, module_id: str, platform: Platform,
                       partners: list[tuple[str, int]],
                       placements: Mapping[str, str] | None) -> float:
    """Communication pressure of one fragment on one module, in ns.

    Each remote op is priced on the cheapest quantum link toward its
    partner's module when the partner is placed, on the platform minimum
    otherwise; ops toward a co-located partner are free.
    """
    if fragment.remote_ops == 0:
        return 0.0
    floor = _min_quantum_cost(platform)
    if floor is None:
        raise InfeasibleGroup(
            f"fragment {fragment.id} has remote ops but the platform has no quantum link"
        )
    cost = 0.0
    for partner_id, count in partners:
        partner_module = placements.get(partner_id) if placements else None
        if partner_module is None:
            cost += count * floor
        elif partner_module == module_id:
            continue
        else:
            direct = links_between(platform, module_id, partner_module, LinkKind.QUANTUM)
            per_op = min((remote_op_cost(e) for e in direct), default=floor)
            cost += count * per_op
    return cost


def group_cost(group: Group, fragments: Mapping[str, Fragment], platform: Platform,
               weights: CostWeights,
               placements: Mapping[str, str] | None = None) -> GroupCostBreakdown:
    """Communication-aware cost of placing `group` on its module."""
    verdict = check_group_feasible(group, fragments, platform)
    if not verdict:
        raise InfeasibleGroup(f"{verdict.violation}: {verdict.detail}")

    module = platform.module(group.module)
    members = [fragments[fid] for fid in group.fragments]
    runtimes = [fragment_runtime(f, module) for f in members]
    a = max(runtimes) / min(runtimes) - 1.0

    b = float(sum(delay for f in members for _, delay in f.precedence_in))

    partner_map = _partner_map(fragments)
    c = sum(
        repriced_comm_cost(f, group.module, platform, partner_map[f.id], placements)
        for f in members
    )

    h_raw = sum(f.cut_overhead for f in members)
    h = sum(f.cut_overhead - 1.0 for f in members)

    norm = _time_norm(platform)
    total = (weights.alpha * a + weights.beta * (b / norm)
             + weights.gamma * (c / norm) + weights.eta * h)
    return GroupCostBreakdown(a=a, b=b, c=c, h=h, total=total, h_raw=h_raw)


def schedule_objective(schedule, platform: Platform, weights: CostWeights) -> float:
    """Aggregate objective of a schedule: the sum of its group costs,
    priced against the schedule's own realized placements."""
    fragments = schedule.fragment_map()
    placements = {
        fid: entry.group.module
        for entry in schedule.entries
        for fid in entry.group.fragments
    }
    return sum(
        group_cost(entry.group, fragments, platform, weights, placements).total
        for entry in schedule.entries
    )
