"""Deterministic event engine that turns placed groups into timed executions.

The same engine backs both planning and simulation: the placement planner
runs it with an expected-duration pair sampler, the simulator with a seeded
stochastic one. With success probability 1 and no contention the two agree
exactly, which keeps planned and executed timings consistent.

Execution rules realized here:
  - groups on one module run serially in queue order and hold their qubits
    until every member fragment ends;
  - a group starts once its module is free, its members have arrived, and
    every feed-forward message from predecessor fragments has been delivered;
  - remote operations between fragment pairs run serially per pair: the
    owning side requests the link when its local compute finishes, pair
    generation starts as soon as a parallelism slot frees (possibly before
    the partner is ready), and consumption waits for both sides;
  - a generated pair that waits longer than the link TTL expires and is
    regenerated while the slot stays held;
  - co-located fragment pairs execute their ops locally with no link time.

Event ties break on a fixed kind order (resources free before new consumers
bind), then on push order, so traces are bit-identical across runs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .costs import fragment_runtime, remote_op_cost
from .errors import DeadlockDetected, NoQuantumLink, UnresolvedPredecessor
from .model import (
    Fragment,
    Group,
    LinkKind,
    LinkProfile,
    LinkReservation,
    Platform,
    ScheduleEntry,
    links_between,
)

PairSampler = Callable[[LinkProfile], int]


@dataclass(frozen=True)
class Event:
    time_ns: int
    kind: str
    payload: str
    seq: int


@dataclass(frozen=True)
class OpRecord:
    """One completed remote (or co-located) operation, for fidelity ledgers."""

    owner: str
    partner: str
    link_id: str | None      # None when the partners were co-located
    module: str              # owner's module
    time_ns: int


@dataclass(frozen=True)
class RealizeResult:
    entries: tuple[ScheduleEntry, ...]
    link_reservations: tuple[LinkReservation, ...]
    precedence_edges: tuple[tuple[str, str, int], ...]
    events: tuple[Event, ...]
    ops: tuple[OpRecord, ...]
    module_free: dict[str, int]
    link_free: dict[str, int]


# tie order at equal timestamps; kinds starting with "_" are engine-internal
# and never traced
_PRIO = {
    "PAIR_READY": 0,
    "PAIR_EXPIRED": 10,
    "LINK_FREED": 20,
    "_CONSUME": 25,
    "CLASSICAL_MSG_DELIVERED": 30,
    "_OP_DONE": 35,
    "FRAGMENT_END": 40,
    "GROUP_START": 50,
    "JOB_ARRIVAL": 60,
    "_OP_REQUEST": 70,
}

PUBLIC_KINDS = tuple(k for k in _PRIO if not k.startswith("_"))


def expected_pair_sampler(link: LinkProfile) -> int:
    """Deterministic pair-generation duration: the retry expectation."""
    return max(link.pair_time, round(link.pair_time / link.succ_prob))


@dataclass
class _Pipeline:
    owner: str
    partner: str
    link: LinkProfile | None
    total: int
    done: int = 0
    last_completion: int = 0
    requested: bool = False


@dataclass
class _PairInFlight:
    pipeline: _Pipeline
    gen_start: int = 0
    ready: int | None = None
    expires: int = 0
    consumed: bool = False
    consume_scheduled: bool = False


@dataclass
class _LinkState:
    profile: LinkProfile
    floor: int = 0
    busy: int = 0
    pending: list = field(default_factory=list)   # heap of (req_time, owner, partner)
    last_free: int = 0


@dataclass
class _GroupState:
    index: int
    group: Group
    members: list[Fragment]
    prereqs: int
    ready_time: int
    scheduled: bool = False
    start: int = -1
    remaining: int = 0


class _Engine:
    def __init__(self, placements: Sequence[Group], fragments: Mapping[str, Fragment],
                 platform: Platform, arrival_ns: Mapping[str, int],
                 sampler: PairSampler, module_free: Mapping[str, int] | None,
                 link_free: Mapping[str, int] | None):
        self.platform = platform
        self.fragments = dict(fragments)
        self.sampler = sampler
        self.heap: list = []
        self.seq = 0
        self.events: list[Event] = []
        self.ops: list[OpRecord] = []

        self.groups: list[_GroupState] = []
        self.group_of: dict[str, int] = {}
        for idx, group in enumerate(placements):
            members = [self.fragments[fid] for fid in group.fragments]
            ready = max((arrival_ns.get(f.id, 0) for f in members), default=0)
            state = _GroupState(index=idx, group=group, members=members,
                                prereqs=1, ready_time=ready, remaining=len(members))
            self.groups.append(state)
            for f in members:
                self.group_of[f.id] = idx

        # feed-forward prerequisites
        self.msg_targets: dict[str, list[tuple[str, int]]] = {}
        prec_edges = []
        for gs in self.groups:
            for f in gs.members:
                for pred, delay in f.precedence_in:
                    if pred not in self.group_of:
                        raise UnresolvedPredecessor(
                            f"fragment {f.id} gated by unplaced fragment {pred}"
                        )
                    gs.prereqs += 1
                    self.msg_targets.setdefault(pred, []).append((f.id, delay))
                    prec_edges.append((pred, f.id, delay))
        self.precedence_edges = tuple(prec_edges)

        # per-module serial order
        self.module_floor = dict(module_free or {})
        self.next_on_module: dict[str, list[int]] = {}
        for gs in self.groups:
            self.next_on_module.setdefault(gs.group.module, []).append(gs.index)

        # remote-op pipelines; ops between co-located fragments stay local
        self.pipelines: dict[tuple[str, str], _Pipeline] = {}
        self.involvement: dict[str, int] = {fid: 0 for fid in self.group_of}
        self.pipes_of: dict[str, list[_Pipeline]] = {fid: [] for fid in self.group_of}
        for gs in self.groups:
            for f in gs.members:
                for partner_id, count in f.remote_pairs:
                    if partner_id not in self.group_of:
                        continue   # partner not scheduled here; nothing to execute
                    link = self._choose_link(f.id, partner_id)
                    pipe = _Pipeline(owner=f.id, partner=partner_id, link=link, total=count)
                    self.pipelines[(f.id, partner_id)] = pipe
                    self.pipes_of[f.id].append(pipe)
                    self.pipes_of[partner_id].append(pipe)
                    self.involvement[f.id] += count
                    self.involvement[partner_id] += count

        self.links: dict[str, _LinkState] = {}
        for pipe in self.pipelines.values():
            if pipe.link is not None and pipe.link.id not in self.links:
                floor = (link_free or {}).get(pipe.link.id, 0)
                self.links[pipe.link.id] = _LinkState(profile=pipe.link, floor=floor,
                                                      last_free=floor)

        self.pair_in_flight: dict[tuple[str, str], _PairInFlight] = {}
        self.local_end: dict[str, int] = {}
        self.final: dict[str, int] = {}
        self.reservations: dict[tuple[str, str, str], list[int]] = {}
        # value: [first_gen_start, last_consume, pairs]

        # module tokens for the first group of each module
        for module_id, order in sorted(self.next_on_module.items()):
            self._prereq_fired(self.groups[order[0]], self.module_floor.get(module_id, 0))

    # -- helpers ---------------------------------------------------------

    def _choose_link(self, owner_id: str, partner_id: str) -> LinkProfile | None:
        m_owner = self.groups[self.group_of[owner_id]].group.module
        m_partner = self.groups[self.group_of[partner_id]].group.module
        if m_owner == m_partner:
            return None
        direct = links_between(self.platform, m_owner, m_partner, LinkKind.QUANTUM)
        if not direct:
            raise NoQuantumLink(
                f"no quantum link between {m_owner} and {m_partner} "
                f"for fragments {owner_id}/{partner_id}"
            )
        return min(direct, key=lambda e: (remote_op_cost(e), e.id))

    def _push(self, time_ns: int, kind: str, payload: str, data=None) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (time_ns, _PRIO[kind], self.seq, kind, payload, data))

    def _prereq_fired(self, gs: _GroupState, time_ns: int) -> None:
        gs.ready_time = max(gs.ready_time, time_ns)
        gs.prereqs -= 1
        if gs.prereqs == 0 and not gs.scheduled:
            gs.scheduled = True
            payload = (f"group={gs.index} module={gs.group.module} "
                       f"fragments={'|'.join(gs.group.fragments)}")
            self._push(gs.ready_time, "GROUP_START", payload, gs.index)

    # -- event handlers --------------------------------------------------

    def _on_group_start(self, t: int, gs: _GroupState) -> None:
        gs.start = t
        module = self.platform.module(gs.group.module)
        for f in gs.members:
            self.local_end[f.id] = t + fragment_runtime(f, module)
            if self.involvement[f.id] == 0:
                self._push(self.local_end[f.id], "FRAGMENT_END",
                           f"fragment={f.id} module={module.id}", f.id)
        for f in gs.members:
            for pipe in self.pipes_of[f.id]:
                self._activate_pipeline(pipe)

    def _activate_pipeline(self, pipe: _Pipeline) -> None:
        owner_end = self.local_end.get(pipe.owner)
        partner_end = self.local_end.get(pipe.partner)
        if pipe.link is None:
            # co-located: all ops complete when both sides finish local work
            if owner_end is not None and partner_end is not None and not pipe.requested:
                pipe.requested = True
                self._push(max(owner_end, partner_end), "_OP_DONE", "", (pipe, pipe.total))
            return
        if owner_end is not None and not pipe.requested and pipe.done < pipe.total:
            pipe.requested = True
            self._push(max(owner_end, pipe.last_completion), "_OP_REQUEST", "", pipe)
        # a pair generated while the partner was still computing may now be
        # consumable
        pair = self.pair_in_flight.get((pipe.owner, pipe.partner))
        if (pair is not None and pair.ready is not None and not pair.consumed
                and not pair.consume_scheduled and partner_end is not None):
            ct = max(pair.ready, partner_end)
            if ct <= pair.expires:
                pair.consume_scheduled = True
                self._push(ct, "_CONSUME", "", pair)

    def _on_op_request(self, t: int, pipe: _Pipeline) -> None:
        ls = self.links[pipe.link.id]
        heapq.heappush(ls.pending, (t, pipe.owner, pipe.partner))
        self._try_grant(ls, t)

    def _try_grant(self, ls: _LinkState, now: int) -> None:
        while ls.busy < ls.profile.parallelism and ls.pending:
            _, owner, partner = heapq.heappop(ls.pending)
            pipe = self.pipelines[(owner, partner)]
            ls.busy += 1
            grant = max(now, ls.floor)
            pair = _PairInFlight(pipeline=pipe, gen_start=grant)
            self.pair_in_flight[(owner, partner)] = pair
            duration = self.sampler(ls.profile)
            self._push(grant + duration, "PAIR_READY",
                       f"link={ls.profile.id} owner={owner} partner={partner}", pair)

    def _on_pair_ready(self, t: int, pair: _PairInFlight) -> None:
        pipe = pair.pipeline
        pair.ready = t
        pair.expires = t + pipe.link.ttl
        partner_end = self.local_end.get(pipe.partner)
        if partner_end is not None:
            ct = max(t, partner_end)
            if ct <= pair.expires:
                pair.consume_scheduled = True
                self._push(ct, "_CONSUME", "", pair)
                return
        self._push(pair.expires, "PAIR_EXPIRED",
                   f"link={pipe.link.id} owner={pipe.owner} partner={pipe.partner}", pair)

    def _on_pair_expired(self, t: int, pair: _PairInFlight) -> None:
        if pair.consumed or pair.consume_scheduled:
            return   # consumed at or before the deadline; nothing expired
        # the trace shows the expiry, then generation restarts on the held slot
        pipe = pair.pipeline
        pair.ready = None
        pair.gen_start = t
        duration = self.sampler(pipe.link)
        self._push(t + duration, "PAIR_READY",
                   f"link={pipe.link.id} owner={pipe.owner} partner={pipe.partner}", pair)

    def _on_consume(self, t: int, pair: _PairInFlight) -> None:
        pipe = pair.pipeline
        pair.consumed = True
        key = (pipe.link.id, pipe.owner, pipe.partner)
        window = self.reservations.setdefault(key, [pair.gen_start, t, 0])
        window[0] = min(window[0], pair.gen_start)
        window[1] = max(window[1], t)
        window[2] += 1
        self._push(t, "LINK_FREED", f"link={pipe.link.id}", pipe.link)
        done_at = t + pipe.link.bell_op_time + pipe.link.corr_time
        self._push(done_at, "_OP_DONE", "", (pipe, 1))

    def _on_link_freed(self, t: int, link: LinkProfile) -> None:
        ls = self.links[link.id]
        ls.busy -= 1
        ls.last_free = max(ls.last_free, t)
        self._try_grant(ls, t)

    def _on_op_done(self, t: int, pipe: _Pipeline, count: int) -> None:
        pipe.done += count
        pipe.last_completion = t
        pipe.requested = False
        owner_module = self.groups[self.group_of[pipe.owner]].group.module
        link_id = pipe.link.id if pipe.link is not None else None
        for _ in range(count):
            self.ops.append(OpRecord(owner=pipe.owner, partner=pipe.partner,
                                     link_id=link_id, module=owner_module, time_ns=t))
        self.involvement[pipe.owner] -= count
        self.involvement[pipe.partner] -= count
        if pipe.done < pipe.total and pipe.link is not None:
            pipe.requested = True
            self._push(t, "_OP_REQUEST", "", pipe)
        for fid in (pipe.owner, pipe.partner):
            if self.involvement[fid] == 0 and fid in self.local_end and fid not in self.final:
                end = max(self.local_end[fid], t)
                module = self.groups[self.group_of[fid]].group.module
                self._push(end, "FRAGMENT_END", f"fragment={fid} module={module}", fid)

    def _on_fragment_end(self, t: int, fid: str) -> None:
        if fid in self.final:
            return
        self.final[fid] = t
        for target, delay in self.msg_targets.get(fid, ()):
            self._push(t + delay, "CLASSICAL_MSG_DELIVERED",
                       f"from={fid} to={target}", (fid, target))
        gs = self.groups[self.group_of[fid]]
        gs.remaining -= 1
        if gs.remaining == 0:
            order = self.next_on_module[gs.group.module]
            pos = order.index(gs.index)
            if pos + 1 < len(order):
                self._prereq_fired(self.groups[order[pos + 1]], t)
            self.module_floor[gs.group.module] = t

    def _on_msg_delivered(self, t: int, edge: tuple[str, str]) -> None:
        _, target = edge
        self._prereq_fired(self.groups[self.group_of[target]], t)

    # -- main loop -------------------------------------------------------

    def run(self) -> RealizeResult:
        while self.heap:
            time_ns, _, _, kind, payload, data = heapq.heappop(self.heap)
            if kind == "PAIR_EXPIRED" and (data.consumed or data.consume_scheduled):
                continue   # lazily cancelled: the pair was consumed in time
            if not kind.startswith("_"):
                self.events.append(Event(time_ns, kind, payload, len(self.events)))
            if kind == "GROUP_START":
                self._on_group_start(time_ns, self.groups[data])
            elif kind == "_OP_REQUEST":
                self._on_op_request(time_ns, data)
            elif kind == "PAIR_READY":
                self._on_pair_ready(time_ns, data)
            elif kind == "PAIR_EXPIRED":
                self._on_pair_expired(time_ns, data)
            elif kind == "_CONSUME":
                self._on_consume(time_ns, data)
            elif kind == "LINK_FREED":
                self._on_link_freed(time_ns, data)
            elif kind == "_OP_DONE":
                self._on_op_done(time_ns, data[0], data[1])
            elif kind == "FRAGMENT_END":
                self._on_fragment_end(time_ns, data)
            elif kind == "CLASSICAL_MSG_DELIVERED":
                self._on_msg_delivered(time_ns, data)

        missing = sorted(set(self.group_of) - set(self.final))
        if missing:
            raise DeadlockDetected(f"fragments never completed: {', '.join(missing)}")

        entries = tuple(
            ScheduleEntry(
                group=gs.group,
                start_ns=gs.start,
                end_ns=tuple((fid, self.final[fid]) for fid in gs.group.fragments),
            )
            for gs in self.groups
        )
        reservations = tuple(
            LinkReservation(link_id=link_id, start_ns=win[0], end_ns=win[1], pairs=win[2])
            for (link_id, _, _), win in sorted(self.reservations.items())
        )
        link_free = {lid: ls.last_free for lid, ls in sorted(self.links.items())}
        return RealizeResult(
            entries=entries,
            link_reservations=reservations,
            precedence_edges=self.precedence_edges,
            events=tuple(self.events),
            ops=tuple(self.ops),
            module_free=dict(self.module_floor),
            link_free=link_free,
        )


def realize(placements: Sequence[Group], fragments: Mapping[str, Fragment],
            platform: Platform, arrival_ns: Mapping[str, int],
            sampler: PairSampler = expected_pair_sampler,
            module_free: Mapping[str, int] | None = None,
            link_free: Mapping[str, int] | None = None) -> RealizeResult:
    """Run the placed groups through the event engine and return the timed
    execution: schedule entries, link reservations, events, and op records."""
    engine = _Engine(placements, fragments, platform, arrival_ns, sampler,
                     module_free, link_free)
    return engine.run()
