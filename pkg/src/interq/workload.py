"""Workload ingestion, synthetic workload generators, and platform presets.

The workload file format is a JSON document with a top-level "jobs" array;
each job carries id, qubits, depth, shots, edges ([u, v] or [u, v, weight]),
modes, and an optional arrival_ns. Platform files mirror the Platform
dataclass fields.
"""

from __future__ import annotations

import json
import math
import random
from pathlib import Path
from typing import Sequence

from .errors import DuplicateJobId, ParseError, UnknownPreset
from .model import (
    CommMode,
    JobSpec,
    LinkKind,
    LinkProfile,
    ModuleProfile,
    Platform,
    classical_link,
    job_from_dict,
    job_to_dict,
    platform_from_dict,
    platform_to_dict,
    quantum_link,
    validate_platform,
)


def load_workload(path: str | Path) -> list[JobSpec]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict) or "jobs" not in data:
        raise ParseError(f"{path}: expected a top-level object with a 'jobs' array")
    jobs: list[JobSpec] = []
    seen: set[str] = set()
    last_arrival = 0
    for index, raw in enumerate(data["jobs"]):
        try:
            job = job_from_dict(raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: jobs[{index}]: {exc}") from exc
        if job.id in seen:
            raise DuplicateJobId(f"{path}: duplicate job id {job.id!r}")
        seen.add(job.id)
        if job.arrival_ns < last_arrival:
            raise ParseError(
                f"{path}: jobs[{index}]: arrival_ns {job.arrival_ns} decreases "
                f"(previous {last_arrival})"
            )
        last_arrival = job.arrival_ns
        jobs.append(job)
    return jobs


def save_workload(jobs: Sequence[JobSpec], path: str | Path) -> None:
    payload = {"jobs": [job_to_dict(job) for job in jobs]}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_platform(path: str | Path) -> Platform:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return platform_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def save_platform(platform: Platform, path: str | Path) -> None:
    Path(path).write_text(json.dumps(platform_to_dict(platform), indent=2) + "\n")


# --------------------------------------------------------------------------
# random workloads
# --------------------------------------------------------------------------

def _random_connected_edges(rng: random.Random, qubits: int,
                            density: float) -> tuple[tuple[int, int, int], ...]:
    """Random connected interaction graph: attachment spanning tree plus extra
    edges proportional to width * density; weights 1..3."""
    if qubits < 2:
        return ()
    weights: dict[tuple[int, int], int] = {}
    for v in range(1, qubits):
        u = rng.randrange(v)
        weights[(u, v)] = rng.randint(1, 3)
    extra = round(qubits * density)
    for _ in range(extra):
        u = rng.randrange(qubits)
        v = rng.randrange(qubits)
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in weights:
            continue
        weights[key] = rng.randint(1, 3)
    return tuple(sorted((u, v, w) for (u, v), w in weights.items()))


def generate_random_workload(n: int, width_range: tuple[int, int],
                             depth_range: tuple[int, int], shots: int, seed: int,
                             density: float = 0.15,
                             modes: frozenset[CommMode] | None = None) -> list[JobSpec]:
    """Reproducible random workload: widths and depths uniform in their
    ranges, random connected interaction graphs, all arrivals at zero."""
    if width_range[0] > width_range[1] or depth_range[0] > depth_range[1]:
        raise ValueError("ranges must be non-empty")
    rng = random.Random(seed)
    pad = max(2, len(str(max(n - 1, 0))))
    jobs = []
    for i in range(n):
        qubits = rng.randint(*width_range)
        depth = rng.randint(*depth_range)
        jobs.append(JobSpec(
            id=f"J{i:0{pad}d}",
            qubits=qubits,
            depth=depth,
            shots=shots,
            edges=_random_connected_edges(rng, qubits, density),
            modes=modes or frozenset(CommMode),
            arrival_ns=0,
        ))
    return jobs


# --------------------------------------------------------------------------
# platform presets
# --------------------------------------------------------------------------

def _complete_classical(modules: list[str], *, tx: int, meas: int, ctrl: int) -> list[LinkProfile]:
    links = []
    for i, a in enumerate(modules):
        for b in modules[i + 1:]:
            links.append(classical_link(f"{a}--{b}", a, b, tx=tx, meas=meas, ctrl=ctrl))
    return links


def _complete_quantum(modules: list[str], **kwargs) -> list[LinkProfile]:
    links = []
    for i, a in enumerate(modules):
        for b in modules[i + 1:]:
            links.append(quantum_link(f"{a}--{b}", a, b, **kwargs))
    return links


def _ibm_locc() -> Platform:
    names = ["ibm_brisbane", "ibm_kawasaki", "ibm_kyiv", "ibm_sherbrooke"]
    modules = tuple(
        ModuleProfile(id=name, capacity=127, layer_time=1_000, shot_overhead=250_000,
                      gate_fidelity_1q=0.9996, gate_fidelity_2q=0.993, meas_fidelity=0.99)
        for name in names
    )
    links = _complete_classical(names, tx=500_000, meas=0, ctrl=1_500_000)
    return Platform(modules=modules, links=tuple(links), comm_mode=CommMode.LOCC,
                    cut_budget=16.0, comm_budget=float("inf"), sampling_factor=1.0)


def _ionq_qcomm() -> Platform:
    aria = [f"ionq_aria_{i}" for i in (1, 2, 3)]
    forte = [f"ionq_forte_{i}" for i in (1, 2, 3)]
    modules = tuple(
        ModuleProfile(id=name, capacity=25, layer_time=100_000, shot_overhead=2_000_000,
                      gate_fidelity_1q=0.9998, gate_fidelity_2q=0.995, meas_fidelity=0.996)
        for name in aria
    ) + tuple(
        ModuleProfile(id=name, capacity=36, layer_time=100_000, shot_overhead=2_000_000,
                      gate_fidelity_1q=0.9998, gate_fidelity_2q=0.995, meas_fidelity=0.996)
        for name in forte
    )
    names = aria + forte
    links = _complete_quantum(
        names, pair_time=200_000, succ_prob=1.0, bell_op_time=200_000,
        corr_time=200_000, pair_fidelity=0.99, ttl=500_000_000, parallelism=1,
        tx=2_000_000,
    )
    return Platform(modules=modules, links=tuple(links), comm_mode=CommMode.QCOMM,
                    cut_budget=float("inf"), comm_budget=float("inf"), sampling_factor=2.0)


def _atomic_qcomm() -> Platform:
    names = [f"ac1000_{i}" for i in (1, 2, 3, 4)]
    modules = tuple(
        ModuleProfile(id=name, capacity=112, layer_time=10_000, shot_overhead=1_000_000,
                      gate_fidelity_1q=0.9997, gate_fidelity_2q=0.994, meas_fidelity=0.995)
        for name in names
    )
    links = _complete_quantum(
        names, pair_time=round(1e9 / 3_000), succ_prob=1.0, bell_op_time=100_000,
        corr_time=300_000, pair_fidelity=0.988, ttl=300_000_000, parallelism=1,
        tx=3_000_000,
    )
    return Platform(modules=modules, links=tuple(links), comm_mode=CommMode.QCOMM,
                    cut_budget=float("inf"), comm_budget=float("inf"), sampling_factor=2.0)


_PRESETS = {
    "IBM_LOCC": _ibm_locc,
    "IONQ_QCOMM": _ionq_qcomm,
    "ATOMIC_QCOMM": _atomic_qcomm,
}


def platform_preset(name: str) -> Platform:
    """Named hardware profile; see _PRESETS for the recognized names."""
    key = name.strip().upper().replace("-", "_")
    if key not in _PRESETS:
        known = ", ".join(sorted(_PRESETS))
        raise UnknownPreset(f"unknown preset {name!r}; expected one of: {known}")
    return validate_platform(_PRESETS[key]())


# --------------------------------------------------------------------------
# reconstructed benchmark-style workloads
# --------------------------------------------------------------------------

def _chain_edges(qubits: int, weight: int) -> tuple[tuple[int, int, int], ...]:
    return tuple((i, i + 1, weight) for i in range(qubits - 1))


def _ring_edges(qubits: int, weight: int) -> tuple[tuple[int, int, int], ...]:
    edges = list(_chain_edges(qubits, weight))
    if qubits > 2:
        edges.append((0, qubits - 1, weight))
    return tuple(sorted(edges))


def _star_edges(qubits: int, weight: int) -> tuple[tuple[int, int, int], ...]:
    return tuple((0, i, weight) for i in range(1, qubits))


def mbl_queko_15_workload() -> list[JobSpec]:
    """A 15-job queue in the style of a mixed MBL/QUEKO/RevLib batch: one
    142-qubit nearest-neighbor MBL circuit (job 10) that no single module
    can host, surrounded by mid-size circuits."""
    rng = random.Random("mbl-queko-15")
    jobs = []
    for i in range(1, 16):
        jid = str(i)
        if i == 10:
            jobs.append(JobSpec(id=jid, qubits=142, depth=30, shots=500,
                                edges=_chain_edges(142, 2)))
            continue
        qubits = rng.randint(12, 64)
        depth = rng.randint(10, 40)
        shots = rng.choice((1000, 2000, 4000))
        shape = rng.choice(("chain", "ring", "random"))
        if shape == "chain":
            edges = _chain_edges(qubits, rng.randint(1, 3))
        elif shape == "ring":
            edges = _ring_edges(qubits, rng.randint(1, 2))
        else:
            edges = _random_connected_edges(rng, qubits, 0.1)
        jobs.append(JobSpec(id=jid, qubits=qubits, depth=depth, shots=shots, edges=edges))
    return jobs


def mixed_11_workload() -> list[JobSpec]:
    """An 11-job cross-architecture comparison queue (jobs 0..10) whose job
    10 is the 142-qubit circuit that must be partitioned everywhere."""
    rng = random.Random("mixed-11")
    jobs = []
    for i in range(11):
        jid = str(i)
        if i == 10:
            jobs.append(JobSpec(id=jid, qubits=142, depth=30, shots=500,
                                edges=_chain_edges(142, 2)))
            continue
        qubits = rng.randint(5, 40)
        depth = rng.randint(10, 30)
        shots = rng.choice((500, 1000, 2000))
        shape = rng.choice(("chain", "ring"))
        edges = (_chain_edges(qubits, rng.randint(1, 2)) if shape == "chain"
                 else _ring_edges(qubits, 1))
        jobs.append(JobSpec(id=jid, qubits=qubits, depth=depth, shots=shots, edges=edges))
    return jobs


_MQT_FAMILIES = ("realamp", "qft", "su2", "dj", "vqe", "ghz", "ae", "twolocal")


def mqt_like_workload(n: int = 20) -> list[JobSpec]:
    """Circuits shaped like common benchmark families (GHZ chains, QFT-style
    denser graphs, hardware-efficient rings), widths 4..100."""
    rng = random.Random("mqt-like")
    jobs = []
    for i in range(n):
        family = _MQT_FAMILIES[i % len(_MQT_FAMILIES)]
        qubits = rng.randint(4, 100)
        depth = rng.randint(8, 40)
        shots = rng.choice((1000, 2000))
        if family == "ghz":
            edges = _chain_edges(qubits, 1)
        elif family == "dj":
            edges = _star_edges(qubits, 1)
        elif family in ("realamp", "su2", "twolocal"):
            edges = _ring_edges(qubits, rng.randint(1, 2))
        elif family == "qft":
            extra = [(u, u + 2, 1) for u in range(qubits - 2)]
            edges = tuple(sorted(set(_chain_edges(qubits, 2)) | set(extra)))
        else:
            edges = _random_connected_edges(rng, qubits, 0.12)
        jobs.append(JobSpec(id=f"{family}_{qubits}_{i}", qubits=qubits, depth=depth,
                            shots=shots, edges=edges))
    return jobs


_SYNTHETIC = {
    "mbl15": mbl_queko_15_workload,
    "mixed11": mixed_11_workload,
    "mqt20": mqt_like_workload,
}


def synthetic_workload(name: str) -> list[JobSpec]:
    key = name.strip().lower()
    if key not in _SYNTHETIC:
        known = ", ".join(sorted(_SYNTHETIC))
        raise UnknownPreset(f"unknown workload {name!r}; expected one of: {known}")
    return _SYNTHETIC[key]()
