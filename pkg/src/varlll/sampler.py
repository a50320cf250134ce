"""Recursive resampling algorithm with trace recording and checkers.

Draw discipline: the initial sample draws variables 0..n-1 in order; every
resample draws its scope variables in ascending order, one 64-bit draw each
(see :mod:`varlll.rng`).
"""

from __future__ import annotations

import enum
import itertools
import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from varlll.errors import (
    DomainTooLarge,
    EventNeverOccurs,
    InvariantViolation,
    SnapshotsMissing,
)
from varlll.model import Assignment, EventSystem
from varlll.rng import SplitMix64, draw, thresholds
from varlll.trees import ValidTree

DEFAULT_MAX_CALLS = 10**6
RANDOMNESS_DOMAIN_CAP = 4096


class Kind(str, enum.Enum):
    ROOT = "ROOT"
    RECURSIVE = "RECURSIVE"


class Outcome(str, enum.Enum):
    SUCCESS = "SUCCESS"
    CUTOFF = "CUTOFF"


@dataclass(frozen=True)
class ResampleRecord:
    seq: int
    event_id: int
    kind: Kind
    parent: int | None = None
    # snapshots, only with snapshots=True: before the call, right after its
    # own resampling step, and when the call returns (None if cut off)
    pre: Assignment | None = None
    resampled: Assignment | None = None
    post: Assignment | None = None


@dataclass(frozen=True)
class ExecutionTrace:
    seed: int
    outcome: Outcome
    final_assignment: Assignment
    records: tuple[ResampleRecord, ...]
    phase_boundaries: tuple[int, ...]
    snapshots: bool = False

    @property
    def calls(self) -> int:
        return len(self.records)

    @property
    def root_event_ids(self) -> list[int]:
        return [self.records[s].event_id for s in self.phase_boundaries]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "outcome": self.outcome.value,
            "final_assignment": list(self.final_assignment),
            "records": [
                {"event_id": r.event_id, "kind": r.kind.value, "parent": r.parent, "seq": r.seq}
                for r in self.records
            ],
            "phase_boundaries": list(self.phase_boundaries),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


class _Engine:
    """Precomputed per-system tables so the hot loop stays cheap."""

    def __init__(self, system: EventSystem):
        self.cuts = [thresholds(v.weights) for v in system.variables]
        self.scopes = [ev.scope for ev in system.events]
        self.events = system.events
        self.nbs = system.dependency.neighborhoods

    def occurs(self, j: int, values: list[int]) -> bool:
        return self.events[j].occurs_on(tuple(values[v] for v in self.scopes[j]))

    def first_occurring(self, candidates, values: list[int]) -> int | None:
        for j in candidates:
            if self.occurs(j, values):
                return j
        return None


def run(
    system: EventSystem,
    seed: int = 0,
    max_calls: int = DEFAULT_MAX_CALLS,
    snapshots: bool = False,
) -> ExecutionTrace:
    """Run the sampler until no event occurs or ``max_calls`` calls were made.

    Recursion is kept on an explicit stack; a frame's neighbourhood is
    rescanned from the current assignment each time control returns to it.
    """
    if max_calls < 1:
        raise ValueError("max_calls must be >= 1")
    eng = _Engine(system)
    rng = SplitMix64(seed)
    values = [draw(rng, c) for c in eng.cuts]
    records: list[dict] = []
    phases: list[int] = []
    outcome = Outcome.SUCCESS
    all_events = range(system.m)

    def enter(j: int, kind: Kind, parent: int | None) -> int:
        seq = len(records)
        rec = {"seq": seq, "event_id": j, "kind": kind, "parent": parent}
        if snapshots:
            rec["pre"] = tuple(values)
        for v in eng.scopes[j]:
            values[v] = draw(rng, eng.cuts[v])
        if snapshots:
            rec["resampled"] = tuple(values)
        records.append(rec)
        return seq

    last_root = -1
    while True:
        i = eng.first_occurring(all_events, values)
        if i is None:
            break
        if len(records) >= max_calls:
            outcome = Outcome.CUTOFF
            break
        if i <= last_root:
            raise InvariantViolation(f"root event {i} after root {last_root}")
        last_root = i
        phases.append(len(records))
        stack = [(i, enter(i, Kind.ROOT, None))]
        while stack:
            j, seq = stack[-1]
            k = eng.first_occurring(eng.nbs[j], values)
            if k is None:
                stack.pop()
                if snapshots:
                    records[seq]["post"] = tuple(values)
                continue
            if len(records) >= max_calls:
                outcome = Outcome.CUTOFF
                break
            stack.append((k, enter(k, Kind.RECURSIVE, seq)))
        if outcome is Outcome.CUTOFF:
            break

    if len(phases) > system.m:
        raise InvariantViolation(f"{len(phases)} phases for {system.m} events")
    final = tuple(values)
    if outcome is Outcome.SUCCESS and system.occurring(final):
        raise InvariantViolation("SUCCESS with an occurring event")
    return ExecutionTrace(
        seed=seed,
        outcome=outcome,
        final_assignment=final,
        records=tuple(ResampleRecord(**r) for r in records),
        phase_boundaries=tuple(phases),
        snapshots=snapshots,
    )


# -- checkers ---------------------------------------------------------------


@dataclass(frozen=True)
class ProgressViolation:
    seq: int
    event_id: int
    newly_occurring: tuple[int, ...]


def verify_progress(trace: ExecutionTrace, system: EventSystem) -> list[ProgressViolation]:
    """Events absent when a call starts must still be absent when it returns.

    Calls cut off before returning are skipped.
    """
    if trace.records and not trace.snapshots:
        raise SnapshotsMissing("trace was recorded without assignment snapshots")
    out = []
    for r in trace.records:
        if r.post is None:
            continue
        if r.pre is None:
            raise SnapshotsMissing(f"record {r.seq} has no pre-call snapshot")
        before = set(system.occurring(r.pre))
        after = set(system.occurring(r.post))
        bad = tuple(sorted(after - before))
        if bad:
            out.append(ProgressViolation(r.seq, r.event_id, bad))
    return out


def verify_locality(trace: ExecutionTrace, system: EventSystem) -> list[int]:
    """Sequence numbers of calls whose resampling step touched out-of-scope variables."""
    if trace.records and not trace.snapshots:
        raise SnapshotsMissing("trace was recorded without assignment snapshots")
    bad = []
    for r in trace.records:
        scope = set(system.events[r.event_id].scope)
        if any(a != b for v, (a, b) in enumerate(zip(r.pre, r.resampled)) if v not in scope):
            bad.append(r.seq)
    return bad


@dataclass(frozen=True)
class ForestCheck:
    preorder: bool
    neighbor: bool
    increasing: bool

    @property
    def ok(self) -> bool:
        return self.preorder and self.neighbor and self.increasing


def reconstruct_witness_forest(
    trace: ExecutionTrace, system: EventSystem
) -> tuple[list[ValidTree], ForestCheck]:
    """Rebuild the call forest from parent links and check its structure.

    Checks: the forest's preorder is the call order; every child's label is a
    neighbour of its parent's label; sibling labels and root labels strictly
    increase.
    """
    children: dict[int | None, list[int]] = {}
    for r in trace.records:
        children.setdefault(r.parent, []).append(r.seq)
    labels = {r.seq: r.event_id for r in trace.records}

    order: list[int] = []
    stack = list(reversed(children.get(None, [])))
    while stack:
        s = stack.pop()
        order.append(s)
        stack.extend(reversed(children.get(s, [])))
    preorder_ok = order == [r.seq for r in trace.records]

    nbs = system.dependency.neighborhoods
    neighbor_ok = all(
        r.event_id in nbs[labels[r.parent]]
        for r in trace.records
        if r.parent is not None and r.parent in labels
    ) and all(r.parent is None or r.parent in labels for r in trace.records)

    def strictly_increasing(seqs: list[int]) -> bool:
        ls = [labels[s] for s in seqs]
        return all(a < b for a, b in zip(ls, ls[1:]))

    increasing_ok = all(strictly_increasing(c) for c in children.values())

    def build(s: int) -> ValidTree:
        return ValidTree(labels[s], tuple(build(c) for c in children.get(s, [])))

    forest = [build(s) for s in children.get(None, [])] if preorder_ok else []
    return forest, ForestCheck(preorder_ok, neighbor_ok, increasing_ok)


def randomness_test(system: EventSystem, event_id: int, samples: int, seed: int = 0) -> float:
    """Total-variation distance between post-resample assignments and the product law.

    Draws ``samples`` assignments; whenever the event occurs, its scope is
    resampled and the result tallied. Only tiny systems are accepted since
    the whole joint law is tabulated.
    """
    size = 1
    for v in system.variables:
        size *= v.domain_size
    if size > RANDOMNESS_DOMAIN_CAP:
        raise DomainTooLarge(f"joint domain has {size} points, cap is {RANDOMNESS_DOMAIN_CAP}")
    eng = _Engine(system)
    rng = SplitMix64(seed)
    scope = eng.scopes[event_id]
    tally: Counter[tuple[int, ...]] = Counter()
    for _ in range(samples):
        values = [draw(rng, c) for c in eng.cuts]
        if not eng.occurs(event_id, values):
            continue
        for v in scope:
            values[v] = draw(rng, eng.cuts[v])
        tally[tuple(values)] += 1
    hits = sum(tally.values())
    if hits == 0:
        raise EventNeverOccurs(f"event {event_id + 1} never occurred in {samples} draws")

    tv = Fraction(0)
    for point in itertools.product(*(range(v.domain_size) for v in system.variables)):
        p = Fraction(1)
        for var, x in zip(system.variables, point):
            p *= var.weights[x]
        tv += abs(Fraction(tally.get(point, 0), hits) - p)
    return float(tv / 2)


def replica_seeds(seed: int, runs: int) -> list[int]:
    """Seeds of independent Monte Carlo replicas: ``seed + index``."""
    return [seed + r for r in range(runs)]


def check_trace(trace: ExecutionTrace, system: EventSystem) -> dict[str, bool]:
    """All per-trace invariants at once; used by verification mode."""
    roots = trace.root_event_ids
    _, forest = reconstruct_witness_forest(trace, system)
    res = {
        "root_increasing": all(a < b for a, b in zip(roots, roots[1:])),
        "phase_bound": len(roots) <= system.m,
        "forest_preorder": forest.preorder,
        "forest_neighbor": forest.neighbor,
        "forest_increasing": forest.increasing,
        "success_clean": trace.outcome is not Outcome.SUCCESS
        or not system.occurring(trace.final_assignment),
    }
    if trace.snapshots:
        res["progress"] = not verify_progress(trace, system)
        res["locality"] = not verify_locality(trace, system)
    return res

