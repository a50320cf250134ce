"""Instance builders shared by the test modules."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from varlll.analysis import check_lll_condition, default_chi
from varlll.model import EventSpec, EventSystem, VariableSpec
from varlll.problems import CnfFormula, Hypergraph, cnf_to_event_system, hypergraph_2coloring_system

BIN = VariableSpec.uniform(2)

# acceptance criterion number -> (passed, one-line summary)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def single_event(p_den: int = 2) -> EventSystem:
    """One variable uniform on ``p_den`` values; the event is ``X_0 = 0``."""
    return EventSystem((VariableSpec.uniform(p_den),), (EventSpec.extensional([0], [(0,)]),))


def mutual_pair() -> EventSystem:
    return EventSystem((BIN,) * 3, (EventSpec.extensional([0, 1], [(0, 0)]),
                                    EventSpec.extensional([1, 2], [(0, 0)])))


def path3() -> EventSystem:
    return EventSystem((BIN,) * 4, (EventSpec.extensional([0, 1], [(0, 0)]),
                                    EventSpec.extensional([1, 2], [(0, 0)]),
                                    EventSpec.extensional([2, 3], [(0, 0)])))


def _canonical(m: int, edges: frozenset) -> tuple:
    best = None
    for perm in itertools.permutations(range(m)):
        key = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges))
        if best is None or key < best:
            best = key
    return best


def small_graphs(max_m: int = 4) -> list[tuple[int, tuple]]:
    """Every graph on 1..max_m vertices up to isomorphism, as (m, edge list)."""
    out = []
    for m in range(1, max_m + 1):
        pairs = list(itertools.combinations(range(m), 2))
        seen = set()
        for r in range(len(pairs) + 1):
            for es in itertools.combinations(pairs, r):
                key = _canonical(m, frozenset(es))
                if key not in seen:
                    seen.add(key)
                    out.append((m, key))
    return out


def system_from_graph(m: int, edges) -> EventSystem:
    """Realise a graph as a scope family: a private variable per event plus one per edge."""
    scopes = [[i] for i in range(m)]
    for k, (a, b) in enumerate(edges):
        v = m + k
        scopes[a].append(v)
        scopes[b].append(v)
    n = m + len(edges)
    events = tuple(EventSpec.extensional(sorted(s), [(0,) * len(s)]) for s in scopes)
    return EventSystem((BIN,) * n, events)


def random_cnf(rng: random.Random, n: int, m: int, k: int) -> CnfFormula:
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), k)
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return CnfFormula(n, tuple(clauses))


def random_hypergraph(rng: random.Random, n: int, m: int, k: int) -> Hypergraph:
    return Hypergraph(n, tuple(tuple(sorted(rng.sample(range(n), k))) for _ in range(m)))


def lll_instances(count: int = 12):
    """Deterministic instances that satisfy the condition with the default chi.

    Yields (name, system, checker) where checker re-evaluates an assignment
    against the original formula or hypergraph.
    """
    rng = random.Random(2024)
    shapes = [("cnf", 60, 20, 6), ("hyp", 60, 20, 7), ("cnf", 100, 40, 7), ("hyp", 100, 40, 8)]
    out = []
    while len(out) < count:
        kind, n, m, k = shapes[len(out) % len(shapes)]
        if kind == "cnf":
            obj = random_cnf(rng, n, m, k)
            system = cnf_to_event_system(obj)
            checker = obj.satisfied_by
        else:
            obj = random_hypergraph(rng, n, m, k)
            system = hypergraph_2coloring_system(obj)
            checker = obj.properly_colored
        if check_lll_condition(system, default_chi(system)).holds:
            out.append((f"{kind}{len(out)}", obj, system, checker))
    return out


def verification_instances():
    """(name, system, max_calls): LLL and non-LLL, some forced into cutoff."""
    rng = random.Random(7)
    out = []
    for k, (name, obj, system, _) in enumerate(lll_instances(8)):
        out.append((name, system, 10**6))
    for t in range(6):
        f = random_cnf(rng, 6, 12, 3)
        out.append((f"dense3sat{t}", cnf_to_event_system(f), 40))
    for t in range(4):
        h = random_hypergraph(rng, 7, 10, 3)
        out.append((f"densehyp{t}", hypergraph_2coloring_system(h), 30))
    unsat = CnfFormula(3, tuple(
        tuple(v if (mask >> (v - 1)) & 1 else -v for v in (1, 2, 3)) for mask in range(8)))
    out.append(("unsat3", cnf_to_event_system(unsat), 25))
    out.append(("pair", mutual_pair(), 10**6))
    out.append(("path3", path3(), 10**6))
    out.append(("single", single_event(), 3))
    return out


def probs_grid(m: int, values=(Fraction(1, 10), Fraction(1, 8), Fraction(1, 3))):
    return list(itertools.product(values, repeat=m))
