"""Instance adapters: DIMACS CNF formulas and hypergraph 2-colouring."""

from __future__ import annotations

import json
from dataclasses import dataclass

from varlll.errors import InstanceError
from varlll.model import EventSpec, EventSystem, VariableSpec


class DimacsError(InstanceError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class MalformedHeader(DimacsError):
    pass


class MalformedToken(DimacsError):
    pass


class LiteralOutOfRange(DimacsError):
    pass


class ClauseCountMismatch(DimacsError):
    pass


class TautologicalClause(DimacsError):
    pass


class EmptyClause(DimacsError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def satisfied_by(self, assignment) -> bool:
        """``assignment[v - 1]`` is the 0/1 value of variable ``v``."""
        return all(
            any((assignment[abs(l) - 1] == 1) == (l > 0) for l in clause)
            for clause in self.clauses
        )


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF text.

    Clauses may span lines or share one; everything after a line holding a
    lone ``%`` is ignored. A final clause missing its terminating 0 is kept.
    """
    header: tuple[int, int] | None = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    start_line = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line == "%":
            break
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise MalformedHeader("second problem line", lineno)
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
                raise MalformedHeader(f"expected 'p cnf <vars> <clauses>', got {line!r}", lineno)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise MalformedHeader(f"non-integer counts in {line!r}", lineno) from None
            if header[0] < 0 or header[1] < 0:
                raise MalformedHeader(f"negative counts in {line!r}", lineno)
            continue
        if header is None:
            raise MalformedHeader("clause data before the 'p cnf' line", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise MalformedToken(f"not an integer literal: {tok!r}", lineno) from None
            if lit == 0:
                clauses.append(_close_clause(current, start_line or lineno))
                current = []
                start_line = None
                continue
            if abs(lit) > header[0]:
                raise LiteralOutOfRange(f"literal {lit} but only {header[0]} variables", lineno)
            if start_line is None:
                start_line = lineno
            current.append(lit)
    if header is None:
        raise MalformedHeader("missing 'p cnf' line")
    if current:
        clauses.append(_close_clause(current, start_line))
    if len(clauses) != header[1]:
        raise ClauseCountMismatch(f"header declares {header[1]} clauses, found {len(clauses)}")
    return CnfFormula(header[0], tuple(clauses))


def _close_clause(lits: list[int], lineno: int) -> tuple[int, ...]:
    if not lits:
        raise EmptyClause("empty clause", lineno)
    seen = set(lits)
    for l in lits:
        if -l in seen:
            raise TautologicalClause(f"clause contains both {abs(l)} and {-abs(l)}", lineno)
    return tuple(lits)


def serialize_dimacs(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.num_vars} {len(formula.clauses)}"]
    lines += [" ".join(map(str, c)) + " 0" for c in formula.clauses]
    return "\n".join(lines) + "\n"


def cnf_to_event_system(formula: CnfFormula) -> EventSystem:
    """One uniform binary variable per DIMACS variable, one event per violated clause."""
    variables = tuple(VariableSpec.uniform(2) for _ in range(formula.num_vars))
    events = []
    for clause in formula.clauses:
        falsify = {abs(l) - 1: 0 if l > 0 else 1 for l in clause}
        scope = tuple(sorted(falsify))
        events.append(EventSpec.extensional(scope, [tuple(falsify[v] for v in scope)]))
    return EventSystem(variables, tuple(events))


@dataclass(frozen=True)
class Hypergraph:
    num_vertices: int
    edges: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for k, e in enumerate(self.edges):
            if len(e) < 2:
                raise InstanceError(f"edges[{k}] has fewer than 2 vertices")
            if len(set(e)) != len(e):
                raise InstanceError(f"edges[{k}] repeats a vertex")
            if any(not 0 <= v < self.num_vertices for v in e):
                raise InstanceError(f"edges[{k}] has a vertex outside 0..{self.num_vertices - 1}")

    @classmethod
    def from_json(cls, text: str) -> "Hypergraph":
        try:
            data = json.loads(text)
            return cls(int(data["num_vertices"]), tuple(tuple(sorted(e)) for e in data["edges"]))
        except json.JSONDecodeError as exc:
            raise InstanceError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
        except KeyError as exc:
            raise InstanceError(f"missing field {exc.args[0]!r}") from None
        except TypeError as exc:
            raise InstanceError(f"bad hypergraph: {exc}") from None

    def to_json(self) -> str:
        return json.dumps({"num_vertices": self.num_vertices, "edges": [list(e) for e in self.edges]})

    def properly_colored(self, colors) -> bool:
        return all(len({colors[v] for v in e}) > 1 for e in self.edges)


def hypergraph_2coloring_system(h: Hypergraph) -> EventSystem:
    variables = tuple(VariableSpec.uniform(2) for _ in range(h.num_vertices))
    events = tuple(
        EventSpec.extensional(sorted(e), [(0,) * len(e), (1,) * len(e)]) for e in h.edges
    )
    return EventSystem(variables, events)
