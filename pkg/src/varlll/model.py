"""Variables, events, scopes and the dependency graph.

Events are indexed 0..m-1 in storage order; that order is the "least
indexed" order the sampler uses. User-facing output shifts to 1-based.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Iterable, Sequence

from varlll.errors import EnumerationCapExceeded, InstanceError

DEFAULT_ENUM_CAP = 10**6

Assignment = tuple[int, ...]


def parse_fraction(text: Any) -> Fraction:
    """Accept "a/b", integers, or decimal strings; floats are rejected."""
    if isinstance(text, bool) or isinstance(text, float):
        raise InstanceError(f"expected an exact rational, got {text!r}")
    try:
        return Fraction(text)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InstanceError(f"not a rational: {text!r}") from exc


def format_fraction(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class VariableSpec:
    domain_size: int
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if self.domain_size < 1:
            raise InstanceError(f"domain_size must be >= 1, got {self.domain_size}")
        if len(self.weights) != self.domain_size:
            raise InstanceError(
                f"{len(self.weights)} weights for a domain of size {self.domain_size}"
            )
        if any(w < 0 for w in self.weights):
            raise InstanceError("weights must be nonnegative")
        if sum(self.weights) != 1:
            raise InstanceError(f"weights sum to {sum(self.weights)}, not 1")

    @classmethod
    def uniform(cls, domain_size: int) -> "VariableSpec":
        if domain_size < 1:
            raise InstanceError(f"domain_size must be >= 1, got {domain_size}")
        return cls(domain_size, (Fraction(1, domain_size),) * domain_size)


@dataclass(frozen=True)
class EventSpec:
    """An event over a scope of variables.

    Exactly one of ``forbidden`` (extensional: the set of scope tuples under
    which the event occurs) and ``predicate`` (intensional: called with the
    scope tuple) is given.
    """

    scope: tuple[int, ...]
    forbidden: frozenset[tuple[int, ...]] | None = None
    predicate: Callable[[tuple[int, ...]], bool] | None = field(
        default=None, compare=False
    )

    def __post_init__(self):
        if not self.scope:
            raise InstanceError("event scope must be nonempty")
        if any(b <= a for a, b in zip(self.scope, self.scope[1:])):
            raise InstanceError(f"scope {list(self.scope)} is not strictly increasing")
        if (self.forbidden is None) == (self.predicate is None):
            raise InstanceError("give exactly one of forbidden tuples or a predicate")
        if self.forbidden is not None:
            for t in self.forbidden:
                if len(t) != len(self.scope):
                    raise InstanceError(
                        f"forbidden tuple {list(t)} has arity {len(t)}, scope has {len(self.scope)}"
                    )

    @classmethod
    def extensional(cls, scope: Iterable[int], forbidden: Iterable[Sequence[int]]) -> "EventSpec":
        return cls(tuple(scope), frozenset(tuple(t) for t in forbidden))

    @classmethod
    def intensional(cls, scope: Iterable[int], predicate: Callable[[tuple[int, ...]], bool]) -> "EventSpec":
        return cls(tuple(scope), predicate=predicate)

    @property
    def is_extensional(self) -> bool:
        return self.forbidden is not None

    def occurs_on(self, scope_values: tuple[int, ...]) -> bool:
        if self.forbidden is not None:
            return scope_values in self.forbidden
        return bool(self.predicate(scope_values))


@dataclass(frozen=True)
class DependencyGraph:
    """Closed neighbourhoods: ``neighborhoods[i]`` is sorted and contains ``i``."""

    neighborhoods: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.neighborhoods)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.neighborhoods[i]

    def is_symmetric(self) -> bool:
        return all(i in self.neighborhoods[j] for i, nb in enumerate(self.neighborhoods) for j in nb)

    def is_reflexive(self) -> bool:
        return all(i in nb for i, nb in enumerate(self.neighborhoods))


def build_dependency_graph(events: Sequence[EventSpec]) -> DependencyGraph:
    by_var: dict[int, list[int]] = {}
    for i, ev in enumerate(events):
        for v in ev.scope:
            by_var.setdefault(v, []).append(i)
    nbs = []
    for ev in events:
        nb = set()
        for v in ev.scope:
            nb.update(by_var[v])
        nbs.append(tuple(sorted(nb)))
    return DependencyGraph(tuple(nbs))


@dataclass(frozen=True)
class EventSystem:
    variables: tuple[VariableSpec, ...]
    events: tuple[EventSpec, ...]

    def __post_init__(self):
        n = len(self.variables)
        for j, ev in enumerate(self.events):
            for v in ev.scope:
                if not 0 <= v < n:
                    raise InstanceError(f"events[{j}].scope: variable {v} out of range 0..{n - 1}")
            if ev.forbidden is not None:
                for t in ev.forbidden:
                    for v, x in zip(ev.scope, t):
                        if not 0 <= x < self.variables[v].domain_size:
                            raise InstanceError(
                                f"events[{j}].forbidden: value {x} illegal for variable {v}"
                            )

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.events)

    @cached_property
    def dependency(self) -> DependencyGraph:
        return build_dependency_graph(self.events)

    def probabilities(self, cap: int = DEFAULT_ENUM_CAP) -> list[Fraction]:
        return [event_probability(ev, self.variables, cap) for ev in self.events]

    def occurring(self, assignment: Sequence[int]) -> list[int]:
        return [j for j, ev in enumerate(self.events) if evaluate_event(ev, assignment)]


def event_probability(
    event: EventSpec, variables: Sequence[VariableSpec], cap: int = DEFAULT_ENUM_CAP
) -> Fraction:
    """Exact probability of ``event`` under the product distribution."""
    weights = [variables[v].weights for v in event.scope]
    if event.forbidden is not None:
        total = Fraction(0)
        for t in event.forbidden:
            w = Fraction(1)
            for ws, x in zip(weights, t):
                w *= ws[x]
            total += w
        return total
    size = 1
    for ws in weights:
        size *= len(ws)
    if size > cap:
        raise EnumerationCapExceeded(
            f"scope domain has {size} tuples, cap is {cap}; supply Pr(E) manually"
        )
    total = Fraction(0)
    for t in itertools.product(*(range(len(ws)) for ws in weights)):
        if event.occurs_on(t):
            w = Fraction(1)
            for ws, x in zip(weights, t):
                w *= ws[x]
            total += w
    return total


def evaluate_event(event: EventSpec, assignment: Sequence[int]) -> bool:
    return event.occurs_on(tuple(assignment[v] for v in event.scope))


def redundant_scope_variables(event: EventSpec, variables: Sequence[VariableSpec]) -> list[int]:
    """Scope variables an extensional event provably does not depend on.

    Only a lint: declared scopes are never rewritten.
    """
    if event.forbidden is None:
        raise InstanceError("scope lint needs an extensional event")
    sizes = [variables[v].domain_size for v in event.scope]
    out = []
    for k, v in enumerate(event.scope):
        depends = False
        for t in itertools.product(*(range(s) for s in sizes)):
            hit = t in event.forbidden
            for x in range(sizes[k]):
                if (t[:k] + (x,) + t[k + 1:] in event.forbidden) != hit:
                    depends = True
                    break
            if depends:
                break
        if not depends:
            out.append(v)
    return out


# -- JSON instance files ----------------------------------------------------


def system_from_dict(data: dict) -> EventSystem:
    try:
        n = data["n"]
        raw_vars = data["variables"]
        raw_events = data["events"]
    except KeyError as exc:
        raise InstanceError(f"missing top-level field {exc.args[0]!r}") from None
    if not isinstance(n, int) or len(raw_vars) != n:
        raise InstanceError(f"field 'n' = {n!r} does not match {len(raw_vars)} variables")
    variables = []
    for k, rv in enumerate(raw_vars):
        try:
            size = rv["domain_size"]
        except KeyError:
            raise InstanceError(f"variables[{k}]: missing 'domain_size'") from None
        try:
            if "weights" in rv:
                variables.append(VariableSpec(size, tuple(parse_fraction(w) for w in rv["weights"])))
            else:
                variables.append(VariableSpec.uniform(size))
        except InstanceError as exc:
            raise InstanceError(f"variables[{k}]: {exc}") from None
    events = []
    for j, re_ in enumerate(raw_events):
        try:
            events.append(EventSpec.extensional(re_["scope"], re_["forbidden"]))
        except KeyError as exc:
            raise InstanceError(f"events[{j}]: missing {exc.args[0]!r}") from None
        except (InstanceError, TypeError) as exc:
            raise InstanceError(f"events[{j}]: {exc}") from None
    return EventSystem(tuple(variables), tuple(events))


def system_to_dict(system: EventSystem) -> dict:
    events = []
    for j, ev in enumerate(system.events):
        if ev.forbidden is None:
            raise InstanceError(f"events[{j}] is intensional and cannot be written to a file")
        events.append({"scope": list(ev.scope), "forbidden": [list(t) for t in sorted(ev.forbidden)]})
    return {
        "n": system.n,
        "variables": [
            {"domain_size": v.domain_size, "weights": [format_fraction(w) for w in v.weights]}
            for v in system.variables
        ],
        "events": events,
    }


def load_system(text: str) -> EventSystem:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InstanceError("instance must be a JSON object")
    return system_from_dict(data)


def dump_system(system: EventSystem) -> str:
    return json.dumps(system_to_dict(system), indent=2) + "\n"
