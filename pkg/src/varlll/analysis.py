"""Exact analysis of the resampling process.

Everything here is exact rational arithmetic on :class:`fractions.Fraction`.
``Q[n][i]`` is the probability weight of labelled trees with ``n`` nodes
rooted at event ``i`` whose children are neighbours of their parent and whose
sibling labels strictly increase. It obeys

    Q[n][i] = Pr(E_i) * sum over n_1 + ... + n_l = n - 1 of
              Q[n_1][i_1] * ... * Q[n_l][i_l],     N_i = {i_1, ..., i_l}

with the boundary ``Q[0][j] = 1``, which is the coefficient form of
``Q_i(z) = z Pr(E_i) prod_{j in N_i} (Q_j(z) + 1)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterator, Sequence

from varlll.errors import CapExceeded, DimensionMismatch, InstanceError
from varlll.model import EventSystem
from varlll.trees import ValidTree, plane_trees

ENUM_MAX_SIZE = 8
ENUM_MAX_EVENTS = 6


class ConditionNotVerified(UserWarning):
    pass


def _probs(system: EventSystem, probs: Sequence[Fraction] | None) -> list[Fraction]:
    if probs is None:
        return system.probabilities()
    if len(probs) != system.m:
        raise DimensionMismatch(f"{len(probs)} probabilities for {system.m} events")
    return [Fraction(p) for p in probs]


def validate_chi(chi: Sequence[Fraction], m: int | None = None) -> tuple[Fraction, ...]:
    chi = tuple(c if type(c) is Fraction else Fraction(c) for c in chi)
    if m is not None and len(chi) != m:
        raise DimensionMismatch(f"{len(chi)} chi values for {m} events")
    for k, c in enumerate(chi):
        if not 0 < c.numerator < c.denominator:
            raise InstanceError(f"chi[{k + 1}] = {c} is outside (0, 1)")
    return chi


# -- condition --------------------------------------------------------------


@dataclass(frozen=True)
class EventCondition:
    lhs: Fraction
    rhs: Fraction

    @property
    def slack(self) -> Fraction:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


@dataclass(frozen=True)
class ConditionReport:
    events: tuple[EventCondition, ...]
    chi: tuple[Fraction, ...]

    @property
    def holds(self) -> bool:
        return all(e.holds for e in self.events)

    @property
    def strictly(self) -> bool:
        return all(e.slack > 0 for e in self.events)


def check_lll_condition(
    system: EventSystem, chi: Sequence[Fraction], probs: Sequence[Fraction] | None = None
) -> ConditionReport:
    """Compare ``Pr(E_i)`` with ``chi_i * prod_{j in N_i} (1 - chi_j)`` for every event."""
    chi = validate_chi(chi, system.m)
    probs = _probs(system, probs)
    rows = []
    for i, nb in enumerate(system.dependency.neighborhoods):
        rhs = chi[i]
        for j in nb:
            rhs *= 1 - chi[j]
        rows.append(EventCondition(probs[i], rhs))
    return ConditionReport(tuple(rows), chi)


def default_chi(system: EventSystem) -> tuple[Fraction, ...]:
    """``1/|N_i|`` for every event (closed neighbourhoods), ``1/2`` for isolated events."""
    return tuple(
        Fraction(1, len(nb)) if len(nb) > 1 else Fraction(1, 2)
        for nb in system.dependency.neighborhoods
    )


def m_bound(chi: Sequence[Fraction]) -> Fraction:
    chi = validate_chi(chi)
    return max(1 - c for c in chi)


# -- the recurrence ---------------------------------------------------------


@dataclass(frozen=True)
class QTable:
    N: int
    rows: tuple[tuple[Fraction, ...], ...]  # rows[n][i], n = 0..N; rows[0] is all ones

    def value(self, n: int, i: int) -> Fraction:
        return self.rows[n][i]

    @property
    def m(self) -> int:
        return len(self.rows[0])

    def total(self, n: int) -> Fraction:
        return sum(self.rows[n], Fraction(0))

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "values": [
                {"n": n, "event": i + 1, "Q": _rat(self.rows[n][i])}
                for n in range(1, self.N + 1)
                for i in range(self.m)
            ],
        }


def _rat(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _scaled(probs: Sequence[Fraction]) -> tuple[int, list[int]]:
    """Common denominator ``D`` and the integers ``D * p``.

    ``Q[n][i]`` is homogeneous of degree ``n`` in the probabilities, so
    ``D**n * Q[n][i]`` is an integer and all the work can stay in ints.
    """
    D = math.lcm(*(p.denominator for p in probs)) if probs else 1
    return D, [p.numerator * (D // p.denominator) for p in probs]


def q_table(system: EventSystem, probs: Sequence[Fraction] | None = None, N: int = 10) -> QTable:
    if N < 1:
        raise ValueError("N must be >= 1")
    probs = _probs(system, probs)
    D, weights = _scaled(probs)
    nbs = system.dependency.neighborhoods
    m = system.m
    scaled: list[list[int]] = [[1] * m]  # scaled[n][i] = D**n * Q[n][i]
    for n in range(1, N + 1):
        row = []
        for i in range(m):
            # conv[k]: sum over compositions of k of the partial products
            conv = [1] + [0] * (n - 1)
            for j in nbs[i]:
                col = [scaled[k][j] for k in range(n)]
                nxt = [0] * n
                for a, ca in enumerate(conv):
                    if ca:
                        for b in range(n - a):
                            nxt[a + b] += ca * col[b]
                conv = nxt
            row.append(weights[i] * conv[n - 1])
        scaled.append(row)
    rows = tuple(tuple(Fraction(q, D**n) for q in row) for n, row in enumerate(scaled))
    return QTable(N, rows)


class TruncatedSeries:
    """Power series with exact (int or Fraction) coefficients up to a fixed degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence, degree: int | None = None):
        coeffs = list(coeffs)
        if degree is not None:
            coeffs = (coeffs + [0] * (degree + 1))[: degree + 1]
        self.coeffs = tuple(coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k]

    def __eq__(self, other) -> bool:
        return isinstance(other, TruncatedSeries) and self.coeffs == other.coeffs

    def __repr__(self) -> str:
        return f"TruncatedSeries({[str(c) for c in self.coeffs]})"

    def __add__(self, other: "TruncatedSeries | int | Fraction") -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries((self.coeffs[0] + other,) + self.coeffs[1:])
        d = min(self.degree, other.degree)
        return TruncatedSeries([a + b for a, b in zip(self.coeffs[: d + 1], other.coeffs)])

    __radd__ = __add__

    def __mul__(self, other: "TruncatedSeries | int | Fraction") -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries([c * other for c in self.coeffs])
        d = min(self.degree, other.degree)
        out = [0] * (d + 1)
        for a in range(d + 1):
            ca = self.coeffs[a]
            if ca:
                for b in range(d + 1 - a):
                    out[a + b] += ca * other.coeffs[b]
        return TruncatedSeries(out)

    __rmul__ = __mul__

    def shift(self) -> "TruncatedSeries":
        """Multiply by ``z``, keeping the degree."""
        return TruncatedSeries((0,) + self.coeffs[:-1])


def q_series(
    system: EventSystem, probs: Sequence[Fraction] | None = None, N: int = 10
) -> list[TruncatedSeries]:
    """Solve ``Q_i = z p_i prod_{j in N_i}(Q_j + 1)`` by fixed-point sweeps.

    Because of the leading ``z``, sweep ``k`` settles the degree-``k``
    coefficient, so each sweep only needs to work to one degree more than
    the previous one.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    probs = _probs(system, probs)
    # substitute z = w / D so every coefficient stays an integer
    D, weights = _scaled(probs)
    nbs = system.dependency.neighborhoods
    Q = [TruncatedSeries([0]) for _ in range(system.m)]
    for k in range(1, N + 1):
        grown = [TruncatedSeries(q.coeffs, k) for q in Q]
        new = []
        for i, nb in enumerate(nbs):
            prod = TruncatedSeries([1], k)
            for j in nb:
                prod = prod * (grown[j] + 1)
            new.append(prod.shift() * weights[i])
        Q = new
    return [TruncatedSeries([Fraction(c, D**n) for n, c in enumerate(q.coeffs)]) for q in Q]


def forest_series(series: Sequence[TruncatedSeries]) -> TruncatedSeries:
    """``prod_i (1 + Q_i(z))``: weights of forests with strictly increasing root labels."""
    N = series[0].degree
    out = TruncatedSeries([1], N)
    for s in series:
        out = out * (s + 1)
    return out


# -- brute-force tree oracle ------------------------------------------------


def _labelings(shape: tuple, label: int, nbs) -> Iterator[ValidTree]:
    """Every labelling of ``shape`` rooted at ``label`` obeying the tree rules."""

    def children(shapes: tuple, low: int) -> Iterator[tuple[ValidTree, ...]]:
        if not shapes:
            yield ()
            return
        # leave room for the remaining siblings, which need larger labels
        options = [j for j in nbs[label] if j >= low]
        for pos, j in enumerate(options):
            if len(options) - pos < len(shapes):
                break
            for sub in _labelings(shapes[0], j, nbs):
                for rest in children(shapes[1:], j + 1):
                    yield (sub,) + rest

    for kids in children(shape, 0):
        yield ValidTree(label, kids)


def tree_weight(tree: ValidTree, probs: Sequence[Fraction]) -> Fraction:
    w = Fraction(1)
    for label in tree.preorder():
        w *= probs[label]
    return w


def enumerate_valid_trees(
    system: EventSystem,
    root: int,
    size: int,
    probs: Sequence[Fraction] | None = None,
    max_size: int = ENUM_MAX_SIZE,
    max_events: int = ENUM_MAX_EVENTS,
) -> tuple[list[ValidTree], Fraction]:
    """List every valid tree with ``size`` nodes rooted at ``root``.

    Walks all plane tree shapes and labels each by backtracking; exponential
    on purpose, it exists to check :func:`q_table` independently.
    """
    if size > max_size or system.m > max_events:
        raise CapExceeded(
            f"size {size} / {system.m} events exceeds oracle caps ({max_size} / {max_events})"
        )
    if size < 1:
        raise ValueError("size must be >= 1")
    probs = _probs(system, probs)
    nbs = system.dependency.neighborhoods
    trees = [t for shape in plane_trees(size) for t in _labelings(shape, root, nbs)]
    return trees, sum((tree_weight(t, probs) for t in trees), Fraction(0))


@dataclass(frozen=True)
class OracleReport:
    results: dict[tuple[int, int], bool]  # (n, i) -> agrees

    @property
    def ok(self) -> bool:
        return all(self.results.values())

    def failures(self) -> list[tuple[int, int]]:
        return [k for k, v in self.results.items() if not v]


def oracle_check_q(
    system: EventSystem, probs: Sequence[Fraction] | None = None, N: int = 4, **caps
) -> OracleReport:
    probs = _probs(system, probs)
    table = q_table(system, probs, N)
    res = {}
    for n in range(1, N + 1):
        for i in range(system.m):
            _, w = enumerate_valid_trees(system, i, n, probs, **caps)
            res[(n, i)] = w == table.value(n, i)
    return OracleReport(res)


# -- bound chain ------------------------------------------------------------


@dataclass(frozen=True)
class BoundTerm:
    term: Fraction
    bound: Fraction
    pre_identity: Fraction

    @property
    def holds(self) -> bool:
        return self.term < self.bound


def bound_term(
    n_vec: Sequence[int], chi: Sequence[Fraction], neighborhoods: Sequence[Sequence[int]]
) -> BoundTerm:
    """Per-tree term ``prod_i chi_i^n_i (1-chi_i)^s_i C(s_i, n_i)`` against ``prod_i (1-chi_i)^n_i``.

    ``s_i`` is the sum of ``n_j`` over the closed neighbourhood of ``i``.
    Coordinates with ``n_i = 0`` contribute a factor of one.
    """
    chi = validate_chi(chi)
    if not (len(n_vec) == len(chi) == len(neighborhoods)):
        raise DimensionMismatch("n_vec, chi and neighborhoods differ in length")
    if any(k < 0 for k in n_vec) or sum(n_vec) < 1:
        raise ValueError("n_vec must be nonnegative with a positive sum")
    # integer numerators/denominators; one gcd per returned fraction
    t_num = t_den = p_num = b_num = b_den = 1
    for i, ni in enumerate(n_vec):
        if ni == 0:
            continue
        s = sum(n_vec[j] for j in neighborhoods[i])
        a, b = chi[i].numerator, chi[i].denominator
        base = a**ni * (b - a) ** s
        t_num *= base * comb(s, ni)
        p_num *= base * comb(s - 1, ni - 1)
        t_den *= b ** (ni + s)
        b_num *= (b - a) ** ni
        b_den *= b**ni
    term, pre, bound = Fraction(t_num, t_den), Fraction(p_num, t_den), Fraction(b_num, b_den)
    return BoundTerm(term, bound, pre)


# -- decay ------------------------------------------------------------------


def _log(q: Fraction) -> float:
    return math.log(q.numerator) - math.log(q.denominator)


@dataclass(frozen=True)
class DecayRow:
    n: int
    total: Fraction  # sum_i Q[n][i]
    m_power: Fraction
    log_slope: float | None  # log total(n) - log total(n-1)

    @property
    def ratio(self) -> Fraction:
        return self.total / self.m_power


def decay_report(
    qtable: QTable, chi: Sequence[Fraction], condition: ConditionReport | None = None
) -> list[DecayRow]:
    """Tabulate ``sum_i Q[n][i]`` next to ``M**n``.

    Warns with :class:`ConditionNotVerified` unless a passing condition
    report is supplied.
    """
    if condition is None or not condition.holds:
        warnings.warn(
            "LLL condition was not verified for these probabilities and chi",
            ConditionNotVerified,
            stacklevel=2,
        )
    M = m_bound(chi)
    rows = []
    prev = None
    for n in range(1, qtable.N + 1):
        total = qtable.total(n)
        slope = None
        if prev is not None and prev > 0 and total > 0:
            slope = _log(total) - _log(prev)
        rows.append(DecayRow(n, total, M**n, slope))
        prev = total
    return rows


def decay_to_dicts(rows: Sequence[DecayRow]) -> list[dict]:
    return [
        {
            "n": r.n,
            "sum_Q": _rat(r.total),
            "M_pow_n": _rat(r.m_power),
            "ratio": _rat(r.ratio),
            "log_slope": r.log_slope,
            "float_sum_Q": float(r.total),
            "float_M_pow_n": float(r.m_power),
            "float_ratio": float(r.ratio),
        }
        for r in rows
    ]
