"""Critical points at infinity, their indices, and the existence and counting criteria.

Two kinds of critical points at infinity occur:

* a single K2 point ``xi`` with index ``3 - m(xi)``;
* a tuple of K1 points whose interaction matrix is positive definite (the
  family K1+) with index ``4p - 1 - sum m``.

Everything downstream is a signed count ``sum (-1)^index`` over those of
index at most ``k - 1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .critical import Classification, CriticalPointProfile, PointSet
from .errors import ConditionCViolation, DomainError, InternalInconsistency, MarginalCase
from .interaction import PD_MARGIN, GreenKernelConfig, is_positive_definite, least_eigenvalue, \
    matrix_entries


class Kind(str, Enum):
    SINGLE = "single"
    TUPLE = "tuple"


@dataclass(frozen=True)
class K1PlusMember:
    members: tuple[str, ...]
    rho: float


@dataclass(frozen=True)
class CriticalAtInfinity:
    kind: Kind
    members: tuple[str, ...]
    index: int
    m_sum: int
    rho: float | None = None


@dataclass(frozen=True)
class Census:
    """Critical points at infinity together with ``l+`` and ``L0``."""

    points: tuple[CriticalAtInfinity, ...]
    l_plus: int
    L0: int

    @property
    def singles(self):
        return [c for c in self.points if c.kind is Kind.SINGLE]

    @property
    def tuples(self):
        return [c for c in self.points if c.kind is Kind.TUPLE]


@dataclass(frozen=True)
class GateResult:
    k: int
    sum: int
    cond1: bool
    cond2: bool
    verdict: bool


@dataclass(frozen=True)
class CensusReport:
    census: Census
    k1plus: tuple[K1PlusMember, ...]
    gates: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    printed_bounds: dict = field(default_factory=dict)
    exists: bool = False
    total_bound: int = 0
    printed_total_bound: int = 0


# -- enumeration -------------------------------------------------------------

def _pd_or_raise(entries, ids, pd_margin):
    try:
        return is_positive_definite(entries, pd_margin)
    except MarginalCase as exc:
        raise ConditionCViolation(
            f"condition (C) fails for {ids}: least eigenvalue {exc.rho:.3e}", ids, exc.rho) from exc


def enumerate_k1_plus(points: Sequence[CriticalPointProfile], kappa_prime: float, c: float,
                      c_prime: float, config: GreenKernelConfig = GreenKernelConfig(),
                      pd_margin: float = PD_MARGIN) -> list[K1PlusMember]:
    """All subsets of ``points`` (all in K1) with positive definite matrix.

    Level-wise: a candidate of size ``p + 1`` is formed only when all of its
    ``p``-subsets passed, since principal submatrices of a positive definite
    matrix are positive definite.  Output is ordered by size, then
    lexicographically by position in ``points``.
    """
    n = len(points)
    ids = [p.id for p in points]
    if len(set(ids)) != n:
        raise DomainError("profile ids must be unique")
    found: list[K1PlusMember] = []
    level: list[tuple[int, ...]] = []
    for i in range(n):
        entries = matrix_entries([points[i]], kappa_prime, c, c_prime, config)
        if _pd_or_raise(entries, (ids[i],), pd_margin):
            level.append((i,))
            found.append(K1PlusMember((ids[i],), least_eigenvalue(entries)))
    while level:
        passed = set(level)
        nxt = []
        for a, b in itertools.combinations(level, 2):
            if a[:-1] != b[:-1]:
                continue
            cand = a + (b[-1],)
            if any(sub not in passed for sub in itertools.combinations(cand, len(cand) - 1)):
                continue
            subset = [points[i] for i in cand]
            entries = matrix_entries(subset, kappa_prime, c, c_prime, config)
            labels = tuple(ids[i] for i in cand)
            if _pd_or_raise(entries, labels, pd_margin):
                nxt.append(cand)
                found.append(K1PlusMember(labels, least_eigenvalue(entries)))
        level = sorted(nxt)
    return found


# -- indices -----------------------------------------------------------------

def single_index(m: int) -> int:
    return 3 - m


def tuple_index(ms: Sequence[int]) -> int:
    return 4 * len(ms) - 1 - sum(ms)


def indices_at_infinity(k1plus: Sequence[K1PlusMember], k2points: Sequence[tuple[str, int]],
                        m_of: dict[str, int]) -> Census:
    """Index every critical point at infinity.

    ``k2points`` holds ``(id, m)`` pairs; ``m_of`` maps K1 ids to ``m``.  With
    no critical points at infinity ``L0 = 0``.
    """
    out = [CriticalAtInfinity(Kind.SINGLE, (pid,), single_index(m), m) for pid, m in k2points]
    for member in k1plus:
        ms = [m_of[i] for i in member.members]
        out.append(CriticalAtInfinity(Kind.TUPLE, member.members, tuple_index(ms), sum(ms),
                                      member.rho))
    l_plus = max((len(m.members) for m in k1plus), default=0)
    L0 = max((c.index for c in out), default=0)
    return Census(tuple(out), l_plus, L0)


def census_from_classifications(profiles: Sequence[CriticalPointProfile],
                                classes: Sequence[Classification], kappa_prime2: float, c: float,
                                c_prime: float, config: GreenKernelConfig = GreenKernelConfig(),
                                pd_margin: float = PD_MARGIN) -> tuple[Census, list[K1PlusMember]]:
    k1 = [p for p, cl in zip(profiles, classes) if cl.set is PointSet.K1]
    k2 = [(p.id, cl.m) for p, cl in zip(profiles, classes) if cl.set is PointSet.K2]
    k1plus = enumerate_k1_plus(k1, kappa_prime2, c, c_prime, config, pd_margin)
    m_of = {p.id: cl.m for p, cl in zip(profiles, classes)}
    return indices_at_infinity(k1plus, k2, m_of), k1plus


# -- criteria ----------------------------------------------------------------

def _check_k(k: int) -> None:
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")


def signed_count(census: Census, k: int) -> int:
    """``sum (-1)^index`` over critical points at infinity of index ``<= k - 1``."""
    return sum((-1) ** c.index for c in census.points if c.index <= k - 1)


def theorem1_gate(census: Census, k: int) -> GateResult:
    """Existence gate in the selection of the theorem statement.

    The sum filters K2 points by ``m >= 4 - k`` with sign ``(-1)^(m+1)`` and
    tuples by ``sum m >= 4p - k`` with sign ``(-1)^index``; condition 2 asks
    that no critical point at infinity has index exactly ``k``.
    """
    _check_k(k)
    total = 0
    cond2 = True
    for c in census.points:
        if c.kind is Kind.SINGLE:
            if c.m_sum >= 4 - k:
                total += (-1) ** (c.m_sum + 1)
            if 3 - c.m_sum == k:
                cond2 = False
        else:
            p = len(c.members)
            if c.m_sum >= 4 * p - k:
                total += (-1) ** c.index
            if c.m_sum == 4 * p - (k + 1):
                cond2 = False
    cond1 = total != 1
    return GateResult(k, total, cond1, cond2, cond1 and cond2)


def multiplicity_bound(census: Census, k: int) -> int:
    """Lower bound ``|1 - sum_{index <= k-1} (-1)^index|`` on solutions of Morse index ``<= k``."""
    _check_k(k)
    return abs(1 - signed_count(census, k))


def multiplicity_bound_printed(census: Census, k: int | None) -> int:
    """The bound evaluated literally as displayed in the source statement.

    K2 points are filtered by ``m <= 4 - k`` with sign ``+(-1)^m`` and tuples
    with ``sum m >= 4p - k`` enter with ``-(-1)^(sum m)``.  ``k=None`` drops
    the filters (the total-count corollary).
    """
    total = 1
    for c in census.points:
        if c.kind is Kind.SINGLE:
            if k is None or c.m_sum <= 4 - k:
                total += (-1) ** c.m_sum
        else:
            if k is None or c.m_sum >= 4 * len(c.members) - k:
                total -= (-1) ** c.m_sum
    return abs(total)


def full_criterion(census: Census) -> tuple[bool, int]:
    """Gate and bound at ``k = L0 + 1``, where condition 2 holds automatically."""
    k = census.L0 + 1
    gate = theorem1_gate(census, k)
    if not gate.cond2:
        raise InternalInconsistency(f"condition 2 fails at k = L0 + 1 = {k}; census {census}")
    return gate.verdict, multiplicity_bound(census, k)


def build_report(census: Census, k1plus: Sequence[K1PlusMember]) -> CensusReport:
    ks = range(1, census.L0 + 2)
    exists, total = full_criterion(census)
    return CensusReport(
        census=census, k1plus=tuple(k1plus),
        gates={k: theorem1_gate(census, k) for k in ks},
        bounds={k: multiplicity_bound(census, k) for k in ks},
        printed_bounds={k: multiplicity_bound_printed(census, k) for k in ks},
        exists=exists, total_bound=total,
        printed_total_bound=multiplicity_bound_printed(census, None))
