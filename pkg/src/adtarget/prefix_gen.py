"""Ratio-ordered prefix candidates for a single feature.

Types are ranked by the buy-lift ratio ``p_k / q_k``.  The k-th candidate
targets the first ``k`` types of that ranking; its lift is the mediant
``sum(p) / sum(q)`` over the members, which can only fall as ``k`` grows.
The last candidate covers the whole feature and has lift exactly one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from adtarget.errors import DomainError
from adtarget.stats_model import FeatureStats


@dataclass(frozen=True)
class PrefixCandidate:
    feature_index: int
    length: int
    members: tuple[int, ...]
    cum_p: float
    cum_q: float

    @property
    def lift(self) -> float:
        return self.cum_p / self.cum_q

    @property
    def member_set(self) -> frozenset[int]:
        return frozenset(self.members)


@dataclass(frozen=True)
class CandidateFamily:
    feature_index: int
    ranking: tuple[int, ...]
    candidates: tuple[PrefixCandidate, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def __getitem__(self, k: int) -> PrefixCandidate:
        """Candidate of prefix length ``k`` (1-based)."""
        return self.candidates[k - 1]

    @property
    def full(self) -> PrefixCandidate:
        return self.candidates[-1]

    @property
    def top(self) -> PrefixCandidate:
        return self.candidates[0]


def _ratio(p: float, q: float) -> float:
    if q > 0.0:
        return p / q
    if p > 0.0:
        raise DomainError("type with buyers but zero audience share has an infinite ratio")
    return 0.0


def rank_types(feature: FeatureStats) -> tuple[int, ...]:
    """Type indices by non-increasing ``p/q``; ties keep input order.

    Empty types (``p = q = 0``) go last among types of equal ratio.
    """
    keys = []
    for k, t in enumerate(feature.types):
        empty = t.p == 0.0 and t.q == 0.0
        keys.append((-_ratio(t.p, t.q), empty, k))
    return tuple(k for *_, k in sorted(keys))


def build_family(feature: FeatureStats, feature_index: int = 0) -> CandidateFamily:
    """All ``m`` prefixes of the ratio ranking with their cumulative shares."""
    ranking = rank_types(feature)
    types = feature.types
    m = len(types)
    candidates = []
    cum_p = cum_q = 0.0
    for k in range(1, m + 1):
        t = types[ranking[k - 1]]
        cum_p += t.p
        cum_q += t.q
        members = ranking[:k]
        if k == m:
            # The full feature accepts every audience member by definition.
            cp = cq = 1.0
        else:
            cp = math.fsum(types[j].p for j in members)
            cq = math.fsum(types[j].q for j in members)
            if not math.isclose(cp, cum_p, rel_tol=1e-12, abs_tol=1e-300):
                raise ArithmeticError("cumulative p drifted from re-summed members")
            if not math.isclose(cq, cum_q, rel_tol=1e-12, abs_tol=1e-300):
                raise ArithmeticError("cumulative q drifted from re-summed members")
        candidates.append(PrefixCandidate(feature_index, k, members, cp, cq))
    return CandidateFamily(feature_index, ranking, tuple(candidates))


def greedy_subproblem(
    feature: FeatureStats | CandidateFamily, coverage_floor: float
) -> PrefixCandidate:
    """Shortest ratio prefix whose audience share reaches ``coverage_floor``."""
    if not 0.0 <= coverage_floor <= 1.0:
        raise DomainError(f"coverage floor must lie in [0,1], got {coverage_floor!r}")
    family = feature if isinstance(feature, CandidateFamily) else build_family(feature)
    for cand in family.candidates:
        if cand.cum_q >= coverage_floor:
            return cand
    return family.full
