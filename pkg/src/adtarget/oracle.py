"""Brute-force reference answers.

Everything here enumerates and multiplies plain probabilities; nothing goes
through logarithms, rankings or bounds, so a bug in the fast path cannot be
mirrored here.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

from adtarget.errors import DomainError, OracleLimitError
from adtarget.prefix_gen import CandidateFamily
from adtarget.stats_model import FeatureStats

log = logging.getLogger(__name__)

MAX_SUBSET_TYPES = 20
MAX_COMBINATIONS = 10**7


@dataclass(frozen=True)
class Discrepancy:
    reference_objective: float
    reference_selection: tuple
    checked_objective: float
    checked_selection: tuple


@dataclass(frozen=True)
class OracleResult:
    best_objective: float
    best_selection: tuple
    evaluated: int
    discrepancy: Discrepancy | None = None


def _check_floor(L: float) -> None:
    if not 0.0 <= L <= 1.0:
        raise DomainError(f"coverage floor must lie in [0,1], got {L!r}")


def subset_oracle(feature: FeatureStats, L_i: float) -> OracleResult:
    """Best-lift subset of types among all subsets with audience share >= ``L_i``.

    Ties go to the smaller subset, then to the lexicographically smaller
    sorted index tuple.  Subsets with zero audience share are skipped.
    """
    _check_floor(L_i)
    m = len(feature.types)
    if m > MAX_SUBSET_TYPES:
        raise OracleLimitError(f"{m} types exceed the subset oracle limit of {MAX_SUBSET_TYPES}")
    q = [t.q for t in feature.types]
    p = [t.p for t in feature.types]
    best: tuple[float, tuple[int, ...]] | None = None
    evaluated = 0
    for size in range(1, m + 1):
        for members in itertools.combinations(range(m), size):
            evaluated += 1
            if size == m:
                cq = cp = 1.0
            else:
                cq = math.fsum(q[j] for j in members)
                cp = math.fsum(p[j] for j in members)
            if cq <= 0.0 or cq < L_i:
                continue
            lift = cp / cq
            if best is None or lift > best[0]:
                best = (lift, members)
    assert best is not None  # the full set is always feasible
    return OracleResult(best[0], best[1], evaluated)


def prefix_oracle(family: CandidateFamily, L_i: float) -> OracleResult:
    """Best-lift prefix among a family's candidates with ``cum_q >= L_i``."""
    _check_floor(L_i)
    best = None
    for cand in family.candidates:
        if cand.cum_q >= L_i and (best is None or cand.cum_p / cand.cum_q > best[0]):
            best = (cand.cum_p / cand.cum_q, cand.members)
    return OracleResult(best[0], best[1], len(family))


def audit_greedy(feature: FeatureStats, L_i: float, rel_tol: float = 1e-12) -> OracleResult:
    """Compare the ratio-greedy prefix against every subset of the feature.

    A :class:`Discrepancy` is attached (and logged) when some subset beats
    the greedy answer by more than ``rel_tol``.
    """
    from adtarget.prefix_gen import greedy_subproblem

    ref = subset_oracle(feature, L_i)
    greedy = greedy_subproblem(feature, L_i)
    if ref.best_objective > greedy.lift * (1.0 + rel_tol):
        disc = Discrepancy(ref.best_objective, ref.best_selection, greedy.lift, greedy.members)
        log.warning(
            "greedy prefix %s (lift %.6g) beaten by subset %s (lift %.6g) on %r at L=%.6g",
            greedy.members, greedy.lift, ref.best_selection, ref.best_objective, feature.name, L_i,
        )
        return OracleResult(ref.best_objective, ref.best_selection, ref.evaluated, disc)
    return ref


def combo_oracle(families: Sequence[CandidateFamily], L: float) -> OracleResult:
    """Best product of lifts over all one-prefix-per-family combinations.

    A combination is feasible when the product of its coverages is at
    least ``L``.  The selection is the tuple of prefix lengths; ties keep the
    first combination in lexicographic order.
    """
    _check_floor(L)
    total = math.prod(len(f) for f in families)
    if total > MAX_COMBINATIONS:
        raise OracleLimitError(f"{total} combinations exceed the limit of {MAX_COMBINATIONS}")
    best_lift = -math.inf
    best_sel: tuple[int, ...] = ()
    for combo in itertools.product(*(f.candidates for f in families)):
        coverage = math.prod(c.cum_q for c in combo)
        if coverage < L:
            continue
        lift = math.prod(c.cum_p / c.cum_q for c in combo)
        if lift > best_lift:
            best_lift = lift
            best_sel = tuple(c.length for c in combo)
    return OracleResult(best_lift, best_sel, total)
