"""Log-space multiple-choice knapsack over prefix candidate families.

Taking logarithms turns the product objective (combined lift) and the
product constraint (combined coverage >= L) into sums: each feature is a
class, each prefix an item with

    value  = log(lift)       >= 0
    weight = -log(coverage)  >= 0

and the capacity is ``-log L``.  Exactly one item is picked per class; the
full prefix is the zero item (value 0, weight 0), so the instance is always
feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from adtarget.errors import DomainError
from adtarget.prefix_gen import CandidateFamily, PrefixCandidate

BOUND_TOL = 1e-9


@dataclass(frozen=True)
class MckpItem:
    class_index: int
    k: int
    value: float
    weight: float
    lp_dominated: bool = False


@dataclass(frozen=True)
class MckpInstance:
    classes: tuple[tuple[MckpItem, ...], ...]
    capacity: float
    families: tuple[CandidateFamily, ...]
    beta: float | None = None
    pruned: bool = False

    @property
    def coverage_floor(self) -> float:
        return math.exp(-self.capacity)

    def candidate(self, class_index: int, item_index: int) -> PrefixCandidate:
        item = self.classes[class_index][item_index]
        return self.families[class_index][item.k]

    def zero_index(self, class_index: int) -> int:
        full = len(self.families[class_index])
        for i, item in enumerate(self.classes[class_index]):
            if item.k == full:
                return i
        raise AssertionError("class lost its zero item")


@dataclass(frozen=True)
class MckpSolution:
    chosen: tuple[int, ...]
    prefix_lengths: tuple[int, ...]
    objective: float
    total_weight: float
    optimal: bool
    lp_bound: float
    nodes: int = 0

    @property
    def lift(self) -> float:
        return math.exp(self.objective)


@dataclass(frozen=True)
class LpSolution:
    bound: float
    # per class: ((item_index, fraction), ...); at most one class has two entries
    selection: tuple[tuple[tuple[int, float], ...], ...]

    @property
    def fractional_class(self) -> int | None:
        for c, entries in enumerate(self.selection):
            if len(entries) > 1:
                return c
        return None


def build_instance(
    families: Sequence[CandidateFamily],
    L: float,
    B: float | None = None,
    forced_full: frozenset[int] | set[int] = frozenset(),
) -> MckpInstance:
    """Translate candidate families into a knapsack with capacity ``-log L``.

    Classes listed in ``forced_full`` keep only their zero item.  ``L = 0``
    gives an infinite capacity.
    """
    if not 0.0 <= L <= 1.0 or math.isnan(L):
        raise DomainError(f"L must lie in [0,1], got {L!r}")
    if B is not None and not 0.0 < B <= 1.0:
        raise DomainError(f"B must lie in (0,1], got {B!r}")
    capacity = math.inf if L == 0.0 else -math.log(L)
    classes = []
    for c, fam in enumerate(families):
        cands = [fam.full] if c in forced_full else fam.candidates
        items = []
        for cand in cands:
            if cand.length == len(fam):
                items.append(MckpItem(c, cand.length, 0.0, 0.0))
                continue
            # rounding can push a strict prefix's coverage a hair above 1
            weight = max(0.0, -math.log(cand.cum_q))
            items.append(MckpItem(c, cand.length, math.log(cand.cum_p) - math.log(cand.cum_q), weight))
        classes.append(tuple(items))
    return MckpInstance(
        tuple(classes),
        capacity,
        tuple(families),
        beta=None if B is None else math.log(B),
    )


def _upper_hull(points: list[tuple[float, float]]) -> list[int]:
    """Indices of the upper concave hull of points sorted by strictly increasing x."""
    hull: list[int] = []
    for i, (x, y) in enumerate(points):
        while len(hull) >= 2:
            x0, y0 = points[hull[-2]]
            x1, y1 = points[hull[-1]]
            if (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _efficient(items: Sequence[MckpItem], zero_k: int) -> list[int]:
    """Indices (into ``items``) of undominated items, by increasing weight."""
    order = sorted(
        range(len(items)),
        key=lambda i: (items[i].weight, -items[i].value, items[i].k != zero_k, -items[i].k),
    )
    keep = []
    best = -math.inf
    for i in order:
        if items[i].value > best:
            keep.append(i)
            best = items[i].value
    return keep


def prune(instance: MckpInstance) -> MckpInstance:
    """Drop dominated items and flag items below the LP hull.

    An item is dominated when another item of its class is no heavier and
    no less valuable.  The zero item survives regardless.  Items off the
    upper convex hull stay in the class (the exact search still sees them)
    but are marked ``lp_dominated``.
    """
    classes = []
    for c, items in enumerate(instance.classes):
        zero_k = len(instance.families[c])
        kept = _efficient(items, zero_k)
        kept_set = set(kept)
        zero = [i for i, it in enumerate(items) if it.k == zero_k]
        survivors = sorted(
            kept_set | set(zero),
            key=lambda i: (items[i].weight, -items[i].value, items[i].k != zero_k),
        )
        hull = {kept[h] for h in _upper_hull([(items[i].weight, items[i].value) for i in kept])}
        classes.append(
            tuple(replace(items[i], lp_dominated=i not in hull) for i in survivors)
        )
    return replace(instance, classes=tuple(classes), pruned=True)


# ---------------------------------------------------------------------------
# LP relaxation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Move:
    efficiency: float
    class_index: int
    step: int
    d_value: float
    d_weight: float
    src: int
    dst: int


def _class_hull(instance: MckpInstance, c: int) -> list[int]:
    items = instance.classes[c]
    kept = _efficient(items, len(instance.families[c]))
    return [kept[h] for h in _upper_hull([(items[i].weight, items[i].value) for i in kept])]


def _moves(instance: MckpInstance) -> tuple[list[list[int]], list[_Move]]:
    hulls = []
    moves = []
    for c in range(len(instance.classes)):
        items = instance.classes[c]
        hull = _class_hull(instance, c)
        hulls.append(hull)
        for s in range(len(hull) - 1):
            a, b = items[hull[s]], items[hull[s + 1]]
            dv, dw = b.value - a.value, b.weight - a.weight
            moves.append(_Move(dv / dw, c, s, dv, dw, hull[s], hull[s + 1]))
    moves.sort(key=lambda m: (-m.efficiency, m.class_index, m.step))
    return hulls, moves


def _greedy_lp(start_value: float, moves: Sequence[_Move], capacity: float) -> float:
    value = start_value
    remaining = capacity
    for mv in moves:
        if mv.d_weight <= remaining:
            value += mv.d_value
            remaining -= mv.d_weight
        else:
            value += mv.d_value * (remaining / mv.d_weight)
            break
    return value


def solve_lp(instance: MckpInstance) -> LpSolution:
    """Continuous relaxation by the classical MCKP greedy on hull increments."""
    hulls, moves = _moves(instance)
    position = [h[0] for h in hulls]
    value = math.fsum(instance.classes[c][h[0]].value for c, h in enumerate(hulls))
    remaining = instance.capacity
    split: tuple[int, int, int, float] | None = None
    for mv in moves:
        if mv.d_weight <= remaining:
            value += mv.d_value
            remaining -= mv.d_weight
            position[mv.class_index] = mv.dst
        else:
            frac = remaining / mv.d_weight
            value += mv.d_value * frac
            split = (mv.class_index, mv.src, mv.dst, frac)
            break
    selection = []
    for c, pos in enumerate(position):
        if split is not None and split[0] == c:
            _, src, dst, frac = split
            selection.append(((src, 1.0 - frac), (dst, frac)))
        else:
            selection.append(((pos, 1.0),))
    return LpSolution(value, tuple(selection))


# ---------------------------------------------------------------------------
# Exact search
# ---------------------------------------------------------------------------


def _top_index(items: Sequence[MckpItem]) -> int:
    return max(range(len(items)), key=lambda i: (items[i].value, -items[i].weight))


def _solution(
    instance: MckpInstance, chosen: Sequence[int], optimal: bool, lp_bound: float, nodes: int = 0
) -> MckpSolution:
    items = [instance.classes[c][i] for c, i in enumerate(chosen)]
    return MckpSolution(
        chosen=tuple(chosen),
        prefix_lengths=tuple(it.k for it in items),
        objective=math.fsum(it.value for it in items),
        total_weight=math.fsum(it.weight for it in items),
        optimal=optimal,
        lp_bound=lp_bound,
        nodes=nodes,
    )


def fast_path(instance: MckpInstance) -> MckpSolution | None:
    """All-top selection when it already fits, else ``None``."""
    chosen = [_top_index(items) for items in instance.classes]
    weight = math.fsum(instance.classes[c][i].weight for c, i in enumerate(chosen))
    if weight > instance.capacity:
        return None
    sol = _solution(instance, chosen, optimal=True, lp_bound=0.0)
    return replace(sol, lp_bound=sol.objective)


def solve_exact(instance: MckpInstance) -> MckpSolution:
    """Depth-first branch-and-bound with LP bounds at every node."""
    n = len(instance.classes)
    lp = solve_lp(instance)
    frac_class = lp.fractional_class
    if frac_class is None:
        chosen = [entries[0][0] for entries in lp.selection]
        return _solution(instance, chosen, optimal=True, lp_bound=lp.bound, nodes=1)

    hulls, moves = _moves(instance)

    def top_efficiency(c: int) -> float:
        item = instance.classes[c][_top_index(instance.classes[c])]
        if item.value <= 0.0:
            return -math.inf
        return math.inf if item.weight == 0.0 else item.value / item.weight

    rest = sorted((c for c in range(n) if c != frac_class), key=lambda c: (-top_efficiency(c), c))
    order = [frac_class] + rest
    rank = {c: d for d, c in enumerate(order)}

    # moves and hull-start values of the classes still free at each depth
    moves_from: list[list[_Move]] = []
    start_from: list[float] = []
    for d in range(n + 1):
        moves_from.append([mv for mv in moves if rank[mv.class_index] >= d])
        start_from.append(
            math.fsum(instance.classes[c][hulls[c][0]].value for c in order[d:])
        )

    branch_items = [
        sorted(range(len(instance.classes[c])), key=lambda i, c=c: (-instance.classes[c][i].value, instance.classes[c][i].weight, i))
        for c in order
    ]

    incumbent = [entries[0][0] for entries in lp.selection]
    incumbent[frac_class] = instance.zero_index(frac_class)
    best_value = math.fsum(instance.classes[c][i].value for c, i in enumerate(incumbent))
    best = list(incumbent)
    current = [0] * n
    nodes = 0

    def dfs(depth: int, acc: float, remaining: float) -> None:
        nonlocal best_value, best, nodes
        nodes += 1
        if depth == n:
            if acc > best_value:
                best_value = acc
                best = list(current)
            return
        c = order[depth]
        items = instance.classes[c]
        for i in branch_items[depth]:
            item = items[i]
            if item.weight > remaining:
                continue
            left = remaining - item.weight
            bound = acc + item.value + _greedy_lp(start_from[depth + 1], moves_from[depth + 1], left)
            if bound <= best_value + BOUND_TOL:
                continue
            current[c] = i
            dfs(depth + 1, acc + item.value, left)

    dfs(0, 0.0, instance.capacity)
    return _solution(instance, best, optimal=True, lp_bound=lp.bound, nodes=nodes)


def solve(instance: MckpInstance) -> MckpSolution:
    """Prune, try the fast path, fall back to branch-and-bound."""
    pruned = instance if instance.pruned else prune(instance)
    sol = fast_path(pruned)
    if sol is None:
        sol = solve_exact(pruned)
    return sol


# ---------------------------------------------------------------------------
# Debug dump
# ---------------------------------------------------------------------------


def _g17(x: float) -> str:
    return format(x, ".17g")


def dump_instance(instance: MckpInstance) -> str:
    """JSON dump, numbers written with 17 significant digits.

    An infinite capacity (``L = 0``) is written as ``null``.
    """
    cap = "null" if math.isinf(instance.capacity) else _g17(instance.capacity)
    rows = []
    for items in instance.classes:
        cells = ", ".join(
            f'{{"k": {it.k}, "value": {_g17(it.value)}, "weight": {_g17(it.weight)}}}' for it in items
        )
        rows.append(f"    [{cells}]")
    return '{\n  "capacity": ' + cap + ',\n  "classes": [\n' + ",\n".join(rows) + "\n  ]\n}\n"
