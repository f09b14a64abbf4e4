"""End-to-end strategy optimization and budget sweeps.

A strategy picks one ratio prefix per feature.  Under feature independence
its coverage is the product of prefix coverages and its lift the product of
prefix lifts; the conditional buy probability of a targeted audience is
``lift * B``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from adtarget.errors import DomainError
from adtarget.mckp_solver import build_instance, fast_path, prune, solve_exact
from adtarget.prefix_gen import CandidateFamily, PrefixCandidate, build_family
from adtarget.stats_model import StatsDataset

log = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 50
JOBS_ENV = "ADTARGET_JOBS"


class ModelConsistencyWarning(UserWarning):
    """The independence model produced a probability above one."""


@dataclass(frozen=True)
class FeatureChoice:
    name: str
    candidate: PrefixCandidate
    labels: tuple[str, ...]
    size: int

    @property
    def active(self) -> bool:
        return self.candidate.length < self.size


@dataclass(frozen=True)
class Strategy:
    L: float
    choices: tuple[FeatureChoice, ...]
    objective: float
    coverage: float
    lift: float
    optimal: bool = True
    buy_rate: float | None = None
    conditional_buy_prob: float | None = None
    expected_sales: float | None = None
    profit: float | None = None

    @property
    def active_names(self) -> list[str]:
        return [c.name for c in self.choices if c.active]

    @property
    def active_mask(self) -> str:
        return "".join("1" if c.active else "0" for c in self.choices)

    def conditional_buy_text(self) -> str:
        """Conditional buy probability, symbolic in ``B`` when no buy rate is known."""
        if self.conditional_buy_prob is not None:
            return repr(self.conditional_buy_prob)
        return f"{self.lift:.2f}·B"


def _families(dataset: StatsDataset) -> tuple[CandidateFamily, ...]:
    return tuple(build_family(f, i) for i, f in enumerate(dataset.features))


def _exclusion_indices(dataset: StatsDataset, exclusions: Iterable[str]) -> frozenset[int]:
    names = dataset.names
    out = set()
    for name in exclusions:
        if name not in names:
            raise DomainError(f"unknown feature {name!r} in exclusions")
        out.add(names.index(name))
    return frozenset(out)


def _optimize_families(
    dataset: StatsDataset,
    families: Sequence[CandidateFamily],
    L: float,
    excluded: frozenset[int],
) -> Strategy:
    instance = prune(build_instance(families, L, forced_full=excluded))
    solution = fast_path(instance) or solve_exact(instance)
    choices = []
    for i, (feat, fam) in enumerate(zip(dataset.features, families)):
        cand = fam[solution.prefix_lengths[i]]
        labels = [feat.types[j].label for j in cand.members]
        choices.append(FeatureChoice(feat.name, cand, tuple(labels), len(fam)))
    coverage = math.prod(c.candidate.cum_q for c in choices)
    lift = math.prod(c.candidate.lift for c in choices)
    return Strategy(L, tuple(choices), solution.objective, coverage, lift, solution.optimal)


def optimize(
    dataset: StatsDataset,
    L: float,
    exclusions: Iterable[str] = (),
) -> Strategy:
    """Maximum-lift strategy whose coverage is at least ``L``.

    Excluded features are pinned to their full type set (inactive).
    """
    if not 0.0 <= L <= 1.0:
        raise DomainError(f"L must lie in [0,1], got {L!r}")
    excluded = _exclusion_indices(dataset, exclusions)
    strategy = _optimize_families(dataset, _families(dataset), L, excluded)
    return evaluate(strategy, dataset)


def evaluate(strategy: Strategy, dataset: StatsDataset) -> Strategy:
    """Fill in the economic metrics that the dataset's parameters allow.

    ``conditional_buy_prob = lift * B``; ``expected_sales = N * B * lift *
    coverage``; ``profit = expected_sales * (price - unit_cost) - budget``
    (a missing budget counts as zero).
    """
    B = dataset.buy_rate
    cond = sales = profit = None
    if B is not None:
        cond = strategy.lift * B
        if cond > 1.0:
            warnings.warn(
                f"lift * B = {cond:.6g} exceeds 1; feature independence overshoots",
                ModelConsistencyWarning,
                stacklevel=2,
            )
        if dataset.audience_count is not None:
            sales = dataset.audience_count * B * strategy.lift * strategy.coverage
            if dataset.price is not None and dataset.unit_cost is not None:
                profit = sales * (dataset.price - dataset.unit_cost) - (dataset.budget or 0.0)
    return replace(
        strategy, buy_rate=B, conditional_buy_prob=cond, expected_sales=sales, profit=profit
    )


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    grid: tuple[float, ...]
    strategies: tuple[Strategy, ...]
    feature_names: tuple[str, ...]
    frequency: dict[str, int] = field(default_factory=dict)

    def active_matrix(self) -> np.ndarray:
        """0/1 matrix, rows = features, columns = grid points."""
        return np.array(
            [[int(c.active) for c in s.choices] for s in self.strategies], dtype=int
        ).T.reshape(len(self.feature_names), len(self.strategies))


def default_grid(points: int = DEFAULT_GRID_POINTS) -> tuple[float, ...]:
    if points < 1:
        raise DomainError("grid needs at least one point")
    if points == 1:
        return (0.0,)
    return tuple(float(x) for x in np.linspace(0.0, 1.0, points))


def _sweep_point(args) -> Strategy:
    dataset, families, L, excluded = args
    return evaluate(_optimize_families(dataset, families, L, excluded), dataset)


def _jobs(jobs: int | None) -> int:
    if jobs is None:
        jobs = int(os.environ.get(JOBS_ENV, "1") or 1)
    return max(1, jobs)


def sweep(
    dataset: StatsDataset,
    grid: Sequence[float] | None = None,
    exclusions: Iterable[str] = (),
    jobs: int | None = None,
) -> SweepResult:
    """Optimize independently at every coverage floor of ``grid``.

    Families are built once.  With ``jobs > 1`` points are spread over a
    process pool; results always come back in grid order.
    """
    grid = default_grid() if grid is None else tuple(float(x) for x in grid)
    for L in grid:
        if not 0.0 <= L <= 1.0:
            raise DomainError(f"L must lie in [0,1], got {L!r}")
    excluded = _exclusion_indices(dataset, exclusions)
    families = _families(dataset)
    tasks = [(dataset, families, L, excluded) for L in grid]
    n_jobs = _jobs(jobs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModelConsistencyWarning)
        if n_jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                strategies = tuple(pool.map(_sweep_point, tasks))
        else:
            strategies = tuple(map(_sweep_point, tasks))
    names = tuple(dataset.names)
    frequency = {name: 0 for name in names}
    for s in strategies:
        for c in s.choices:
            if c.active:
                frequency[c.name] += 1
    return SweepResult(grid, strategies, names, frequency)


# ---------------------------------------------------------------------------
# Correlated features
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupReport:
    members: tuple[str, ...]
    co_active_points: tuple[float, ...]
    keep: str | None
    exclude: tuple[str, ...]

    @property
    def violation(self) -> bool:
        return bool(self.co_active_points)


def correlation_report(
    result: SweepResult, groups: Sequence[Iterable[str]]
) -> list[GroupReport]:
    """Flag user-declared correlated groups whose members are active together.

    For a flagged group the most frequently active member is kept (ties go
    to the earlier feature) and the others are recommended for exclusion.
    """
    frequency = frequency_table(result)
    reports = []
    for group in groups:
        members = tuple(group)
        for name in members:
            if name not in frequency:
                raise DomainError(f"unknown feature {name!r} in correlation group")
        co_active = []
        for L, s in zip(result.grid, result.strategies):
            active = set(s.active_names)
            if sum(name in active for name in members) >= 2:
                co_active.append(L)
        if len(members) < 2 or not co_active:
            reports.append(GroupReport(members, tuple(co_active), None, ()))
            continue
        order = result.feature_names
        keep = max(members, key=lambda n: (frequency[n], -order.index(n)))
        reports.append(
            GroupReport(members, tuple(co_active), keep, tuple(n for n in members if n != keep))
        )
    return reports


def frequency_table(result: SweepResult) -> dict[str, int]:
    if result.frequency:
        return dict(result.frequency)
    counts = {name: 0 for name in result.feature_names}
    for s in result.strategies:
        for name in s.active_names:
            counts[name] += 1
    return counts


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def strategy_to_dict(strategy: Strategy) -> dict:
    return {
        "L": strategy.L,
        "lift": strategy.lift,
        "log_lift": strategy.objective,
        "coverage": strategy.coverage,
        "optimal": strategy.optimal,
        "buy_rate": strategy.buy_rate,
        "conditional_buy_prob": strategy.conditional_buy_prob,
        "conditional_buy_text": strategy.conditional_buy_text(),
        "expected_sales": strategy.expected_sales,
        "profit": strategy.profit,
        "active_features": strategy.active_names,
        "features": [
            {
                "name": c.name,
                "active": c.active,
                "prefix_length": c.candidate.length,
                "types": list(c.labels),
                "cum_p": c.candidate.cum_p,
                "cum_q": c.candidate.cum_q,
                "lift": c.candidate.lift,
            }
            for c in strategy.choices
        ],
    }


def sweep_to_dict(result: SweepResult, groups: Sequence[GroupReport] = ()) -> dict:
    doc = {
        "grid": list(result.grid),
        "feature_names": list(result.feature_names),
        "frequency": frequency_table(result),
        "points": [strategy_to_dict(s) for s in result.strategies],
    }
    if groups:
        doc["correlation"] = [
            {
                "members": list(g.members),
                "violation": g.violation,
                "co_active_L": list(g.co_active_points),
                "keep": g.keep,
                "exclude": list(g.exclude),
            }
            for g in groups
        ]
    return doc


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    return repr(x) if isinstance(x, float) else str(x)


METRIC_COLUMNS = ("L", "lift", "log_lift", "coverage", "active_mask",
                  "conditional_buy_prob", "expected_sales", "profit")


def _metric_row(s: Strategy) -> list[str]:
    return [_cell(v) for v in (s.L, s.lift, s.objective, s.coverage, s.active_mask,
                               s.conditional_buy_prob, s.expected_sales, s.profit)]


def _write_csv(rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def strategy_to_csv(strategy: Strategy) -> str:
    """Metrics header row plus one row per feature."""
    rows = [list(METRIC_COLUMNS), _metric_row(strategy), [],
            ["feature", "active", "prefix_length", "types", "cum_p", "cum_q", "lift"]]
    for c in strategy.choices:
        rows.append([c.name, _cell(c.active), str(c.candidate.length), ";".join(c.labels),
                     _cell(c.candidate.cum_p), _cell(c.candidate.cum_q), _cell(c.candidate.lift)])
    return _write_csv(rows)


def sweep_to_csv(result: SweepResult) -> str:
    """One row per grid point; the mask has one digit per feature in dataset order."""
    return _write_csv([list(METRIC_COLUMNS)] + [_metric_row(s) for s in result.strategies])


def active_matrix_csv(result: SweepResult) -> str:
    matrix = result.active_matrix()
    rows = [["feature"] + [_cell(L) for L in result.grid]]
    for name, row in zip(result.feature_names, matrix):
        rows.append([name] + [str(int(v)) for v in row])
    return _write_csv(rows)


def frequency_csv(frequency: dict[str, int]) -> str:
    return _write_csv([["feature", "active_count"]] + [[k, str(v)] for k, v in frequency.items()])
