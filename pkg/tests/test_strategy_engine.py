import math
import warnings

import numpy as np
import pytest

from adtarget.errors import DomainError
from adtarget.oracle import combo_oracle
from adtarget.prefix_gen import build_family
from adtarget.stats_model import StatsDataset, feature_from_arrays, generate_synthetic, validate
from adtarget.strategy_engine import (
    ModelConsistencyWarning,
    active_matrix_csv,
    correlation_report,
    default_grid,
    evaluate,
    optimize,
    sweep,
    sweep_to_csv,
)

from conftest import two_feature_dataset


class TestOptimize:
    def test_two_feature_example(self, two_features):
        s = optimize(two_features, 0.2)
        assert [c.active for c in s.choices] == [False, True]
        assert s.choices[1].labels == ("t1",)
        assert s.lift == pytest.approx(2.0, rel=1e-15)
        assert s.coverage == pytest.approx(0.25, rel=1e-15)

    def test_zero_floor_all_top(self, corpus):
        for ds, _ in corpus[:50]:
            s = optimize(ds, 0.0)
            for c, f in zip(s.choices, ds.features):
                assert c.candidate.length == 1
                assert c.active == (f.size > 1)

    def test_exclusion_forces_inactive(self, two_features):
        s = optimize(two_features, 0.0, exclusions={"B"})
        assert s.choices[1].candidate.length == 2 and not s.choices[1].active
        assert s.lift == pytest.approx(1.6)

    def test_unknown_exclusion(self, two_features):
        with pytest.raises(DomainError):
            optimize(two_features, 0.5, exclusions={"nope"})

    @pytest.mark.parametrize("L", [-0.01, 1.01])
    def test_invalid_floor(self, two_features, L):
        with pytest.raises(DomainError):
            optimize(two_features, L)

    def test_decomposition_and_coverage(self, corpus):
        for ds, L in corpus:
            s = optimize(ds, L)
            assert s.coverage >= L
            assert s.coverage == pytest.approx(math.prod(c.candidate.cum_q for c in s.choices), rel=1e-15)
            assert s.lift == pytest.approx(math.exp(s.objective), rel=1e-9)
            for c in s.choices:
                if not c.active:
                    assert c.candidate.lift == 1.0 and c.candidate.cum_q == 1.0

    def test_matches_combo_oracle(self, corpus):
        for ds, L in corpus:
            fams = [build_family(f, i) for i, f in enumerate(ds.features)]
            assert optimize(ds, L).lift == pytest.approx(combo_oracle(fams, L).best_objective, rel=1e-9)

    def test_exclusion_never_helps(self, corpus):
        for ds, L in corpus[:80]:
            base = optimize(ds, L).lift
            for name in ds.names:
                assert optimize(ds, L, {name}).lift <= base * (1 + 1e-12)

    def test_deterministic(self):
        ds = validate(generate_synthetic(seed=3), 1e-9).normalized
        assert optimize(ds, 0.3) == optimize(ds, 0.3)


class TestEvaluate:
    def _strategy(self):
        # lift 2.0, coverage 0.25
        return optimize(two_feature_dataset(), 0.2)

    def test_expected_sales(self):
        ds = StatsDataset(two_feature_dataset().features, audience_count=10**6, buy_rate=0.01)
        s = evaluate(self._strategy(), ds)
        assert s.conditional_buy_prob == pytest.approx(0.02, rel=1e-15)
        assert s.expected_sales == pytest.approx(5000.0, rel=1e-15)
        assert s.profit is None

    def test_profit(self):
        ds = StatsDataset(two_feature_dataset().features, audience_count=10**6, buy_rate=0.01,
                          price=30.0, unit_cost=10.0, budget=20000.0)
        s = evaluate(self._strategy(), ds)
        assert s.profit == pytest.approx(5000.0 * 20.0 - 20000.0)

    def test_symbolic_without_buy_rate(self):
        s = evaluate(self._strategy(), two_feature_dataset())
        assert s.conditional_buy_prob is None and s.expected_sales is None
        assert s.conditional_buy_text() == "2.00·B"

    def test_all_inactive(self):
        ds = StatsDataset(two_feature_dataset().features, audience_count=1000, buy_rate=0.05)
        s = optimize(ds, 1.0)
        assert s.lift == 1.0 and s.coverage == 1.0
        assert s.expected_sales == pytest.approx(1000 * 0.05)

    def test_impossible_probability_warns(self):
        ds = StatsDataset(two_feature_dataset().features, buy_rate=0.9)
        with pytest.warns(ModelConsistencyWarning):
            s = optimize(ds, 0.0)
        assert s.conditional_buy_prob == pytest.approx(3.2 * 0.9)


class TestSweep:
    def test_three_point_grid(self, two_features):
        r = sweep(two_features, [0.0, 0.5, 1.0])
        assert [s.lift for s in r.strategies] == pytest.approx([3.2, 1.6, 1.0], rel=1e-15)
        assert r.strategies[1].active_names == ["A"]
        assert r.strategies[1].coverage == pytest.approx(0.5)
        assert r.frequency == {"A": 2, "B": 1}

    def test_full_only(self, two_features):
        r = sweep(two_features, [1.0])
        assert r.frequency == {"A": 0, "B": 0}

    def test_default_grid(self):
        g = default_grid()
        assert len(g) == 50 and g[0] == 0.0 and g[-1] == 1.0

    def test_monotone(self, corpus):
        for ds, _ in corpus[:60]:
            r = sweep(ds, default_grid(21))
            lifts = [s.lift for s in r.strategies]
            assert all(a >= b - 1e-12 for a, b in zip(lifts, lifts[1:]))
            assert all(s.coverage >= L for L, s in zip(r.grid, r.strategies))
            assert all(v <= len(r.grid) for v in r.frequency.values())

    def test_parallel_matches_serial(self):
        ds = validate(generate_synthetic(seed=5), 1e-9).normalized
        grid = default_grid(8)
        assert sweep(ds, grid, jobs=2) == sweep(ds, grid, jobs=1)

    def test_matrix_and_csv(self, two_features):
        r = sweep(two_features, [0.0, 0.5, 1.0])
        assert active_matrix_csv(r) == "feature,0.0,0.5,1.0\nA,1,1,0\nB,1,0,0\n"
        rows = sweep_to_csv(r).splitlines()
        assert rows[0].startswith("L,lift,log_lift,coverage,active_mask")
        assert rows[2].split(",")[4] == "10"


class TestCorrelationReport:
    def test_co_active_group(self, two_features):
        r = sweep(two_features, [0.0, 0.5, 1.0])
        (rep,) = correlation_report(r, [["A", "B"]])
        assert rep.violation and rep.co_active_points == (0.0,)
        assert rep.keep == "A" and rep.exclude == ("B",)

    def test_single_member(self, two_features):
        (rep,) = correlation_report(sweep(two_features, [0.0]), [["A"]])
        assert rep.keep is None and rep.exclude == ()

    def test_disjoint_members(self):
        # at each floor only one of the two features is worth activating
        a = feature_from_arrays("A", [0.5, 0.5], [0.8, 0.2])
        b = feature_from_arrays("B", [0.5, 0.5], [0.7, 0.3])
        r = sweep(StatsDataset((a, b)), [0.5])
        (rep,) = correlation_report(r, [["A", "B"]])
        assert not rep.violation and rep.exclude == ()

    def test_unknown_member(self, two_features):
        with pytest.raises(DomainError):
            correlation_report(sweep(two_features, [0.0]), [["A", "Z"]])
