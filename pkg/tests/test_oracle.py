import logging
import math

import pytest

from adtarget.errors import OracleLimitError
from adtarget.oracle import audit_greedy, combo_oracle, prefix_oracle, subset_oracle
from adtarget.prefix_gen import build_family, greedy_subproblem
from adtarget.stats_model import feature_from_arrays

from conftest import two_feature_dataset


class TestSubsetOracle:
    def test_table1_thirty_percent(self, table1):
        res = subset_oracle(table1, 0.30)
        assert res.evaluated == 63
        # exhaustive search agrees with the greedy prefix {t1, t2} here
        assert res.best_selection == (0, 1)
        assert res.best_objective == pytest.approx(0.6619 / 0.3328, rel=1e-12)

    def test_single_type(self):
        res = subset_oracle(feature_from_arrays("x", [1.0], [1.0]), 0.5)
        assert res.best_selection == (0,) and res.best_objective == 1.0

    def test_zero_floor_picks_best_ratio_singleton(self, table1):
        res = subset_oracle(table1, 0.0)
        assert res.best_selection == (0,)

    def test_size_limit(self):
        m = 21
        f = feature_from_arrays("x", [1 / m] * m, [1 / m] * m)
        with pytest.raises(OracleLimitError):
            subset_oracle(f, 0.5)

    def test_tie_prefers_smaller_then_lexicographic(self):
        f = feature_from_arrays("x", [0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25])
        assert subset_oracle(f, 0.5).best_selection == (0, 1)


class TestAudit:
    def test_non_prefix_subset_can_win(self, caplog):
        # ratios 3, 1, 0.9, 0.1; at L = 0.3 the prefix {t1,t2} has lift 0.8/0.6,
        # while {t1,t3} reaches exactly 0.3 coverage with lift 0.48/0.3
        f = feature_from_arrays("x", [0.1, 0.5, 0.2, 0.2], [0.3, 0.5, 0.18, 0.02])
        with caplog.at_level(logging.WARNING, logger="adtarget.oracle"):
            res = audit_greedy(f, 0.3)
        assert greedy_subproblem(f, 0.3).members == (0, 1)
        assert res.discrepancy is not None
        assert res.best_selection == (0, 2)
        assert res.best_objective == pytest.approx(1.6)
        assert "beaten by subset" in caplog.text

    def test_table1_small_floors_agree(self, table1):
        for L in (0.0, 0.1, 0.3, 0.5):
            assert audit_greedy(table1, L).discrepancy is None

    def test_table1_high_floor_counterexample(self, table1):
        # prefix of five types covers 87.5% < 90%, so greedy falls through to the
        # full feature; dropping t6 instead covers 92.63% with lift > 1
        res = audit_greedy(table1, 0.9)
        assert res.discrepancy is not None
        assert res.discrepancy.checked_objective == 1.0
        assert res.best_selection == (0, 1, 2, 3, 4)
        assert res.best_objective == pytest.approx(0.9646 / 0.9263, rel=1e-12)


class TestPrefixOracle:
    def test_equals_greedy(self, table1):
        fam = build_family(table1)
        for L in [i / 20 for i in range(21)]:
            assert prefix_oracle(fam, L).best_selection == greedy_subproblem(fam, L).members


class TestComboOracle:
    @pytest.fixture
    def families(self):
        return [build_family(f, i) for i, f in enumerate(two_feature_dataset().features)]

    def test_two_feature_example(self, families):
        res = combo_oracle(families, 0.2)
        assert res.evaluated == 4
        assert res.best_selection == (2, 1)
        assert res.best_objective == pytest.approx(2.0, rel=1e-15)

    def test_zero_floor_product_of_max(self, families):
        assert combo_oracle(families, 0.0).best_objective == pytest.approx(3.2, rel=1e-15)

    def test_infeasible_everything_but_full(self, families):
        res = combo_oracle(families, 1.0)
        assert res.best_selection == (2, 2) and res.best_objective == 1.0

    def test_size_limit(self):
        m = 20
        f = feature_from_arrays("x", [1 / m] * m, [1 / m] * m)
        fams = [build_family(f, i) for i in range(6)]
        with pytest.raises(OracleLimitError):
            combo_oracle(fams, 0.5)
