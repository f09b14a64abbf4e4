import numpy as np
import pytest

from adtarget.stats_model import StatsDataset, feature_from_arrays, generate_synthetic, validate

TABLE1_Q = (7.28, 26.00, 27.75, 19.10, 12.50, 7.27)
TABLE1_P = (16.27, 49.92, 19.88, 7.63, 2.76, 3.64)


def table1_feature(name="table1"):
    return feature_from_arrays(name, [x / 100 for x in TABLE1_Q], [x / 100 for x in TABLE1_P])


def two_feature_dataset():
    """A: prefixes ({a1}: cov 0.5, lift 1.6); B: ({b1}: cov 0.25, lift 2.0)."""
    a = feature_from_arrays("A", [0.5, 0.5], [0.8, 0.2])
    b = feature_from_arrays("B", [0.25, 0.75], [0.5, 0.5])
    return StatsDataset((a, b))


def random_dataset(seed):
    """Corpus member: n in [1,6] features with m_i in [1,6] types, plus a floor L."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    schema = [(f"f{i}", int(rng.integers(1, 7))) for i in range(n)]
    concentration = float(rng.choice([0.3, 1.0, 3.0]))
    ds = validate(generate_synthetic(schema, seed, concentration), 1e-9).normalized
    return ds, float(rng.uniform(0.0, 1.0))


CORPUS_SEEDS = range(200)


@pytest.fixture
def table1():
    return table1_feature()


@pytest.fixture
def two_features():
    return two_feature_dataset()


@pytest.fixture(scope="session")
def corpus():
    return [random_dataset(s) for s in CORPUS_SEEDS]


_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with (passed, detail)."""
    def record(passed, detail=""):
        _ACCEPTANCE.append((request.node.name, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
