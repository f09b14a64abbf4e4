"""Per-feature audience/buyer statistics: loading, validation, synthesis.

Each targeting feature partitions the audience into mutually exclusive
types.  For every type we keep two shares:

* ``q`` -- fraction of *all* audiences having that type,
* ``p`` -- fraction of *buyers* having that type.

Both vectors sum to one within a feature.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Sequence

import numpy as np

from adtarget.errors import DomainError, ParseError, SchemaError

EPS_NORM_EXPORT = 1e-3
EPS_NORM_STRICT = 1e-9
# slack so that a printed 100.10% still counts as within 1e-3 of one
SUM_SLACK = 1e-12

UNITS = ("fraction", "percent")

# Feature catalog of the Tmall statistical dataset (name, number of types).
APPENDIX_SCHEMA: tuple[tuple[str, int], ...] = (
    ("Activity level", 8),
    ("Consumption frequency", 6),
    ("Credit level", 11),
    ("Monthly expenditure", 6),
    ("Purchasing power in sinking market", 6),
    ("Purchasing power level", 7),
    ("Sinking market", 6),
    ("Tmall strategical category", 9),
    ("Characteristic interests", 7),
    ("Content interests", 6),
    ("Feature interests", 42),
    ("Life interests", 28),
    ("Ages", 7),
    ("City", 19),
    ("City level", 7),
    ("Education", 8),
    ("Generation", 6),
    ("Life stage", 8),
    ("Occupation", 9),
    ("Phone type", 10),
    ("Browsing preference", 8),
    ("Frequently used device", 4),
    ("Nutritional product preference", 29),
    ("Shopping preference", 9),
)


def _check_probability(value: float, what: str) -> float:
    value = float(value)
    if math.isnan(value) or value < 0.0 or value > 1.0:
        raise DomainError(f"{what} must be a probability in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class TypeStat:
    """One type of a feature with its audience share ``q`` and buyer share ``p``."""

    label: str
    q: float
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", _check_probability(self.q, f"q of type {self.label!r}"))
        object.__setattr__(self, "p", _check_probability(self.p, f"p of type {self.label!r}"))


@dataclass(frozen=True)
class FeatureStats:
    name: str
    types: tuple[TypeStat, ...]

    def __post_init__(self) -> None:
        types = tuple(self.types)
        if not types:
            raise DomainError(f"feature {self.name!r} has no types")
        labels = [t.label for t in types]
        if len(set(labels)) != len(labels):
            raise DomainError(f"feature {self.name!r} has duplicate type labels")
        object.__setattr__(self, "types", types)

    @property
    def size(self) -> int:
        return len(self.types)

    @property
    def q(self) -> np.ndarray:
        return np.array([t.q for t in self.types], dtype=float)

    @property
    def p(self) -> np.ndarray:
        return np.array([t.p for t in self.types], dtype=float)

    @property
    def labels(self) -> list[str]:
        return [t.label for t in self.types]


@dataclass(frozen=True)
class StatsDataset:
    """A collection of features plus optional economic parameters.

    ``buy_rate`` is the base purchase probability P(Buy), ``audience_count``
    the number of reachable audiences, ``price``/``unit_cost`` the product
    economics and ``budget`` the advertising spend.
    """

    features: tuple[FeatureStats, ...]
    audience_count: int | None = None
    buy_rate: float | None = None
    price: float | None = None
    unit_cost: float | None = None
    budget: float | None = None

    def __post_init__(self) -> None:
        features = tuple(self.features)
        if not features:
            raise DomainError("dataset must contain at least one feature")
        names = [f.name for f in features]
        if len(set(names)) != len(names):
            raise DomainError("feature names must be unique")
        object.__setattr__(self, "features", features)
        if self.audience_count is not None and self.audience_count <= 0:
            raise DomainError("audience_count must be a positive integer")
        if self.buy_rate is not None:
            _check_probability(self.buy_rate, "buy_rate")
        for name in ("price", "unit_cost", "budget"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise DomainError(f"{name} must be non-negative")
        if self.price is not None and self.unit_cost is not None and not self.price > self.unit_cost:
            raise DomainError("price must exceed unit_cost")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def feature(self, name: str) -> FeatureStats:
        for f in self.features:
            if f.name == name:
                return f
        raise DomainError(f"unknown feature {name!r}")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    feature: str
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.feature}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    normalized: StatsDataset | None = None

    @property
    def valid(self) -> bool:
        return not self.violations


def validate(dataset: StatsDataset, eps_norm: float = EPS_NORM_EXPORT) -> ValidationReport:
    """Check that every feature is a proper partition of audience and buyers.

    A feature is flagged when either share vector misses one by more than
    ``eps_norm``, or when a type has buyers but no audience.  When nothing is
    flagged, the report carries a copy with both vectors divided by their sums.
    """
    violations: list[Violation] = []
    renormalized: list[FeatureStats] = []
    for feat in dataset.features:
        q_sum = math.fsum(t.q for t in feat.types)
        p_sum = math.fsum(t.p for t in feat.types)
        if abs(q_sum - 1.0) > eps_norm + SUM_SLACK:
            violations.append(Violation(feat.name, "q-sum", f"q-sum = {q_sum:.12g}"))
        if abs(p_sum - 1.0) > eps_norm + SUM_SLACK:
            violations.append(Violation(feat.name, "p-sum", f"p-sum = {p_sum:.12g}"))
        for t in feat.types:
            if t.p > 0.0 and t.q == 0.0:
                violations.append(
                    Violation(
                        feat.name,
                        "zero-audience-buyer",
                        f"buyer type with zero audience share ({t.label!r})",
                    )
                )
        if q_sum > 0 and p_sum > 0:
            renormalized.append(
                FeatureStats(
                    feat.name,
                    tuple(TypeStat(t.label, t.q / q_sum, t.p / p_sum) for t in feat.types),
                )
            )

    report = ValidationReport(violations)
    if not violations:
        report.normalized = replace(dataset, features=tuple(renormalized))
    return report


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------


def _scale(unit: str) -> float:
    if unit not in UNITS:
        raise SchemaError(f"unit must be one of {UNITS}, got {unit!r}")
    return 0.01 if unit == "percent" else 1.0


def _number(raw, line: int | None, fld: str) -> float:
    if isinstance(raw, bool):
        raise ParseError(f"expected a number, got {raw!r}", line=line, field=fld)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ParseError(f"expected a number, got {raw!r}", line=line, field=fld) from None
    if math.isnan(value) or math.isinf(value):
        raise ParseError(f"non-finite number {raw!r}", line=line, field=fld)
    return value


def _make_type(label, q: float, p: float, scale: float, where: str) -> TypeStat:
    q *= scale
    p *= scale
    if q < 0 or p < 0:
        raise DomainError(f"negative probability in {where}")
    return TypeStat(str(label), q, p)


def _optional(doc: dict, key: str, cast):
    value = doc.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", field=key)
    return cast(value)


def _load_json(text: str, unit: str | None) -> StatsDataset:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise SchemaError("top-level JSON value must be an object")
    scale = _scale(unit or doc.get("unit") or "fraction")
    raw_features = doc.get("features")
    if not isinstance(raw_features, list):
        raise SchemaError("missing 'features' array")

    features = []
    for i, raw in enumerate(raw_features):
        if not isinstance(raw, dict) or "name" not in raw or not isinstance(raw.get("types"), list):
            raise SchemaError(f"feature #{i} needs 'name' and a 'types' array")
        types = []
        for j, t in enumerate(raw["types"]):
            where = f"features[{i}].types[{j}]"
            if not isinstance(t, dict):
                raise SchemaError(f"{where} must be an object")
            for key in ("label", "q", "p"):
                if key not in t:
                    raise SchemaError(f"{where} is missing {key!r}")
            q = _number(t["q"], None, f"{where}.q")
            p = _number(t["p"], None, f"{where}.p")
            types.append(_make_type(t["label"], q, p, scale, where))
        features.append(FeatureStats(str(raw["name"]), tuple(types)))

    audience = _optional(doc, "audience_count", int)
    return StatsDataset(
        tuple(features),
        audience_count=audience,
        buy_rate=_optional(doc, "buy_rate", float),
        price=_optional(doc, "price", float),
        unit_cost=_optional(doc, "unit_cost", float),
        budget=_optional(doc, "budget", float),
    )


CSV_COLUMNS = ("feature", "label", "q", "p")


def _load_csv(text: str, unit: str | None, **economics) -> StatsDataset:
    scale = _scale(unit or "fraction")
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None:
        raise SchemaError("empty CSV input")
    missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise SchemaError(f"CSV is missing column(s): {', '.join(missing)}")

    grouped: dict[str, list[TypeStat]] = {}
    try:
        for row in reader:
            line = reader.line_num
            if any(row.get(c) is None for c in CSV_COLUMNS):
                raise ParseError("row has too few fields", line=line)
            q = _number(row["q"], line, "q")
            p = _number(row["p"], line, "p")
            grouped.setdefault(row["feature"], []).append(
                _make_type(row["label"], q, p, scale, f"line {line}")
            )
    except csv.Error as exc:
        raise ParseError(str(exc), line=reader.line_num) from None
    if not grouped:
        raise SchemaError("CSV contains no data rows")
    features = tuple(FeatureStats(name, tuple(types)) for name, types in grouped.items())
    return StatsDataset(features, **economics)


def load_dataset(
    source: IO[bytes] | bytes | str,
    format: str = "json",
    unit: str | None = None,
    **economics,
) -> StatsDataset:
    """Parse a dataset from a byte stream (or bytes / text).

    ``unit`` overrides the file's own ``"unit"`` entry.  For CSV input the
    economic fields (``buy_rate``, ``audience_count``, ...) can only be
    supplied as keyword arguments.  Values are stored as read; no
    renormalization happens here.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc.reason}") from None
    if format == "json":
        if economics:
            ds = _load_json(source, unit)
            return replace(ds, **economics)
        return _load_json(source, unit)
    if format == "csv":
        return _load_csv(source, unit, **economics)
    raise SchemaError(f"unknown dataset format {format!r}")


def dataset_to_dict(dataset: StatsDataset) -> dict:
    return {
        "unit": "fraction",
        "buy_rate": dataset.buy_rate,
        "audience_count": dataset.audience_count,
        "price": dataset.price,
        "unit_cost": dataset.unit_cost,
        "budget": dataset.budget,
        "features": [
            {
                "name": f.name,
                "types": [{"label": t.label, "q": t.q, "p": t.p} for t in f.types],
            }
            for f in dataset.features
        ],
    }


def serialize_dataset(dataset: StatsDataset, format: str = "json") -> bytes:
    """Inverse of :func:`load_dataset`; floats use shortest round-trip repr.

    CSV carries only the per-type rows.
    """
    if format == "json":
        return (json.dumps(dataset_to_dict(dataset), indent=2) + "\n").encode()
    if format == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for f in dataset.features:
            for t in f.types:
                writer.writerow([f.name, t.label, repr(t.q), repr(t.p)])
        return buf.getvalue().encode()
    raise SchemaError(f"unknown dataset format {format!r}")


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


def _simplex(rng: np.random.Generator, size: int, concentration: float) -> np.ndarray:
    if size == 1:
        return np.ones(1)
    draws = rng.standard_gamma(concentration, size)
    # Gamma draws underflow to 0 for small concentrations; q = 0 with p > 0 is invalid.
    draws = np.maximum(draws, 1e-300)
    return draws / draws.sum()


def generate_synthetic(
    schema: Iterable[tuple[str, int]] = APPENDIX_SCHEMA,
    seed: int = 0,
    concentration: float = 1.0,
) -> StatsDataset:
    """Draw a random dataset: per feature, independent Dirichlet ``q`` and ``p``."""
    schema = list(schema)
    if not concentration > 0:
        raise DomainError("concentration must be positive")
    for name, count in schema:
        if count < 1:
            raise DomainError(f"feature {name!r} needs at least one type, got {count}")
    rng = np.random.default_rng(seed)
    features = []
    for name, count in schema:
        q = _simplex(rng, count, concentration)
        p = _simplex(rng, count, concentration)
        types = tuple(TypeStat(f"t{k + 1}", float(q[k]), float(p[k])) for k in range(count))
        features.append(FeatureStats(name, types))
    return StatsDataset(tuple(features))


def feature_from_arrays(name: str, q: Sequence[float], p: Sequence[float]) -> FeatureStats:
    """Convenience constructor labelling types ``t1 .. tm``."""
    if len(q) != len(p):
        raise DomainError("q and p must have equal length")
    return FeatureStats(name, tuple(TypeStat(f"t{k + 1}", q[k], p[k]) for k in range(len(q))))
