"""Command-line interface: ``adtarget {validate,optimize,sweep,gen-demo,freq}``.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 runtime or
domain error.  Data goes to stdout (or ``--out``); diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Sequence

from adtarget import stats_model, strategy_engine
from adtarget.errors import AdTargetError
from adtarget.stats_model import APPENDIX_SCHEMA, StatsDataset

log = logging.getLogger("adtarget")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("L must lie in [0,1]")
    return value


def _names(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, type=Path, help="dataset file (.json or .csv)")
    p.add_argument("--input-format", choices=("json", "csv"), help="defaults to the file suffix")
    p.add_argument("--unit", choices=stats_model.UNITS, help="percent or fraction")
    p.add_argument("--eps", type=float, default=stats_model.EPS_NORM_EXPORT,
                   help="tolerance on per-feature sums (default %(default)s)")
    econ = p.add_argument_group("economics")
    econ.add_argument("--buy-rate", type=float, dest="buy_rate", help="base P(Buy)")
    econ.add_argument("--audience", type=int, dest="audience_count", help="audience size N")
    econ.add_argument("--price", type=float)
    econ.add_argument("--cost", type=float, dest="unit_cost")
    econ.add_argument("--budget", type=float)


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, help="write here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adtarget", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check per-feature sums and shares")
    _add_data_args(p)

    p = sub.add_parser("optimize", help="optimal strategy for one coverage floor")
    _add_data_args(p)
    p.add_argument("--L", type=_probability, required=True, dest="L", help="coverage floor in [0,1]")
    p.add_argument("--exclude", type=_names, default=[], help="comma-separated feature names")
    _add_output_args(p)

    p = sub.add_parser("sweep", help="optimal strategies over a grid of coverage floors")
    _add_data_args(p)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--grid-points", type=int, default=None)
    grid.add_argument("--grid-file", type=Path, help="one L value per line")
    p.add_argument("--exclude", type=_names, default=[])
    p.add_argument("--groups", type=Path, help="JSON list of correlated feature-name lists")
    p.add_argument("--matrix-out", type=Path, help="active-feature matrix CSV")
    p.add_argument("--jobs", type=int, default=None,
                   help=f"worker processes (default ${strategy_engine.JOBS_ENV} or 1)")
    _add_output_args(p)

    p = sub.add_parser("gen-demo", help="synthetic dataset from a feature catalog")
    p.add_argument("--schema", default="appendix",
                   help="'appendix' or a JSON file of [name, type-count] pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--concentration", type=float, default=1.0)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("freq", help="feature-frequency report from a saved sweep")
    p.add_argument("--sweep", required=True, type=Path, dest="sweep_file")
    p.add_argument("--out", type=Path)
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8", newline="")


def _read_dataset(args) -> StatsDataset:
    fmt = args.input_format or ("csv" if args.data.suffix.lower() == ".csv" else "json")
    economics = {
        k: getattr(args, k)
        for k in ("buy_rate", "audience_count", "price", "unit_cost", "budget")
        if getattr(args, k) is not None
    }
    with open(args.data, "rb") as fh:
        return stats_model.load_dataset(fh, fmt, unit=args.unit, **economics)


def _validated(args) -> StatsDataset | None:
    report = stats_model.validate(_read_dataset(args), args.eps)
    for v in report.violations:
        print(f"violation: {v}", file=sys.stderr)
    return report.normalized


def cmd_validate(args) -> int:
    report = stats_model.validate(_read_dataset(args), args.eps)
    if report.valid:
        print("valid")
        return EXIT_OK
    for v in report.violations:
        print(f"{v.feature}\t{v.kind}\t{v.message}")
    return EXIT_INVALID


def cmd_optimize(args) -> int:
    dataset = _validated(args)
    if dataset is None:
        return EXIT_INVALID
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", strategy_engine.ModelConsistencyWarning)
        strategy = strategy_engine.optimize(dataset, args.L, args.exclude)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.format == "csv":
        text = strategy_engine.strategy_to_csv(strategy)
    else:
        text = strategy_engine.dumps_json(strategy_engine.strategy_to_dict(strategy))
    _emit(text, args.out)
    return EXIT_OK


def _read_grid(path: Path) -> list[float]:
    values = []
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(_probability(line))
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{path}:{n}: {exc}") from None
    return values


def cmd_sweep(args) -> int:
    dataset = _validated(args)
    if dataset is None:
        return EXIT_INVALID
    if args.grid_file is not None:
        grid = _read_grid(args.grid_file)
    else:
        points = args.grid_points or strategy_engine.DEFAULT_GRID_POINTS
        if points < 1:
            raise UsageError("--grid-points must be at least 1")
        grid = strategy_engine.default_grid(points)
    groups = []
    if args.groups is not None:
        groups = json.loads(args.groups.read_text())
        if not isinstance(groups, list) or not all(isinstance(g, list) for g in groups):
            raise UsageError("--groups must hold a JSON list of lists of feature names")

    result = strategy_engine.sweep(dataset, grid, args.exclude, jobs=args.jobs)
    reports = strategy_engine.correlation_report(result, groups) if groups else []
    for r in reports:
        if r.violation:
            print(
                f"correlated features active together: {', '.join(r.members)}; "
                f"keep {r.keep}, exclude {', '.join(r.exclude)}",
                file=sys.stderr,
            )
    if args.format == "csv":
        text = strategy_engine.sweep_to_csv(result)
    else:
        text = strategy_engine.dumps_json(strategy_engine.sweep_to_dict(result, reports))
    _emit(text, args.out)
    if args.matrix_out is not None:
        _emit(strategy_engine.active_matrix_csv(result), args.matrix_out)
    return EXIT_OK


def cmd_gen_demo(args) -> int:
    if args.schema == "appendix":
        schema = APPENDIX_SCHEMA
    else:
        raw = json.loads(Path(args.schema).read_text())
        schema = [(str(name), int(count)) for name, count in raw]
    dataset = stats_model.generate_synthetic(schema, args.seed, args.concentration)
    _emit(stats_model.serialize_dataset(dataset, args.format).decode(), args.out)
    return EXIT_OK


def cmd_freq(args) -> int:
    doc = json.loads(args.sweep_file.read_text())
    if "frequency" in doc:
        frequency = {k: int(v) for k, v in doc["frequency"].items()}
    else:
        frequency = {name: 0 for name in doc["feature_names"]}
        for point in doc["points"]:
            for name in point["active_features"]:
                frequency[name] += 1
    _emit(strategy_engine.frequency_csv(frequency), args.out)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "gen-demo": cmd_gen_demo,
    "freq": cmd_freq,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"adtarget: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"adtarget: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AdTargetError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"adtarget: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
