"""Command-line entry point: ``freqcp {fit,simulate,periodogram,clean}``.

Exit codes: 0 success, 1 input error, 2 fit did not converge or found no
change (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from freqcp.cleaning import clean_outliers
from freqcp.dataio import load_series, save_series
from freqcp.estimator import FitConfig, fit
from freqcp.montecarlo import Scenario, format_table, run_scenario
from freqcp.pipeline import fit_report
from freqcp.spectral import SeriesError, expected_periodogram, periodogram

log = logging.getLogger("freqcp")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


class InputError(Exception):
    pass


def _config(args) -> FitConfig:
    return FitConfig(max_iterations=args.max_iters, tolerance=args.tol, schedule=args.schedule)


def _write(text: str, output) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _load(args) -> np.ndarray:
    return load_series(args.input, args.column)


def cmd_fit(args) -> int:
    x = _load(args)
    cleaning = None
    if args.clean:
        x, report = clean_outliers(x, args.window, args.threshold, args.seed)
        cleaning = report.to_dict()
    report, result = fit_report(x, _config(args), source=str(args.input), cleaning=cleaning)
    _write(json.dumps(report, indent=2) + "\n", args.output)
    if result.no_change or not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_periodogram(args) -> int:
    x = _load(args)
    pg = periodogram(x)
    columns = [pg.grid.omega, pg.values]
    header = "omega,power"
    if args.fit:
        result = fit(pg, _config(args))
        if result.no_change:
            fitted = np.full(pg.M, result.theta.sigma2)
        else:
            fitted = expected_periodogram(result.theta, pg.grid)
        columns.append(fitted)
        header += ",fitted"
    lines = [header] + [",".join(repr(float(v)) for v in row) for row in zip(*columns)]
    _write("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_clean(args) -> int:
    x = _load(args)
    cleaned, report = clean_outliers(x, args.window, args.threshold, args.seed)
    if args.output is None or args.output == "-":
        sys.stdout.write("value\n" + "".join(repr(float(v)) + "\n" for v in cleaned))
    else:
        save_series(args.output, cleaned)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


_SCENARIO_KEYS = {"nu_B", "xi_B", "nu_A", "xi_A", "lam", "T", "noise", "seed"}


def read_scenarios(path) -> list[Scenario]:
    """Parse a JSON scenario file: a list of objects, or ``{"scenarios": [...]}``."""
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    entries = doc.get("scenarios") if isinstance(doc, dict) else doc
    if not isinstance(entries, list) or not entries:
        raise InputError(f"{path}: expected a non-empty list of scenarios")
    scenarios = []
    for i, entry in enumerate(entries):
        name = entry.get("name", f"#{i}") if isinstance(entry, dict) else f"#{i}"
        try:
            if not isinstance(entry, dict):
                raise ValueError("entry is not an object")
            entry = {k: v for k, v in entry.items() if k != "name"}
            if "lambda" in entry:
                entry["lam"] = entry.pop("lambda")
            unknown = set(entry) - _SCENARIO_KEYS
            if unknown:
                raise ValueError(f"unknown fields {sorted(unknown)}")
            sc = Scenario(**entry)
            sc.validate_for_study()
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}: scenario {name}: {exc}") from None
        scenarios.append(sc)
    return scenarios


def cmd_simulate(args) -> int:
    scenarios = read_scenarios(args.input)
    if args.seed is not None:
        scenarios = [Scenario(**{**sc.__dict__, "seed": args.seed}) for sc in scenarios]
    config = _config(args)
    out = Path(args.output) if args.output else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    summaries = []
    for i, sc in enumerate(scenarios):
        summary = run_scenario(sc, args.reps, config, workers=args.workers)
        summaries.append(summary)
        if out is not None:
            (out / f"scenario_{i:02d}.json").write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    table = format_table(summaries)
    if out is not None:
        (out / "table.tsv").write_text(table)
    sys.stdout.write(table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqcp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--input", "-i", required=True)
        p.add_argument("--output", "-o")
        p.add_argument("--seed", type=int, default=None if not data else 0)
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--max-iters", type=int, default=1000)
        p.add_argument("--schedule", choices=("jacobi", "gauss-newton"), default="jacobi")
        if data:
            p.add_argument("--column", default=None, help="header name or 0-based index")
            p.add_argument("--window", type=int, default=5)
            p.add_argument("--threshold", type=float, default=4.0)

    p = sub.add_parser("fit", help="estimate the change point of a series")
    common(p)
    p.add_argument("--clean", action="store_true", help="replace outliers before fitting")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="Monte Carlo study from a scenario file")
    common(p, data=False)
    p.add_argument("--reps", type=int, default=300)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("periodogram", help="dump (omega, power) columns")
    common(p)
    p.add_argument("--fit", action="store_true", help="add the fitted spectrum as a third column")
    p.set_defaults(func=cmd_periodogram)

    p = sub.add_parser("clean", help="replace outliers and write the cleaned series")
    common(p)
    p.add_argument("--report", help="write the cleaning report (JSON) here")
    p.set_defaults(func=cmd_clean)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (SeriesError, InputError, ValueError) as exc:
        print(f"freqcp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
