"""Headless command line: run one analysis from a CSV and a config file,
writing results.json, table1.tsv, and plot-data CSVs into an output
directory.

Exit codes: 0 success, 1 input/validation problems, 2 runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .diagnostics import table1_tsv
from .errors import ConfigError, DataError, EffectBenchError, ParseError
from .jsonutil import dumps
from .learners import default_library
from .pipeline import run_analysis
from .tabular import AnalysisConfig, parse_csv

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def default_config_dict() -> dict:
    cfg = AnalysisConfig(
        outcome_column="Y",
        treatment_column="A",
        treatment_positive_level=1,
        analysis_kind="binary",
        outcome_positive_level=1,
        learners=tuple(s.to_json_dict() for s in default_library()),
    )
    return cfg.to_json_dict()


def _write_forest_csv(path: Path, doc):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "estimand", "psi", "ci_low", "ci_high",
                         "p_value"])
        for est in doc.estimates:
            row = est.to_json_dict()
            writer.writerow([row["method"], row["estimand"], row["psi"],
                             row["ci_low"], row["ci_high"], row["p_value"]])


def _write_propensity_csv(path: Path, doc):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "bin_low", "bin_high", "treated_count",
                         "control_count"])
        for method in sorted(doc.propensity_histograms):
            hist = doc.propensity_histograms[method]
            edges = hist["edges"]
            for i in range(len(edges) - 1):
                writer.writerow([method, edges[i], edges[i + 1],
                                 hist["treated_counts"][i],
                                 hist["control_counts"][i]])


def _write_curves_csv(path: Path, doc):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block", "time", "value", "ci_low", "ci_high"])
        surv = doc.survival
        for block in ("km_treated", "km_control", "ate"):
            series = surv[block]
            times = series.get("time_grid")
            for i, t in enumerate(times):
                writer.writerow([block, t, series["values"][i],
                                 series["ci_low"][i], series["ci_high"][i]])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="effectbench",
        description="Treatment-effect estimation workbench (headless run)")
    parser.add_argument("--data", help="input CSV file")
    parser.add_argument("--config", help="analysis config JSON file")
    parser.add_argument("--out", default=".",
                        help="output directory (default: current)")
    parser.add_argument("--seed", type=int, default=0,
                        help="run seed (default: 0)")
    parser.add_argument("--print-default-config", action="store_true",
                        help="print the default config JSON and exit")
    args = parser.parse_args(argv)

    if args.print_default_config:
        sys.stdout.write(dumps(default_config_dict()))
        return EXIT_OK

    if not args.data or not args.config:
        sys.stderr.write("error: --data and --config are required\n")
        return EXIT_INVALID

    try:
        data_bytes = Path(args.data).read_bytes()
    except OSError as exc:
        sys.stderr.write(f"error: cannot read data file: {exc}\n")
        return EXIT_INVALID
    try:
        config_text = Path(args.config).read_text()
        config_dict = json.loads(config_text)
    except OSError as exc:
        sys.stderr.write(f"error: cannot read config file: {exc}\n")
        return EXIT_INVALID
    except ValueError as exc:
        sys.stderr.write(f"error: config file is not valid JSON: {exc}\n")
        return EXIT_INVALID

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        sys.stderr.write(f"error: cannot create output directory: {exc}\n")
        return EXIT_INVALID

    try:
        table = parse_csv(data_bytes)
        cfg = AnalysisConfig.from_json_dict(config_dict)
        doc = run_analysis(
            table, cfg, seed=args.seed,
            progress=lambda stage: sys.stderr.write(f"[{stage}]\n"))
    except (ParseError, ConfigError, DataError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except EffectBenchError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - last-resort runtime mapping
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME

    (out_dir / "results.json").write_bytes(doc.to_bytes())
    (out_dir / "table1.tsv").write_text(
        table1_tsv(doc.table1, cfg.treatment_column))
    _write_forest_csv(out_dir / "forest.csv", doc)
    _write_propensity_csv(out_dir / "propensity_histograms.csv", doc)
    if doc.survival is not None:
        _write_curves_csv(out_dir / "curves.csv", doc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
