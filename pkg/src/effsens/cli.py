"""Command-line interface.

Subcommands: ``estimate`` (CSV ingestion, per-column Sobol indices),
``replicate`` (benchmark replication tables), ``benchmark`` (estimator vs
pick-freeze side by side) and ``oracle`` (pick-freeze only).

Exit codes: 0 success, 2 unreadable input file, 3 non-numeric cell,
4 too few rows.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import EffsensError
from .estimator import EstimatorConfig, sobol_first_order
from .harness import ExperimentConfig, benchmark_against_oracle, max_threads, run_replication
from .models import get_model, pick_freeze_oracle

SCHEMA_VERSION = "1"
EXIT_OK = 0
EXIT_UNREADABLE = 2
EXIT_NON_NUMERIC = 3
EXIT_TOO_FEW_ROWS = 4
MIN_ROWS = 40


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return "" if v is None else str(v)


def _load_csv(path: str):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_UNREADABLE)
    if not rows:
        raise CliError(f"{path} is empty", EXIT_TOO_FEW_ROWS)
    header, body = rows[0], rows[1:]
    if len(body) < MIN_ROWS:
        raise CliError(
            f"{path} has {len(body)} data rows; need at least {MIN_ROWS}", EXIT_TOO_FEW_ROWS
        )
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise CliError(
                f"row {i + 2} has {len(row)} cells, header has {len(header)}", EXIT_NON_NUMERIC
            )
        for jcol, cell in enumerate(row):
            try:
                data[i, jcol] = float(cell)
            except ValueError:
                raise CliError(
                    f"non-numeric value {cell!r} at row {i + 2}, column {header[jcol]!r}",
                    EXIT_NON_NUMERIC,
                )
    return header, data


def _resolve_column(header, selector: str) -> int:
    if selector in header:
        matches = [k for k, h in enumerate(header) if h == selector]
        if len(matches) > 1:
            raise CliError(f"column name {selector!r} is ambiguous", EXIT_UNREADABLE)
        return matches[0]
    try:
        idx = int(selector)
    except ValueError:
        raise CliError(f"no column named {selector!r}", EXIT_UNREADABLE)
    if not 0 <= idx < len(header):
        raise CliError(f"column index {idx} out of range", EXIT_UNREADABLE)
    return idx


def _estimator_config(args) -> EstimatorConfig:
    bw = None
    if args.bandwidths:
        parts = [float(p) for p in args.bandwidths.split(",")]
        if len(parts) != 2:
            raise CliError("--bandwidths expects 'hx,hy'", EXIT_UNREADABLE)
        bw = (parts[0], parts[1])
    return EstimatorConfig(
        seed=args.seed,
        k_override=args.basis_size,
        bandwidths=bw,
        quad_order=args.quadrature_order,
        pad_fraction=args.pad_fraction,
    )


def _emit(payload: dict, rows: list, args) -> None:
    if args.output_format == "json":
        text = json.dumps(payload, indent=2)
    else:
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _fmt(v) for k, v in row.items()})
        text = buf.getvalue()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text + ("\n" if not text.endswith("\n") else ""))


def _report_row(parameter, report) -> dict:
    diag = report.diagnostics
    return {
        "parameter": parameter,
        "sigma_raw": report.sobol.index_raw if report.sobol else None,
        "sigma_clipped": report.sobol.index_clipped if report.sobol else None,
        "t_hat": report.t_hat,
        "ci_lo": report.ci_95[0],
        "ci_hi": report.ci_95[1],
        "n": diag.get("n"),
        "n1": diag.get("n1"),
        "n2": diag.get("n2"),
        "m_size": diag.get("m_size"),
        "bandwidth_x": (diag.get("bandwidths") or [None, None])[0],
        "bandwidth_y": (diag.get("bandwidths") or [None, None])[1],
        "domain": json.dumps(diag.get("domain")) if diag.get("domain") else None,
    }


def cmd_estimate(args) -> int:
    header, data = _load_csv(args.input)
    ycol = _resolve_column(header, args.output_column)
    if args.input_columns == "all":
        xcols = [k for k in range(len(header)) if k != ycol]
    else:
        xcols = [_resolve_column(header, s.strip()) for s in args.input_columns.split(",")]
    y = data[:, ycol]
    X = data[:, xcols]
    cfg = _estimator_config(args)
    workers = max_threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(
                pool.map(lambda j: sobol_first_order(X, y, j, cfg), range(len(xcols)))
            )
    else:
        reports = [sobol_first_order(X, y, j, cfg) for j in range(len(xcols))]
    rows = [_report_row(header[c], rep) for c, rep in zip(xcols, reports)]
    rows.sort(key=lambda r: -(r["sigma_raw"] if r["sigma_raw"] is not None else -np.inf))
    payload = {
        "version": SCHEMA_VERSION,
        "command": "estimate",
        "config": {**cfg.echo(), "input": args.input, "output_column": args.output_column},
        "rows": rows,
    }
    _emit(payload, rows, args)
    return EXIT_OK


def cmd_replicate(args) -> int:
    cfg = ExperimentConfig(
        model=args.model,
        sample_sizes=(args.n,),
        replications=args.reps,
        seed_base=args.seed,
        inputs=tuple(int(j) for j in args.inputs.split(",")),
        estimator=_estimator_config(args),
    )
    table = run_replication(cfg)
    rows = table.as_records()
    payload = {
        "version": SCHEMA_VERSION,
        "command": "replicate",
        "config": {"model": args.model, "n": args.n, "replications": args.reps, "seed": args.seed},
        "rows": rows,
    }
    _emit(payload, rows, args)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    rows = benchmark_against_oracle(
        args.model, args.n, seed=args.seed, oracle_n=args.oracle_n,
        estimator=_estimator_config(args),
    )
    payload = {
        "version": SCHEMA_VERSION,
        "command": "benchmark",
        "config": {"model": args.model, "n": args.n, "seed": args.seed},
        "rows": rows,
    }
    _emit(payload, rows, args)
    return EXIT_OK


def cmd_oracle(args) -> int:
    model = get_model(args.model)
    res = pick_freeze_oracle(model, args.j, args.N, args.seed)
    rows = [
        {
            "model": args.model,
            "input": args.j,
            "N": res.n,
            "estimate": res.value,
            "stderr": res.stderr,
        }
    ]
    payload = {
        "version": SCHEMA_VERSION,
        "command": "oracle",
        "config": {"model": args.model, "j": args.j, "N": args.N, "seed": args.seed},
        "rows": rows,
    }
    _emit(payload, rows, args)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--basis-size", type=int, default=None, dest="basis_size",
                   help="per-axis basis size k (|M| = k^2)")
    p.add_argument("--bandwidths", type=str, default=None, help="'hx,hy' KDE bandwidths")
    p.add_argument("--quadrature-order", type=int, default=32, dest="quadrature_order")
    p.add_argument("--pad-fraction", type=float, default=0.0, dest="pad_fraction")
    p.add_argument("--output-format", choices=("json", "csv"), default="json",
                   dest="output_format")
    p.add_argument("--output", type=str, default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="effsens",
        description="Efficient estimation of first-order sensitivity indices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate Sobol indices from a CSV sample")
    p.add_argument("input", help="CSV file: header row, comma-separated, '.' decimal")
    p.add_argument("--output-column", required=True, dest="output_column")
    p.add_argument("--input-columns", default="all", dest="input_columns",
                   help="comma-separated names/indices, or 'all'")
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("replicate", help="replication table on a built-in model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=25)
    p.add_argument("--inputs", default="1,2")
    _add_common(p)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("benchmark", help="estimator vs pick-freeze on a built-in model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--oracle-n", type=int, default=100_000, dest="oracle_n")
    _add_common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("oracle", help="pick-freeze oracle for E(E(Y|tau_j)^2)")
    p.add_argument("--model", required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--N", type=int, default=1_000_000)
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except EffsensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE


if __name__ == "__main__":
    sys.exit(main())
