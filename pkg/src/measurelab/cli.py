"""Command-line scenario runner.

    measurelab run <scenario> [--out DIR] [--seed N] [--tol X]
    measurelab sweep <scenario> [--out DIR] [--seed N]
    measurelab list

``<scenario>`` is a JSON file or the name of a bundled scenario. Each
analysis is written to ``<out>/<name>__<analysis>.csv`` and summarized on
stdout. Exit status: 0 success, 1 invalid scenario, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from measurelab.errors import MeasureLabError
from measurelab.scenario import (
    DEFAULT_TOL,
    Scenario,
    bundled_scenarios,
    load_scenario,
    run_analyses,
    run_sweep,
)
from measurelab.tables import ResultTable, emit_csv, format_cell

log = logging.getLogger("measurelab")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


def summarize(scen: Scenario, table: ResultTable) -> str:
    """One human-readable line per table."""
    rows = table.rows
    if table.name == "marginal":
        body = " ".join(f"{lab}={format_cell(p)}" for lab, p in rows)
    elif table.name == "joint":
        body = " ".join(f"P({i},{j})={format_cell(p)}" for i, j, p in rows)
    elif table.name == "linearity":
        r = dict(zip(table.columns, rows[0]))
        verdict = "passed" if r["passed"] else "failed"
        body = (
            f"{verdict}, gap {format_cell(r['canonical_gap'])} on the canonical witness, "
            f"worst gap {format_cell(r['worst_gap'])} over {r['trials']} trials"
        )
    elif table.name == "effect_fit":
        r = dict(zip(table.columns, rows[0]))
        body = f"residual {format_cell(r['residual'])}, valid effect {format_cell(r['valid_effect'])}"
    elif table.name == "heralded_fit":
        r = dict(zip(table.columns, rows[0]))
        body = (
            f"residual {format_cell(r['fit_residual'])}, "
            f"completeness defect {format_cell(r['completeness_defect'])}"
        )
    elif table.name == "discrimination":
        body = f"TV gap {format_cell(rows[0][-1])}"
    elif table.name == "pdm":
        r = {q: v for q, v in rows}
        body = (
            f"trace {format_cell(r['trace'])}, min eigenvalue {format_cell(r['min_eigenvalue'])}, "
            f"negativity {format_cell(r['negativity'])}"
        )
    elif table.name == "sweep":
        res_cols = [c for c in table.columns if c.startswith("fit_residual_")]
        body = f"{len(rows)} points; " + ", ".join(
            f"max {c} {format_cell(max(table.column(c)))}" for c in res_cols
        )
    else:
        body = f"{len(rows)} rows"
    return f"{scen.name} [{table.name}] {body}"


def write_tables(scen: Scenario, tables: Sequence[ResultTable], out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in tables:
        p = out / f"{scen.name}__{t.name}.csv"
        emit_csv(t, p)
        paths.append(p)
    return paths


def _load(args: argparse.Namespace) -> Scenario:
    scen = load_scenario(args.scenario)
    if args.seed is not None:
        scen = replace(scen, seed=args.seed)
    return scen


def run_scenario(
    path: str | Path, out: str | Path = ".", seed: Optional[int] = None, tol: float = DEFAULT_TOL
) -> list[ResultTable]:
    """Library entry point behind ``measurelab run``."""
    scen = load_scenario(path)
    if seed is not None:
        scen = replace(scen, seed=seed)
    tables = run_analyses(scen, tol)
    write_tables(scen, tables, Path(out))
    return tables


def sweep(path: str | Path, out: str | Path = ".", seed: Optional[int] = None) -> ResultTable:
    """Library entry point behind ``measurelab sweep``."""
    scen = load_scenario(path)
    if seed is not None:
        scen = replace(scen, seed=seed)
    table = run_sweep(scen)
    write_tables(scen, [table], Path(out))
    return table


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="measurelab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run every analysis of a scenario"), ("sweep", "run a scenario's parameter sweep")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("scenario", help="scenario JSON file or bundled scenario name")
        p.add_argument("--out", default=".", type=Path, help="output directory for CSV files")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="linearity-check tolerance")
    sub.add_parser("list", help="list bundled scenarios")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list":
        for name in sorted(bundled_scenarios()):
            print(name)
        return EXIT_OK

    try:
        scen = _load(args)
        if args.command == "run":
            tables = run_analyses(scen, args.tol)
        else:
            tables = [run_sweep(scen)]
        paths = write_tables(scen, tables, args.out)
    except MeasureLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    for t, p in zip(tables, paths):
        print(summarize(scen, t))
        log.debug("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
