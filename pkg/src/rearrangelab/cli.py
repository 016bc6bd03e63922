"""Command-line front end: ``rearrangelab run|demo|list-checks``.

Exit codes: 0 when every verdict matches its declared expectation, 1 on any
mismatch, 2 when the scenario cannot be parsed (the message names the field).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

from . import scenario as S
from . import verify as V
from .grid import GridError

DEMOS = ("schwarz", "polarization_flow", "kschwarz_counterexample", "content_identity")

SUMMARY_COLUMNS = ["index", "label", "name", "statement", "lhs", "rhs", "tolerance", "margin", "verdict",
                   "expected", "match", "h"]


def expected_for(report: V.CheckReport, declared: str) -> str:
    # control cases bundled with a counterexample must hold
    if declared == V.EXPECTED and report.details.get("control"):
        return V.HOLDS
    return declared


def matches(report: V.CheckReport, declared: str) -> bool:
    if report.verdict != expected_for(report, declared):
        return False
    # a counterexample only counts when its predicted values are reproduced
    return all(report.details.get(k, True) for k in ("reproduced", "point_values_ok"))


def run_scenario(sc: S.Scenario, threads: int = 1):
    """Run every check; returns ``[(check_index, label, declared, report), ...]``."""
    b = S.Builder(sc)

    def one(i):
        chk = sc.checks[i]
        label = chk.get("label", f"{i:03d}_{chk['check']}")
        try:
            reps = S.run_check(b, chk)
        except (GridError, V.CheckError) as e:
            raise type(e)(f"$.checks[{i}] ({label}): {e}") from e
        return [(i, label, chk["expect"], r) for r in reps]

    idx = range(len(sc.checks))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(one, idx))
    else:
        parts = [one(i) for i in idx]
    rows = [r for p in parts for r in p]
    rows.sort(key=lambda t: (t[3].name, t[0]))  # order-independent aggregation
    return rows


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render(rows) -> dict:
    """File name -> contents for a finished run."""
    files = {}
    reps = []
    summary = []
    for k, (i, label, declared, r) in enumerate(rows):
        exp = expected_for(r, declared)
        ok = matches(r, declared)
        d = r.to_json()
        d.update(check_index=i, label=label, expected=exp, match=ok)
        reps.append(d)
        summary.append([i, label, r.name, r.statement, repr(r.lhs), repr(r.rhs), repr(r.tolerance),
                        repr(r.margin), r.verdict, exp, ok, repr(r.h)])
        series = r.details.get("series")
        if series:
            files[f"plot_{k:03d}_{label}.csv"] = _csv_text(series["columns"], series["rows"])
    files["reports.json"] = json.dumps(reps, indent=2, sort_keys=True) + "\n"
    files["summary.csv"] = _csv_text(SUMMARY_COLUMNS, summary)
    return files


def write_atomic(out_dir: str, files: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".tmp_")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, os.path.join(out_dir, name))


def load_demo(name: str) -> S.Scenario:
    if name not in DEMOS:
        raise KeyError(name)
    return S.parse(resources.files("rearrangelab.data").joinpath(f"{name}.json").read_text())


def _execute(sc, args) -> int:
    sc = S.with_overrides(sc, args.h_override, args.seed)
    rows = run_scenario(sc, args.threads)
    write_atomic(args.out_dir, render(rows))
    bad = [(label, r.name, r.verdict, expected_for(r, d)) for _, label, d, r in rows if not matches(r, d)]
    print(f"{sc.name}: {len(rows)} reports, {len(rows) - len(bad)} as expected -> {args.out_dir}")
    for label, name, got, exp in bad:
        print(f"  MISMATCH {label} ({name}): {got}, expected {exp}", file=sys.stderr)
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rearrangelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--h-override", type=float, default=None, help="replace the base grid spacing")
    common.add_argument("--out-dir", default="out", help="directory for reports.json, summary.csv, plot CSVs")
    common.add_argument("--seed", type=int, default=None, help="replace the scenario seed")
    common.add_argument("--threads", type=int, default=1, help="checks run concurrently")
    r = sub.add_parser("run", parents=[common], help="run a scenario file")
    r.add_argument("file")
    d = sub.add_parser("demo", parents=[common], help="run a bundled scenario")
    d.add_argument("name", choices=DEMOS)
    sub.add_parser("list-checks", help="print check names and their arguments")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "list-checks":
        for name, kinds in S.CHECKS.items():
            req = set(S.REQUIRED[name])
            sig = ", ".join(k if k in req else f"[{k}]" for k in kinds)
            flag = "  (counterexample)" if name in V.COUNTEREXAMPLE_CHECKS else ""
            print(f"{name}({sig}){flag}")
        return 0
    try:
        if args.cmd == "run":
            try:
                sc = S.load(args.file)
            except OSError as e:
                print(f"error: {e}", file=sys.stderr)
                return 2
        else:
            sc = load_demo(args.name)
        return _execute(sc, args)
    except S.ScenarioError as e:
        print(f"scenario error at {e}", file=sys.stderr)
        return 2
    except (GridError, V.CheckError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
