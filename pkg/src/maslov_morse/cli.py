"""maslov-morse: command-line front end.

    maslov-morse report --example 1
    maslov-morse curves --config problem.json --out figs/
    maslov-morse check --example 4

Exit codes: 0 success, 2 degenerate correction matrix (report only),
1 error or failed check.  Errors are also written to stderr as JSON.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import atomic_write, build_problem, builtin_config, read_config
from .errors import MaslovError
from .kernels import herm_eig
from .maslov import PathSegment, SegmentKind, omega_lambda, sample_phases
from .morse import asymptotics_ok, morse_via_gamma3, morse_via_theorem, perturbation_errors
from .oracle import assemble, eigencurves, lowest_eigenvalues, oracle_count
from .problem import Problem
from .shooting import integrate_frame

EXIT_OK, EXIT_ERROR, EXIT_DEGENERATE = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maslov-morse", description="Morse index via the Maslov index")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("report", "compute and print the index report"),
                       ("curves", "write eigenvalue curves and the phase-gap field as CSV"),
                       ("check", "run every consistency check and print a table")):
        p = sub.add_parser(name, help=text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="JSON problem file")
        src.add_argument("--example", type=int, choices=range(1, 5), help="built-in example 1-4")
        p.add_argument("--s0", type=float)
        p.add_argument("--lambda-inf", type=float, dest="lambda_inf")
        p.add_argument("--steps", type=int)
        p.add_argument("--mesh", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--out", help="output directory")
        if name == "report":
            p.add_argument("--no-oracle", action="store_true", help="skip the finite-element count")
            p.add_argument("--crossings", action="store_true", help="localize every crossing")
        if name == "curves":
            p.add_argument("--k", type=int, default=4, help="number of curves (at most 8)")
            p.add_argument("--s-count", type=int, default=40)
            p.add_argument("--lambda-count", type=int, default=60)
            p.add_argument("--lambda-min", type=float)
            p.add_argument("--convention", choices=("H(s)", "H_s"), default="H_s")
    return ap


def _problem(args) -> tuple[Problem, dict]:
    cfg = builtin_config(f"example{args.example}") if args.example else read_config(args.config)
    p = build_problem(cfg)
    p = p.with_settings(s0=args.s0, lambda_inf=args.lambda_inf, steps=args.steps, mesh=args.mesh,
                        samples=args.samples)
    return p, cfg.outputs


def _out_path(args, outputs: dict, key: str, default: str) -> str:
    d = args.out or outputs.get("dir") or "."
    return os.path.join(d, outputs.get(key, default))


def run_report(p: Problem, args, outputs: dict, out=None) -> int:
    out = out or sys.stdout
    rep = morse_via_theorem(p, oracle=not getattr(args, "no_oracle", False),
                            crossings=getattr(args, "crossings", False))
    doc = rep.to_dict()
    doc["settings"] = p.settings.to_dict()
    doc["version"] = __version__
    text = json.dumps(doc, indent=2) + "\n"
    out.write(text)
    if args.out or outputs.get("report"):
        atomic_write(_out_path(args, outputs, "report", "report.json"), text)
    return EXIT_OK if rep.nondegenerate else EXIT_DEGENERATE


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(x if isinstance(x, str) else repr(float(x)) for x in r) + "\n")
    return buf.getvalue()


def run_curves(p: Problem, args, outputs: dict, out=None) -> int:
    out = out or sys.stdout
    k = args.k
    s0 = p.settings.s0
    sgrid = np.linspace(s0, 1.0, args.s_count)
    table = eigencurves(p, sgrid, k, args.convention)
    header = ["s"] + [f"lambda{i + 1}" for i in range(k)] + ["convention"]
    rows = []
    for s, vals in table:
        vals = list(vals) + [math.nan] * (k - len(vals))
        rows.append([s] + vals + [args.convention])
    curves_path = _out_path(args, outputs, "curves", "curves.csv")
    atomic_write(curves_path, _csv(header, rows))

    lam_min = args.lambda_min
    if lam_min is None:
        low = float(lowest_eigenvalues(assemble(p, 1.0), 1)[0])
        lam_min = min(-1.0, 1.25 * low)
    lams = np.linspace(lam_min, 0.0, args.lambda_count)
    gap_rows = []
    for s in sgrid:
        seg = PathSegment(SegmentKind.LAMBDA_SLICE, float(s), lam_min, 0.0, 2)
        ph = sample_phases(p, seg, lams).phases
        gap = np.min(np.abs(np.angle(-np.exp(1j * ph))), axis=1)
        gap_rows.extend([float(s), float(l), float(g)] for l, g in zip(lams, gap))
    gap_path = _out_path(args, outputs, "phaseGap", "phase_gap.csv")
    atomic_write(gap_path, _csv(["s", "lambda", "phase_gap"], gap_rows))
    out.write(json.dumps({"curves": curves_path, "phaseGap": gap_path}) + "\n")
    return EXIT_OK


def _checks(p: Problem):
    """Yield (name, passed, detail) for every consistency check."""
    rep = morse_via_theorem(p, box=True, oracle=False)
    bx = rep.box
    paths = dict(zip(("Gamma1", "Gamma2", "Gamma3", "Gamma4"), bx.paths))

    lag = max(pp.lagrangian_defect for pp in paths.values())
    yield "lagrangian defect <= 1e-9", lag <= 1e-9, f"{lag:.2e}"
    uni = max(pp.unitarity_defect for pp in paths.values())
    yield "unitarity defect <= 1e-8", uni <= 1e-8, f"{uni:.2e}"
    wind = max(pp.winding_mismatch for pp in paths.values())
    yield "det winding vs phases <= 1e-6", wind <= 1e-6, f"{wind:.2e}"
    mono = max(paths["Gamma1"].monotonicity_violation, paths["Gamma3"].monotonicity_violation)
    yield "lambda monotonicity <= 1e-9", mono <= 1e-9, f"{mono:.2e}"

    worst = -math.inf
    for lam in np.linspace(-bx.lambda_inf, 0.0, 9):
        for s in (max(0.01, rep.s0), 0.5, 1.0):
            fr = integrate_frame(p.left, p.potential, float(lam), s, p.settings.steps)
            worst = max(worst, float(herm_eig(omega_lambda(fr, p.target.factor))[-1]))
    yield "crossing form in lambda negative", worst < 0, f"max eigenvalue {worst:.2e}"

    yield "homotopy sum = 0", bx.total == 0, f"{bx.indices}"
    g3 = morse_via_gamma3(p, bx.lambda_inf)
    oc = oracle_count(p, 1.0, p.settings.mesh)
    try:
        oc2 = oracle_count(p, 1.0, 2 * p.settings.mesh)
    except MaslovError:
        oc2 = None
    yield "oracle mesh-stable", oc == oc2, f"N={p.settings.mesh}: {oc}, 2N: {oc2}"
    yield "theorem = gamma3 = oracle", rep.morH == g3 == oc, f"{rep.morH}, {g3}, {oc}"
    yield "correction nondegenerate", rep.nondegenerate, f"{rep.correctionEigenvalues}"
    if p.shelf.d > 0:
        rows = perturbation_errors(p)
        detail = ", ".join(f"s={r.s:g}: {r.worst:.3f}" for r in rows)
        yield "small-s asymptotics (15%, improving)", asymptotics_ok(rows), detail


def run_check(p: Problem, args, outputs: dict, out=None) -> int:
    out = out or sys.stdout
    results = list(_checks(p))
    width = max(len(r[0]) for r in results)
    lines = [f"{name.ljust(width)}  {'PASS' if ok else 'FAIL'}  {detail}" for name, ok, detail in results]
    text = "\n".join(lines) + "\n"
    out.write(text)
    if args.out or outputs.get("check"):
        atomic_write(_out_path(args, outputs, "check", "check.txt"), text)
    return EXIT_OK if all(r[1] for r in results) else EXIT_ERROR


COMMANDS = {"report": run_report, "curves": run_curves, "check": run_check}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        p, outputs = _problem(args)
        return COMMANDS[args.command](p, args, outputs)
    except MaslovError as e:
        sys.stderr.write(json.dumps(e.to_dict()) + "\n")
        return EXIT_ERROR
    except (OSError, ValueError) as e:
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
