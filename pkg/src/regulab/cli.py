"""Command line front end.

Subcommands: solve, classify, rates, barrier, suite, selftest.
Exit codes: 0 success, 1 numerical failure, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import ConfigurationError, GridError, InputError, RegulabError
from .harness import ExperimentConfig, classify_to_dict, run_experiment

USAGE_ERRORS = (ConfigurationError, InputError, GridError)


def _cmd_solve(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    cfg.analysis = "none"
    out = args.out or cfg.outputs or f"out/{cfg.name}"
    summary = run_experiment(cfg, out)
    print(json.dumps({"name": cfg.name, "sup_u": summary["sup_u"], "out": out}))
    return 0


def _cmd_rates(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    out = args.out or cfg.outputs or f"out/{cfg.name}"
    summary = run_experiment(cfg, out)
    line = {
        "name": cfg.name,
        "slope": summary.get("slope"),
        "fitted_C": summary.get("fitted_C"),
        "r1": summary.get("r1"),
        "out": out,
    }
    print(json.dumps(line))
    return 0


def _cmd_classify(args) -> int:
    params = [float(p) for p in args.params.split(",")] if args.params else []
    rec = classify_to_dict(
        args.domain, params, args.k, args.alpha,
        samples=args.samples, radius=args.radius,
    )
    text = json.dumps(rec, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_barrier(args) -> int:
    from .solver import solve_barrier

    deltas = [float(d) for d in args.deltas.split(",")]
    rows = []
    for delta in deltas:
        v = solve_barrier(delta, delta / args.h_factor, lam=args.lam, Lam=args.Lam)
        ids = (v.grid.node_r <= 4 * delta) & (v.grid.node_xy[:, 1] > 0)
        sup = float(np.max(np.abs(v.values[ids])))
        rows.append(
            {
                "delta": delta,
                "min_v": float(v.values.min()),
                "max_v": float(v.values.max()),
                "sup_B4delta": sup,
                "C": sup / delta,
            }
        )
    out = {"rows": rows}
    if len(rows) > 1:
        cs = [r["C"] for r in rows]
        out["C_spread"] = max(cs) / min(cs)
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_suite(args) -> int:
    import os

    from .acceptance import run_all, workers_from_env

    report = run_all(workers=args.workers if args.workers is not None
                     else workers_from_env())
    # wall times go to the console; the report file stays byte-stable
    times = {r["id"]: r.pop("seconds", None) for r in report["criteria"]}
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "suite_report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=_np_default)
        fh.write("\n")
    for r in report["criteria"]:
        t = times.get(r["id"])
        suffix = f" ({t:.1f}s)" if t is not None else ""
        print(f"[{'PASS' if r['passed'] else 'FAIL'}] {r['id']}: {r['name']}{suffix}")
    print(f"report: {path}")
    return 0 if report["all_passed"] else 1


def _np_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(str(type(o)))


def _cmd_selftest(args) -> int:
    from .acceptance import run_criterion

    quick = ["1_operator_algebra", "10_fit_oracle"]
    ok = True
    for cid in quick:
        r = run_criterion(cid)
        ok &= r["passed"]
        print(f"[{'PASS' if r['passed'] else 'FAIL'}] {cid}")
    # scheme spot check on a coarse grid
    from .geometry import make_domain
    from .grid import build_grid
    from .manufactured import make_field
    from .operators import catalog_operator
    from .solver import solve
    from .stencil import discretize

    grid = build_grid(make_domain("half_ball"), 1 / 16, 1.0)
    system = discretize(catalog_operator("laplace"), grid, 16)
    aff = make_field("affine", (0.1, -0.2, 0.5))
    u = solve(system, 0.0, aff, tol=1e-10)
    err = float(np.max(np.abs(u.values - aff(grid.node_xy))))
    ok &= err <= 1e-9
    print(f"[{'PASS' if err <= 1e-9 else 'FAIL'}] coarse affine reproduction ({err:.1e})")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="regulab",
        description="Numerical laboratory for boundary pointwise regularity "
        "of fully nonlinear elliptic equations (2D)",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="one Dirichlet solve, field CSV output")
    ps.add_argument("--config", required=True)
    ps.add_argument("--out")
    ps.set_defaults(fn=_cmd_solve)

    pc = sub.add_parser("classify", help="boundary chart of a catalog domain")
    pc.add_argument("--domain", required=True)
    pc.add_argument("--params", default="")
    pc.add_argument("--k", type=int, required=True)
    pc.add_argument("--alpha", type=float, required=True)
    pc.add_argument("--samples", type=int, default=4096)
    pc.add_argument("--radius", type=float, default=2e-4)
    pc.add_argument("--out")
    pc.set_defaults(fn=_cmd_classify)

    pr = sub.add_parser("rates", help="full dyadic trace analysis for one config")
    pr.add_argument("--config", required=True)
    pr.add_argument("--out")
    pr.set_defaults(fn=_cmd_rates)

    pb = sub.add_parser("barrier", help="barrier experiment sweep over delta")
    pb.add_argument("--deltas", default="0.125,0.0625,0.03125")
    pb.add_argument("--h-factor", type=float, default=8.0)
    pb.add_argument("--lam", type=float, default=1.0)
    pb.add_argument("--Lam", type=float, default=2.0)
    pb.set_defaults(fn=_cmd_barrier)

    pu = sub.add_parser("suite", help="the acceptance battery")
    pu.add_argument("--out", default="out/suite")
    pu.add_argument("--workers", type=int, default=None,
                    help="process count (default: REGULAB_THREADS, 0 = serial)")
    pu.set_defaults(fn=_cmd_suite)

    pt = sub.add_parser("selftest", help="fast property checks")
    pt.set_defaults(fn=_cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RegulabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


cli = main


if __name__ == "__main__":
    sys.exit(main())
