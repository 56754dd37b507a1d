"""Experiment configuration and reproducible execution.

A config is a versioned JSON document naming an operator, a domain, grid
parameters, Dirichlet/right-hand-side data, and an analysis. Running it
solves the problem, runs the dyadic analyzers, and writes

    trace.csv     per-scale coefficients / residuals / identity gaps,
    summary.json  slopes, extracted jets, fitted constants, r1,
    rates.svg     the log-log residual plot with the fitted line,

atomically (partial outputs are removed on error) and byte-stably: the same
config and build produce identical bytes.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile

import numpy as np

from .campanato import IterationConfig, campanato_c1a, campanato_c2a, rate_fit
from .errors import ConfigurationError, RegulabError
from .fitting import classify_boundary
from .geometry import make_domain, osc_boundary
from .grid import GridFunction, build_grid
from .manufactured import make_field, rhs_for
from .operators import catalog_operator
from .solver import solve
from .stencil import discretize
from .svgplot import loglog_svg

__all__ = ["ExperimentConfig", "run_experiment", "load_config"]

SCHEMA_VERSION = 1


class ExperimentConfig:
    """Validated experiment description (see module docstring for fields)."""

    def __init__(self, doc: dict):
        if not isinstance(doc, dict):
            raise ConfigurationError("config must be a JSON object")
        if doc.get("schema") != SCHEMA_VERSION:
            raise ConfigurationError(
                f"config schema must be {SCHEMA_VERSION}, got {doc.get('schema')!r}"
            )
        self.doc = doc
        self.name = str(doc.get("name", "experiment"))
        op = doc.get("operator", {})
        self.op_tag = op.get("tag", "laplace")
        self.lam = float(op.get("lam", 1.0))
        self.Lam = float(op.get("Lam", max(self.lam, 1.0)))
        dom = doc.get("domain", {})
        self.domain_kind = dom.get("kind", "half_ball")
        self.domain_params = list(dom.get("params", []))
        gr = doc.get("grid", {})
        self.h = float(gr.get("h", 1.0 / 64))
        self.R = float(gr.get("R", 1.0))
        self.n_dirs = int(gr.get("n_dirs", 16))
        it = doc.get("iteration", {})
        self.iteration = IterationConfig(
            eta=float(it.get("eta", 0.5)),
            alpha=float(it.get("alpha", 0.5)),
            k_max=int(it.get("k_max", 30)),
            r_floor=float(it.get("r_floor", 0.0)),
            r_start=float(it.get("r_start", 0.25)),
        )
        self.data = doc.get("data", {"g": {"kind": "zero"}, "f": {"kind": "zero"}})
        self.analysis = doc.get("analysis", "c1a")
        if self.analysis not in ("c1a", "c2a", "none"):
            raise ConfigurationError(f"unknown analysis {self.analysis!r}")
        self.seed = int(doc.get("seed", 0))
        self.solver_tol = float(doc.get("solver_tol", 1e-10))
        self.outputs = doc.get("outputs")

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigurationError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        return ExperimentConfig(doc)

    def build_operator(self):
        return catalog_operator(self.op_tag, self.lam, self.Lam)

    def build_domain(self):
        return make_domain(self.domain_kind, self.domain_params)

    def build_data(self, op):
        """(g callable, f callable-or-scalar, field-or-None) from the data spec."""
        gspec = self.data.get("g", {"kind": "zero"})
        fspec = self.data.get("f", {"kind": "zero"})
        field = None
        kind = gspec.get("kind", "zero")
        if kind == "zero":
            g = 0.0
        elif kind == "constant":
            g = float(gspec.get("value", 0.0))
        elif kind == "arc_modes":
            field = make_field("arc_modes", gspec.get("params", [[1.0]])[0])
            g = field
        elif kind == "field":
            field = make_field(gspec["field"], tuple(gspec.get("params", [])))
            g = field
        else:
            raise ConfigurationError(f"unknown g kind {kind!r}")
        fkind = fspec.get("kind", "zero")
        if fkind == "zero":
            f = 0.0
        elif fkind == "constant":
            f = float(fspec.get("value", 0.0))
        elif fkind == "power":
            f = make_field(
                "radial_power",
                (float(fspec.get("K", 1.0)), float(fspec.get("exponent", 0.5))),
            )
        elif fkind == "manufactured":
            if field is None or getattr(field, "hessian", None) is None:
                raise ConfigurationError(
                    "manufactured f needs a g of kind 'field' with a Hessian"
                )
            f = rhs_for(field, op)
        else:
            raise ConfigurationError(f"unknown f kind {fkind!r}")
        return g, f, field


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_trace_csv(path, rows):
    cols = ["k", "scale", "a", "b1n", "b2n", "residual", "constraint_residual",
            "rescale_gap"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Execute one experiment; returns the summary dict and writes outputs
    to out_dir (default: the config's outputs field, else out/<name>)."""
    out_dir = out_dir or cfg.outputs or os.path.join("out", cfg.name)
    tmp = tempfile.mkdtemp(prefix="regulab_", dir=os.path.dirname(out_dir) or ".")
    try:
        summary = _run_stages(cfg, tmp)
        os.makedirs(out_dir, exist_ok=True)
        for name in os.listdir(tmp):
            os.replace(os.path.join(tmp, name), os.path.join(out_dir, name))
        return summary
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def _stage(name):
    def deco(fn):
        def wrapped(*a, **kw):
            try:
                return fn(*a, **kw)
            except RegulabError as exc:
                raise type(exc)(f"[stage:{name}] {exc}") from exc

        return wrapped

    return deco


def _run_stages(cfg: ExperimentConfig, out_dir) -> dict:
    op = _stage("operator")(cfg.build_operator)()
    domain = _stage("domain")(cfg.build_domain)()
    grid = _stage("grid")(build_grid)(domain, cfg.h, cfg.R, n_dirs=cfg.n_dirs)
    system = _stage("discretize")(discretize)(op, grid, cfg.n_dirs)
    g, f, field = _stage("data")(cfg.build_data)(op)
    u = _stage("solve")(solve)(system, f, g, tol=cfg.solver_tol)

    summary = {
        "schema": SCHEMA_VERSION,
        "name": cfg.name,
        "operator": {"tag": cfg.op_tag, "lam": cfg.lam, "Lam": cfg.Lam},
        "domain": {"kind": cfg.domain_kind, "params": cfg.domain_params},
        "grid": grid.metadata(),
        "analysis": cfg.analysis,
        "seed": cfg.seed,
        "sup_u": u.sup_norm(),
    }
    if isinstance(f, float) and f == 0.0:
        summary["K_f_observed"] = 0.0
    else:
        fv = GridFunction.from_function(grid, f) if callable(f) else None
        if fv is not None:
            ratios = []
            for r in cfg.iteration.scales(grid.h):
                ratios.append(fv.discrete_l2(r) / r ** cfg.iteration.alpha)
            summary["K_f_observed"] = max(ratios) if ratios else 0.0

    rows = []
    if cfg.analysis == "c1a":
        trace, Du0 = _stage("analysis")(campanato_c1a)(u, domain, cfg.iteration)
        rep = rate_fit(trace.scales, trace.residuals)
        rows = trace.to_rows()
        summary.update(
            {
                "Du0": [float(Du0[0]), float(Du0[1])],
                "slope": rep.slope,
                "fitted_C": rep.fitted_C,
                "r2": rep.r2,
                "r1": rep.r1,
                "exact": rep.exact,
                "max_rescale_gap": max(trace.rescale_gaps) if trace.rescale_gaps else 0.0,
                "coefficient_diff_ratios": _diff_ratios(trace),
            }
        )
    elif cfg.analysis == "c2a":
        trace, D2m = _stage("analysis")(campanato_c2a)(u, domain, op, cfg.iteration)
        rep = rate_fit(trace.scales, trace.residuals)
        rows = trace.to_rows()
        summary.update(
            {
                "D2u0_mixed": [float(D2m[0]), float(D2m[1])],
                "slope": rep.slope,
                "fitted_C": rep.fitted_C,
                "r2": rep.r2,
                "r1": rep.r1,
                "exact": rep.exact,
                "max_constraint_residual": max(trace.constraint_residuals),
                "flags": trace.flags,
                "coefficient_diff_ratios": _diff_ratios(trace),
            }
        )
    if cfg.analysis != "none":
        _write_trace_csv(os.path.join(out_dir, "trace.csv"), rows)
        loglog_svg(
            os.path.join(out_dir, "rates.svg"),
            [r["scale"] for r in rows],
            [r["residual"] for r in rows],
            fit_slope=summary.get("slope"),
            fit_intercept=np.log(summary["fitted_C"]) if summary.get("fitted_C", 0) > 0 else None,
            title=cfg.name,
        )
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    u.to_csv(os.path.join(out_dir, "field.csv"))
    return summary


def _diff_ratios(trace):
    d = trace.coefficient_diffs()
    d = d[d > 1e-13]
    if d.size < 2:
        return []
    return [float(r) for r in d[1:] / d[:-1]]


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_file(path)


def classify_to_dict(domain_kind, params, k, alpha, samples=4096, radius=2e-4) -> dict:
    """Boundary chart of a catalog domain as a JSON-ready record."""
    domain = make_domain(domain_kind, params)
    chart = classify_boundary(domain, k, alpha, samples=samples, radius=radius)
    out = chart.to_dict()
    out["domain"] = {"kind": domain_kind, "params": list(params)}
    out["osc_at_quarter"] = osc_boundary(domain, 0.25)
    return out
