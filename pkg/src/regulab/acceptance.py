"""The acceptance battery: every gate criterion as a standalone check.

Each criterion function returns a dict with at least ``passed`` (bool) and
``details``; ``run_all`` executes the battery (optionally in parallel over
processes, capped by REGULAB_THREADS) and assembles the suite report. The
pytest module tests/test_acceptance.py asserts every criterion at the same
tolerances, so the CLI suite and the test suite are the same gate.
"""

from __future__ import annotations

import os

import numpy as np

from .campanato import IterationConfig, campanato_c1a, campanato_c2a, rate_fit
from .errors import RegulabError
from .fitting import BoundaryChart, PolyJet, classify_boundary, pointwise_fit
from .geometry import make_domain
from .grid import GridFunction, build_grid
from .manufactured import make_field, rhs_for
from .normalize import localization_experiment, normalize_problem
from .operators import (
    catalog_operator,
    check_uniform_ellipticity,
    pucci_minus,
    pucci_plus,
    solve_recession_constant,
)
from .solver import comparison_check, solve, solve_barrier
from .stencil import discretize

__all__ = ["CRITERIA", "run_criterion", "run_all"]


def _sym(rng, scale=1.0):
    m = rng.normal(size=3) * scale
    return np.array([[m[0], m[2]], [m[2], m[1]]])


def criterion_operator_algebra():
    """Extremal-operator identities on 1000 random matrices + catalog
    ellipticity."""
    rng = np.random.default_rng(101)
    lam, Lam = 1.0, 2.0
    tol = 1e-12
    worst = 0.0
    for _ in range(1000):
        M = _sym(rng, scale=float(rng.choice([0.1, 1.0, 10.0])))
        N = _sym(rng)
        t = float(rng.uniform(0.0, 3.0))
        mp, mm = pucci_plus(M, lam, Lam), pucci_minus(M, lam, Lam)
        checks = [
            mm - mp,                                           # M- <= M+
            abs(pucci_plus(-M, lam, Lam) + mm),                 # M+(-M) = -M-(M)
            abs(pucci_plus(t * M, lam, Lam) - t * mp),          # homogeneity
            pucci_plus(M + N, lam, Lam) - (mp + pucci_plus(N, lam, Lam)),
            (pucci_minus(M, lam, Lam) + pucci_minus(N, lam, Lam))
            - pucci_minus(M + N, lam, Lam),
            abs(pucci_plus(M, 1.0, 1.0) - np.trace(M)),
            abs(pucci_minus(M, 1.0, 1.0) - np.trace(M)),
        ]
        scale = 1.0 + abs(mp) + abs(mm)
        worst = max(worst, max(c / scale for c in checks))
    ell = {}
    zero_vals = {}
    for tag in ("laplace", "pucci+", "pucci-", "isaacs"):
        op = catalog_operator(tag, lam, Lam)
        rep = check_uniform_ellipticity(op, trials=1000, seed=7)
        ell[tag] = rep.passed
        zero_vals[tag] = abs(op(np.zeros((2, 2))))
    passed = worst <= tol and all(ell.values()) and max(zero_vals.values()) <= 1e-12
    return {
        "passed": bool(passed),
        "details": {
            "worst_identity_gap": worst,
            "ellipticity": ell,
            "F_at_zero": zero_vals,
        },
    }


def criterion_scheme_exactness():
    """Affine data reproduced to 1e-9 on the catalog domains; the harmonic
    quadratic x1^2 - x2^2 to 1e-8 on the half ball."""
    affine = make_field("affine", (0.3, 0.7, -0.4))
    errs = {}
    for kind, params in (
        ("half_ball", []),
        ("graph_bump", [0.3, 1.5]),
        ("slit_ball", []),
    ):
        dom = make_domain(kind, params)
        grid = build_grid(dom, 1 / 64, 1.0)
        for tag in ("laplace", "pucci+"):
            system = discretize(catalog_operator(tag, 1.0, 2.0), grid, 16)
            u = solve(system, 0.0, affine, tol=1e-10)
            errs[f"affine/{kind}/{tag}"] = float(
                np.max(np.abs(u.values - affine(grid.node_xy)))
            )
    dom = make_domain("half_ball")
    grid = build_grid(dom, 1 / 64, 1.0)
    system = discretize(catalog_operator("laplace"), grid, 16)
    hq = make_field("quadratic", (1.0, 0.0, -1.0))  # x1^2 - x2^2
    u = solve(system, 0.0, hq, tol=1e-10)
    errs["harmonic_quadratic/half_ball"] = float(
        np.max(np.abs(u.values - hq(grid.node_xy)))
    )
    aff_ok = all(v <= 1e-9 for k, v in errs.items() if k.startswith("affine"))
    quad_ok = errs["harmonic_quadratic/half_ball"] <= 1e-8
    return {"passed": bool(aff_ok and quad_ok), "details": errs}


def criterion_discrete_comparison():
    """100 randomized monotone instances with a designed super-solution gap:
    zero comparison violations at 1e-10."""
    rng = np.random.default_rng(2024)
    violations = 0
    checked = 0
    domains = [("half_ball", []), ("graph_bump", [0.2, 1.5]), ("slit_ball", [])]
    tags = ["laplace", "pucci+", "pucci-", "isaacs"]
    for trial in range(100):
        kind, params = domains[int(rng.integers(0, len(domains)))]
        tag = tags[int(rng.integers(0, len(tags)))]
        dom = make_domain(kind, params)
        grid = build_grid(dom, 1 / 32, 1.0)
        system = discretize(catalog_operator(tag, 1.0, 2.0), grid, 16)
        coeffs = rng.uniform(-1.0, 1.0, size=3)
        g = make_field("arc_modes", coeffs)
        u = solve(system, 0.0, g, tol=1e-9)
        c = float(rng.uniform(0.5, 2.0))

        def bump_vals(p):
            return c * (1.0 - p[:, 0] ** 2 - p[:, 1] ** 2) / 4.0

        v = GridFunction(
            grid,
            u.values + bump_vals(grid.node_xy),
            u.armtable,
            u.feet_values + bump_vals(u.armtable.foot_xy),
        )
        checked += 1
        if not comparison_check(system, u, v, tol=1e-10):
            violations += 1
    return {
        "passed": violations == 0,
        "details": {"instances": checked, "violations": violations},
    }


def _flat_experiment(h):
    dom = make_domain("half_ball")
    grid = build_grid(dom, h, 1.0)
    system = discretize(catalog_operator("laplace"), grid, 16)
    g = make_field("arc_modes", [1.0, 0.3, 0.15])
    u = solve(system, 0.0, g, tol=1e-10)
    return dom, grid, system, g, u


def criterion_c1a_flat():
    """Flat boundary: linear-trace slope >= 1.45 at alpha = 0.5 on a 256^2
    grid, with a geometric coefficient Cauchy ratio <= eta^0.5 * 1.1."""
    h = 1 / 128
    dom, grid, system, g, u = _flat_experiment(h)
    cfg = IterationConfig(eta=0.5, alpha=0.5, r_start=0.25)
    trace, Du0 = campanato_c1a(u, dom, cfg)
    rep = rate_fit(trace.scales, trace.residuals)
    diffs = trace.coefficient_diffs()
    diffs = diffs[diffs > 1e-13]
    ratios = diffs[1:] / diffs[:-1] if diffs.size >= 2 else np.zeros(0)
    ratio_cap = 0.5 ** 0.5 * 1.1
    passed = (
        rep.slope >= 1.45
        and (ratios.size == 0 or float(np.max(ratios)) <= ratio_cap)
    )
    return {
        "passed": bool(passed),
        "details": {
            "slope": rep.slope,
            "Du0": [float(Du0[0]), float(Du0[1])],
            "diff_ratios": [float(r) for r in ratios],
            "ratio_cap": ratio_cap,
            "residuals": trace.residuals,
            "scales": trace.scales,
            "max_rescale_gap": max(trace.rescale_gaps),
        },
    }


def criterion_c1a_bump():
    """Curved C^{1,1/2} boundary: slope >= 1.4 and gradient estimate stable
    to 1e-3 under grid refinement.

    The fit window starts at 1/8: the scale 1/4 is visibly pre-asymptotic
    (pairwise slopes climb 1.33 -> 1.41 -> 1.47 -> 1.50 toward the boundary
    rate), which is the finite largest-trusted-radius effect the rate
    reports expose as r1."""
    dom = make_domain("graph_bump", [0.3, 1.5])
    results = {}
    cfg = IterationConfig(eta=0.5, alpha=0.5, r_start=0.125, r_floor=4 / 128)
    for h in (1 / 128, 1 / 256):
        grid = build_grid(dom, h, 1.0)
        system = discretize(catalog_operator("laplace"), grid, 16)
        g = make_field("arc_modes", [1.0, 0.3])
        u = solve(system, 0.0, g, tol=1e-10)
        trace, Du0 = campanato_c1a(u, dom, cfg)
        rep = rate_fit(trace.scales, trace.residuals)
        results[h] = {"slope": rep.slope, "a": float(Du0[1]),
                      "gaps": max(trace.rescale_gaps)}
    slope_ok = results[1 / 128]["slope"] >= 1.5 - 0.1
    drift = abs(results[1 / 128]["a"] - results[1 / 256]["a"])
    return {
        "passed": bool(slope_ok and drift <= 1e-3),
        "details": {
            "slope_coarse": results[1 / 128]["slope"],
            "slope_fine": results[1 / 256]["slope"],
            "a_coarse": results[1 / 128]["a"],
            "a_fine": results[1 / 256]["a"],
            "Du0_drift": drift,
        },
    }


def criterion_c2a_isaacs():
    """Non-convex operator: manufactured mixed jet recovered within 1e-2,
    operator constraint below 1e-8 at every scale, quadratic slope >= 2.1."""
    op = catalog_operator("isaacs", 1.0, 2.0)
    b1n_true = 3.0
    tstar = solve_recession_constant(op, np.array([[0.0, b1n_true], [b1n_true, 0.0]]),
                                     tol=1e-13)
    b2n_true = 0.5 * tstar
    field = make_field("c2a_jet", (b1n_true, b2n_true, 0.05))
    f = rhs_for(field, op)
    dom = make_domain("half_ball")
    grid = build_grid(dom, 1 / 128, 1.0)
    system = discretize(op, grid, 16)
    u = solve(system, f, field, tol=1e-10)
    cfg = IterationConfig(eta=0.5, alpha=0.25, r_start=0.25)
    trace, D2m = campanato_c2a(u, dom, op, cfg)
    rep = rate_fit(trace.scales, trace.residuals)
    b1n_last = 2.0 * trace.coeffs[-1].c2[0, 1]
    max_constraint = max(trace.constraint_residuals)
    passed = (
        abs(b1n_last - b1n_true) <= 1e-2
        and max_constraint <= 1e-8
        and rep.slope >= 2.0 + 0.25 - 0.15
    )
    return {
        "passed": bool(passed),
        "details": {
            "b1n": float(b1n_last),
            "b1n_true": b1n_true,
            "b2n": float(trace.coeffs[-1].c2[1, 1]),
            "b2n_true": b2n_true,
            "max_constraint_residual": max_constraint,
            "slope": rep.slope,
            "nodal_error": float(np.max(np.abs(u.values - field(grid.node_xy)))),
        },
    }


def criterion_slit_domain():
    """The tangent-slit ball: quadratic chart recovered exactly and the
    quadratic residual slope >= 2.05 for a compatible harmonic solve."""
    dom = make_domain("slit_ball")
    chart = classify_boundary(dom, 2, 0.5)
    chart_ok = abs(chart.A - 0.5) <= 1e-6 and chart.K <= 1e-6
    field = make_field("mixed_power", (2.0, 1.0, 2.5))
    grid = build_grid(dom, 1 / 256, 1.0)
    system = discretize(catalog_operator("laplace"), grid, 16)
    u = solve(system, 0.0, field, tol=1e-10)
    cfg = IterationConfig(eta=0.5, alpha=0.25, r_start=0.25)
    trace, D2m = campanato_c2a(u, dom, catalog_operator("laplace"), cfg)
    rep = rate_fit(trace.scales, trace.residuals)
    passed = chart_ok and rep.slope >= 2.0 + 0.25 - 0.2
    return {
        "passed": bool(passed),
        "details": {
            "chart_A": float(chart.A),
            "chart_K": float(chart.K),
            "slope": rep.slope,
            "b1n": float(2.0 * trace.coeffs[-1].c2[0, 1]),
            "scales": trace.scales,
            "residuals": trace.residuals,
        },
    }


def criterion_localization():
    """Boundary localization: sup |u| over B_delta stays proportional to
    delta, and the barrier solve obeys its bounds, across three dyadic
    delta."""
    lap = catalog_operator("laplace")
    ratios = []
    for delta in (1 / 8, 1 / 16, 1 / 32):
        dom = make_domain("graph_bump", [0.45 * delta, 1.5, 2.0])
        rep = localization_experiment(lap, dom, delta, 1 / 128)
        ratios.append(rep["fitted_C"])
    loc_spread = max(ratios) / min(ratios)
    barrier_cs = []
    barrier_bounds_ok = True
    for delta in (1 / 8, 1 / 16, 1 / 32):
        v = solve_barrier(delta, delta / 8)
        barrier_bounds_ok &= bool(
            v.values.min() >= -1e-10 and v.values.max() <= 1.0 + 1e-10
        )
        ids = (v.grid.node_r <= 4 * delta) & (v.grid.node_xy[:, 1] > 0)
        barrier_cs.append(float(np.max(np.abs(v.values[ids]))) / delta)
    bar_spread = max(barrier_cs) / min(barrier_cs)
    passed = loc_spread <= 2.0 and bar_spread <= 2.0 and barrier_bounds_ok
    return {
        "passed": bool(passed),
        "details": {
            "localization_C": ratios,
            "localization_spread": loc_spread,
            "barrier_C": barrier_cs,
            "barrier_spread": bar_spread,
            "barrier_bounds_ok": barrier_bounds_ok,
        },
    }


def criterion_normalization():
    """50 randomized jets/operators through the normalization chain: final
    operator vanishes at 0 to 1e-10, the recession constant obeys its
    ellipticity bound, and the post-normalization gradient estimate is below
    1e-3."""
    rng = np.random.default_rng(99)
    dom = make_domain("half_ball")
    grid = build_grid(dom, 1 / 256, 1.0)
    cfg = IterationConfig(eta=0.5, alpha=0.5, r_start=0.25)
    tags = ["laplace", "pucci+", "pucci-", "isaacs"]
    worst_op4 = 0.0
    worst_bound_slack = -np.inf
    worst_du = 0.0
    n = 50
    for _ in range(n):
        tag = tags[int(rng.integers(0, len(tags)))]
        lam = float(rng.uniform(1.0, 2.0))
        Lam = lam + float(rng.uniform(0.0, 0.5))
        op = catalog_operator(tag, lam, Lam)
        c2 = _sym(rng, scale=0.003)
        jet = PolyJet(
            degree=2,
            c0=float(rng.uniform(-0.1, 0.1)),
            c1=rng.uniform(-0.2, 0.2, size=2),
            c2=c2,
        )
        A = float(rng.uniform(-0.2, 0.2))
        chart = BoundaryChart(
            rotation=np.eye(2),
            P=PolyJet(degree=2, c2=np.array([[A, 0.0], [0.0, 0.0]])),
            K=0.0,
            k=2,
            alpha=0.25,
        )
        a = float(rng.uniform(-0.02, 0.02))
        f0 = float(rng.uniform(-0.005, 0.005))
        ct = float(rng.uniform(-0.02, 0.02))

        def u_vals(p):
            r = np.hypot(p[:, 0], p[:, 1])
            tail = ct * r ** 2.25
            return (
                jet(p)
                + a * (p[:, 1] - A * p[:, 0] ** 2)
                + tail
            )

        u = GridFunction.from_function(grid, u_vals, n_dirs=16)
        # first pass: estimate the normal derivative of u - g_jet
        u1 = GridFunction(
            grid,
            u.values - jet(grid.node_xy),
            u.armtable,
            u.feet_values - jet(u.armtable.foot_xy),
        )
        _, Du0_est = campanato_c1a(u1, dom, cfg)
        u3, op4, info = normalize_problem(u, jet, f0, op, chart, float(Du0_est[1]))
        _, Du0_final = campanato_c1a(u3, dom, cfg)
        worst_op4 = max(worst_op4, abs(info["op4_at_0"]))
        worst_bound_slack = max(
            worst_bound_slack, abs(info["t"]) - info["t_bound"] - 1e-10
        )
        worst_du = max(worst_du, abs(float(Du0_final[1])))
    passed = worst_op4 <= 1e-10 and worst_bound_slack <= 0.0 and worst_du <= 1e-3
    return {
        "passed": bool(passed),
        "details": {
            "instances": n,
            "worst_op4_at_0": worst_op4,
            "worst_t_bound_slack": worst_bound_slack,
            "worst_Du0_estimate": worst_du,
        },
    }


def _brute_force_fit(pts, vals, x0, k, alpha):
    """Independent exact oracle: exhaustive vertex enumeration.

    The weighted minimax fit is a linear program in (theta, K); its optimum
    sits at a vertex where m+1 of the 2S constraints are active. Enumerating
    every (m+1)-subset, solving the square system, and keeping the best
    feasible candidate is a finite brute force independent of the simplex
    and of the envelope fit machinery.
    """
    from itertools import combinations

    d = pts - x0
    dist = np.hypot(d[:, 0], d[:, 1])
    at0 = dist <= 1e-14
    c0 = float(vals[np.argmax(at0)])
    dd = d[~at0]
    ff = vals[~at0] - c0
    w = dist[~at0] ** (k + alpha)
    if k == 0:
        return np.array([]), float(np.max(np.abs(ff) / w)), c0
    cols = [dd[:, 0], dd[:, 1]]
    if k == 2:
        cols += [dd[:, 0] ** 2, dd[:, 0] * dd[:, 1], dd[:, 1] ** 2]
    Phi = np.stack(cols, axis=1)
    m = Phi.shape[1]
    S = Phi.shape[0]
    # signed constraint rows: sgn*(Phi theta - f) <= K w
    A = np.vstack([np.hstack([Phi, -w[:, None]]), np.hstack([-Phi, -w[:, None]])])
    b = np.concatenate([ff, -ff])
    best_K = np.inf
    best_theta = None
    for idx in combinations(range(2 * S), m + 1):
        Asub = A[list(idx)]
        bsub = b[list(idx)]
        try:
            x = np.linalg.solve(Asub, bsub)
        except np.linalg.LinAlgError:
            continue
        K = x[-1]
        if K < -1e-12 or not np.all(np.isfinite(x)):
            continue
        slack = A @ x - b
        if np.max(slack) <= 1e-9 * (1.0 + abs(K)) and K < best_K:
            best_K = K
            best_theta = x[:-1]
    if best_theta is None:
        raise RegulabError("vertex enumeration found no feasible vertex")
    return best_theta, float(best_K), c0


def criterion_fit_oracle():
    """pointwise_fit agrees with the brute-force coefficient-grid oracle on
    20 small instances within 1e-4 in both K and coefficients."""
    rng = np.random.default_rng(7)
    worst_K = 0.0
    worst_coef = 0.0
    for trial in range(20):
        k = [0, 1, 1, 2][trial % 4]
        n = int(rng.integers(5, 10))
        pts = rng.uniform(-1, 1, size=(n - 1, 2))
        pts = np.vstack([[0.0, 0.0], pts])
        vals = rng.normal(size=n)
        alpha = float(rng.uniform(0.2, 0.8))
        if k == 2 and n < 7:
            n = 9
            pts = np.vstack([[0.0, 0.0], rng.uniform(-1, 1, size=(8, 2))])
            vals = rng.normal(size=9)
        fit = pointwise_fit(list(zip(pts, vals)), (0.0, 0.0), k, alpha)
        theta_o, K_o, c0_o = _brute_force_fit(pts, vals, np.zeros(2), k, alpha)
        worst_K = max(worst_K, abs(fit.K - K_o))
        if k >= 1:
            got = np.concatenate(
                [fit.P0.c1, [fit.P0.c2[0, 0], 2 * fit.P0.c2[0, 1], fit.P0.c2[1, 1]]]
            )[: theta_o.size]
            worst_coef = max(worst_coef, float(np.max(np.abs(got - theta_o))))
    passed = worst_K <= 1e-4 and worst_coef <= 1e-4
    return {
        "passed": bool(passed),
        "details": {"worst_K_gap": worst_K, "worst_coeff_gap": worst_coef},
    }


def criterion_scaling_equivariance():
    """The zoom identity holds to 1e-9 along every trace, and tripling the
    data triples solution and coefficients to 1e-9."""
    h = 1 / 128
    dom, grid, system, g, u = _flat_experiment(h)
    cfg = IterationConfig(eta=0.5, alpha=0.5, r_start=0.25)
    trace, _ = campanato_c1a(u, dom, cfg)
    gap_flat = max(trace.rescale_gaps)

    g3 = make_field("arc_modes", [3.0, 0.9, 0.45])
    u3 = solve(system, 0.0, g3, tol=1e-10)
    nodal = float(np.max(np.abs(u3.values / 3.0 - u.values)))
    trace3, _ = campanato_c1a(u3, dom, cfg)
    coef_gap = max(
        abs(P3.c1[1] - 3.0 * P.c1[1]) for P3, P in zip(trace3.coeffs, trace.coeffs)
    )

    # bump experiment identity gap
    domb = make_domain("graph_bump", [0.3, 1.5])
    gridb = build_grid(domb, 1 / 128, 1.0)
    sysb = discretize(catalog_operator("laplace"), gridb, 16)
    ub = solve(sysb, 0.0, make_field("arc_modes", [1.0, 0.3]), tol=1e-10)
    traceb, _ = campanato_c1a(ub, domb, cfg)
    gap_bump = max(traceb.rescale_gaps)

    passed = gap_flat <= 1e-9 and gap_bump <= 1e-9 and nodal <= 1e-9 and coef_gap <= 1e-9
    return {
        "passed": bool(passed),
        "details": {
            "rescale_gap_flat": gap_flat,
            "rescale_gap_bump": gap_bump,
            "nodal_scaling_gap": nodal,
            "coefficient_scaling_gap": coef_gap,
        },
    }


CRITERIA = [
    ("1_operator_algebra", "Extremal operator identities and ellipticity",
     criterion_operator_algebra),
    ("2_scheme_exactness", "Cut-cell scheme exactness on affine/quadratic data",
     criterion_scheme_exactness),
    ("3_discrete_comparison", "Discrete comparison principle (randomized)",
     criterion_discrete_comparison),
    ("4_c1a_flat", "Linear trace decay on the flat boundary",
     criterion_c1a_flat),
    ("5_c1a_bump", "Linear trace decay on the C^{1,1/2} bump boundary",
     criterion_c1a_bump),
    ("6_c2a_isaacs", "Quadratic jet recovery under the non-convex operator",
     criterion_c2a_isaacs),
    ("7_slit_domain", "Tangent-slit ball chart and quadratic decay",
     criterion_slit_domain),
    ("8_localization", "Boundary localization and barrier bounds",
     criterion_localization),
    ("9_normalization", "Normalization chain invariants (50 randomized)",
     criterion_normalization),
    ("10_fit_oracle", "Minimax fit vs brute-force oracle",
     criterion_fit_oracle),
    ("11_scaling_equivariance", "Zoom identity and data-scaling equivariance",
     criterion_scaling_equivariance),
]

_BY_ID = {cid: fn for cid, _, fn in CRITERIA}


def run_criterion(cid: str) -> dict:
    import time

    name = next(n for c, n, _ in CRITERIA if c == cid)
    t0 = time.perf_counter()
    try:
        out = _BY_ID[cid]()
    except RegulabError as exc:
        out = {"passed": False, "details": {"error": str(exc)}}
    out["id"] = cid
    out["name"] = name
    out["seconds"] = round(time.perf_counter() - t0, 2)
    return out


def run_all(workers: int = 0) -> dict:
    """Run the full battery; workers > 1 uses a process pool (results are
    merged in fixed criterion order either way)."""
    ids = [cid for cid, _, _ in CRITERIA]
    if workers and workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_criterion, ids))
    else:
        results = [run_criterion(cid) for cid in ids]
    return {
        "criteria": results,
        "all_passed": all(r["passed"] for r in results),
    }


def workers_from_env() -> int:
    try:
        return int(os.environ.get("REGULAB_THREADS", "0"))
    except ValueError:
        return 0
