"""Normalization chain for quadratic-jet extraction, and the boundary
localization experiment.

The chain reduces a general problem F(D^2 u) = f, u = g to one with
vanishing data at the origin:

1. absorb f(0) into the operator;
2. subtract the boundary-data jet g(0) + Dg(0).x + x^T c2 x and shift the
   operator by the subtracted Hessian;
3. subtract the normal-derivative profile a*(x2 - A*x1^2) along the chart;
4. add t*x2^2 with the recession constant t chosen so the final operator
   vanishes at zero; ellipticity bounds |t| by |F3(0)|/lambda.

Each step w = u - Q pairs with F_new(M) = F_old(M + D^2 Q), so
F_new(D^2 w) = F_old(D^2 u) holds identically along the chain.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .fitting import BoundaryChart, PolyJet
from .grid import GridFunction
from .operators import (
    DELTA_NN,
    OperatorSpec,
    shifted_operator,
    solve_recession_constant,
)

__all__ = ["normalize_problem", "localization_experiment"]


def _poly_values(pts, c0, c1, c2):
    return c0 + pts @ c1 + np.einsum("ni,ij,nj->n", pts, c2, pts)


def normalize_problem(
    u: GridFunction,
    g_jet: PolyJet,
    f0: float,
    op: OperatorSpec,
    chart: BoundaryChart,
    Du0_normal: float,
    recession_tol: float = 1e-12,
    bound_radius: float = 0.25,
):
    """Apply the four-step normalization chain.

    Du0_normal is the normal derivative of u - g_jet at the origin, estimated
    by a previous linear-trace pass. Returns (u3, op4, info) where op4 is the
    final operator with op4(0) = 0 exactly, and info records t, the
    ellipticity bound |F3(0)|/lambda, and the verified boundary-decay
    coefficient sup |g3| / |x|^(2+alpha) over the feet near the origin.
    """
    A = chart.A
    a = float(Du0_normal)
    # accumulated Hessian shift: D^2(g_jet) + D^2(a*(x2 - A*x1^2))
    B3 = 2.0 * g_jet.c2 + np.array([[-2.0 * a * A, 0.0], [0.0, 0.0]])
    F3_at_0 = op(B3) - f0
    # recession: find tau with F3(tau * delta_nn) = 0, i.e. F(B3 + tau*dnn) = f0
    tau = solve_recession_constant(op, B3, tol=recession_tol, target=f0)
    t = -0.5 * tau
    t_bound = abs(F3_at_0) / op.lam
    if abs(t) > t_bound + max(recession_tol, 1e-10):
        raise InputError(
            f"recession constant violates the ellipticity bound: |t|={abs(t):.3e} "
            f"> |F3(0)|/lam={t_bound:.3e}"
        )
    B4 = B3 - 2.0 * t * DELTA_NN
    op4 = shifted_operator(op, B4, 1.0)

    # u3 = u - g_jet - a*(x2 - A*x1^2) + t*x2^2 on nodes and feet
    def transform(pts, vals):
        out = vals - _poly_values(pts, g_jet.c0, g_jet.c1, g_jet.c2)
        out = out - a * (pts[:, 1] - A * pts[:, 0] ** 2)
        return out + t * pts[:, 1] ** 2

    values3 = transform(u.grid.node_xy, u.values)
    feet3 = None
    g3_bound = 0.0
    if u.feet_values is not None and u.armtable is not None:
        feet3 = transform(u.armtable.foot_xy, u.feet_values)
        fx = u.armtable.foot_xy
        r = np.hypot(fx[:, 0], fx[:, 1])
        near = (r > 2.0 * u.grid.h) & (r <= bound_radius)
        if np.any(near):
            g3_bound = float(
                np.max(np.abs(feet3[near]) / r[near] ** (2.0 + chart.alpha))
            )
    u3 = GridFunction(u.grid, values3, u.armtable, feet3)
    info = {
        "t": float(t),
        "t_bound": float(t_bound),
        "F3_at_0": float(F3_at_0),
        "op4_at_0": float(op4(np.zeros((2, 2)))),
        "g3_bound": g3_bound,
    }
    return u3, op4, info


def localization_experiment(
    op: OperatorSpec,
    domain,
    delta: float,
    h: float,
    n_dirs: int = 16,
    tol: float = 1e-10,
):
    """Smallness of u near a flat-ish boundary piece under small data.

    Solves F_h[u] = 0 on domain ∩ B_1 with |u| <= 1 enforced by unit data on
    the clipping sphere and |g| <= delta on the true boundary, then measures
    sup |u| over the nodes in B_delta. The hypothesis osc(boundary) <= delta
    is the caller's responsibility (checked here).
    """
    from .geometry import osc_boundary
    from .solver import solve
    from .stencil import discretize

    if not 0.0 < delta < 0.5:
        raise InputError("delta must lie in (0, 1/2)")
    if h > delta / 4:
        raise InputError("need h <= delta/4 to resolve B_delta")
    osc = osc_boundary(domain, 1.0)
    if osc > delta * (1.0 + 1e-9):
        raise InputError(f"boundary oscillation {osc:.3e} exceeds delta={delta:.3e}")
    from .grid import build_grid

    grid = build_grid(domain, h, 1.0, n_dirs=n_dirs)
    system = discretize(op, grid, n_dirs)

    def g(points, pieces):
        return np.where(np.asarray(pieces) == "clip", 1.0, delta)

    u = solve(system, 0.0, g, tol=tol)
    sup_near = u.sup_norm(delta)
    return {
        "delta": float(delta),
        "osc": float(osc),
        "sup_u_on_Omega_delta": float(sup_near),
        "fitted_C": float(sup_near / delta),
        "sup_u": float(u.sup_norm()),
    }
