"""Monotone wide-stencil discretization of F(D^2 u) on a cut-cell grid.

Each operator becomes a combination rule over directional second differences:

* trace: unit weights on the two axis lines;
* extremal (Pucci-type): max/min over orthogonal line pairs with slope
  Lam on positive parts and lam on negative (the discrete extremal values);
* Isaacs min-max: for every averaged control matrix C a nonnegative weight
  row with sum_e gamma_e (e_hat e_hat^T) = C, found in closed form by
  bracketing the deviator between adjacent direction lines; the node value
  is min_j max_k of the weighted sums;
* shifted: the base rule applied to scale*delta + profile(B), recentered.

Every rule is nonincreasing in neighboring values given the center, so the
scheme is monotone and obeys a discrete comparison principle.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ConfigurationError, InputError
from .grid import ArmTable, Grid, GridFunction, _eval_pointwise
from .operators import OperatorSpec

__all__ = ["DiscreteSystem", "discretize", "decompose_spd"]


def _frame_pairs(vecs: np.ndarray) -> np.ndarray:
    """Orthogonal line pairs (by index) in the direction set."""
    index = {}
    for k, v in enumerate(vecs):
        index[(int(v[0]), int(v[1]))] = k
        index[(-int(v[0]), -int(v[1]))] = k
    frames = []
    seen = set()
    for k, v in enumerate(vecs):
        perp = (-int(v[1]), int(v[0]))
        j = index.get(perp)
        if j is None or j == k:
            continue
        key = (min(k, j), max(k, j))
        if key not in seen:
            seen.add(key)
            frames.append(key)
    if not frames:
        raise ConfigurationError("direction set lacks orthogonal pairs")
    return np.asarray(frames, dtype=np.int64)


def decompose_spd(C: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Nonnegative weights gamma with sum_e gamma_e e_hat e_hat^T = C.

    Writes C = c*I + a*K + b*J and brackets the deviator direction between
    adjacent lines in the doubled-angle plane; the leftover isotropic part is
    spread over the axis frame. Raises ConfigurationError when C is too
    anisotropic for the direction set.
    """
    C = np.asarray(C, dtype=float)
    c = 0.5 * (C[0, 0] + C[1, 1])
    a = 0.5 * (C[0, 0] - C[1, 1])
    b = C[0, 1]
    D = vecs.shape[0]
    theta = np.arctan2(vecs[:, 1].astype(float), vecs[:, 0].astype(float))
    d2 = np.stack([np.cos(2 * theta), np.sin(2 * theta)], axis=1)
    gamma = np.zeros(D)
    w = 2.0 * np.array([a, b])
    rho = float(np.hypot(*w))
    used = 0.0
    if rho > 1e-15:
        psi = np.arctan2(w[1], w[0])
        ang = np.mod(2 * theta, 2 * np.pi)
        rel = np.mod(ang - psi, 2 * np.pi)
        i2 = int(np.argmin(rel))
        rel_neg = np.mod(psi - ang, 2 * np.pi)
        i1 = int(np.argmin(rel_neg))
        if i1 == i2:
            gamma[i1] = rho
            used = rho
        else:
            M = np.stack([d2[i1], d2[i2]], axis=1)
            try:
                s = np.linalg.solve(M, w)
            except np.linalg.LinAlgError:
                raise ConfigurationError(
                    "deviator bracketing failed (antipodal lines); increase n_dirs"
                ) from None
            if np.any(s < -1e-12) or np.any(np.abs(s) > 1e3 * max(1.0, rho)):
                raise ConfigurationError("deviator bracketing failed")
            s = np.maximum(s, 0.0)
            gamma[i1] += s[0]
            gamma[i2] += s[1]
            used = float(s[0] + s[1])
    rest = 2.0 * c - used
    if rest < -1e-10 * max(1.0, abs(c)):
        raise ConfigurationError(
            "matrix too anisotropic for this direction set; increase n_dirs"
        )
    rest = max(rest, 0.0)
    gamma[0] += 0.5 * rest
    gamma[1] += 0.5 * rest
    return gamma


class _Plan:
    kind = "abstract"

    def combine(self, delta):
        """Returns (value, gamma) for a (N, D) block of second differences."""
        raise NotImplementedError


class _LinearPlan(_Plan):
    kind = "linear"

    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=float)

    def combine(self, delta):
        return kernels.combine_linear(delta, self.weights)


class _PucciPlan(_Plan):
    kind = "pucci"

    def __init__(self, frames, lam, Lam, take_max):
        self.frames = frames
        self.lam = float(lam)
        self.Lam = float(Lam)
        self.take_max = bool(take_max)

    def combine(self, delta):
        return kernels.combine_pucci(delta, self.frames, self.lam, self.Lam, self.take_max)


class _IsaacsPlan(_Plan):
    kind = "isaacs"

    def __init__(self, W):
        self.W = W

    def combine(self, delta):
        return kernels.combine_isaacs(delta, self.W)


class _ShiftedPlan(_Plan):
    kind = "shifted"

    def __init__(self, inner, profile, scale):
        self.inner = inner
        self.profile = np.asarray(profile, dtype=float)
        self.scale = float(scale)
        base_val, _ = inner.combine(self.profile[None, :])
        self.offset = float(base_val[0])

    def combine(self, delta):
        val, gamma = self.inner.combine(self.scale * delta + self.profile)
        return (val - self.offset) / self.scale, gamma


def _plan_for(op: OperatorSpec, table: ArmTable) -> _Plan:
    vecs = table.vecs
    D = table.n_lines
    if op.kind == "laplace":
        w = np.zeros(D)
        w[0] = 1.0
        w[1] = 1.0
        return _LinearPlan(w)
    if op.kind in ("pucci_plus", "pucci_minus"):
        frames = _frame_pairs(vecs)
        return _PucciPlan(frames, op.lam, op.Lam, take_max=(op.kind == "pucci_plus"))
    if op.kind == "isaacs_minmax":
        nj, nk = len(op.isaacs_A), len(op.isaacs_B)
        W = np.zeros((nj, nk, D))
        for j, Aj in enumerate(op.isaacs_A):
            for k, Bk in enumerate(op.isaacs_B):
                W[j, k] = decompose_spd(0.5 * (Aj + Bk), vecs)
        return _IsaacsPlan(W)
    if op.kind == "shifted":
        inner = _plan_for(op.base, table)
        units = table.unit_dirs()
        profile = np.einsum("ei,ij,ej->e", units, op.shift_matrix, units)
        return _ShiftedPlan(inner, profile, op.shift_scale)
    raise ConfigurationError(f"no discretization for operator kind {op.kind!r}")


class DiscreteSystem:
    """An operator bound to a grid and a direction set."""

    def __init__(self, op: OperatorSpec, grid: Grid, n_dirs: int):
        self.op = op
        self.grid = grid
        self.n_dirs = int(n_dirs)
        self.table = grid.arms(self.n_dirs)
        self.plan = _plan_for(op, self.table)

    @property
    def is_linear(self) -> bool:
        return self.plan.kind == "linear"

    def foot_piece_names(self):
        return [
            self.grid.piece_names[p] if p >= 0 else "" for p in self.table.foot_piece
        ]

    def boundary_values(self, g) -> np.ndarray:
        """Evaluate Dirichlet data at every boundary foot."""
        return _eval_pointwise(g, self.table.foot_xy, self.foot_piece_names())

    def second_diffs(self, values: np.ndarray, foot_values: np.ndarray) -> np.ndarray:
        t = self.table
        bconst = t.bconst(foot_values)
        return kernels.second_diffs(
            values, t.nbp_clip, t.nbm_clip, t.wpz, t.wmz, t.w0, bconst
        )

    def apply(self, u: GridFunction) -> np.ndarray:
        """F_h[u] at every interior node (uses u's own foot values)."""
        if u.feet_values is None:
            raise InputError("grid function carries no boundary foot values")
        delta = self.second_diffs(u.values, u.feet_values)
        value, _ = self.plan.combine(delta)
        return value

    def residual_and_policy(self, values: np.ndarray, foot_values: np.ndarray):
        """(value, gamma, c0) with F_h = sum_e gamma_e * delta_e + c0 frozen."""
        delta = self.second_diffs(values, foot_values)
        value, gamma = self.plan.combine(delta)
        c0 = value - np.einsum("nd,nd->n", gamma, delta)
        return value, gamma, c0


def discretize(op: OperatorSpec, grid: Grid, n_dirs: int = 16) -> DiscreteSystem:
    """Bind an operator to a grid with an n_dirs-direction stencil."""
    if n_dirs < 4 or n_dirs % 4 != 0:
        raise ConfigurationError("n_dirs must be a multiple of 4, at least 4")
    return DiscreteSystem(op, grid, n_dirs)
