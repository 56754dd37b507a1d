"""Cut-cell lattice over the domain clipped to the ambient ball B_R.

Nodes are lattice points i*h strictly inside the region; every interior node
carries, for each stencil line, two arms that either reach a neighboring
node or stop at a boundary foot found by analytic first-crossing queries
(Shortley-Weller differencing at the feet is exact on quadratics). Arm
tables are cached per direction count.
"""

from __future__ import annotations

import inspect

import numpy as np

from .errors import ConfigurationError, GridError, InputError
from .geometry import CircleArc, Domain, Parabola, PowerCurve

__all__ = ["Grid", "GridFunction", "ArmTable", "build_grid", "LINE_VECTORS"]

_BASE_LINES = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (-1, 2), (2, -1)]
_EXTRA_LINES = [(3, 1), (1, 3), (-1, 3), (3, -1), (3, 2), (2, 3), (-2, 3), (3, -2)]

LINE_VECTORS = {
    4: _BASE_LINES[:2],
    8: _BASE_LINES[:4],
    16: _BASE_LINES,
    32: _BASE_LINES + _EXTRA_LINES,
}


def lines_for(n_dirs: int):
    if n_dirs not in LINE_VECTORS:
        raise ConfigurationError(
            f"n_dirs must be one of {sorted(LINE_VECTORS)} (multiples of 4 with axes)"
        )
    return np.asarray(LINE_VECTORS[n_dirs], dtype=np.int64)


class ArmTable:
    """Per-line neighbor/arm data for every interior node.

    nb_plus/nb_minus: neighbor node id or -1 when the arm is cut.
    s_plus/s_minus: arm lengths (euclidean distances).
    cut_plus/cut_minus: -1 or row index into the feet arrays.
    """

    def __init__(self, vecs, nb_plus, nb_minus, s_plus, s_minus, cut_plus, cut_minus,
                 foot_xy, foot_piece):
        self.vecs = vecs
        self.nb_plus = nb_plus
        self.nb_minus = nb_minus
        self.s_plus = s_plus
        self.s_minus = s_minus
        self.cut_plus = cut_plus
        self.cut_minus = cut_minus
        self.foot_xy = foot_xy
        self.foot_piece = foot_piece
        self.n_lines = vecs.shape[0]
        # Shortley-Weller weights: w+ = 2/(s+(s+ + s-)), w- mirrored, w0 = w+ + w-.
        sp, sm = self.s_plus, self.s_minus
        self.w_plus = 2.0 / (sp * (sp + sm))
        self.w_minus = 2.0 / (sm * (sp + sm))
        self.w0 = self.w_plus + self.w_minus
        self.wpz = np.where(self.nb_plus >= 0, self.w_plus, 0.0)
        self.wmz = np.where(self.nb_minus >= 0, self.w_minus, 0.0)
        self.nbp_clip = np.maximum(self.nb_plus, 0)
        self.nbm_clip = np.maximum(self.nb_minus, 0)
        self.boundary_adjacent = np.any((self.cut_plus >= 0) | (self.cut_minus >= 0), axis=1)

    @property
    def n_feet(self) -> int:
        return self.foot_xy.shape[0]

    def unit_dirs(self) -> np.ndarray:
        v = self.vecs.astype(float)
        return v / np.hypot(v[:, 0], v[:, 1])[:, None]

    def bconst(self, foot_values: np.ndarray) -> np.ndarray:
        """Boundary contribution to each node/line second difference."""
        out = np.zeros_like(self.w0)
        maskp = self.cut_plus >= 0
        maskm = self.cut_minus >= 0
        out[maskp] += self.w_plus[maskp] * foot_values[self.cut_plus[maskp]]
        out[maskm] += self.w_minus[maskm] * foot_values[self.cut_minus[maskm]]
        return out


class Grid:
    """Interior nodes of the cut-cell lattice over domain ∩ B_R."""

    def __init__(self, domain: Domain, h: float, R: float, n_dirs: int = 16):
        if not h > 0:
            raise GridError("spacing h must be positive")
        if h > R / 8:
            raise GridError(f"spacing too coarse: need h <= R/8 (h={h}, R={R})")
        self.domain = domain
        self.h = float(h)
        self.R = float(R)
        n = int(round(self.R / self.h))
        idx = np.arange(-n, n + 1)
        ii, jj = np.meshgrid(idx, idx, indexing="ij")
        xy = np.stack([ii * self.h, jj * self.h], axis=-1)
        r2 = xy[..., 0] ** 2 + xy[..., 1] ** 2
        mask = domain.inside(xy) & (r2 < self.R ** 2)
        if not np.any(mask):
            raise GridError("grid has empty interior")
        self._n = n
        self.node_ij = np.stack([ii[mask], jj[mask]], axis=1).astype(np.int64)
        self.node_xy = xy[mask]
        self.n_nodes = self.node_xy.shape[0]
        self.id_grid = np.full(ii.shape, -1, dtype=np.int64)
        self.id_grid[mask] = np.arange(self.n_nodes)
        self.node_r = np.hypot(self.node_xy[:, 0], self.node_xy[:, 1])
        self.r_order = np.argsort(self.node_r, kind="stable")
        self.r_sorted = self.node_r[self.r_order]
        # boundary pieces; the ambient clipping circle is appended when the
        # domain sticks out of B_R
        self.pieces = list(domain.pieces())
        if domain.max_radius() > self.R - 1e-12:
            self.pieces.append(CircleArc((0.0, 0.0), self.R, name="clip"))
        self.piece_names = [p.name for p in self.pieces]
        self._arm_cache: dict[int, ArmTable] = {}
        self.arms(n_dirs)

    # -- arm construction ----------------------------------------------------

    def arms(self, n_dirs: int) -> ArmTable:
        if n_dirs in self._arm_cache:
            return self._arm_cache[n_dirs]
        vecs = lines_for(n_dirs)
        D = vecs.shape[0]
        N = self.n_nodes
        nb = np.full((2, N, D), -1, dtype=np.int64)
        ss = np.zeros((2, N, D))
        cut = np.full((2, N, D), -1, dtype=np.int64)
        feet_xy = []
        feet_piece = []
        nonconvex = [p for p in self.pieces if isinstance(p, (PowerCurve, Parabola))]
        piece_index = {id(p): k for k, p in enumerate(self.pieces)}
        n = self._n
        for side, sign in ((0, 1), (1, -1)):
            for d in range(D):
                v = sign * vecs[d]
                full_len = self.h * float(np.hypot(v[0], v[1]))
                tij = self.node_ij + v[None, :]
                ok = (np.abs(tij[:, 0]) <= n) & (np.abs(tij[:, 1]) <= n)
                nb_ids = np.full(N, -1, dtype=np.int64)
                nb_ids[ok] = self.id_grid[tij[ok, 0] + n, tij[ok, 1] + n]
                arm_vec = v.astype(float) * self.h
                Dfull = np.broadcast_to(arm_vec, (N, 2))
                # exterior-neighbor arms must cut; interior ones only if a
                # non-convex piece can separate them
                ext = nb_ids < 0
                t_cut = np.full(N, np.inf)
                p_cut = np.full(N, -1, dtype=np.int64)
                if np.any(ext):
                    t, p = _first_crossing(self.pieces, self.node_xy[ext], Dfull[ext])
                    miss = ~np.isfinite(t)
                    if np.any(miss):
                        t_fb, p_fb = self._bisect_fallback(
                            self.node_xy[ext][miss], Dfull[ext][miss]
                        )
                        t[miss] = t_fb
                        p[miss] = p_fb
                    t_cut[ext] = t
                    p_cut[ext] = p
                if nonconvex:
                    inn = ~ext
                    if np.any(inn):
                        sel = self._prefilter(self.node_xy[inn], arm_vec, nonconvex)
                        if np.any(sel):
                            rows = np.nonzero(inn)[0][sel]
                            t, p = _first_crossing(
                                nonconvex, self.node_xy[rows], Dfull[rows]
                            )
                            hit = np.isfinite(t) & (t <= 1.0)
                            gidx = np.array(
                                [piece_index[id(nonconvex[k])] if k >= 0 else -1 for k in p],
                                dtype=np.int64,
                            )
                            t_cut[rows[hit]] = t[hit]
                            p_cut[rows[hit]] = gidx[hit]
                cut_mask = np.isfinite(t_cut)
                nb_ids[cut_mask] = -1
                s = np.where(cut_mask, t_cut * full_len, full_len)
                # guard against degenerate arms from near-boundary nodes
                s = np.maximum(s, 1e-12 * full_len)
                feet = self.node_xy[cut_mask] + t_cut[cut_mask, None] * Dfull[cut_mask]
                base = len(feet_xy)
                cut_ids = np.full(N, -1, dtype=np.int64)
                cut_ids[cut_mask] = base + np.arange(feet.shape[0])
                feet_xy.extend(feet)
                feet_piece.extend(p_cut[cut_mask])
                nb[side, :, d] = nb_ids
                ss[side, :, d] = s
                cut[side, :, d] = cut_ids
        foot_xy = np.asarray(feet_xy, dtype=float).reshape(-1, 2)
        foot_piece = np.asarray(feet_piece, dtype=np.int64)
        table = ArmTable(
            vecs,
            nb[0], nb[1], ss[0], ss[1], cut[0], cut[1], foot_xy, foot_piece,
        )
        self._arm_cache[n_dirs] = table
        return table

    def _prefilter(self, P, arm_vec, pieces):
        """Coarse bounding test: which interior-interior arms could touch a
        non-convex piece."""
        x0, y0 = P[:, 0], P[:, 1]
        x1, y1 = x0 + arm_vec[0], y0 + arm_vec[1]
        ymin = np.minimum(y0, y1)
        ymax = np.maximum(y0, y1)
        xa = np.maximum(np.abs(x0), np.abs(x1))
        sel = np.zeros(P.shape[0], dtype=bool)
        for p in pieces:
            if isinstance(p, PowerCurve):
                env = p.K * xa ** p.e + 1e-12
                sel |= (ymin <= env) & (ymax >= -env)
            else:  # Parabola slit
                env = p.c * xa ** 2
                sel |= (ymin <= env + 1e-12) & (ymax >= -1e-12) & (
                    np.minimum(np.abs(x0), np.abs(x1)) <= p.x1_max + 1e-12
                )
        return sel

    def _bisect_fallback(self, P, D):
        """Locate the inside/outside transition when analytic crossings miss
        (tangency-degenerate arms). Assigns the geometrically nearest piece."""
        lo = np.zeros(P.shape[0])
        hi = np.ones(P.shape[0])
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            pts = P + mid[:, None] * D
            ins = self.domain.inside(pts) & (pts[:, 0] ** 2 + pts[:, 1] ** 2 < self.R ** 2)
            lo = np.where(ins, mid, lo)
            hi = np.where(ins, hi, mid)
        t = 0.5 * (lo + hi)
        feet = P + t[:, None] * D
        dists = np.stack([_piece_residual(p, feet) for p in self.pieces], axis=1)
        return t, np.argmin(dists, axis=1).astype(np.int64)

    # -- queries ---------------------------------------------------------------

    def nodes_within(self, r: float) -> np.ndarray:
        """Node ids with |x| <= r, in radius-ascending order."""
        k = int(np.searchsorted(self.r_sorted, r, side="right"))
        return self.r_order[:k]

    def cell_areas(self) -> np.ndarray:
        """Cut-cell area weights h^2 * fx * fy from the clipped axis arms."""
        a = self.arms(min(self._arm_cache) if self._arm_cache else 16)
        h = self.h
        fx = (np.minimum(a.s_plus[:, 0], h) + np.minimum(a.s_minus[:, 0], h)) / (2 * h)
        fy = (np.minimum(a.s_plus[:, 1], h) + np.minimum(a.s_minus[:, 1], h)) / (2 * h)
        return h * h * fx * fy

    def metadata(self) -> dict:
        table = self._arm_cache[min(self._arm_cache)]
        return {
            "h": self.h,
            "R": self.R,
            "counts": {
                "interior": int(self.n_nodes),
                "boundary_adjacent": int(np.sum(table.boundary_adjacent)),
                "feet": int(table.n_feet),
            },
        }


def _first_crossing(pieces, P, D):
    best_t = np.full(P.shape[0], np.inf)
    best_p = np.full(P.shape[0], -1, dtype=np.int64)
    for k, piece in enumerate(pieces):
        t = piece.first_crossing(P, D)
        better = t < best_t
        best_t = np.where(better, t, best_t)
        best_p = np.where(better, k, best_p)
    return best_t, best_p


def _piece_residual(piece, pts):
    """Cheap distance-like residual used only by the bisection fallback."""
    if isinstance(piece, CircleArc):
        return np.abs(
            np.hypot(pts[:, 0] - piece.center[0], pts[:, 1] - piece.center[1])
            - piece.radius
        )
    if isinstance(piece, PowerCurve):
        return np.abs(pts[:, 1] - piece.height(pts[:, 0]))
    if isinstance(piece, Parabola):
        far = pts[:, 0] ** 2 + pts[:, 1] ** 2 > piece.extent ** 2
        return np.abs(pts[:, 1] - piece.c * pts[:, 0] ** 2) + np.where(far, 1e6, 0.0)
    # segment
    a, b = piece.a, piece.b
    e = b - a
    L2 = float(e @ e)
    t = np.clip(((pts - a) @ e) / L2, 0.0, 1.0)
    proj = a + t[:, None] * e
    return np.hypot(pts[:, 0] - proj[:, 0], pts[:, 1] - proj[:, 1])


class GridFunction:
    """Values on the interior nodes, optionally with boundary foot values."""

    def __init__(self, grid: Grid, values, armtable: ArmTable = None, feet_values=None):
        self.grid = grid
        v = np.ascontiguousarray(values, dtype=float)
        if v.shape != (grid.n_nodes,):
            raise InputError(f"values shape {v.shape} != ({grid.n_nodes},)")
        self.values = v
        self.armtable = armtable
        self.feet_values = (
            None if feet_values is None
            else np.ascontiguousarray(feet_values, dtype=float)
        )

    @staticmethod
    def from_function(grid: Grid, fn, n_dirs: int = None) -> "GridFunction":
        vals = _eval_pointwise(fn, grid.node_xy, None)
        table = None
        feet = None
        if n_dirs is not None:
            table = grid.arms(n_dirs)
            names = [grid.piece_names[p] if p >= 0 else "" for p in table.foot_piece]
            feet = _eval_pointwise(fn, table.foot_xy, names)
        return GridFunction(grid, vals, table, feet)

    def copy_with(self, values=None, feet_values=None) -> "GridFunction":
        return GridFunction(
            self.grid,
            self.values if values is None else values,
            self.armtable,
            self.feet_values if feet_values is None else feet_values,
        )

    def sup_norm(self, r: float = None) -> float:
        if r is None:
            return float(np.max(np.abs(self.values))) if self.values.size else 0.0
        ids = self.grid.nodes_within(r)
        if ids.size == 0:
            raise InputError(f"no nodes inside B_{r}")
        return float(np.max(np.abs(self.values[ids])))

    def discrete_l2(self, r: float = None) -> float:
        """Cut-cell-area-weighted discrete L^2 norm over nodes in B_r."""
        areas = self.grid.cell_areas()
        if r is None:
            ids = slice(None)
        else:
            ids = self.grid.nodes_within(r)
        return float(np.sqrt(np.sum(areas[ids] * self.values[ids] ** 2)))

    def to_csv(self, path) -> None:
        xy = self.grid.node_xy
        with open(path, "w") as fh:
            fh.write("x1,x2,value\n")
            for (x, y), v in zip(xy, self.values):
                fh.write(f"{float(x)!r},{float(y)!r},{float(v)!r}\n")


def _eval_pointwise(fn, pts, piece_names):
    """Evaluate data callables; accepts fn(points) or fn(points, piece_names)."""
    if np.isscalar(fn):
        return np.full(pts.shape[0], float(fn))
    try:
        nparams = len(inspect.signature(fn).parameters)
    except (TypeError, ValueError):
        nparams = 1
    if nparams >= 2 and piece_names is not None:
        out = fn(pts, piece_names)
    else:
        out = fn(pts)
    out = np.ascontiguousarray(out, dtype=float)
    if out.shape != (pts.shape[0],):
        out = np.ascontiguousarray(np.broadcast_to(out, (pts.shape[0],)), dtype=float)
    return out


def build_grid(domain: Domain, h: float, R: float, n_dirs: int = 16) -> Grid:
    """Lattice over [-R, R]^2 clipped to the domain, with cut arms resolved."""
    return Grid(domain, h, R, n_dirs=n_dirs)
