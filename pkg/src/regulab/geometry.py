"""Analytic planar test domains with the origin on the boundary.

Catalog kinds (harness tags):

``half_ball``   {|x| < 1, x2 > 0}; flat boundary through the origin.
``ball``        B((0,1), 1); smooth boundary tangent to the x1-axis at 0.
``graph_bump``  {|x| < 1, x2 > K * sign(x1) * |x1|^e}; a signed power bump,
                pointwise C^{1,e-1} at 0 with seminorm exactly K.
``slit_ball``   B((0,1), 1) minus the parabola arc {x2 = c*x1^2, |x| <= 1/2}.
                With the default c = 1/2 the parabola osculates the circle
                from outside, so the removed arc meets the closed ball only
                at the origin; larger c pushes the slit inside the ball and
                produces genuine two-sided cut arms.

Each domain exposes a vectorized inside() predicate and a list of analytic
boundary pieces; pieces answer first-crossing queries for straight arms
(used by the cut-cell grid builder) and support dense window sampling (used
by oscillation measurement and boundary classification).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, InputError

__all__ = ["Domain", "make_domain", "osc_boundary", "BoundaryPiece"]

_T_EPS = 1e-12  # crossings below this parameter are the segment start itself


class BoundaryPiece:
    """Analytic curve t -> point(t) on [t0, t1] with crossing queries."""

    name = "piece"
    two_sided = False

    def param_range(self):
        raise NotImplementedError

    def point(self, t):
        raise NotImplementedError

    def first_crossing(self, P, D):
        """Smallest t in (0, 1] where P + t*D meets the piece; inf if none.

        P, D: (M, 2) arrays of segment starts and full arm vectors.
        """
        raise NotImplementedError

    def param_of_origin(self):
        """Parameter value mapping to the origin, or None."""
        return None

    def noise_at(self, pts):
        """Absolute floating-point noise of the x2 coordinate at the sampled
        points (cancellation floor of the parametrization)."""
        return np.zeros(np.atleast_2d(pts).shape[0])


class Segment(BoundaryPiece):
    def __init__(self, a, b, name="segment"):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.name = name

    def param_range(self):
        return 0.0, 1.0

    def point(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        return self.a + t * (self.b - self.a)

    def param_of_origin(self):
        d = self.b - self.a
        L2 = d @ d
        t = -(self.a @ d) / L2
        if 0.0 <= t <= 1.0 and np.hypot(*(self.a + t * d)) < 1e-13:
            return float(t)
        return None

    def first_crossing(self, P, D):
        # segment-segment: solve P + t*D = a + s*(b-a)
        e = self.b - self.a
        denom = D[:, 0] * (-e[1]) - D[:, 1] * (-e[0])
        rhs = self.a - P
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (rhs[:, 0] * (-e[1]) - rhs[:, 1] * (-e[0])) / denom
            s = (D[:, 0] * rhs[:, 1] - D[:, 1] * rhs[:, 0]) / denom
        ok = (np.abs(denom) > 1e-300) & (t > _T_EPS) & (t <= 1.0) & (s >= 0.0) & (s <= 1.0)
        return np.where(ok, t, np.inf)


class CircleArc(BoundaryPiece):
    def __init__(self, center, radius, ang0=-np.pi, ang1=np.pi, name="circle"):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.ang0 = float(ang0)
        self.ang1 = float(ang1)
        self.name = name

    def param_range(self):
        return self.ang0, self.ang1

    def point(self, t):
        t = np.asarray(t, dtype=float)
        pts = np.stack([np.cos(t), np.sin(t)], axis=-1) * self.radius
        return pts + self.center

    def param_of_origin(self):
        v = -self.center
        if abs(np.hypot(*v) - self.radius) > 1e-13:
            return None
        ang = float(np.arctan2(v[1], v[0]))
        for cand in (ang, ang + 2 * np.pi, ang - 2 * np.pi):
            if self.ang0 - 1e-12 <= cand <= self.ang1 + 1e-12:
                return cand
        return None

    def _in_range(self, ang):
        two_pi = 2 * np.pi
        width = self.ang1 - self.ang0
        rel = np.mod(ang - self.ang0, two_pi)
        return rel <= width + 1e-12

    def noise_at(self, pts):
        # center_y + r*sin(t) cancels near the origin: absolute eps scale
        scale = abs(self.center[1]) + self.radius + 1.0
        return np.full(np.atleast_2d(pts).shape[0], np.finfo(float).eps * scale)

    def first_crossing(self, P, D):
        q = P - self.center
        a = np.einsum("ij,ij->i", D, D)
        b = 2.0 * np.einsum("ij,ij->i", q, D)
        c = np.einsum("ij,ij->i", q, q) - self.radius ** 2
        disc = b * b - 4.0 * a * c
        out = np.full(P.shape[0], np.inf)
        ok = (disc >= 0.0) & (a > 0.0)
        if not np.any(ok):
            return out
        sq = np.sqrt(np.where(ok, disc, 0.0))
        for sign in (-1.0, 1.0):
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (-b + sign * sq) / (2.0 * a)
                pts = P + t[:, None] * D
            ang = np.arctan2(pts[:, 1] - self.center[1], pts[:, 0] - self.center[0])
            valid = ok & (t > _T_EPS) & (t <= 1.0) & self._in_range(ang)
            out = np.where(valid & (t < out), t, out)
        return out


class PowerCurve(BoundaryPiece):
    """Graph x2 = K * sign(x1) * |x1|^e over x1 in [x_lo, x_hi]."""

    def __init__(self, K, e, x_lo, x_hi, name="curve"):
        self.K = float(K)
        self.e = float(e)
        self.x_lo = float(x_lo)
        self.x_hi = float(x_hi)
        self.name = name

    def height(self, x1):
        return self.K * np.sign(x1) * np.abs(x1) ** self.e

    def param_range(self):
        return self.x_lo, self.x_hi

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([t, self.height(t)], axis=-1)

    def param_of_origin(self):
        return 0.0 if self.x_lo <= 0.0 <= self.x_hi else None

    def noise_at(self, pts):
        pts = np.atleast_2d(pts)
        return 4.0 * np.finfo(float).eps * np.abs(pts[:, 1])

    def first_crossing(self, P, D):
        # phi(t) = y(t) - height(x(t)); bracket a sign change on 9 samples,
        # then vectorized bisection. Arms are short, the curve is a graph, so
        # phi oscillates at most once per sample interval at grid scales.
        M = P.shape[0]
        ts = np.linspace(0.0, 1.0, 9)
        X = P[:, 0, None] + np.outer(D[:, 0], ts)
        Y = P[:, 1, None] + np.outer(D[:, 1], ts)
        phi = Y - self.height(X)
        sign = np.sign(phi)
        sign[sign == 0.0] = 1.0
        flips = sign[:, :-1] * sign[:, 1:] < 0.0
        out = np.full(M, np.inf)
        rows, cols = np.nonzero(flips)
        if rows.size == 0:
            return out
        first = np.full(M, -1)
        # first flip per row
        for r, c in zip(rows[::-1], cols[::-1]):
            first[r] = c
        act = np.nonzero(first >= 0)[0]
        lo = ts[first[act]]
        hi = ts[first[act] + 1]
        Pa, Da = P[act], D[act]

        def phi_at(t):
            x = Pa[:, 0] + t * Da[:, 0]
            y = Pa[:, 1] + t * Da[:, 1]
            return y - self.height(x)

        flo = phi_at(lo)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = phi_at(mid)
            take_lo = (flo * fm) > 0.0
            lo = np.where(take_lo, mid, lo)
            flo = np.where(take_lo, fm, flo)
            hi = np.where(take_lo, hi, mid)
        t_star = 0.5 * (lo + hi)
        x_star = Pa[:, 0] + t_star * Da[:, 0]
        valid = (t_star > _T_EPS) & (x_star >= self.x_lo - 1e-12) & (x_star <= self.x_hi + 1e-12)
        out[act[valid]] = t_star[valid]
        return out


class Parabola(BoundaryPiece):
    """Arc x2 = c * x1^2 restricted to |x| <= extent (a two-sided slit)."""

    two_sided = True

    def __init__(self, c, extent=0.5, name="slit"):
        self.c = float(c)
        self.extent = float(extent)
        # |x1| range from x1^2 + c^2 x1^4 = extent^2
        cc = self.c ** 2
        if cc == 0.0:
            self.x1_max = self.extent
        else:
            self.x1_max = float(np.sqrt((np.sqrt(1.0 + 4.0 * cc * self.extent ** 2) - 1.0) / (2.0 * cc)))
        self.name = name

    def param_range(self):
        return -self.x1_max, self.x1_max

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([t, self.c * t * t], axis=-1)

    def param_of_origin(self):
        return 0.0

    def noise_at(self, pts):
        pts = np.atleast_2d(pts)
        return 4.0 * np.finfo(float).eps * np.abs(pts[:, 1])

    def first_crossing(self, P, D):
        # c*(x(t))^2 - y(t) = 0 is a quadratic in t
        a = self.c * D[:, 0] ** 2
        b = 2.0 * self.c * P[:, 0] * D[:, 0] - D[:, 1]
        c0 = self.c * P[:, 0] ** 2 - P[:, 1]
        out = np.full(P.shape[0], np.inf)
        lin = np.abs(a) < 1e-300
        with np.errstate(divide="ignore", invalid="ignore"):
            t_lin = -c0 / b
        disc = b * b - 4.0 * a * c0
        okq = (~lin) & (disc >= 0.0)
        sq = np.sqrt(np.where(okq, disc, 0.0))
        for root in ("lin", -1.0, 1.0):
            if root == "lin":
                t = np.where(lin & (np.abs(b) > 1e-300), t_lin, np.inf)
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    t = np.where(okq, (-b + root * sq) / (2.0 * a), np.inf)
            with np.errstate(invalid="ignore"):
                pts = P + t[:, None] * D
                r2 = np.einsum("ij,ij->i", pts, pts)
            valid = (t > _T_EPS) & (t <= 1.0) & (r2 <= self.extent ** 2 + 1e-12)
            out = np.where(valid & (t < out), t, out)
        return out


class Domain:
    """Bounded planar region with 0 on its boundary (catalog kinds)."""

    kind = "abstract"

    def __init__(self, params=()):
        self.params = tuple(float(p) for p in params)

    def inside(self, x):
        """Vectorized predicate; x is (..., 2)."""
        raise NotImplementedError

    def pieces(self) -> list[BoundaryPiece]:
        raise NotImplementedError

    def max_radius(self) -> float:
        """sup |x| over the closure (used to size ambient boxes)."""
        raise NotImplementedError

    def to_dict(self):
        return {"kind": self.kind, "params": list(self.params)}

    # -- boundary sampling ---------------------------------------------------

    def sample_boundary(self, radius: float, per_piece: int = 4096,
                        with_noise: bool = False):
        """Boundary points inside B_radius, densely covering each piece.

        Linear parameter spacing inside the window plus a fixed geometric
        tail toward the origin, so enlarging per_piece yields supersets.
        With with_noise=True also returns the per-point x2 evaluation noise
        floor of the generating piece.
        """
        chunks = []
        noises = []
        for piece in self.pieces():
            win = _window_params(piece, radius)
            if win is None:
                continue
            lo, hi = win
            ts = np.linspace(lo, hi, per_piece)
            t0 = piece.param_of_origin()
            if t0 is not None and lo - 1e-12 <= t0 <= hi + 1e-12:
                tail = []
                for edge in (lo, hi):
                    if abs(edge - t0) > 1e-15:
                        tail.append(t0 + (edge - t0) * 10.0 ** (-np.arange(1, 65) / 8.0))
                if tail:
                    ts = np.concatenate([ts] + tail)
            pts = piece.point(ts)
            keep = np.hypot(pts[:, 0], pts[:, 1]) <= radius * (1.0 + 1e-12)
            chunks.append(pts[keep])
            noises.append(piece.noise_at(pts[keep]))
        if not chunks:
            raise InputError(f"no boundary points inside B_{radius}")
        out = np.concatenate(chunks, axis=0)
        if out.shape[0] == 0:
            raise InputError(f"no boundary points inside B_{radius}")
        if with_noise:
            return out, np.concatenate(noises)
        return out

def _window_params(piece, radius):
    """Parameter sub-interval of the piece lying inside B_radius (the one
    containing the origin parameter when the piece passes through 0)."""
    lo, hi = piece.param_range()
    ts = np.linspace(lo, hi, 4097)
    r = np.hypot(*piece.point(ts).T)
    inside = r <= radius
    if not np.any(inside):
        return None
    t0 = piece.param_of_origin()
    if t0 is None:
        idx = np.nonzero(inside)[0]
        a, b = ts[idx[0]], ts[idx[-1]]
    else:
        i0 = int(np.clip(np.searchsorted(ts, t0), 0, ts.size - 1))
        if not inside[i0]:
            i0 = int(np.nonzero(inside)[0][np.argmin(np.abs(np.nonzero(inside)[0] - i0))])
        i_lo = i0
        while i_lo > 0 and inside[i_lo - 1]:
            i_lo -= 1
        i_hi = i0
        while i_hi < ts.size - 1 and inside[i_hi + 1]:
            i_hi += 1
        a, b = ts[i_lo], ts[i_hi]
    # refine both window edges by bisection on |p(t)| = radius
    a = _refine_edge(piece, a, ts, radius, side="lo")
    b = _refine_edge(piece, b, ts, radius, side="hi")
    return a, b


def _refine_edge(piece, t_in, ts, radius, side):
    step = ts[1] - ts[0]
    t_out = t_in - step if side == "lo" else t_in + step
    lo_t, hi_t = (t_out, t_in) if side == "lo" else (t_in, t_out)
    lo_t = max(lo_t, ts[0])
    hi_t = min(hi_t, ts[-1])

    def rad(t):
        p = piece.point(t)
        return np.hypot(p[0], p[1]) - radius

    f_in = rad(t_in)
    f_out = rad(t_out) if ts[0] <= t_out <= ts[-1] else None
    if f_out is None or f_in * f_out > 0:
        return t_in
    a, b = (t_out, t_in) if side == "lo" else (t_in, t_out)
    fa = rad(a)
    for _ in range(80):
        m = 0.5 * (a + b)
        fm = rad(m)
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


class HalfBall(Domain):
    kind = "half_ball"

    def __init__(self, params=()):
        super().__init__(params)
        self._pieces = [
            Segment((-1.0, 0.0), (1.0, 0.0), name="flat"),
            CircleArc((0.0, 0.0), 1.0, 0.0, np.pi, name="arc"),
        ]

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        return (x[..., 0] ** 2 + x[..., 1] ** 2 < 1.0) & (x[..., 1] > 0.0)

    def pieces(self):
        return self._pieces

    def max_radius(self):
        return 1.0


class Ball(Domain):
    """Unit ball tangent to the x1-axis at the origin."""

    kind = "ball"

    def __init__(self, params=()):
        super().__init__(params)
        self._pieces = [CircleArc((0.0, 1.0), 1.0, name="circle")]

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] ** 2 + (x[..., 1] - 1.0) ** 2 < 1.0

    def pieces(self):
        return self._pieces

    def max_radius(self):
        return 2.0


class GraphBump(Domain):
    """Region above a signed power bump, inside a circle of radius rho
    (default 1): {|x| < rho, x2 > K*sign(x1)*|x1|^e}. With rho > 1 only the
    bump curve meets B_1, which is the geometry the localization experiment
    needs (the boundary oscillation inside B_1 is the curve's alone)."""

    kind = "graph_bump"

    def __init__(self, params):
        if len(params) not in (2, 3):
            raise ConfigurationError("graph_bump needs params [K, exponent[, rho]]")
        K, e = params[0], params[1]
        rho = params[2] if len(params) == 3 else 1.0
        if K < 0:
            raise ConfigurationError("graph_bump amplitude K must be >= 0")
        if not e > 1:
            raise ConfigurationError("graph_bump exponent must exceed 1")
        if not rho > 0:
            raise ConfigurationError("graph_bump outer radius must be positive")
        super().__init__((K, e, rho) if len(params) == 3 else (K, e))
        self.K = float(K)
        self.e = float(e)
        self.rho = float(rho)
        # junction with the outer circle: x1^2 + K^2 |x1|^{2e} = rho^2
        xj = self.rho
        for _ in range(200):
            xj = xj - (xj ** 2 + self.K ** 2 * xj ** (2 * self.e) - self.rho ** 2) / (
                2 * xj + 2 * self.e * self.K ** 2 * xj ** (2 * self.e - 1)
            )
        self.x_junction = float(xj)
        curve = PowerCurve(self.K, self.e, -self.x_junction, self.x_junction, name="bump")
        yj = self.K * self.x_junction ** self.e
        a0 = float(np.arctan2(yj, self.x_junction))
        a1 = float(np.arctan2(-yj, -self.x_junction)) + 2 * np.pi
        self._pieces = [curve, CircleArc((0.0, 0.0), self.rho, a0, a1, name="arc")]

    def height(self, x1):
        return self.K * np.sign(x1) * np.abs(x1) ** self.e

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        return (x[..., 0] ** 2 + x[..., 1] ** 2 < self.rho ** 2) & (
            x[..., 1] > self.height(x[..., 0])
        )

    def pieces(self):
        return self._pieces

    def max_radius(self):
        return self.rho


class SlitBall(Domain):
    kind = "slit_ball"

    def __init__(self, params=()):
        if len(params) not in (0, 1):
            raise ConfigurationError("slit_ball takes at most one parameter [c]")
        c = params[0] if params else 0.5
        if c < 0:
            raise ConfigurationError("slit curvature c must be >= 0")
        super().__init__((c,))
        self.c = float(c)
        self._slit = Parabola(self.c, extent=0.5, name="slit")
        self._pieces = [CircleArc((0.0, 1.0), 1.0, name="circle"), self._slit]

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        in_ball = x[..., 0] ** 2 + (x[..., 1] - 1.0) ** 2 < 1.0
        on_slit = (
            (np.abs(x[..., 1] - self.c * x[..., 0] ** 2) < 1e-12)
            & (x[..., 0] ** 2 + x[..., 1] ** 2 <= 0.25)
        )
        return in_ball & ~on_slit

    def pieces(self):
        return self._pieces

    def max_radius(self):
        return 2.0


class BarrierHalfBall(Domain):
    """Upper unit half-ball shifted down by delta (not a catalog kind: the
    origin is interior). Used by the barrier experiment."""

    kind = "barrier_half_ball"

    def __init__(self, params):
        (delta,) = params
        if not 0.0 < delta < 0.25:
            raise ConfigurationError("barrier shift must lie in (0, 1/4)")
        super().__init__(params)
        self.delta = float(delta)
        d = self.delta
        self._pieces = [
            Segment((-1.0, -d), (1.0, -d), name="flat"),
            CircleArc((0.0, -d), 1.0, 0.0, np.pi, name="cap"),
        ]

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        return (x[..., 0] ** 2 + (x[..., 1] + self.delta) ** 2 < 1.0) & (
            x[..., 1] > -self.delta
        )

    def pieces(self):
        return self._pieces

    def max_radius(self):
        return float(np.hypot(1.0, self.delta))


_CATALOG = {
    "half_ball": HalfBall,
    "ball": Ball,
    "graph_bump": GraphBump,
    "slit_ball": SlitBall,
}


def make_domain(kind: str, params=()) -> Domain:
    """Build a catalog domain from its tag and parameter list."""
    if kind not in _CATALOG:
        raise ConfigurationError(f"unknown domain kind {kind!r}; known: {sorted(_CATALOG)}")
    cls = _CATALOG[kind]
    if cls in (HalfBall, Ball):
        if params:
            raise ConfigurationError(f"{kind} takes no parameters")
        return cls()
    return cls(params)


def osc_boundary(domain: Domain, r: float) -> float:
    """sup minus inf of x2 over the boundary inside B_r.

    Dense per-piece sampling with window-edge refinement and a golden-section
    polish around each extreme; accurate to well below 1e-6 on the catalog.
    """
    if not 0.0 < r <= 1.0:
        raise InputError("radius must lie in (0, 1]")
    hi = -np.inf
    lo = np.inf
    found = False
    for piece in domain.pieces():
        win = _window_params(piece, r)
        if win is None:
            continue
        a, b = win
        ts = np.linspace(a, b, 8193)
        pts = piece.point(ts)
        keep = np.hypot(pts[:, 0], pts[:, 1]) <= r * (1.0 + 1e-12)
        if not np.any(keep):
            continue
        found = True
        y = np.where(keep, pts[:, 1], np.nan)
        i_hi = int(np.nanargmax(y))
        i_lo = int(np.nanargmin(y))
        for idx, want_max in ((i_hi, True), (i_lo, False)):
            ta = ts[max(idx - 1, 0)]
            tb = ts[min(idx + 1, ts.size - 1)]
            t_best = _golden(lambda t: piece.point(t)[1], ta, tb, want_max)
            p = piece.point(t_best)
            if np.hypot(p[0], p[1]) <= r * (1.0 + 1e-12):
                if want_max:
                    hi = max(hi, float(p[1]))
                else:
                    lo = min(lo, float(p[1]))
        hi = max(hi, float(np.nanmax(y)))
        lo = min(lo, float(np.nanmin(y)))
    if not found:
        raise InputError(f"no boundary points inside B_{r}")
    return float(hi - lo)


def _golden(f, a, b, want_max):
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    sgn = -1.0 if want_max else 1.0
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = sgn * f(c), sgn * f(d)
    for _ in range(120):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = sgn * f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = sgn * f(d)
    return 0.5 * (a + b)
