"""Pointwise polynomial fits in the sup norm.

Two solvers live here:

* ``min_of_max_of_lines`` — the exact one-parameter Chebyshev primitive: the
  minimizer of an upper envelope of lines, found by a convex-hull sweep. This
  is the engine behind the dyadic coefficient fits and the boundary
  classifier, and it is exact up to floating point (no iteration).
* ``_simplex`` — a small dense two-phase simplex used by ``pointwise_fit``
  for the general weighted minimax fit with up to six unknowns. Instances are
  tiny, so a dense tableau with Bland's rule is plenty.

The fit convention follows the pointwise Holder seminorm: minimize K subject
to |f(x_i) - P(x_i)| <= K |x_i - x0|^(k+alpha), with P pinned at x0. K is
minimized first; among near-minimizers the coefficient size is minimized
(L1 tie-break), and the reported seminorm is the achieved K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError, UnderDeterminedError
from .operators import eig2

__all__ = [
    "PolyJet",
    "FitResult",
    "BoundaryChart",
    "min_of_max_of_lines",
    "line_minimax",
    "pointwise_fit",
    "classify_boundary",
]


@dataclass(frozen=True, eq=False)
class PolyJet:
    """Polynomial of degree <= 2: P(x) = c0 + c1.x + x^T c2 x.

    Stored in coordinates centered at the fit point. The coefficient norm is
    |c0| + |c1|_2 + ||c2||_spec, matching the jet-size convention used by the
    boundary charts.
    """

    degree: int
    c0: float = 0.0
    c1: np.ndarray = None
    c2: np.ndarray = None

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise InputError("PolyJet degree must be 0, 1 or 2")
        c1 = np.zeros(2) if self.c1 is None else np.asarray(self.c1, dtype=float)
        c2 = np.zeros((2, 2)) if self.c2 is None else np.asarray(self.c2, dtype=float)
        if c1.shape != (2,) or c2.shape != (2, 2):
            raise InputError("PolyJet coefficient shapes must be (2,) and (2,2)")
        c2 = 0.5 * (c2 + c2.T)
        if self.degree < 2 and np.any(c2 != 0.0):
            raise InputError("degree < 2 jet cannot carry quadratic terms")
        if self.degree < 1 and np.any(c1 != 0.0):
            raise InputError("degree 0 jet cannot carry linear terms")
        if not (np.isfinite(self.c0) and np.all(np.isfinite(c1)) and np.all(np.isfinite(c2))):
            raise InputError("jet coefficients must be finite")
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        pts = np.atleast_2d(x)
        vals = self.c0 + pts @ self.c1 + np.einsum("ij,jk,ik->i", pts, self.c2, pts)
        return float(vals[0]) if x.ndim == 1 else vals

    def norm(self) -> float:
        lo, hi = eig2(self.c2)
        return float(abs(self.c0) + np.hypot(*self.c1) + max(abs(lo), abs(hi)))

    def gradient_at_zero(self) -> np.ndarray:
        return self.c1.copy()

    def hessian(self) -> np.ndarray:
        return 2.0 * self.c2

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "c0": self.c0,
            "c1": list(map(float, self.c1)),
            "c2": [[float(v) for v in row] for row in self.c2],
        }

    @staticmethod
    def zero(degree: int = 2) -> "PolyJet":
        return PolyJet(degree=degree)


@dataclass(frozen=True, eq=False)
class FitResult:
    P0: PolyJet
    K: float

    def to_dict(self) -> dict:
        return {"coeffs": self.P0.to_dict(), "K": self.K}


@dataclass(frozen=True, eq=False)
class BoundaryChart:
    """Pointwise boundary chart at the origin: x2 ~ P(x1) within K |x1|^(k+alpha)."""

    rotation: np.ndarray
    P: PolyJet
    K: float
    k: int
    alpha: float
    is_ck_alpha: bool = True

    @property
    def A(self) -> float:
        """Quadratic chart coefficient (x1^2 term of P)."""
        return float(self.P.c2[0, 0])

    def to_dict(self) -> dict:
        return {
            "coeffs": self.P.to_dict(),
            "K": self.K,
            "k": self.k,
            "alpha": self.alpha,
            "is_ck_alpha": self.is_ck_alpha,
        }


def min_of_max_of_lines(slopes, intercepts):
    """Exact minimizer of a -> max_r (intercepts_r + slopes_r * a).

    Returns (a_star, value). The envelope is convex piecewise linear; the
    minimum sits where the envelope slope changes sign, found by an upper
    convex-hull sweep over the lines. If every slope has the same sign the
    problem is unbounded and InputError is raised; an all-zero-slope family
    returns a_star = 0.
    """
    s = np.asarray(slopes, dtype=float)
    b = np.asarray(intercepts, dtype=float)
    if s.size == 0:
        raise InputError("no lines")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(b))):
        raise InputError("non-finite line coefficients")

    # One representative per slope: the largest intercept.
    order = np.lexsort((-b, s))
    s, b = s[order], b[order]
    keep = np.empty(s.size, dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(s) > 0.0
    s, b = s[keep], b[keep]

    if not (s[0] <= 0.0 <= s[-1]):
        raise InputError("minimax problem is unbounded (one-sided slopes)")
    if s.size == 1:
        return 0.0, float(b[0])

    # Upper hull sweep (lines sorted by slope, envelope = max).
    hull: list[int] = []

    def _drop(i_prev, i_mid, i_new) -> bool:
        # mid is dominated iff at the crossing of prev/new it does not rise above
        x_cross = (b[i_new] - b[i_prev]) / (s[i_prev] - s[i_new])
        v_cross = b[i_prev] + s[i_prev] * x_cross
        return b[i_mid] + s[i_mid] * x_cross <= v_cross + 0.0

    for i in range(s.size):
        while len(hull) >= 2 and _drop(hull[-2], hull[-1], i):
            hull.pop()
        if len(hull) == 1 and s[hull[0]] == s[i]:
            hull.pop()
        hull.append(i)

    hs = s[hull]
    hb = b[hull]
    if hs[0] > 0.0 or hs[-1] < 0.0:
        raise InputError("minimax problem is unbounded (one-sided envelope)")

    # Find where the envelope slope crosses zero.
    j = int(np.searchsorted(hs, 0.0, side="left"))
    if j < hs.size and hs[j] == 0.0:
        # flat segment: its active interval is bounded by the neighbours
        left = (
            (hb[j] - hb[j - 1]) / (hs[j - 1] - hs[j]) if j > 0 else None
        )
        right = (
            (hb[j + 1] - hb[j]) / (hs[j] - hs[j + 1]) if j + 1 < hs.size else None
        )
        if left is None and right is None:
            a_star = 0.0
        elif left is None:
            a_star = right - 1.0
        elif right is None:
            a_star = left + 1.0
        else:
            a_star = 0.5 * (left + right)
        return float(a_star), float(hb[j])
    # strict sign change between hull lines j-1 (slope < 0) and j (slope > 0)
    a_star = (hb[j] - hb[j - 1]) / (hs[j - 1] - hs[j])
    value = hb[j - 1] + hs[j - 1] * a_star
    return float(a_star), float(value)


def line_minimax(values, factors):
    """argmin_a max_i |values_i - a * factors_i| and the achieved maximum."""
    v = np.asarray(values, dtype=float)
    t = np.asarray(factors, dtype=float)
    if v.shape != t.shape or v.ndim != 1 or v.size == 0:
        raise InputError("values and factors must be equal-length 1-D arrays")
    slopes = np.concatenate([-t, t])
    intercepts = np.concatenate([v, -v])
    return min_of_max_of_lines(slopes, intercepts)


# ----------------------------------------------------------------------------
# dense two-phase simplex (tiny instances only)
# ----------------------------------------------------------------------------


def _simplex(c, A, b, maxiter=20000, tol=1e-11):
    """min c.x s.t. A x = b, x >= 0 via a dense two-phase tableau with Bland's
    rule. Returns the optimal x. Assumes the problem is feasible and bounded
    (true for the minimax fits that call it)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    neg = b < 0
    A = A.copy()
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1 tableau with artificial variables.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n, n + m))

    def pivot(T, basis, allowed):
        for _ in range(maxiter):
            row_obj = T[-1, :-1]
            enter = -1
            for j in allowed:
                if row_obj[j] < -tol:
                    enter = j
                    break
            if enter < 0:
                return True
            ratios = np.full(len(basis), np.inf)
            col = T[: len(basis), enter]
            rhs = T[: len(basis), -1]
            pos = col > tol
            ratios[pos] = rhs[pos] / col[pos]
            if not np.any(np.isfinite(ratios)):
                raise InputError("simplex: unbounded problem")
            leave = int(np.argmin(ratios))
            # Bland tie-break: smallest basis index among minimal ratios
            minval = ratios[leave]
            ties = [i for i in range(len(basis)) if ratios[i] <= minval + tol * (1 + abs(minval))]
            leave = min(ties, key=lambda i: basis[i])
            piv = T[leave, enter]
            T[leave] /= piv
            for r in range(T.shape[0]):
                if r != leave and T[r, enter] != 0.0:
                    T[r] -= T[r, enter] * T[leave]
            basis[leave] = enter
        raise InputError("simplex: iteration limit")

    pivot(T, basis, allowed=range(n + m))
    if T[-1, -1] < -1e-7:
        raise InputError("simplex: infeasible problem")

    # Drive any residual artificial variables out of the basis if possible.
    for i, bv in enumerate(basis):
        if bv >= n:
            row = T[i, :n]
            j = next((jj for jj in range(n) if abs(row[jj]) > tol), None)
            if j is not None:
                piv = T[i, j]
                T[i] /= piv
                for r in range(T.shape[0]):
                    if r != i and T[r, j] != 0.0:
                        T[r] -= T[r, j] * T[i]
                basis[i] = j

    # Phase 2.
    T2 = np.zeros((m + 1, n + 1))
    T2[:m, :n] = T[:m, :n]
    T2[:m, -1] = T[:m, -1]
    T2[m, :n] = c
    for i, bv in enumerate(basis):
        if bv < n:
            T2[m] -= c[bv] * T2[i]
    pivot(T2, basis, allowed=range(n))

    x = np.zeros(n)
    for i, bv in enumerate(basis):
        if bv < n:
            x[bv] = T2[i, -1]
    return x


def _design_matrix(d: np.ndarray, k: int) -> np.ndarray:
    """Columns of the centered polynomial basis of degree <= k (constant
    excluded; the constant is pinned separately)."""
    cols = []
    if k >= 1:
        cols += [d[:, 0], d[:, 1]]
    if k >= 2:
        cols += [d[:, 0] ** 2, d[:, 0] * d[:, 1], d[:, 1] ** 2]
    if not cols:
        return np.zeros((d.shape[0], 0))
    return np.stack(cols, axis=1)


def _jet_from_theta(theta: np.ndarray, k: int, c0: float) -> PolyJet:
    if k == 0:
        return PolyJet(degree=0, c0=c0)
    c1 = np.array([theta[0], theta[1]])
    if k == 1:
        return PolyJet(degree=1, c0=c0, c1=c1)
    c2 = np.array([[theta[2], 0.5 * theta[3]], [0.5 * theta[3], theta[4]]])
    return PolyJet(degree=2, c0=c0, c1=c1, c2=c2)


def minimax_fit(points, values, x0, k: int, weights) -> tuple[np.ndarray, float]:
    """Weighted linear Chebyshev fit: minimize K s.t. |r_i(theta)| <= K w_i.

    Lexicographic: K first, then the L1 size of theta among fits within
    relative slack 1e-9 of the optimal K. Returns (theta, K).
    """
    d = points - x0
    Phi = _design_matrix(d, k)
    m = Phi.shape[1]
    f = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if m == 0:
        return np.zeros(0), float(np.max(np.abs(f) / w)) if f.size else 0.0

    if m == 1:
        a, K = line_minimax(f / w, Phi[:, 0] / w)
        return np.array([a]), K

    # variables: theta+ (m), theta- (m), K, slack per constraint (2S)
    S = f.size
    nvar = 2 * m + 1 + 2 * S
    A = np.zeros((2 * S, nvar))
    bb = np.zeros(2 * S)
    A[:S, :m] = Phi
    A[:S, m : 2 * m] = -Phi
    A[:S, 2 * m] = -w
    A[:S, 2 * m + 1 : 2 * m + 1 + S] = np.eye(S)
    bb[:S] = f
    A[S:, :m] = -Phi
    A[S:, m : 2 * m] = Phi
    A[S:, 2 * m] = -w
    A[S:, 2 * m + 1 + S :] = np.eye(S)
    bb[S:] = -f
    cvec = np.zeros(nvar)
    cvec[2 * m] = 1.0
    x = _simplex(cvec, A, bb)
    theta = x[:m] - x[m : 2 * m]
    K = float(x[2 * m])

    # Tie-break stage: minimize L1 coefficient size at K fixed (with slack).
    K_cap = K * (1.0 + 1e-9) + 1e-15
    A2 = np.zeros((2 * S, 2 * m + 2 * S))
    A2[:S, :m] = Phi
    A2[:S, m : 2 * m] = -Phi
    A2[:S, 2 * m : 2 * m + S] = np.eye(S)
    A2[S:, :m] = -Phi
    A2[S:, m : 2 * m] = Phi
    A2[S:, 2 * m + S :] = np.eye(S)
    b2 = np.concatenate([f + K_cap * w, -f + K_cap * w])
    c2 = np.zeros(2 * m + 2 * S)
    c2[: 2 * m] = 1.0
    try:
        x2 = _simplex(c2, A2, b2)
        theta2 = x2[:m] - x2[m : 2 * m]
        K2 = float(np.max(np.abs(f - Phi @ theta2) / w))
        if K2 <= K_cap:
            theta, K = theta2, max(K2, K)
    except InputError:
        pass
    K = float(np.max(np.abs(f - Phi @ theta) / w))
    return theta, K


def pointwise_fit(samples, x0, k: int, alpha: float) -> FitResult:
    """Best pointwise polynomial approximation at x0 in the weighted sup norm.

    ``samples`` is a sequence of (point, value) pairs that must include x0
    itself (pinning P(x0)). Minimizes the Holder constant K over polynomials
    of degree <= k with |value - P| <= K |x - x0|^(k+alpha) at every sample;
    the achieved K is the reported pointwise seminorm.
    """
    if k not in (0, 1, 2):
        raise InputError("k must be 0, 1 or 2")
    if not (0.0 < alpha < 1.0):
        raise InputError("alpha must lie in (0, 1)")
    pts = np.asarray([np.asarray(p, dtype=float) for p, _ in samples])
    vals = np.asarray([float(v) for _, v in samples])
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InputError("sample points must be planar")
    x0 = np.asarray(x0, dtype=float)
    dist = np.hypot(pts[:, 0] - x0[0], pts[:, 1] - x0[1])
    at_x0 = dist <= 1e-14
    if not np.any(at_x0):
        raise InputError("x0 must be among the sample points (pins P(x0))")
    c0 = float(vals[np.argmax(at_x0)])
    pts_f = pts[~at_x0]
    vals_f = vals[~at_x0] - c0
    ncoef = {0: 0, 1: 2, 2: 5}[k]
    if pts_f.shape[0] < ncoef:
        raise UnderDeterminedError(
            f"need at least {ncoef} samples away from x0 for a degree-{k} fit"
        )
    w = dist[~at_x0] ** (k + alpha)
    if ncoef == 0:
        K = float(np.max(np.abs(vals_f) / w)) if vals_f.size else 0.0
        return FitResult(P0=PolyJet(degree=0, c0=c0), K=K)
    theta, K = minimax_fit(pts_f, vals_f, x0, k, w)
    return FitResult(P0=_jet_from_theta(theta, k, c0), K=K)


def classify_boundary(
    domain,
    k: int,
    alpha: float,
    samples: int = 4096,
    radius: float = 2e-4,
    ceiling: float = 1e3,
) -> BoundaryChart:
    """Pointwise chart of the boundary at the origin.

    In the catalog frame (rotation = identity), finds P with P(0) = 0 and
    DP(0) = 0 minimizing K subject to |x2 - P(x1)| <= K |x1|^(k+alpha) over
    boundary points sampled inside B_radius. For k = 1 the pinning forces
    P = 0 and only K is free; for k = 2 the single quadratic coefficient and
    K form a two-variable Chebyshev problem solved exactly. Charts whose
    minimal K exceeds ``ceiling`` are flagged as not pointwise C^{k,alpha}.
    """
    if k not in (1, 2):
        raise InputError("boundary classification needs k in {1, 2}")
    if not (0.0 < alpha < 1.0):
        raise InputError("alpha must lie in (0, 1)")
    if samples < 16:
        raise InputError("need at least 16 samples per piece")
    pts, noise = domain.sample_boundary(radius=radius, per_piece=samples, with_noise=True)
    x1 = pts[:, 0]
    x2 = pts[:, 1]
    # drop samples whose Holder weight cannot dominate the x2 evaluation
    # noise of their parametrization (they carry no geometric information)
    w_all = np.abs(x1) ** (k + alpha)
    usable = np.abs(x1) > 1e-14
    with np.errstate(divide="ignore"):
        ratio = np.where(usable, noise / np.maximum(w_all, 1e-300), np.inf)
    keep = usable & (ratio <= 3e-7)
    if not np.any(keep):
        # window too small for double precision: keep the cleanest samples
        keep = usable & (ratio <= 10.0 * np.min(ratio[usable], initial=np.inf))
    x1, x2 = x1[keep], x2[keep]
    if x1.size == 0:
        raise InputError("no usable boundary samples inside the window")
    w = np.abs(x1) ** (k + alpha)
    if k == 1:
        coeff = 0.0
        K = float(np.max(np.abs(x2) / w))
    else:
        coeff, K = line_minimax(x2 / w, (x1 ** 2) / w)
    if k == 2:
        P = PolyJet(degree=2, c2=np.array([[coeff, 0.0], [0.0, 0.0]]))
    else:
        P = PolyJet(degree=1)
    return BoundaryChart(
        rotation=np.eye(2),
        P=P,
        K=K,
        k=k,
        alpha=alpha,
        is_ck_alpha=bool(K <= ceiling),
    )
