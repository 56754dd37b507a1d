"""Uniformly elliptic operator algebra on 2x2 symmetric matrices.

The laboratory fixes the dimension to n = 2, so eigenvalues are computed in
closed form from trace and determinant; there is no iterative eigensolver
anywhere in this module.

Operator catalog (string tags used by the harness):

``laplace``   F(M) = tr(M)
``pucci+``    F(M) = Lam * (sum of positive eigenvalues) + lam * (sum of negative)
``pucci-``    F(M) = lam * (sum of positive eigenvalues) + Lam * (sum of negative)
``isaacs``    min over a 2-family {A_j} of max over a 2-family {B_k} of
              tr((A_j + B_k) M) / 2; the default families give the closed form
              mid*tr(M) - s*|M11 - M22| + 2*s*|M12| with mid = (lam+Lam)/2 and
              s = (Lam-lam)/4, which is neither convex nor concave and is
              uniformly elliptic with constants exactly (lam, Lam).

``shifted`` wraps a base operator F as (F(scale*M + B) - F(B)) / scale, the
rescaling used when zooming into a boundary point; it always satisfies
F(0) = 0 regardless of B.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError

__all__ = [
    "SymMatrix",
    "OperatorSpec",
    "pucci_plus",
    "pucci_minus",
    "eval_operator",
    "check_uniform_ellipticity",
    "solve_recession_constant",
    "catalog_operator",
    "shifted_operator",
    "EllipticityReport",
    "DELTA_NN",
]


def _as_matrix(M) -> np.ndarray:
    if isinstance(M, SymMatrix):
        return M.entries
    A = np.asarray(M, dtype=float)
    if A.shape != (2, 2):
        raise InputError(f"expected a 2x2 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    return 0.5 * (A + A.T)


class SymMatrix:
    """Dense 2x2 symmetric matrix with closed-form eigenvalue access.

    The constructor symmetrizes its argument, so the symmetry invariant holds
    exactly. Instances are immutable value objects.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        A = _as_matrix(entries)
        A.setflags(write=False)
        object.__setattr__(self, "entries", A)

    def __setattr__(self, name, value):
        raise AttributeError("SymMatrix is immutable")

    @staticmethod
    def diag(a: float, b: float) -> "SymMatrix":
        return SymMatrix(np.array([[a, 0.0], [0.0, b]]))

    @staticmethod
    def zero() -> "SymMatrix":
        return SymMatrix(np.zeros((2, 2)))

    def eigenvalues(self) -> tuple[float, float]:
        """Eigenvalues (ascending) from the trace/determinant closed form."""
        return eig2(self.entries)

    def trace(self) -> float:
        return float(self.entries[0, 0] + self.entries[1, 1])

    def spectral_norm(self) -> float:
        lo, hi = self.eigenvalues()
        return max(abs(lo), abs(hi))

    def __add__(self, other):
        return SymMatrix(self.entries + _as_matrix(other))

    def __sub__(self, other):
        return SymMatrix(self.entries - _as_matrix(other))

    def __mul__(self, t: float):
        return SymMatrix(self.entries * float(t))

    __rmul__ = __mul__

    def __neg__(self):
        return SymMatrix(-self.entries)

    def __repr__(self):
        e = self.entries
        return f"SymMatrix([[{e[0,0]!r}, {e[0,1]!r}], [{e[1,0]!r}, {e[1,1]!r}]])"


#: matrix with a single unit entry in the (n, n) slot, n = 2
DELTA_NN = np.array([[0.0, 0.0], [0.0, 1.0]])


def eig2(A: np.ndarray) -> tuple[float, float]:
    """Eigenvalues of a symmetric 2x2 array, ascending, in closed form."""
    m = 0.5 * (A[0, 0] + A[1, 1])
    d = np.hypot(0.5 * (A[0, 0] - A[1, 1]), A[0, 1])
    return (float(m - d), float(m + d))


def _check_ellipticity_constants(lam: float, Lam: float) -> None:
    if not (np.isfinite(lam) and np.isfinite(Lam)):
        raise InputError("ellipticity constants must be finite")
    if not (0.0 < lam <= Lam):
        raise InputError(f"need 0 < lam <= Lam, got lam={lam}, Lam={Lam}")


def pucci_plus(M, lam: float, Lam: float) -> float:
    """Maximal extremal value: Lam * (positive eigenvalues) + lam * (negative)."""
    _check_ellipticity_constants(lam, Lam)
    lo, hi = eig2(_as_matrix(M))
    return float(sum(Lam * e if e > 0 else lam * e for e in (lo, hi)))


def pucci_minus(M, lam: float, Lam: float) -> float:
    """Minimal extremal value; equals -pucci_plus(-M, lam, Lam)."""
    _check_ellipticity_constants(lam, Lam)
    lo, hi = eig2(_as_matrix(M))
    return float(sum(lam * e if e > 0 else Lam * e for e in (lo, hi)))


def _default_isaacs_families(lam: float, Lam: float):
    """Two-by-two control families whose averaged matrices are
    mid*I + sigma*s*K + tau*s*J, sigma, tau in {-1, +1}."""
    mid = 0.5 * (lam + Lam)
    s = 0.25 * (Lam - lam)
    K = np.array([[1.0, 0.0], [0.0, -1.0]])
    J = np.array([[0.0, 1.0], [1.0, 0.0]])
    A_family = (2.0 * (mid * np.eye(2) - s * K), 2.0 * (mid * np.eye(2) + s * K))
    B_family = (-2.0 * s * J, 2.0 * s * J)
    return A_family, B_family


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """A uniformly elliptic operator F with constants (lam, Lam) and F(0) = 0.

    ``kind`` is one of laplace / pucci_plus / pucci_minus / isaacs_minmax /
    shifted. For isaacs_minmax the control families default to the catalog
    instance; for shifted, ``base``, ``shift_matrix`` and ``shift_scale``
    define the zoom. The constructor subtracts F(0) (zero for every catalog
    kind, and structurally zero for shifted), keeping the F(0) = 0 invariant.
    """

    kind: str
    lam: float = 1.0
    Lam: float = 1.0
    isaacs_A: tuple = field(default=None, repr=False)
    isaacs_B: tuple = field(default=None, repr=False)
    shift_matrix: np.ndarray = field(default=None, repr=False)
    shift_scale: float = 1.0
    base: "OperatorSpec" = None
    _offset: float = field(default=0.0, repr=False)

    def __post_init__(self):
        _check_ellipticity_constants(self.lam, self.Lam)
        if self.kind not in ("laplace", "pucci_plus", "pucci_minus", "isaacs_minmax", "shifted"):
            raise ConfigurationError(f"unknown operator kind {self.kind!r}")
        if self.kind == "laplace" and self.lam != self.Lam:
            # trace is elliptic exactly for lam = Lam
            object.__setattr__(self, "Lam", self.lam)
        if self.kind == "isaacs_minmax":
            if self.isaacs_A is None or self.isaacs_B is None:
                A, B = _default_isaacs_families(self.lam, self.Lam)
                object.__setattr__(self, "isaacs_A", A)
                object.__setattr__(self, "isaacs_B", B)
            else:
                object.__setattr__(
                    self, "isaacs_A", tuple(_as_matrix(a) for a in self.isaacs_A)
                )
                object.__setattr__(
                    self, "isaacs_B", tuple(_as_matrix(b) for b in self.isaacs_B)
                )
        if self.kind == "shifted":
            if self.base is None or self.shift_matrix is None:
                raise ConfigurationError("shifted operator needs base and shift_matrix")
            if not self.shift_scale > 0:
                raise ConfigurationError("shift_scale must be positive")
            object.__setattr__(self, "shift_matrix", _as_matrix(self.shift_matrix))
        object.__setattr__(self, "_offset", 0.0)
        object.__setattr__(self, "_offset", self._raw(np.zeros((2, 2))))

    def _raw(self, A: np.ndarray) -> float:
        if self.kind == "laplace":
            val = A[0, 0] + A[1, 1]
        elif self.kind == "pucci_plus":
            lo, hi = eig2(A)
            val = sum(self.Lam * e if e > 0 else self.lam * e for e in (lo, hi))
        elif self.kind == "pucci_minus":
            lo, hi = eig2(A)
            val = sum(self.lam * e if e > 0 else self.Lam * e for e in (lo, hi))
        elif self.kind == "isaacs_minmax":
            val = min(
                max(0.5 * np.tensordot(Aj + Bk, A) for Bk in self.isaacs_B)
                for Aj in self.isaacs_A
            )
        else:  # shifted
            s = self.shift_scale
            B = self.shift_matrix
            val = (self.base(s * A + B) - self.base(B)) / s
        return float(val) - self._offset

    def __call__(self, M) -> float:
        return self._raw(_as_matrix(M))


def eval_operator(op: OperatorSpec, M) -> float:
    """Evaluate a catalog operator on a symmetric matrix."""
    if not isinstance(op, OperatorSpec):
        raise ConfigurationError(f"not an operator spec: {op!r}")
    return op(M)


def shifted_operator(base: OperatorSpec, B, scale: float) -> OperatorSpec:
    """The zoom (F(scale*M + B) - F(B)) / scale as an OperatorSpec."""
    return OperatorSpec(
        kind="shifted",
        lam=base.lam,
        Lam=base.Lam,
        base=base,
        shift_matrix=_as_matrix(B),
        shift_scale=float(scale),
    )


_CATALOG_TAGS = {
    "laplace": "laplace",
    "pucci+": "pucci_plus",
    "pucci-": "pucci_minus",
    "isaacs": "isaacs_minmax",
}


def catalog_operator(tag: str, lam: float = 1.0, Lam: float = 2.0) -> OperatorSpec:
    """Build an operator from its harness catalog tag."""
    if tag not in _CATALOG_TAGS:
        raise ConfigurationError(
            f"unknown operator tag {tag!r}; known: {sorted(_CATALOG_TAGS)}"
        )
    if tag == "laplace":
        return OperatorSpec(kind="laplace", lam=1.0, Lam=1.0)
    return OperatorSpec(kind=_CATALOG_TAGS[tag], lam=lam, Lam=Lam)


@dataclass(frozen=True)
class EllipticityReport:
    passed: bool
    worst_ratio_low: float
    worst_ratio_high: float
    trials: int
    failures: int


def check_uniform_ellipticity(op, trials: int = 1000, seed: int = 0, tol: float = 1e-9):
    """Sampled verification of lam*||N|| <= F(M+N) - F(M) <= Lam*tr(N).

    ``op`` may be an OperatorSpec or any callable on 2x2 symmetric arrays
    carrying ``lam``/``Lam`` attributes (ad-hoc wrappers used in tests).
    Samples random M and random positive semidefinite N with unit spectral
    norm; failures are reported, never raised.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    lam = op.lam
    Lam = op.Lam
    F = op if callable(op) else None
    if F is None:
        raise ConfigurationError("operator must be callable")
    rng = np.random.default_rng(seed)
    worst_low = np.inf
    worst_high = -np.inf
    failures = 0
    for _ in range(trials):
        m = rng.normal(size=3) * rng.choice([0.1, 1.0, 10.0])
        M = np.array([[m[0], m[2]], [m[2], m[1]]])
        theta = rng.uniform(0.0, np.pi)
        c, s = np.cos(theta), np.sin(theta)
        R = np.array([[c, -s], [s, c]])
        mu = rng.uniform(0.0, 1.0)  # second eigenvalue; largest is 1
        N = R @ np.diag([1.0, mu]) @ R.T
        N = 0.5 * (N + N.T)
        inc = F(M + N) - F(M)
        ratio_low = inc / 1.0  # ||N|| = 1 by construction
        ratio_high = inc / (1.0 + mu)  # tr(N)
        worst_low = min(worst_low, ratio_low)
        worst_high = max(worst_high, ratio_high)
        if inc < lam * 1.0 - tol or inc > Lam * (1.0 + mu) + tol:
            failures += 1
    return EllipticityReport(
        passed=(failures == 0),
        worst_ratio_low=float(worst_low),
        worst_ratio_high=float(worst_high),
        trials=trials,
        failures=failures,
    )


def solve_recession_constant(op, B, tol: float = 1e-10, target: float = 0.0) -> float:
    """The unique t with F(B + t*delta_nn) = target, by bisection.

    Ellipticity makes t -> F(B + t*delta_nn) strictly increasing with slope in
    [lam, Lam], so [-|F(B)-target|/lam, +|F(B)-target|/lam] brackets the root.
    Raises ConfigurationError if the bracket fails (non-elliptic operator).
    """
    if not tol > 0:
        raise InputError("tol must be positive")
    Bm = _as_matrix(B)
    lam = op.lam

    def g(t: float) -> float:
        return op(Bm + t * DELTA_NN) - target

    g0 = g(0.0)
    if abs(g0) <= tol:
        return 0.0
    width = abs(g0) / lam
    lo, hi = -width, width
    glo, ghi = g(lo), g(hi)
    if glo > tol or ghi < -tol:
        raise ConfigurationError(
            "recession bracket invalid; operator is not uniformly elliptic"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= tol:
            return mid
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-17 * max(1.0, abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)
