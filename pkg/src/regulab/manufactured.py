"""Closed-form fields with analytic Hessians (manufactured-solution oracles).

Each field provides values u(x) and, when smooth, the pointwise Hessian, so
a right-hand side f(x) = F(D^2 u(x)) can be generated for any catalog
operator and the discrete solution compared against u itself.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .operators import OperatorSpec

__all__ = ["Field", "make_field", "rhs_for"]


class Field:
    """Callable value field with an optional pointwise Hessian."""

    def __init__(self, value, hessian=None, name=""):
        self._value = value
        self._hessian = hessian
        self.name = name

    def __call__(self, pts, pieces=None):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self._value(pts)

    def hessian(self, pts):
        if self._hessian is None:
            raise ConfigurationError(f"field {self.name!r} has no analytic Hessian")
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self._hessian(pts)


def _affine(c0, cx, cy):
    def val(p):
        return c0 + cx * p[:, 0] + cy * p[:, 1]

    def hess(p):
        return np.zeros((p.shape[0], 2, 2))

    return Field(val, hess, name="affine")


def _quadratic(axx, axy, ayy):
    # u = axx*x^2 + axy*x*y + ayy*y^2
    H = np.array([[2.0 * axx, axy], [axy, 2.0 * ayy]])

    def val(p):
        return axx * p[:, 0] ** 2 + axy * p[:, 0] * p[:, 1] + ayy * p[:, 1] ** 2

    def hess(p):
        return np.broadcast_to(H, (p.shape[0], 2, 2)).copy()

    return Field(val, hess, name="quadratic")


def _harmonic_mix(coeffs):
    # sum_m c_m * r^m sin(m*theta)  (harmonic polynomials Im((x+iy)^m))
    coeffs = [float(c) for c in coeffs]

    def val(p):
        z = p[:, 0] + 1j * p[:, 1]
        out = np.zeros(p.shape[0])
        for m, c in enumerate(coeffs, start=1):
            if c != 0.0:
                out += c * np.imag(z ** m)
        return out

    def hess(p):
        z = p[:, 0] + 1j * p[:, 1]
        fpp = np.zeros(p.shape[0], dtype=complex)
        for m, c in enumerate(coeffs, start=1):
            if c != 0.0 and m >= 2:
                fpp += c * m * (m - 1) * z ** (m - 2)
        H = np.empty((p.shape[0], 2, 2))
        H[:, 0, 0] = np.imag(fpp)
        H[:, 0, 1] = H[:, 1, 0] = np.real(fpp)
        H[:, 1, 1] = -np.imag(fpp)
        return H

    return Field(val, hess, name="harmonic_mix")


def _power_growth(c, p):
    # c * Im(z^p): harmonic for any p > 0 on the upper half plane
    c = float(c)
    p = float(p)

    def val(q):
        z = q[:, 0] + 1j * q[:, 1]
        return c * np.imag(z ** p)

    def hess(q):
        z = q[:, 0] + 1j * q[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            fpp = c * p * (p - 1) * z ** (p - 2)
        fpp = np.where(np.isfinite(fpp), fpp, 0.0)
        H = np.empty((q.shape[0], 2, 2))
        H[:, 0, 0] = np.imag(fpp)
        H[:, 0, 1] = H[:, 1, 0] = np.real(fpp)
        H[:, 1, 1] = -np.imag(fpp)
        return H

    return Field(val, hess, name="power_growth")


def _c2a_jet(b1n, b2n, c3):
    # u = b1n*x*y + b2n*y^2 + c3*y^3; Hessian [[0, b1n], [b1n, 2*b2n + 6*c3*y]]
    def val(p):
        y = p[:, 1]
        return b1n * p[:, 0] * y + b2n * y ** 2 + c3 * y ** 3

    def hess(p):
        H = np.empty((p.shape[0], 2, 2))
        H[:, 0, 0] = 0.0
        H[:, 0, 1] = H[:, 1, 0] = b1n
        H[:, 1, 1] = 2.0 * b2n + 6.0 * c3 * p[:, 1]
        return H

    return Field(val, hess, name="c2a_jet")


class _ArcModes:
    """Generic outer data: trigonometric modes on circular pieces, zero on
    the rest of the boundary."""

    name = "arc_modes"

    def __init__(self, coeffs, on=("arc", "clip", "circle")):
        self.coeffs = [float(c) for c in coeffs]
        self.on = tuple(on)

    def __call__(self, pts, pieces=None):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        out = np.zeros(pts.shape[0])
        for m, c in enumerate(self.coeffs, start=1):
            if c != 0.0:
                out += c * np.sin(m * theta)
        if pieces is not None:
            mask = np.isin(np.asarray(pieces), self.on)
            out = np.where(mask, out, 0.0)
        return out


def _jet_power(c0, c1x, c1y, cxx, cxy, cyy, K, p):
    """Polynomial 2-jet plus a radial Holder perturbation K*|x|^p.

    Boundary-data generator (no Hessian: the perturbation is rough)."""

    def val(q):
        r = np.hypot(q[:, 0], q[:, 1])
        jet = (c0 + c1x * q[:, 0] + c1y * q[:, 1]
               + cxx * q[:, 0] ** 2 + cxy * q[:, 0] * q[:, 1] + cyy * q[:, 1] ** 2)
        return jet + K * r ** p

    return Field(val, None, name="jet_power")


def _radial_power(K, p):
    """f profile K*|x|^p (the right-hand-side decay the rate fits assume)."""

    def val(q):
        r = np.hypot(q[:, 0], q[:, 1])
        return K * r ** p

    return Field(val, None, name="radial_power")


def _mixed_power(b1n, c, p):
    # u = b1n*x*y + c*Im(z^p): harmonic, vanishing gradient at 0 for p > 1
    def val(q):
        z = q[:, 0] + 1j * q[:, 1]
        return b1n * q[:, 0] * q[:, 1] + c * np.imag(z ** p)

    def hess(q):
        z = q[:, 0] + 1j * q[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            fpp = c * p * (p - 1) * z ** (p - 2)
        fpp = np.where(np.isfinite(fpp), fpp, 0.0)
        H = np.empty((q.shape[0], 2, 2))
        H[:, 0, 0] = np.imag(fpp)
        H[:, 0, 1] = H[:, 1, 0] = b1n + np.real(fpp)
        H[:, 1, 1] = -np.imag(fpp)
        return H

    return Field(val, hess, name="mixed_power")


_FIELDS = {
    "affine": _affine,
    "quadratic": _quadratic,
    "harmonic_mix": _harmonic_mix,
    "power_growth": _power_growth,
    "c2a_jet": _c2a_jet,
    "mixed_power": _mixed_power,
    "jet_power": _jet_power,
    "radial_power": _radial_power,
}


def make_field(kind: str, params) -> Field:
    """Build a manufactured field from its tag and parameter list."""
    if kind == "arc_modes":
        return _ArcModes(params)
    if kind not in _FIELDS:
        raise ConfigurationError(
            f"unknown field kind {kind!r}; known: {sorted(_FIELDS) + ['arc_modes']}"
        )
    return _FIELDS[kind](*params)


def rhs_for(field: Field, op: OperatorSpec):
    """Pointwise right-hand side f(x) = F(D^2 u(x)) for a smooth field."""

    def f(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        H = field.hessian(pts)
        return np.array([op(H[i]) for i in range(H.shape[0])])

    return f
