"""Numpy reference implementation of the stencil kernels."""

import numpy as np


def second_diffs(u, nbp, nbm, wpz, wmz, w0, bconst):
    """Directional second differences, (N, D).

    nbp/nbm hold neighbor node ids clipped to 0 where an arm is cut; the cut
    contribution (weight times boundary value) is pre-folded into bconst and
    the corresponding weight in wpz/wmz is zero.
    """
    up = u[nbp]
    um = u[nbm]
    return wpz * up + wmz * um - w0 * u[:, None] + bconst


def combine_pucci(delta, frames, lam, Lam, take_max):
    """Extremal combination over orthogonal line pairs.

    take_max=True gives the maximal operator (slope Lam on positive parts,
    lam on negative); take_max=False the minimal one. Returns (value, gamma)
    with gamma the per-line coefficients of the extremizing choice.
    """
    if take_max:
        phi = np.where(delta >= 0.0, Lam * delta, lam * delta)
        coef = np.where(delta >= 0.0, Lam, lam)
    else:
        phi = np.where(delta >= 0.0, lam * delta, Lam * delta)
        coef = np.where(delta >= 0.0, lam, Lam)
    fsum = phi[:, frames[:, 0]] + phi[:, frames[:, 1]]
    pick = np.argmax(fsum, axis=1) if take_max else np.argmin(fsum, axis=1)
    n = delta.shape[0]
    rows = np.arange(n)
    value = fsum[rows, pick]
    gamma = np.zeros_like(delta)
    e0 = frames[pick, 0]
    e1 = frames[pick, 1]
    gamma[rows, e0] = coef[rows, e0]
    gamma[rows, e1] = coef[rows, e1]
    return value, gamma


def combine_isaacs(delta, W):
    """min over j of max over k of sum_e W[j,k,e] * delta[:,e].

    Inner/outer ties resolve to the smallest index. Returns (value, gamma)
    with gamma the active weight row.
    """
    nj, nk, D = W.shape
    vals = delta @ W.reshape(nj * nk, D).T
    vals = vals.reshape(-1, nj, nk)
    kstar = np.argmax(vals, axis=2)
    n = delta.shape[0]
    rows = np.arange(n)
    inner = np.take_along_axis(vals, kstar[:, :, None], axis=2)[:, :, 0]
    jstar = np.argmin(inner, axis=1)
    value = inner[rows, jstar]
    gamma = W[jstar, kstar[rows, jstar]]
    return value, gamma


def combine_linear(delta, weights):
    """Fixed-weight combination; gamma broadcasts the weight row."""
    value = delta @ weights
    gamma = np.broadcast_to(weights, delta.shape).copy()
    return value, gamma


def relax_step(u, residual, diag_scale, omega):
    """One damped pointwise relaxation step toward residual = 0."""
    return u + omega * residual / diag_scale
