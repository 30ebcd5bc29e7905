"""Pure-numpy kernels: trajectory simulation, path log-densities, forward pass.

This is the fallback implementation selected at import when the compiled
extension is unavailable (see ``backend``).  The compiled kernels mirror
these routines operation for operation; simulation and lattice sampling
are bit-identical across backends, density evaluations may differ in the
last ulp because reduction order differs.

All kernels are batch-first: arrays are (B, N) with one row per
trajectory, and every row's result depends only on that row.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf, erfc

_SQRT_HALF = np.sqrt(0.5)


def phi_diff(z1, z2):
    """Phi(z1) - Phi(z2) for z1 >= z2, stable in both tails.

    Branch selection keeps the subtraction between two small erfc values
    whenever both arguments share a sign, so the result stays relatively
    accurate far into either tail.
    """
    z1, z2 = np.broadcast_arrays(
        np.atleast_1d(np.asarray(z1, dtype=np.float64)),
        np.atleast_1d(np.asarray(z2, dtype=np.float64)),
    )
    out = np.empty(z1.shape, dtype=np.float64)
    right = z2 >= 0.0
    left = z1 <= 0.0
    mid = ~(right | left)
    if right.any():
        out[right] = 0.5 * (erfc(z2[right] * _SQRT_HALF) - erfc(z1[right] * _SQRT_HALF))
    if left.any():
        out[left] = 0.5 * (erfc(-z1[left] * _SQRT_HALF) - erfc(-z2[left] * _SQRT_HALF))
    if mid.any():
        out[mid] = 0.5 * (erf(z1[mid] * _SQRT_HALF) - erf(z2[mid] * _SQRT_HALF))
    return out


def start_density(y, v, alpha1, alpha2):
    """Density of v + W + U at y (unit-variance W, U uniform on the alphas)."""
    return phi_diff(y - v - alpha1, y - v - alpha2) / (alpha2 - alpha1)


def step_density(y, y_prev, v_prev, v_next, sa2, sb2, alpha1, alpha2, gh_e, gh_w):
    """One-step conditional output density.

    Mixture over the erase noise (Gauss-Hermite nodes ``gh_e`` with
    normalized weights ``gh_w``) of uniform-smoothed Gaussians with
    variance sa2 v_prev^2 + sb2 (y_prev - e)^2 + 1.  Broadcasts over any
    common shape of y / y_prev / v_prev / v_next; the node axis is
    appended internally.
    """
    y = np.asarray(y, dtype=np.float64)[..., None]
    y_prev = np.asarray(y_prev, dtype=np.float64)[..., None]
    v_prev = np.asarray(v_prev, dtype=np.float64)[..., None]
    v_next = np.asarray(v_next, dtype=np.float64)[..., None]
    sig = np.sqrt(sa2 * v_prev**2 + sb2 * (y_prev - gh_e) ** 2 + 1.0)
    shifted = y - v_next
    pd = phi_diff((shifted - alpha1) / sig, (shifted - alpha2) / sig)
    return (pd * gh_w).sum(axis=-1) / (alpha2 - alpha1)


def simulate_paths(xv, a, b, e, w, u, start, xprev_val, yprev):
    """Run the output recursion for a batch of paths.

    xv holds level values per step; the noise arrays are per-step draws,
    with e[:, t] consumed at step t.  When ``start`` is false the first
    step resumes from (xprev_val, yprev).
    """
    B, N = xv.shape
    y = np.empty((B, N), dtype=np.float64)
    if start:
        y[:, 0] = xv[:, 0] + w[:, 0] + u[:, 0]
    else:
        y[:, 0] = xv[:, 0] + a[:, 0] * xprev_val + b[:, 0] * (yprev - e[:, 0]) + w[:, 0] + u[:, 0]
    for t in range(1, N):
        y[:, t] = (
            xv[:, t] + a[:, t] * xv[:, t - 1] + b[:, t] * (y[:, t - 1] - e[:, t]) + w[:, t] + u[:, t]
        )
    return y


def conditional_loglik(y, xv, start, xprev_val, yprev, sa2, sb2, alpha1, alpha2, gh_e, gh_w):
    """log f(y_0^n | x_0^n) per row; returns (loglik, first_bad_step).

    first_bad_step is -1 when every factor stayed above the linear-domain
    underflow floor, else the index of the first vanished factor (the
    corresponding loglik is -inf).
    """
    B, N = y.shape
    ll = np.zeros(B, dtype=np.float64)
    bad = np.full(B, -1, dtype=np.int64)
    if start:
        d = start_density(y[:, 0], xv[:, 0], alpha1, alpha2)
    else:
        d = step_density(y[:, 0], yprev, xprev_val, xv[:, 0], sa2, sb2, alpha1, alpha2, gh_e, gh_w)
    _accumulate_log(ll, bad, d, 0)
    for t in range(1, N):
        d = step_density(
            y[:, t], y[:, t - 1], xv[:, t - 1], xv[:, t], sa2, sb2, alpha1, alpha2, gh_e, gh_w
        )
        _accumulate_log(ll, bad, d, t)
    return ll, bad


def _accumulate_log(ll, bad, d, t):
    alive = bad < 0
    zero = alive & (d <= 0.0)
    if np.any(zero):
        bad[zero] = t
        ll[zero] = -np.inf
    ok = alive & (d > 0.0)
    ll[ok] += np.log(d[ok])


def forward_loglik(
    y, levels, last, trans, init_probs, start, xprev_val, yprev, sa2, sb2, alpha1, alpha2, gh_e, gh_w
):
    """Scaled forward pass over the input lattice; log f(y_0^n) per row.

    States carry the index of their most recent symbol in ``last``; the
    per-step transition weight is trans[s, s'] times the one-step density
    evaluated at (levels[last[s]], levels[last[s']]).  Messages are
    renormalized each step and the log-normalizers accumulated.
    """
    B, N = y.shape
    levels = np.asarray(levels, dtype=np.float64)
    last = np.asarray(last, dtype=np.int64)
    ll = np.zeros(B, dtype=np.float64)
    bad = np.full(B, -1, dtype=np.int64)

    lv = levels[last]  # (S,) level value per state
    if start:
        d0 = start_density(y[:, 0, None], lv[None, :], alpha1, alpha2)
    else:
        d0 = step_density(
            y[:, 0, None], yprev[:, None], xprev_val[:, None], lv[None, :],
            sa2, sb2, alpha1, alpha2, gh_e, gh_w,
        )
    msg = init_probs[None, :] * d0
    msg, ll, bad = _renormalize(msg, ll, bad, 0)

    for t in range(1, N):
        # density over (prev level, next level) pairs, then gathered per state pair
        dmat = step_density(
            y[:, t, None, None], y[:, t - 1, None, None],
            levels[None, :, None], levels[None, None, :],
            sa2, sb2, alpha1, alpha2, gh_e, gh_w,
        )
        weights = trans[None, :, :] * dmat[:, last[:, None], last[None, :]]
        msg = np.einsum("bs,bst->bt", msg, weights)
        msg, ll, bad = _renormalize(msg, ll, bad, t)
    return ll, bad


def _renormalize(msg, ll, bad, t):
    c = msg.sum(axis=1)
    newly_dead = (bad < 0) & (c <= 0.0)
    if np.any(newly_dead):
        bad[newly_dead] = t
        ll[newly_dead] = -np.inf
    live = bad < 0
    c_safe = np.where(live, c, 1.0)
    ll = np.where(live, ll + np.log(c_safe), ll)
    return msg / c_safe[:, None], ll, bad


def sample_lattice_paths(init_cdf, trans_cdf, unif):
    """Map uniform draws to lattice state paths by inverse-CDF steps."""
    B, N = unif.shape
    S = init_cdf.shape[0]
    states = np.empty((B, N), dtype=np.int64)
    states[:, 0] = np.minimum((unif[:, 0, None] > init_cdf[None, :]).sum(axis=1), S - 1)
    for t in range(1, N):
        rows = trans_cdf[states[:, t - 1]]
        states[:, t] = np.minimum((unif[:, t, None] > rows).sum(axis=1), S - 1)
    return states
