"""Simulator and exact one-step densities for the read channel.

Density conventions
-------------------
The uniform noise integrates in closed form, so the one-step conditional
density given the previous state and the erase draw e is a difference of
Gaussian CDFs:

    f(y | state, x) = E_e [ Phi((y - v[x] - alpha1)/s(e)) - Phi((y - v[x] - alpha2)/s(e)) ]
                      / (alpha2 - alpha1),
    s(e)^2 = sigma_a2 v[x_prev]^2 + sigma_b2 (y_prev - e)^2 + 1.

Only the expectation over e ~ N(0, sigma_e2) needs quadrature; it is done
with Gauss-Hermite nodes (32 by default).  At time 0 there is no
interference and the density is the closed form with s = 1.  Values are
computed in log space; a true zero raises QuadratureUnderflow rather than
propagating silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import log_ndtr, ndtr

from . import backend
from .errors import QuadratureUnderflow
from .params import START, ChannelParams, ChannelState, Resumed, Start, check_state

DEFAULT_NODES = 32


@lru_cache(maxsize=16)
def _hermgauss(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.hermite.hermgauss(nodes)
    return t, w / math.sqrt(math.pi)


def gh_rule(params: ChannelParams, nodes: int = DEFAULT_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (in erase-noise units) and normalized weights for the e-integral."""
    t, w = _hermgauss(nodes)
    return math.sqrt(2.0 * params.sigma_e2) * t, w


def _log_phi_diff(z1, z2):
    """log(Phi(z1) - Phi(z2)) for z1 >= z2, stable far into either tail."""
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    # Move to the left tail by symmetry when both arguments are positive.
    flip = z2 > 0.0
    a = np.where(flip, -z2, z1)
    b = np.where(flip, -z1, z2)
    la, lb = log_ndtr(a), log_ndtr(b)
    with np.errstate(divide="ignore"):
        tail = la + np.log1p(-np.exp(np.minimum(lb - la, 0.0)))
    mid = np.log(np.maximum(ndtr(a) - ndtr(b), 0.0))
    use_tail = a <= 0.0
    return np.where(use_tail, tail, mid)


def log_initial_density(params: ChannelParams, x0: int, y0) -> np.ndarray | float:
    """log f(y_0 | x_0) at time 0: Y = v[x_0] + W + U, in closed form."""
    v = params.levels[x0]
    y0 = np.asarray(y0, dtype=np.float64)
    out = _log_phi_diff(y0 - v - params.alpha1, y0 - v - params.alpha2) - math.log(
        params.alpha_width
    )
    return float(out) if out.ndim == 0 else out


def initial_density(params: ChannelParams, x0: int, y0) -> np.ndarray | float:
    return np.exp(log_initial_density(params, x0, y0))


def log_transition_density(
    params: ChannelParams,
    y,
    y_prev,
    v_prev,
    v_next,
    nodes: int = DEFAULT_NODES,
):
    """Vectorized log one-step density for resumed steps.

    Broadcasts over y / y_prev / v_prev / v_next.  The e-expectation is a
    log-sum-exp over the Gauss-Hermite rule, so the result stays finite as
    long as any node's CDF difference is representable.
    """
    gh_e, gh_w = gh_rule(params, nodes)
    y = np.asarray(y, dtype=np.float64)[..., None]
    y_prev = np.asarray(y_prev, dtype=np.float64)[..., None]
    v_prev = np.asarray(v_prev, dtype=np.float64)[..., None]
    v_next = np.asarray(v_next, dtype=np.float64)[..., None]
    sig = np.sqrt(params.sigma_a2 * v_prev**2 + params.sigma_b2 * (y_prev - gh_e) ** 2 + 1.0)
    shifted = y - v_next
    logpd = _log_phi_diff((shifted - params.alpha1) / sig, (shifted - params.alpha2) / sig)
    stacked = logpd + np.log(gh_w)
    peak = stacked.max(axis=-1)
    with np.errstate(invalid="ignore"):
        out = peak + np.log(np.exp(stacked - peak[..., None]).sum(axis=-1))
    out = np.where(np.isfinite(peak), out, -np.inf) - math.log(params.alpha_width)
    return out


def log_step_density(
    params: ChannelParams,
    state: ChannelState,
    x_next: int,
    y_next: float,
    nodes: int = DEFAULT_NODES,
) -> float:
    """log f(y_next | state, x_next); raises QuadratureUnderflow on true zero."""
    check_state(params, state)
    v_next = params.levels[x_next]
    if isinstance(state, Start):
        out = float(log_initial_density(params, x_next, y_next))
    else:
        out = float(
            log_transition_density(
                params, y_next, state.y_prev, params.levels[state.x_prev], v_next, nodes
            )
        )
    if out == -math.inf:
        raise QuadratureUnderflow(
            f"one-step density underflowed at y = {y_next}", step=None
        )
    return out


def step_density(
    params: ChannelParams,
    state: ChannelState,
    x_next: int,
    y_next: float,
    nodes: int = DEFAULT_NODES,
) -> float:
    return math.exp(log_step_density(params, state, x_next, y_next, nodes))


@dataclass(frozen=True)
class Trajectory:
    """One simulated (x, y) path of length n+1.

    ``noise`` (when recorded) maps 'a', 'b', 'e', 'w', 'u' to per-step
    draws; e[i] is the erase value consumed at step i (the recursion draws
    a fresh erase value each step, which matches the channel law because
    the erase process is i.i.d. and each draw is consumed exactly once).
    At a Start step 0 only w[0], u[0] enter the output.
    """

    x: np.ndarray
    y: np.ndarray
    noise: Optional[dict[str, np.ndarray]]
    seed: tuple[int, ...]
    initial_state: ChannelState = START

    def __len__(self) -> int:
        return len(self.x)


def sample_step(
    params: ChannelParams,
    state: ChannelState,
    x_next: int,
    rng: np.random.Generator,
) -> tuple[float, dict[str, float]]:
    """Draw one output from the exact one-step law; returns (y, draws)."""
    check_state(params, state)
    a = rng.normal(0.0, math.sqrt(params.sigma_a2))
    b = rng.normal(0.0, math.sqrt(params.sigma_b2))
    e = rng.normal(0.0, math.sqrt(params.sigma_e2))
    w = rng.normal(0.0, 1.0)
    u = rng.uniform(params.alpha1, params.alpha2)
    v = params.levels[x_next]
    if isinstance(state, Start):
        y = v + w + u
    else:
        y = v + a * params.levels[state.x_prev] + b * (state.y_prev - e) + w + u
    return y, {"a": a, "b": b, "e": e, "w": w, "u": u}


def draw_noise(
    params: ChannelParams, n: int, rng: np.random.Generator
) -> dict[str, np.ndarray]:
    """Draw the five per-step noise arrays for a path of length n+1.

    Call order is fixed (a, b, e, w, u) so that a given stream always
    yields the same draws.
    """
    size = n + 1
    return {
        "a": rng.normal(0.0, math.sqrt(params.sigma_a2), size),
        "b": rng.normal(0.0, math.sqrt(params.sigma_b2), size),
        "e": rng.normal(0.0, math.sqrt(params.sigma_e2), size),
        "w": rng.normal(0.0, 1.0, size),
        "u": rng.uniform(params.alpha1, params.alpha2, size),
    }


def simulate_outputs(
    params: ChannelParams,
    x: np.ndarray,
    noise: dict[str, np.ndarray],
    initial_state: ChannelState = START,
) -> np.ndarray:
    """Deterministically run the recursion for given inputs and draws."""
    levels = np.asarray(params.levels)
    xv = levels[np.atleast_2d(x)]
    nz = {k: np.atleast_2d(v) for k, v in noise.items()}
    if isinstance(initial_state, Start):
        startf, xpv, ypv = True, np.zeros(xv.shape[0]), np.zeros(xv.shape[0])
    else:
        startf = False
        xpv = np.full(xv.shape[0], levels[initial_state.x_prev])
        ypv = np.full(xv.shape[0], initial_state.y_prev)
    y = backend.kernels().simulate_paths(
        xv, nz["a"], nz["b"], nz["e"], nz["w"], nz["u"], startf, xpv, ypv
    )
    return y[0] if np.ndim(x) == 1 else y


def sample_trajectory(
    params: ChannelParams,
    input_model,
    n: int,
    rng: np.random.Generator,
    record_noise: bool = False,
    initial_state: ChannelState = START,
    seed_id: tuple[int, ...] = (),
) -> Trajectory:
    """Sample x_0^n from the input model and run the channel from the state.

    Draw order is fixed: input-path uniforms first, then the five noise
    arrays.  Fixed stream => identical trajectory, independent of how
    trajectories are grouped into batches.
    """
    from . import inputs  # local import to avoid a cycle

    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    x = inputs.sample_path(input_model, params.num_levels, n, rng)
    noise = draw_noise(params, n, rng)
    y = simulate_outputs(params, x, noise, initial_state)
    return Trajectory(
        x=x,
        y=y,
        noise=noise if record_noise else None,
        seed=tuple(seed_id),
        initial_state=initial_state,
    )


def expansion_from(params: ChannelParams, traj: Trajectory, k: int) -> float:
    """Closed-form value of y_n built from y_{k+1} and the later draws.

    Uses the unrolled recursion: with hatW_i = v[x_i] + a_i v[x_{i-1}]
    + w_i - b_i e_{i-1} + u_i,

        y_n = sum_{i=k+2}^{n} hatW_i prod_{j=i+1}^{n} b_j
              + y_{k+1} prod_{i=k+2}^{n} b_i.

    Requires recorded noise; n is the trajectory end.
    """
    if traj.noise is None:
        raise ValueError("expansion requires recorded noise")
    nz = traj.noise
    levels = np.asarray(params.levels)
    xv = levels[traj.x]
    n = len(traj.x) - 1
    if not 0 <= k + 1 <= n:
        raise ValueError(f"need 0 <= k+1 <= n, got k={k}, n={n}")
    total = 0.0
    for i in range(k + 2, n + 1):
        hat_w = xv[i] + nz["a"][i] * xv[i - 1] + nz["w"][i] - nz["b"][i] * nz["e"][i] + nz["u"][i]
        tail = float(np.prod(nz["b"][i + 1 : n + 1]))
        total += hat_w * tail
    total += traj.y[k + 1] * float(np.prod(nz["b"][k + 2 : n + 1]))
    return total
