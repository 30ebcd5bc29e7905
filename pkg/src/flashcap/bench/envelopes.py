"""Two-sided log-density envelopes.

Single step: for any resume output with |y_prev| <= m_tilde and any
level pair, the one-step conditional density satisfies

    0 >= log f(y | y_prev, x_prev, x) >= -(m4 + m5 y^2),

and the same envelope holds for the input-suffix conditional density
with the resume output marginalized (that marginal is also estimated
here by prefix averaging).  Window joints: for the first L outputs under
a stationary input law,

    0 >= log f(y_0^{L-1}) >= -(L m6 + m7 sum y_i^2),

evaluated exactly by the forward recursion on a product grid, and for a
window starting at t=2 via Monte Carlo marginalization of the prefix.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .. import _kernels_py, rng
from ..channel import gh_rule
from ..constants import constants_ledger
from ..forward import output_loglik_batch
from ..inputs import InputModel, uniform_iid
from ..params import ChannelParams
from .report import ReportTimer, VerificationReport


def check_density_envelopes(
    params: ChannelParams,
    max_window: int = 3,
    y_points: int = 101,
    y_span: float = 5.0,
    window_axis_points: int = 5,
    shifted_window_start: int = 2,
    shifted_samples: int = 4000,
    seed: int = 0,
    nodes: int = 32,
) -> list[VerificationReport]:
    step_timer = ReportTimer("step_logdensity_envelope", "step-logdensity-envelope")
    window_timer = ReportTimer("window_logdensity_envelope", "window-logdensity-envelope")
    ledger = constants_ledger(params)
    v = np.asarray(params.levels)
    M = len(v)
    gh = gh_rule(params, nodes)
    model = uniform_iid(M)

    # --- single-step, pointwise over resume outputs within the threshold
    ygrid = np.linspace(-y_span, y_span, y_points)
    env_step = ledger.m4 + ledger.m5 * ygrid**2
    for y_prev in np.linspace(-ledger.m_tilde, ledger.m_tilde, 5):
        for xp in range(M):
            for xn in range(M):
                dens = _kernels_py.step_density(
                    ygrid, float(y_prev), float(v[xp]), float(v[xn]),
                    params.sigma_a2, params.sigma_b2, params.alpha1, params.alpha2,
                    gh[0], gh[1],
                )
                logd = np.log(dens)
                label = f"step y_prev={y_prev:.2f} x=({xp},{xn})"
                # lower side: -log f <= m4 + m5 y^2 pointwise
                worst = int(np.argmax(-logd - env_step))
                step_timer.add(
                    f"{label} lower(worst y={ygrid[worst]:.2f})",
                    -logd[worst], env_step[worst], 0.0,
                )
                step_timer.add(f"{label} upper", float(logd.max()), 0.0, 0.0)

    # --- single-step with the resume output marginalized (prefix-averaged)
    gen = rng.stream(seed, rng.BENCH, 50)
    t_mid = 4
    per = shifted_samples
    x_paths = np.stack(
        [gen.integers(0, M, t_mid + 1) for _ in range(per)]
    )
    xv = v[x_paths]
    y = None
    for t in range(t_mid):
        a = gen.normal(0.0, math.sqrt(params.sigma_a2), per)
        b = gen.normal(0.0, math.sqrt(params.sigma_b2), per)
        e = gen.normal(0.0, math.sqrt(params.sigma_e2), per)
        w = gen.normal(0.0, 1.0, per)
        u = gen.uniform(params.alpha1, params.alpha2, per)
        y = xv[:, 0] + w + u if t == 0 else xv[:, t] + a * xv[:, t - 1] + b * (y - e) + w + u
    for xn in range(M):
        dens = _kernels_py.step_density(
            ygrid[None, :], y[:, None], xv[:, t_mid - 1][:, None], float(v[xn]),
            params.sigma_a2, params.sigma_b2, params.alpha1, params.alpha2,
            gh[0], gh[1],
        ).mean(axis=0)
        logd = np.log(dens)
        worst = int(np.argmax(-logd - env_step))
        step_timer.add(
            f"marginalized step t={t_mid} x_next={xn} lower(worst y={ygrid[worst]:.2f})",
            -logd[worst], env_step[worst], 0.05,
            note="prefix averaged over Monte Carlo draws",
        )
        step_timer.add(f"marginalized step t={t_mid} x_next={xn} upper", float(logd.max()), 0.0, 0.0)

    # --- window joints from time 0, exact forward marginal
    axis = np.linspace(float(v.min()) - 2.0, float(v.max()) + params.alpha2 + 2.0, window_axis_points)
    for L in range(1, max_window + 1):
        pts = np.array(list(itertools.product(axis, repeat=L)))
        ll = output_loglik_batch(params, model, pts, nodes=nodes)
        env = L * ledger.m6 + ledger.m7 * (pts**2).sum(axis=1)
        worst = int(np.argmax(-ll - env))
        window_timer.add(
            f"window L={L} lower(worst at {np.round(pts[worst], 2)})",
            float(-ll[worst]), float(env[worst]), 0.0,
        )
        window_timer.add(f"window L={L} upper", float(ll.max()), 0.0, 0.0)

    # --- shifted window joint via prefix Monte Carlo (start at t=2, L<=3)
    m0 = shifted_window_start
    for L in range(1, max_window + 1):
        pts = np.array(list(itertools.product(axis, repeat=L)))
        logf = _shifted_window_logdensity(params, model, m0, pts, shifted_samples, seed, gh)
        env = L * ledger.m6 + ledger.m7 * (pts**2).sum(axis=1)
        worst = int(np.argmax(-logf - env))
        window_timer.add(
            f"window start={m0} L={L} lower(worst at {np.round(pts[worst], 2)})",
            float(-logf[worst]), float(env[worst]), 0.05,
            note="prefix averaged over Monte Carlo draws",
        )
        window_timer.add(f"window start={m0} L={L} upper", float(logf.max()), 0.0, 0.0)
    return [step_timer.finish(), window_timer.finish()]


def _shifted_window_logdensity(params, model, start, pts, samples, seed, gh):
    """log f(y_start^{start+L-1}) at each grid tuple, prefix by Monte Carlo.

    Inputs and the outputs before ``start`` are simulated; conditional on
    each draw the window density is the product of one-step densities,
    and the sample average is the marginal.
    """
    v = np.asarray(params.levels)
    M = len(v)
    gen = rng.stream(seed, rng.BENCH, 51)
    L = pts.shape[1]
    x = np.stack([gen.integers(0, M, start + L) for _ in range(samples)])
    xv = v[x]
    y = None
    for t in range(start):
        a = gen.normal(0.0, math.sqrt(params.sigma_a2), samples)
        b = gen.normal(0.0, math.sqrt(params.sigma_b2), samples)
        e = gen.normal(0.0, math.sqrt(params.sigma_e2), samples)
        w = gen.normal(0.0, 1.0, samples)
        u = gen.uniform(params.alpha1, params.alpha2, samples)
        y = xv[:, 0] + w + u if t == 0 else xv[:, t] + a * xv[:, t - 1] + b * (y - e) + w + u
    dens = np.ones((samples, len(pts)))
    y_prev = np.tile(y[:, None], (1, len(pts)))
    for j in range(L):
        t = start + j
        d = _kernels_py.step_density(
            pts[None, :, j], y_prev, xv[:, t - 1][:, None], xv[:, t][:, None],
            params.sigma_a2, params.sigma_b2, params.alpha1, params.alpha2,
            gh[0], gh[1],
        )
        dens *= d
        y_prev = np.tile(pts[None, :, j], (samples, 1))
    return np.log(dens.mean(axis=0))
