"""Block mutual-information gap bounds.

Restart gap: for an independent copy of the input block sent from a
resumed state (x, y),

    |I(X_0^n;Y_0^n) - I(block | X=x, Y=y)|
        <= 2 (k+1) log M + (n-k) (sa2 v[x]^2 + 2 sb2 (y^2 + se2)) sb2^k log M

for any k <= n.  Both sides are estimated by the per-trajectory
log-likelihood-ratio statistic (unnormalized block sums).

Window gap: under a stationary i.i.d. input law, the per-symbol MI of
the window starting at m differs from the time-0 window by at most the
composite ledger envelope

    3 (k+1) log(2 pi e m3)/(n+1) + 2 m3 pi e (m8 + 3 m9) sb2^k
    + (m4 + m5 m3)/(n+1)
    + (m6 + 4 m1 m3 m7 / (1-sb)^2 + 12 m3 m7 / ((n+1)(1-sb2))) sb2^k .

Window MIs need the pre-window history marginalized inside both the
conditional and the marginal density; that marginalization is exact
(quadrature over the pre-window output on a certified one-dimensional
grid, enumeration over the pre-window inputs), so the estimator is the
same likelihood-ratio statistic built from window densities.
"""

from __future__ import annotations

import math

import numpy as np

from .. import _kernels_py, rng
from ..channel import gh_rule
from ..constants import constants_ledger
from ..inputs import IIDInput, InputModel, uniform_iid
from ..params import START, ChannelParams, Resumed
from ..quadcert import gauss_legendre_panels
from ..rates import trajectory_statistics
from .report import ReportTimer, VerificationReport


def _block_mi_stats(params, model, n, budget, seed, state=None):
    stats = trajectory_statistics(
        params, model, n, budget, seed,
        initial_state=state if state is not None else START,
    )
    t = stats["ll_cond"] - stats["ll_out"]
    return float(t.mean()), float(t.std(ddof=1) / math.sqrt(len(t)))


def check_restart_mi_gap(
    params: ChannelParams,
    n: int = 6,
    k: int = 3,
    state_grid=((0, 0.0), (0, 2.0), (1, 0.0), (1, 2.0)),
    budget: int = 4000,
    seed: int = 0,
    model: InputModel | None = None,
) -> VerificationReport:
    timer = ReportTimer("restart_mi_gap", "restart-mi-gap-bound")
    if n > 8:
        raise ValueError("desk-scale check: n <= 8")
    if model is None:
        model = uniform_iid(params.num_levels)
    M = params.num_levels
    log_m = math.log(M) if M > 1 else 0.0
    v = np.asarray(params.levels)
    i_start, se_start = _block_mi_stats(params, model, n, budget, seed)
    for x_idx, y_val in state_grid:
        i_state, se_state = _block_mi_stats(
            params, model, n, budget, rng.derive_seed(seed, 7, x_idx, int(y_val * 1000)),
            state=Resumed(int(x_idx), float(y_val)),
        )
        bound = 2.0 * (k + 1) * log_m + (n - k) * (
            params.sigma_a2 * float(v[x_idx]) ** 2
            + 2.0 * params.sigma_b2 * (y_val**2 + params.sigma_e2)
        ) * params.sigma_b2**k * log_m
        timer.add(
            f"state (x={x_idx}, y={y_val}) k={k}",
            abs(i_start - i_state), bound, 3.0 * math.hypot(se_start, se_state),
            i_start=i_start, i_state=i_state,
        )
    return timer.finish()


# ---------------------------------------------------------------------------
# window MI with the pre-window history marginalized exactly


def _prewindow_tables(params, m, grid, nodes):
    """f(y_{m-1} | x_0^{m-1}) on ``grid`` for all M^m pre-window inputs."""
    v = np.asarray(params.levels)
    M = len(v)
    gh = gh_rule(params, nodes)
    if m == 1:
        return np.stack(
            [_kernels_py.start_density(grid, float(v[x]), params.alpha1, params.alpha2)
             for x in range(M)]
        )
    if m == 2:
        inner, iw = gauss_legendre_panels(grid[0], grid[-1], max(12, len(grid) // 12), nodes=12)
        out = np.empty((M * M, len(grid)))
        for x0 in range(M):
            f0 = _kernels_py.start_density(inner, float(v[x0]), params.alpha1, params.alpha2)
            for x1 in range(M):
                step = _kernels_py.step_density(
                    grid[None, :], inner[:, None], float(v[x0]), float(v[x1]),
                    params.sigma_a2, params.sigma_b2, params.alpha1, params.alpha2,
                    gh[0], gh[1],
                )
                out[x0 * M + x1] = (f0 * iw) @ step
        return out
    raise ValueError("pre-window marginalization implemented for m in {1, 2}")


class WindowMarginalizer:
    """Exact window densities with the pre-window history integrated out.

    The pre-window output is integrated on a one-dimensional quadrature
    grid and the pre-window inputs are enumerated; both window densities
    (conditional on the window inputs, and fully marginal) then follow
    from ordinary forward steps.  Requires an i.i.d. input law (the
    pre-window inputs decouple from the window inputs) and m in {1, 2}.
    """

    def __init__(self, params, model, m, nodes=32):
        if not isinstance(model, IIDInput):
            raise ValueError("window marginalization requires an i.i.d. input law")
        self.params = params
        self.m = m
        self.nodes = nodes
        self.v = np.asarray(params.levels)
        self.M = len(self.v)
        self.p = np.asarray(model.probs)
        self.gh = gh_rule(params, nodes)
        lo = float(self.v.min()) + params.alpha1 - 14.0
        hi = float(self.v.max()) + params.alpha2 + 14.0
        self.grid, self.gw = gauss_legendre_panels(lo, hi, 40, nodes=12)
        self.tables = _prewindow_tables(params, m, self.grid, nodes)
        pre_probs = np.ones(1)
        for _ in range(m):
            pre_probs = np.kron(pre_probs, self.p)
        self.pre_probs = pre_probs
        # joint weight over (last pre-window symbol, grid node)
        joint = np.zeros((self.M, len(self.grid)))
        for pre in range(self.M**m):
            joint[pre % self.M] += pre_probs[pre] * self.tables[pre]
        self.joint = joint
        # f(y_{m-1}) mixture for the conditional's first factor
        self.mix = pre_probs @ self.tables

    def _dens(self, y, y_prev, v_prev, v_next):
        par = self.params
        return _kernels_py.step_density(
            y, y_prev, v_prev, v_next,
            par.sigma_a2, par.sigma_b2, par.alpha1, par.alpha2,
            self.gh[0], self.gh[1],
        )

    def log_densities(self, x, y):
        """(log f(y_w | x_w), log f(y_w)) for the window x[m:], y[m:]."""
        m, v, p, M = self.m, self.v, self.p, self.M
        first_given_pre = self._dens(y[m], self.grid, float(v[x[m - 1]]), float(v[x[m]]))
        cond = float((self.mix * self.gw * first_given_pre).sum())
        rest = 0.0
        for t in range(m + 1, len(y)):
            d = float(self._dens(y[t], y[t - 1], float(v[x[t - 1]]), float(v[x[t]]))[0])
            rest += math.log(d)
        log_cond = math.log(cond) + rest

        msg = np.zeros(M)
        for s_next in range(M):
            dens = self._dens(y[m], self.grid[None, :], v[:, None], float(v[s_next]))
            msg[s_next] = p[s_next] * float((self.joint * dens * self.gw[None, :]).sum())
        c = msg.sum()
        log_marg = math.log(c)
        msg = msg / c
        for t in range(m + 1, len(y)):
            dmat = self._dens(y[t], y[t - 1], v[:, None], v[None, :])
            new = (msg[:, None] * dmat * p[None, :]).sum(axis=0)
            c = new.sum()
            log_marg += math.log(c)
            msg = new / c
        return log_cond, log_marg


def check_window_mi_gap(
    params: ChannelParams,
    n: int = 6,
    k: int = 3,
    starts=(0, 1, 2),
    budget: int = 1200,
    seed: int = 0,
    model: InputModel | None = None,
    nodes: int = 32,
) -> VerificationReport:
    timer = ReportTimer("window_mi_gap", "window-mi-gap-bound")
    ledger = constants_ledger(params)
    if model is None:
        model = uniform_iid(params.num_levels)
    if not isinstance(model, IIDInput):
        raise ValueError("window check requires an i.i.d. input law")
    sb = math.sqrt(params.sigma_b2)
    envelope = (
        3.0 * (k + 1) * math.log(2 * math.pi * math.e * ledger.m3) / (n + 1)
        + 2.0 * ledger.m3 * math.pi * math.e * (ledger.m8 + 3.0 * ledger.m9) * params.sigma_b2**k
        + (ledger.m4 + ledger.m5 * ledger.m3) / (n + 1)
        + (
            ledger.m6
            + 4.0 * ledger.m1 * ledger.m3 * ledger.m7 / (1.0 - sb) ** 2
            + 12.0 * ledger.m3 * ledger.m7 / ((n + 1) * (1.0 - params.sigma_b2))
        )
        * params.sigma_b2**k
    )
    base_mi, base_se = _window_mi(params, model, 0, n, budget, seed, nodes)
    for m in starts:
        if m == 0:
            timer.add("start m=0 (identical windows)", 0.0, envelope, 0.0)
            continue
        mi, se = _window_mi(params, model, m, n, budget, seed, nodes)
        timer.add(
            f"start m={m} k={k}",
            abs(mi - base_mi) / (n + 1), envelope, 3.0 * math.hypot(base_se, se) / (n + 1),
            window_mi=mi, base_mi=base_mi,
        )
    return timer.finish()


def _window_mi(params, model, m, n, budget, seed, nodes):
    """Unnormalized window MI estimate and its standard error."""
    from ..channel import draw_noise, simulate_outputs
    from ..forward import conditional_loglik_batch, output_loglik_batch
    from ..inputs import sample_path

    vals = np.empty(budget)
    if m == 0:
        stats = trajectory_statistics(params, model, n, budget, seed)
        t = stats["ll_cond"] - stats["ll_out"]
        return float(t.mean()), float(t.std(ddof=1) / math.sqrt(budget))
    marginalizer = WindowMarginalizer(params, model, m, nodes)
    for i in range(budget):
        gen = rng.stream(seed, rng.TRAJECTORY, 900000 + i)
        x = sample_path(model, params.num_levels, m + n, gen)
        noise = draw_noise(params, m + n, gen)
        y = simulate_outputs(params, x, noise)
        log_cond, log_marg = marginalizer.log_densities(x, y)
        vals[i] = log_cond - log_marg
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(budget))
