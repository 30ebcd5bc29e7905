"""Monte Carlo estimators of the entropy and information rates.

The estimators are the path-density concentration statistics: a batch of
independent trajectories is simulated, each contributes

    t_Y  = -(1/(n+1)) log f(Y_0^n)              (exact forward marginal)
    t_XY = -(1/(n+1)) [log p(X_0^n) + log f(Y_0^n | X_0^n)]

and batch means with batch-means standard errors are reported.  H(X) is
computed in closed form from the input law (no Monte Carlo noise), and

    I = H(Y) - (H(X,Y) - H(X)).

For the shifted-block law the finite-n block entropy of the inputs has no
closed form; the mutual-information statistic then uses the per-path
log-likelihood ratio (log f(y|x) - log f(y))/(n+1), which has the block
mutual information as its exact mean, and H(X) is reported as the
entropy rate.

Reduction is an ordered fold by trajectory index and every trajectory
owns a counter-based stream, so results are identical for any worker
count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import inputs, rng
from .channel import DEFAULT_NODES, draw_noise, simulate_outputs
from .forward import conditional_loglik_batch, output_loglik_batch
from .inputs import DEFAULT_STATE_CAP, InputModel
from .params import START, ChannelParams, ChannelState, Resumed

_CHUNK_ROWS = 32


@dataclass(frozen=True)
class RateEstimate:
    value: float
    stderr: float
    n: int
    batches: int
    method: str
    params_fingerprint: str
    input_fingerprint: str
    seed: int

    def as_record(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "n": self.n,
            "batches": self.batches,
            "method": self.method,
            "params_fingerprint": self.params_fingerprint,
            "input_fingerprint": self.input_fingerprint,
            "seed": self.seed,
        }


def _simulate_chunk(params, model, n, seed, indices, initial_state, nodes, state_cap):
    xs, ys, log_px = [], [], []
    for i in indices:
        gen = rng.stream(seed, rng.TRAJECTORY, i)
        x = inputs.sample_path(model, params.num_levels, n, gen)
        noise = draw_noise(params, n, gen)
        y = simulate_outputs(params, x, noise, initial_state)
        xs.append(x)
        ys.append(y)
        log_px.append(inputs.log_path_prob(model, params.num_levels, x))
    x_arr = np.stack(xs)
    y_arr = np.stack(ys)
    ll_cond = conditional_loglik_batch(params, x_arr, y_arr, initial_state, nodes)
    ll_out = output_loglik_batch(params, model, y_arr, initial_state, nodes, state_cap)
    return np.asarray(log_px), ll_cond, ll_out


def trajectory_statistics(
    params: ChannelParams,
    model: InputModel,
    n: int,
    batches: int,
    seed: int,
    initial_state: ChannelState = START,
    nodes: int = DEFAULT_NODES,
    state_cap: int = DEFAULT_STATE_CAP,
    workers: int = 1,
) -> dict[str, np.ndarray]:
    """Per-trajectory statistics (arrays of length ``batches``).

    Keys: 'h_y', 'h_xy', 'log_px', 'll_cond', 'll_out'.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if batches < 2:
        raise ValueError(f"batches must be >= 2, got {batches}")
    chunks = []
    for lo in range(0, batches, _CHUNK_ROWS):
        chunks.append(list(range(lo, min(lo + _CHUNK_ROWS, batches))))

    def work(chunk):
        return _simulate_chunk(
            params, model, n, seed, chunk, initial_state, nodes, state_cap
        )

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    log_px = np.concatenate([r[0] for r in results])
    ll_cond = np.concatenate([r[1] for r in results])
    ll_out = np.concatenate([r[2] for r in results])
    scale = 1.0 / (n + 1)
    return {
        "h_y": -scale * ll_out,
        "h_xy": -scale * (log_px + ll_cond),
        "log_px": log_px,
        "ll_cond": ll_cond,
        "ll_out": ll_out,
    }


def _batch_mean(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return mean, stderr


def estimate_entropy_rates(
    params: ChannelParams,
    model: InputModel,
    n: int,
    batches: int = 16,
    seed: int = 0,
    initial_state: ChannelState = START,
    nodes: int = DEFAULT_NODES,
    state_cap: int = DEFAULT_STATE_CAP,
    workers: int = 1,
) -> dict[str, RateEstimate]:
    """Estimates of H(Y), H(X,Y), H(X) and I(X;Y), in nats per symbol."""
    stats = trajectory_statistics(
        params, model, n, batches, seed, initial_state, nodes, state_cap, workers
    )
    pfp = params.fingerprint()
    ifp = inputs.fingerprint(model)

    def make(value, stderr, method):
        return RateEstimate(value, stderr, n, batches, method, pfp, ifp, seed)

    hy, hy_se = _batch_mean(stats["h_y"])
    hxy, hxy_se = _batch_mean(stats["h_xy"])
    hx_exact = inputs.exact_block_entropy(model, params.num_levels, n)
    if hx_exact is not None:
        hx_est = make(hx_exact, 0.0, "closed-form")
        i_stats = stats["h_y"] - stats["h_xy"] + hx_exact
        i_method = "aep-decomposition"
    else:
        hx_est = make(inputs.entropy_rate(model, params.num_levels), 0.0, "entropy-rate-limit")
        i_stats = (stats["ll_cond"] - stats["ll_out"]) / (n + 1)
        i_method = "likelihood-ratio"
    i_val, i_se = _batch_mean(i_stats)
    return {
        "H_Y": make(hy, hy_se, "aep-batch-means"),
        "H_XY": make(hxy, hxy_se, "aep-batch-means"),
        "H_X": hx_est,
        "I": make(i_val, i_se, i_method),
    }


def rate_from_state(
    params: ChannelParams,
    model: InputModel,
    state: Resumed,
    n: int,
    batches: int = 16,
    seed: int = 0,
    nodes: int = DEFAULT_NODES,
    state_cap: int = DEFAULT_STATE_CAP,
    workers: int = 1,
) -> RateEstimate:
    """Conditional information rate started from a resumed state.

    Same estimator as ``estimate_entropy_rates`` except the first channel
    step uses the resumed transition kernel; the input process is a fresh
    independent copy.  Returns the I estimate.
    """
    if not isinstance(state, Resumed):
        raise TypeError("rate_from_state requires a Resumed state")
    return estimate_entropy_rates(
        params, model, n, batches, seed, state, nodes, state_cap, workers
    )["I"]
