"""Exact path log-densities: conditional on the inputs, and marginalized.

The marginal log f(y_0^n) is computed by the scaled forward recursion
over the compiled input lattice: messages over input-history states,
per-step transition weights = input transition probability times the
one-step output density, renormalized every step with the log-normalizers
accumulated.  Given y there is no Monte Carlo error; the only numerical
error is the erase-noise quadrature.
"""

from __future__ import annotations

import math

import numpy as np

from . import backend, inputs
from .channel import DEFAULT_NODES, gh_rule
from .errors import QuadratureUnderflow, StateSpaceTooLarge
from .inputs import DEFAULT_STATE_CAP, InputModel, Lattice
from .params import START, ChannelParams, ChannelState, Resumed, Start, check_state


def _state_arrays(params: ChannelParams, state: ChannelState, batch: int):
    if isinstance(state, Start):
        return True, np.zeros(batch), np.zeros(batch)
    check_state(params, state)
    return (
        False,
        np.full(batch, params.levels[state.x_prev], dtype=np.float64),
        np.full(batch, state.y_prev, dtype=np.float64),
    )


def conditional_loglik_batch(
    params: ChannelParams,
    x: np.ndarray,
    y: np.ndarray,
    initial_state: ChannelState = START,
    nodes: int = DEFAULT_NODES,
) -> np.ndarray:
    """log f(y | x) for a batch of equal-length paths; rows independent."""
    x = np.atleast_2d(np.asarray(x, dtype=np.int64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape:
        raise ValueError(f"x and y must share shape, got {x.shape} vs {y.shape}")
    levels = np.asarray(params.levels)
    xv = levels[x]
    start, xpv, ypv = _state_arrays(params, initial_state, x.shape[0])
    gh_e, gh_w = gh_rule(params, nodes)
    ll, bad = backend.kernels().conditional_loglik(
        y, xv, start, xpv, ypv,
        params.sigma_a2, params.sigma_b2, params.alpha1, params.alpha2, gh_e, gh_w,
    )
    if np.any(bad >= 0):
        row = int(np.argmax(bad >= 0))
        raise QuadratureUnderflow(
            f"conditional density underflowed at step {bad[row]}", step=int(bad[row])
        )
    return ll


def log_conditional_density(
    params: ChannelParams,
    x,
    y,
    initial_state: ChannelState = START,
    nodes: int = DEFAULT_NODES,
) -> float:
    """log f(y_0^n | x_0^n) in nats, one path."""
    return float(conditional_loglik_batch(params, [x], [y], initial_state, nodes)[0])


def _check_cap(params: ChannelParams, model: InputModel, state_cap: int) -> None:
    if isinstance(model, inputs.MarkovInput):
        m = model.order
    else:
        m = 1
    if params.num_levels ** max(m, 1) > state_cap:
        raise StateSpaceTooLarge(
            f"{params.num_levels}^{max(m, 1)} input-history states exceed the cap {state_cap}"
        )


def output_loglik_batch(
    params: ChannelParams,
    model: InputModel,
    y: np.ndarray,
    initial_state: ChannelState = START,
    nodes: int = DEFAULT_NODES,
    state_cap: int = DEFAULT_STATE_CAP,
) -> np.ndarray:
    """log f(y) for a batch of output paths, exactly marginalized over inputs.

    For the shifted-block law the marginal is the uniform phase mixture,
    computed as a log-sum-exp over per-phase forward passes.
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    _check_cap(params, model, state_cap)
    comps = inputs.compile_lattices(model, params.num_levels, state_cap)
    start, xpv, ypv = _state_arrays(params, initial_state, y.shape[0])
    gh_e, gh_w = gh_rule(params, nodes)
    levels = np.asarray(params.levels, dtype=np.float64)
    terms = []
    for weight, lat in comps:
        ll, bad = backend.kernels().forward_loglik(
            y, levels, lat.last, lat.trans, lat.init_probs, start, xpv, ypv,
            params.sigma_a2, params.sigma_b2, params.alpha1, params.alpha2, gh_e, gh_w,
        )
        if np.any(bad >= 0):
            row = int(np.argmax(bad >= 0))
            raise QuadratureUnderflow(
                f"forward normalizer underflowed at step {bad[row]}", step=int(bad[row])
            )
        terms.append(math.log(weight) + ll)
    if len(terms) == 1:
        return terms[0]
    stacked = np.stack(terms)
    peak = stacked.max(axis=0)
    return peak + np.log(np.exp(stacked - peak).sum(axis=0))


def log_output_density(
    params: ChannelParams,
    model: InputModel,
    y,
    initial_state: ChannelState = START,
    nodes: int = DEFAULT_NODES,
    state_cap: int = DEFAULT_STATE_CAP,
) -> float:
    """log f(y_0^n) in nats, one path."""
    return float(output_loglik_batch(params, model, [y], initial_state, nodes, state_cap)[0])


class ForwardLattice:
    """Step-by-step forward recursion retaining the per-step messages.

    Python reference path used by diagnostics and tests; the kernels
    compute the same recursion without storing messages.  Messages are
    probability vectors over the lattice states; ``log_normalizer`` is
    the accumulated log f(y_0^t).
    """

    def __init__(
        self,
        params: ChannelParams,
        lattice: Lattice,
        initial_state: ChannelState = START,
        nodes: int = DEFAULT_NODES,
    ):
        self.params = params
        self.lattice = lattice
        self.initial_state = initial_state
        self.nodes = nodes
        self.messages: list[np.ndarray] = []
        self.log_normalizer = 0.0
        self._y_prev: float | None = None

    def _densities(self, y: float, y_prev: float | None) -> np.ndarray:
        from .channel import log_initial_density, log_transition_density

        levels = np.asarray(self.params.levels, dtype=np.float64)
        lv = levels[self.lattice.last]
        if y_prev is None:
            if isinstance(self.initial_state, Resumed):
                vp = self.params.levels[self.initial_state.x_prev]
                logd = log_transition_density(
                    self.params, y, self.initial_state.y_prev, vp, lv, self.nodes
                )
            else:
                logd = np.array(
                    [log_initial_density(self.params, int(i), y) for i in self.lattice.last]
                )
        else:
            prev_lv = levels[self.lattice.last]
            logd = log_transition_density(
                self.params,
                y,
                y_prev,
                prev_lv[:, None],
                lv[None, :],
                self.nodes,
            )
        return np.exp(logd)

    def step(self, y: float) -> np.ndarray:
        """Advance one observation; returns the new normalized message."""
        if not self.messages:
            dens = self._densities(y, None)
            msg = self.lattice.init_probs * dens
        else:
            dens = self._densities(y, self._y_prev)
            weights = self.lattice.trans * dens
            msg = self.messages[-1] @ weights
        c = float(msg.sum())
        if c <= 0.0:
            raise QuadratureUnderflow(
                f"forward normalizer underflowed at step {len(self.messages)}",
                step=len(self.messages),
            )
        self.log_normalizer += math.log(c)
        msg = msg / c
        self.messages.append(msg)
        self._y_prev = float(y)
        return msg

    def run(self, y_path) -> float:
        for value in np.asarray(y_path, dtype=np.float64):
            self.step(float(value))
        return self.log_normalizer
