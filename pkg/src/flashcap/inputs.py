"""Input-process laws: i.i.d., order-m Markov, independent blocks, shifted blocks.

Every law is compiled to the same object, a ``Lattice``: a finite Markov
chain whose states each remember the last emitted symbol.  The forward
pass, path sampling and path probabilities all run off the lattice, so
one implementation serves all four variants:

* i.i.d.: one state per symbol, rows all equal to p.
* order-m Markov: states are the symbol-histories seen so far (length
  1..m while the history builds up, then sliding length-m windows); the
  first m symbols follow the stationary law of the chain.
* independent blocks: states are prefixes of the current block; at a
  block boundary the law restarts from the block law's first marginal.
* shifted block: the block process started at a uniformly random phase;
  handled as an explicit mixture of per-phase lattices.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import backend
from .errors import StateSpaceTooLarge

PROB_ATOL = 1e-12
STATIONARY_ATOL = 1e-10
DEFAULT_STATE_CAP = 10**6


# ---------------------------------------------------------------------------
# model types


@dataclass(frozen=True)
class IIDInput:
    probs: tuple[float, ...]

    @property
    def order(self) -> int:
        return 0


@dataclass(frozen=True)
class MarkovInput:
    """Order-m chain; ``transitions[h]`` is the row for history index h.

    Histories of length m are indexed lexicographically with the most
    recent symbol in the least-significant digit.  The first m symbols
    follow the stationary law of the history chain.
    """

    order: int
    transitions: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class BlockInput:
    """Blocks of length block_len drawn i.i.d. from a joint law.

    ``block_probs`` is the flattened joint law over alphabet^block_len in
    lexicographic order (first symbol most significant).
    """

    block_len: int
    block_probs: tuple[float, ...]


@dataclass(frozen=True)
class ShiftedBlockInput:
    """The block process observed from a uniformly random phase.

    Averaging the block process over a uniform start phase in
    {0..block_len-1} makes it stationary; this is the blocking device
    used to compare block laws against stationary input laws.
    """

    base: BlockInput


InputModel = Union[IIDInput, MarkovInput, BlockInput, ShiftedBlockInput]


# ---------------------------------------------------------------------------
# validation and fingerprints


def _check_prob_vector(vec: np.ndarray, what: str) -> None:
    if np.any(vec < 0):
        raise ValueError(f"{what} has negative entries")
    if abs(float(vec.sum()) - 1.0) > PROB_ATOL:
        raise ValueError(f"{what} sums to {vec.sum()!r}, not 1")


def validate_input_model(model: InputModel, num_levels: int) -> None:
    if isinstance(model, IIDInput):
        p = np.asarray(model.probs, dtype=np.float64)
        if p.shape != (num_levels,):
            raise ValueError(f"probs must have length {num_levels}, got {p.shape}")
        _check_prob_vector(p, "iid law")
    elif isinstance(model, MarkovInput):
        if model.order < 1:
            raise ValueError("Markov order must be >= 1 (use IIDInput for order 0)")
        t = np.asarray(model.transitions, dtype=np.float64)
        expect = (num_levels**model.order, num_levels)
        if t.shape != expect:
            raise ValueError(f"transitions must have shape {expect}, got {t.shape}")
        for row in t:
            _check_prob_vector(row, "transition row")
        mu = stationary_history_law(model, num_levels)
        push = _history_push(mu, t, num_levels, model.order)
        if np.max(np.abs(push - mu)) > STATIONARY_ATOL:
            raise ValueError("initial history law is not stationary for the chain")
    elif isinstance(model, BlockInput):
        if model.block_len < 1:
            raise ValueError("block length must be >= 1")
        q = np.asarray(model.block_probs, dtype=np.float64)
        if q.shape != (num_levels**model.block_len,):
            raise ValueError(
                f"block law must have length {num_levels**model.block_len}, got {q.shape}"
            )
        _check_prob_vector(q, "block law")
    elif isinstance(model, ShiftedBlockInput):
        validate_input_model(model.base, num_levels)
    else:
        raise TypeError(f"unknown input model {model!r}")


def fingerprint(model: InputModel) -> str:
    text = repr(model)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# stationary law of the Markov history chain


def _history_push(mu: np.ndarray, trans: np.ndarray, M: int, m: int) -> np.ndarray:
    """One application of the history-chain transition operator to mu."""
    size = M**m
    out = np.zeros_like(mu)
    base = (np.arange(size) * M) % size
    for x in range(M):
        np.add.at(out, base + x, mu * trans[:, x])
    return out


_STATIONARY_CACHE: dict[tuple, np.ndarray] = {}


def stationary_history_law(model: MarkovInput, num_levels: int) -> np.ndarray:
    """Stationary distribution over length-m histories.

    Damped power iteration from the uniform law (the damping removes
    oscillation on periodic chains without moving the fixed point); stops
    when an undamped application moves the law by < 1e-13 in max norm.
    """
    key = (model, num_levels)
    cached = _STATIONARY_CACHE.get(key)
    if cached is not None:
        return cached
    M, m = num_levels, model.order
    trans = np.asarray(model.transitions, dtype=np.float64)
    mu = np.full(M**m, 1.0 / M**m)
    for _ in range(200000):
        pushed = _history_push(mu, trans, M, m)
        if np.max(np.abs(pushed - mu)) < 1e-13:
            mu = pushed
            break
        mu = 0.5 * mu + 0.5 * pushed
    mu = np.maximum(mu, 0.0)
    mu /= mu.sum()
    mu.setflags(write=False)
    if len(_STATIONARY_CACHE) > 512:
        _STATIONARY_CACHE.clear()
    _STATIONARY_CACHE[key] = mu
    return mu


# ---------------------------------------------------------------------------
# compiled lattice


@dataclass(frozen=True)
class Lattice:
    """Finite input chain with per-state last-symbol labels.

    trans[s, s'] is the one-step transition probability; last[s] is the
    symbol (level index) the chain emitted on entering s; init_probs is
    the time-0 state law (the state entered on emitting x_0).
    """

    trans: np.ndarray
    last: np.ndarray
    init_probs: np.ndarray

    @property
    def num_states(self) -> int:
        return self.trans.shape[0]

    def cdfs(self) -> tuple[np.ndarray, np.ndarray]:
        rows = self.trans.copy()
        zero = rows.sum(axis=1) <= 0
        if np.any(zero):
            rows[zero] = 1.0 / rows.shape[1]
        return np.cumsum(self.init_probs), np.cumsum(rows, axis=1)


def _marginal(tensor: np.ndarray, keep: int) -> np.ndarray:
    """Marginal of a joint tensor over its first ``keep`` axes."""
    if keep == tensor.ndim:
        return tensor
    return tensor.sum(axis=tuple(range(keep, tensor.ndim)))


def _prefix_states(M: int, max_len: int):
    states = []
    for length in range(1, max_len + 1):
        states.extend(itertools.product(range(M), repeat=length))
    return states


def _markov_lattice(model: MarkovInput, M: int) -> Lattice:
    m = model.order
    trans_rows = np.asarray(model.transitions, dtype=np.float64)
    mu = stationary_history_law(model, M).reshape((M,) * m)
    states = _prefix_states(M, m)
    index = {s: i for i, s in enumerate(states)}
    S = len(states)
    trans = np.zeros((S, S))
    init = np.zeros(S)
    for x in range(M):
        init[index[(x,)]] = float(_marginal(mu, 1)[x])
    for s, sid in index.items():
        j = len(s)
        if j < m:
            marg_j = _marginal(mu, j)
            marg_j1 = _marginal(mu, j + 1)
            denom = float(marg_j[s])
            if denom > 0:
                for x in range(M):
                    trans[sid, index[s + (x,)]] = float(marg_j1[s + (x,)]) / denom
        else:
            h_idx = 0
            for sym in s:
                h_idx = h_idx * M + sym
            for x in range(M):
                trans[sid, index[s[1:] + (x,)]] = trans_rows[h_idx, x]
    last = np.array([s[-1] for s in states], dtype=np.int64)
    return Lattice(trans=trans, last=last, init_probs=init)


def _block_phase_lattice(first: np.ndarray, steady: np.ndarray, M: int) -> Lattice:
    """Lattice for a block process whose first block has law ``first``.

    ``first`` and ``steady`` are joint tensors with shapes (M,)*L1 and
    (M,)*L2; after the first block completes, blocks are i.i.d. from
    ``steady`` forever.
    """
    L1, L2 = first.ndim, steady.ndim
    states = [("f",) + s for s in _prefix_states(M, L1)] + [
        ("s",) + s for s in _prefix_states(M, L2)
    ]
    index = {s: i for i, s in enumerate(states)}
    S = len(states)
    trans = np.zeros((S, S))
    init = np.zeros(S)
    for x in range(M):
        init[index[("f", x)]] = float(_marginal(first, 1)[x])

    def fill(prefix_tagged, tensor, L):
        tag, s = prefix_tagged[0], prefix_tagged[1:]
        sid = index[prefix_tagged]
        j = len(s)
        if j < L:
            denom = float(_marginal(tensor, j)[s])
            if denom > 0:
                marg = _marginal(tensor, j + 1)
                for x in range(M):
                    trans[sid, index[(tag,) + s + (x,)]] = float(marg[s + (x,)]) / denom
        else:
            head = _marginal(steady, 1)
            for x in range(M):
                trans[sid, index[("s", x)]] = float(head[x])

    for s in _prefix_states(M, L1):
        fill(("f",) + s, first, L1)
    for s in _prefix_states(M, L2):
        fill(("s",) + s, steady, L2)
    last = np.array([s[-1] for s in states], dtype=np.int64)
    return Lattice(trans=trans, last=last, init_probs=init)


_LATTICE_CACHE: dict[tuple, list[tuple[float, Lattice]]] = {}


def compile_lattices(
    model: InputModel, num_levels: int, state_cap: int = DEFAULT_STATE_CAP
) -> list[tuple[float, Lattice]]:
    """Compile a model to a mixture of (weight, lattice) components.

    IID/Markov/Block laws compile to a single component; the shifted
    block law is a uniform mixture over its block_len phases.  Compiled
    lattices are cached (models are frozen) and must be treated as
    read-only.
    """
    key = (model, num_levels, state_cap)
    cached = _LATTICE_CACHE.get(key)
    if cached is not None:
        return cached
    M = num_levels
    validate_input_model(model, M)
    if isinstance(model, IIDInput):
        p = np.asarray(model.probs, dtype=np.float64)
        lat = Lattice(
            trans=np.tile(p, (M, 1)),
            last=np.arange(M, dtype=np.int64),
            init_probs=p.copy(),
        )
        comps = [(1.0, lat)]
    elif isinstance(model, MarkovInput):
        if M ** max(model.order, 1) > state_cap:
            raise StateSpaceTooLarge(
                f"{M}^{model.order} histories exceed the cap {state_cap}"
            )
        comps = [(1.0, _markov_lattice(model, M))]
    elif isinstance(model, BlockInput):
        q = np.asarray(model.block_probs, dtype=np.float64).reshape((M,) * model.block_len)
        comps = [(1.0, _block_phase_lattice(q, q, M))]
    else:
        q = np.asarray(model.base.block_probs, dtype=np.float64).reshape(
            (M,) * model.base.block_len
        )
        L = model.base.block_len
        comps = []
        for nu in range(L):
            first = q.sum(axis=tuple(range(nu))) if nu else q
            comps.append((1.0 / L, _block_phase_lattice(first, q, M)))
    for _, lat in comps:
        if lat.num_states > state_cap:
            raise StateSpaceTooLarge(
                f"lattice has {lat.num_states} states, cap is {state_cap}"
            )
        lat.trans.setflags(write=False)
        lat.last.setflags(write=False)
        lat.init_probs.setflags(write=False)
    if len(_LATTICE_CACHE) > 256:
        _LATTICE_CACHE.clear()
    _LATTICE_CACHE[key] = comps
    return comps


# ---------------------------------------------------------------------------
# sampling, path probabilities, entropies


def sample_path(
    model: InputModel, num_levels: int, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw x_0^n.  For the shifted block law the phase is drawn first."""
    comps = compile_lattices(model, num_levels)
    if len(comps) == 1:
        lat = comps[0][1]
    else:
        nu = int(rng.integers(0, len(comps)))
        lat = comps[nu][1]
    init_cdf, trans_cdf = lat.cdfs()
    unif = rng.random((1, n + 1))
    states = backend.kernels().sample_lattice_paths(init_cdf, trans_cdf, unif)
    return lat.last[states[0]]


def lattice_path_logprob_reference(lat: Lattice, x: np.ndarray) -> float:
    """log P(path) by walking the lattice state by state (test oracle)."""
    # From a state and a next symbol there is at most one successor with
    # that last symbol and positive probability.
    state = None
    total = 0.0
    for sid, p in enumerate(lat.init_probs):
        if lat.last[sid] == x[0] and p > 0:
            state = sid
            total = math.log(p)
            break
    if state is None:
        return -math.inf
    for t in range(1, len(x)):
        nxt = None
        for sid in np.nonzero(lat.trans[state] > 0)[0]:
            if lat.last[sid] == x[t]:
                nxt = int(sid)
                break
        if nxt is None:
            return -math.inf
        total += math.log(lat.trans[state, nxt])
        state = nxt
    return total


def _safe_log_sum(values: np.ndarray) -> float:
    if np.any(values <= 0):
        return -math.inf
    return float(np.log(values).sum())


def _block_logprob(q: np.ndarray, L: int, M: int, x: np.ndarray) -> float:
    """log prob of a path under i.i.d. blocks with joint tensor q."""
    powers = M ** np.arange(L - 1, -1, -1)
    flat = q.ravel()
    n1 = len(x)
    full, rem = divmod(n1, L)
    total = 0.0
    if full:
        idx = x[: full * L].reshape(full, L) @ powers
        total += _safe_log_sum(flat[idx])
    if math.isinf(total):
        return -math.inf
    if rem:
        marg = _marginal(q, rem)
        p = float(marg[tuple(x[full * L :])])
        if p <= 0:
            return -math.inf
        total += math.log(p)
    return total


def _phase_logprob(q: np.ndarray, L: int, M: int, nu: int, x: np.ndarray) -> float:
    """log prob of a path under the block process started at phase nu."""
    if nu == 0:
        return _block_logprob(q, L, M, x)
    head_len = L - nu
    first = q.sum(axis=tuple(range(nu)))
    n1 = len(x)
    if n1 <= head_len:
        p = float(_marginal(first, n1)[tuple(x[:n1])])
        return math.log(p) if p > 0 else -math.inf
    p = float(first[tuple(x[:head_len])])
    if p <= 0:
        return -math.inf
    return math.log(p) + _block_logprob(q, L, M, x[head_len:])


def log_path_prob(model: InputModel, num_levels: int, x: np.ndarray) -> float:
    """Exact log P(X_0^n = x) under the model."""
    M = num_levels
    x = np.asarray(x, dtype=np.int64)
    if isinstance(model, IIDInput):
        p = np.asarray(model.probs, dtype=np.float64)
        return _safe_log_sum(p[x])
    if isinstance(model, MarkovInput):
        m = model.order
        mu = stationary_history_law(model, M).reshape((M,) * m)
        n1 = len(x)
        if n1 <= m:
            p = float(_marginal(mu, n1)[tuple(x[:n1])])
            return math.log(p) if p > 0 else -math.inf
        p0 = float(mu[tuple(x[:m])])
        if p0 <= 0:
            return -math.inf
        rows = np.asarray(model.transitions, dtype=np.float64)
        powers = M ** np.arange(m - 1, -1, -1)
        windows = np.lib.stride_tricks.sliding_window_view(x, m)
        hist = windows[: n1 - m] @ powers
        return math.log(p0) + _safe_log_sum(rows[hist, x[m:]])
    if isinstance(model, BlockInput):
        q = np.asarray(model.block_probs, dtype=np.float64).reshape((M,) * model.block_len)
        return _block_logprob(q, model.block_len, M, x)
    if isinstance(model, ShiftedBlockInput):
        L = model.base.block_len
        q = np.asarray(model.base.block_probs, dtype=np.float64).reshape((M,) * L)
        terms = [_phase_logprob(q, L, M, nu, x) - math.log(L) for nu in range(L)]
        peak = max(terms)
        if peak == -math.inf:
            return -math.inf
        return peak + math.log(sum(math.exp(t - peak) for t in terms))
    raise TypeError(f"unknown input model {model!r}")


def _entropy(vec: np.ndarray) -> float:
    vec = vec[vec > 0]
    return float(-(vec * np.log(vec)).sum())


def entropy_rate(model: InputModel, num_levels: int) -> float:
    """Per-symbol entropy rate of the process, in nats."""
    if isinstance(model, IIDInput):
        return _entropy(np.asarray(model.probs, dtype=np.float64))
    if isinstance(model, MarkovInput):
        mu = stationary_history_law(model, num_levels)
        rows = np.asarray(model.transitions, dtype=np.float64)
        return float(sum(mu[h] * _entropy(rows[h]) for h in range(len(mu))))
    if isinstance(model, BlockInput):
        q = np.asarray(model.block_probs, dtype=np.float64)
        return _entropy(q) / model.block_len
    if isinstance(model, ShiftedBlockInput):
        return entropy_rate(model.base, num_levels)
    raise TypeError(f"unknown input model {model!r}")


def exact_block_entropy(model: InputModel, num_levels: int, n: int) -> float | None:
    """H(X_0^n)/(n+1) in closed form, or None when unavailable.

    Available for i.i.d. (= the rate), Markov (stationary prefix entropy
    plus per-step conditional entropies) and block laws (full blocks plus
    the trailing partial-block marginal).  The shifted block law is a
    mixture whose finite-n block entropy has no closed form; callers fall
    back to the entropy rate.
    """
    M = num_levels
    if isinstance(model, IIDInput):
        return entropy_rate(model, M)
    if isinstance(model, MarkovInput):
        m = model.order
        mu = stationary_history_law(model, M).reshape((M,) * m)
        k = min(n + 1, m)
        h = _entropy(_marginal(mu, k).ravel())
        if n + 1 > m:
            h += (n + 1 - m) * entropy_rate(model, M)
        return h / (n + 1)
    if isinstance(model, BlockInput):
        q = np.asarray(model.block_probs, dtype=np.float64).reshape((M,) * model.block_len)
        full, rem = divmod(n + 1, model.block_len)
        h = full * _entropy(q.ravel())
        if rem:
            h += _entropy(_marginal(q, rem).ravel())
        return h / (n + 1)
    if isinstance(model, ShiftedBlockInput):
        return None
    raise TypeError(f"unknown input model {model!r}")


def uniform_iid(num_levels: int) -> IIDInput:
    return IIDInput(probs=tuple([1.0 / num_levels] * num_levels))
