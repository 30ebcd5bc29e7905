"""Channel parameters and channel state.

The channel read at time n is

    Y_0 = X_0 + W_0 + U_0
    Y_n = X_n + A_n X_{n-1} + B_n (Y_{n-1} - E_{n-1}) + W_n + U_n,   n >= 1,

with A, B, E, W independent zero-mean Gaussians of variances sigma_a2,
sigma_b2, sigma_e2 and 1, and U uniform on (alpha1, alpha2).  The variance
of W is pinned to 1 and is therefore not a parameter.  Stability of the
output power requires 0 < sigma_b2 < 1.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import BadAlphabet, BadInterval, OutOfRange


@dataclass(frozen=True)
class ChannelParams:
    sigma_a2: float
    sigma_b2: float
    sigma_e2: float
    alpha1: float
    alpha2: float
    levels: tuple[float, ...]

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def alpha_width(self) -> float:
        return self.alpha2 - self.alpha1

    def fingerprint(self) -> str:
        text = repr(
            (
                self.sigma_a2,
                self.sigma_b2,
                self.sigma_e2,
                self.alpha1,
                self.alpha2,
                self.levels,
            )
        )
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Start:
    """Time-0 state: no intercell interference, Y = X + W + U."""


@dataclass(frozen=True)
class Resumed:
    """Channel restarted from a known (input index, output value) pair.

    The next output is X + A v[x_prev] + B (y_prev - E) + W + U, i.e. the
    generic recursion step seeded with this state.
    """

    x_prev: int
    y_prev: float


START = Start()

ChannelState = Union[Start, Resumed]


def validate_params(raw: Mapping[str, object] | None = None, **kwargs) -> ChannelParams:
    """Validate a raw parameter record and return frozen ChannelParams.

    Accepts either a mapping or keyword arguments with keys sigma_a2,
    sigma_b2, sigma_e2, alpha1, alpha2, levels.
    """
    record: dict[str, object] = dict(raw or {})
    record.update(kwargs)
    required = ("sigma_a2", "sigma_b2", "sigma_e2", "alpha1", "alpha2", "levels")
    missing = [k for k in required if k not in record]
    if missing:
        raise OutOfRange(f"missing parameter(s): {', '.join(missing)}")

    def as_float(key: str) -> float:
        try:
            value = float(record[key])  # type: ignore[arg-type]
        except (TypeError, ValueError) as exc:
            raise OutOfRange(f"{key} is not numeric: {record[key]!r}") from exc
        if not math.isfinite(value):
            raise OutOfRange(f"{key} must be finite, got {value}")
        return value

    sigma_a2 = as_float("sigma_a2")
    sigma_b2 = as_float("sigma_b2")
    sigma_e2 = as_float("sigma_e2")
    alpha1 = as_float("alpha1")
    alpha2 = as_float("alpha2")

    if sigma_a2 < 0:
        raise OutOfRange(f"sigma_a2 must be >= 0, got {sigma_a2}")
    if sigma_e2 < 0:
        raise OutOfRange(f"sigma_e2 must be >= 0, got {sigma_e2}")
    # sigma_b2 = 0 is admitted as the degenerate memoryless case; every
    # bound in the toolkit holds there (the contraction factor is 0).
    if not 0 <= sigma_b2 < 1:
        raise OutOfRange(f"sigma_b2 must lie in [0, 1), got {sigma_b2}")
    if not 0 < alpha1 < alpha2:
        raise BadInterval(
            f"uniform-noise support needs 0 < alpha1 < alpha2, got ({alpha1}, {alpha2})"
        )

    levels_raw = record["levels"]
    if not isinstance(levels_raw, Sequence) or isinstance(levels_raw, (str, bytes)):
        raise BadAlphabet(f"levels must be a sequence, got {levels_raw!r}")
    try:
        levels = tuple(float(v) for v in levels_raw)
    except (TypeError, ValueError) as exc:
        raise BadAlphabet(f"levels must be numeric: {levels_raw!r}") from exc
    if not levels:
        raise BadAlphabet("levels must be non-empty")
    if any(not math.isfinite(v) for v in levels):
        raise BadAlphabet(f"levels must be finite: {levels}")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise BadAlphabet(f"levels must be strictly increasing: {levels}")

    return ChannelParams(sigma_a2, sigma_b2, sigma_e2, alpha1, alpha2, levels)


def check_state(params: ChannelParams, state: ChannelState) -> None:
    """Raise if a Resumed state is inconsistent with the parameter set."""
    if isinstance(state, Resumed):
        if not 0 <= state.x_prev < params.num_levels:
            raise BadAlphabet(
                f"resume index {state.x_prev} outside alphabet of size {params.num_levels}"
            )
        if not math.isfinite(state.y_prev):
            raise OutOfRange(f"resume output must be finite, got {state.y_prev}")
