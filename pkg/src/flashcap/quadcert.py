"""Quadrature with explicit error accounting.

The output densities evaluated here are finite Gaussian mixtures (the
erase noise is already on a Gauss-Hermite rule and the uniform smoothing
keeps component means inside a known interval), so truncated tails admit
exact closed-form bounds component by component.  Grid error is
controlled by refinement comparison; the erase-rule error by node
doubling.  Checks report the sum of these as their certified error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .params import ChannelParams

_SQRT_HALF = math.sqrt(0.5)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def normal_sf(z) -> np.ndarray:
    """Upper tail of the standard normal, exact via erfc."""
    return 0.5 * erfc(np.asarray(z, dtype=np.float64) * _SQRT_HALF)


def _phi(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def gauss_mass_above(mu, sigma, t):
    return normal_sf((t - mu) / sigma)


def gauss_second_moment_above(mu, sigma, t):
    """Exact integral of y^2 N(mu, sigma^2) over y > t."""
    z = (t - mu) / sigma
    return (mu**2 + sigma**2) * normal_sf(z) + sigma * (2.0 * mu + sigma * z) * _phi(z)


@dataclass(frozen=True)
class MixtureEnvelope:
    """Tail description of a computed step-density: per-node sigmas with
    component means confined to [mean_lo, mean_hi]."""

    weights: np.ndarray
    sigmas: np.ndarray
    mean_lo: float
    mean_hi: float

    def mass_outside(self, lo: float, hi: float) -> float:
        above = (self.weights * gauss_mass_above(self.mean_hi, self.sigmas, hi)).sum()
        below = (self.weights * gauss_mass_above(-self.mean_lo, self.sigmas, -lo)).sum()
        return float(above + below)

    def second_moment_outside(self, lo: float, hi: float) -> float:
        above = (
            self.weights * gauss_second_moment_above(self.mean_hi, self.sigmas, hi)
        ).sum()
        below = (
            self.weights * gauss_second_moment_above(-self.mean_lo, self.sigmas, -lo)
        ).sum()
        return float(above + below)


def step_mixture_envelope(
    params: ChannelParams, y_prev: float, v_prev: float, gh_e: np.ndarray, gh_w: np.ndarray,
    v_next_lo: float, v_next_hi: float,
) -> MixtureEnvelope:
    sig = np.sqrt(
        params.sigma_a2 * v_prev**2 + params.sigma_b2 * (y_prev - gh_e) ** 2 + 1.0
    )
    return MixtureEnvelope(
        weights=gh_w.copy(),
        sigmas=sig,
        mean_lo=v_next_lo + params.alpha1,
        mean_hi=v_next_hi + params.alpha2,
    )


def start_mixture_envelope(
    params: ChannelParams, v_next_lo: float, v_next_hi: float
) -> MixtureEnvelope:
    return MixtureEnvelope(
        weights=np.ones(1),
        sigmas=np.ones(1),
        mean_lo=v_next_lo + params.alpha1,
        mean_hi=v_next_hi + params.alpha2,
    )


def trapezoid_grid(lo: float, hi: float, points: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform grid with trapezoid weights."""
    x = np.linspace(lo, hi, points)
    w = np.full(points, (hi - lo) / (points - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def gauss_legendre_panels(
    lo: float, hi: float, panels: int, nodes: int = 16
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [lo, hi]."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return x, wts


def output_bounds(params: ChannelParams, margin: float = 12.0, spread: float = 1.0) -> tuple[float, float]:
    """A [lo, hi] window containing all means plus ``margin`` deviations."""
    lo = min(params.levels) + params.alpha1 - margin * spread
    hi = max(params.levels) + params.alpha2 + margin * spread
    return lo, hi
