"""Synthetic smooth heterogeneity fields for diffusivity and compressibility.

Each field is a log-space sum of six Gaussian bumps, reshaped so that the
ratio to the homogeneous value spans exactly ``range_decades`` orders of
magnitude while the spatial mean of the diffusivity ratio hits a target
value.  Bump centres are confined to a peripheral ring so the central
region block stays mild; the extreme values live near the domain edges.
Everything is a deterministic function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

__all__ = ["HeterogeneityField", "heterogeneity_generator"]

_NUM_BUMPS = 6
_RING_INNER = 1.8
_RING_OUTER = 2.2
_SIGMA_RANGE = (0.35, 0.55)
_AMP_RANGE = (0.5, 1.0)
_EDGE_MARGIN_FRACTION = 0.06


@dataclass(frozen=True)
class HeterogeneityField:
    """Positive scalar fields for c_hy(x) and beta(x) plus cached samples."""

    seed: int
    range_decades: float
    target_mean_ratio: float
    c_ratio: Callable[[np.ndarray, np.ndarray], np.ndarray]
    beta_ratio: Callable[[np.ndarray, np.ndarray], np.ndarray]
    c_hy_base: float
    beta_base: float
    grid_x: np.ndarray
    c_ratio_samples: np.ndarray
    beta_ratio_samples: np.ndarray

    def c_hy(self, x, y):
        """Absolute heterogeneous diffusivity in km^2/hr."""
        return self.c_hy_base * self.c_ratio(x, y)

    def beta(self, x, y):
        """Absolute heterogeneous compressibility in 1/MPa."""
        return self.beta_base * self.beta_ratio(x, y)

    @property
    def mean_c_ratio(self) -> float:
        return float(self.c_ratio_samples.mean())


def _bump_sum(rng: np.random.Generator, domain_length: float):
    """Six signed Gaussian bumps with centres on a peripheral ring."""
    centre = domain_length / 2.0
    angle = rng.uniform(0.0, 2.0 * np.pi, _NUM_BUMPS)
    radius = rng.uniform(_RING_INNER, _RING_OUTER, _NUM_BUMPS)
    margin = _EDGE_MARGIN_FRACTION * domain_length
    cx = np.clip(centre + radius * np.cos(angle), margin, domain_length - margin)
    cy = np.clip(centre + radius * np.sin(angle), margin, domain_length - margin)
    sigma = rng.uniform(*_SIGMA_RANGE, _NUM_BUMPS)
    magnitude = rng.uniform(*_AMP_RANGE, _NUM_BUMPS)
    signs = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    rng.shuffle(signs)
    amp = magnitude * signs

    def g(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        out = np.zeros(np.broadcast(x, y).shape)
        for i in range(_NUM_BUMPS):
            out += amp[i] * np.exp(-((x - cx[i])**2 + (y - cy[i])**2)
                                   / (2.0 * sigma[i]**2))
        return out

    return g


def _shaped_ratio(rng: np.random.Generator, domain_length: float,
                  decades: float, mean_target: float, grid_x: np.ndarray):
    """Ratio field 10^(lo + decades * ghat^p), mean-matched on the grid.

    ghat is the bump sum min-max normalised to [0, 1] on the cache grid, so
    the ratio attains both ends of its band.  The exponent p reshapes the
    distribution inside the band; the mean of 10^(lo + decades * ghat^p) is
    strictly decreasing in p, so a unique p matches the target mean.
    """
    if decades == 0.0:
        const = float(mean_target)

        def ratio(x, y):
            return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, const)

        XX, YY = np.meshgrid(grid_x, grid_x, indexing="ij")
        return ratio, ratio(XX, YY)

    g = _bump_sum(rng, domain_length)
    XX, YY = np.meshgrid(grid_x, grid_x, indexing="ij")
    samples = g(XX, YY)
    g_lo, g_hi = samples.min(), samples.max()
    ghat_grid = (samples - g_lo) / (g_hi - g_lo)
    # band centred so a mid plateau sits near ratio one
    lo_exp = -decades * 2.0 / 3.0

    def grid_mean(p):
        return float(np.mean(10.0 ** (lo_exp + decades * ghat_grid ** p)))

    p = brentq(lambda q: grid_mean(q) - mean_target, 1e-3, 200.0, xtol=1e-13)

    def ratio(x, y):
        ghat = np.clip((g(x, y) - g_lo) / (g_hi - g_lo), 0.0, 1.0)
        return 10.0 ** (lo_exp + decades * ghat ** p)

    return ratio, ratio(XX, YY)


def heterogeneity_generator(seed: int, range_decades: float = 3.0,
                            target_mean_ratio: float = 1.08,
                            c_hy_base: float = 3.6e-4,
                            beta_base: float = 1.2e-4,
                            domain_length: float = 5.0,
                            grid_points: int = 96) -> HeterogeneityField:
    """Deterministic heterogeneity field pair for one seed.

    The diffusivity ratio has spatial mean ``target_mean_ratio`` (within the
    root-solve tolerance on the cache grid); the compressibility ratio is
    drawn from the same stream with mean one.  Both ratios stay inside
    [10^(-2/3 decades), 10^(decades/3)].
    """
    if target_mean_ratio <= 0:
        raise ValueError("target_mean_ratio must be positive")
    if range_decades < 0:
        raise ValueError("range_decades must be non-negative")
    rng = np.random.default_rng(seed)
    grid_x = (np.arange(grid_points) + 0.5) * domain_length / grid_points
    c_ratio, c_samples = _shaped_ratio(rng, domain_length, range_decades,
                                       target_mean_ratio, grid_x)
    beta_ratio, b_samples = _shaped_ratio(rng, domain_length, range_decades,
                                          1.0, grid_x)
    return HeterogeneityField(
        seed=seed,
        range_decades=range_decades,
        target_mean_ratio=target_mean_ratio,
        c_ratio=c_ratio,
        beta_ratio=beta_ratio,
        c_hy_base=c_hy_base,
        beta_base=beta_base,
        grid_x=grid_x,
        c_ratio_samples=c_samples,
        beta_ratio_samples=b_samples,
    )
