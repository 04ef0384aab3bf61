"""Sine eigenbasis of the Dirichlet Laplacian on the square reservoir.

The basis functions

    phi_nm(x, y) = (2/D) sin(n pi x / D) sin(m pi y / D)

are L2-orthonormal on [0, D]^2 and satisfy -Laplacian(phi) = lambda phi with

    lambda_nm = pi^2 (n^2 + m^2) / D^2.

Modes are enumerated row-major in (n, m) on an N x N tensor grid; an
optional truncation keeps the ``num_modes`` lowest-eigenvalue modes (ties
broken by row-major position) while preserving row-major relative order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RectRegion",
    "SineBasis",
    "eigenvalue",
    "region_area",
]


def eigenvalue(n: int, m: int, domain_length: float) -> float:
    """Dirichlet Laplacian eigenvalue pi^2 (n^2 + m^2) / D^2 in 1/km^2."""
    if n < 1 or m < 1:
        raise ValueError(f"mode indices must be >= 1, got ({n}, {m})")
    if domain_length <= 0:
        raise ValueError(f"domain length must be positive, got {domain_length}")
    return np.pi**2 * (n * n + m * m) / domain_length**2


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned rectangle with a sign, one term of a signed region union."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    sign: int = 1

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError(f"degenerate rectangle {self}")
        if self.sign not in (1, -1):
            raise ValueError(f"rectangle sign must be +1 or -1, got {self.sign}")

    @property
    def area(self) -> float:
        return (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)

    def contains(self, x: float, y: float) -> bool:
        """Strict interior test."""
        return self.x_lo < x < self.x_hi and self.y_lo < y < self.y_hi

    def on_edge(self, x: float, y: float) -> bool:
        touching_x = x in (self.x_lo, self.x_hi) and self.y_lo <= y <= self.y_hi
        touching_y = y in (self.y_lo, self.y_hi) and self.x_lo <= x <= self.x_hi
        return touching_x or touching_y


def region_area(region: list[RectRegion]) -> float:
    """Signed area of a rectangle union (holes carry sign -1)."""
    return sum(r.sign * r.area for r in region)


class SineBasis:
    """Truncated sine eigenbasis on the square [0, D]^2."""

    def __init__(self, domain_length: float, modes_per_axis: int,
                 num_modes: int | None = None):
        if domain_length <= 0:
            raise ValueError("domain length must be positive")
        if modes_per_axis < 1:
            raise ValueError("modes_per_axis must be >= 1")
        full = modes_per_axis * modes_per_axis
        if num_modes is None:
            num_modes = full
        if not (1 <= num_modes <= full):
            raise ValueError(
                f"num_modes must be in [1, {full}], got {num_modes}")

        self.domain_length = float(domain_length)
        self.modes_per_axis = int(modes_per_axis)

        n_all = np.repeat(np.arange(1, modes_per_axis + 1), modes_per_axis)
        m_all = np.tile(np.arange(1, modes_per_axis + 1), modes_per_axis)
        lam_all = np.pi**2 * (n_all**2 + m_all**2).astype(float) / domain_length**2
        # lowest-eigenvalue truncation, stable in row-major order
        keep = np.sort(np.argsort(lam_all, kind="stable")[:num_modes])
        self.n = n_all[keep]
        self.m = m_all[keep]
        self.lam = lam_all[keep]

    @property
    def num_modes(self) -> int:
        return len(self.lam)

    def _check_inside(self, x, y, strict: bool):
        D = self.domain_length
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if strict:
            ok = (x > 0) & (x < D) & (y > 0) & (y < D)
        else:
            ok = (x >= 0) & (x <= D) & (y >= 0) & (y <= D)
        if not np.all(ok):
            raise ValueError(f"point(s) outside the domain [0, {D}]^2")

    def eval_modes(self, x, y) -> np.ndarray:
        """All basis functions at point(s); shape (..., K).  Boundary gives 0."""
        self._check_inside(x, y, strict=False)
        D = self.domain_length
        x = np.asarray(x, float)[..., None]
        y = np.asarray(y, float)[..., None]
        vals = (2.0 / D) * np.sin(self.n * np.pi * x / D) * np.sin(self.m * np.pi * y / D)
        # Dirichlet boundary is exact, not just to roundoff
        on_bnd = (x == 0.0) | (x == D) | (y == 0.0) | (y == D)
        return np.where(on_bnd, 0.0, vals)

    def rect_integral(self, rect: RectRegion) -> np.ndarray:
        """Closed-form integral of every basis function over a signed rect (km)."""
        D = self.domain_length
        n, m = self.n, self.m
        fx = (D / (n * np.pi)) * (np.cos(n * np.pi * rect.x_lo / D)
                                  - np.cos(n * np.pi * rect.x_hi / D))
        fy = (D / (m * np.pi)) * (np.cos(m * np.pi * rect.y_lo / D)
                                  - np.cos(m * np.pi * rect.y_hi / D))
        return rect.sign * (2.0 / D) * fx * fy

    def region_integral(self, region: list[RectRegion]) -> np.ndarray:
        """Signed sum of rect integrals over a rectangle union (km)."""
        if not region:
            raise ValueError("region must contain at least one rectangle")
        total = np.zeros(self.num_modes)
        for rect in region:
            total += self.rect_integral(rect)
        return total

    def point_load_matrix(self, wells: list[tuple[float, float]]) -> np.ndarray:
        """Modal loads for Dirac sources at the wells; shape (K, n_wells).

        Entry (k, j) is phi_k evaluated at well j.  A well on the boundary
        would be annihilated by the basis and is rejected.
        """
        if not wells:
            return np.zeros((self.num_modes, 0))
        xs = np.array([w[0] for w in wells], float)
        ys = np.array([w[1] for w in wells], float)
        self._check_inside(xs, ys, strict=True)
        return self.eval_modes(xs, ys).T

    def reconstruct_field(self, z: np.ndarray, nx: int, ny: int) -> np.ndarray:
        """Pressure grid u(x_i, y_j) = sum_k z_k phi_k on an inclusive grid.

        Returns shape (nx, ny) with the first index along x; boundary rows
        and columns are exactly zero.
        """
        z = np.asarray(z, float)
        if z.shape != (self.num_modes,):
            raise ValueError(f"expected {self.num_modes} coefficients, got {z.shape}")
        D = self.domain_length
        x = np.linspace(0.0, D, nx)
        y = np.linspace(0.0, D, ny)
        sx = np.sin(np.outer(x, self.n) * np.pi / D)   # (nx, K)
        sy = np.sin(np.outer(y, self.m) * np.pi / D)   # (ny, K)
        sx[0, :] = 0.0
        sx[-1, :] = 0.0
        sy[0, :] = 0.0
        sy[-1, :] = 0.0
        return (2.0 / D) * (sx * z) @ sy.T
