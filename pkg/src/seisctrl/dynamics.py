"""Reservoir physics right-hand sides.

Modal diffusion of the depth-averaged pressure, region-averaged pressure
rates, seismicity-rate dynamics in both R and h = ln R form, and the
region/well input matrices used by the controller design.

The modal coefficients z are the coefficients of the depth-averaged
pressure field in the orthonormal sine basis, so ||z||_2 equals the L2
norm of the field.  Fluxes enter in m^3/hr and are converted to km^3/hr
internally; the B matrices map km^3/hr fluxes to log-rate velocities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import RectRegion, SineBasis, region_area
from .units import KM3_PER_M3

__all__ = [
    "PhysicalParams",
    "WellLayout",
    "RegionSet",
    "input_matrices",
    "modal_rhs_homogeneous",
    "region_pressure_rate",
    "sr_rhs",
    "sr_rhs_direct",
    "assemble_galerkin_operator",
    "modal_rhs_heterogeneous",
]

H_OVERFLOW_GUARD = 700.0


@dataclass(frozen=True)
class PhysicalParams:
    """Reservoir and seismicity-rate constants in canonical units."""

    c_hy: float = 3.6e-4        # hydraulic diffusivity, km^2/hr
    beta: float = 1.2e-4        # mixture compressibility, 1/MPa
    friction: float = 0.5       # mobilized friction coefficient, -
    tau0_dot: float = 1e-6      # background stressing rate, MPa/hr
    t_a: float = 500100.0       # characteristic decay time, hr
    domain_length: float = 5.0  # reservoir length, km
    depth: float = 0.1          # reservoir depth, km

    def __post_init__(self):
        for name in ("c_hy", "beta", "friction", "tau0_dot", "t_a",
                     "domain_length", "depth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def sr_gain(self) -> float:
        """f / (t_a tau0_dot): log-rate response per MPa of regional pressure."""
        return self.friction / (self.t_a * self.tau0_dot)


@dataclass(frozen=True)
class WellLayout:
    """Fixed (uncontrolled) and controlled injection points, km coordinates."""

    fixed: tuple[tuple[float, float], ...]
    controlled: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        pts = list(self.fixed) + list(self.controlled)
        if len(set(pts)) != len(pts):
            raise ValueError("well positions must be distinct")

    @property
    def all_wells(self) -> tuple[tuple[float, float], ...]:
        return tuple(self.fixed) + tuple(self.controlled)


class RegionSet:
    """Seismicity-rate averaging regions: signed rectangle unions.

    Volumes are area * depth; a point belongs to a region when the signed
    count of rectangles strictly containing it is positive.  Points on any
    rectangle edge have undecidable membership and are rejected.
    """

    def __init__(self, regions: list[list[RectRegion]], depth: float):
        if not regions:
            raise ValueError("need at least one region")
        self.regions = [list(r) for r in regions]
        self.depth = float(depth)
        self.areas = np.array([region_area(r) for r in self.regions])
        if np.any(self.areas <= 0):
            raise ValueError("every region must have positive signed area")
        self.volumes = self.areas * self.depth

    def __len__(self) -> int:
        return len(self.regions)

    def contains(self, i: int, x: float, y: float) -> bool:
        count = 0
        for rect in self.regions[i]:
            if rect.on_edge(x, y):
                raise ValueError(
                    f"point ({x}, {y}) lies on a boundary of region {i + 1}; "
                    "membership is undecidable")
            if rect.contains(x, y):
                count += rect.sign
        return count > 0

    def membership(self, wells) -> np.ndarray:
        """Boolean matrix: entry (i, j) is True when well j is in region i."""
        out = np.zeros((len(self), len(wells)), bool)
        for i in range(len(self)):
            for j, (x, y) in enumerate(wells):
                out[i, j] = self.contains(i, x, y)
        return out

    def integral_weights(self, basis: SineBasis) -> np.ndarray:
        """Stacked region integrals of every basis function, shape (m, K)."""
        return np.vstack([basis.region_integral(r) for r in self.regions])


def input_matrices(regions: RegionSet, wells: WellLayout,
                   p: PhysicalParams) -> tuple[np.ndarray, np.ndarray]:
    """Input matrices B_s (fixed wells) and B_c (controlled wells).

    Entry (i, j) is exactly f / (t_a tau0_dot beta V_i) when well j lies in
    region i and 0 otherwise, in (1/hr) per (km^3/hr).  With more controlled
    wells than regions the second matrix is the widened allocation-side
    input matrix.
    """
    def build(well_list):
        B = np.zeros((len(regions), len(well_list)))
        for j, (x, y) in enumerate(well_list):
            for i in range(len(regions)):
                if regions.contains(i, x, y):
                    B[i, j] = p.friction / (p.t_a * p.tau0_dot * p.beta
                                            * regions.volumes[i])
        return B

    return build(wells.fixed), build(wells.controlled)


def modal_rhs_homogeneous(z: np.ndarray, Q_s: np.ndarray, Q_c: np.ndarray,
                          p: PhysicalParams, basis: SineBasis,
                          wells: WellLayout) -> np.ndarray:
    """zdot_k = -c_hy lam_k z_k + (1/(beta D_z)) sum_j phi_k(x_j) Q_j.

    Fluxes are given in m^3/hr and converted to km^3/hr internally.
    """
    load_s = basis.point_load_matrix(list(wells.fixed))
    load_c = basis.point_load_matrix(list(wells.controlled))
    source = load_s @ (np.asarray(Q_s, float) * KM3_PER_M3)
    if load_c.shape[1]:
        source = source + load_c @ (np.asarray(Q_c, float) * KM3_PER_M3)
    return -p.c_hy * basis.lam * z + source / (p.beta * p.depth)


def region_pressure_rate(zdot: np.ndarray, region: list[RectRegion],
                         basis: SineBasis) -> float:
    """Mean pressure rate over a region in MPa/hr, by exact modal quadrature."""
    weights = basis.region_integral(region)
    return float(zdot @ weights) / region_area(region)


def sr_rhs(h: np.ndarray, mean_rates: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """Log seismicity-rate dynamics per region.

    hdot_i = (f/(t_a tau0_dot)) rate_i - (e^{h_i} - 1)/t_a.
    """
    h = np.asarray(h, float)
    if np.any(h > H_OVERFLOW_GUARD):
        raise ValueError(
            f"log seismicity rate exceeded overflow guard h > {H_OVERFLOW_GUARD}")
    return p.sr_gain * np.asarray(mean_rates, float) - np.expm1(h) / p.t_a


def sr_rhs_direct(R: np.ndarray, tau_dot: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """Seismicity-rate dynamics in the direct form Rdot = (R/t_a)(taudot/tau0 - R).

    Equivalence oracle for :func:`sr_rhs` under R = e^h; tau_dot is the
    regional Coulomb stressing rate in MPa/hr.
    """
    R = np.asarray(R, float)
    if np.any(R <= 0):
        raise ValueError("seismicity rate must be strictly positive")
    return (R / p.t_a) * (np.asarray(tau_dot, float) / p.tau0_dot - R)


def assemble_galerkin_operator(het, basis: SineBasis, p: PhysicalParams,
                               wells: WellLayout,
                               quad_points: int = 96) -> tuple[np.ndarray, np.ndarray]:
    """Weak-form operator for the variable-coefficient diffusion equation.

    A_kj = -integral c_hy(x) grad(phi_k) . grad(phi_j) dx by tensor
    Gauss-Legendre quadrature, and per-well source scales
    S_j = 1/(beta(x_wj) D_z).  A is symmetric negative definite; losing
    definiteness indicates an under-resolved quadrature grid and raises.
    """
    D = basis.domain_length
    K = basis.num_modes
    xg, wg = np.polynomial.legendre.leggauss(quad_points)
    xg = 0.5 * D * (xg + 1.0)
    wg = 0.5 * D * wg
    XX, YY = np.meshgrid(xg, xg, indexing="ij")
    cw = (het.c_hy(XX, YY) * np.outer(wg, wg)).ravel()

    n, m = basis.n, basis.m
    sin_n = np.sin(np.outer(n, xg) * np.pi / D)
    cos_n = np.cos(np.outer(n, xg) * np.pi / D)
    sin_m = np.sin(np.outer(m, xg) * np.pi / D)
    cos_m = np.cos(np.outer(m, xg) * np.pi / D)
    gx = np.empty((K, quad_points * quad_points))
    gy = np.empty((K, quad_points * quad_points))
    for k in range(K):
        gx[k] = (2.0 / D) * (n[k] * np.pi / D) * np.outer(cos_n[k], sin_m[k]).ravel()
        gy[k] = (2.0 / D) * (m[k] * np.pi / D) * np.outer(sin_n[k], cos_m[k]).ravel()
    A = -(gx * cw) @ gx.T - (gy * cw) @ gy.T

    top = np.linalg.eigvalsh(A).max()
    if top >= 0:
        raise ValueError(
            "Galerkin operator lost negative definiteness; quadrature grid "
            f"under-resolves the diffusivity field (max eigenvalue {top:.3e})")

    xs = np.array([w[0] for w in wells.all_wells])
    ys = np.array([w[1] for w in wells.all_wells])
    S = 1.0 / (het.beta(xs, ys) * p.depth)
    return A, S


def modal_rhs_heterogeneous(z: np.ndarray, Q_s: np.ndarray, Q_c: np.ndarray,
                            A: np.ndarray, S: np.ndarray, wells: WellLayout,
                            basis: SineBasis) -> np.ndarray:
    """zdot = A z + point loads scaled by the local source coefficients.

    Reduces to the homogeneous right-hand side for constant fields.  Fluxes
    in m^3/hr; S carries 1/(beta(x_w) D_z) per well in fixed-then-controlled
    order.
    """
    Q = np.concatenate([np.asarray(Q_s, float), np.asarray(Q_c, float)])
    load = basis.point_load_matrix(list(wells.all_wells))
    return A @ z + load @ (S * Q * KM3_PER_M3)
