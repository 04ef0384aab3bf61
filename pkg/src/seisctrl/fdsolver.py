"""Finite-difference reference solver for the pressure diffusion problem.

Independent oracle for the spectral path: second-order central differences
on the divergence form div(c_hy(x) grad u) over a cell-centred n x n grid
with Dirichlet walls, point sources as nearest-cell loads scaled by
1/(beta_cell * cell_area * D_z), and theta time stepping (Crank-Nicolson
by default, explicit Euler with a CFL guard when theta = 0).

Region means use partial-cell area weights so they converge at the
scheme's second order instead of being limited by mask quantisation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as sparse_linalg

from .basis import RectRegion
from .units import KM3_PER_M3

__all__ = ["FdResult", "FdInstabilityError", "fd_reference_solver"]


class FdInstabilityError(RuntimeError):
    pass


@dataclass
class FdResult:
    """Probe and region-mean pressure series from the reference solver."""

    t: np.ndarray                 # (n_t,)
    probes: np.ndarray            # (n_t, n_probes) MPa
    region_means: np.ndarray      # (n_t, n_regions) MPa
    grid_n: int
    dt: float


def _face_conductivity(cc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Harmonic-mean face values; Dirichlet walls at half-cell distance."""
    n = cc.shape[0]
    harm = lambda a, b: 2.0 * a * b / (a + b)
    cfx = np.zeros((n + 1, n))
    cfx[1:n] = harm(cc[:-1], cc[1:])
    cfx[0] = 2.0 * cc[0]
    cfx[n] = 2.0 * cc[-1]
    cfy = np.zeros((n, n + 1))
    cfy[:, 1:n] = harm(cc[:, :-1], cc[:, 1:])
    cfy[:, 0] = 2.0 * cc[:, 0]
    cfy[:, n] = 2.0 * cc[:, -1]
    return cfx, cfy


def _laplacian(cfx: np.ndarray, cfy: np.ndarray, h: float) -> sparse.csr_matrix:
    """Five-point divergence-form operator on flat index k = i*n + j."""
    n = cfx.shape[1]
    inv_h2 = 1.0 / (h * h)
    main = (-(cfx[:-1] + cfx[1:] + cfy[:, :-1] + cfy[:, 1:]) * inv_h2).ravel()
    # x neighbours sit n apart; value on A[k, k-n] is cfx[i, j] for i >= 1
    x_band = (cfx[1:-1] * inv_h2).ravel()
    # y neighbours sit 1 apart; zero at row seams (j = 0 has no j-1 coupling)
    y_pad = np.zeros((n, n))
    y_pad[:, :n - 1] = cfy[:, 1:-1] * inv_h2
    y_band = y_pad.ravel()[:n * n - 1]
    return sparse.diags(
        [main, x_band, x_band, y_band, y_band],
        [0, -n, n, -1, 1], shape=(n * n, n * n), format="csr")


def _rect_cell_weights(rect: RectRegion, n: int, h: float) -> np.ndarray:
    """Fraction of every cell covered by the rectangle, with its sign."""
    lo = np.arange(n) * h
    hi = lo + h
    fx = np.clip(np.minimum(hi, rect.x_hi) - np.maximum(lo, rect.x_lo), 0.0, None) / h
    fy = np.clip(np.minimum(hi, rect.y_hi) - np.maximum(lo, rect.y_lo), 0.0, None) / h
    return rect.sign * np.outer(fx, fy)


def fd_reference_solver(domain_length: float, depth: float, grid_n: int, dt: float,
                        horizon: float, c_fun, beta_fun,
                        wells: list[tuple[float, float]],
                        fluxes_m3: np.ndarray,
                        regions: list[list[RectRegion]] | None = None,
                        probes: list[tuple[float, float]] | None = None,
                        record_every: float | None = None,
                        theta: float = 0.5) -> FdResult:
    """March the variable-coefficient diffusion problem and record series.

    c_fun(x, y) is the absolute diffusivity field (km^2/hr), beta_fun(x, y)
    the compressibility field (1/MPa); both are evaluated at cell centres.
    Fluxes are constant in time, in m^3/hr.  theta = 0.5 gives
    Crank-Nicolson (one sparse factorisation, unconditionally stable);
    theta = 0 is explicit Euler and enforces its CFL bound.
    """
    n = int(grid_n)
    h = domain_length / n
    centres = (np.arange(n) + 0.5) * h
    XX, YY = np.meshgrid(centres, centres, indexing="ij")
    cc = np.asarray(c_fun(XX, YY), float)
    if np.any(cc <= 0):
        raise ValueError("diffusivity field must be strictly positive")
    cfx, cfy = _face_conductivity(cc)
    L = _laplacian(cfx, cfy, h)

    if theta == 0.0:
        dt_cfl = h * h / (4.0 * cc.max())
        if dt > dt_cfl:
            raise FdInstabilityError(
                f"explicit step dt={dt} exceeds the CFL bound {dt_cfl:.4g}")

    load = np.zeros(n * n)
    for (x, y), q in zip(wells, np.asarray(fluxes_m3, float)):
        i = min(n - 1, max(0, int(x / h)))
        j = min(n - 1, max(0, int(y / h)))
        beta_cell = float(beta_fun((i + 0.5) * h, (j + 0.5) * h))
        load[i * n + j] += q * KM3_PER_M3 / (beta_cell * h * h * depth)

    identity = sparse.eye(n * n, format="csr")
    stepper = None
    if theta > 0.0:
        stepper = sparse_linalg.splu((identity - dt * theta * L).tocsc())
    explicit_part = identity + dt * (1.0 - theta) * L

    region_weights = []
    for region in regions or []:
        w = np.zeros((n, n))
        for rect in region:
            w += _rect_cell_weights(rect, n, h)
        total = w.sum()
        if total <= 0:
            raise ValueError("region has no positive coverage on the grid")
        region_weights.append(w.ravel() / total)

    # bilinear probe weights over the four surrounding cell centres
    probe_weights = []
    for (x, y) in probes or []:
        w = np.zeros(n * n)
        gx = min(max(x / h - 0.5, 0.0), n - 1.0)
        gy = min(max(y / h - 0.5, 0.0), n - 1.0)
        i0, j0 = int(gx), int(gy)
        i1, j1 = min(i0 + 1, n - 1), min(j0 + 1, n - 1)
        fx, fy = gx - i0, gy - j0
        w[i0 * n + j0] += (1 - fx) * (1 - fy)
        w[i1 * n + j0] += fx * (1 - fy)
        w[i0 * n + j1] += (1 - fx) * fy
        w[i1 * n + j1] += fx * fy
        probe_weights.append(w)

    n_steps = int(round(horizon / dt))
    stride = max(1, int(round((record_every or dt) / dt)))
    rec_t = [0.0]
    u = np.zeros(n * n)
    rec_probe = [[float(u @ w) for w in probe_weights]]
    rec_region = [[float(u @ w) for w in region_weights]]

    limit = 1e12
    for step in range(1, n_steps + 1):
        rhs_vec = explicit_part @ u + dt * load
        u = stepper.solve(rhs_vec) if stepper is not None else rhs_vec
        if not np.all(np.isfinite(u)) or np.abs(u).max() > limit:
            raise FdInstabilityError(
                f"finite-difference solution blew up at step {step}")
        if step % stride == 0 or step == n_steps:
            rec_t.append(step * dt)
            rec_probe.append([float(u @ w) for w in probe_weights])
            rec_region.append([float(u @ w) for w in region_weights])

    return FdResult(
        t=np.array(rec_t),
        probes=np.array(rec_probe),
        region_means=np.array(rec_region),
        grid_n=n,
        dt=dt,
    )
