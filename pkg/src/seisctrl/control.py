"""Robust homogeneous tracking controller and demand allocation.

The feedback law

    Q_c = B0^{-1} ( -K1 |y_e|^{1/(1-l)} sign(y_e) + nu + rdot )
    nudot = -K2 |y_e|^{(1+l)/(1-l)} sign(y_e)

is finite-time stable for l in [-1, 0) and degenerates to a linear
PI-like law at l = 0.  The integral state nu doubles as a disturbance
estimate.  Demand constraints W Qbar = D are met exactly by projecting
the tracking command through the null space of W.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import PhysicalParams, RegionSet, WellLayout, input_matrices

__all__ = [
    "ControllerGains",
    "ReferenceSpec",
    "DemandConstraint",
    "signed_power",
    "reference",
    "control_law",
    "integral_rhs",
    "nominal_B0",
    "null_space_basis",
    "demand_projection",
]


def signed_power(v, gamma: float, boundary_layer: float = 0.0):
    """Element-wise |v|^gamma sign(v) with sign(0) = 0.

    gamma = 0 yields the sign function.  With ``boundary_layer`` > 0 the
    sign factor is smoothed to v/(|v| + eps) to tame chattering.
    """
    if gamma < 0:
        raise ValueError("signed power exponent must be >= 0")
    v = np.asarray(v, float)
    av = np.abs(v)
    if boundary_layer > 0.0:
        sgn = v / (av + boundary_layer)
    else:
        sgn = np.sign(v)
    return av**gamma * sgn


@dataclass(frozen=True)
class ControllerGains:
    """Feedback gains and homogeneity exponent."""

    K1: np.ndarray          # positive diagonal, (m, m)
    K2: np.ndarray          # positive definite, (m, m)
    l: float                # homogeneity exponent in [-1, 0]
    boundary_layer: float = 0.0

    def __post_init__(self):
        K1 = np.atleast_2d(np.asarray(self.K1, float))
        K2 = np.atleast_2d(np.asarray(self.K2, float))
        object.__setattr__(self, "K1", K1)
        object.__setattr__(self, "K2", K2)
        if np.any(np.diag(K1) <= 0) or np.any(K1 != np.diag(np.diag(K1))):
            raise ValueError("K1 must be diagonal with positive entries")
        if np.any(np.linalg.eigvalsh((K2 + K2.T) / 2.0) <= 0):
            raise ValueError("K2 must be positive definite")
        if not -1.0 <= self.l <= 0.0:
            raise ValueError("exponent l must lie in [-1, 0]")
        if self.boundary_layer < 0:
            raise ValueError("boundary layer must be >= 0")

    @property
    def feedback_exponent(self) -> float:
        return 1.0 / (1.0 - self.l)

    @property
    def integral_exponent(self) -> float:
        return (1.0 + self.l) / (1.0 - self.l)


@dataclass(frozen=True)
class ReferenceSpec:
    """Per-region log-rate targets reached by a quintic smoothstep ramp."""

    h_target: np.ndarray
    ramp_duration: float

    def __post_init__(self):
        object.__setattr__(self, "h_target", np.asarray(self.h_target, float))
        if self.ramp_duration <= 0:
            raise ValueError("ramp duration must be positive")


def reference(t: float, spec: ReferenceSpec) -> tuple[np.ndarray, np.ndarray]:
    """Reference r(t) and derivative rdot(t).

    Quintic smoothstep from 0 to the target over [0, T_ramp], constant
    afterwards; rdot is continuous and vanishes at both ends.
    """
    x = t / spec.ramp_duration
    if x <= 0.0:
        return np.zeros_like(spec.h_target), np.zeros_like(spec.h_target)
    if x >= 1.0:
        return spec.h_target.copy(), np.zeros_like(spec.h_target)
    s = x**3 * (10.0 - 15.0 * x + 6.0 * x * x)
    sd = 30.0 * x * x * (1.0 - x)**2 / spec.ramp_duration
    return spec.h_target * s, spec.h_target * sd


def control_law(y_e: np.ndarray, nu: np.ndarray, rdot: np.ndarray,
                B0: np.ndarray, gains: ControllerGains) -> np.ndarray:
    """Tracking command in the flux currency of B0.

    Q_c = B0^{-1}(-K1 ceil(y_e)^(1/(1-l)) + nu + rdot).
    """
    B0 = np.atleast_2d(np.asarray(B0, float))
    if abs(np.linalg.det(B0)) == 0.0:
        raise ValueError("nominal input matrix B0 is singular")
    fb = gains.K1 @ signed_power(y_e, gains.feedback_exponent,
                                 gains.boundary_layer)
    return np.linalg.solve(B0, -fb + np.asarray(nu, float) + np.asarray(rdot, float))


def integral_rhs(y_e: np.ndarray, gains: ControllerGains) -> np.ndarray:
    """nudot = -K2 ceil(y_e)^((1+l)/(1-l)); discontinuous at l = -1."""
    return -(gains.K2 @ signed_power(y_e, gains.integral_exponent,
                                     gains.boundary_layer))


def nominal_B0(regions: RegionSet, wells: WellLayout, p: PhysicalParams,
               nominal_bias: float = 1.1,
               Wbar: np.ndarray | None = None) -> np.ndarray:
    """Nominal input matrix built from biased parameters.

    Every parameter entering the matrix (friction, t_a, tau0_dot, beta and
    the region volumes) is multiplied by ``nominal_bias``, so each nonzero
    entry scales by bias/bias^4 relative to the true one.  In demand mode
    the widened matrix is collapsed through the null-space basis Wbar.
    """
    if nominal_bias <= 0:
        raise ValueError("nominal bias must be positive")
    p0 = PhysicalParams(
        c_hy=p.c_hy,
        beta=p.beta * nominal_bias,
        friction=p.friction * nominal_bias,
        tau0_dot=p.tau0_dot * nominal_bias,
        t_a=p.t_a * nominal_bias,
        domain_length=p.domain_length,
        depth=p.depth * nominal_bias,  # volumes V_i = area * depth pick up the bias
    )
    regions0 = RegionSet(regions.regions, depth=p0.depth)
    _, Bc0 = input_matrices(regions0, wells, p0)
    B0 = Bc0 if Wbar is None else Bc0 @ np.asarray(Wbar, float)
    if B0.shape[0] != B0.shape[1]:
        raise ValueError(f"nominal matrix must be square, got {B0.shape}")
    if abs(np.linalg.det(B0)) == 0.0 or not np.isfinite(np.linalg.cond(B0)):
        raise ValueError("nominal input matrix B0 is singular")
    return B0


def null_space_basis(W: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ker(W) with a fixed sign convention.

    Columns are orthonormal right-singular vectors of the zero singular
    values; the first entry of each column whose magnitude exceeds 1e-12
    is made positive, so the basis is deterministic.
    """
    W = np.atleast_2d(np.asarray(W, float))
    m_r, n = W.shape
    if np.linalg.matrix_rank(W) < m_r:
        raise ValueError("demand weight matrix W must have full row rank")
    _, _, vt = np.linalg.svd(W)
    Wbar = vt[m_r:].T.copy()
    for j in range(Wbar.shape[1]):
        col = Wbar[:, j]
        nz = col[np.abs(col) > 1e-12]
        if nz.size and nz[0] < 0:
            Wbar[:, j] = -col
    return Wbar


@dataclass(frozen=True)
class DemandConstraint:
    """Weighted flux constraint W Qbar = D and its exact solution maps."""

    W: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, float))
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "Wbar", null_space_basis(W))
        object.__setattr__(self, "pinv_part", W.T @ np.linalg.inv(W @ W.T))

    @property
    def num_constraints(self) -> int:
        return self.W.shape[0]


def demand_projection(Q_c: np.ndarray, constraint: DemandConstraint,
                      D_t: np.ndarray) -> np.ndarray:
    """Allocate the tracking command over redundant wells.

    Qbar = Wbar Q_c + W^T (W W^T)^{-1} D, so W Qbar = D exactly while the
    null-space component carries the tracking authority.
    """
    Q_c = np.atleast_1d(np.asarray(Q_c, float))
    D_t = np.atleast_1d(np.asarray(D_t, float))
    return constraint.Wbar @ Q_c + constraint.pinv_part @ D_t
