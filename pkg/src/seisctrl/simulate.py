"""Closed-loop assembly, scenario runner and validation helpers.

The augmented state is [z (K modal pressure coefficients), h (m log
seismicity rates), nu (m integral states, controlled runs only)].  One
right-hand side composes, in order: reference evaluation, output-feedback
control, optional demand allocation, modal diffusion, region pressure
rates, seismicity-rate dynamics and the integral update.  The controller
path reads only (t, h, nu), never the pressure state.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .basis import SineBasis
from .config import SCHEMA_VERSION, ScenarioConfig, config_lines
from .control import (ControllerGains, DemandConstraint, ReferenceSpec,
                      nominal_B0, reference, signed_power)
from .dynamics import (PhysicalParams, RegionSet, WellLayout,
                       assemble_galerkin_operator, input_matrices, sr_rhs)
from .fdsolver import fd_reference_solver
from .heterogeneity import heterogeneity_generator
from .integrators import (IntegrationError, Trajectory, integrate_rk23,
                          integrate_rk4_fixed)
from .units import HOURS_PER_MONTH, HOURS_PER_YEAR, KM3_PER_M3, M3_PER_KM3

__all__ = ["ClosedLoop", "ScenarioResult", "build_closed_loop", "run_scenario",
           "steady_state_time", "oracle_compare"]


@dataclass
class ScenarioResult:
    """Recorded closed-loop trajectories and run metadata."""

    t: np.ndarray                      # (n,)
    h: np.ndarray                      # (n, m)
    r: np.ndarray                      # (n, m)
    R: np.ndarray                      # (n, m), e^h
    ye_norm: np.ndarray                # (n,)
    Qs: np.ndarray                     # (n, m_s) m3/hr
    Qc: np.ndarray                     # (n, n_ctl) m3/hr, allocated
    D: np.ndarray                      # (n, m_r) m3/hr
    u_norm: np.ndarray                 # (n,) L2 norm of the pressure field
    z: np.ndarray                      # (n, K)
    snapshots: list                    # [(t, grid ndarray)]
    manifest: dict
    termination: str


class ClosedLoop:
    """Everything needed to evaluate the closed-loop right-hand side."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.params = PhysicalParams(
            c_hy=cfg.c_hy, beta=cfg.beta, friction=cfg.friction,
            tau0_dot=cfg.tau0_dot, t_a=cfg.t_a,
            domain_length=cfg.domain_length, depth=cfg.depth)
        self.basis = SineBasis(cfg.domain_length, cfg.modes_per_axis,
                               cfg.num_modes)
        self.wells = WellLayout(fixed=cfg.fixed_wells,
                                controlled=cfg.control_wells)
        self.regions = RegionSet([list(r) for r in cfg.regions],
                                 depth=cfg.depth)
        self.m = len(self.regions)
        self.K = self.basis.num_modes
        self.Qs_m3 = np.asarray(cfg.fixed_fluxes, float)

        p = self.params
        # region-mean weights: (m, K), region mean of u equals Wreg @ z
        self.Wreg = (self.regions.integral_weights(self.basis)
                     / self.regions.areas[:, None])

        self.het = None
        if cfg.heterogeneity == "bumps":
            self.het = heterogeneity_generator(
                cfg.het_seed, cfg.het_decades, cfg.het_mean_ratio,
                c_hy_base=cfg.c_hy, beta_base=cfg.beta,
                domain_length=cfg.domain_length)
            self.A, S_all = assemble_galerkin_operator(
                self.het, self.basis, p, self.wells)
            loads = self.basis.point_load_matrix(list(self.wells.all_wells))
            scaled = loads * S_all
            ms = len(cfg.fixed_wells)
            self.load_fixed = scaled[:, :ms]
            self.load_ctrl = scaled[:, ms:]
        else:
            self.A = None
            inv_bd = 1.0 / (p.beta * p.depth)
            self.load_fixed = self.basis.point_load_matrix(
                list(cfg.fixed_wells)) * inv_bd
            self.load_ctrl = self.basis.point_load_matrix(
                list(cfg.control_wells)) * inv_bd
        self.lam_c = p.c_hy * self.basis.lam
        self.src_fixed = self.load_fixed @ (self.Qs_m3 * KM3_PER_M3)

        self.constraint = None
        self.B0 = None
        self.gains = None
        self.refspec = None
        if cfg.control_on:
            m = self.m
            self.gains = ControllerGains(
                K1=np.diag(cfg.k1_diag), K2=np.diag(cfg.k2_diag),
                l=cfg.exponent_l, boundary_layer=cfg.boundary_layer_eps)
            self.refspec = ReferenceSpec(
                h_target=np.asarray(cfg.target_log_rate, float),
                ramp_duration=cfg.ramp_duration)
            Wbar = None
            if cfg.demand != "none":
                self.constraint = DemandConstraint(
                    W=np.asarray(cfg.demand_weights, float)[None, :])
                Wbar = self.constraint.Wbar
            self.B0 = nominal_B0(self.regions, self.wells, p,
                                 nominal_bias=cfg.nominal_bias, Wbar=Wbar)
            self._B0_inv = np.linalg.inv(self.B0)
            self._k1 = np.asarray(cfg.k1_diag, float)
            self._K2 = np.diag(cfg.k2_diag)
            self._a_exp = self.gains.feedback_exponent
            self._b_exp = self.gains.integral_exponent
        self.B_s, self.B_c = input_matrices(self.regions, self.wells, p)

        self.max_alloc_residual = 0.0
        self._held_Qc = None

    # ----- controller path: output feedback only -------------------------
    def control_inputs(self, t: float, h: np.ndarray, nu: np.ndarray):
        """Reference, error and allocated well commands at time t.

        Reads only (t, h, nu); returns (r, rdot, ye, Qc_m3) where Qc_m3 has
        one entry per controlled well (after demand allocation if any).
        """
        cfg = self.cfg
        if not cfg.control_on:
            zero = np.zeros(self.m)
            return zero, zero, h.copy(), np.zeros(0)
        r, rdot = reference(t, self.refspec)
        ye = h - r
        bl = self.gains.boundary_layer
        fb = self._k1 * signed_power(ye, self._a_exp, bl)
        Qc_km3 = self._B0_inv @ (-fb + nu + rdot)
        Qc_m3 = Qc_km3 * M3_PER_KM3
        if self.constraint is not None:
            D_t = cfg.demand_value(t)
            Qc_m3 = self.constraint.Wbar @ Qc_m3 + self.constraint.pinv_part @ D_t
            residual = float(np.abs(self.constraint.W @ Qc_m3 - D_t).max())
            if residual > self.max_alloc_residual:
                self.max_alloc_residual = residual
        return r, rdot, ye, Qc_m3

    # ----- full right-hand side ------------------------------------------
    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        K, m = self.K, self.m
        z = y[:K]
        h = y[K:K + m]
        out = np.empty_like(y)

        if cfg.control_on:
            nu = y[K + m:]
            if self._held_Qc is not None:
                r, rdot = reference(t, self.refspec)
                ye = h - r
                Qc_m3 = self._held_Qc
            else:
                r, rdot, ye, Qc_m3 = self.control_inputs(t, h, nu)
        else:
            ye = h
            Qc_m3 = np.zeros(0)

        zdot = self.src_fixed - self.lam_c * z if self.A is None \
            else self.src_fixed + self.A @ z
        if Qc_m3.size:
            zdot = zdot + self.load_ctrl @ (Qc_m3 * KM3_PER_M3)
        out[:K] = zdot
        rates = self.Wreg @ zdot
        out[K:K + m] = sr_rhs(h, rates, self.params)
        if cfg.control_on:
            out[K + m:] = -(self._K2 @ signed_power(
                ye, self._b_exp, self.gains.boundary_layer))
        return out

    @property
    def state_dim(self) -> int:
        return self.K + self.m + (self.m if self.cfg.control_on else 0)

    def initial_state(self) -> np.ndarray:
        return np.zeros(self.state_dim)

    def breakpoints(self) -> list[float]:
        pts = list(self.cfg.demand_switch_times())
        if self.cfg.control_on and 0.0 < self.cfg.ramp_duration < self.cfg.horizon:
            pts.append(self.cfg.ramp_duration)
        return sorted(set(pts))

    def record_times(self) -> np.ndarray:
        cfg = self.cfg
        ticks = np.arange(0.0, cfg.horizon + 0.5 * cfg.output_every,
                          cfg.output_every)
        if ticks[-1] < cfg.horizon - 1e-9:
            ticks = np.append(ticks, cfg.horizon)
        else:
            ticks[-1] = cfg.horizon
        return ticks


def build_closed_loop(cfg: ScenarioConfig) -> ClosedLoop:
    return ClosedLoop(cfg)


def _integrate(loop: ClosedLoop, t_span, t_record):
    cfg = loop.cfg
    breakpoints = [b for b in loop.breakpoints() if t_span[0] < b < t_span[1]]
    if cfg.integrator == "rk4":
        return integrate_rk4_fixed(loop.rhs, loop.initial_state(), t_span,
                                   dt=cfg.dt, breakpoints=breakpoints,
                                   t_record=t_record)
    return integrate_rk23(loop.rhs, loop.initial_state(), t_span,
                          rtol=cfg.rtol, atol=cfg.atol, max_step=cfg.max_step,
                          breakpoints=breakpoints, t_record=t_record)


def _integrate_with_hold(loop: ClosedLoop, t_record):
    """Zero-order-hold mode: commands frozen over each hold window."""
    cfg = loop.cfg
    hold = cfg.control_hold
    edges = np.arange(0.0, cfg.horizon, hold).tolist() + [cfg.horizon]
    state = loop.initial_state()
    K, m = loop.K, loop.m
    ts = [np.array([0.0])]
    ys = [state[None, :].copy()]
    n_steps = n_rhs = 0
    for a, b in zip(edges[:-1], edges[1:]):
        _, _, _, Qc = loop.control_inputs(a, state[K:K + m], state[K + m:])
        loop._held_Qc = Qc
        rec = t_record[(t_record > a) & (t_record <= b)]
        rec = np.concatenate([rec, [b]]) if (not len(rec)) or rec[-1] < b else rec
        if cfg.integrator == "rk4":
            traj = integrate_rk4_fixed(loop.rhs, state, (a, b), dt=cfg.dt,
                                       t_record=rec)
        else:
            traj = integrate_rk23(loop.rhs, state, (a, b), rtol=cfg.rtol,
                                  atol=cfg.atol, max_step=cfg.max_step,
                                  t_record=rec)
        state = traj.y[-1].copy()
        keep = traj.t <= b
        ts.append(traj.t[keep])
        ys.append(traj.y[keep])
        n_steps += traj.n_steps
        n_rhs += traj.n_rhs
    loop._held_Qc = None
    t_all = np.concatenate(ts)
    y_all = np.vstack(ys)
    # de-duplicate, keep requested ticks only
    out_y = np.empty((len(t_record), y_all.shape[1]))
    for i, tq in enumerate(t_record):
        j = int(np.argmin(np.abs(t_all - tq)))
        out_y[i] = y_all[j]
    traj = Trajectory(t=np.asarray(t_record, float), y=out_y)
    traj.n_steps, traj.n_rhs = n_steps, n_rhs
    return traj


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Integrate a scenario and assemble the recorded series and manifest.

    Integrator failures surface as a truncated result with a non-"completed"
    termination status; the seismicity-rate overflow guard aborts with a
    diagnostic instead of producing infinities.
    """
    loop = ClosedLoop(cfg)
    t_record = loop.record_times()
    start = time.perf_counter()
    termination = "completed"
    try:
        if cfg.control_on and cfg.control_hold > 0.0:
            traj = _integrate_with_hold(loop, t_record)
        else:
            traj = _integrate(loop, (0.0, cfg.horizon), t_record)
    except IntegrationError as exc:
        termination = f"integrator-failure: {exc}"
        traj = exc.partial
        if traj is None:
            raise
    wall = time.perf_counter() - start

    K, m = loop.K, loop.m
    n = len(traj.t)
    z = traj.y[:, :K]
    h = traj.y[:, K:K + m]
    r = np.zeros((n, m))
    ye_norm = np.zeros(n)
    n_ctl = len(cfg.control_wells) if cfg.control_on else 0
    Qc = np.zeros((n, n_ctl))
    m_r = cfg.num_demand_constraints
    D = np.zeros((n, m_r))
    for i, t in enumerate(traj.t):
        nu = traj.y[i, K + m:]
        ri, _, ye, Qc_i = loop.control_inputs(t, h[i], nu)
        r[i] = ri
        ye_norm[i] = float(np.linalg.norm(ye))
        if n_ctl:
            Qc[i] = Qc_i
        if m_r:
            D[i] = cfg.demand_value(t)

    snapshots = []
    for t_snap in cfg.snapshot_times:
        idx = int(np.argmin(np.abs(traj.t - t_snap)))
        grid = loop.basis.reconstruct_field(
            z[idx], cfg.snapshot_grid, cfg.snapshot_grid)
        snapshots.append((float(traj.t[idx]), grid))

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config_echo": config_lines(cfg),
        "canonical_units": {"length": "km", "time": "hr", "pressure": "MPa",
                            "flux": "m3/hr"},
        "conversions": {"m3_per_km3": M3_PER_KM3,
                        "hours_per_month": HOURS_PER_MONTH,
                        "hours_per_year": HOURS_PER_YEAR},
        "integrator": {
            "method": cfg.integrator,
            "rtol": cfg.rtol, "atol": cfg.atol, "max_step": cfg.max_step,
            "dt": cfg.dt, "n_steps": traj.n_steps, "n_rhs": traj.n_rhs,
        },
        "seed": cfg.het_seed if cfg.heterogeneity == "bumps" else None,
        "boundary_layer_eps": cfg.boundary_layer_eps,
        "control_hold_hr": cfg.control_hold,
        "max_allocation_residual_m3hr": loop.max_alloc_residual,
        "wall_clock_s": wall,
        "termination": termination,
    }

    return ScenarioResult(
        t=traj.t, h=h, r=r, R=np.exp(h), ye_norm=ye_norm,
        Qs=np.tile(loop.Qs_m3, (n, 1)), Qc=Qc, D=D,
        u_norm=np.linalg.norm(z, axis=1), z=z,
        snapshots=snapshots, manifest=manifest, termination=termination)


def steady_state_time(t: np.ndarray, values: np.ndarray,
                      rel_threshold: float = 1e-3,
                      window: float = HOURS_PER_MONTH) -> float:
    """First time after which the relative change per window stays small.

    The per-sample relative rate |dv| / max(|v|, tiny) / dt, scaled to the
    window, must stay below ``rel_threshold`` from the returned time to the
    end of the series.  Returns ``math.inf`` when that never happens.
    """
    t = np.asarray(t, float)
    v = np.asarray(values, float)
    if len(t) < 2:
        return 0.0
    dv = np.abs(np.diff(v))
    dt = np.diff(t)
    base = np.maximum(np.abs(v[1:]), 1e-300)
    rate = dv / base / dt * window
    ok = rate < rel_threshold
    bad = np.nonzero(~ok)[0]
    if len(bad) == 0:
        return float(t[0])
    if bad[-1] == len(ok) - 1:
        return math.inf
    return float(t[bad[-1] + 1])


def oracle_compare(cfg: ScenarioConfig, grid_n: int = 128, dt: float = 1.0,
                   horizon: float | None = None,
                   probes: list[tuple[float, float]] | None = None) -> dict:
    """Cross-validate the spectral path against the finite-difference oracle.

    Both sides solve the uncontrolled diffusion problem (fixed wells only)
    for the scenario's fields.  Returns relative L2 differences of the
    region-mean trajectories and probe series plus the raw series.
    """
    loop = ClosedLoop(cfg)
    T = float(horizon if horizon is not None else min(cfg.horizon,
                                                      4.0 * HOURS_PER_MONTH))
    if probes is None:
        probes = list(cfg.control_wells) if cfg.control_wells else \
            [(cfg.domain_length / 4.0, cfg.domain_length / 4.0)]
    record = max(dt, 10.0)

    if loop.het is not None:
        c_fun = loop.het.c_hy
        beta_fun = loop.het.beta
    else:
        c_fun = lambda x, y: np.full(np.broadcast(np.asarray(x),
                                                  np.asarray(y)).shape, cfg.c_hy)
        beta_fun = lambda x, y: np.asarray(
            np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, cfg.beta))

    fd = fd_reference_solver(
        cfg.domain_length, cfg.depth, grid_n, dt, T, c_fun, beta_fun,
        list(cfg.fixed_wells), np.asarray(cfg.fixed_fluxes, float),
        regions=[list(rr) for rr in cfg.regions], probes=probes,
        record_every=record)

    # spectral side, fixed wells only
    t_grid = fd.t
    if loop.A is None:
        zinf = (loop.src_fixed / loop.lam_c)[None, :]
        decay = np.exp(-np.outer(t_grid, loop.lam_c))
        z_t = zinf * (1.0 - decay)
    else:
        traj = integrate_rk23(
            lambda t, z: loop.src_fixed + loop.A @ z,
            np.zeros(loop.K), (0.0, T), rtol=1e-8, atol=1e-12,
            max_step=cfg.max_step, t_record=t_grid)
        z_t = traj.y
    spec_regions = z_t @ loop.Wreg.T
    phi_probe = np.vstack([loop.basis.eval_modes(x, y) for (x, y) in probes])
    spec_probes = z_t @ phi_probe.T

    def rel_l2(a, b):
        denom = np.linalg.norm(b)
        return float(np.linalg.norm(a - b) / denom) if denom > 0 else 0.0

    return {
        "t": t_grid,
        "region_rel_l2": [rel_l2(fd.region_means[:, i], spec_regions[:, i])
                          for i in range(loop.m)],
        "probe_rel_l2": [rel_l2(fd.probes[:, j], spec_probes[:, j])
                         for j in range(len(probes))],
        "fd": fd,
        "spectral_regions": spec_regions,
        "spectral_probes": spec_probes,
        "grid_n": grid_n,
        "dt": dt,
        "horizon": T,
    }
