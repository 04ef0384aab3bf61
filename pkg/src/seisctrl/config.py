"""Scenario configuration: schema, parsing, validation and canonical echo.

Config files are flat ``key = value`` text with ``#`` comments.  Physical
values carry a unit tag as the last token (km, hr, MPa-derived or m3/hr)
which must match the unit expected for the key; dimensionless keys carry
no tag.  Unknown keys are errors, and validation reports every violated
constraint at once.  ``config_lines`` emits a canonical echo that parses
back to an equal configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import RectRegion

__all__ = ["ConfigError", "ScenarioConfig", "parse_config", "parse_config_lines",
           "config_lines", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Parse or validation failure; message lists every problem found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


# expected unit tag per key prefix (None = dimensionless)
_UNITS = {
    "schema_version": None,
    "scenario": None,
    "c_hy": "km^2/hr",
    "beta": "1/MPa",
    "friction": None,
    "tau0_dot": "MPa/hr",
    "t_a": "hr",
    "domain_length": "km",
    "depth": "km",
    "modes_per_axis": None,
    "num_modes": None,
    "fixed_well_": "km",
    "fixed_flux_": "m3/hr",
    "control_well_": "km",
    "region_": "km",
    "control": None,
    "exponent_l": None,
    "k1_diag": "1/hr",
    "k2_diag": "1/hr",
    "nominal_bias": None,
    "boundary_layer_eps": None,
    "control_hold": "hr",
    "target_log_rate": None,
    "ramp_duration": "hr",
    "demand": None,
    "demand_weights": None,
    "demand_level": "m3/hr",
    "demand_low": "m3/hr",
    "demand_high": "m3/hr",
    "demand_period": "hr",
    "demand_duty": None,
    "heterogeneity": None,
    "het_seed": None,
    "het_decades": None,
    "het_mean_ratio": None,
    "integrator": None,
    "rtol": None,
    "atol": None,
    "max_step": "hr",
    "dt": "hr",
    "horizon": "hr",
    "output_every": "hr",
    "snapshot_times": "hr",
    "snapshot_grid": None,
}



@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario in canonical units (km, hr, MPa, m3/hr)."""

    scenario: str
    c_hy: float
    beta: float
    friction: float
    tau0_dot: float
    t_a: float
    domain_length: float
    depth: float
    modes_per_axis: int
    num_modes: int
    fixed_wells: tuple[tuple[float, float], ...]
    fixed_fluxes: tuple[float, ...]            # m3/hr
    control_wells: tuple[tuple[float, float], ...]
    regions: tuple[tuple[RectRegion, ...], ...]
    control_on: bool
    exponent_l: float = -0.6
    k1_diag: tuple[float, ...] = ()
    k2_diag: tuple[float, ...] = ()
    nominal_bias: float = 1.1
    boundary_layer_eps: float = 0.0
    control_hold: float = 0.0                  # hr; 0 = continuous feedback
    target_log_rate: tuple[float, ...] = ()
    ramp_duration: float = 730.0
    demand: str = "none"                       # none | constant | square
    demand_weights: tuple[float, ...] = ()
    demand_level: float = 0.0                  # m3/hr (constant)
    demand_low: float = -32.0                  # m3/hr (square, first half)
    demand_high: float = 0.0                   # m3/hr (square, second half)
    demand_period: float = 1460.0              # hr
    demand_duty: float = 0.5
    heterogeneity: str = "none"                # none | bumps
    het_seed: int = 12
    het_decades: float = 3.0
    het_mean_ratio: float = 1.08
    integrator: str = "rk23"                   # rk23 | rk4
    rtol: float = 1e-6
    atol: float = 1e-9
    max_step: float = 10.0                     # hr
    dt: float = 0.05                           # hr (rk4)
    horizon: float = 4380.0                    # hr
    output_every: float = 10.0                 # hr
    snapshot_times: tuple[float, ...] = ()
    snapshot_grid: int = 101

    @property
    def num_regions(self) -> int:
        return len(self.regions)

    @property
    def num_demand_constraints(self) -> int:
        return 0 if self.demand == "none" else 1

    def demand_value(self, t: float) -> np.ndarray:
        if self.demand == "constant":
            return np.array([self.demand_level])
        if self.demand == "square":
            phase = (t % self.demand_period) / self.demand_period
            return np.array([self.demand_low if phase < self.demand_duty
                             else self.demand_high])
        return np.zeros(0)

    def demand_switch_times(self) -> list[float]:
        """Breakpoints the integrator must land on."""
        if self.demand != "square":
            return []
        times = []
        k = 0
        while k * self.demand_period < self.horizon:
            t_on = k * self.demand_period
            t_off = t_on + self.demand_duty * self.demand_period
            times.extend([t_on, t_off])
            k += 1
        return [t for t in times if 0.0 < t < self.horizon]


def _parse_lines(lines, problems):
    entries = {}
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            problems.append(f"line {lineno}: expected 'key = value', got {raw!r}")
            continue
        key, value = (part.strip() for part in text.split("=", 1))
        if not key or not value:
            problems.append(f"line {lineno}: empty key or value")
            continue
        if key in entries:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        entries[key] = (value, lineno)
    return entries


def _expected_unit(key):
    if key in _UNITS:
        return _UNITS[key], True
    for prefix in ("fixed_well_", "fixed_flux_", "control_well_", "region_"):
        if key.startswith(prefix):
            return _UNITS[prefix], True
    return None, False


def _take(entries, key, problems, kind="float", count=None):
    """Pop a key and parse its value tokens against the expected unit."""
    if key not in entries:
        return None
    value, lineno = entries.pop(key)
    unit, _ = _expected_unit(key)
    tokens = value.split()
    if unit is not None:
        if not tokens or tokens[-1] != unit:
            problems.append(
                f"line {lineno}: {key} must carry the unit tag {unit!r}")
            return None
        tokens = tokens[:-1]
    if kind == "str":
        if len(tokens) != 1:
            problems.append(f"line {lineno}: {key} expects a single word")
            return None
        return tokens[0]
    if kind == "rect":
        if len(tokens) != 5 or tokens[0] not in ("+", "-"):
            problems.append(
                f"line {lineno}: {key} expects '+|- x_lo x_hi y_lo y_hi km'")
            return None
        try:
            nums = [float(tok) for tok in tokens[1:]]
        except ValueError:
            problems.append(f"line {lineno}: {key} has non-numeric bounds")
            return None
        try:
            return RectRegion(nums[0], nums[1], nums[2], nums[3],
                              1 if tokens[0] == "+" else -1)
        except ValueError as exc:
            problems.append(f"line {lineno}: {key}: {exc}")
            return None
    try:
        nums = [float(tok) for tok in tokens]
    except ValueError:
        problems.append(f"line {lineno}: {key} has non-numeric value {value!r}")
        return None
    if count is not None and len(nums) != count:
        problems.append(f"line {lineno}: {key} expects {count} numbers")
        return None
    if kind == "int":
        out = []
        for x in nums:
            if x != int(x):
                problems.append(f"line {lineno}: {key} must be an integer")
                return None
            out.append(int(x))
        return out[0] if count == 1 else out
    return nums[0] if count == 1 else nums


def parse_config_lines(lines) -> ScenarioConfig:
    problems: list[str] = []
    entries = _parse_lines(lines, problems)

    has_version = "schema_version" in entries
    version = _take(entries, "schema_version", problems, kind="int", count=1)
    if not has_version:
        problems.append("missing required key 'schema_version'")
    elif version is not None and version != SCHEMA_VERSION:
        problems.append(f"unsupported schema_version {version}, "
                        f"this reader handles {SCHEMA_VERSION}")

    fields: dict = {}

    def grab(key, kind="float", count=None, default=None):
        got = _take(entries, key, problems, kind=kind, count=count)
        return default if got is None else got

    fields["scenario"] = grab("scenario", kind="str", default="unnamed")
    for name in ("c_hy", "beta", "friction", "tau0_dot", "t_a",
                 "domain_length", "depth"):
        val = grab(name, count=1)
        if val is not None:
            fields[name] = val
    for name in ("modes_per_axis", "num_modes", "snapshot_grid", "het_seed"):
        val = grab(name, kind="int", count=1)
        if val is not None:
            fields[name] = val

    # numbered wells, fluxes, region rectangles
    fixed_wells, fixed_fluxes, control_wells = [], [], []
    index = 1
    while f"fixed_well_{index}" in entries:
        w = _take(entries, f"fixed_well_{index}", problems, count=2)
        q = _take(entries, f"fixed_flux_{index}", problems, count=1)
        if w is not None:
            fixed_wells.append(tuple(w))
        fixed_fluxes.append(q if q is not None else 0.0)
        index += 1
    index = 1
    while f"control_well_{index}" in entries:
        w = _take(entries, f"control_well_{index}", problems, count=2)
        if w is not None:
            control_wells.append(tuple(w))
        index += 1
    regions = []
    r_index = 1
    while any(k.startswith(f"region_{r_index}_rect_") for k in entries):
        rects = []
        c_index = 1
        while f"region_{r_index}_rect_{c_index}" in entries:
            rect = _take(entries, f"region_{r_index}_rect_{c_index}",
                         problems, kind="rect")
            if rect is not None:
                rects.append(rect)
            c_index += 1
        regions.append(tuple(rects))
        r_index += 1

    fields["fixed_wells"] = tuple(fixed_wells)
    fields["fixed_fluxes"] = tuple(fixed_fluxes)
    fields["control_wells"] = tuple(control_wells)
    fields["regions"] = tuple(regions)

    control = grab("control", kind="str", default="on")
    if control not in ("on", "off"):
        problems.append(f"control must be 'on' or 'off', got {control!r}")
    fields["control_on"] = control == "on"

    for name, kind, count in [
        ("exponent_l", "float", 1), ("nominal_bias", "float", 1),
        ("boundary_layer_eps", "float", 1), ("control_hold", "float", 1),
        ("ramp_duration", "float", 1), ("demand_level", "float", 1),
        ("demand_low", "float", 1), ("demand_high", "float", 1),
        ("demand_period", "float", 1), ("demand_duty", "float", 1),
        ("het_decades", "float", 1), ("het_mean_ratio", "float", 1),
        ("rtol", "float", 1), ("atol", "float", 1), ("max_step", "float", 1),
        ("dt", "float", 1), ("horizon", "float", 1), ("output_every", "float", 1),
    ]:
        val = grab(name, kind=kind, count=count)
        if val is not None:
            fields[name] = val

    for name in ("k1_diag", "k2_diag", "target_log_rate", "demand_weights",
                 "snapshot_times"):
        val = grab(name)
        if val is not None:
            fields[name] = tuple(val) if isinstance(val, list) else (val,)

    for name in ("demand", "heterogeneity", "integrator"):
        val = grab(name, kind="str")
        if val is not None:
            fields[name] = val

    for key, (_, lineno) in entries.items():
        problems.append(f"line {lineno}: unknown key {key!r}")

    if problems:
        raise ConfigError(problems)

    missing = [k for k in ("c_hy", "beta", "friction", "tau0_dot", "t_a",
                           "domain_length", "depth", "modes_per_axis",
                           "num_modes", "horizon", "output_every")
               if k not in fields]
    if missing:
        raise ConfigError([f"missing required key {k!r}" for k in missing])

    cfg = ScenarioConfig(**fields)
    _validate(cfg)
    return cfg


def parse_config(path) -> ScenarioConfig:
    """Parse and validate a scenario file; raises ConfigError on any problem."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    return parse_config_lines(lines)


def _validate(cfg: ScenarioConfig):
    problems = []
    for name in ("c_hy", "beta", "friction", "tau0_dot", "t_a",
                 "domain_length", "depth", "horizon", "output_every",
                 "ramp_duration", "nominal_bias"):
        if getattr(cfg, name) <= 0:
            problems.append(f"{name} must be strictly positive")
    if cfg.modes_per_axis < 1:
        problems.append("modes_per_axis must be >= 1")
    if not 1 <= cfg.num_modes <= cfg.modes_per_axis**2:
        problems.append("num_modes must be in [1, modes_per_axis^2]")
    if not cfg.fixed_wells:
        problems.append("at least one fixed well is required")
    if len(cfg.fixed_fluxes) != len(cfg.fixed_wells):
        problems.append("each fixed well needs a fixed_flux entry")
    if not cfg.regions:
        problems.append("at least one region is required")
    for i, region in enumerate(cfg.regions, start=1):
        if not region:
            problems.append(f"region {i} has no rectangles")
    D = cfg.domain_length
    for (x, y) in cfg.fixed_wells + cfg.control_wells:
        if not (0.0 < x < D and 0.0 < y < D):
            problems.append(f"well ({x}, {y}) must be strictly inside (0, {D})^2")
    wells = cfg.fixed_wells + cfg.control_wells
    if len(set(wells)) != len(wells):
        problems.append("well positions must be distinct")
    if cfg.integrator not in ("rk23", "rk4"):
        problems.append(f"integrator must be rk23 or rk4, got {cfg.integrator!r}")
    if cfg.integrator == "rk23" and (cfg.rtol <= 0 or cfg.atol <= 0):
        problems.append("rtol and atol must be positive")
    if cfg.integrator == "rk4" and cfg.dt <= 0:
        problems.append("dt must be positive for the fixed-step integrator")
    if cfg.demand not in ("none", "constant", "square"):
        problems.append(f"demand must be none|constant|square, got {cfg.demand!r}")
    if cfg.heterogeneity not in ("none", "bumps"):
        problems.append(
            f"heterogeneity must be none|bumps, got {cfg.heterogeneity!r}")
    if cfg.heterogeneity == "bumps":
        if cfg.het_decades < 0:
            problems.append("het_decades must be >= 0")
        if cfg.het_mean_ratio <= 0:
            problems.append("het_mean_ratio must be positive")

    m = cfg.num_regions
    if cfg.control_on:
        if not -1.0 <= cfg.exponent_l <= 0.0:
            problems.append("exponent_l must lie in [-1, 0]")
        if len(cfg.k1_diag) != m or any(k <= 0 for k in cfg.k1_diag):
            problems.append(f"k1_diag needs {m} positive entries")
        if len(cfg.k2_diag) != m or any(k <= 0 for k in cfg.k2_diag):
            problems.append(f"k2_diag needs {m} positive entries")
        if len(cfg.target_log_rate) != m:
            problems.append(f"target_log_rate needs {m} entries")
        if cfg.boundary_layer_eps < 0:
            problems.append("boundary_layer_eps must be >= 0")
        if cfg.control_hold < 0:
            problems.append("control_hold must be >= 0")
        needed = m + cfg.num_demand_constraints
        if len(cfg.control_wells) != needed:
            problems.append(
                f"{needed} control wells required for this mode, "
                f"got {len(cfg.control_wells)}")
        if cfg.demand != "none":
            if len(cfg.demand_weights) != needed:
                problems.append(
                    f"demand_weights needs {needed} entries, "
                    f"got {len(cfg.demand_weights)}")
            if cfg.demand == "square" and not 0.0 < cfg.demand_duty < 1.0:
                problems.append("demand_duty must lie in (0, 1)")
            if cfg.demand == "square" and cfg.demand_period <= 0:
                problems.append("demand_period must be positive")
    elif cfg.demand != "none":
        problems.append("demand constraints require control = on")

    if cfg.snapshot_grid < 2:
        problems.append("snapshot_grid must be >= 2")
    for t in cfg.snapshot_times:
        if not 0.0 <= t <= cfg.horizon:
            problems.append(f"snapshot time {t} outside [0, horizon]")

    if problems:
        raise ConfigError(problems)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def config_lines(cfg: ScenarioConfig) -> list[str]:
    """Canonical echo; parse_config_lines(config_lines(cfg)) == cfg."""
    out = [f"schema_version = {SCHEMA_VERSION}", f"scenario = {cfg.scenario}"]
    for name in ("c_hy", "beta", "friction", "tau0_dot", "t_a",
                 "domain_length", "depth"):
        unit = _UNITS[name]
        tag = f" {unit}" if unit else ""
        out.append(f"{name} = {_fmt(getattr(cfg, name))}{tag}")
    out.append(f"modes_per_axis = {cfg.modes_per_axis}")
    out.append(f"num_modes = {cfg.num_modes}")
    for i, ((x, y), q) in enumerate(zip(cfg.fixed_wells, cfg.fixed_fluxes), 1):
        out.append(f"fixed_well_{i} = {_fmt(x)} {_fmt(y)} km")
        out.append(f"fixed_flux_{i} = {_fmt(q)} m3/hr")
    for i, (x, y) in enumerate(cfg.control_wells, 1):
        out.append(f"control_well_{i} = {_fmt(x)} {_fmt(y)} km")
    for i, region in enumerate(cfg.regions, 1):
        for j, r in enumerate(region, 1):
            sign = "+" if r.sign > 0 else "-"
            out.append(f"region_{i}_rect_{j} = {sign} {_fmt(r.x_lo)} "
                       f"{_fmt(r.x_hi)} {_fmt(r.y_lo)} {_fmt(r.y_hi)} km")
    out.append(f"control = {'on' if cfg.control_on else 'off'}")
    if cfg.control_on:
        out.append(f"exponent_l = {_fmt(cfg.exponent_l)}")
        out.append("k1_diag = " + " ".join(_fmt(k) for k in cfg.k1_diag) + " 1/hr")
        out.append("k2_diag = " + " ".join(_fmt(k) for k in cfg.k2_diag) + " 1/hr")
        out.append(f"nominal_bias = {_fmt(cfg.nominal_bias)}")
        out.append(f"boundary_layer_eps = {_fmt(cfg.boundary_layer_eps)}")
        out.append(f"control_hold = {_fmt(cfg.control_hold)} hr")
        out.append("target_log_rate = "
                   + " ".join(_fmt(r) for r in cfg.target_log_rate))
        out.append(f"ramp_duration = {_fmt(cfg.ramp_duration)} hr")
    out.append(f"demand = {cfg.demand}")
    if cfg.demand != "none":
        out.append("demand_weights = "
                   + " ".join(_fmt(w) for w in cfg.demand_weights))
        if cfg.demand == "constant":
            out.append(f"demand_level = {_fmt(cfg.demand_level)} m3/hr")
        else:
            out.append(f"demand_low = {_fmt(cfg.demand_low)} m3/hr")
            out.append(f"demand_high = {_fmt(cfg.demand_high)} m3/hr")
            out.append(f"demand_period = {_fmt(cfg.demand_period)} hr")
            out.append(f"demand_duty = {_fmt(cfg.demand_duty)}")
    out.append(f"heterogeneity = {cfg.heterogeneity}")
    if cfg.heterogeneity == "bumps":
        out.append(f"het_seed = {cfg.het_seed}")
        out.append(f"het_decades = {_fmt(cfg.het_decades)}")
        out.append(f"het_mean_ratio = {_fmt(cfg.het_mean_ratio)}")
    out.append(f"integrator = {cfg.integrator}")
    if cfg.integrator == "rk23":
        out.append(f"rtol = {_fmt(cfg.rtol)}")
        out.append(f"atol = {_fmt(cfg.atol)}")
        out.append(f"max_step = {_fmt(cfg.max_step)} hr")
    else:
        out.append(f"dt = {_fmt(cfg.dt)} hr")
    out.append(f"horizon = {_fmt(cfg.horizon)} hr")
    out.append(f"output_every = {_fmt(cfg.output_every)} hr")
    if cfg.snapshot_times:
        out.append("snapshot_times = "
                   + " ".join(_fmt(t) for t in cfg.snapshot_times) + " hr")
    out.append(f"snapshot_grid = {cfg.snapshot_grid}")
    return out
