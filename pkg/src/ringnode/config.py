"""Structured run configuration (TOML) with unit conversion at load time.

User-facing values stay in their file units inside :class:`Config` so that
scans can overwrite them by key path; the ``*_params`` builders convert to SI
and rad/s exactly once when the domain objects are constructed.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .cavity_spectrum import ChargeState, FluxConfig, RingParameters
from .chiral_interface import CouplingGeometry, FiberCoupler
from .constants import C_LIGHT, TWO_PI, ghz_to_rad_s
from .tripod_dynamics import PulseShape, RateSet, default_pulse, rise_time_for


class ConfigError(ValueError):
    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


_REQ = object()

# section -> key -> (type, default or _REQ, check, description of the check)
SCHEMA = {
    "ring": {
        "R_um": (float, _REQ, _positive, "> 0"),
        "K_c": (float, _REQ, lambda v: 0 < v <= 1, "in (0, 1]"),
        "v_F": (float, _REQ, _positive, "> 0"),
    },
    "charge": {
        "N_c": (int, 0, None, ""),
        "J_c": (int, 0, None, ""),
    },
    "flux": {
        "flux_over_phi0": (float, None, None, ""),
        "flux_wb": (float, None, None, ""),
        "field_T": (float, None, None, ""),
    },
    "spectrum": {
        "m": (int, 1, lambda v: v != 0, "nonzero"),
        "branch": (int, 1, lambda v: v in (1, -1), "+1 or -1"),
    },
    "coupling": {
        "dipole_debye": (float, _REQ, _positive, "> 0"),
        "f_c_ghz": (float, _REQ, _positive, "> 0"),
        "eps_r": (float, _REQ, _positive, "> 0"),
        "v_mode_m3": (float, _REQ, _positive, "> 0"),
        "x_nm": (float, _REQ, _nonneg, ">= 0"),
        "L_d_nm": (float, _REQ, _positive, "> 0"),
    },
    "fiber": {
        "xi": (float, _REQ, lambda v: 0 <= v <= 1, "in [0, 1]"),
        "a_cnt_m2": (float, _REQ, _positive, "> 0"),
        "a_fiber_m2": (float, _REQ, _positive, "> 0"),
        "L_int_um": (float, _REQ, _positive, "> 0"),
        "R_um": (float, _REQ, _positive, "> 0"),
        "wavelength_nm": (float, _REQ, _positive, "> 0"),
    },
    "rates": {
        "g": (float, _REQ, _nonneg, ">= 0"),
        "kappa_ex": (float, _REQ, _nonneg, ">= 0"),
        "kappa_0": (float, _REQ, _nonneg, ">= 0"),
        "gamma": (float, _REQ, _nonneg, ">= 0"),
        "gamma_phi": (float, _REQ, _nonneg, ">= 0"),
        "Delta": (float, 0.0, None, ""),
        "delta": (float, 0.0, None, ""),
        "omega_L": (float, 0.0, None, ""),
        "omega_zfs": (float, 0.0, None, ""),
        "recycle_to_ground": (float, 0.0, lambda v: 0 <= v <= 1, "in [0, 1]"),
    },
    "pulse": {
        "kind": (str, "sin2", lambda v: v in ("sin2", "tanh", "constant"), "sin2, tanh or constant"),
        "omega_max": (float, None, _nonneg, ">= 0"),
        "adiabaticity": (float, 0.1, _positive, "> 0"),
        "t_on_ns": (float, 0.0, _nonneg, ">= 0"),
        "t_rise_ns": (float, None, _positive, "> 0"),
        "hold_ns": (float, None, _positive, "> 0"),
        "t_total_ns": (float, None, _positive, "> 0"),
    },
    "solver": {
        "tol_abs": (float, 1e-10, _positive, "> 0"),
        "tol_rel": (float, 1e-8, _positive, "> 0"),
        "n_points": (int, 401, lambda v: v >= 2, ">= 2"),
    },
    "scan": {
        "target": (str, None, None, ""),
        "parameter": (str, None, None, ""),
        "grid": (str, "linear", lambda v: v in ("linear", "logarithmic"), "linear or logarithmic"),
        "min": (float, None, None, ""),
        "max": (float, None, None, ""),
        "count": (int, None, None, ""),
        "series_parameter": (str, None, None, ""),
        "series_values": (list, None, None, ""),
    },
}

REQUIRED_SECTIONS = ("ring", "coupling", "fiber", "rates")


def _coerce(value, kind, path):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError("value must be finite", path)
        return value
    if kind is int:
        if isinstance(value, bool):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {value!r}", path)
        return [_coerce(v, float, path) for v in value]
    raise AssertionError(kind)


def validate(raw: dict) -> dict:
    """Check a raw nested mapping against :data:`SCHEMA`; fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    for section in raw:
        if section not in SCHEMA:
            raise ConfigError("unknown section", section)
    for section in REQUIRED_SECTIONS:
        if section not in raw:
            raise ConfigError(f"missing section: {section}")

    out = {}
    for section, keys in SCHEMA.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError("section must be a table", section)
        for key in given:
            if key not in keys:
                raise ConfigError("unknown key", f"{section}.{key}")
        values = {}
        for key, (kind, default, check, what) in keys.items():
            path = f"{section}.{key}"
            if key in given:
                value = _coerce(given[key], kind, path)
                if check is not None and not check(value):
                    raise ConfigError(f"value {value!r} out of range (must be {what})", path)
            elif default is _REQ:
                raise ConfigError("missing required key", path)
            else:
                value = default
            values[key] = value
        out[section] = values

    flux_keys = [k for k, v in out["flux"].items() if v is not None]
    if len(flux_keys) > 1:
        raise ConfigError("give exactly one of flux_over_phi0, flux_wb, field_T", "flux")
    if not flux_keys:
        out["flux"]["flux_over_phi0"] = 0.0
    if out["rates"]["kappa_ex"] + out["rates"]["kappa_0"] <= 0:
        raise ConfigError("kappa_ex + kappa_0 must be positive", "rates.kappa_ex")
    if out["rates"]["g"] <= 0 and out["pulse"]["t_rise_ns"] is None:
        raise ConfigError("g must be positive unless pulse.t_rise_ns is given", "rates.g")
    return out


@dataclass
class Config:
    data: dict
    source: str = "<memory>"

    # --- access by dotted key path -------------------------------------
    def get(self, path: str):
        section, key = _split(path)
        return self.data[section][key]

    def with_values(self, updates: dict) -> "Config":
        """Copy with ``{"section.key": value}`` applied and revalidated."""
        raw = copy.deepcopy(self.data)
        for path, value in updates.items():
            section, key = _split(path)
            if section == "flux" and key in SCHEMA["flux"]:
                raw["flux"] = {}
            raw[section][key] = value
        raw = {s: {k: v for k, v in kv.items() if v is not None} for s, kv in raw.items()}
        return Config(validate(raw), self.source)

    def snapshot(self) -> dict:
        return {s: {k: v for k, v in kv.items() if v is not None} for s, kv in self.data.items()}

    # --- domain objects (unit conversion happens here) -------------------
    def ring(self) -> RingParameters:
        r = self.data["ring"]
        return RingParameters(R=r["R_um"] * 1e-6, K_c=r["K_c"], v_F=r["v_F"])

    def charge(self) -> ChargeState:
        return ChargeState(**self.data["charge"])

    def flux(self) -> FluxConfig:
        f = self.data["flux"]
        if f.get("flux_wb") is not None:
            return FluxConfig(flux=f["flux_wb"])
        if f.get("field_T") is not None:
            return FluxConfig(field=f["field_T"])
        return FluxConfig.from_flux_quanta(f["flux_over_phi0"])

    def coupling_geometry(self) -> CouplingGeometry:
        c = self.data["coupling"]
        return CouplingGeometry(
            dipole_debye=c["dipole_debye"],
            omega_c=ghz_to_rad_s(c["f_c_ghz"]),
            eps_r=c["eps_r"],
            V_mode=c["v_mode_m3"],
            x=c["x_nm"] * 1e-9,
            L_d=c["L_d_nm"] * 1e-9,
        )

    def fiber_coupler(self) -> FiberCoupler:
        f = self.data["fiber"]
        return FiberCoupler(
            xi=f["xi"],
            A_cnt=f["a_cnt_m2"],
            A_fiber=f["a_fiber_m2"],
            L_int=f["L_int_um"] * 1e-6,
            R=f["R_um"] * 1e-6,
            omega_c=TWO_PI * C_LIGHT / (f["wavelength_nm"] * 1e-9),
        )

    def rates(self) -> RateSet:
        return RateSet.from_ghz(**self.data["rates"])

    def pulse(self) -> PulseShape:
        p = self.data["pulse"]
        rates = self.rates()
        omega_max = ghz_to_rad_s(p["omega_max"]) if p["omega_max"] is not None else None
        t_on = p["t_on_ns"] * 1e-9
        hold = p["hold_ns"] * 1e-9 if p["hold_ns"] is not None else None
        if p["t_rise_ns"] is None and p["kind"] == "sin2":
            pulse = default_pulse(rates, omega_max, p["adiabaticity"], t_on, hold)
        else:
            if omega_max is None:
                omega_max = 8.0 * rates.g
            if p["t_rise_ns"] is not None:
                t_rise = p["t_rise_ns"] * 1e-9
            elif rates.g > 0 and p["kind"] != "constant":
                t_rise = rise_time_for(rates, omega_max, p["adiabaticity"], p["kind"])
            else:
                t_rise = 1e-9
            if hold is None:
                hold = max(40.0 / rates.kappa_tot, 2e-9)
            pulse = PulseShape(p["kind"], omega_max, t_on, t_rise, t_on + t_rise + hold)
        if p["t_total_ns"] is not None:
            pulse = PulseShape(pulse.kind, pulse.omega_max, pulse.t_on, pulse.t_rise,
                               p["t_total_ns"] * 1e-9)
        return pulse

    def tolerances(self) -> tuple[float, float]:
        s = self.data["solver"]
        return s["tol_abs"], s["tol_rel"]


def _split(path: str) -> tuple[str, str]:
    parts = path.split(".")
    if len(parts) != 2 or parts[0] not in SCHEMA or parts[1] not in SCHEMA[parts[0]]:
        raise ConfigError("unknown configuration key", path)
    return parts[0], parts[1]


def parse_value(text: str):
    """Interpret a ``--set`` value as a TOML literal, falling back to a string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def load_config(path=None, overrides=None) -> Config:
    """Read and validate a TOML configuration (the shipped default if ``path`` is None)."""
    if path is None:
        text = resources.files("ringnode").joinpath("data/default.toml").read_text("utf-8")
        source = "<default>"
    else:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"configuration file not found: {path}")
        text = path.read_text("utf-8")
        source = str(path)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from exc
    config = Config(validate(raw), source)
    if overrides:
        config = config.with_values(overrides)
    return config


def default_config() -> Config:
    return load_config(None)
