"""Parameter scans and deterministic CSV / manifest output."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cavity_spectrum import cavity_resonance
from .chiral_interface import max_outcoupling, vacuum_coupling
from .config import SCHEMA, Config, ConfigError, default_config
from .constants import rad_s_to_ghz
from .fidelity_analysis import compare_analytic_numeric
from .tripod_dynamics import LEVEL_LABELS, SimulationTrace, integrate

log = logging.getLogger(__name__)

TARGETS = ("spectrum", "coupling-g", "coupling-kappa", "dynamics", "fidelity")

SPECTRUM_COLUMNS = ["m", "branch", "flux_wb", "flux_over_phi0", "omega_c_rad_s", "f_c_ghz", "e_zero_joule"]
FIDELITY_COLUMNS = ["kappa_0_ghz", "gamma_ghz", "eta_ext", "eta_int", "f_analytic", "f_numeric", "abs_gap"]
DYNAMICS_COLUMNS = [
    "p_fiber_plus", "p_fiber_minus", "p_int_plus", "p_int_minus",
    "pop_sink", "max_pop_A2", "max_adiabaticity", "trace_err",
]
TRACE_COLUMNS = (
    ["t_ns"]
    + [f"pop_{label}" for label in LEVEL_LABELS]
    + ["n_plus", "n_minus", "p_fiber_plus", "p_fiber_minus", "p_int_plus", "p_int_minus",
       "trace_err", "adiabaticity"]
)

# the columns each target emits on its own, before any swept-parameter column
_IMPLIED = {
    "spectrum": {"flux.flux_over_phi0", "flux.flux_wb", "flux.field_T"},
    "fidelity": {"rates.kappa_0", "rates.gamma"},
}


class ScanError(RuntimeError):
    """A scan point failed; carries the offending parameters."""

    def __init__(self, message, point=None):
        super().__init__(f"{message} (point: {point})" if point else message)
        self.point = point


class InvariantFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class ScanSpec:
    target: str
    parameter: str
    min: float
    max: float
    count: int
    grid: str = "linear"
    overrides: dict = field(default_factory=dict)
    series_parameter: str | None = None
    series_values: tuple = ()

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ConfigError(f"unknown scan target {self.target!r}; expected one of {TARGETS}", "scan.target")
        _check_path(self.parameter, "scan.parameter")
        if self.count < 2:
            raise ConfigError(f"count must be >= 2, got {self.count}", "scan.count")
        if not self.min < self.max:
            raise ConfigError("min must be smaller than max", "scan.min")
        if self.grid not in ("linear", "logarithmic"):
            raise ConfigError(f"unknown grid {self.grid!r}", "scan.grid")
        if self.grid == "logarithmic" and self.min <= 0:
            raise ConfigError("logarithmic grids need min > 0", "scan.min")
        if self.series_parameter is not None:
            _check_path(self.series_parameter, "scan.series_parameter")
            if not self.series_values:
                raise ConfigError("series_parameter given without series_values", "scan.series_values")

    @classmethod
    def from_config(cls, config: Config) -> "ScanSpec":
        s = config.data["scan"]
        for key in ("target", "parameter", "min", "max", "count"):
            if s[key] is None:
                raise ConfigError("missing required key", f"scan.{key}")
        return cls(
            target=s["target"],
            parameter=s["parameter"],
            min=s["min"],
            max=s["max"],
            count=s["count"],
            grid=s["grid"],
            series_parameter=s["series_parameter"],
            series_values=tuple(s["series_values"] or ()),
        )

    def values(self) -> np.ndarray:
        if self.grid == "logarithmic":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)

    def points(self) -> list[dict]:
        """Override dicts in output order (series outer, grid inner)."""
        series = (
            [{self.series_parameter: v} for v in self.series_values]
            if self.series_parameter
            else [{}]
        )
        out = []
        for outer in series:
            for v in self.values():
                point = dict(self.overrides)
                point.update(outer)
                point[self.parameter] = float(v)
                out.append(point)
        return out


def _check_path(path, where):
    parts = path.split(".") if isinstance(path, str) else []
    if len(parts) != 2 or parts[0] not in SCHEMA or parts[1] not in SCHEMA[parts[0]]:
        raise ConfigError(f"swept parameter {path!r} does not exist", where)
    if parts[0] in ("scan", "solver"):
        raise ConfigError(f"cannot sweep {path!r}", where)


def column_name(path: str) -> str:
    section, key = path.split(".")
    name = key.lower()
    if (section == "rates" and key != "recycle_to_ground") or (section == "pulse" and key == "omega_max"):
        name += "_ghz"
    return name


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if value == 0.0:
        return "0"
    return format(value, ".12g")


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_outputs(out_dir, stem, columns, rows, config, checks, command, status="ok"):
    """Write ``<stem>.csv`` and its manifest; return both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    manifest_path = out_dir / f"{stem}.manifest.json"
    csv_path.write_text(csv_text(columns, rows), encoding="utf-8", newline="")
    tol_abs, tol_rel = config.tolerances()
    manifest = {
        "command": command,
        "config": config.snapshot(),
        "config_source": config.source,
        "software_version": __version__,
        "tolerances": {"abs": tol_abs, "rel": tol_rel},
        "checks": checks,
        "outputs": [csv_path.name],
        "status": status,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    manifest_path.write_text(
        json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return csv_path, manifest_path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(fmt(obj)) if np.isfinite(obj) else str(obj)
    return obj


# ---------------------------------------------------------------------------
# point evaluation
# ---------------------------------------------------------------------------


def spectrum_row(config: Config, branch=None) -> dict:
    s = config.data["spectrum"]
    point = cavity_resonance(
        config.ring(), config.charge(), config.flux(), s["m"], s["branch"] if branch is None else branch
    )
    return {
        "m": point.m,
        "branch": point.branch,
        "flux_wb": point.flux_wb,
        "flux_over_phi0": point.flux_over_phi0,
        "omega_c_rad_s": point.omega_c,
        "f_c_ghz": point.f_c_ghz,
        "e_zero_joule": point.zero_mode_energy,
    }


def run_dynamics(config: Config) -> SimulationTrace:
    tol_abs, tol_rel = config.tolerances()
    return integrate(
        None, config.pulse(), config.rates(), atol=tol_abs, rtol=tol_rel,
        n_points=config.data["solver"]["n_points"],
    )


def trace_rows(trace: SimulationTrace) -> list[dict]:
    rows = []
    for i, t in enumerate(trace.times):
        row = {"t_ns": t * 1e9}
        for j, label in enumerate(LEVEL_LABELS):
            row[f"pop_{label}"] = trace.populations[i, j]
        row.update(
            n_plus=trace.n_plus[i],
            n_minus=trace.n_minus[i],
            p_fiber_plus=trace.p_fiber_plus[i],
            p_fiber_minus=trace.p_fiber_minus[i],
            p_int_plus=trace.p_int_plus[i],
            p_int_minus=trace.p_int_minus[i],
            trace_err=trace.trace_err[i],
            adiabaticity=trace.adiabaticity[i],
        )
        rows.append(row)
    return rows


def fidelity_row(config: Config):
    rates = config.rates()
    trace = run_dynamics(config)
    report = compare_analytic_numeric(trace, rates)
    row = {
        "kappa_0_ghz": config.get("rates.kappa_0"),
        "gamma_ghz": config.get("rates.gamma"),
        "eta_ext": report.eta_ext,
        "eta_int": report.eta_int,
        "f_analytic": report.F_total_analytic,
        "f_numeric": report.F_numeric,
        "abs_gap": report.abs_gap,
    }
    return row, trace, report


def evaluate_point(target: str, config: Config):
    """Compute one scan row; returns ``(row, check_dict)``."""
    if target == "spectrum":
        return spectrum_row(config), {}
    if target == "coupling-g":
        g = vacuum_coupling(config.coupling_geometry())
        return {"g_ghz": rad_s_to_ghz(g)}, {}
    if target == "coupling-kappa":
        kappa, exceeded = max_outcoupling(config.fiber_coupler())
        return {"kappa_r_ghz": rad_s_to_ghz(kappa)}, {"bound_exceeded": exceeded}
    if target == "dynamics":
        trace = run_dynamics(config)
        row = {
            "p_fiber_plus": trace.p_fiber_plus[-1],
            "p_fiber_minus": trace.p_fiber_minus[-1],
            "p_int_plus": trace.p_int_plus[-1],
            "p_int_minus": trace.p_int_minus[-1],
            "pop_sink": trace.populations[-1, -1],
            "max_pop_A2": trace.max_pop_excited,
            "max_adiabaticity": trace.max_adiabaticity,
            "trace_err": trace.max_trace_drift,
        }
        return row, trace.invariant_report()
    if target == "fidelity":
        row, trace, report = fidelity_row(config)
        check = trace.invariant_report()
        check["envelope_ok"] = report.F_numeric <= report.eta_ext + 1e-3
        check["flags"] = list(report.flags)
        return row, check
    raise ConfigError(f"unknown scan target {target!r}", "scan.target")


def _evaluate(args):
    target, config, point = args
    try:
        cfg = config.with_values(point)
        return evaluate_point(target, cfg)
    except Exception as exc:  # re-raised with the point attached
        raise ScanError(f"{type(exc).__name__}: {exc}", point) from exc


def _check_ok(check: dict) -> bool:
    return all(v for k, v in check.items() if k.endswith("_ok"))


@dataclass
class ScanResult:
    columns: list
    rows: list
    checks: list
    csv_path: Path | None = None
    manifest_path: Path | None = None

    @property
    def ok(self) -> bool:
        return all(_check_ok(c) for c in self.checks)


def scan_columns(spec: ScanSpec) -> list[str]:
    base = {
        "spectrum": SPECTRUM_COLUMNS,
        "coupling-g": ["g_ghz"],
        "coupling-kappa": ["kappa_r_ghz"],
        "dynamics": DYNAMICS_COLUMNS,
        "fidelity": FIDELITY_COLUMNS,
    }[spec.target]
    implied = _IMPLIED.get(spec.target, set())
    lead = [p for p in (spec.series_parameter, spec.parameter) if p and p not in implied]
    return [column_name(p) for p in lead] + list(base)


def run_scan(spec: ScanSpec, config: Config | None = None, out_dir=None, stem=None,
             jobs: int = 1, command=None) -> ScanResult:
    """Evaluate every grid point and (optionally) write CSV + manifest.

    Points are independent and may run in a process pool; rows are always
    emitted in grid order.
    """
    config = config or default_config()
    points = spec.points()
    tasks = [(spec.target, config, p) for p in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate, tasks))
    else:
        results = [_evaluate(t) for t in tasks]

    columns = scan_columns(spec)
    rows, checks = [], []
    for point, (row, check) in zip(points, results):
        full = {column_name(k): v for k, v in point.items()}
        full.update(row)
        rows.append(full)
        checks.append({"point": point, **check})

    result = ScanResult(columns, rows, checks)
    if out_dir is not None:
        stem = stem or f"scan-{spec.target}"
        status = "ok" if result.ok else "invariant_violation"
        cmd = command or {"scan": _spec_dict(spec)}
        result.csv_path, result.manifest_path = write_outputs(
            out_dir, stem, columns, rows, config, checks, cmd, status
        )
    return result


def _spec_dict(spec: ScanSpec) -> dict:
    d = {
        "target": spec.target,
        "parameter": spec.parameter,
        "grid": spec.grid,
        "min": spec.min,
        "max": spec.max,
        "count": spec.count,
    }
    if spec.series_parameter:
        d["series_parameter"] = spec.series_parameter
        d["series_values"] = list(spec.series_values)
    if spec.overrides:
        d["overrides"] = dict(spec.overrides)
    return d


# ---------------------------------------------------------------------------
# figure reproduction
# ---------------------------------------------------------------------------

FIGURE_SCANS = {
    "fig3-b": ScanSpec(
        "fidelity", "rates.kappa_0", 0.01, 3.0, 20, "logarithmic",
        series_parameter="rates.gamma", series_values=(0.01, 0.05, 0.5),
    ),
    "fig-couple-a": ScanSpec("coupling-g", "coupling.x_nm", 0.0, 30.0, 31),
    "fig-couple-b": ScanSpec("coupling-g", "coupling.v_mode_m3", 1e-23, 1e-21, 21, "logarithmic"),
    "fig-couple-c": ScanSpec("coupling-kappa", "fiber.R_um", 0.5, 10.0, 20),
    "fig-couple-d": ScanSpec("coupling-kappa", "fiber.a_fiber_m2", 1e-15, 1e-12, 25, "logarithmic"),
    "spectrum-flux": ScanSpec("spectrum", "flux.flux_over_phi0", 0.0, 1.0, 21),
}
FIGURES = ("fig3-a",) + tuple(FIGURE_SCANS)


def reproduce(figure_id: str, out_dir, config: Config | None = None, jobs: int = 1) -> ScanResult:
    """Regenerate one figure panel as CSV + manifest in ``out_dir``."""
    if figure_id not in FIGURES:
        raise ConfigError(f"unknown figure id {figure_id!r}; available: {', '.join(FIGURES)}")
    config = config or default_config()
    command = {"reproduce": figure_id}
    if figure_id == "fig3-a":
        trace = run_dynamics(config)
        check = trace.invariant_report()
        result = ScanResult(TRACE_COLUMNS, trace_rows(trace), [check])
        status = "ok" if result.ok else "invariant_violation"
        result.csv_path, result.manifest_path = write_outputs(
            out_dir, figure_id, TRACE_COLUMNS, result.rows, config, [check], command, status
        )
        return result
    return run_scan(FIGURE_SCANS[figure_id], config, out_dir, figure_id, jobs, command)
