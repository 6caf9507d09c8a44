import csv
import json
from importlib import resources

import numpy as np
import pytest

from ringnode.cli import EXIT_INVARIANT, EXIT_OK, EXIT_VALIDATION, main
from ringnode.config import ConfigError, default_config, load_config, parse_value
from ringnode.constants import TWO_PI
from ringnode.scan import (
    FIGURES,
    TRACE_COLUMNS,
    ScanSpec,
    column_name,
    fmt,
    reproduce,
    run_scan,
)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- configuration ------------------------------------------------------------


def test_default_config_round_trip():
    cfg = default_config()
    assert cfg.ring().K_c == 0.2
    assert cfg.rates().g == pytest.approx(TWO_PI * 20e9)
    assert cfg.tolerances() == (1e-10, 1e-8)
    assert cfg.get("spectrum.m") == 603
    assert cfg.pulse().omega_max == pytest.approx(8 * cfg.rates().g)


def test_overrides_are_validated():
    cfg = load_config(None, {"rates.gamma": 0.5})
    assert cfg.rates().gamma == pytest.approx(TWO_PI * 0.5e9)
    with pytest.raises(ConfigError) as info:
        load_config(None, {"ring.K_c": 1.5})
    assert info.value.path == "ring.K_c"
    with pytest.raises(ConfigError) as info:
        load_config(None, {"rates.not_a_rate": 1.0})
    assert "rates.not_a_rate" in str(info.value)


def test_empty_file_names_first_missing_section(tmp_path):
    with pytest.raises(ConfigError, match="missing section: ring"):
        load_config(write(tmp_path, ""))


def test_unknown_section_and_bad_types(tmp_path):
    with pytest.raises(ConfigError, match="nonsense"):
        load_config(None, {"nonsense.key": 1})
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "[ring]\nR_um = 'two'\n"))


def test_unextractable_cavity_is_rejected():
    with pytest.raises(ConfigError):
        load_config(None, {"rates.kappa_ex": 0.0, "rates.kappa_0": 0.0})


def test_parse_value():
    assert parse_value("3") == 3
    assert parse_value("0.5") == 0.5
    assert parse_value("'sin2'") == "sin2"
    assert parse_value("sin2") == "sin2"
    assert parse_value("[1, 2]") == [1, 2]


# --- scan specification and formatting ----------------------------------------


def test_scan_spec_validation():
    with pytest.raises(ConfigError, match="count"):
        ScanSpec("coupling-g", "coupling.x_nm", 0.0, 1.0, 1)
    with pytest.raises(ConfigError, match="min > 0"):
        ScanSpec("coupling-g", "coupling.x_nm", 0.0, 1.0, 5, "logarithmic")
    with pytest.raises(ConfigError, match="does not exist"):
        ScanSpec("coupling-g", "coupling.nope", 0.0, 1.0, 5)
    with pytest.raises(ConfigError, match="target"):
        ScanSpec("weather", "coupling.x_nm", 0.0, 1.0, 5)


def test_scan_grid_order():
    spec = ScanSpec("fidelity", "rates.kappa_0", 0.1, 1.0, 3, "logarithmic",
                    series_parameter="rates.gamma", series_values=(0.01, 0.5))
    pts = spec.points()
    assert len(pts) == 6
    assert [p["rates.gamma"] for p in pts] == [0.01] * 3 + [0.5] * 3
    np.testing.assert_allclose([p["rates.kappa_0"] for p in pts[:3]], [0.1, 10**-0.5, 1.0])


def test_column_names_and_number_format():
    assert column_name("rates.kappa_0") == "kappa_0_ghz"
    assert column_name("coupling.x_nm") == "x_nm"
    assert fmt(0.1 + 0.2) == "0.3"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(True) == "1" and fmt(7) == "7" and fmt(-0.0) == "0"


def test_scan_output_is_deterministic(tmp_path):
    spec = ScanSpec("coupling-g", "coupling.x_nm", 0.0, 30.0, 7)
    a = run_scan(spec, None, tmp_path / "a", "s")
    b = run_scan(spec, None, tmp_path / "b", "s", jobs=2)
    assert a.csv_path.read_bytes() == b.csv_path.read_bytes()

    def strip(path):
        return [l for l in path.read_text().splitlines() if '"timestamp"' not in l]

    assert strip(a.manifest_path) == strip(b.manifest_path)
    manifest = json.loads(a.manifest_path.read_text())
    assert manifest["status"] == "ok"
    assert manifest["config"]["coupling"]["L_d_nm"] == 5
    assert manifest["outputs"] == ["s.csv"]


# --- figure panels -----------------------------------------------------------------


def test_coupling_decays_with_separation(tmp_path):
    res = reproduce("fig-couple-a", tmp_path)
    data = read_csv(res.csv_path)
    slope = np.polyfit(data["x_nm"], np.log(data["g_ghz"]), 1)[0]
    assert slope == pytest.approx(-1 / 5, abs=1e-9)
    assert data["g_ghz"][0] == pytest.approx(349.3, rel=1e-3)


def test_coupling_follows_inverse_root_volume(tmp_path):
    data = read_csv(reproduce("fig-couple-b", tmp_path).csv_path)
    slope = np.polyfit(np.log(data["v_mode_m3"]), np.log(data["g_ghz"]), 1)[0]
    assert slope == pytest.approx(-0.5, abs=1e-9)


def test_outcoupling_scales_with_radius_and_fiber_area(tmp_path):
    res = reproduce("fig-couple-c", tmp_path)
    data = read_csv(res.csv_path)
    fit = np.polyfit(data["r_um"], data["kappa_r_ghz"], 1)
    assert abs(fit[1]) <= 1e-9 * fit[0]
    assert fit[0] * 2 == pytest.approx(486.10, abs=0.01)
    assert all(not c["bound_exceeded"] for c in res.checks)
    data = read_csv(reproduce("fig-couple-d", tmp_path).csv_path)
    slope = np.polyfit(np.log(data["a_fiber_m2"]), np.log(data["kappa_r_ghz"]), 1)[0]
    assert slope == pytest.approx(-1.0, abs=1e-9)


def test_spectrum_flux_scan_is_linear(tmp_path):
    data = read_csv(reproduce("spectrum-flux", tmp_path).csv_path)
    fit = np.polyfit(data["flux_over_phi0"], data["f_c_ghz"], 1)
    assert fit[0] == pytest.approx(127.324, rel=1e-5)
    resid = data["f_c_ghz"] - np.polyval(fit, data["flux_over_phi0"])
    assert np.max(np.abs(resid)) <= 1e-6


def test_reproduce_dynamics_trace(tmp_path):
    res = reproduce("fig3-a", tmp_path)
    assert res.ok
    with open(res.csv_path, newline="") as fh:
        header = next(csv.reader(fh))
    assert header == TRACE_COLUMNS
    data = read_csv(res.csv_path)
    assert data["p_fiber_plus"][-1] + data["p_fiber_minus"][-1] >= 0.99
    assert np.all(np.diff(data["t_ns"]) > 0)


def test_unknown_figure_lists_choices(tmp_path):
    with pytest.raises(ConfigError) as info:
        reproduce("fig9", tmp_path)
    assert all(f in str(info.value) for f in FIGURES)


# --- command line ---------------------------------------------------------------


def test_cli_spectrum_and_coupling(tmp_path, capsys):
    assert main(["spectrum", "--out", str(tmp_path)]) == EXIT_OK
    data = read_csv(tmp_path / "spectrum.csv")
    assert list(data["branch"]) == [1, -1]
    assert main(["coupling", "--out", str(tmp_path)]) == EXIT_OK
    data = read_csv(tmp_path / "coupling.csv")
    assert data["kappa_r_ghz"][0] == pytest.approx(486.10, abs=0.01)
    assert "coupling.csv" in capsys.readouterr().out


def test_cli_fidelity(tmp_path):
    assert main(["fidelity", "--out", str(tmp_path), "--set", "solver.n_points=51"]) == EXIT_OK
    data = read_csv(tmp_path / "fidelity.csv")
    assert data["abs_gap"][0] <= 0.02
    manifest = json.loads((tmp_path / "fidelity.manifest.json").read_text())
    assert manifest["checks"][0]["trace_ok"]


def test_cli_scan_section(tmp_path):
    base = resources.files("ringnode").joinpath("data/default.toml").read_text("utf-8")
    cfg = write(tmp_path, base + '\n[scan]\ntarget = "coupling-kappa"\nparameter = "fiber.xi"\n'
                'min = 0.0\nmax = 1.0\ncount = 5\n')
    assert main(["scan", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    data = read_csv(tmp_path / "scan-coupling-kappa.csv")
    np.testing.assert_allclose(data["kappa_r_ghz"], data["kappa_r_ghz"][-1] * data["xi"] ** 2, rtol=1e-11)


@pytest.mark.parametrize("argv", [
    ["spectrum", "--set", "ring.K_c=1.5"],
    ["spectrum", "--set", "noequals"],
    ["dynamics", "--jobs", "0"],
    ["reproduce", "fig9"],
])
def test_cli_validation_exit_code(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_VALIDATION


def test_cli_missing_section_exit_code(tmp_path, caplog):
    assert main(["spectrum", "--config", str(write(tmp_path, "")), "--out", str(tmp_path)]) == EXIT_VALIDATION
    assert "missing section: ring" in caplog.text


def test_cli_invariant_exit_code(tmp_path):
    # a solver this loose lets the state leave the positive cone
    code = main(["dynamics", "--out", str(tmp_path), "--tol-abs", "1e-5", "--tol-rel", "1e-4"])
    assert code == EXIT_INVARIANT
    manifest = json.loads((tmp_path / "dynamics.manifest.json").read_text())
    assert manifest["status"] == "invariant_violation"
    assert not manifest["checks"][0]["positivity_ok"]
