import json
import math

import numpy as np
import pytest

from mstomo import cli, config, core, gate, measures
from mstomo.config import ConfigError, RunConfig


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------

def test_defaults_give_operating_point():
    cfg = RunConfig()
    params = cfg.gate_params()
    assert params.delta / config.KHZ == pytest.approx(12.8)
    assert params.tau_g * 1e6 == pytest.approx(78.125)


def test_parse_config_text():
    cfg = config.parse_config("""
# comment
eta_omega_khz = 6.3
nbar = 0.3      # inline comment
delta_khz = none
shots = 150
""")
    assert cfg.eta_omega_khz == 6.3
    assert cfg.nbar == 0.3
    assert cfg.delta_khz is None
    assert cfg.shots == 150


def test_parse_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        config.parse_config("eta_omega_mhz = 6.3")


def test_parse_config_rejects_bad_values():
    with pytest.raises(ConfigError, match="bad value"):
        config.parse_config("shots = many")
    with pytest.raises(ConfigError, match="cannot be none"):
        config.parse_config("shots = none")
    with pytest.raises(ConfigError, match="expected"):
        config.parse_config("just some words")


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(p_sc=1.5)
    with pytest.raises(ConfigError):
        RunConfig(f_prep=0.1)
    with pytest.raises(ConfigError):
        RunConfig(m=0)
    with pytest.raises(ConfigError):
        RunConfig(bootstrap_resamples=10)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        config.load_config(tmp_path / "nope.cfg")


def test_explicit_detuning_overrides_operating_point():
    cfg = RunConfig(delta_khz=10.0)
    assert cfg.gate_params().delta / config.KHZ == pytest.approx(10.0)


# ---------------------------------------------------------------------------
# scan command
# ---------------------------------------------------------------------------

def run_cli(*args):
    return cli.main([str(a) for a in args])


def test_detuning_scan_hits_unit_brightness(tmp_path):
    cfg_path = tmp_path / "scan.cfg"
    cfg_path.write_text(
        "eta_omega_khz = 6.3\nnbar = 0.3\nscan_t_us = 75\n"
        "scan_delta_min_khz = 6\nscan_delta_max_khz = 20\nscan_points = 29\n")
    assert run_cli("scan", "detuning", "--config", cfg_path, "--out", tmp_path) == 0
    rows = (tmp_path / "scan_detuning.csv").read_text().splitlines()
    assert rows[0] == "t_us,delta_kHz,s_av,parity"
    data = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
    near_gate = data[np.argmin(np.abs(data[:, 1] - 12.6))]
    assert abs(near_gate[2] - 1.0) < 0.05
    sidecar = json.loads((tmp_path / "scan_detuning.config.json").read_text())
    assert sidecar["eta_omega_khz"] == 6.3


def test_time_scan_parity_returns_at_loop_closures(tmp_path):
    cfg_path = tmp_path / "scan.cfg"
    cfg_path.write_text(
        "eta_omega_khz = 6.4\nscan_t_min_us = 0\nscan_t_max_us = 156.25\n"
        "scan_points = 5\n")
    assert run_cli("scan", "time", "--config", cfg_path, "--out", tmp_path) == 0
    rows = (tmp_path / "scan_time.csv").read_text().splitlines()[1:]
    data = np.array([[float(x) for x in row.split(",")] for row in rows])
    # closures at 0, 78.125 and 156.25 us for delta/2pi = 12.8 kHz
    assert data[0, 3] == pytest.approx(1.0, abs=1e-9)
    assert data[2, 3] == pytest.approx(1.0, abs=1e-9)
    assert data[4, 3] == pytest.approx(1.0, abs=1e-9)
    assert data[1, 3] < 1.0


def test_zero_point_scan_writes_header_only(tmp_path):
    cfg_path = tmp_path / "scan.cfg"
    cfg_path.write_text("scan_points = 0\n")
    assert run_cli("scan", "parity", "--config", cfg_path, "--out", tmp_path) == 0
    rows = (tmp_path / "scan_parity.csv").read_text().splitlines()
    assert rows == ["t_us,delta_kHz,s_av,parity"]


def test_scan_range_crossing_zero_fails(tmp_path):
    cfg_path = tmp_path / "scan.cfg"
    cfg_path.write_text("scan_delta_min_khz = -4\nscan_delta_max_khz = 4\n"
                        "scan_points = 9\n")
    assert run_cli("scan", "detuning", "--config", cfg_path, "--out", tmp_path) == 1


# ---------------------------------------------------------------------------
# tomography command
# ---------------------------------------------------------------------------

def test_tomo_writes_all_documents(tmp_path):
    code = run_cli("tomo", "--state", "uu", "--seed", "3", "--out", tmp_path,
                   "--no-bootstrap", "--emit-intermediate")
    assert code == 0
    for name in ("tomo_uu_counts.csv", "tomo_uu_density.json",
                 "tomo_uu_measures.json", "tomo_uu_linear.json",
                 "tomo_uu.config.json"):
        assert (tmp_path / name).exists(), name
    density = json.loads((tmp_path / "tomo_uu_density.json").read_text())
    assert density["diagnostics"]["converged"] is True
    assert density["config"]["seed"] == 3
    rho = core.density_from_dict(density)
    assert core.validate_density(rho).ok
    measures_doc = json.loads((tmp_path / "tomo_uu_measures.json").read_text())
    assert measures_doc["f"] > 0.9


def test_tomo_outputs_are_reproducible(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert run_cli("tomo", "--state", "ud", "--seed", "11", "--out", out,
                       "--no-bootstrap") == 0
    for name in ("tomo_ud_counts.csv", "tomo_ud_density.json",
                 "tomo_ud_measures.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_tomo_bootstrap_report(tmp_path):
    code = run_cli("tomo", "--state", "uu", "--seed", "5", "--out", tmp_path,
                   "--resamples", "100")
    assert code == 0
    boot = json.loads((tmp_path / "tomo_uu_bootstrap.json").read_text())
    assert boot["valid"] is True
    assert boot["n_resamples"] == 100
    assert 0.0 <= boot["std_error"] <= 0.1


def test_noiseless_pipeline_reaches_high_fidelity():
    fids = []
    for seed in range(9):
        cfg = RunConfig(seed=seed)
        result = cli.run_tomography(cfg, "uu", with_bootstrap=False)
        fids.append(result.report.f)
    assert np.median(fids) >= 0.97


def test_noisy_pipeline_orders_even_above_odd():
    cfg = RunConfig(p_sc=0.3, kappa=0.27, f_prep=0.85,
                    det_fid_q1=0.97, det_fid_q2=0.97,
                    phi_e_rad=-1.1, phi_o_rad=0.43, seed=21)
    even = cli.run_tomography(cfg, "uu", with_bootstrap=False).report.f
    odd = cli.run_tomography(cfg, "ud", with_bootstrap=False).report.f
    assert even > odd


def test_prepared_state_noise_chain():
    cfg = RunConfig(p_sc=0.3, kappa=0.27, f_prep=0.85,
                    phi_e_rad=-1.1, phi_o_rad=0.43)
    rho_even, target_even = cli.prepared_state(cfg, "uu")
    assert measures.fidelity(rho_even, target_even) == pytest.approx(0.781,
                                                                     abs=1e-12)
    rho_odd, target_odd = cli.prepared_state(cfg, "du")
    expected = (1 - 0.3) * 0.85 + 0.3 * 0.27
    assert measures.fidelity(rho_odd, target_odd) == pytest.approx(expected,
                                                                   abs=1e-12)


# ---------------------------------------------------------------------------
# budget and analyze commands
# ---------------------------------------------------------------------------

def test_budget_command_documents(tmp_path, capsys):
    assert run_cli("budget", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "budget.json").read_text())
    assert doc["phi_st_rad"] == pytest.approx(12 * math.pi, rel=1e-9)
    assert doc["p_sc"] == pytest.approx(0.311, abs=0.005)
    assert doc["predicted_infidelity"] == pytest.approx(0.73 * doc["p_sc"],
                                                        rel=1e-9)
    table = capsys.readouterr().out
    assert "beta" in table and "p_sc" in table


def test_budget_scales_with_raman_detuning(tmp_path):
    base = cli.budget_table(RunConfig(dnu_st_khz=None, tau_g_us=None))[1]
    wide = cli.budget_table(RunConfig(dnu_st_khz=None, tau_g_us=None,
                                      delta_raman_khz=2.0e9))[1]
    assert wide["p_sc"] == pytest.approx(base["p_sc"] / 10)
    assert wide["phi_st_rad"] == pytest.approx(base["phi_st_rad"] / 10)


def test_budget_rejects_zero_efficiency(tmp_path):
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("epsilon = 0\n")
    assert run_cli("budget", "--config", cfg_path, "--out", tmp_path) == 1


def test_analyze_command_round_trip(tmp_path):
    rho = core.projector(gate.target_state("dd", phi_e=-1.1))
    path = tmp_path / "density.json"
    path.write_text(json.dumps(core.density_to_dict(rho)))
    assert run_cli("analyze", "--density", path, "--state", "dd",
                   "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "measures.json").read_text())
    assert doc["f"] == pytest.approx(1.0, abs=1e-9)
    assert doc["phi_fit"] == pytest.approx(-1.1, abs=1e-9)


def test_analyze_rejects_unphysical_density(tmp_path):
    rho = np.diag([0.7, 0.5, -0.1, -0.1]).astype(complex)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(core.density_to_dict(rho)))
    assert run_cli("analyze", "--density", path, "--out", tmp_path) == 2


def test_analyze_rejects_missing_file(tmp_path):
    assert run_cli("analyze", "--density", tmp_path / "none.json",
                   "--out", tmp_path) == 1
