"""End-to-end runs of the command line pipelines on small scenarios."""

import json
import os

import numpy as np
import pytest

from gyroled.cli import main

SMOOTH_SMALL = """
profile.charge.kind = smooth-shell
profile.mass.kind = smooth-shell
pulse.amplitude = 1e-3
pulse.r_min = 2.0
pulse.r_max = 3.0
solver.horizon = 2.0
solver.step = 0.0625
grid.extent = 6.0
grid.cells_per_unit = 12
grid.t_end = 2.0
grid.sample_every = 2
compare.tol_rel = 5e-3
"""

SHELL_SHORT = """
pulse.amplitude = 6e-5
solver.horizon = 8.0
solver.step = 0.0625
decay.detach = 5.0
decay.window = 1.0
"""


def read_header(path):
    return path.read_text().splitlines()[0]


@pytest.fixture()
def smooth_cfg(tmp_path):
    path = tmp_path / "smooth.cfg"
    path.write_text(SMOOTH_SMALL)
    return path


class TestTableCommands:
    def test_kernel_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["kernel", "--out", str(out)]) == 0
        assert read_header(out / "kernel.csv") == "t,K"
        assert (out / "kernel.png").is_file()
        norms = json.loads((out / "kernel_norms.json").read_text())
        assert set(norms) == {"norm_1", "norm_inf", "kappa"}
        assert norms["kappa"] == pytest.approx(2.0 / 9.0, rel=1e-9)
        assert norms["norm_inf"] == pytest.approx(1.0 / 3.0, rel=1e-9)
        printed = json.loads(capsys.readouterr().out)
        assert printed == norms

    def test_kernel_output_is_deterministic(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["kernel", "--out", str(out1)]) == 0
        assert main(["kernel", "--out", str(out2)]) == 0
        assert (out1 / "kernel.csv").read_bytes() == (out2 / "kernel.csv").read_bytes()

    def test_rotor_artifacts(self, tmp_path):
        out = tmp_path / "out"
        assert main(["rotor", "--out", str(out)]) == 0
        lines = (out / "rotor.csv").read_text().splitlines()
        assert lines[0] == "omega,iota,mass,s_b"
        first = [float(x) for x in lines[1].split(",")]
        assert first[0] == 0.0
        assert first[1] == pytest.approx(2.0 / 3.0, rel=1e-9)
        assert first[2] == pytest.approx(1.0, rel=1e-9)
        assert (out / "rotor.png").is_file()

    def test_sweep_finds_threshold(self, tmp_path):
        out = tmp_path / "out"
        assert main(["sweep", "--preset", "threshold-sweep", "--out", str(out)]) == 0
        payload = json.loads((out / "sweep.json").read_text())
        assert payload["threshold_coupling"] == pytest.approx(1.6408, abs=1e-3)
        assert read_header(out / "sweep.csv") == "coupling,norm_1,iota0,margin"


class TestScatterCommand:
    def test_short_shell_scatter(self, tmp_path):
        cfg = tmp_path / "short.cfg"
        cfg.write_text(SHELL_SHORT)
        out = tmp_path / "out"
        assert main(["scatter", "--config", str(cfg), "--out", str(out)]) == 0
        assert read_header(out / "trajectory.csv") == "t,s_b,omega"
        iteration = json.loads((out / "iteration.json").read_text())
        assert iteration["converged"] is True
        assert iteration["lambda_star"] == pytest.approx(1.9724, abs=1e-3)
        assert len(iteration["lambda_deltas"]) == iteration["sweeps"]
        decay = json.loads((out / "decay.json").read_text())
        assert decay["smallness_margin"] == pytest.approx(0.26035, abs=1e-4)
        assert len(decay["maxima"]) >= 2
        assert (out / "scatter.png").is_file()


class TestGridCommands:
    def test_field_artifacts(self, tmp_path, smooth_cfg):
        out = tmp_path / "out"
        assert main(["field", "--config", str(smooth_cfg), "--out", str(out)]) == 0
        assert read_header(out / "field_series.csv") == "t,energy,s_f,torque,L_f,p_norm"
        assert read_header(out / "field_snapshot.csv") == "zeta,z,psi,psi_dot"
        assert (out / "field.png").is_file()
        rows = (out / "field_series.csv").read_text().splitlines()[1:]
        energy = np.array([float(r.split(",")[1]) for r in rows])
        assert np.all(energy > 0)
        # coarse smoke grid, so only a loose conservation sanity check
        assert np.max(np.abs(energy - energy[0])) / energy[0] < 5e-2

    def test_cosim_and_audit_artifacts(self, tmp_path, smooth_cfg):
        out = tmp_path / "cosim"
        assert main(["cosim", "--config", str(smooth_cfg), "--out", str(out)]) == 0
        assert read_header(out / "audit.csv") == "t,W,L_axis,sigma,p_norm,power_residual"
        assert read_header(out / "trajectory.csv") == "t,s_b,omega"
        payload = json.loads((out / "cosim.json").read_text())
        assert payload["passed"] is True

        out2 = tmp_path / "audit"
        assert main(["audit", "--config", str(smooth_cfg), "--out", str(out2)]) == 0
        payload = json.loads((out2 / "audit.json").read_text())
        assert payload["energy"]["passed"] is True
        assert payload["canonical_spin"]["rel"] <= payload["tolerance_rel"]
        for name in ("audit_energy", "audit_angular", "audit_sigma",
                     "audit_momentum", "audit_power"):
            assert read_header(out2 / f"{name}.csv") == "t,value"
        assert (out2 / "audit.png").is_file()

    def test_compare_passes_on_matched_scenario(self, tmp_path, smooth_cfg):
        out = tmp_path / "out"
        assert main(["compare", "--config", str(smooth_cfg), "--out", str(out)]) == 0
        payload = json.loads((out / "compare.json").read_text())
        assert payload["passed"] is True
        assert payload["sup_diff"] <= payload["tolerance"]
        assert read_header(out / "compare_grid.csv") == "t,s_b,omega"

    def test_surface_shell_on_grid_is_config_error(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["audit", "--out", str(out)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert "mollified" in err["error"]["message"]


class TestCliPlumbing:
    def test_print_config(self, capsys):
        assert main(["scatter", "--preset", "shell-scatter", "--print-config"]) == 0
        text = capsys.readouterr().out
        assert "solver.step = 0.015625" in text
        assert "pulse.amplitude = 6e-05" in text

    def test_unknown_key_reports_json_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("bogus.key = 3\n")
        assert main(["kernel", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "ConfigError"

    def test_thread_env_is_forwarded(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GYROLED_THREADS", "2")
        monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
        assert main(["kernel", "--out", str(tmp_path / "o")]) == 0
        assert os.environ["OMP_NUM_THREADS"] == "2"

    def test_bad_thread_env_is_config_error(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("GYROLED_THREADS", "many")
        assert main(["kernel", "--out", str(tmp_path / "o")]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "ConfigError"
