import json

import numpy as np
import pytest

from ringcarl import cli
from ringcarl.config import ConfigError, RunManifest, parse_config, sha256_file

MINIMAL = """
[run]
mode = nbody
t_end = 1.0
dt = 0.05
sample_every = 0.1

[physics]
delta = -1.0
n_particles = 64
nu0 = -1.0
rho_r = 0.01
u_t = 3.0
s_total = 8.0
a_over_s = 0.25
"""


class TestParseConfig:
    def test_minimal(self):
        cfg = parse_config(MINIMAL)
        assert cfg.mode == "nbody"
        assert cfg.params.delta == -1.0
        assert cfg.params.s_total == pytest.approx(8.0)
        assert cfg.params.a_asym == pytest.approx(2.0)
        assert cfg.params.u0 == pytest.approx(-1.0 / 64)

    def test_empty_lists_all_required(self):
        with pytest.raises(ConfigError) as err:
            parse_config("")
        msgs = "\n".join(err.value.violations)
        for key in ("run.mode", "physics.delta", "physics.n_particles",
                    "physics.nu0", "physics.u_t"):
            assert key in msgs

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config(MINIMAL + "\nbogus_key = 3\n")
        assert any("bogus_key" in v for v in err.value.violations)

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config(MINIMAL + "\n[mystery]\nx = 1\n")
        assert any("mystery" in v for v in err.value.violations)

    def test_asymmetry_exceeding_total_rejected(self):
        bad = MINIMAL.replace("a_over_s = 0.25", "a_asym = 9.0")
        with pytest.raises(ConfigError):
            parse_config(bad)

    def test_multiple_violations_reported_together(self):
        bad = MINIMAL.replace("t_end = 1.0", "t_end = -1").replace(
            "delta = -1.0", "delta = zebra"
        )
        with pytest.raises(ConfigError) as err:
            parse_config(bad)
        assert len(err.value.violations) >= 2

    def test_grid_syntax(self):
        text = MINIMAL.replace("mode = nbody", "mode = phase-diagram")
        text += "\n[sweep]\ns_over_sc = 0.5:2.0:4\na_over_s = 0.0, 0.3\n"
        cfg = parse_config(text)
        assert cfg.options["sweep"]["s_over_sc"] == pytest.approx(
            [0.5, 1.0, 1.5, 2.0]
        )
        assert cfg.options["sweep"]["a_over_s"] == [0.0, 0.3]

    def test_s_over_sc_resolution(self):
        from ringcarl import stability

        text = MINIMAL.replace("s_total = 8.0", "s_over_sc = 2.0")
        cfg = parse_config(text)
        sc = stability.threshold_sc_a0(cfg.params)
        assert cfg.params.s_total == pytest.approx(2 * sc)


class TestPresets:
    def test_listing(self):
        names = cli.preset_names()
        assert {"fig2", "fig3", "fig5", "slow-beam", "phase-diagram"} <= set(names)

    def test_fig2_parameters(self):
        cfg = parse_config(cli.load_preset("fig2"))
        assert cfg.params.delta == -1.0
        assert cfg.params.u_t == 3.0
        assert cfg.params.a_asym / cfg.params.s_total == pytest.approx(0.3)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            cli.load_preset("fig99")


class TestRunExperiment:
    def test_nbody_artifacts(self, tmp_path):
        cfg = parse_config(MINIMAL)
        manifest = cli.run_experiment(cfg, tmp_path)
        ts = tmp_path / "timeseries.csv"
        assert ts.exists()
        header = ts.read_text().splitlines()[0]
        assert header == ",".join(cli.TIMESERIES_HEADER)
        assert manifest.files["timeseries.csv"] == sha256_file(ts)
        saved = RunManifest.from_json((tmp_path / "manifest.json").read_text())
        assert saved.files == manifest.files
        assert "carl_bound" in saved.derived

    def test_determinism(self, tmp_path):
        cfg = parse_config(MINIMAL)
        cli.run_experiment(cfg, tmp_path / "a")
        cli.run_experiment(cfg, tmp_path / "b")
        assert (tmp_path / "a/timeseries.csv").read_bytes() == (
            tmp_path / "b/timeseries.csv"
        ).read_bytes()

    def test_boundary_mode(self, tmp_path):
        text = MINIMAL.replace("mode = nbody", "mode = stability-boundary")
        text += "\n[boundary]\nn_omega = 50\n"
        cli.run_experiment(parse_config(text), tmp_path)
        rows = (tmp_path / "boundary_ut3.csv").read_text().splitlines()
        assert rows[0] == "omega,S,A"
        assert len(rows) > 10

    def test_vlasov_snapshot_format(self, tmp_path):
        text = MINIMAL.replace("mode = nbody", "mode = vlasov")
        text += "\n[vlasov]\nnx = 16\nnv = 32\n"
        cli.run_experiment(parse_config(text), tmp_path)
        snap = tmp_path / "snapshot_tau1.txt"
        lines = snap.read_text().splitlines()
        assert lines[0] == "16 32"
        assert len(lines) == 17
        assert len(lines[1].split()) == 32

    def test_phase_diagram_and_resume(self, tmp_path):
        text = MINIMAL.replace("mode = nbody", "mode = phase-diagram")
        text += "\n[sweep]\ns_over_sc = 0.5, 2.0\na_over_s = 0.0\n"
        cfg = parse_config(text)
        m1 = cli.run_experiment(cfg, tmp_path)
        assert m1.results["n_computed"] == 2
        rows = (tmp_path / "phase_diagram.csv").read_text().splitlines()
        regimes = {r.split(",")[2] for r in rows[1:]}
        assert "stable" in regimes and len(regimes) == 2  # one above threshold
        m2 = cli.run_experiment(cfg, tmp_path)
        assert m2.results["n_computed"] == 0
        assert m2.results["n_resumed"] == 2

    def test_slow_beam_requires_drift(self, tmp_path):
        text = MINIMAL.replace("mode = nbody", "mode = slow-beam")
        text = text.replace("a_over_s = 0.25", "a_over_s = 0.0")
        with pytest.raises(ConfigError):
            cli.run_experiment(parse_config(text), tmp_path)


class TestMain:
    def test_missing_config_file(self, capsys):
        assert cli.main(["nbody", "--config", "/nonexistent.ini"]) == 3

    def test_invalid_config(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[run]\nmode = nbody\n")
        assert cli.main(["nbody", "--config", str(bad)]) == 1

    def test_mode_mismatch(self, tmp_path):
        good = tmp_path / "ok.ini"
        good.write_text(MINIMAL)
        assert cli.main(["vlasov", "--config", str(good)]) == 1

    def test_successful_run_and_seed_override(self, tmp_path, capsys):
        good = tmp_path / "ok.ini"
        good.write_text(MINIMAL)
        rc = cli.main([
            "nbody", "--config", str(good),
            "--out", str(tmp_path / "r"), "--seed", "42",
        ])
        assert rc == 0
        m = json.loads((tmp_path / "r/manifest.json").read_text())
        assert m["config"]["run"]["seed"] == "42"

    def test_presets_subcommand(self, capsys):
        assert cli.main(["presets"]) == 0
        assert "fig2" in capsys.readouterr().out


class TestFloatFormat:
    def test_roundtrip(self):
        for x in (0.1, 1e-17, 3.0, np.pi, -2.5e8):
            assert float(cli._fmt(x)) == float(x)
