import json

import pytest

from kghlab import cli
from kghlab.config import ConfigError, parse_config, render_config

MINIMAL = """
[grid]
dim = 2
n = 16
length = 16
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestParse:
    def test_defaults_filled(self):
        cfg = parse_config(MINIMAL)
        assert cfg.grid.n == 16 and cfg.hartree.gamma == 1.0 and cfg.evolve.scheme == "strang"
        echoed = parse_config(render_config(cfg))
        assert echoed.as_dict() == cfg.as_dict()

    def test_empty(self):
        assert parse_config("").experiment.name == "evolve"

    def test_gamma_exceeds_dimension(self):
        with pytest.raises(ConfigError, match=r"hartree.gamma.*gamma < d = 5"):
            parse_config("[grid]\ndim = 5\nn = 8\nlength = 8\n[hartree]\ngamma = 7\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="grid.n: duplicate"):
            parse_config("[grid]\nn = 16\nn = 32\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="evolve.dtt: unknown key"):
            parse_config("[evolve]\ndtt = 0.1\n")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"\[solver\]"):
            parse_config("[solver]\nx = 1\n")

    def test_syntax(self):
        with pytest.raises(ConfigError, match="syntax"):
            parse_config("n = 3\n")

    @pytest.mark.parametrize("text,key", [
        ("[grid]\nn = 12\n", "grid.n"),
        ("[evolve]\ndt = 0.3\nt_end = 1.0\n", "evolve.t_end"),
        ("[evolve]\nscheme = rk4\n", "evolve.scheme"),
        ("[cutoff]\nradius = 4\n", "cutoff.radius"),
        ("[data]\nfamily = sine\n", "data.family"),
        ("[data]\ncenter = 1, 2, 3\n", "data.center"),
        ("[grid]\nn = abc\n", "grid.n"),
        ("[experiment]\nname = virial-identity\nt_star = 0.03\n", "experiment.t_star"),
    ])
    def test_constraint_names_key(self, text, key):
        with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
            parse_config(text)


class TestRun:
    def test_zero_data(self, tmp_path):
        out = tmp_path / "out"
        cfg = write(tmp_path, MINIMAL + "[data]\nfamily = zero\n[evolve]\ndt = 0.1\nt_end = 0.5\n")
        assert cli.main(["--config", cfg, "--out", str(out), "--quiet"]) == 0
        lines = (out / "timeseries.csv").read_text().splitlines()
        assert lines[0].split(",")[:4] == ["time", "energy", "momentum_1", "momentum_2"]
        assert len(lines) == 7
        for row in lines[1:]:
            vals = [float(v) for v in row.split(",")[1:]]
            assert all(v == 0 for v in vals)
        report = json.loads((out / "report.json").read_text())
        assert report["exit_status"] == 0 and report["rng_algorithm"].startswith("numpy")
        assert "[grid]" in report["config"]

    def test_deterministic_csv(self, tmp_path):
        text = MINIMAL + "[data]\nfamily = random-smooth\nsigma = 1.5\namplitude = 0.5\n[evolve]\ndt = 0.05\nt_end = 0.5\n"
        cfg = write(tmp_path, text)
        a, b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["--config", cfg, "--out", str(a), "--seed", "7", "--quiet"]) == 0
        assert cli.main(["--config", cfg, "--out", str(b), "--seed", "7", "--quiet"]) == 0
        assert (a / "timeseries.csv").read_bytes() == (b / "timeseries.csv").read_bytes()
        c = tmp_path / "c"
        cli.main(["--config", cfg, "--out", str(c), "--seed", "8", "--quiet"])
        assert (a / "timeseries.csv").read_bytes() != (c / "timeseries.csv").read_bytes()

    @pytest.mark.parametrize("dts,tol", [("0.02, 0.01, 0.005", 0.2), ("0.02, 0.01", 0.25)])
    def test_virial_identity_report(self, tmp_path, dts, tol):
        text = f"""
[grid]
dim = 2
n = 32
length = 16
[data]
sigma = 0.9
[cutoff]
radius = 3.9
[experiment]
name = virial-identity
dts = {dts}
slope_tol = {tol}
"""
        out = tmp_path / "v"
        status = cli.main(["--config", write(tmp_path, text), "--out", str(out), "--quiet"])
        report = json.loads((out / "report.json").read_text())
        assert report["summary"]["slope"] == pytest.approx(2.0, abs=tol)
        assert status == 0

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = write(tmp_path, "[hartree]\ngamma = 3\n")
        assert cli.main(["--config", cfg, "--out", str(tmp_path / "x")]) == 2
        assert "hartree.gamma" in capsys.readouterr().err

    def test_missing_file_exit(self, tmp_path):
        assert cli.main(["--config", str(tmp_path / "nope.ini")]) == 2

    def test_experiment_override(self, tmp_path):
        text = "[grid]\ndim = 2\nn = 64\nlength = 48\n[data]\namplitude = 0.001\nsigma = 1.5\n"
        out = tmp_path / "p"
        status = cli.main(["--config", write(tmp_path, text), "--out", str(out), "--experiment", "profiles-sweep",
                           "--quiet"])
        assert status == 0 and (out / "sweep.csv").exists()

    def test_assertion_failure_exit(self, tmp_path):
        text = MINIMAL + "[evolve]\ndt = 0.1\nt_end = 0.5\n[experiment]\nenergy_tol = 1e-30\n"
        assert cli.main(["--config", write(tmp_path, text), "--out", str(tmp_path / "f"), "--quiet"]) == 1

    def test_instability_exit(self, tmp_path):
        text = MINIMAL + "[data]\namplitude = 30\nsigma = 0.7\n[evolve]\ndt = 0.5\nt_end = 5\nrecord_level = light\n"
        assert cli.main(["--config", write(tmp_path, text), "--out", str(tmp_path / "i"), "--quiet"]) == 3

    def test_snapshots(self, tmp_path):
        text = MINIMAL + "[data]\namplitude = 0.2\nsigma = 2\n[evolve]\ndt = 0.1\nt_end = 0.5\nsnapshot_times = 0.2\n"
        out = tmp_path / "s"
        assert cli.main(["--config", write(tmp_path, text), "--out", str(out), "--quiet"]) == 0
        assert (out / "snapshot_u_t0.2.kgh").exists()
