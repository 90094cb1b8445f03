"""End-to-end tests of the command-line interface and run outputs."""

import csv
import json

import numpy as np
import pytest

from mmpflow.cli import main
from mmpflow.config import parse_config_text
from mmpflow.run import OUTPUT_ENV, run
from mmpflow.snapshot import read_snapshot

BASE = """\
[grid]
n = 8

[params]
mu = 0.05
chi = 0.02
kappa = 0.03
gamma = 0.04
nu = 0.05
{reduction}

[initial]
preset = {preset}
amp_omega = 0.3
amp_b = 0.5
seed = 7

[solver]
method = {method}
T = {T}
{step}

[monitors]
cadence = 2
snapshot_stride = 5
epsilons = 0.01, 0.02
"""


def write_config(tmp_path, preset="random_seeded", method="imex", T=0.04, step="dt = 0.002", reduction=""):
    path = tmp_path / "run.ini"
    path.write_text(BASE.format(preset=preset, method=method, T=T, step=step, reduction=reduction))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestRun:
    def test_zero_horizon_writes_one_record(self, tmp_path, capsys):
        cfg = write_config(tmp_path, T=0.0)
        assert main(["run", str(cfg), "-o", str(tmp_path / "out")]) == 0
        rows = read_csv(tmp_path / "out" / "diagnostics.csv")
        assert len(rows) == 2
        assert rows[1][0] == "0" and rows[1][-1] == ""

    def test_outputs_and_schema(self, tmp_path):
        res = run(parse_config_text(write_config(tmp_path).read_text()), str(tmp_path / "o"))
        assert res.exit_code == 0
        rows = read_csv(tmp_path / "o" / "diagnostics.csv")
        header = rows[0]
        assert header[:4] == ["time", "energy_u", "energy_omega", "energy_b"]
        assert [h for h in header if h.startswith("block_sup_")] == [f"block_sup_{j}" for j in range(0, 4)]
        assert header[-2:] == ["delta_0.01", "delta_0.02"]
        assert all(len(r) == len(header) for r in rows)
        assert len(rows) - 1 == 11  # t = 0, 0.004, ..., 0.04
        # 17 significant digits, plain '.' decimals
        assert rows[3][1] == format(float(rows[3][1]), ".17g")
        # delta(0.02) only once the window is covered
        times = [float(r[0]) for r in rows[1:]]
        for t, r in zip(times, rows[1:]):
            assert (r[-1] == "") == (t < 0.02 - 1e-12)
        names = sorted(p.name for p in (tmp_path / "o").iterdir())
        assert names == sorted(
            ["diagnostics.csv", "manifest.json", "final.mmp"] + [f"snap_{i:06d}.mmp" for i in (0, 5, 10, 15, 20)]
        )
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["blocks"] == {"j_min": 0, "j_max": 3, "j_full": 1}
        assert manifest["config"]["grid"]["n"] == 8
        assert "numpy" in manifest["versions"]
        assert set(manifest["sup_sampling_bias"]) == {"0", "1", "2", "3"}

    def test_deterministic(self, tmp_path):
        cfg = write_config(tmp_path)
        main(["run", str(cfg), "-o", str(tmp_path / "a")])
        main(["run", str(cfg), "-o", str(tmp_path / "b")])
        for name in ("diagnostics.csv", "manifest.json", "final.mmp"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_micropolar_keeps_b_zero(self, tmp_path):
        cfg = write_config(tmp_path, reduction="reduction = micropolar")
        main(["run", str(cfg), "-o", str(tmp_path / "o")])
        rows = read_csv(tmp_path / "o" / "diagnostics.csv")
        col = rows[0].index("energy_b")
        assert all(float(r[col]) == 0.0 for r in rows[1:])

    def test_picard_solver(self, tmp_path):
        cfg = write_config(tmp_path, preset="taylor_green", method="picard", T=0.02, step="M = 10")
        assert main(["run", str(cfg), "-o", str(tmp_path / "o")]) == 0
        state, _, header = read_snapshot(tmp_path / "o" / "final.mmp")
        assert header.time == pytest.approx(0.02)

    def test_env_output_dir(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, T=0.0)
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
        assert main(["run", str(cfg)]) == 0
        assert (tmp_path / "env" / "diagnostics.csv").exists()

    def test_instability_exit_code_and_last_snapshot(self, tmp_path, capsys):
        text = BASE.format(preset="taylor_green", method="imex", T=20.0, step="dt = 0.5", reduction="")
        text = text.replace("amp_omega = 0.3", "amp_u = 1000.0\namp_omega = 0.3")
        path = tmp_path / "bad.ini"
        path.write_text(text)
        assert main(["run", str(path), "-o", str(tmp_path / "o")]) == 2
        assert "t=" in capsys.readouterr().err
        state, _, header = read_snapshot(tmp_path / "o" / "last_good.mmp")
        assert np.all(np.isfinite(state.stack()))
        assert (tmp_path / "o" / "diagnostics.csv").exists()

    def test_invalid_config_is_usage_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        cfg.write_text(cfg.read_text().replace("mu = 0.05", "mu = -1"))
        assert main(["run", str(cfg)]) == 1
        assert "mu must be positive" in capsys.readouterr().err


class TestOtherCommands:
    def test_inspect(self, tmp_path, capsys):
        cfg = write_config(tmp_path, T=0.0)
        main(["run", str(cfg), "-o", str(tmp_path / "o")])
        snap = tmp_path / "o" / "snap_000000.mmp"
        capsys.readouterr()
        assert main(["inspect", str(snap)]) == 0
        out = capsys.readouterr().out
        assert "n        8" in out and "mu=0.05" in out

    def test_inspect_corrupt(self, tmp_path):
        bad = tmp_path / "bad.mmp"
        bad.write_bytes(b"nonsense")
        assert main(["inspect", str(bad)]) == 1

    @pytest.mark.parametrize("suite", ["spectral", "dynamics", "monitors"])
    def test_verify_suites_pass(self, suite, capsys):
        assert main(["verify", suite]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and "checks passed" in out

    def test_verify_failure_exit_code(self, monkeypatch):
        from mmpflow import verify

        failing = lambda: [verify.Check("forced", 1.0, 0.5, False)]  # noqa: E731
        monkeypatch.setitem(verify.SUITES, "spectral", failing)
        assert main(["verify", "spectral"]) == 3

    def test_usage_errors(self):
        assert main([]) == 1
        assert main(["verify", "nope"]) == 1
