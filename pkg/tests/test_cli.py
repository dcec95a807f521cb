"""Command-line front end: config parsing, modes, exit codes, determinism."""

import shutil
import subprocess

import pytest

from deadcore.cli import ConfigError, main, read_config


def write_config(path, **keys):
    path.write_text("".join(f"{k} = {v}\n" for k, v in keys.items()))
    return str(path)


SOLVE_KEYS = dict(h="1/16", a="1", R="2", s="0.75", gamma="0.2", amplitude="1")


class TestReadConfig:
    def test_parses_comments_and_fractions(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# header\nh = 1/16  # spacing\n\ngamma = 0.2\n")
        cfg = read_config(str(path))
        assert cfg == {"h": "1/16", "gamma": "0.2"}

    def test_missing_equals_reports_line(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("h = 1/16\njust words\n")
        with pytest.raises(ConfigError, match=r"c\.cfg:2"):
            read_config(str(path))

    def test_duplicate_key_reports_line(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("h = 1\nh = 2\n")
        with pytest.raises(ConfigError, match="duplicate key"):
            read_config(str(path))

    def test_empty_value_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("h =\n")
        with pytest.raises(ConfigError, match="empty key or value"):
            read_config(str(path))


class TestExitCodes:
    def test_malformed_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("no equals sign\n")
        code = main(["solve", "--config", str(path), "--out", str(tmp_path)])
        assert code == 2
        assert "bad.cfg:1" in capsys.readouterr().err

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.cfg", **SOLVE_KEYS, pairs="5")
        code = main(["solve", "--config", cfg, "--out", str(tmp_path)])
        assert code == 2
        assert "unknown key" in capsys.readouterr().err

    def test_missing_required_keys_exit_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.cfg", h="1/16", a="1")
        code = main(["solve", "--config", cfg, "--out", str(tmp_path)])
        assert code == 2
        assert "missing required" in capsys.readouterr().err

    def test_nonconvergence_exits_3(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.cfg", **SOLVE_KEYS, max_iter="1")
        code = main(["solve", "--config", cfg, "--out", str(tmp_path)])
        assert code == 3
        assert "did not converge" in capsys.readouterr().err

    def test_bad_grid_parameters_exit_2(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path / "c.cfg", h="0.3", a="1", s="0.75", gamma="0.2"
        )
        code = main(["solve", "--config", cfg, "--out", str(tmp_path)])
        assert code == 2


class TestModes:
    def test_solve_writes_solution_and_sidecar(self, tmp_path):
        cfg = write_config(tmp_path / "run.cfg", **SOLVE_KEYS)
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
        csv = out / "run_solve.csv"
        meta = out / "run_solve.meta"
        assert csv.exists() and meta.exists()
        assert csv.read_text().startswith("# tail=zero\nx,u\n")
        meta_map = dict(
            line.split("=", 1) for line in meta.read_text().strip().splitlines()
        )
        assert meta_map["converged"] == "true"
        assert meta_map["seed"] == "0"

    def test_solve_local(self, tmp_path):
        cfg = write_config(
            tmp_path / "loc.cfg", h="1/32", a="1", gamma="0.2", left="-0.5", right="0.5"
        )
        out = tmp_path / "out"
        assert main(["solve-local", "--config", cfg, "--out", str(out)]) == 0
        meta = (out / "loc_solve-local.meta").read_text()
        assert "s=1\n" in meta

    def test_exponent_local(self, tmp_path):
        kappa = 0.1916288597136449
        cfg = write_config(
            tmp_path / "exp.cfg",
            h="1/128",
            a="1",
            gamma="0.2",
            operator="local",
            left=f"{-kappa}",
            right=f"{kappa}",
        )
        out = tmp_path / "out"
        assert main(["exponent", "--config", cfg, "--out", str(out)]) == 0
        exp_csv = (out / "exp_exponent.csv").read_text().splitlines()
        assert exp_csv[0] == "s,gamma,x0,slope,target,relative_gap,r2"
        slope = float(exp_csv[1].split(",")[3])
        assert slope == pytest.approx(2.5, rel=0.05)
        assert (out / "exp_branching.csv").exists()
        assert "slope=" in (out / "exp_exponent.meta").read_text()

    def test_blowup(self, tmp_path):
        # h = 1/32 keeps the rescaled lattice h/r at the warning threshold
        cfg = write_config(
            tmp_path / "bl.cfg", **{**SOLVE_KEYS, "h": "1/32"}, r="1/2"
        )
        out = tmp_path / "out"
        assert main(["blowup", "--config", cfg, "--out", str(out)]) == 0
        text = (out / "bl_blowup.csv").read_text()
        assert text.startswith("# tail=zero\nx,u\n")

    def test_compare(self, tmp_path):
        cfg = write_config(
            tmp_path / "cmp.cfg", h="1/16", a="1", R="2", s="0.75", gamma="0.2", pairs="2"
        )
        out = tmp_path / "out"
        assert main(["compare", "--config", cfg, "--out", str(out), "--seed", "3"]) == 0
        lines = (out / "cmp_compare.csv").read_text().splitlines()
        assert lines[0] == "pair,violation,passed"
        assert len(lines) == 3
        meta = (out / "cmp_compare.meta").read_text()
        assert "pairs=2\n" in meta and "failures=0\n" in meta and "seed=3\n" in meta

    def test_liouville(self, tmp_path):
        cfg = write_config(tmp_path / "lv.cfg", **SOLVE_KEYS)
        out = tmp_path / "out"
        assert main(["liouville", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "lv_liouville.csv").read_text().splitlines()
        assert lines[0] == "r,q"
        assert "classification=" in (out / "lv_liouville.meta").read_text()

    def test_slimit(self, tmp_path):
        cfg = write_config(
            tmp_path / "sl.cfg",
            h="1/64",
            a="1",
            R="2",
            gamma="0.2",
            s_list="0.75,0.9",
            amplitude="4",
        )
        out = tmp_path / "out"
        assert main(["slimit", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "sl_slimit.csv").read_text().splitlines()
        assert lines[0] == "s,distance,slope"
        assert len(lines) == 3

    def test_validate_ok(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "v.cfg", **SOLVE_KEYS)
        out = tmp_path / "out"
        assert main(["validate", "--config", cfg, "--out", str(out)]) == 0
        assert "status=ok" in capsys.readouterr().out
        assert (out / "v_validate.meta").exists()

    def test_validate_bad_params_exits_2_but_reports(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "v.cfg", h="1/16", a="1", s="0.3", gamma="0.2")
        out = tmp_path / "out"
        assert main(["validate", "--config", cfg, "--out", str(out)]) == 2
        captured = capsys.readouterr()
        assert "status=error" in captured.out
        assert (out / "v_validate.meta").exists()


class TestDryRun:
    def test_writes_nothing(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "run.cfg", **SOLVE_KEYS)
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out), "--dry-run"]) == 0
        assert "dry-run" in capsys.readouterr().out
        assert not out.exists()

    def test_validate_dry_run_prints_without_files(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "v.cfg", **SOLVE_KEYS)
        out = tmp_path / "out"
        assert main(["validate", "--config", cfg, "--out", str(out), "--dry-run"]) == 0
        assert "status=ok" in capsys.readouterr().out
        assert not out.exists()


class TestDeterminism:
    def test_repeat_runs_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path / "run.cfg", **SOLVE_KEYS)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["solve", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["solve", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "run_solve.csv").read_bytes() == (out2 / "run_solve.csv").read_bytes()
        assert (out1 / "run_solve.meta").read_bytes() == (out2 / "run_solve.meta").read_bytes()


class TestJobs:
    def test_parallel_configs(self, tmp_path):
        cfg1 = write_config(tmp_path / "a.cfg", **SOLVE_KEYS)
        cfg2 = write_config(tmp_path / "b.cfg", **{**SOLVE_KEYS, "amplitude": "2"})
        out = tmp_path / "out"
        code = main(
            ["solve", "--config", cfg1, "--config", cfg2, "--out", str(out), "--jobs", "2"]
        )
        assert code == 0
        assert (out / "a_solve.csv").exists()
        assert (out / "b_solve.csv").exists()

    def test_worst_exit_code_wins(self, tmp_path, capsys):
        good = write_config(tmp_path / "good.cfg", **SOLVE_KEYS)
        bad = tmp_path / "bad.cfg"
        bad.write_text("nonsense\n")
        out = tmp_path / "out"
        code = main(["solve", "--config", good, "--config", str(bad), "--out", str(out)])
        assert code == 2
        assert (out / "good_solve.csv").exists()


class TestEntryPoint:
    def test_console_script_runs(self, tmp_path):
        exe = shutil.which("deadcore")
        assert exe is not None, "console script not installed"
        cfg = write_config(tmp_path / "v.cfg", **SOLVE_KEYS)
        proc = subprocess.run(
            [exe, "validate", "--config", cfg, "--out", str(tmp_path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "status=ok" in proc.stdout
