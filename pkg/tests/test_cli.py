import csv
import subprocess
import sys

from fixedtime_etc import config as C
from fixedtime_etc.cli import main


def _cfg(tmp_path, name, extra=()):
    cfg = C.apply_overrides(C.preset(name), ["duration=0.2", *extra])
    path = tmp_path / f"{name}{len(extra)}.yaml"
    C.save_config(cfg, path)
    return str(path)


def test_run_preset_writes_files(tmp_path, capsys):
    # the printed experiment parameters leave the box within a few cycles
    code = main(["run", "--preset", "paper-sec4-fixed", "--out", str(tmp_path)])
    assert code in (0, 2)
    for suffix in ("config.yaml", "trajectory.csv", "events.csv", "summary.txt"):
        assert (tmp_path / f"paper-sec4-fixed_{suffix}").exists()
    assert "# normalized config" in capsys.readouterr().out


def test_run_preset_exits_zero(tmp_path):
    """The experiment preset runs to completion."""
    assert main(["run", "--preset", "paper-sec4-fixed", "--out", str(tmp_path)]) == 0


def test_run_out_of_box_initial_state(tmp_path):
    assert main(["run", "--preset", "paper-sec4-fixed", "--override", "x1_0=5", "--out", str(tmp_path)]) == 2


def test_run_without_config(capsys):
    assert main(["run"]) == 1
    assert "usage" in capsys.readouterr().err


def test_no_subcommand():
    assert main([]) == 1


def test_bad_flag():
    assert main(["run", "--no-such-flag"]) == 1


def test_config_error_exit(tmp_path):
    assert main(["run", "--preset", "demo-fixed", "--override", "controller.f[0]=0.2", "--out", str(tmp_path)]) == 1
    assert main(["run", str(tmp_path / "missing.yaml")]) == 1


def test_run_demo_file_with_extras(tmp_path):
    cfg = _cfg(tmp_path, "demo-self")
    out = tmp_path / "o"
    assert main(["run", cfg, "--out", str(out), "--plots", "--log-controller", "--decimate", "5"]) == 0
    rows = list(csv.reader((out / "demo-self_trajectory.csv").open()))
    assert len(rows) == 1 + 41
    assert (out / "demo-self_controller.csv").exists()
    assert len(list(out.glob("*.svg"))) == 3
    # the echoed config reloads to the same experiment
    assert C.load_config(out / "demo-self_config.yaml") == C.load_config(cfg)


def test_outputs_are_byte_reproducible(tmp_path):
    cfg = _cfg(tmp_path, "demo-relative")
    main(["run", cfg, "--out", str(tmp_path / "a")])
    main(["run", cfg, "--out", str(tmp_path / "b")])
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FIXEDTIME_ETC_OUT", str(tmp_path / "env"))
    assert main(["run", _cfg(tmp_path, "demo-fixed")]) == 0
    assert (tmp_path / "env" / "demo-fixed_summary.txt").exists()


def test_compare_identical_presets_are_deterministic(tmp_path, capsys):
    cfg = _cfg(tmp_path, "demo-fixed")
    assert main(["compare", cfg, cfg, "--out", str(tmp_path), "--jobs", "1"]) == 0
    rows = list(csv.DictReader((tmp_path / "comparison.csv").open()))
    assert rows[0]["count"] == rows[1]["count"]
    assert rows[1]["delta_count"] == "0"


def test_compare_lenient_with_one_divergent(tmp_path):
    cfgs = [_cfg(tmp_path, n) for n in ("demo-fixed", "demo-relative", "demo-switched")]
    cfgs.append(_cfg(tmp_path, "demo-self", ["controller.k1=[1e300,1e300]"]))
    out = tmp_path / "cmp"
    assert main(["compare", *cfgs, "--out", str(out), "--lenient", "--jobs", "1"]) == 0
    rows = list(csv.DictReader((out / "comparison.csv").open()))
    assert [r["status"] for r in rows] == ["ok", "ok", "ok", "diverged"]
    assert main(["compare", *cfgs, "--out", str(out), "--jobs", "1"]) == 3


def test_compare_needs_two(tmp_path):
    assert main(["compare", "--preset", "demo-fixed", "--out", str(tmp_path)]) == 1


def test_compare_published(capsys):
    assert main(["compare", "--published"]) == 0
    assert "151+347" in capsys.readouterr().out


def test_sweep(tmp_path):
    cfg = _cfg(tmp_path, "demo-fixed")
    code = main(["sweep", cfg, "--vary", "strategy.threshold=0.3", "--vary", "x1_0=5", "--out", str(tmp_path), "--jobs", "1"])
    assert code == 2
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert [r["status"] for r in rows] == ["ok", "constraint-violation"]
    code = main(["sweep", cfg, "--vary", "strategy.threshold=0.3", "--vary", "x1_0=5", "--out", str(tmp_path), "--lenient", "--jobs", "1"])
    assert code == 0


def test_bounds(capsys):
    assert main(["bounds", "--a", "1", "--b", "1", "--I", "0.5", "--q", "2", "--p", "0.5", "--c", "0"]) == 0
    out = capsys.readouterr().out
    assert "settling_time_bound = 6.0" in out and "tracking_radius_bound = 0.0" in out
    assert main(["bounds", "--preset", "paper-sec4-fixed"]) == 1
    assert "unbounded" in capsys.readouterr().out
    assert main(["bounds", "--preset", "paper-sec4-fixed-corrected", "--R", "1", "--Phi", "900"]) == 0
    assert "Lambda[switched] = 751.95" in capsys.readouterr().out


def test_selftest_quick(capsys):
    assert main(["selftest", "--samples", "10"]) == 0
    assert "7/7 properties passed" in capsys.readouterr().out


def test_help_formats(capsys):
    assert main(["--help-formats"]) == 0
    assert "inter_event_interval" in capsys.readouterr().out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fixedtime_etc", "selftest", "--samples", "5"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
