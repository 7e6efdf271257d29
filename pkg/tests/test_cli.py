import numpy as np
import pytest

from mobile_wbc import cli
from mobile_wbc.cli import export_csv, format_csv, main
from mobile_wbc.errors import SingularTask
from mobile_wbc.sim import Scenario, ScenarioLog, run_scenario

GOLDEN_HEADER = (
    "t,qb_x,qb_y,qb_phi,qa_1,qa_2,qa_3,qa_4,qa_5,qa_6,"
    "va_ref_x,va_ref_y,va_ref_z,va_ref_wx,va_ref_wy,va_ref_wz,"
    "vb_pre_x,vb_pre_y,vb_pre_phi,vb_ref_x,vb_ref_y,vb_ref_phi,"
    "vee_cmd_x,vee_cmd_y,vee_cmd_z,vee_cmd_wx,vee_cmd_wy,vee_cmd_wz,"
    "ee_x,ee_y,ee_z,ee_cmd_x,ee_cmd_y,ee_cmd_z,f_x,f_y,f_z,m_x,m_y,m_z,"
    "cm,alpha,sigma_xy,sigma_phi,d_obs,"
    "dev_x,dev_y,dev_z,dev_wx,dev_wy,dev_wz,"
    "dev_int_x,dev_int_y,dev_int_z,dev_int_wx,dev_int_wy,dev_int_wz,"
    "va_wln_x,va_wln_y,va_wln_z,va_wln_wx,va_wln_wy,va_wln_wz,"
    "vb_wln_x,vb_wln_y,vb_wln_phi,ws_d,ws_phi,vib_x,vib_y"
)


def test_golden_header():
    assert format_csv(ScenarioLog()).splitlines()[0] == GOLDEN_HEADER


def test_empty_log_is_header_only(tmp_path):
    p = tmp_path / "empty.csv"
    export_csv(ScenarioLog(), p)
    assert p.read_bytes() == (GOLDEN_HEADER + "\n").encode()


def test_line_count_and_format(tmp_path):
    log = run_scenario(Scenario(duration=10.0))
    p = tmp_path / "log.csv"
    export_csv(log, p)
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().split("\n")
    assert lines[-1] == "" and len(lines) - 1 == 1001
    assert lines[2].split(",")[0] == "0.01"


def test_nine_significant_digits():
    log = ScenarioLog([np.full(70, np.pi)])
    row = format_csv(log).splitlines()[1].split(",")
    assert row[0] == "3.14159265"
    assert float(row[0]) == pytest.approx(np.pi, rel=5e-9)


def test_reexport_is_byte_identical(tmp_path):
    log = run_scenario(Scenario(duration=0.5))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    export_csv(log, a)
    export_csv(log, b)
    assert a.read_bytes() == b.read_bytes()


def test_run_bundled_writes_csv(tmp_path):
    out = tmp_path / "tt.csv"
    assert main(["run", "--scenario", "trajectory_tracking", "--out", str(out),
                 "--duration", "0.5"]) == 0
    assert len(out.read_text().splitlines()) == 51


def test_run_to_stdout_with_overrides(capsys):
    assert main(["run", "--scenario", "trajectory_tracking", "--duration", "0.2",
                 "--seed", "5", "--override", "controller.mode=Manipulation"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == GOLDEN_HEADER and len(lines) == 21


def test_run_from_file(tmp_path):
    cfg = tmp_path / "mini.json"
    cfg.write_text('{"version": 1, "duration": 0.3}')
    out = tmp_path / "mini.csv"
    assert main(["run", "--scenario", str(cfg), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 31


def test_validate_ok(capsys):
    assert main(["validate", "--scenario", "wiping_force"]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"duration": 1.0,, }')
    before = set(tmp_path.iterdir())
    assert main(["validate", "--scenario", str(bad)]) == 1
    captured = capsys.readouterr()
    assert captured.out == "" and "line 1" in captured.err
    assert set(tmp_path.iterdir()) == before


def test_run_invalid_field_reports_path(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert main(["run", "--scenario", "trajectory_tracking", "--out", str(out),
                 "--override", "controller.sigma_xy=1.5"]) == 1
    assert "controller.sigma_xy" in capsys.readouterr().err
    assert not out.exists()


def test_missing_scenario(capsys):
    assert main(["validate", "--scenario", "does_not_exist"]) == 1
    assert "neither a file" in capsys.readouterr().err


def test_unknown_flag_prints_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scenario", "trajectory_tracking", "--bogus"])
    assert exc.value.code == 1
    assert "usage:" in capsys.readouterr().err


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    assert capsys.readouterr().out.split() == [
        "intuitive_phri", "line_tracking_obstacles", "robust_wbc_obstacles",
        "trajectory_tracking", "wiping_force"]


def test_singular_abort_exit_code(tmp_path, monkeypatch, capsys):
    def boom(scenario):
        raise SingularTask("cycle 7 (t = 0.07 s): damped resolution failed")

    monkeypatch.setattr(cli, "run_scenario", boom)
    out = tmp_path / "s.csv"
    assert main(["run", "--scenario", "trajectory_tracking", "--out", str(out)]) == 2
    assert "cycle 7" in capsys.readouterr().err
    assert not out.exists()


def test_module_entry_point_exit_codes():
    import subprocess
    import sys

    bad = subprocess.run([sys.executable, "-m", "mobile_wbc.cli", "--bogus"],
                         capture_output=True, text=True)
    assert bad.returncode == 1 and "usage:" in bad.stderr
    ok = subprocess.run([sys.executable, "-m", "mobile_wbc.cli", "list-scenarios"],
                        capture_output=True, text=True)
    assert ok.returncode == 0 and "wiping_force" in ok.stdout
