import csv

import numpy as np
import pytest

from omnitrack.cli import EXIT_ERROR, EXIT_NO_PATH, EXIT_OK, main, standard_map_path
from omnitrack.planning import read_trajectory_csv
from omnitrack.simlab import read_run_csv, tracking_metrics

FREE_MAP = "8 8 0.5\n" + "\n".join(["0" * 8] * 8) + "\n"
WALLED_MAP = "8 8 0.5\n" + "\n".join(
    ["0" * 8] * 4 + ["1" * 8] + ["0" * 8] * 3
) + "\n"


def write_config(tmp_path, name="lab.ini", **overrides):
    experiment = {
        "map": str(tmp_path / "arena.map"),
        "start": "0,0",
        "goal": "7,7",
        "total_time": "6.0",
        "ts": "0.1",
        "seed": "0",
        "noise": "false",
        "controllers": "fpid-t1, fpid-it2, nmpc",
    }
    experiment.update(overrides.pop("experiment", {}))
    sections = {"fpid-t1": {}, "fpid-it2": {}, "nmpc": {"horizon": "8"}}
    sections.update(overrides.pop("sections", {}))
    assert not overrides
    lines = ["[experiment]"]
    lines += [f"{k} = {v}" for k, v in experiment.items() if v is not None]
    for section, body in sections.items():
        if body is None:  # omit the section entirely
            continue
        lines.append(f"\n[{section}]")
        lines += [f"{k} = {v}" for k, v in body.items()]
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    (tmp_path / "arena.map").write_text(FREE_MAP, encoding="ascii")
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ----------------------------------------------------------------- plan


def test_plan_writes_trajectory_and_figure(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["plan", "--config", str(config), "--out", str(out)]) == EXIT_OK
    trajectory = read_trajectory_csv(out / "trajectory.csv")
    assert len(trajectory) == 61  # 6 s at 0.1 s plus the initial sample
    assert trajectory.ts == 0.1
    svg = (out / "plan.svg").read_text()
    assert svg.startswith("<svg")
    assert (out / config.name).exists()  # config copied beside results
    capsys.readouterr()


def test_plan_on_a_walled_map_exits_with_the_no_path_code(tmp_path, capsys):
    config = write_config(tmp_path)
    (tmp_path / "arena.map").write_text(WALLED_MAP, encoding="ascii")
    code = main(["plan", "--config", str(config), "--out", str(tmp_path / "o")])
    assert code == EXIT_NO_PATH
    assert "no path" in capsys.readouterr().err.lower()


def test_standard_map_is_bundled(tmp_path, capsys):
    config = write_config(
        tmp_path, experiment={"map": "standard", "goal": "19,19", "total_time": "8.0"}
    )
    assert standard_map_path().exists()
    out = tmp_path / "out"
    assert main(["plan", "--config", str(config), "--out", str(out)]) == EXIT_OK
    assert (out / "trajectory.csv").exists()
    capsys.readouterr()


# ---------------------------------------------------------------- track


def test_track_outputs_and_recomputable_metrics(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["track", "--config", str(config), "--out", str(out)]) == EXIT_OK
    for name in ("tracking_xy.svg", "tracking_theta.svg", "metrics.csv"):
        assert (out / name).exists()
    rows = read_rows(out / "metrics.csv")
    assert [r["controller"] for r in rows] == ["fpid-t1", "fpid-it2", "nmpc"]
    for row in rows:
        log = read_run_csv(out / f"run_{row['controller']}.csv")
        recomputed = tracking_metrics(log)
        assert float(row["me_xy"]) == pytest.approx(recomputed.me_xy, abs=1e-12)
        assert float(row["mae_theta"]) == pytest.approx(recomputed.mae_theta, abs=1e-12)
        assert float(row["tracking_time"]) == 6.0
        assert "noise" not in row
    capsys.readouterr()


def test_track_runs_are_deterministic_and_parallel_agrees(tmp_path, capsys):
    config = write_config(tmp_path, experiment={"noise": "true"})
    outs = [tmp_path / f"out{i}" for i in range(3)]
    for out, extra in zip(outs, ([], [], ["--parallel"])):
        code = main(["track", "--config", str(config), "--out", str(out), *extra])
        assert code == EXIT_OK
    for name in ("run_fpid-t1.csv", "run_nmpc.csv", "metrics.csv"):
        baseline = (outs[0] / name).read_bytes()
        assert (outs[1] / name).read_bytes() == baseline
        assert (outs[2] / name).read_bytes() == baseline
    rows = read_rows(outs[0] / "metrics.csv")
    assert all(row["noise"] == "true" for row in rows)
    capsys.readouterr()


def test_seed_flag_changes_noisy_runs(tmp_path, capsys):
    config = write_config(
        tmp_path, experiment={"noise": "true", "controllers": "fpid-t1"}
    )
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["track", "--config", str(config), "--out", str(out_a)]) == EXIT_OK
    code = main(["track", "--config", str(config), "--out", str(out_b), "--seed", "7"])
    assert code == EXIT_OK
    a = read_run_csv(out_a / "run_fpid-t1.csv")
    b = read_run_csv(out_b / "run_fpid-t1.csv")
    assert not np.array_equal(a.measured, b.measured)
    capsys.readouterr()


# ----------------------------------------------------------------- step


def test_step_writes_one_row_per_controller_axis(tmp_path, capsys):
    config = write_config(tmp_path, experiment={"controllers": "fpid-t1"})
    out = tmp_path / "out"
    assert main(["step", "--config", str(config), "--out", str(out)]) == EXIT_OK
    rows = read_rows(out / "step_metrics.csv")
    assert [(r["controller"], r["axis"]) for r in rows] == [
        ("fpid-t1", "x"),
        ("fpid-t1", "y"),
        ("fpid-t1", "theta"),
    ]
    for axis in ("x", "y", "theta"):
        assert (out / f"step_{axis}.svg").exists()
    capsys.readouterr()


def test_step_reports_undefined_fields_as_empty(tmp_path, capsys):
    config = write_config(tmp_path, experiment={"controllers": "nmpc"})
    out = tmp_path / "out"
    assert main(["step", "--config", str(config), "--out", str(out)]) == EXIT_OK
    rows = {r["axis"]: r for r in read_rows(out / "step_metrics.csv")}
    assert rows["x"]["rise_time"] != ""
    assert rows["y"]["rise_time"] == ""
    assert rows["y"]["settling_time"] == ""
    capsys.readouterr()


# -------------------------------------------------------------- horizon


def test_horizon_sweep_csv_and_flag_override(tmp_path, capsys):
    config = write_config(
        tmp_path,
        experiment={"total_time": "4.0", "np_values": "1, 6", "controllers": ""},
    )
    out = tmp_path / "out"
    assert main(["horizon", "--config", str(config), "--out", str(out)]) == EXIT_OK
    rows = read_rows(out / "horizon.csv")
    assert [int(r["horizon"]) for r in rows] == [1, 6]
    assert float(rows[0]["me_xy"]) > float(rows[1]["me_xy"])
    assert (out / "horizon.svg").exists()

    out2 = tmp_path / "out2"
    code = main(
        ["horizon", "--config", str(config), "--out", str(out2), "--np-values", "2,3"]
    )
    assert code == EXIT_OK
    assert [int(r["horizon"]) for r in read_rows(out2 / "horizon.csv")] == [2, 3]
    capsys.readouterr()


# ------------------------------------------------------------ bad input


def test_usage_and_config_errors_exit_with_one(tmp_path, capsys):
    config = write_config(tmp_path)
    cases = [
        ["plan"],  # --config is required
        ["plan", "--config", str(tmp_path / "absent.ini")],
        ["plan", "--config", str(config), "--bogus"],
        ["frobnicate", "--config", str(config)],
    ]
    for argv in cases:
        assert main(argv) == EXIT_ERROR
    capsys.readouterr()


def test_config_validation_errors_exit_with_one(tmp_path, capsys):
    missing_section = write_config(tmp_path, name="m.ini", sections={"fpid-t1": None})
    assert main(["track", "--config", str(missing_section)]) == EXIT_ERROR

    unknown_key = write_config(tmp_path, name="u.ini", experiment={"warp": "9"})
    assert main(["plan", "--config", str(unknown_key)]) == EXIT_ERROR

    bad_time = write_config(tmp_path, name="t.ini", experiment={"total_time": "0"})
    assert main(["plan", "--config", str(bad_time)]) == EXIT_ERROR

    bad_np = write_config(tmp_path, name="n.ini", experiment={"np_values": "0,5"})
    assert main(["horizon", "--config", str(bad_np)]) == EXIT_ERROR
    capsys.readouterr()
