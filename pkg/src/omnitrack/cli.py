"""Command-line front end for the tracking lab.

Subcommands::

    omnitrack plan    --config cfg.ini [--out DIR]
    omnitrack track   --config cfg.ini [--seed N] [--out DIR] [--parallel]
    omnitrack step    --config cfg.ini [--seed N] [--out DIR] [--parallel]
    omnitrack horizon --config cfg.ini [--np-values 5,10,15] [--out DIR]
                      [--seed N] [--parallel]

Every run copies its config file into the output directory, and a rerun
with the same config and seed reproduces the CSV outputs bit for bit.
Exit codes: 0 success, 1 configuration or I/O error, 2 no path between
start and goal.

Config files are INI-style.  ``[experiment]`` holds the scenario (map,
start, goal, total_time, ts, seed, noise, controllers, out, np_values);
one section per controller id (``[fpid-t1]``, ``[fpid-it2]``, ``[nmpc]``)
carries that controller's tuning knobs and may be empty to accept the
defaults.  ``map = standard`` selects the bundled map.
"""

from __future__ import annotations

import argparse
import dataclasses
import shutil
import sys
import configparser
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import svgplot
from .fpid import FpidConfig
from .nmpc import OcpConfig
from .planning import (
    NoPathError,
    PlanningError,
    load_grid,
    plan_reference,
    write_trajectory_csv,
)
from .simlab import (
    CONTROLLER_IDS,
    STEP_AXES,
    Episode,
    NoiseModel,
    run_episode,
    run_step_response,
    tracking_metrics,
    write_horizon_csv,
    write_metrics_csv,
    write_run_csv,
    write_step_csv,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_PATH = 2

DEFAULT_NP_VALUES = (1, 5, 10, 15, 20)


class CliError(Exception):
    """Configuration or usage problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; keep 2 for no-path
        raise CliError(message)


@dataclasses.dataclass
class ExperimentConfig:
    """One experiment as described by a config file."""

    map_spec: str
    start: tuple[int, int]
    goal: tuple[int, int]
    total_time: float
    ts: float
    seed: int
    noise: bool
    controllers: list[str]
    out: str | None
    np_values: list[int]
    controller_configs: dict[str, object]
    source: Path


def standard_map_path() -> Path:
    """Filesystem path of the bundled demonstration map."""
    return Path(str(resources.files("omnitrack").joinpath("data", "standard.map")))


def _parse_cell(text: str, key: str) -> tuple[int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise CliError(f"{key} must be 'col,row', got '{text}'")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as err:
        raise CliError(f"{key} must hold integers: {err}") from None


def _parse_int_list(text: str, key: str) -> list[int]:
    try:
        values = [int(p) for p in text.replace(",", " ").split()]
    except ValueError as err:
        raise CliError(f"{key} must hold integers: {err}") from None
    if not values:
        raise CliError(f"{key} must not be empty")
    return values


def _coerce_field(cls, name: str, raw: str):
    if cls is OcpConfig and name in ("horizon", "max_iterations"):
        return int(raw)
    if cls is OcpConfig and name in ("q_diag", "r_diag"):
        return tuple(float(p) for p in raw.replace(",", " ").split())
    if cls is FpidConfig and name == "frame":
        return raw.strip()
    return float(raw)


def _controller_config(controller: str, section, ts: float):
    """Build the controller's config dataclass from its INI section."""
    if controller == "nmpc":
        cls, kwargs = OcpConfig, {"ts": ts}
    else:
        cls = FpidConfig
        kwargs = {"engine": "it2" if controller == "fpid-it2" else "t1"}
    known = {f.name for f in dataclasses.fields(cls)}
    for key in section:
        if key == "engine":
            raise CliError("'engine' is fixed by the section name")
        if key not in known:
            raise CliError(f"unknown key '{key}' in [{controller}]")
        try:
            kwargs[key] = _coerce_field(cls, key, section[key])
        except ValueError as err:
            raise CliError(f"bad value for '{key}' in [{controller}]: {err}") from None
    try:
        return cls(**kwargs)
    except ValueError as err:
        raise CliError(f"invalid [{controller}] section: {err}") from None


def load_config(path, *, need_controllers: bool) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    source = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(source, "r", encoding="ascii") as fh:
            parser.read_file(fh)
    except OSError as err:
        raise CliError(f"cannot read config file: {err}") from None
    except (configparser.Error, UnicodeDecodeError) as err:
        raise CliError(f"cannot parse config file: {err}") from None
    if not parser.has_section("experiment"):
        raise CliError("config is missing the [experiment] section")
    exp = parser["experiment"]

    known_keys = {
        "map", "start", "goal", "total_time", "ts", "seed", "noise",
        "controllers", "out", "np_values",
    }
    for key in exp:
        if key not in known_keys:
            raise CliError(f"unknown key '{key}' in [experiment]")

    try:
        total_time = exp.getfloat("total_time", 30.0)
        ts = exp.getfloat("ts", 0.1)
        seed = exp.getint("seed", 0)
        noise = exp.getboolean("noise", False)
    except ValueError as err:
        raise CliError(f"bad value in [experiment]: {err}") from None
    if not ts > 0.0 or not total_time > ts:
        raise CliError("[experiment] requires total_time > ts > 0")

    controllers = [
        c.strip() for c in exp.get("controllers", "").split(",") if c.strip()
    ]
    if need_controllers and not controllers:
        raise CliError("[experiment] must list at least one controller")
    for cid in controllers:
        if cid not in CONTROLLER_IDS:
            raise CliError(
                f"unknown controller '{cid}' (known: {', '.join(CONTROLLER_IDS)})"
            )
        if not parser.has_section(cid):
            raise CliError(f"controller '{cid}' has no [{cid}] section")

    configs = {
        cid: _controller_config(cid, parser[cid], ts) for cid in controllers
    }
    # The horizon sweep reads [nmpc] even when the controller list is empty.
    if parser.has_section("nmpc") and "nmpc" not in configs:
        configs["nmpc"] = _controller_config("nmpc", parser["nmpc"], ts)

    np_values = _parse_int_list(exp.get("np_values", ""), "np_values") if exp.get(
        "np_values", ""
    ) else list(DEFAULT_NP_VALUES)

    return ExperimentConfig(
        map_spec=exp.get("map", "standard"),
        start=_parse_cell(exp.get("start", "0,0"), "start"),
        goal=_parse_cell(exp.get("goal", "19,19"), "goal"),
        total_time=total_time,
        ts=ts,
        seed=seed,
        noise=noise,
        controllers=controllers,
        out=exp.get("out", None),
        np_values=np_values,
        controller_configs=configs,
        source=source,
    )


def _load_map(config: ExperimentConfig):
    path = (
        standard_map_path()
        if config.map_spec == "standard"
        else Path(config.map_spec)
    )
    try:
        return load_grid(path)
    except OSError as err:
        raise CliError(f"cannot read map file: {err}") from None
    except ValueError as err:
        raise CliError(f"malformed map file '{path}': {err}") from None


def _prepare_outdir(args, config: ExperimentConfig, command: str) -> Path:
    out = Path(args.out or config.out or f"runs/{command}")
    out.mkdir(parents=True, exist_ok=True)
    copy = out / config.source.name
    if copy.resolve() != config.source.resolve():
        shutil.copyfile(config.source, copy)
    return out


def _plan(config: ExperimentConfig):
    grid = _load_map(config)
    return grid, plan_reference(
        grid, config.start, config.goal, config.total_time, config.ts
    )


def _run_all(episodes: list[Episode], parallel: bool) -> None:
    if parallel and len(episodes) > 1:
        with ThreadPoolExecutor(max_workers=len(episodes)) as pool:
            list(pool.map(run_episode, episodes))
    else:
        for episode in episodes:
            run_episode(episode)


def cmd_plan(args) -> int:
    config = load_config(args.config, need_controllers=False)
    out = _prepare_outdir(args, config, "plan")
    grid, (path, curve, trajectory) = _plan(config)
    write_trajectory_csv(trajectory, out / "trajectory.csv")
    dense = curve.point(np.linspace(0.0, 1.0, 256))
    svgplot.grid_overlay(
        out / "plan.svg",
        grid,
        [
            ("grid path", path.world_points(grid)),
            ("smoothed", dense),
            ("reference", trajectory.poses[:, :2]),
        ],
        title=f"plan {config.start} to {config.goal}",
    )
    print(
        f"plan: {len(path)} cells (cost {path.cost}), "
        f"{len(trajectory)} reference rows -> {out}"
    )
    return EXIT_OK


def cmd_track(args) -> int:
    config = load_config(args.config, need_controllers=True)
    if args.seed is not None:
        config.seed = args.seed
    out = _prepare_outdir(args, config, "track")
    grid, (path, curve, trajectory) = _plan(config)

    episodes = [
        Episode(
            trajectory=trajectory,
            controller=cid,
            controller_config=config.controller_configs[cid],
            noise=NoiseModel() if config.noise else None,
            seed=config.seed,
        )
        for cid in config.controllers
    ]
    _run_all(episodes, args.parallel)

    rows = []
    xy_curves = [("reference", trajectory.poses[:, 0], trajectory.poses[:, 1])]
    th_curves = [("reference", trajectory.times, trajectory.poses[:, 2])]
    for episode in episodes:
        write_run_csv(episode.log, out / f"run_{episode.controller}.csv")
        metrics = tracking_metrics(episode.log)
        rows.append(
            {
                "controller": episode.controller,
                "scenario": config.map_spec,
                "tracking_time": trajectory.duration,
                "me_xy": metrics.me_xy,
                "mae_theta": metrics.mae_theta,
            }
        )
        xy_curves.append(
            (episode.controller, episode.log.true_pose[:, 0], episode.log.true_pose[:, 1])
        )
        th_curves.append(
            (episode.controller, episode.log.times, episode.log.true_pose[:, 2])
        )
        print(
            f"track[{episode.controller}]: me_xy={metrics.me_xy:.4f} m, "
            f"mae_theta={metrics.mae_theta:.4f} rad"
        )
    write_metrics_csv(rows, out / "metrics.csv", noise=config.noise)
    svgplot.line_chart(
        out / "tracking_xy.svg",
        xy_curves,
        title="tracked position",
        xlabel="x [m]",
        ylabel="y [m]",
        equal_aspect=True,
    )
    svgplot.line_chart(
        out / "tracking_theta.svg",
        th_curves,
        title="tracked heading",
        xlabel="t [s]",
        ylabel="theta [rad]",
    )
    print(f"track: wrote {len(rows)} runs -> {out}")
    return EXIT_OK


def cmd_step(args) -> int:
    config = load_config(args.config, need_controllers=True)
    if args.seed is not None:
        config.seed = args.seed
    out = _prepare_outdir(args, config, "step")

    def run_one(cid: str):
        return cid, run_step_response(
            cid, config.controller_configs[cid], ts=config.ts
        )

    if args.parallel and len(config.controllers) > 1:
        with ThreadPoolExecutor(max_workers=len(config.controllers)) as pool:
            results = list(pool.map(run_one, config.controllers))
    else:
        results = [run_one(cid) for cid in config.controllers]

    def show(value):
        return "-" if value is None else f"{value:.3f}"

    rows = []
    axis_curves = {axis: [] for axis in STEP_AXES}
    for cid, per_axis in results:
        for axis in STEP_AXES:
            metrics, episode = per_axis[axis]
            rows.append(
                {
                    "controller": cid,
                    "axis": axis,
                    "overshoot_pct": metrics.overshoot_pct,
                    "rise_time": metrics.rise_time,
                    "settling_time": metrics.settling_time,
                }
            )
            axis_curves[axis].append(
                (
                    cid,
                    episode.log.times,
                    episode.log.true_pose[:, STEP_AXES.index(axis)],
                )
            )
            print(
                f"step[{cid}/{axis}]: overshoot={metrics.overshoot_pct:.2f}% "
                f"rise={show(metrics.rise_time)} s "
                f"settle={show(metrics.settling_time)} s"
            )
    write_step_csv(rows, out / "step_metrics.csv")
    for axis in STEP_AXES:
        times = axis_curves[axis][0][1]
        setpoint = ("setpoint", times, np.ones_like(times))
        svgplot.line_chart(
            out / f"step_{axis}.svg",
            [setpoint] + axis_curves[axis],
            title=f"unit step response on {axis}",
            xlabel="t [s]",
            ylabel=axis,
        )
    print(f"step: wrote {len(rows)} rows -> {out}")
    return EXIT_OK


def cmd_horizon(args) -> int:
    config = load_config(args.config, need_controllers=False)
    if args.seed is not None:
        config.seed = args.seed
    np_values = (
        _parse_int_list(args.np_values, "--np-values")
        if args.np_values
        else config.np_values
    )
    out = _prepare_outdir(args, config, "horizon")
    grid, (path, curve, trajectory) = _plan(config)
    base = config.controller_configs.get("nmpc") or OcpConfig(ts=config.ts)

    try:
        configs = [dataclasses.replace(base, horizon=h) for h in np_values]
    except ValueError as err:
        raise CliError(f"invalid horizon value: {err}") from None
    episodes = [
        Episode(
            trajectory=trajectory,
            controller="nmpc",
            controller_config=cfg,
            noise=NoiseModel() if config.noise else None,
            seed=config.seed,
        )
        for cfg in configs
    ]
    _run_all(episodes, args.parallel)

    rows = []
    for horizon, episode in zip(np_values, episodes):
        metrics = tracking_metrics(episode.log)
        rows.append((horizon, metrics))
        print(
            f"horizon[{horizon}]: me_xy={metrics.me_xy:.4f} m, "
            f"mae_theta={metrics.mae_theta:.4f} rad"
        )
    write_horizon_csv(rows, out / "horizon.csv")
    svgplot.bar_chart(
        out / "horizon.svg",
        [str(h) for h in np_values],
        [
            ("me_xy [m]", [m.me_xy for _, m in rows]),
            ("mae_theta [rad]", [m.mae_theta for _, m in rows]),
        ],
        title="tracking error vs prediction horizon",
        xlabel="prediction horizon",
        ylabel="mean error",
    )
    print(f"horizon: wrote {len(rows)} rows -> {out}")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="omnitrack", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="episode seed (overrides the config)")
        p.add_argument(
            "--parallel",
            action="store_true",
            help="run independent episodes concurrently",
        )

    common(sub.add_parser("plan", help="plan a reference trajectory"))
    sub.choices["plan"].set_defaults(func=cmd_plan)
    common(sub.add_parser("track", help="run tracking episodes"))
    sub.choices["track"].set_defaults(func=cmd_track)
    common(sub.add_parser("step", help="per-axis unit step responses"))
    sub.choices["step"].set_defaults(func=cmd_step)
    horizon = sub.add_parser("horizon", help="prediction-horizon sweep")
    common(horizon)
    horizon.add_argument(
        "--np-values", help="comma-separated horizon lengths (overrides the config)"
    )
    horizon.set_defaults(func=cmd_horizon)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except NoPathError as err:
        print(f"error: no path found: {err}", file=sys.stderr)
        return EXIT_NO_PATH
    except (CliError, PlanningError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
