"""Closed-loop simulation lab: episodes, noise, metrics, sweeps.

The plant is the ideal kinematic chain: each commanded body velocity is
converted to wheel rates, recovered by the forward map and integrated
for one step, so the simulated robot does exactly what the wheel-level
interface allows.  Measurement noise, when enabled, corrupts only the
pose fed to the controller; metrics are computed on the true pose.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from omnitrack.fpid import FpidConfig, FuzzyPidController
from omnitrack.kinematics import (
    BodyVelocity,
    OmniGeometry,
    RobotPose,
    forward_kinematics,
    integrate_pose,
    inverse_kinematics,
    wrap_angle,
)
from omnitrack.nmpc import NmpcController, OcpConfig
from omnitrack.planning import ReferenceTrajectory

CONTROLLER_IDS = ("fpid-t1", "fpid-it2", "nmpc")

RUN_HEADER_BASE = [
    "n", "t",
    "x_ref", "y_ref", "theta_ref",
    "x", "y", "theta",
    "x_meas", "y_meas", "theta_meas",
    "vx_cmd", "vy_cmd", "omega_cmd",
    "phi1", "phi2", "phi3", "phi4",
]
RUN_HEADER_SOLVER = RUN_HEADER_BASE + ["cost", "iters", "kkt"]

STEP_DURATION = 10.0
STEP_AXES = ("x", "y", "theta")


class SimulationError(Exception):
    """Base class for lab-level failures."""


class NotSettledError(SimulationError):
    """Step response never stays inside the settling band."""


@dataclass
class NoiseModel:
    """Feedback-path noise: uniform draw scaled by a slow sine envelope.

    Each pose channel gets an independent draw from [0, 1) divided by
    ``divisor`` and multiplied by sin(n * ts / time_scale).
    """

    divisor: float = 6.0
    time_scale: float = 5.0

    def __post_init__(self):
        if not self.divisor > 0.0 or not self.time_scale > 0.0:
            raise ValueError("divisor and time_scale must be positive")

    def sample(self, n: int, ts: float, rng: np.random.Generator) -> np.ndarray:
        draw = rng.random(3) / self.divisor
        return draw * math.sin(n * ts / self.time_scale)


@dataclass
class EpisodeLog:
    """Per-step arrays recorded by :func:`run_episode`."""

    ts: float
    reference: np.ndarray
    true_pose: np.ndarray
    measured: np.ndarray
    command: np.ndarray
    wheels: np.ndarray
    solver: np.ndarray | None = None  # columns: cost, iterations, kkt

    def __len__(self) -> int:
        return self.reference.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.ts


@dataclass
class Episode:
    """Specification of one closed-loop run; ``log`` is filled on run."""

    trajectory: ReferenceTrajectory
    controller: str
    controller_config: object = None
    geometry: OmniGeometry = field(default_factory=OmniGeometry)
    noise: NoiseModel | None = None
    seed: int = 0
    initial_pose: RobotPose | None = None
    log: EpisodeLog | None = None

    def __post_init__(self):
        if self.controller not in CONTROLLER_IDS:
            raise ValueError(f"unknown controller '{self.controller}'")


class _FpidRunner:
    def __init__(self, config: FpidConfig, trajectory: ReferenceTrajectory):
        self.ctrl = FuzzyPidController(config)
        self.trajectory = trajectory

    def command(self, pose: RobotPose, n: int) -> BodyVelocity:
        target = RobotPose(*self.trajectory.poses[n])
        return self.ctrl.command(pose, target, self.trajectory.ts)

    def diagnostics(self):
        return None


class _NmpcRunner:
    def __init__(self, config: OcpConfig, trajectory: ReferenceTrajectory):
        self.ctrl = NmpcController(config)
        self.trajectory = trajectory

    def command(self, pose: RobotPose, n: int) -> BodyVelocity:
        return self.ctrl.command(pose, self.trajectory, n)

    def diagnostics(self):
        sol = self.ctrl.last_solution
        return (sol.cost, float(sol.iterations), sol.kkt_residual)


def _make_runner(episode: Episode):
    if episode.controller == "nmpc":
        cfg = episode.controller_config or OcpConfig(ts=episode.trajectory.ts)
        return _NmpcRunner(cfg, episode.trajectory)
    cfg = episode.controller_config
    if cfg is None:
        engine = "it2" if episode.controller == "fpid-it2" else "t1"
        cfg = FpidConfig(engine=engine)
    return _FpidRunner(cfg, episode.trajectory)


def run_episode(episode: Episode) -> Episode:
    """Run the closed loop over the episode's reference; fills the log.

    Record n holds the state at time n * ts and the command applied over
    the following step.  The same seed reproduces the run bit for bit.
    """
    traj = episode.trajectory
    n_steps = len(traj)
    rng = np.random.default_rng(episode.seed)
    runner = _make_runner(episode)
    pose = episode.initial_pose or RobotPose(*traj.poses[0])

    reference = traj.poses.copy()
    true_pose = np.empty((n_steps, 3))
    measured = np.empty((n_steps, 3))
    command = np.empty((n_steps, 3))
    wheels = np.empty((n_steps, 4))
    solver = np.empty((n_steps, 3)) if episode.controller == "nmpc" else None

    for n in range(n_steps):
        noise = (
            episode.noise.sample(n, traj.ts, rng)
            if episode.noise is not None
            else np.zeros(3)
        )
        meas = RobotPose(pose.x + noise[0], pose.y + noise[1], pose.theta + noise[2])
        cmd = runner.command(meas, n)
        spin = inverse_kinematics(episode.geometry, cmd)
        actual = forward_kinematics(episode.geometry, spin)

        true_pose[n] = pose.as_array()
        measured[n] = meas.as_array()
        command[n] = cmd.as_array()
        wheels[n] = spin.as_array()
        if solver is not None:
            solver[n] = runner.diagnostics()

        pose = integrate_pose(pose, actual, traj.ts)

    episode.log = EpisodeLog(
        ts=traj.ts,
        reference=reference,
        true_pose=true_pose,
        measured=measured,
        command=command,
        wheels=wheels,
        solver=solver,
    )
    return episode


@dataclass(frozen=True)
class TrackingMetrics:
    """Mean tracking errors of one episode (true pose versus reference)."""

    me_xy: float
    mae_theta: float


def tracking_metrics(log: EpisodeLog) -> TrackingMetrics:
    dx = log.reference[:, 0] - log.true_pose[:, 0]
    dy = log.reference[:, 1] - log.true_pose[:, 1]
    dth = wrap_angle(log.reference[:, 2] - log.true_pose[:, 2])
    return TrackingMetrics(
        me_xy=float(np.mean(np.hypot(dx, dy))),
        mae_theta=float(np.mean(np.abs(dth))),
    )


@dataclass(frozen=True)
class StepMetrics:
    """Classic step-response characteristics; undefined values are None."""

    overshoot_pct: float
    rise_time: float | None
    settling_time: float | None


def _first_crossing(t: np.ndarray, y: np.ndarray, level: float, rising: bool):
    """Linearly interpolated first time y crosses the level."""
    above = y >= level if rising else y <= level
    if not above.any():
        return None
    i = int(np.argmax(above))
    if i == 0:
        return float(t[0])
    frac = (level - y[i - 1]) / (y[i] - y[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def step_metrics(t: np.ndarray, y: np.ndarray, target: float) -> StepMetrics:
    """Overshoot, 10-90% rise time and 10% settling time of a series.

    Crossings are linearly interpolated between samples.  Rise or
    settling come back None when the series never crosses 90% or never
    stays inside the band.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.size < 2:
        raise ValueError("t and y must be equal-length series of 2 or more")
    y0 = y[0]
    size = target - y0
    if size == 0.0:
        raise ValueError("step size must be nonzero")
    rising = size > 0.0

    peak = float(np.max(y - target)) if rising else float(np.max(target - y))
    overshoot = max(0.0, peak / abs(size)) * 100.0

    t10 = _first_crossing(t, y, y0 + 0.1 * size, rising)
    t90 = _first_crossing(t, y, y0 + 0.9 * size, rising)
    rise = t90 - t10 if t10 is not None and t90 is not None else None

    band = 0.1 * abs(size)
    outside = np.abs(y - target) > band
    if outside[-1]:
        settling = None
    elif not outside.any():
        settling = float(t[0])
    else:
        i = int(np.where(outside)[0][-1])
        edge = np.abs(y[i] - target)
        nxt = np.abs(y[i + 1] - target)
        frac = (edge - band) / (edge - nxt)
        settling = float(t[i] + frac * (t[i + 1] - t[i]))
    return StepMetrics(overshoot_pct=overshoot, rise_time=rise, settling_time=settling)


def _constant_trajectory(target: RobotPose, duration: float, ts: float) -> ReferenceTrajectory:
    n = int(math.floor(duration / ts)) + 1
    poses = np.tile(target.as_array(), (n, 1))
    return ReferenceTrajectory(ts, poses, np.zeros(n), np.zeros(n))


def run_step_response(
    controller: str,
    controller_config: object = None,
    geometry: OmniGeometry | None = None,
    duration: float = STEP_DURATION,
    ts: float = 0.1,
) -> dict[str, tuple[StepMetrics, Episode]]:
    """Unit step on each axis from rest at the origin.

    Targets are (1, 0, 0), (0, 1, 0) and (0, 0, 1 rad); the response is
    the matching true-pose component.  Returns per-axis metrics with the
    finished episode for plotting.
    """
    targets = {
        "x": RobotPose(1.0, 0.0, 0.0),
        "y": RobotPose(0.0, 1.0, 0.0),
        "theta": RobotPose(0.0, 0.0, 1.0),
    }
    results = {}
    for axis, target in targets.items():
        traj = _constant_trajectory(target, duration, ts)
        episode = Episode(
            trajectory=traj,
            controller=controller,
            controller_config=controller_config,
            geometry=geometry or OmniGeometry(),
            noise=None,
            seed=0,
            initial_pose=RobotPose(0.0, 0.0, 0.0),
        )
        run_episode(episode)
        series = episode.log.true_pose[:, STEP_AXES.index(axis)]
        results[axis] = (step_metrics(episode.log.times, series, 1.0), episode)
    return results


def horizon_sweep(
    trajectory: ReferenceTrajectory,
    horizons: list[int],
    base_config: OcpConfig | None = None,
    geometry: OmniGeometry | None = None,
) -> list[tuple[int, TrackingMetrics]]:
    """Tracking metrics of the predictive controller per horizon length."""
    rows = []
    for horizon in horizons:
        if int(horizon) < 1:
            raise ValueError("horizons must be positive")
        base = base_config or OcpConfig(ts=trajectory.ts)
        cfg = replace(base, horizon=int(horizon))
        episode = Episode(
            trajectory=trajectory,
            controller="nmpc",
            controller_config=cfg,
            geometry=geometry or OmniGeometry(),
        )
        run_episode(episode)
        rows.append((int(horizon), tracking_metrics(episode.log)))
    return rows


def write_run_csv(log: EpisodeLog, path) -> None:
    """Write one episode's log; floats keep full round-trip precision."""
    header = RUN_HEADER_SOLVER if log.solver is not None else RUN_HEADER_BASE
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for n in range(len(log)):
            row = [n, repr(n * log.ts)]
            row += [repr(float(v)) for v in log.reference[n]]
            row += [repr(float(v)) for v in log.true_pose[n]]
            row += [repr(float(v)) for v in log.measured[n]]
            row += [repr(float(v)) for v in log.command[n]]
            row += [repr(float(v)) for v in log.wheels[n]]
            if log.solver is not None:
                row += [repr(float(v)) for v in log.solver[n]]
            writer.writerow(row)


def read_run_csv(path) -> EpisodeLog:
    with open(path, "r", encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header not in (RUN_HEADER_BASE, RUN_HEADER_SOLVER):
            raise ValueError("unexpected run log header")
        rows = np.array([[float(v) for v in row] for row in reader])
    if rows.shape[0] < 2:
        raise ValueError("run log must hold at least two rows")
    ts = rows[1, 1] - rows[0, 1]
    has_solver = header == RUN_HEADER_SOLVER
    return EpisodeLog(
        ts=ts,
        reference=rows[:, 2:5],
        true_pose=rows[:, 5:8],
        measured=rows[:, 8:11],
        command=rows[:, 11:14],
        wheels=rows[:, 14:18],
        solver=rows[:, 18:21] if has_solver else None,
    )


def write_metrics_csv(rows: list[dict], path, noise: bool = False) -> None:
    """Write per-episode tracking metrics; one row per controller run."""
    header = ["controller", "scenario", "tracking_time", "me_xy", "mae_theta"]
    if noise:
        header.append("noise")
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            out = [
                row["controller"],
                row["scenario"],
                repr(float(row["tracking_time"])),
                repr(float(row["me_xy"])),
                repr(float(row["mae_theta"])),
            ]
            if noise:
                out.append("true")
            writer.writerow(out)


def write_step_csv(rows: list[dict], path) -> None:
    """Write step-response characteristics; empty fields mean undefined."""
    header = ["controller", "axis", "overshoot_pct", "rise_time", "settling_time"]

    def fmt(value):
        return "" if value is None else repr(float(value))

    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    row["controller"],
                    row["axis"],
                    fmt(row["overshoot_pct"]),
                    fmt(row["rise_time"]),
                    fmt(row["settling_time"]),
                ]
            )


def write_horizon_csv(rows: list[tuple[int, TrackingMetrics]], path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["horizon", "me_xy", "mae_theta"])
        for horizon, metrics in rows:
            writer.writerow(
                [horizon, repr(float(metrics.me_xy)), repr(float(metrics.mae_theta))]
            )
