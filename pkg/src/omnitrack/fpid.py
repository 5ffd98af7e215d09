"""Self-tuning fuzzy PID trajectory tracking.

Two independent PID loops chase the reference: a distance loop turns the
range to the target pose into a speed command and a heading loop turns
the heading error into a yaw rate.  Each loop's gains are nudged every
step by a fuzzy engine fed the normalized error and error rate, then
clamped to [0, k_max].  The speed command is emitted along the bearing
to the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from omnitrack.fuzzy import Type1Engine, Type2Engine
from omnitrack.kinematics import BodyVelocity, RobotPose, wrap_angle

DISTANCE_THRESHOLD = 0.01


@dataclass
class PidState:
    """Gains plus integrator and previous error of one PID loop."""

    kp: float
    ki: float
    kd: float
    k_max: float = 10.0
    i_max: float = 1.0
    integral: float = 0.0
    prev_error: float = 0.0

    def __post_init__(self):
        if not self.k_max > 0.0 or not self.i_max > 0.0:
            raise ValueError("k_max and i_max must be positive")
        for g in (self.kp, self.ki, self.kd):
            if not 0.0 <= g <= self.k_max:
                raise ValueError("initial gains must lie in [0, k_max]")

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = 0.0


@dataclass(frozen=True)
class TrackError:
    """Errors between the robot pose and the current reference pose."""

    e_x: float
    e_y: float
    dr: float
    d_alpha: float
    e_theta: float


def compute_errors(
    robot: RobotPose, target: RobotPose, threshold: float = DISTANCE_THRESHOLD
) -> TrackError:
    """Range, bearing and heading errors from robot to target.

    The bearing error d_alpha is the target direction minus the robot
    heading, wrapped; it is defined as zero once the range drops below
    the threshold, where the direction becomes numerically meaningless.
    """
    e_x = target.x - robot.x
    e_y = target.y - robot.y
    dr = math.hypot(e_x, e_y)
    d_alpha = wrap_angle(math.atan2(e_y, e_x) - robot.theta) if dr >= threshold else 0.0
    e_theta = wrap_angle(target.theta - robot.theta)
    return TrackError(e_x, e_y, dr, d_alpha, e_theta)


def fpid_step(
    state: PidState,
    engine,
    error: float,
    dt: float,
    norm_scale: float,
    de_scale: float = 10.0,
) -> float:
    """One self-tuning PID update; mutates state, returns the output.

    The engine sees the error and its rate normalized into [-1, 1] (the
    rate additionally divided by de_scale) and returns gain increments,
    which are applied before the PID law is evaluated.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if not norm_scale > 0.0:
        raise ValueError("norm_scale must be positive")
    derivative = (error - state.prev_error) / dt
    e_n = min(max(error / norm_scale, -1.0), 1.0)
    de_n = min(max(derivative / (norm_scale * de_scale), -1.0), 1.0)
    dkp, dki, dkd = engine.infer(e_n, de_n)
    state.kp = min(max(state.kp + dkp, 0.0), state.k_max)
    state.ki = min(max(state.ki + dki, 0.0), state.k_max)
    state.kd = min(max(state.kd + dkd, 0.0), state.k_max)
    state.integral = min(max(state.integral + error * dt, -state.i_max), state.i_max)
    output = state.kp * error + state.ki * state.integral + state.kd * derivative
    state.prev_error = error
    return output


@dataclass
class FpidConfig:
    """Tuning knobs of the two-loop controller (see README for the file form)."""

    dist_kp: float = 1.0
    dist_ki: float = 0.0
    dist_kd: float = 0.1
    head_kp: float = 2.0
    head_ki: float = 0.0
    head_kd: float = 0.1
    k_max: float = 10.0
    i_max: float = 1.0
    dist_norm: float = 1.0
    head_norm: float = math.pi
    de_scale: float = 10.0
    threshold: float = DISTANCE_THRESHOLD
    v_max: float = 1.5
    omega_max: float = 3.14
    frame: str = "body"
    engine: str = "t1"
    fou_height_scale: float = 1.0
    fou_lag: float = 0.3

    def __post_init__(self):
        if self.frame not in ("body", "global"):
            raise ValueError("frame must be 'body' or 'global'")
        if self.engine not in ("t1", "it2"):
            raise ValueError("engine must be 't1' or 'it2'")
        if not self.v_max > 0.0 or not self.omega_max > 0.0:
            raise ValueError("velocity bounds must be positive")

    def build_engine(self):
        if self.engine == "it2":
            return Type2Engine(
                height_scale=self.fou_height_scale, lag=self.fou_lag
            )
        return Type1Engine()


class FuzzyPidController:
    """Two-loop self-tuning fuzzy PID tracker.

    Holds mutable loop state across steps; one instance per episode.
    An engine instance may be injected (e.g. a stub that returns zero
    increments, which reduces the controller to fixed-gain PID).
    """

    def __init__(self, config: FpidConfig | None = None, engine=None):
        self.config = config if config is not None else FpidConfig()
        self.engine = engine if engine is not None else self.config.build_engine()
        cfg = self.config
        self.distance = PidState(
            cfg.dist_kp, cfg.dist_ki, cfg.dist_kd, cfg.k_max, cfg.i_max
        )
        self.heading = PidState(
            cfg.head_kp, cfg.head_ki, cfg.head_kd, cfg.k_max, cfg.i_max
        )

    def reset(self) -> None:
        cfg = self.config
        self.distance = PidState(
            cfg.dist_kp, cfg.dist_ki, cfg.dist_kd, cfg.k_max, cfg.i_max
        )
        self.heading = PidState(
            cfg.head_kp, cfg.head_ki, cfg.head_kd, cfg.k_max, cfg.i_max
        )

    def command(self, robot: RobotPose, target: RobotPose, dt: float) -> BodyVelocity:
        """Velocity command driving the robot toward the target pose.

        The speed rides the bearing to the target; in the default body
        frame the bearing is relative to the robot heading and is rotated
        into the global frame here, since the plant integrates globally.
        """
        cfg = self.config
        err = compute_errors(robot, target, cfg.threshold)
        v = fpid_step(
            self.distance, self.engine, err.dr, dt, cfg.dist_norm, cfg.de_scale
        )
        omega = fpid_step(
            self.heading, self.engine, err.e_theta, dt, cfg.head_norm, cfg.de_scale
        )
        if err.dr < cfg.threshold:
            v = 0.0
        v = min(max(v, 0.0), cfg.v_max)
        omega = min(max(omega, -cfg.omega_max), cfg.omega_max)
        bearing = err.d_alpha + robot.theta if cfg.frame == "body" else err.d_alpha
        return BodyVelocity(v * math.cos(bearing), v * math.sin(bearing), omega)
