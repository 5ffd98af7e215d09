"""Nonlinear model predictive tracking control.

The optimal control problem minimizes quadratic state and input tracking
costs over a horizon of unicycle prediction steps, subject to exact
discrete dynamics (multiple-shooting equalities) and box bounds on the
inputs.  The solver iterates Gauss-Newton steps on the input sequence
with the states condensed out through the rollout, so the returned
trajectory satisfies the shooting constraints to machine precision;
bounds are enforced by an active-set pass inside each step and a
projected-gradient certificate decides convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from omnitrack.kinematics import BodyVelocity, RobotPose, wrap_angle
from omnitrack.planning import ReferenceTrajectory

ARMIJO_SLOPE = 1e-4
MIN_STEP = 1e-12


class NmpcError(Exception):
    """Base class for problem construction failures."""


class DimensionMismatchError(NmpcError):
    """Decision vector or reference shapes do not match the horizon."""


@dataclass
class OcpConfig:
    """Horizon, weights, bounds and solver tolerances."""

    horizon: int = 15
    ts: float = 0.1
    q_diag: tuple[float, float, float] = (15.0, 15.0, 15.0)
    r_diag: tuple[float, float] = (1.0, 1.0)
    v_max: float = 1.5
    omega_max: float = 3.14
    kkt_tolerance: float = 1e-4
    max_iterations: int = 50

    def __post_init__(self):
        if int(self.horizon) < 1:
            raise ValueError("horizon must be at least 1")
        self.horizon = int(self.horizon)
        if not self.ts > 0.0:
            raise ValueError("ts must be positive")
        self.q_diag = tuple(float(v) for v in self.q_diag)
        self.r_diag = tuple(float(v) for v in self.r_diag)
        if len(self.q_diag) != 3 or len(self.r_diag) != 2:
            raise ValueError("q_diag must have 3 entries, r_diag 2")
        if any(v < 0.0 for v in self.q_diag + self.r_diag):
            raise ValueError("weights must be non-negative")
        if not self.v_max > 0.0 or not self.omega_max > 0.0:
            raise ValueError("input bounds must be positive")
        if not self.kkt_tolerance > 0.0:
            raise ValueError("kkt_tolerance must be positive")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be at least 1")
        self.max_iterations = int(self.max_iterations)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lower = np.tile([-self.v_max, -self.omega_max], self.horizon)
        return lower, -lower


@dataclass
class OcpProblem:
    """One tracking instance: initial pose plus reference windows."""

    initial_state: RobotPose
    x_ref: np.ndarray
    u_ref: np.ndarray

    def __post_init__(self):
        self.x_ref = np.asarray(self.x_ref, dtype=float)
        self.u_ref = np.asarray(self.u_ref, dtype=float)
        if self.x_ref.ndim != 2 or self.x_ref.shape[1] != 3:
            raise DimensionMismatchError("x_ref must be (horizon + 1, 3)")
        if self.u_ref.ndim != 2 or self.u_ref.shape[1] != 2:
            raise DimensionMismatchError("u_ref must be (horizon, 2)")
        if self.x_ref.shape[0] != self.u_ref.shape[0] + 1:
            raise DimensionMismatchError("x_ref must be one row longer than u_ref")

    @property
    def horizon(self) -> int:
        return self.u_ref.shape[0]


@dataclass
class OcpSolution:
    """Stacked solution w = [u_0..u_{N-1}, x_0..x_N] plus diagnostics."""

    w: np.ndarray
    cost: float
    kkt_residual: float
    defect_norm: float
    iterations: int
    converged: bool

    @property
    def horizon(self) -> int:
        return (self.w.size - 3) // 5

    @property
    def inputs(self) -> np.ndarray:
        n = self.horizon
        return self.w[: 2 * n].reshape(n, 2)

    @property
    def states(self) -> np.ndarray:
        n = self.horizon
        return self.w[2 * n :].reshape(n + 1, 3)


def predict(pose: RobotPose, u, ts: float) -> RobotPose:
    """One explicit Euler step of the unicycle model."""
    v, omega = float(u[0]), float(u[1])
    return RobotPose(
        pose.x + ts * v * math.cos(pose.theta),
        pose.y + ts * v * math.sin(pose.theta),
        wrap_angle(pose.theta + ts * omega),
    )


def rollout(x0: np.ndarray, inputs: np.ndarray, ts: float) -> np.ndarray:
    """States visited by the unicycle under an input sequence."""
    inputs = np.asarray(inputs, dtype=float)
    states = np.empty((inputs.shape[0] + 1, 3))
    states[0] = x0
    for k, (v, omega) in enumerate(inputs):
        x, y, theta = states[k]
        states[k + 1] = (
            x + ts * v * math.cos(theta),
            y + ts * v * math.sin(theta),
            wrap_angle(theta + ts * omega),
        )
    return states


def ocp_cost(problem: OcpProblem, config: OcpConfig, w: np.ndarray) -> float:
    """Quadratic tracking cost of a stacked decision vector."""
    n = problem.horizon
    w = np.asarray(w, dtype=float)
    if w.shape != (5 * n + 3,):
        raise DimensionMismatchError(f"w must have {5 * n + 3} entries")
    inputs = w[: 2 * n].reshape(n, 2)
    states = w[2 * n :].reshape(n + 1, 3)
    q = np.asarray(config.q_diag)
    r = np.asarray(config.r_diag)
    ex = states - problem.x_ref
    ex[:, 2] = wrap_angle(ex[:, 2])
    eu = inputs - problem.u_ref
    return float(np.sum(ex * ex * q) + np.sum(eu * eu * r))


def defects(problem: OcpProblem, config: OcpConfig, w: np.ndarray) -> float:
    """Largest violation of the shooting equalities, infinity norm."""
    n = problem.horizon
    inputs = w[: 2 * n].reshape(n, 2)
    states = w[2 * n :].reshape(n + 1, 3)
    worst = np.max(np.abs(states[0] - problem.initial_state.as_array()))
    for k in range(n):
        nxt = rollout(states[k], inputs[k : k + 1], config.ts)[1]
        gap = states[k + 1] - nxt
        gap[2] = wrap_angle(gap[2])
        worst = max(worst, float(np.max(np.abs(gap))))
    return float(worst)


class _Condensed:
    """Residual and Jacobian of the cost as a function of inputs only."""

    def __init__(self, problem: OcpProblem, config: OcpConfig):
        self.problem = problem
        self.config = config
        self.x0 = problem.initial_state.as_array()
        self.sq = np.sqrt(np.asarray(config.q_diag))
        self.sr = np.sqrt(np.asarray(config.r_diag))

    def residual(self, u_flat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.problem.horizon
        inputs = u_flat.reshape(n, 2)
        states = rollout(self.x0, inputs, self.config.ts)
        ex = states - self.problem.x_ref
        ex[:, 2] = wrap_angle(ex[:, 2])
        r = np.concatenate(
            [(ex * self.sq).ravel(), ((inputs - self.problem.u_ref) * self.sr).ravel()]
        )
        return r, states

    def jacobian(self, u_flat: np.ndarray, states: np.ndarray) -> np.ndarray:
        """Chain-rule sensitivities of all residual rows w.r.t. inputs."""
        n = self.problem.horizon
        ts = self.config.ts
        inputs = u_flat.reshape(n, 2)
        jac = np.zeros((3 * (n + 1) + 2 * n, 2 * n))
        sens = np.zeros((3, 2 * n))  # d x_k / d u, updated along the rollout
        for k in range(n):
            theta = states[k, 2]
            v = inputs[k, 0]
            a = np.array(
                [
                    [1.0, 0.0, -ts * v * math.sin(theta)],
                    [0.0, 1.0, ts * v * math.cos(theta)],
                    [0.0, 0.0, 1.0],
                ]
            )
            sens = a @ sens
            sens[0, 2 * k] += ts * math.cos(theta)
            sens[1, 2 * k] += ts * math.sin(theta)
            sens[2, 2 * k + 1] += ts
            jac[3 * (k + 1) : 3 * (k + 2)] = self.sq[:, None] * sens
        rows = 3 * (n + 1)
        for k in range(n):
            jac[rows + 2 * k, 2 * k] = self.sr[0]
            jac[rows + 2 * k + 1, 2 * k + 1] = self.sr[1]
        return jac


def _bounded_gn_step(
    jac: np.ndarray, r: np.ndarray, u: np.ndarray, lower: np.ndarray, upper: np.ndarray
) -> np.ndarray:
    """Gauss-Newton step kept inside the box by pinning violated bounds."""
    free = np.ones(u.size, dtype=bool)
    delta = np.zeros(u.size)
    for _ in range(u.size + 1):
        rhs = r + jac[:, ~free] @ delta[~free]
        if free.any():
            step, *_ = np.linalg.lstsq(jac[:, free], -rhs, rcond=None)
            delta[free] = step
        trial = u + delta
        viol = free & ((trial < lower) | (trial > upper))
        if not viol.any():
            break
        delta[viol] = np.clip(trial[viol], lower[viol], upper[viol]) - u[viol]
        free[viol] = False
    return delta


def _kkt_residual(
    grad: np.ndarray, u: np.ndarray, lower: np.ndarray, upper: np.ndarray
) -> float:
    """Infinity norm of the projected gradient over the box."""
    res = np.abs(grad)
    at_lower = u <= lower
    at_upper = u >= upper
    res[at_lower] = np.maximum(0.0, -grad[at_lower])
    res[at_upper] = np.maximum(0.0, grad[at_upper])
    return float(res.max()) if res.size else 0.0


def _steer_guess(problem: OcpProblem, config: OcpConfig) -> np.ndarray:
    """Turn-then-drive input guess aimed at the end of the window.

    Pure lateral displacements with aligned headings make the reference
    rollout a stationary point of the condensed cost (moving sideways
    needs a turn whose benefit is invisible to first order), so a second
    start that commits to the turn lets the solver escape it.
    """
    n = problem.horizon
    x0 = problem.initial_state.as_array()
    target = problem.x_ref[-1]
    dx, dy = target[0] - x0[0], target[1] - x0[1]
    dist = math.hypot(dx, dy)
    bearing = math.atan2(dy, dx) if dist > 1e-9 else target[2]
    turn = wrap_angle(bearing - x0[2])
    turn_steps = min(n, max(1, math.ceil(abs(turn) / (config.omega_max * config.ts))))
    guess = np.zeros((n, 2))
    guess[:turn_steps, 1] = turn / (turn_steps * config.ts)
    if turn_steps < n:
        guess[turn_steps:, 0] = dist / ((n - turn_steps) * config.ts)
    return guess.ravel()


def solve(
    problem: OcpProblem, config: OcpConfig, warm_start: np.ndarray | None = None
) -> OcpSolution:
    """Solve one tracking instance.

    With a warm start the iteration begins there; otherwise two starts
    are tried (the reference inputs and a turn-then-drive guess) and the
    cheaper solution wins.  Starts are clipped into the box.  Iterations
    stop at the KKT tolerance or the iteration cap; in the latter case
    the best iterate is still returned with ``converged`` False.
    """
    n = problem.horizon
    if config.horizon != n:
        raise DimensionMismatchError("problem horizon does not match config")
    lower, upper = config.bounds()
    if warm_start is not None:
        start = np.asarray(warm_start, dtype=float).reshape(-1)
        if start.size != 2 * n:
            raise DimensionMismatchError("warm start must hold horizon inputs")
        starts = [start]
    else:
        starts = [problem.u_ref.ravel(), _steer_guess(problem, config)]

    best = None
    total_iterations = 0
    for start in starts:
        solution = _solve_from(problem, config, np.clip(start, lower, upper))
        total_iterations += solution.iterations
        if best is None or solution.cost < best.cost:
            best = solution
        if best.cost <= 1e-9:
            break  # an (almost) exact fit cannot be improved
    best.iterations = total_iterations
    return best


def _solve_from(
    problem: OcpProblem, config: OcpConfig, u: np.ndarray
) -> OcpSolution:
    lower, upper = config.bounds()
    u = u.copy()
    model = _Condensed(problem, config)
    r, states = model.residual(u)
    cost = float(r @ r)
    kkt = math.inf
    iterations = 0
    converged = False

    for _ in range(config.max_iterations):
        jac = model.jacobian(u, states)
        grad = 2.0 * (jac.T @ r)
        kkt = _kkt_residual(grad, u, lower, upper)
        if kkt <= config.kkt_tolerance:
            converged = True
            break
        iterations += 1
        delta = _bounded_gn_step(jac, r, u, lower, upper)
        slope = float(grad @ delta)
        if slope >= 0.0:
            # Fall back to a projected gradient direction.
            delta = np.clip(u - grad, lower, upper) - u
            slope = float(grad @ delta)
            if slope >= 0.0:
                break
        alpha = 1.0
        while alpha >= MIN_STEP:
            trial = u + alpha * delta
            r_trial, states_trial = model.residual(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial <= cost + ARMIJO_SLOPE * alpha * slope:
                u, r, states, cost = trial, r_trial, states_trial, cost_trial
                break
            alpha *= 0.5
        else:
            break  # no acceptable step; report current iterate

    if not converged:
        jac = model.jacobian(u, states)
        kkt = _kkt_residual(2.0 * (jac.T @ r), u, lower, upper)
        converged = kkt <= config.kkt_tolerance

    w = np.concatenate([u, states.ravel()])
    return OcpSolution(
        w=w,
        cost=cost,
        kkt_residual=kkt,
        defect_norm=defects(problem, config, w),
        iterations=iterations,
        converged=converged,
    )


def reference_window(
    trajectory: ReferenceTrajectory, k: int, horizon: int
) -> tuple[np.ndarray, np.ndarray]:
    """Reference slice [k, k + horizon], padded by holding the final pose.

    Past the trajectory end the pose reference repeats the last row and
    the input reference is zero, so the horizon smoothly parks the robot.
    """
    n = len(trajectory)
    if not 0 <= k < n:
        raise IndexError(f"step {k} outside trajectory of length {n}")
    idx = np.minimum(np.arange(k, k + horizon + 1), n - 1)
    x_ref = trajectory.poses[idx].copy()
    u_idx = idx[:-1]
    u_ref = np.column_stack(
        [trajectory.v_ref[u_idx], trajectory.omega_ref[u_idx]]
    )
    padded = u_idx >= n - 1
    u_ref[padded] = 0.0
    return x_ref, u_ref


class NmpcController:
    """Receding-horizon wrapper around :func:`solve`.

    Keeps the previous solution to warm start the next step (shift by
    one, repeat the last input) and exposes per-step diagnostics for the
    run log.  One instance per episode; not reentrant.
    """

    def __init__(self, config: OcpConfig | None = None):
        self.config = config if config is not None else OcpConfig()
        self.last_solution: OcpSolution | None = None

    def reset(self) -> None:
        self.last_solution = None

    def command(
        self, robot: RobotPose, trajectory: ReferenceTrajectory, k: int
    ) -> BodyVelocity:
        """Solve from the current pose and emit the first input.

        The unicycle's speed acts along the heading the robot will hold
        during the step, so the global command points along the predicted
        next heading.
        """
        cfg = self.config
        x_ref, u_ref = reference_window(trajectory, k, cfg.horizon)
        problem = OcpProblem(robot, x_ref, u_ref)
        warm = None
        if self.last_solution is not None:
            prev = self.last_solution.inputs
            warm = np.vstack([prev[1:], prev[-1:]]).ravel()
        solution = solve(problem, cfg, warm_start=warm)
        self.last_solution = solution
        v, omega = solution.inputs[0]
        psi = solution.states[1, 2]
        return BodyVelocity(v * math.cos(psi), v * math.sin(psi), omega)
