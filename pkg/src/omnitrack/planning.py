"""Grid path planning and reference trajectory generation.

Pipeline: A* search on a binary occupancy grid, clamped cubic B-spline
smoothing of the cell path, then constant-arc-length sampling of the
smooth curve into a timestamped reference (pose, speed, yaw rate) table
that the tracking controllers consume.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import ndimage
from scipy.interpolate import BSpline

from omnitrack.kinematics import wrap_angle

SPLINE_DEGREE = 3
MIN_CONTROL_POINTS = 4
ARC_LENGTH_TOL = 1e-8
DEGENERATE_LENGTH = 1e-9

TRAJECTORY_HEADER = ["n", "t", "x_ref", "y_ref", "theta_ref", "v_ref", "omega_ref"]

# Fixed expansion order keeps A* fully deterministic: east, west, north, south.
NEIGHBOR_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class PlanningError(Exception):
    """Base class for planning failures."""


class InvalidCellError(PlanningError):
    """Start or goal cell is occupied or outside the grid."""


class NoPathError(PlanningError):
    """The occupancy grid admits no path between start and goal."""


class DegenerateCurveError(PlanningError):
    """Smoothed curve has (numerically) zero arc length."""


@dataclass
class OccupancyGrid:
    """Binary occupancy grid; cells[row, col] == 1 marks an obstacle.

    Row index equals the y cell index, so cell (col, row) has world
    coordinates origin + (col, row) * resolution at its centre.
    """

    cells: np.ndarray
    resolution: float = 1.0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        arr = np.asarray(self.cells)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("cells must be a non-empty 2-D array")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("cells must contain only 0 and 1")
        if not self.resolution > 0.0:
            raise ValueError("resolution must be positive")
        self.cells = arr.astype(np.uint8)
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        col, row = cell
        return 0 <= col < self.width and 0 <= row < self.height

    def is_free(self, cell: tuple[int, int]) -> bool:
        col, row = cell
        return self.in_bounds(cell) and self.cells[row, col] == 0

    def cell_to_world(self, cell: tuple[int, int]) -> tuple[float, float]:
        col, row = cell
        return (
            self.origin[0] + col * self.resolution,
            self.origin[1] + row * self.resolution,
        )


def load_grid(path) -> OccupancyGrid:
    """Read a grid map file.

    First line is ``width height resolution``; the following ``height``
    lines hold ``width`` characters from {0, 1} each, topmost row first.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.rstrip("\n") for line in fh]
    lines = [line for line in lines if line.strip() != ""]
    if not lines:
        raise ValueError("empty map file")
    header = lines[0].split()
    if len(header) != 3:
        raise ValueError("map header must be 'width height resolution'")
    width, height = int(header[0]), int(header[1])
    resolution = float(header[2])
    rows = lines[1:]
    if len(rows) != height:
        raise ValueError(f"expected {height} map rows, found {len(rows)}")
    cells = np.zeros((height, width), dtype=np.uint8)
    for j, line in enumerate(rows):
        if len(line) != width or set(line) - {"0", "1"}:
            raise ValueError(f"map row {j} must be {width} characters of 0/1")
        # File rows run top to bottom; internal rows run bottom to top.
        cells[height - 1 - j, :] = [int(ch) for ch in line]
    return OccupancyGrid(cells, resolution)


def save_grid(grid: OccupancyGrid, path) -> None:
    """Write a grid map file (inverse of :func:`load_grid`)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{grid.width} {grid.height} {grid.resolution!r}\n")
        for row in range(grid.height - 1, -1, -1):
            fh.write("".join(str(int(v)) for v in grid.cells[row]) + "\n")


def inflate(grid: OccupancyGrid, radius: float) -> OccupancyGrid:
    """Dilate obstacles by ceil(radius / resolution) cells (square kernel)."""
    if radius < 0.0:
        raise ValueError("radius must be non-negative")
    steps = math.ceil(radius / grid.resolution)
    if steps == 0:
        return OccupancyGrid(grid.cells.copy(), grid.resolution, grid.origin)
    kernel = np.ones((2 * steps + 1, 2 * steps + 1), dtype=bool)
    grown = ndimage.binary_dilation(grid.cells.astype(bool), structure=kernel)
    return OccupancyGrid(grown.astype(np.uint8), grid.resolution, grid.origin)


@dataclass
class GridPath:
    """Sequence of 4-connected free cells from start to goal, inclusive."""

    cells: list[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def cost(self) -> int:
        """Path cost under unit step cost."""
        return len(self.cells) - 1

    def world_points(self, grid: OccupancyGrid) -> np.ndarray:
        return np.array([grid.cell_to_world(c) for c in self.cells], dtype=float)


def _manhattan(a: tuple[int, int], b: tuple[int, int]) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def astar(
    grid: OccupancyGrid,
    start: tuple[int, int],
    goal: tuple[int, int],
    count_expansions: bool = False,
):
    """A* over the 4-connected grid with unit step cost.

    The Manhattan heuristic is admissible and consistent for this move
    set, so the first goal expansion is optimal.  Ties on f are broken
    toward the lower heuristic, then first-in-first-out, which makes the
    returned path deterministic.

    Returns the path, or ``(path, expansions)`` when ``count_expansions``.
    """
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    for name, cell in (("start", start), ("goal", goal)):
        if not grid.in_bounds(cell):
            raise InvalidCellError(f"{name} cell {cell} outside grid")
        if not grid.is_free(cell):
            raise InvalidCellError(f"{name} cell {cell} is occupied")

    counter = 0
    g_score = {start: 0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    closed: set[tuple[int, int]] = set()
    h0 = _manhattan(start, goal)
    heap = [(h0, h0, counter, start)]
    expansions = 0

    while heap:
        _, _, _, cell = heapq.heappop(heap)
        if cell in closed:
            continue
        closed.add(cell)
        expansions += 1
        if cell == goal:
            cells = [cell]
            while cell != start:
                cell = parent[cell]
                cells.append(cell)
            cells.reverse()
            path = GridPath(cells)
            return (path, expansions) if count_expansions else path
        g_next = g_score[cell] + 1
        for dc, dr in NEIGHBOR_STEPS:
            nxt = (cell[0] + dc, cell[1] + dr)
            if nxt in closed or not grid.is_free(nxt):
                continue
            if g_next < g_score.get(nxt, np.inf):
                g_score[nxt] = g_next
                parent[nxt] = cell
                h = _manhattan(nxt, goal)
                counter += 1
                heapq.heappush(heap, (g_next + h, h, counter, nxt))

    raise NoPathError(f"no path from {start} to {goal}")


def _clamped_knots(n_points: int, degree: int) -> np.ndarray:
    """Endpoint-interpolating knot vector with uniform interior knots."""
    interior = np.linspace(0.0, 1.0, n_points - degree + 1)[1:-1]
    return np.concatenate(
        [np.zeros(degree + 1), interior, np.ones(degree + 1)]
    )


@dataclass
class SmoothPath:
    """Clamped cubic B-spline curve through a planned path's corridor."""

    control_points: np.ndarray
    degree: int = SPLINE_DEGREE
    knots: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.control_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("control points must be an (n, 2) array")
        if pts.shape[0] < self.degree + 1:
            raise ValueError("need at least degree + 1 control points")
        self.control_points = pts
        if self.knots is None:
            self.knots = _clamped_knots(pts.shape[0], self.degree)
        else:
            self.knots = np.asarray(self.knots, dtype=float)
            expected = pts.shape[0] + self.degree + 1
            if self.knots.shape != (expected,):
                raise ValueError("knot vector has wrong length")
        self._spline = BSpline(self.knots, self.control_points, self.degree)
        self._dspline = self._spline.derivative(1)

    def point(self, t) -> np.ndarray:
        """Evaluate the curve at parameter t in [0, 1]."""
        return self._spline(np.clip(t, 0.0, 1.0))

    def derivative(self, t, order: int = 1) -> np.ndarray:
        return self._spline.derivative(order)(np.clip(t, 0.0, 1.0))

    def _speed(self, t) -> np.ndarray:
        d = self._dspline(t)
        return np.hypot(d[..., 0], d[..., 1])


def smooth(path: GridPath, grid: OccupancyGrid) -> SmoothPath:
    """Smooth a grid path into a clamped cubic B-spline.

    Every path cell centre becomes a control point (no decimation), so
    short hops stay close to the searched corridor.  Paths with fewer
    than four cells are padded by duplicating the endpoints.
    """
    pts = path.world_points(grid)
    while pts.shape[0] < MIN_CONTROL_POINTS:
        pts = np.vstack([pts[0], pts, pts[-1]])
    return SmoothPath(pts)


_GL_NODES, _GL_WEIGHTS = leggauss(10)


def _gl_arc(curve: SmoothPath, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gauss-Legendre (order 10) arc length of curve over [a, b], vectorized."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    # nodes: (..., 10) parameter values per interval
    ts = mid[..., None] + half[..., None] * _GL_NODES
    speeds = curve._speed(ts.reshape(-1)).reshape(ts.shape)
    return half * (speeds @ _GL_WEIGHTS)


def _arc_table(curve: SmoothPath, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Adaptive cumulative arc length over the knot spans.

    Each span is subdivided until one more bisection changes its length
    estimate by less than its share of tol.  Returns interval edges and
    the cumulative arc length at each edge.
    """
    spans = np.unique(curve.knots)
    edges = [0.0]
    lengths = []
    budget = tol / max(len(spans) - 1, 1)
    for a, b in zip(spans[:-1], spans[1:]):
        stack = [(a, b, _gl_arc(curve, a, b))]
        while stack:
            lo, hi, coarse = stack.pop()
            mid = 0.5 * (lo + hi)
            left = _gl_arc(curve, lo, mid)
            right = _gl_arc(curve, mid, hi)
            if abs(left + right - coarse) <= budget or hi - lo < 1e-12:
                # left interval first: keep edges sorted by processing order
                stack_done = [(lo, mid, left), (mid, hi, right)]
                for e0, e1, val in stack_done:
                    edges.append(e1)
                    lengths.append(val)
            else:
                stack.append((mid, hi, right))
                stack.append((lo, mid, left))
    edges = np.array(edges)
    cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
    return edges, cumulative


def _invert_arc_length(
    curve: SmoothPath, edges: np.ndarray, cumulative: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Bisection solve of arc_length(0, t) = target for each target."""
    total = cumulative[-1]
    targets = np.clip(targets, 0.0, total)
    idx = np.clip(np.searchsorted(cumulative, targets, side="right") - 1, 0, len(edges) - 2)
    lo = edges[idx]
    hi = edges[idx + 1]
    base = cumulative[idx]
    local = targets - base
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        below = _gl_arc(curve, edges[idx], mid) < local
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


@dataclass
class ReferenceTrajectory:
    """Uniformly timestamped reference: poses plus speed and yaw-rate rows."""

    ts: float
    poses: np.ndarray
    v_ref: np.ndarray
    omega_ref: np.ndarray

    def __post_init__(self):
        self.poses = np.asarray(self.poses, dtype=float)
        self.v_ref = np.asarray(self.v_ref, dtype=float)
        self.omega_ref = np.asarray(self.omega_ref, dtype=float)
        if not self.ts > 0.0:
            raise ValueError("ts must be positive")
        n = self.poses.shape[0]
        if self.poses.ndim != 2 or self.poses.shape[1] != 3 or n < 2:
            raise ValueError("poses must be an (N >= 2, 3) array")
        if self.v_ref.shape != (n,) or self.omega_ref.shape != (n,):
            raise ValueError("v_ref and omega_ref must match poses length")
        if np.any(self.v_ref < 0.0):
            raise ValueError("v_ref must be non-negative")
        self.poses[:, 2] = wrap_angle(self.poses[:, 2])

    def __len__(self) -> int:
        return self.poses.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.ts

    @property
    def duration(self) -> float:
        return (len(self) - 1) * self.ts


def sample_reference(
    curve: SmoothPath, total_time: float, ts: float
) -> ReferenceTrajectory:
    """Sample a smooth curve into floor(total_time/ts) + 1 reference rows.

    Waypoints are equally spaced in arc length.  Headings point along the
    chord to the previous waypoint, speeds are chord length over ts and
    yaw rates are wrapped heading increments over ts; row 0 copies row 1
    with zero yaw rate so the reference starts aligned and at speed.
    """
    if not total_time > 0.0 or not ts > 0.0:
        raise ValueError("total_time and ts must be positive")
    n_points = int(math.floor(total_time / ts)) + 1
    if n_points < 2:
        raise ValueError("total_time must cover at least one step")

    edges, cumulative = _arc_table(curve, ARC_LENGTH_TOL)
    total = cumulative[-1]
    if total < DEGENERATE_LENGTH:
        raise DegenerateCurveError("curve arc length is numerically zero")

    targets = np.linspace(0.0, total, n_points)
    params = _invert_arc_length(curve, edges, cumulative, targets)
    params[0], params[-1] = 0.0, 1.0
    xy = curve.point(params)

    dx = np.diff(xy[:, 0])
    dy = np.diff(xy[:, 1])
    theta = np.empty(n_points)
    theta[1:] = np.arctan2(dy, dx)
    theta[0] = theta[1]

    v = np.empty(n_points)
    v[1:] = np.hypot(dx, dy) / ts
    v[0] = v[1]

    omega = np.empty(n_points)
    omega[1:] = wrap_angle(np.diff(theta)) / ts
    omega[0] = 0.0

    poses = np.column_stack([xy, theta])
    return ReferenceTrajectory(ts, poses, v, omega)


def write_trajectory_csv(trajectory: ReferenceTrajectory, path) -> None:
    """Write the reference table; floats keep full round-trip precision."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for n in range(len(trajectory)):
            x, y, th = trajectory.poses[n]
            writer.writerow(
                [
                    n,
                    repr(n * trajectory.ts),
                    repr(float(x)),
                    repr(float(y)),
                    repr(float(th)),
                    repr(float(trajectory.v_ref[n])),
                    repr(float(trajectory.omega_ref[n])),
                ]
            )


def read_trajectory_csv(path) -> ReferenceTrajectory:
    with open(path, "r", encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRAJECTORY_HEADER:
            raise ValueError("unexpected trajectory header")
        rows = [[float(v) for v in row] for row in reader]
    if len(rows) < 2:
        raise ValueError("trajectory must hold at least two rows")
    data = np.array(rows)
    ts = data[1, 1] - data[0, 1]
    return ReferenceTrajectory(ts, data[:, 2:5], data[:, 5], data[:, 6])


def plan_reference(
    grid: OccupancyGrid,
    start: tuple[int, int],
    goal: tuple[int, int],
    total_time: float,
    ts: float,
) -> tuple[GridPath, SmoothPath, ReferenceTrajectory]:
    """Full pipeline: search, smooth, sample."""
    path = astar(grid, start, goal)
    curve = smooth(path, grid)
    return path, curve, sample_reference(curve, total_time, ts)
