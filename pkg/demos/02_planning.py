"""From occupancy grid to time-parameterized reference.

Planning runs in three stages: grid search over the 4-connected free
cells, clamped cubic B-spline smoothing of the cell-center polyline,
and uniform arc-length resampling into a timed pose/velocity table the
controllers can follow.  This demo runs the pipeline on the bundled
arena and renders the three stages on top of the obstacle map.
"""

from pathlib import Path

import numpy as np

from omnitrack import astar, load_grid, sample_reference, smooth
from omnitrack.cli import standard_map_path
from omnitrack.planning import write_trajectory_csv
from omnitrack.svgplot import grid_overlay

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

grid = load_grid(standard_map_path())
print(f"arena: {grid.width} x {grid.height} cells at {grid.resolution} m, "
      f"{int(grid.cells.sum())} occupied")

path, expansions = astar(grid, (0, 0), (19, 19), count_expansions=True)
print(f"grid search: {len(path)} cells, cost {path.cost}, "
      f"{expansions} expansions")

curve = smooth(path, grid)
dense = curve.point(np.linspace(0.0, 1.0, 400))
chords = float(np.sum(np.hypot(*np.diff(dense, axis=0).T)))
print(f"smoothed curve: arc length {chords:.2f} m "
      f"(polyline was {path.cost * grid.resolution:.2f} m)")

trajectory = sample_reference(curve, total_time=30.0, ts=0.1)
speeds = np.hypot(*np.diff(trajectory.poses[:, :2], axis=0).T) / trajectory.ts
print(f"reference: {len(trajectory)} samples over 30 s, "
      f"cruise speed ~{np.median(speeds):.2f} m/s")

write_trajectory_csv(trajectory, OUT / "planning_reference.csv")
print(f"table -> {OUT / 'planning_reference.csv'}")

cells_xy = path.world_points(grid)
grid_overlay(
    OUT / "planning_stages.svg",
    grid,
    [
        ("grid path", cells_xy),
        ("smoothed", dense),
        ("reference", trajectory.poses[:, :2]),
    ],
    title="Search, smoothing and sampling",
)
print(f"figure -> {OUT / 'planning_stages.svg'}")
