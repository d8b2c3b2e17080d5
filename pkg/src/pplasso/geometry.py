"""Windows, point patterns, erosion and neighbour queries.

The spatial substrate used by every other module: axis-aligned rectangular
observation windows, finite planar point patterns, window erosion, counting,
and R-neighbour queries with an inclusive (closed-ball) boundary convention.
All types are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyErosionError, OutOfWindowError

__all__ = ["Window", "PointPattern", "read_points_csv", "write_points_csv"]


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle [xmin, xmax] x [ymin, ymax] with closed boundary."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(
                f"degenerate window [{self.xmin}, {self.xmax}] x [{self.ymin}, {self.ymax}]"
            )

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def contains(self, x, y):
        """Vectorized closed-boundary membership test."""
        return (
            (np.asarray(x) >= self.xmin)
            & (np.asarray(x) <= self.xmax)
            & (np.asarray(y) >= self.ymin)
            & (np.asarray(y) <= self.ymax)
        )

    def erode(self, r: float) -> "Window":
        """Shrink the window by r on every side.

        Parameters
        ----------
        r : float
            Nonnegative erosion distance (the interaction range when used
            for pseudo-likelihood domains).

        Returns
        -------
        Window
            [xmin + r, xmax - r] x [ymin + r, ymax - r].

        Raises
        ------
        EmptyErosionError
            If the eroded rectangle would be empty or degenerate.
        """
        if r < 0:
            raise ValueError("erosion distance must be nonnegative")
        if r == 0:
            return self
        if self.width <= 2 * r or self.height <= 2 * r:
            raise EmptyErosionError(
                f"eroding [{self.xmin}, {self.xmax}] x [{self.ymin}, {self.ymax}] "
                f"by {r} leaves an empty rectangle"
            )
        return Window(self.xmin + r, self.xmax - r, self.ymin + r, self.ymax - r)

    def as_tuple(self) -> tuple:
        return (self.xmin, self.xmax, self.ymin, self.ymax)


class PointPattern:
    """A finite simple point pattern inside a rectangular window.

    Parameters
    ----------
    points : array-like, shape (n, 2)
        Point coordinates. Order is preserved.
    window : Window
        Observation window; every point must lie inside it (closed boundary).

    Raises
    ------
    ValueError
        If a point falls outside the window or two points coincide exactly.
    """

    __slots__ = ("points", "window")

    def __init__(self, points, window: Window):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            pts = np.empty((0, 2))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must have shape (n, 2)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        inside = window.contains(pts[:, 0], pts[:, 1])
        if not np.all(inside):
            k = int(np.argmin(inside))
            raise OutOfWindowError(
                f"point {tuple(pts[k])} lies outside the window {window.as_tuple()}"
            )
        if pts.shape[0] > 1:
            # simplicity: no two points may share identical coordinates
            if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
                raise ValueError("pattern is not simple: duplicate coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window", window)

    def __setattr__(self, name, value):
        raise AttributeError("PointPattern is immutable")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n

    def count_in(self, b: Window) -> int:
        """Number of pattern points inside b (closed boundaries)."""
        if self.n == 0:
            return 0
        return int(np.count_nonzero(b.contains(self.points[:, 0], self.points[:, 1])))

    def neighbors_within(self, u, r: float, exclude=None) -> int:
        """Count points v with ||v - u|| <= r, optionally excluding one point.

        `exclude` is dropped only if it matches a pattern point exactly
        (coordinate equality), which is the leave-one-out rule used when u
        itself belongs to the pattern.
        """
        if r <= 0:
            raise ValueError("neighbour radius must be positive")
        if self.n == 0:
            return 0
        ux, uy = float(u[0]), float(u[1])
        d2 = (self.points[:, 0] - ux) ** 2 + (self.points[:, 1] - uy) ** 2
        hit = d2 <= r * r
        count = int(np.count_nonzero(hit))
        if exclude is not None:
            ex, ey = float(exclude[0]), float(exclude[1])
            match = hit & (self.points[:, 0] == ex) & (self.points[:, 1] == ey)
            count -= int(np.count_nonzero(match))
        return count

    def neighbor_counts(self, query_points, r: float, leave_one_out: bool = False):
        """Vectorized R-neighbour counts for many query locations.

        Uses a kd-tree; correctness is pinned to the O(n^2)
        `neighbors_within` scan by the test suite. With ``leave_one_out``
        each query point is assumed to be a pattern point and its self-match
        at distance zero is removed.
        """
        q = np.atleast_2d(np.asarray(query_points, dtype=float))
        if self.n == 0:
            return np.zeros(q.shape[0], dtype=int)
        tree = cKDTree(self.points)
        counts = tree.query_ball_point(q, r, return_length=True)
        counts = np.asarray(counts, dtype=int)
        if leave_one_out:
            counts = counts - 1
        return counts

    def without(self, index: int) -> "PointPattern":
        """Copy of the pattern with point `index` removed."""
        keep = np.ones(self.n, dtype=bool)
        keep[index] = False
        return PointPattern(self.points[keep], self.window)

    def __repr__(self):
        return f"PointPattern(n={self.n}, window={self.window.as_tuple()})"


def write_points_csv(pattern: PointPattern, path) -> None:
    """Write a pattern in the points CSV format: header `x,y`, one point per line."""
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in pattern.points:
            fh.write(f"{x:.17g},{y:.17g}\n")


def read_points_csv(path, window: Window) -> PointPattern:
    """Read a points CSV (header `x,y`). The window is always supplied, never inferred."""
    pts = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "x,y":
            raise ValueError(f"expected header 'x,y', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected two comma-separated values")
            pts.append((float(parts[0]), float(parts[1])))
    return PointPattern(np.asarray(pts, dtype=float).reshape(-1, 2), window)
