"""Planar hull geometry on projected fixes.

All functions take an (n, 2) array of planar coordinates in meters and work on
row indices, so callers can map hull vertices back to the original fixes.
"""

from __future__ import annotations

from typing import List, Tuple

import numpy as np


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """z-component of OA x OB; positive for a counter-clockwise turn."""
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def convex_hull_indices(xy: np.ndarray) -> List[int]:
    """Andrew's monotone chain.

    Returns row indices of the hull vertices in counter-clockwise order,
    starting from the lexicographically smallest point, with collinear points
    dropped. Fewer than three distinct points come back as the distinct
    points themselves.
    """
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    if len(xy) == 0:
        return []
    order = np.lexsort((xy[:, 1], xy[:, 0]))
    distinct: List[int] = []
    for idx in order:
        if distinct and np.array_equal(xy[distinct[-1]], xy[idx]):
            continue
        distinct.append(int(idx))
    if len(distinct) < 3:
        return distinct

    lower: List[int] = []
    for idx in distinct:
        while len(lower) >= 2 and _cross(xy[lower[-2]], xy[lower[-1]], xy[idx]) <= 0:
            lower.pop()
        lower.append(idx)
    upper: List[int] = []
    for idx in reversed(distinct):
        while len(upper) >= 2 and _cross(xy[upper[-2]], xy[upper[-1]], xy[idx]) <= 0:
            upper.pop()
        upper.append(idx)
    hull = lower[:-1] + upper[:-1]
    # all points collinear: the chains collapse onto the two extremes
    return hull if len(hull) >= 3 else [distinct[0], distinct[-1]]


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area of a simple polygon given in vertex order."""
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    if len(vertices) < 3:
        return 0.0
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def hull_area(xy: np.ndarray) -> float:
    """Area of the convex hull of `xy`; 0 for degenerate hulls."""
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    hull = convex_hull_indices(xy)
    return polygon_area(xy[hull]) if len(hull) >= 3 else 0.0


def antipodal_pairs(xy: np.ndarray) -> List[Tuple[int, int]]:
    """Candidate farthest pairs visited by rotating calipers over the hull.

    The list always contains a pair realising the hull diameter.
    """
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    hull = convex_hull_indices(xy)
    m = len(hull)
    if m == 0:
        return []
    if m == 1:
        return [(hull[0], hull[0])]
    if m == 2:
        return [(hull[0], hull[1])]

    pts = xy[hull]
    pairs: List[Tuple[int, int]] = []
    j = 1
    for i in range(m):
        ni = (i + 1) % m
        # advance the opposite caliper while it moves away from edge (i, ni)
        while abs(_cross(pts[i], pts[ni], pts[(j + 1) % m])) > abs(
            _cross(pts[i], pts[ni], pts[j])
        ):
            j = (j + 1) % m
        nj = (j + 1) % m
        pairs.extend(
            [(hull[i], hull[j]), (hull[ni], hull[j]), (hull[ni], hull[nj])]
        )
    return pairs


def hull_diameter(xy: np.ndarray) -> Tuple[float, Tuple[int, int]]:
    """Largest planar distance between two points and the pair realising it."""
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    pairs = antipodal_pairs(xy)
    if not pairs:
        return 0.0, (-1, -1)
    best = 0.0
    best_pair = pairs[0]
    for a, b in pairs:
        d = float(np.hypot(xy[a, 0] - xy[b, 0], xy[a, 1] - xy[b, 1]))
        if d > best:
            best, best_pair = d, (a, b)
    return best, best_pair
