"""Small closed-polyline helpers shared by the degree, energy and inverse code."""

from __future__ import annotations

import numpy as np


def polygon_signed_area(pts) -> float:
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def ensure_ccw(pts):
    pts = np.asarray(pts, dtype=float)
    if polygon_signed_area(pts) < 0.0:
        return pts[::-1].copy()
    return pts


def polygon_is_simple(pts, tol=1e-12) -> bool:
    """True when no two non-adjacent edges of the closed polygon intersect."""
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    if n < 3:
        return False
    a = pts
    b = np.roll(pts, -1, axis=0)
    d = b - a
    # pairwise segment intersection test, vectorized over the (n, n) grid
    ax, ay = a[:, 0][:, None], a[:, 1][:, None]
    dx, dy = d[:, 0][:, None], d[:, 1][:, None]
    cx, cy = a[:, 0][None, :], a[:, 1][None, :]
    ex, ey = d[:, 0][None, :], d[:, 1][None, :]
    denom = dx * ey - dy * ex
    rx, ry = cx - ax, cy - ay
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rx * ey - ry * ex) / denom
        u = (rx * dy - ry * dx) / denom
    crossing = (np.abs(denom) > tol) & (t > tol) & (t < 1 - tol) & (u > tol) & (u < 1 - tol)
    idx = np.arange(n)
    adjacent = (np.abs(idx[:, None] - idx[None, :]) <= 1) | \
        (np.abs(idx[:, None] - idx[None, :]) == n - 1)
    return not bool(np.any(crossing & ~adjacent))


def points_to_polyline_distance(points, loop):
    """Distance from each query point to a closed polyline, (k,) array."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(loop, dtype=float)
    b = np.roll(a, -1, axis=0)
    d = b - a
    len2 = np.maximum((d ** 2).sum(axis=1), 1e-300)
    # project every point on every segment
    w = points[:, None, :] - a[None, :, :]
    t = np.clip((w * d[None]).sum(axis=2) / len2[None], 0.0, 1.0)
    closest = a[None] + t[..., None] * d[None]
    dist = np.linalg.norm(points[:, None, :] - closest, axis=2)
    return dist.min(axis=1)


def densify(loop, max_edge):
    """Insert points so no edge of the closed polyline exceeds max_edge."""
    loop = np.asarray(loop, dtype=float)
    out = []
    for p, q in zip(loop, np.roll(loop, -1, axis=0)):
        n = max(1, int(np.ceil(np.linalg.norm(q - p) / max_edge)))
        for s in range(n):
            out.append(p + (q - p) * (s / n))
    return np.asarray(out)


def hausdorff_distance(loop_a, loop_b, resolution=None) -> float:
    """Symmetric Hausdorff distance between two closed polylines."""
    a = np.asarray(loop_a, dtype=float)
    b = np.asarray(loop_b, dtype=float)
    if resolution is None:
        scale = max(np.ptp(a, axis=0).max(), np.ptp(b, axis=0).max())
        resolution = 0.01 * scale
    ad = densify(a, resolution)
    bd = densify(b, resolution)
    d_ab = points_to_polyline_distance(ad, b).max()
    d_ba = points_to_polyline_distance(bd, a).max()
    return float(max(d_ab, d_ba))
