"""Independent reference computations used by the tests."""

import math

import numpy as np


def union_contains(rects, q):
    return any(abs(q[0] - cx) <= hx and abs(q[1] - cy) <= hy for cx, cy, hx, hy in rects)


def dense_boundary(rects, n_total=10_000):
    """Sample the outline of a union of axis-aligned rectangles.

    Rectangle perimeters are sampled uniformly by arc length; a sample is kept
    when a point a hair outside its edge is not covered by the union.
    """
    perims = [4 * (hx + hy) for _, _, hx, hy in rects]
    pts = []
    for (cx, cy, hx, hy), per in zip(rects, perims):
        n = int(round(n_total * per / sum(perims)))
        for s in np.linspace(0.0, per, n, endpoint=False):
            if s < 2 * hx:
                p, nrm = (cx - hx + s, cy + hy), (0.0, 1.0)
            elif s < 2 * hx + 2 * hy:
                p, nrm = (cx + hx, cy + hy - (s - 2 * hx)), (1.0, 0.0)
            elif s < 4 * hx + 2 * hy:
                p, nrm = (cx + hx - (s - 2 * hx - 2 * hy), cy - hy), (0.0, -1.0)
            else:
                p, nrm = (cx - hx, cy - hy + (s - 4 * hx - 2 * hy)), (-1.0, 0.0)
            probe = (p[0] + 1e-9 * nrm[0], p[1] + 1e-9 * nrm[1])
            if not union_contains(rects, probe):
                pts.append(p)
    return np.array(pts)


def brute_signed_distance(rects, boundary, pose, point):
    (bx, by), phi = pose
    c, s = math.cos(phi), math.sin(phi)
    dx, dy = point[0] - bx, point[1] - by
    q = (c * dx + s * dy, -s * dx + c * dy)
    d = np.min(np.hypot(boundary[:, 0] - q[0], boundary[:, 1] - q[1]))
    return -d if union_contains(rects, q) else d


def servo_velocity(u, kv, t):
    """Closed-form first-order servo response from rest."""
    return u * (1.0 - math.exp(-kv * t))


def window_aggregate(values, m, reducer):
    """Direct per-point window reduction (no filters, no cumulative sums)."""
    n = len(values)
    out = np.empty(n)
    for i in range(n):
        out[i] = reducer(values[max(0, i - m): min(n, i + m + 1)])
    return out
