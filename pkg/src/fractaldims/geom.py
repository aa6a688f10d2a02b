"""Planar geometry helpers: segment distances, polygon predicates, clipping.

Everything here operates on plain numpy arrays: a polyline is an (m, 2)
float array of vertices, a polygon is the same with an implied closing
edge from the last vertex back to the first.  All functions are pure.
"""

from __future__ import annotations

import numpy as np

from .errors import GeometryError


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def polyline_length(vertices: np.ndarray) -> float:
    """Total length of an open polyline."""
    d = np.diff(np.asarray(vertices, dtype=float), axis=0)
    return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def polygon_area(vertices: np.ndarray) -> float:
    """Signed area (shoelace); positive for counterclockwise orientation."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    """Area centroid of a simple polygon."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xr, yr = np.roll(x, -1), np.roll(y, -1)
    cross = x * yr - xr * y
    a = 0.5 * np.sum(cross)
    cx = np.sum((x + xr) * cross) / (6.0 * a)
    cy = np.sum((y + yr) * cross) / (6.0 * a)
    return np.array([cx, cy])


def segment_point_distance(points: np.ndarray, a, b) -> np.ndarray:
    """Euclidean distances from each point to the segment [a, b]."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.hypot(p[:, 0] - a[0], p[:, 1] - a[1])
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(p[:, 0] - proj[:, 0], p[:, 1] - proj[:, 1])


def points_to_segments_distance(points: np.ndarray, seg_a: np.ndarray,
                                seg_b: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest of a batch of segments.

    points: (m, 2); seg_a, seg_b: (k, 2).  Returns (m,).  Memory use is
    O(m * k); callers chunk as needed.
    """
    p = np.asarray(points, dtype=float)[:, None, :]      # (m, 1, 2)
    a = np.asarray(seg_a, dtype=float)[None, :, :]       # (1, k, 2)
    ab = np.asarray(seg_b, dtype=float)[None, :, :] - a  # (1, k, 2)
    denom = np.sum(ab * ab, axis=2)                      # (1, k)
    denom = np.where(denom == 0.0, 1.0, denom)
    t = np.clip(np.sum((p - a) * ab, axis=2) / denom, 0.0, 1.0)
    proj = a + t[:, :, None] * ab
    d = np.hypot(p[..., 0] - proj[..., 0], p[..., 1] - proj[..., 1])
    return d.min(axis=1)


def snap(points: np.ndarray, tol: float) -> np.ndarray:
    """Round coordinates onto a tol-spaced lattice (for dedup/robust predicates)."""
    return np.round(np.asarray(points, dtype=float) / tol) * tol


def dedupe_points(points: np.ndarray, tol: float) -> np.ndarray:
    """Remove near-duplicate points by snapping to a tol lattice."""
    snapped = snap(points, tol)
    _, idx = np.unique(snapped, axis=0, return_index=True)
    return np.asarray(points, dtype=float)[np.sort(idx)]


def point_in_polygon_mask(xs: np.ndarray, ys: np.ndarray,
                          polygon: np.ndarray,
                          strict: bool = False) -> np.ndarray:
    """Even-odd (crossing number) inside test on a grid of cell centers.

    xs: (nx,), ys: (ny,) center coordinates.  Returns a boolean (nx, ny)
    array.  Scanline over rows: for each y, edges straddling the row are
    solved for their x-crossing and parity is accumulated left to right.
    Test rows are nudged by a tiny irrational offset so polygon vertices
    lying exactly on a row are handled deterministically.

    With ``strict`` the test is run with the nudge in both directions and
    both crossing sides, and only centers inside under all variants count:
    centers sitting exactly on a boundary edge are then excluded
    symmetrically on all sides of the polygon.
    """
    poly = np.asarray(polygon, dtype=float)
    x1, y1 = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    nx, ny = len(xs), len(ys)
    span_y = max(np.ptp(ys), 1.0)
    span_x = max(np.ptp(xs), 1.0)
    if strict:
        # a center within ~1e-9 span of the boundary counts as outside,
        # symmetrically in all four directions (stable against the +/-1 ulp
        # placement of centers constructed to sit exactly on an edge)
        eps_y, eps_x = span_y * 1e-9, span_x * 1e-9
        nudges = (eps_y, -eps_y)
        probes = (-eps_x, eps_x)
    else:
        nudges = (span_y * 1e-12 * np.sqrt(2.0),)
        probes = (0.0,)
    mask = np.ones((nx, ny), dtype=bool)
    for j in range(ny):
        row = np.ones(nx, dtype=bool)
        for dy in nudges:
            y = ys[j] + dy
            straddle = (y1 <= y) != (y2 <= y)
            if not straddle.any():
                row[:] = False
                break
            xa, yaa = x1[straddle], y1[straddle]
            xb, ybb = x2[straddle], y2[straddle]
            xc = np.sort(xa + (y - yaa) * (xb - xa) / (ybb - yaa))
            for dx in probes:
                counts = np.searchsorted(xc, xs + dx, side="right")
                row &= (counts % 2) == 1
        mask[:, j] = row
    return mask


def point_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd inside test for scattered points; returns boolean (m,)."""
    poly = np.asarray(polygon, dtype=float)
    p = np.atleast_2d(np.asarray(points, dtype=float))
    x1, y1 = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    inside = np.zeros(len(p), dtype=bool)
    span = max(np.ptp(y1), 1.0)
    y = p[:, 1] + span * 1e-12 * np.sqrt(2.0)
    # chunk over edges to bound memory
    crossings = np.zeros(len(p), dtype=np.int64)
    for k0 in range(0, len(x1), 4096):
        sl = slice(k0, k0 + 4096)
        a_x, a_y = x1[sl][None, :], y1[sl][None, :]
        b_x, b_y = x2[sl][None, :], y2[sl][None, :]
        yy = y[:, None]
        straddle = (a_y <= yy) != (b_y <= yy)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a_x + (yy - a_y) * (b_x - a_x) / (b_y - a_y)
        hits = straddle & (xc > p[:, 0][:, None])
        crossings += hits.sum(axis=1)
    inside = (crossings % 2) == 1
    return inside


def clip_polygon_halfplane(polygon: np.ndarray, p0, normal) -> np.ndarray:
    """Sutherland-Hodgman clip: keep the side where (p - p0) . normal >= 0."""
    poly = np.asarray(polygon, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    n = np.asarray(normal, dtype=float)
    out = []
    m = len(poly)
    d = (poly - p0) @ n
    for i in range(m):
        j = (i + 1) % m
        di, dj = d[i], d[j]
        if di >= 0:
            out.append(poly[i])
        if (di >= 0) != (dj >= 0):
            t = di / (di - dj)
            out.append(poly[i] + t * (poly[j] - poly[i]))
    if len(out) < 3:
        return np.zeros((0, 2))
    return np.asarray(out)


def _orient(a, b, c):
    """Sign of the cross product (b-a) x (c-a); 0 for collinear."""
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return 0 if v == 0 else (1 if v > 0 else -1)


def _on_segment(a, b, p):
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def segments_properly_intersect(a, b, c, d) -> bool:
    """True if segments [a,b] and [c,d] intersect (orientation predicates).

    Shared endpoints count as intersections here; callers exclude adjacent
    segments before asking.
    """
    o1 = _orient(a, b, c)
    o2 = _orient(a, b, d)
    o3 = _orient(c, d, a)
    o4 = _orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(a, b, c):
        return True
    if o2 == 0 and _on_segment(a, b, d):
        return True
    if o3 == 0 and _on_segment(c, d, a):
        return True
    if o4 == 0 and _on_segment(c, d, b):
        return True
    return False


def check_closed_polyline_simple(vertices: np.ndarray, snap_tol: float = 1e-14):
    """Verify that a closed polyline has no non-adjacent segment crossings.

    Coordinates are snapped to a lattice before the orientation tests so
    that touching configurations are classified consistently.  Raises
    GeometryError on the first crossing found.
    """
    v = snap(np.asarray(vertices, dtype=float), snap_tol)
    m = len(v)
    a = v
    b = np.roll(v, -1, axis=0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    cell = max(float(np.max(np.hypot(*(b - a).T))), snap_tol)
    inv = 1.0 / cell
    buckets: dict[tuple[int, int], list[int]] = {}
    for i in range(m):
        i0, i1 = int(np.floor(lo[i, 0] * inv)), int(np.floor(hi[i, 0] * inv))
        j0, j1 = int(np.floor(lo[i, 1] * inv)), int(np.floor(hi[i, 1] * inv))
        for ii in range(i0, i1 + 1):
            for jj in range(j0, j1 + 1):
                buckets.setdefault((ii, jj), []).append(i)
    checked = set()
    for ids in buckets.values():
        for u in range(len(ids)):
            for w in range(u + 1, len(ids)):
                i, j = ids[u], ids[w]
                if abs(i - j) in (0, 1) or abs(i - j) == m - 1:
                    continue  # adjacent segments share a vertex
                key = (min(i, j), max(i, j))
                if key in checked:
                    continue
                checked.add(key)
                if (lo[i, 0] > hi[j, 0] or lo[j, 0] > hi[i, 0]
                        or lo[i, 1] > hi[j, 1] or lo[j, 1] > hi[i, 1]):
                    continue
                if segments_properly_intersect(a[i], b[i], a[j], b[j]):
                    raise GeometryError(
                        f"non-adjacent segments {i} and {j} intersect")
