"""Generalized von Koch curves and snowflakes.

The (n, r) family replaces the middle r-portion of a segment by the other
n-1 sides of a regular n-gon of side r, leaving two flanking segments of
length ell = (1-r)/2 each.  The construction is carried both as an
explicit self-similar system (n+1 similitudes) and as prefractal
polylines obtained by substitution; the two agree vertex-for-vertex.

Snowflakes place n curve copies on the edges of a unit-side regular
n-gon, bumps outward.  For r below the self-avoidance bound the boundary
is a simple closed polygon at every level and is verified as such here.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, SizeLimitError
from .geom import (check_closed_polyline_simple, clip_polygon_halfplane,
                   polygon_area)
from .ifs import SelfSimilarSystem, Similitude2, apply

#: cap on prefractal segment counts
SEGMENT_CAP = 10_000_000


@dataclass(frozen=True)
class GKCParams:
    """Parameters of an (n, r) von Koch construction.

    ell = (1-r)/2 is the flank length, theta = 2*pi/n the central angle
    and alpha_int = pi - 2*pi/n the interior angle of the regular n-gon.
    """

    n: int
    r: float

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if not (0.0 < self.r < 1.0):
            raise ValueError("r must be in (0,1)")

    @property
    def ell(self) -> float:
        return (1.0 - self.r) / 2.0

    @property
    def theta(self) -> float:
        return 2.0 * math.pi / self.n

    @property
    def alpha_int(self) -> float:
        return math.pi - 2.0 * math.pi / self.n


def self_avoidance_bound(n: int) -> float:
    """Largest proven-safe r: sin^2(pi/n)/(cos^2(pi/n)+1) for even n,
    1-cos(pi/n) for odd n.  Sufficient but not necessary."""
    if n < 3:
        raise ValueError("n must be >= 3")
    if n % 2 == 0:
        return math.sin(math.pi / n) ** 2 / (math.cos(math.pi / n) ** 2 + 1.0)
    return 1.0 - math.cos(math.pi / n)


def _warn_bound_band(n: int, r: float):
    # For n=6 two published sufficient bounds disagree (1/7 vs 1-sqrt(3)/2);
    # we use the even-n closed form but flag the contested band.
    if n == 6:
        alt = 1.0 - math.cos(math.pi / 6)
        if alt <= r < self_avoidance_bound(6):
            warnings.warn(
                f"r={r} lies between the two published n=6 self-avoidance "
                f"bounds ({alt:.6f} and {self_avoidance_bound(6):.6f}); "
                "simplicity is uncertain here", stacklevel=3)


def build_system(params: GKCParams) -> SelfSimilarSystem:
    """The n+1 similitudes of the (n, r) construction, in chain order.

    phi_L scales by ell about the origin; psi_1..psi_{n-1} scale by r with
    rotations alpha_int - (k-1)*theta and translations chained through the
    previous map's image of (1,0); phi_R scales by ell onto [ell+r, 1].
    Consecutive maps satisfy maps[i](1,0) == maps[i+1](0,0).
    """
    n, r, ell = params.n, params.r, params.ell
    alpha, theta = params.alpha_int, params.theta
    maps = [Similitude2(scale=ell)]
    prev_end = np.array([ell, 0.0])
    for k in range(1, n):
        psi = Similitude2(scale=r, rotation=alpha - (k - 1) * theta,
                          translation=(prev_end[0], prev_end[1]))
        maps.append(psi)
        prev_end = apply(psi, (1.0, 0.0))
    maps.append(Similitude2(scale=ell, translation=(ell + r, 0.0)))
    system = SelfSimilarSystem(tuple(maps))
    # chain continuity is forced by the recursion; assert the reading
    for i in range(n):
        left = apply(system.maps[i], (1.0, 0.0))
        right = apply(system.maps[i + 1], (0.0, 0.0))
        if not np.allclose(left, right, atol=1e-12):
            raise AssertionError(f"chain break between maps {i} and {i+1}")
    return system


def generator_vertices(params: GKCParams) -> np.ndarray:
    """Level-1 vertices on the unit interval: (n+2, 2), endpoints (0,0),(1,0)."""
    system = build_system(params)
    verts = [np.array([0.0, 0.0])]
    for m in system.maps:
        verts.append(apply(m, (1.0, 0.0)))
    return np.asarray(verts)


@dataclass(frozen=True)
class PrefractalCurve:
    """Level-L substitution polyline from (0,0) to (1,0).

    Has (n+1)^level segments; every segment length is r^a * ell^b with
    a + b = level.
    """

    vertices: np.ndarray = field(repr=False)
    level: int
    params: GKCParams


def prefractal(params: GKCParams, level: int,
               cap: int = SEGMENT_CAP) -> PrefractalCurve:
    """Level-fold substitution of each segment by the generator image."""
    if level < 0:
        raise ValueError("level must be >= 0")
    n = params.n
    if (n + 1) ** level > cap:
        raise SizeLimitError(
            f"level {level} needs {(n + 1) ** level} segments (cap {cap})")
    gen = generator_vertices(params)
    genc = gen[:, 0] + 1j * gen[:, 1]
    verts = np.array([0.0 + 0.0j, 1.0 + 0.0j])
    for _ in range(level):
        a = verts[:-1]
        w = verts[1:] - a
        # orientation-preserving image of the generator in each segment
        pieces = a[:, None] + w[:, None] * genc[None, :-1]
        verts = np.append(pieces.reshape(-1), verts[-1])
    out = np.column_stack([verts.real, verts.imag])
    return PrefractalCurve(vertices=out, level=level, params=params)


@dataclass(frozen=True)
class SnowflakeRegion:
    """Closed snowflake boundary polygon with its base n-gon metadata.

    ``boundary`` lists the vertices once, counterclockwise (positive
    signed area); the closing edge is implied.  ``verified_simple`` is
    True when the r < self-avoidance bound check ran and passed; the
    tube and heat solvers refuse unverified regions.
    """

    boundary: np.ndarray = field(repr=False)
    n_gon_vertices: np.ndarray = field(repr=False)
    level: int
    params: GKCParams
    verified_simple: bool

    @property
    def area(self) -> float:
        return polygon_area(self.boundary)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["x", "y"])
        for x, y in self.boundary:
            w.writerow([f"{x:.17g}", f"{y:.17g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "n": self.params.n, "r": self.params.r, "level": self.level,
            "verified_simple": self.verified_simple,
            "vertices": [[float(x), float(y)] for x, y in self.boundary],
        }, sort_keys=True)


def base_polygon(n: int) -> np.ndarray:
    """Unit-side regular n-gon centered at the origin, first vertex on +x,
    listed clockwise so curve bumps protrude outward."""
    circum = 1.0 / (2.0 * math.sin(math.pi / n))
    ang = -2.0 * math.pi * np.arange(n) / n
    return circum * np.column_stack([np.cos(ang), np.sin(ang)])


def snowflake(params: GKCParams, level: int,
              cap: int = SEGMENT_CAP) -> SnowflakeRegion:
    """n prefractal copies stitched around the base n-gon, bumps outward."""
    n = params.n
    _warn_bound_band(n, params.r)
    curve = prefractal(params, level, cap=cap).vertices
    cc = curve[:, 0] + 1j * curve[:, 1]
    base = base_polygon(n)
    bc = base[:, 0] + 1j * base[:, 1]
    pieces = []
    for k in range(n):
        a = bc[k]
        b = bc[(k + 1) % n]
        edge = a + (b - a) * cc
        pieces.append(edge[:-1])  # endpoint shared with the next edge
    boundary = np.concatenate(pieces)
    boundary = np.column_stack([boundary.real, boundary.imag])
    boundary = boundary[::-1].copy()  # counterclockwise, positive area

    verified = False
    if params.r < self_avoidance_bound(n):
        check_closed_polyline_simple(boundary)  # raises GeometryError
        if polygon_area(boundary) <= 0:
            raise GeometryError("snowflake boundary has nonpositive area")
        verified = True
    return SnowflakeRegion(boundary=boundary, n_gon_vertices=base,
                           level=level, params=params,
                           verified_simple=verified)


def sector_region(region: SnowflakeRegion, index: int) -> np.ndarray:
    """Clip the snowflake polygon to one symmetry wedge of angle 2*pi/n.

    The wedge is bounded by rays from the center through base vertices
    ``index`` and ``index+1``; the n wedges tile the region up to seams.
    Returns the clipped polygon (vertices, counterclockwise).
    """
    n = region.params.n
    if not (0 <= index < n):
        raise ValueError(f"sector index {index} out of range")
    base = region.n_gon_vertices
    d0 = base[index] / np.hypot(*base[index])
    d1 = base[(index + 1) % n] / np.hypot(*base[(index + 1) % n])
    apex = np.array([0.0, 0.0])
    # wedge swept clockwise from d0 to d1: right of d0, left of d1
    n0 = np.array([d0[1], -d0[0]])
    n1 = np.array([-d1[1], d1[0]])
    poly = clip_polygon_halfplane(region.boundary, apex, n0)
    poly = clip_polygon_halfplane(poly, apex, n1)
    if len(poly) < 3:
        raise GeometryError("sector clip produced a degenerate polygon")
    if polygon_area(poly) < 0:
        poly = poly[::-1].copy()
    return poly


def snowflake_area_series(params: GKCParams, level: int) -> float:
    """Closed-form area of the level-L snowflake polygon.

    Each substitution step adds, per segment of length s, a regular n-gon
    bump of side r*s; summing squared segment lengths gives the geometric
    series below.  Used as an independent oracle for the polygon area.
    """
    n, r, ell = params.n, params.r, params.ell
    unit_ngon = n / (4.0 * math.tan(math.pi / n))
    growth = 2.0 * ell ** 2 + (n - 1) * r ** 2
    total = 1.0
    for j in range(1, level + 1):
        total += n * r ** 2 * growth ** (j - 1)
    return unit_ngon * total


def polyline_to_csv(vertices: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["x", "y"])
    for x, y in np.asarray(vertices, dtype=float):
        w.writerow([f"{x:.17g}", f"{y:.17g}"])
    return buf.getvalue()


def polyline_to_svg_path(vertices: np.ndarray, digits: int = 8) -> str:
    v = np.asarray(vertices, dtype=float)
    parts = [f"M {v[0, 0]:.{digits}g} {v[0, 1]:.{digits}g}"]
    parts += [f"L {x:.{digits}g} {y:.{digits}g}" for x, y in v[1:]]
    return " ".join(parts)
