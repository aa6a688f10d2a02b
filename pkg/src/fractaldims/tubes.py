"""Distance fields, relative tube functions V(t) = |X_t ∩ Ω|, and checks.

The tube function of a curve X relative to a region Ω is measured on a
uniform grid by cell-center counting: V(t) ~ h^2 #{cells inside Ω with
d(center, X) < t}.  Distances are exact point-to-segment distances,
computed tile by tile with a pruned candidate set per tile (the pruning
bound keeps every segment that could be nearest to any cell of the tile,
so the field is exact, not approximate).

Verification helpers compare measured tube functions against closed
forms, the similitude scaling identity V_{phi X, phi Omega}(t) =
lambda^2 V_{X,Omega}(t/lambda), and the von Koch scaling functional
equation; each check carries a declared grid-error budget
4h*perimeter + prefractal sandwich width rather than a bare tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ResolutionError, SizeLimitError
from .geom import point_in_polygon_mask, polygon_area, polyline_length
from .ifs import PointCloud, Similitude2, apply, hausdorff_distance
from .sampled import SampledFunction
from .vonkoch import GKCParams, prefractal, sector_region, snowflake

#: cap on grid cells
CELL_CAP = 1 << 27


@dataclass(frozen=True)
class Grid2:
    bbox: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    h: float
    nx: int
    ny: int
    values: np.ndarray = field(repr=False)

    @property
    def xs(self) -> np.ndarray:
        return self.bbox[0] + (np.arange(self.nx) + 0.5) * self.h

    @property
    def ys(self) -> np.ndarray:
        return self.bbox[1] + (np.arange(self.ny) + 0.5) * self.h


@dataclass(frozen=True)
class DistanceField:
    """Exact distances from cell centers to a polyline, plus an Ω mask."""

    grid: Grid2
    inside: np.ndarray = field(repr=False)
    curve_length: float = 0.0
    region_area: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def h(self) -> float:
        return self.grid.h

    def sorted_inside_distances(self) -> np.ndarray:
        d = np.sort(self.grid.values[self.inside])
        return d


def _point_to_segments(p, seg_a, seg_b) -> np.ndarray:
    """Distances from one point to every segment: (k,)."""
    a = seg_a
    ab = seg_b - seg_a
    denom = np.sum(ab * ab, axis=1)
    safe = np.where(denom == 0.0, 1.0, denom)
    t = np.clip(((p - a) * ab).sum(axis=1) / safe, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(p[0] - proj[:, 0], p[1] - proj[:, 1])


def _min_distance_block(pts, seg_a, seg_b, chunk: int = 256) -> np.ndarray:
    out = np.full(len(pts), np.inf)
    for k0 in range(0, len(seg_a), chunk):
        a = seg_a[k0:k0 + chunk][None, :, :]
        b = seg_b[k0:k0 + chunk][None, :, :]
        ab = b - a
        denom = np.sum(ab * ab, axis=2)
        safe = np.where(denom == 0.0, 1.0, denom)
        p = pts[:, None, :]
        t = np.clip(np.sum((p - a) * ab, axis=2) / safe, 0.0, 1.0)
        proj = a + t[:, :, None] * ab
        d = np.hypot(p[..., 0] - proj[..., 0], p[..., 1] - proj[..., 1])
        np.minimum(out, d.min(axis=1), out=out)
    return out


def distance_field(curve: np.ndarray, region: np.ndarray, h: float,
                   pad: float = 0.0, tile: int = 64,
                   cell_cap: int = CELL_CAP, meta: dict | None = None,
                   solid: np.ndarray | None = None) -> DistanceField:
    """Exact distance field to ``curve`` on a grid covering ``region``.

    The grid covers the region polygon's bounding box (plus ``pad``).
    Inside membership uses the even-odd rule on the region polygon.
    When ``solid`` is given the distances are to the filled polygon
    (zero inside it), not just to the polyline.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    verts = np.atleast_2d(np.asarray(curve, dtype=float))
    if len(verts) == 1:
        verts = np.vstack([verts, verts])
    poly = np.asarray(region, dtype=float)
    xmin, ymin = poly.min(axis=0) - pad
    xmax, ymax = poly.max(axis=0) + pad
    nx = int(np.ceil((xmax - xmin) / h))
    ny = int(np.ceil((ymax - ymin) / h))
    if nx * ny > cell_cap:
        raise SizeLimitError(f"grid {nx}x{ny} exceeds cap {cell_cap}")
    grid = Grid2(bbox=(xmin, ymin, xmax, ymax), h=h, nx=nx, ny=ny,
                 values=np.empty((nx, ny)))
    xs, ys = grid.xs, grid.ys
    inside = point_in_polygon_mask(xs, ys, poly)

    seg_a = verts[:-1]
    seg_b = verts[1:]
    values = grid.values
    for tx0 in range(0, nx, tile):
        tx1 = min(tx0 + tile, nx)
        for ty0 in range(0, ny, tile):
            ty1 = min(ty0 + tile, ny)
            cx = 0.5 * (xs[tx0] + xs[tx1 - 1])
            cy = 0.5 * (ys[ty0] + ys[ty1 - 1])
            rtile = np.hypot(xs[tx1 - 1] - cx, ys[ty1 - 1] - cy) + 1e-12
            d_all = _point_to_segments(np.array([cx, cy]), seg_a, seg_b)
            dbest = d_all.min()
            cand = d_all <= dbest + 2.0 * rtile
            gx, gy = np.meshgrid(xs[tx0:tx1], ys[ty0:ty1], indexing="ij")
            pts = np.column_stack([gx.ravel(), gy.ravel()])
            dmin = _min_distance_block(pts, seg_a[cand], seg_b[cand])
            values[tx0:tx1, ty0:ty1] = dmin.reshape(tx1 - tx0, ty1 - ty0)

    if solid is not None:
        in_solid = point_in_polygon_mask(xs, ys, np.asarray(solid, float))
        values[in_solid] = 0.0

    return DistanceField(grid=grid, inside=inside,
                         curve_length=polyline_length(verts),
                         region_area=abs(polygon_area(poly)),
                         meta={"h": h, **(meta or {})})


def tube_function(fld: DistanceField, ts) -> SampledFunction:
    """V(t) = h^2 #{cells: d < t and inside}, nondecreasing in t."""
    ts = np.asarray(ts, dtype=float)
    if np.any(ts <= 0) or np.any(np.diff(ts) <= 0):
        raise ValueError("ts must be positive and increasing")
    d = fld.sorted_inside_distances()
    counts = np.searchsorted(d, ts, side="left")
    vals = fld.h ** 2 * counts
    meta = {**fld.meta, "h": fld.h, "curve_length": fld.curve_length,
            "region_area": fld.region_area}
    return SampledFunction(ts, vals, meta=meta)


def grid_error_budget(fld: DistanceField) -> float:
    """Declared cell-counting error: 4h * curve perimeter."""
    return 4.0 * fld.h * fld.curve_length


@dataclass(frozen=True)
class ScalingReport:
    ts: np.ndarray
    lhs: np.ndarray          # V_{phi X, phi Omega}(t)
    rhs: np.ndarray          # lambda^2 V_{X, Omega}(t / lambda)
    budget_abs: float
    max_rel_dev: float
    passed: bool


def verify_tube_scaling(curve: np.ndarray, region: np.ndarray,
                        sim: Similitude2, ts, h: float) -> ScalingReport:
    """Check V_{phi X, phi Omega}(t) = lambda^2 V_{X,Omega}(t/lambda)
    with both sides measured on independent grids."""
    ts = np.asarray(ts, dtype=float)
    lam = sim.scale
    fld1 = distance_field(curve, region, h)
    base_ts = np.unique(ts / lam)
    v1 = tube_function(fld1, base_ts)
    fld2 = distance_field(apply(sim, curve), apply(sim, region), lam * h)
    v2 = tube_function(fld2, ts)
    rhs = lam ** 2 * np.interp(ts / lam, v1.ts, v1.vals)
    lhs = v2.vals
    budget = grid_error_budget(fld2) + lam ** 2 * grid_error_budget(fld1)
    dev = np.abs(lhs - rhs)
    rel = float(np.max(dev / np.maximum(np.abs(lhs), 1e-300)))
    return ScalingReport(ts=ts, lhs=lhs, rhs=rhs, budget_abs=budget,
                         max_rel_dev=rel,
                         passed=bool(np.all(dev <= budget)))


def prefractal_gap(params: GKCParams, level: int) -> float:
    """Hausdorff gap bound between a level-L prefractal and the attractor.

    Uses the fixed-point estimate gap <= lam_max^L * d(X_0, X_1)/(1-lam_max)
    with d(X_0, X_1) measured on densely resampled polylines.
    """
    lam = max(params.ell, params.r)
    p0 = _resample(prefractal(params, 0).vertices, 512)
    p1 = _resample(prefractal(params, 1).vertices, 512)
    d01 = hausdorff_distance(PointCloud(p0), PointCloud(p1))
    return lam ** level * d01 / (1.0 - lam)


def _resample(verts: np.ndarray, n: int) -> np.ndarray:
    seg = np.diff(verts, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    s = np.concatenate(([0.0], np.cumsum(lens)))
    u = np.linspace(0.0, s[-1], n)
    x = np.interp(u, s, verts[:, 0])
    y = np.interp(u, s, verts[:, 1])
    return np.column_stack([x, y])


@dataclass(frozen=True)
class SFEReport:
    """Residual of the von Koch tube scaling functional equation.

    rho(t) = V(t) - [2 ell^2 V(t/ell) + (n-1) r^2 V(t/r)] must lie in
    [0, (2 cot(theta/2) + theta) t^2] up to the declared grid budget.
    """

    ts: np.ndarray
    rho: np.ndarray
    bound: np.ndarray
    budget: np.ndarray
    passed: bool
    tube: SampledFunction
    sector_area: float
    gap: float


def verify_gkf_sfe(params: GKCParams, level: int, ts, h: float,
                   sector_index: int = 0,
                   fld: DistanceField | None = None) -> SFEReport:
    """Measure the sector tube function and test its functional equation."""
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 5 * h):
        raise ResolutionError("requested t below 5h is not resolvable")
    region = snowflake(params, level)
    if not region.verified_simple:
        raise GeometryError("snowflake region is not verified simple; "
                            "tube checks refuse it")
    sector = sector_region(region, sector_index)
    if fld is None:
        fld = distance_field(region.boundary, sector, h,
                             meta={"level": level, "n": params.n,
                                   "r": params.r})
    ell, r, n = params.ell, params.r, params.n
    all_ts = np.unique(np.concatenate([ts, ts / ell, ts / r]))
    v = tube_function(fld, all_ts)

    def V(t):
        return np.interp(t, v.ts, v.vals)

    rho = V(ts) - (2 * ell ** 2 * V(ts / ell) + (n - 1) * r ** 2 * V(ts / r))
    theta = params.theta
    bound = (2.0 / np.tan(theta / 2.0) + theta) * ts ** 2

    gap = prefractal_gap(params, level)
    base = grid_error_budget(fld)

    def sandwich(t):
        hi = np.minimum(t + gap, all_ts[-1])
        lo = np.maximum(t - gap, all_ts[0])
        return V(hi) - V(lo)

    budget = (base * (1.0 + 2 * ell ** 2 + (n - 1) * r ** 2)
              + sandwich(ts) + 2 * ell ** 2 * sandwich(ts / ell)
              + (n - 1) * r ** 2 * sandwich(ts / r))
    passed = bool(np.all(rho >= -budget) and np.all(rho <= bound + budget))
    return SFEReport(ts=ts, rho=rho, bound=bound, budget=budget,
                     passed=passed, tube=v,
                     sector_area=abs(polygon_area(sector)), gap=gap)


def minkowski_fit(samples: SampledFunction,
                  window: tuple[float, float]) -> tuple[float, float]:
    """Box-dimension estimate from the log-log slope of V(t).

    Least squares of log V against log t over the window; the slope is
    the codimension 2 - D.  Returns (D_est, c_est) where V ~ c * t^(2-D).
    """
    tmin, tmax = window
    sel = (samples.ts >= tmin) & (samples.ts <= tmax)
    if sel.sum() < 8:
        raise ValueError("need at least 8 samples inside the window")
    t, v = samples.ts[sel], samples.vals[sel]
    if np.any(v <= 0):
        raise ValueError("nonpositive tube values in the fit window")
    slope, intercept = np.polyfit(np.log(t), np.log(v), 1)
    return 2.0 - float(slope), float(np.exp(intercept))
