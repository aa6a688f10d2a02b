"""Monotone-grid sampled functions shared by the tube, heat, and Mellin code.

A SampledFunction is a table (t_i, f(t_i)) on a strictly increasing
positive grid, usually geometric (log-uniform).  Provenance travels in
``meta`` (grid size, construction level, hashes) so downstream reports can
declare error budgets.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError

#: default geometric sampling density
POINTS_PER_DECADE = 48


def geometric_grid(t_min: float, t_max: float,
                   per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    """Log-uniform grid; all downstream fits and transforms are log-native."""
    if not (0 < t_min < t_max):
        raise ValueError("need 0 < t_min < t_max")
    n = max(2, int(np.ceil(np.log10(t_max / t_min) * per_decade)) + 1)
    return np.geomspace(t_min, t_max, n)


@dataclass(frozen=True)
class SampledFunction:
    ts: np.ndarray = field(repr=False)
    vals: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        vals = np.asarray(self.vals, dtype=float)
        if ts.ndim != 1 or ts.shape != vals.shape:
            raise ValueError("ts and vals must be 1-d arrays of equal length")
        if ts[0] <= 0 or np.any(np.diff(ts) <= 0):
            raise ValueError("ts must be strictly increasing and positive")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "vals", vals)

    def __len__(self):
        return len(self.ts)

    def __call__(self, t):
        """Linear interpolation inside the sampled range."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.ts[0] * (1 - 1e-12)) or \
           np.any(t > self.ts[-1] * (1 + 1e-12)):
            raise ValueError("evaluation outside sampled range")
        return np.interp(t, self.ts, self.vals)

    def scale(self, factor: float, meta: dict | None = None):
        return SampledFunction(self.ts, self.vals * factor,
                               meta={**self.meta, **(meta or {})})

    def transform_vals(self, fn, meta: dict | None = None):
        return SampledFunction(self.ts, fn(self.ts, self.vals),
                               meta={**self.meta, **(meta or {})})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["t", "value"])
        for t, v in zip(self.ts, self.vals):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])
        return buf.getvalue()

    def meta_json(self) -> str:
        return json.dumps(self.meta, sort_keys=True, default=float)

    @classmethod
    def from_csv(cls, text: str, meta: dict | None = None):
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if header[:2] != ["t", "value"]:
            raise ValueError("expected header t,value")
        ts = np.array([float(r[0]) for r in body])
        vals = np.array([float(r[1]) for r in body])
        return cls(ts, vals, meta=meta or {})


def leading_power_fit(ts: np.ndarray, vals: np.ndarray,
                      decade: float = 10.0) -> tuple[float, float]:
    """Fit f ~ c * t^p near t -> 0 on the lowest decade of samples.

    Uses a median-of-slopes regression on the log-log pairs, which is
    robust to a few noisy points.  Returns (p, c).  Raises FitError when
    the low-t data changes sign or vanishes.
    """
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(vals, dtype=float)
    sel = ts <= ts[0] * decade
    if sel.sum() < 3:
        sel = np.zeros_like(ts, dtype=bool)
        sel[:3] = True
    t0, v0 = ts[sel], vals[sel]
    if np.all(v0 > 0):
        sign = 1.0
    elif np.all(v0 < 0):
        sign = -1.0
    else:
        raise FitError("sign change near t=0; no power law to fit")
    lt, lv = np.log(t0), np.log(sign * v0)
    slopes = np.diff(lv) / np.diff(lt)
    p = float(np.median(slopes))
    c = sign * float(np.exp(np.median(lv - p * lt)))
    return p, c


def antiderivative(samples: SampledFunction, k: int = 1) -> SampledFunction:
    """k-fold cumulative antiderivative with F(0) = 0 at each stage.

    Integration is cumulative trapezoid on the sampled grid; the value at
    the first node is seeded by integrating the fitted leading power law
    c*t^p below ts[0] in closed form.  Requires the grid to start near
    zero (ts[0] <= 1e-3 * ts[-1]).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return samples
    if samples.ts[0] > 1e-3 * samples.ts[-1]:
        raise ValueError("grid must reach toward 0 (ts[0] <= 1e-3 ts[-1])")
    out = samples
    for _ in range(k):
        ts, vals = out.ts, out.vals
        try:
            p, c = leading_power_fit(ts, vals)
            if p <= -1.0:
                raise FitError("leading exponent <= -1: divergent seed")
            seed = c * ts[0] ** (p + 1.0) / (p + 1.0)
        except FitError:
            seed = 0.5 * vals[0] * ts[0]  # rough triangle seed
        increments = 0.5 * (vals[1:] + vals[:-1]) * np.diff(ts)
        cum = np.concatenate(([seed], seed + np.cumsum(increments)))
        out = SampledFunction(ts, cum, meta=dict(out.meta))
    return SampledFunction(out.ts, out.vals,
                           meta={**samples.meta, "antiderivative_order": k})
