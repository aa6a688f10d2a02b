"""Scaling ratios, Dirichlet polynomials, similarity dimensions, and poles.

The central object is the function P(s) = 1 - sum_k a_k * lambda_k^s built
from a multiset of scaling ratios lambda_k in (0,1) with integer
multiplicities a_k.  Its unique real zero is the similarity dimension D
(Moran's equation), and its complex zeros are the possible complex
dimensions of any attractor carrying those ratios.  The associated scaling
zeta function is zeta(s) = 1/P(s).

Two pole-location routes are provided.  In the lattice case (all ratios
integer powers of a common generator) the zeros are read off from an
ordinary polynomial and lie periodically on finitely many vertical lines.
In the nonlattice case an argument-principle search over adaptively
subdivided rectangles finds them.  Everything here is pure and operates on
immutable values; rectangle subdivision results are merged in a fixed
(Im, Re) order so output is deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad

from .errors import (ContourError, MultiplePoleError, PoleProximityError)

#: |P(omega)| threshold for accepting a located pole
POLE_TOL = 1e-10

#: refusal threshold for direct zeta evaluation near a pole
NEAR_POLE_TOL = 1e-13

#: denominator cap for the rational test on log-ratio quotients
LATTICE_MAX_DENOMINATOR = 64

#: tolerance of the continued-fraction lattice test
LATTICE_TOL = 1e-12

NEWTON_MAX_ITER = 50


# ---------------------------------------------------------------------------
# ratio multisets and the Dirichlet polynomial


@dataclass(frozen=True)
class RatioMultiset:
    """Distinct scaling ratios with multiplicities, sorted decreasing.

    entries: ((ratio, multiplicity), ...) with 1 > r_1 > r_2 > ... > r_M > 0
    and every multiplicity a positive integer.
    """

    entries: tuple[tuple[float, int], ...]

    def __post_init__(self):
        ent = sorted(((float(r), int(m)) for r, m in self.entries),
                     key=lambda e: -e[0])
        if not ent:
            raise ValueError("need at least one ratio")
        for r, m in ent:
            if not (0.0 < r < 1.0):
                raise ValueError(f"ratio {r} not in (0,1)")
            if m < 1:
                raise ValueError(f"multiplicity {m} < 1")
        for (r1, _), (r2, _) in zip(ent, ent[1:]):
            if r1 == r2:
                raise ValueError("ratios must be pairwise distinct")
        object.__setattr__(self, "entries", tuple(ent))

    @classmethod
    def from_system(cls, system) -> "RatioMultiset":
        return cls(tuple(system.ratio_entries()))

    @classmethod
    def from_pairs(cls, pairs, tol: float = 1e-12) -> "RatioMultiset":
        """Build from (ratio, multiplicity) pairs, merging equal ratios.

        Ratios within relative ``tol`` of each other collapse into one
        entry with summed multiplicity (e.g. the n=3, r=1/3 case where
        the two derived ratios coincide up to rounding).
        """
        items = sorted(((float(r), int(m)) for r, m in pairs),
                       key=lambda e: -e[0])
        merged: list[list[float]] = []
        for r, m in items:
            if merged and abs(merged[-1][0] - r) <= tol * max(r, 1e-300):
                merged[-1][1] += m
            else:
                merged.append([r, m])
        return cls(tuple((r, int(m)) for r, m in merged))

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r for r, _ in self.entries])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([m for _, m in self.entries])

    @property
    def total_multiplicity(self) -> int:
        return int(self.multiplicities.sum())


@dataclass(frozen=True)
class DirichletPoly:
    """P(s) = 1 - sum a_k lambda_k^s, an entire function of s."""

    ratios: RatioMultiset

    def __call__(self, s):
        s = np.asarray(s)
        lam = self.ratios.ratios
        mult = self.ratios.multiplicities
        return 1.0 - np.sum(mult * np.power(lam, s[..., None]), axis=-1)

    def moran_sum(self, s):
        """sum a_k lambda_k^s (strictly decreasing along the real axis)."""
        s = np.asarray(s)
        lam = self.ratios.ratios
        mult = self.ratios.multiplicities
        return np.sum(mult * np.power(lam, s[..., None]), axis=-1)

    def derivative(self, s):
        """P'(s) = sum a_k lambda_k^s log(1/lambda_k)."""
        s = np.asarray(s)
        lam = self.ratios.ratios
        mult = self.ratios.multiplicities
        return np.sum(mult * np.power(lam, s[..., None]) * (-np.log(lam)),
                      axis=-1)


# ---------------------------------------------------------------------------
# real roots: similarity dimensions


def _increasing_root(fn, dfn, lo: float, hi: float, tol: float = 1e-15) -> float:
    """Root of a strictly increasing function: bisection bracket + Newton."""
    flo, fhi = fn(lo), fn(hi)
    while flo > 0:
        lo -= max(1.0, hi - lo)
        flo = fn(lo)
    while fhi < 0:
        hi += max(1.0, hi - lo)
        fhi = fn(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(mid)):
            break
    x = 0.5 * (lo + hi)
    for _ in range(NEWTON_MAX_ITER):
        fx = fn(x)
        dx = dfn(x)
        if dx == 0:
            break
        step = fx / dx
        x -= step
        if abs(step) < tol * max(1.0, abs(x)):
            break
    return float(x)


def similarity_dimension(ratios: RatioMultiset) -> float:
    """Unique real solution D of Moran's equation sum a_k lambda_k^D = 1.

    P(sigma) = 1 - sum a_k lambda_k^sigma is strictly increasing on the
    real axis (each lambda^sigma decreases), so the root is bracketed and
    polished by Newton; |P(D)| < 1e-12 on return.  D > 0 whenever the
    total multiplicity is at least two.
    """
    poly = DirichletPoly(ratios)
    return _increasing_root(lambda s: float(poly(s)),
                            lambda s: float(poly.derivative(s)),
                            0.0, 1.0)


def _lower_poly(ratios: RatioMultiset):
    """q(t) = (1/m_M) r_M^-t + sum_{k<M} (m_k/m_M) (r_k/r_M)^t, increasing."""
    r = ratios.ratios
    m = ratios.multiplicities
    r_small, m_small = r[-1], m[-1]
    bases = np.concatenate(([1.0 / r_small], r[:-1] / r_small))
    coefs = np.concatenate(([1.0 / m_small], m[:-1] / m_small))
    logb = np.log(bases)

    def q(t):
        return float(np.sum(coefs * np.exp(logb * t)))

    def dq(t):
        return float(np.sum(coefs * logb * np.exp(logb * t)))

    return q, dq


def lower_similarity_dimension(ratios: RatioMultiset) -> float:
    """Unique real root D_l of the increasing companion polynomial.

    Solves (1/m_M)(r_M^-1)^t + sum_{k<M}(m_k/m_M)(r_k/r_M)^t = 1 where r_M
    is the smallest ratio.  D_l is a lower bound for the real part of
    every pole of the scaling zeta function.  With a single distinct
    ratio the equation reduces to Moran's, so D_l = D.
    """
    q, dq = _lower_poly(ratios)
    return _increasing_root(lambda t: q(t) - 1.0, dq, -1.0, 1.0)


def screen_lower_bound(poly: DirichletPoly, sigma: float) -> float:
    """Lower bound for |P(sigma + i tau)| valid uniformly in tau.

    Equals m_M * r_M^sigma * (1 - q(sigma)) with q the increasing
    companion polynomial; requires sigma < D_l so that q(sigma) < 1 and
    the bound is strictly positive.
    """
    ratios = poly.ratios
    q, _ = _lower_poly(ratios)
    qs = q(sigma)
    if qs >= 1.0:
        raise ValueError(
            f"sigma={sigma} is not below the lower similarity dimension")
    r_small = float(ratios.ratios[-1])
    m_small = float(ratios.multiplicities[-1])
    return m_small * r_small ** sigma * (1.0 - qs)


# ---------------------------------------------------------------------------
# lattice structure


@dataclass(frozen=True)
class LatticeStructure:
    """Common generator lambda_0 with ratios lambda_k = lambda_0^{k_j}.

    exponents: ((k_j, multiplicity), ...) with gcd of all k_j equal to 1.
    """

    generator: float
    exponents: tuple[tuple[int, int], ...]

    @property
    def vertical_period(self) -> float:
        """Exact spacing 2*pi/log(1/lambda_0) of poles on each vertical line."""
        return 2.0 * math.pi / math.log(1.0 / self.generator)


def detect_lattice(ratios: RatioMultiset,
                   max_denominator: int = LATTICE_MAX_DENOMINATOR,
                   tol: float = LATTICE_TOL) -> LatticeStructure | None:
    """Rational-relation test on log-ratios via continued fractions.

    Returns a structure iff every log lambda_i / log lambda_1 is rational
    with denominator at most ``max_denominator`` (to within ``tol``),
    with exponents gcd-reduced.  None is the nonlattice verdict at this
    precision: floating-point input can never be proven irrational.
    """
    logs = np.log(ratios.ratios)
    base = logs[0]
    fracs = []
    for x in logs:
        f = Fraction(x / base).limit_denominator(max_denominator)
        if f.numerator <= 0:
            return None
        if abs(x / base - float(f)) > tol * max(1.0, abs(x / base)):
            return None
        fracs.append(f)
    denom_lcm = 1
    for f in fracs:
        denom_lcm = denom_lcm * f.denominator // math.gcd(denom_lcm,
                                                          f.denominator)
    ks = [f.numerator * (denom_lcm // f.denominator) for f in fracs]
    g = 0
    for k in ks:
        g = math.gcd(g, k)
    ks = [k // g for k in ks]
    # least-squares generator: logs[i] = k_i * log(lambda0)
    karr = np.array(ks, dtype=float)
    log_lam0 = float(np.dot(karr, logs) / np.dot(karr, karr))
    if not all(abs(k * log_lam0 - x) <= 10 * tol * max(1.0, abs(x))
               for k, x in zip(ks, logs)):
        return None
    exps = tuple(
        (int(k), int(m)) for k, m in zip(ks, ratios.multiplicities))
    return LatticeStructure(generator=float(np.exp(log_lam0)),
                            exponents=exps)


# ---------------------------------------------------------------------------
# complex dimension sets


@dataclass(frozen=True)
class Pole:
    omega: complex
    residue: complex
    multiplicity: int = 1


@dataclass(frozen=True)
class ComplexDimensionSet:
    """Located poles of a scaling zeta function inside a window.

    ``alpha`` records an input rescale: stored poles are zeros of
    s -> P(alpha * s).  Poles are closed under conjugation (P has real
    coefficients) and sorted by (Im, Re).
    """

    poles: tuple[Pole, ...]
    window: tuple[float, float, float]  # (re_min, re_max, im_max)
    lattice: LatticeStructure | None = None
    alpha: float = 1.0
    #: actual contour used by the search (slightly expanded window), and the
    #: total winding count inside it, for cross-checking against oracles
    search_rect: tuple[float, float, float, float] | None = None
    search_count: int | None = None

    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.poles])

    def residues(self) -> np.ndarray:
        return np.array([p.residue for p in self.poles])

    def to_json(self) -> str:
        doc = {
            "poles": [
                {"re": p.omega.real, "im": p.omega.imag,
                 "res_re": p.residue.real, "res_im": p.residue.imag,
                 "mult": p.multiplicity}
                for p in self.poles
            ],
            "window": {"re_min": self.window[0], "re_max": self.window[1],
                       "im_max": self.window[2]},
            "lattice": None if self.lattice is None else {
                "generator": self.lattice.generator,
                "exponents": [list(e) for e in self.lattice.exponents],
            },
            "alpha": self.alpha,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ComplexDimensionSet":
        doc = json.loads(text)
        poles = tuple(
            Pole(complex(p["re"], p["im"]), complex(p["res_re"], p["res_im"]),
                 int(p["mult"]))
            for p in doc["poles"])
        lat = doc.get("lattice")
        lattice = None
        if lat is not None:
            lattice = LatticeStructure(
                generator=lat["generator"],
                exponents=tuple((int(k), int(m))
                                for k, m in lat["exponents"]))
        w = doc["window"]
        return cls(poles=poles,
                   window=(w["re_min"], w["re_max"], w["im_max"]),
                   lattice=lattice, alpha=float(doc.get("alpha", 1.0)))


def _sorted_poles(poles: list[Pole]) -> tuple[Pole, ...]:
    return tuple(sorted(poles, key=lambda p: (p.omega.imag, p.omega.real)))


def rescale(dims: ComplexDimensionSet, alpha: float) -> ComplexDimensionSet:
    """Poles of s -> zeta(alpha * s): omega -> omega/alpha, residues /alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    poles = tuple(Pole(p.omega / alpha, p.residue / alpha, p.multiplicity)
                  for p in dims.poles)
    w = dims.window
    return ComplexDimensionSet(
        poles=poles,
        window=(w[0] / alpha, w[1] / alpha, w[2] / alpha),
        lattice=dims.lattice,
        alpha=dims.alpha * alpha)


# ---------------------------------------------------------------------------
# direct evaluation and residues


def zeta_eval(poly: DirichletPoly, s, near_pole_tol: float = NEAR_POLE_TOL):
    """zeta(s) = 1/P(s); refuses evaluation when |P(s)| <= near_pole_tol."""
    ps = poly(s)
    pa = np.abs(ps)
    if np.any(pa <= near_pole_tol):
        raise PoleProximityError(
            f"|P(s)|={float(np.min(pa)):.3e} too close to a pole",
            float(np.min(pa)))
    return 1.0 / ps


def residue_simple(poly: DirichletPoly, omega: complex,
                   pole_tol: float = POLE_TOL) -> complex:
    """Residue 1/P'(omega) of 1/P at a verified simple pole."""
    if abs(poly(omega)) >= pole_tol:
        raise ValueError(f"omega={omega} is not a pole: |P|="
                         f"{abs(poly(omega)):.3e}")
    dp = poly.derivative(omega)
    if abs(dp) <= 1e-10:
        raise MultiplePoleError(
            f"|P'(omega)|={abs(dp):.3e}: pole not simple; use contour residue")
    return complex(1.0 / dp)


def residue_contour(fn, center: complex, radius: float = 1e-4,
                    nodes: int = 256) -> complex:
    """(1/2*pi*i) contour integral of fn around a circle (trapezoid nodes)."""
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    z = center + radius * np.exp(1j * theta)
    vals = np.asarray([fn(zz) for zz in z])
    return complex(radius * np.mean(vals * np.exp(1j * theta)))


# ---------------------------------------------------------------------------
# lattice pole location


def lattice_poles(structure: LatticeStructure, im_max: float,
                  pole_tol: float = POLE_TOL) -> ComplexDimensionSet:
    """All poles with |Im| <= im_max from the lattice polynomial.

    Writing z = lambda_0^s turns P into the ordinary polynomial
    1 - sum m_j z^{k_j}; its roots z_j (companion-matrix eigenvalues,
    Newton-polished) give the pole lines omega = log(z_j)/log(lambda_0),
    each repeating vertically with exact period 2*pi/log(1/lambda_0).
    """
    if im_max <= 0:
        raise ValueError("im_max must be positive")
    ks = [k for k, _ in structure.exponents]
    ms = [m for _, m in structure.exponents]
    deg = max(ks)
    coef = np.zeros(deg + 1)
    coef[deg] = 1.0              # constant term of 1 - sum m z^k
    for k, m in zip(ks, ms):
        coef[deg - k] -= m
    roots = np.roots(coef)

    def q(z):
        return 1.0 - sum(m * z ** k for k, m in zip(ks, ms))

    def dq(z):
        return -sum(m * k * z ** (k - 1) for k, m in zip(ks, ms))

    polished = []
    for z in roots:
        for _ in range(NEWTON_MAX_ITER):
            d = dq(z)
            if d == 0:
                break
            step = q(z) / d
            z = z - step
            if abs(step) < 1e-16 * max(1.0, abs(z)):
                break
        polished.append(z)
    # cluster multiple roots
    clusters: list[list[complex]] = []
    for z in sorted(polished, key=lambda w: (w.real, w.imag)):
        if clusters and abs(clusters[-1][0] - z) < 1e-7:
            clusters[-1].append(z)
        else:
            clusters.append([z])

    log_lam0 = math.log(structure.generator)  # negative
    period = structure.vertical_period
    ratios = RatioMultiset(tuple(
        (structure.generator ** k, m) for k, m in structure.exponents))
    poly = DirichletPoly(ratios)

    poles: list[Pole] = []
    for cluster in clusters:
        z = complex(np.mean(cluster))
        mult = len(cluster)
        if abs(z) == 0:
            raise ContourError("polynomial root at z=0", residual=abs(q(0)))
        omega0 = np.log(z) / log_lam0
        # bring the base pole's imaginary part into (-period/2, period/2]
        shift = round(omega0.imag / period)
        omega0 -= 1j * shift * period
        m_lo = math.ceil((-im_max - omega0.imag) / period - 1e-12)
        m_hi = math.floor((im_max - omega0.imag) / period + 1e-12)
        for m in range(m_lo, m_hi + 1):
            # exact vertical spacing by construction
            omega = complex(omega0.real, omega0.imag + m * period)
            omega = _newton_polish(poly, omega)
            if abs(poly(omega)) >= pole_tol:
                raise ContourError(
                    f"lattice pole failed verification at {omega}",
                    residual=abs(poly(omega)))
            if mult == 1:
                res = residue_simple(poly, omega, pole_tol=pole_tol)
            else:
                res = residue_contour(lambda s: zeta_eval(poly, s), omega)
            poles.append(Pole(omega, res, mult))

    d_up = similarity_dimension(ratios)
    d_lo = lower_similarity_dimension(ratios)
    return ComplexDimensionSet(poles=_sorted_poles(poles),
                               window=(d_lo, d_up, float(im_max)),
                               lattice=structure)


def _newton_polish(poly: DirichletPoly, s: complex,
                   tol: float = 1e-15) -> complex:
    for _ in range(NEWTON_MAX_ITER):
        d = poly.derivative(s)
        if d == 0:
            break
        step = poly(s) / d
        s = s - step
        if abs(step) < tol * max(1.0, abs(s)):
            break
    return complex(s)


# ---------------------------------------------------------------------------
# nonlattice pole location (argument principle on rectangles)


def _winding_number(poly: DirichletPoly, rect, quad_eps: float = 1e-6):
    """Winding count and first moment of P'/P around a rectangle boundary.

    Each edge is integrated with adaptive Gauss-Kronrod quadrature on the
    real and imaginary parts of (P'/P) z'(t); the count is rounded to the
    nearest integer and rejected if the distance from an integer exceeds
    0.25.  The first moment (integral of z P'/P) locates a lone zero.
    """
    import warnings as _warnings

    a, b, c, d = rect  # re in [a,b], im in [c,d]
    corners = [complex(a, c), complex(b, c), complex(b, d), complex(a, d)]
    total = 0.0 + 0.0j
    moment = 0.0 + 0.0j
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        for i in range(4):
            z0, z1 = corners[i], corners[(i + 1) % 4]
            dz = z1 - z0

            def f(t, kind):
                z = z0 + t * dz
                val = poly.derivative(z) / poly(z) * dz
                return val.real if kind == 0 else val.imag

            def g(t, kind):
                z = z0 + t * dz
                val = z * poly.derivative(z) / poly(z) * dz
                return val.real if kind == 0 else val.imag

            re_i = quad(f, 0.0, 1.0, args=(0,), epsabs=quad_eps, limit=400)[0]
            im_i = quad(f, 0.0, 1.0, args=(1,), epsabs=quad_eps, limit=400)[0]
            re_m = quad(g, 0.0, 1.0, args=(0,), epsabs=quad_eps, limit=400)[0]
            im_m = quad(g, 0.0, 1.0, args=(1,), epsabs=quad_eps, limit=400)[0]
            total += complex(re_i, im_i)
            moment += complex(re_m, im_m)
    count = total / (2j * np.pi)
    if not np.isfinite(count.real) or not np.isfinite(count.imag):
        raise ContourError(f"winding integral diverged on {rect}")
    n = int(round(count.real))
    if abs(count - n) > 0.25:
        raise ContourError(
            f"winding count {count} too far from an integer on {rect}",
            residual=abs(count - n))
    return n, moment / (2j * np.pi)


def _edge_min_abs(poly: DirichletPoly, z0: complex, z1: complex,
                  samples: int | None = None) -> float:
    if samples is None:
        samples = max(512, min(16384, int(64 * abs(z1 - z0))))
    t = np.linspace(0.0, 1.0, samples)
    z = z0 + t * (z1 - z0)
    return float(np.min(np.abs(poly(z))))


def _rect_min_abs(poly: DirichletPoly, rect) -> float:
    a, b, c, d = rect
    corners = [complex(a, c), complex(b, c), complex(b, d), complex(a, d)]
    return min(_edge_min_abs(poly, corners[i], corners[(i + 1) % 4])
               for i in range(4))


def _split_and_count(poly: DirichletPoly, rect, n: int, edge_tol: float):
    """Split a rectangle along a zero-free line with consistent child counts.

    Candidate split lines are scanned for zeros of P and the two child
    winding counts must sum to the parent's; otherwise the next candidate
    fraction is tried (a zero close to the line poisons the quadrature).
    """
    ra, rb, rc, rd = rect
    vertical = (rb - ra) >= (rd - rc)
    lo, hi = (ra, rb) if vertical else (rc, rd)
    width = hi - lo
    last_err = None
    for frac in (0.5, 0.47, 0.53, 0.43, 0.57, 0.39, 0.61, 0.35, 0.65,
                 0.31, 0.69):
        x = lo + frac * width
        if vertical:
            z0, z1 = complex(x, rc), complex(x, rd)
            kids = [(ra, x, rc, rd), (x, rb, rc, rd)]
        else:
            z0, z1 = complex(ra, x), complex(rb, x)
            kids = [(ra, rb, rc, x), (ra, rb, x, rd)]
        if _edge_min_abs(poly, z0, z1) <= edge_tol:
            continue
        try:
            counts = [_winding_number(poly, kid)[0] for kid in kids]
        except ContourError as err:
            last_err = err
            continue
        if sum(counts) != n:
            last_err = ContourError(
                f"child counts {counts} disagree with parent {n} on {rect}")
            continue
        return kids, counts
    raise last_err or ContourError(
        f"no zero-free split line found for {rect}")


def nonlattice_poles(poly: DirichletPoly, re_band: tuple[float, float],
                     im_max: float, pole_tol: float = POLE_TOL,
                     edge_tol: float = 1e-8,
                     min_rect: float = 1e-8) -> ComplexDimensionSet:
    """Locate zeros of P in re_band x [-im_max, im_max] by subdivision.

    Rectangles are split (along zero-free lines) until each contains at
    most one zero by winding count, then Newton refinement starts from
    the first-moment estimate.  The emitted pole count always equals the
    sum of rectangle counts.  Zeros landing on the outer boundary are
    avoided by nudging it outward by up to ~1e-5.
    """
    a, b = re_band
    if not (b > a) or im_max <= 0:
        raise ValueError("need a nonempty band and im_max > 0")
    # Expand the search rectangle so no zero sits on the contour: the real
    # direction is always safe (no zeros outside [D_l, D]); the imaginary
    # margin is retried until the top/bottom edges are verifiably clear.
    margin_re = max(1e-6, 1e-3 * (b - a))
    total_count = None
    rect = None
    wi = max(1e-6, 1e-3 * float(im_max))
    for _ in range(10):
        cand = (a - margin_re, b + margin_re, -(float(im_max) + wi),
                float(im_max) + wi)
        if _rect_min_abs(poly, cand) > edge_tol:
            try:
                total_count, _ = _winding_number(poly, cand)
                rect = cand
                break
            except ContourError:
                pass
        wi *= 1.7
    if rect is None:
        raise ContourError("could not free the outer rectangle of zeros")
    if total_count == 0:
        return ComplexDimensionSet(
            poles=(), window=(a, b, float(im_max)), lattice=None)

    poles: list[Pole] = []
    stack = [(rect, total_count)]
    while stack:
        r, n = stack.pop()
        ra, rb, rc, rd = r
        if n == 0:
            continue
        if n == 1 or max(rb - ra, rd - rc) < min_rect:
            _, moment = _winding_number(poly, r)
            center = moment / n
            omega = _newton_polish(poly, complex(center))
            inside = (ra - 1e-9 <= omega.real <= rb + 1e-9
                      and rc - 1e-9 <= omega.imag <= rd + 1e-9)
            if n == 1 and (not inside or abs(poly(omega)) >= pole_tol):
                # refinement escaped; split once more
                if max(rb - ra, rd - rc) < min_rect:
                    raise ContourError(
                        f"failed to isolate a zero in {r}",
                        residual=abs(poly(omega)))
            else:
                if abs(poly(omega)) >= pole_tol:
                    raise ContourError(
                        f"pole candidate failed |P| check at {omega}",
                        residual=abs(poly(omega)))
                if n == 1:
                    res = residue_simple(poly, omega, pole_tol=pole_tol)
                else:
                    res = residue_contour(
                        lambda s: zeta_eval(poly, s), omega,
                        radius=max(min_rect, 1e-6))
                poles.append(Pole(omega, res, n))
                continue
        # split along the longer side through a zero-free line
        kids, counts = _split_and_count(poly, r, n, edge_tol)
        for kid, kn in zip(kids, counts):
            if kn:
                stack.append((kid, kn))

    emitted = sum(p.multiplicity for p in poles)
    if emitted != total_count:
        raise ContourError(
            f"located {emitted} zeros but winding count was {total_count}")

    poles = _conjugate_canonicalize(poles)
    kept = [p for p in poles if abs(p.omega.imag) <= im_max + 1e-12]
    return ComplexDimensionSet(poles=_sorted_poles(kept),
                               window=(a, b, float(im_max)), lattice=None,
                               search_rect=rect, search_count=total_count)


def _conjugate_canonicalize(poles: list[Pole],
                            tol: float = 1e-9) -> list[Pole]:
    """Pair conjugate poles and make the pairing exact (real coefficients)."""
    upper = [p for p in poles if p.omega.imag > tol]
    lower = [p for p in poles if p.omega.imag < -tol]
    real = [Pole(complex(p.omega.real, 0.0), complex(p.residue.real, 0.0),
                 p.multiplicity)
            for p in poles if abs(p.omega.imag) <= tol]
    out = list(real)
    lower_pool = list(lower)
    for p in upper:
        match = None
        for q in lower_pool:
            if abs(q.omega - p.omega.conjugate()) <= tol:
                match = q
                break
        if match is None:
            raise ContourError(
                f"pole {p.omega} has no conjugate partner within {tol}")
        lower_pool.remove(match)
        out.append(p)
        out.append(Pole(p.omega.conjugate(), p.residue.conjugate(),
                        p.multiplicity))
    if lower_pool:
        raise ContourError(
            f"unpaired lower-half poles: {[q.omega for q in lower_pool]}")
    return out
