"""Pointwise explicit formulas as symmetric partial sums over poles.

For a function F whose normalization t^(-beta/alpha) F(t) satisfies a
scaling functional equation, the k-fold antiderivative expands as

    F^[k](t) = sum over poles omega of
               rho_omega * t^((beta-omega)/alpha + k)
                         / ((beta-omega)/alpha + 1)_k  + remainder,

valid pointwise for k >= 2, where rho_omega is the residue of
s -> zeta_f(s/alpha; delta) at omega and (z)_k is the Pochhammer
symbol.  The sum is a symmetric limit: terms are added in order of
|Im omega| under increasing cutoffs, so conjugate pairs cancel their
imaginary parts.  Residues always come from the zeta factorization
(see mellin.sfe_zeta_residue), never from divergent quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitError
from .sampled import SampledFunction, leading_power_fit
from .zeta import ComplexDimensionSet, DirichletPoly, RatioMultiset

DEFAULT_CUTOFFS = (10.0, 20.0, 40.0, 80.0, 160.0)


def pochhammer(z: complex, k: int) -> complex:
    """(z)_k = z (z+1) ... (z+k-1), with (z)_0 = 1."""
    if k < 0:
        raise ValueError("k must be >= 0")
    out = 1.0 + 0.0j
    for j in range(k):
        out *= z + j
    return complex(out)


@dataclass(frozen=True)
class FormulaTerm:
    """One pole's contribution coeff * t^exponent to the partial sums."""

    omega: complex
    coeff: complex
    exponent: complex
    poch_denominator: complex

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.coeff * np.exp(self.exponent * np.log(t))


@dataclass(frozen=True)
class TermBuildResult:
    terms: tuple[FormulaTerm, ...]
    skipped: tuple[complex, ...]  # non-simple poles excluded, with warning


def build_terms(dims: ComplexDimensionSet, zeta_residues, beta: float,
                alpha: float, k: int) -> TermBuildResult:
    """Assemble one term per simple pole.

    ``zeta_residues`` lists, aligned with dims.poles, the residues of
    s -> zeta_f(s/alpha; delta) at each omega.  Non-simple poles are
    excluded and reported (their contribution needs derivative terms the
    simple-pole formula does not carry).
    """
    if len(zeta_residues) != len(dims.poles):
        raise ValueError("zeta_residues must align with dims.poles")
    terms = []
    skipped = []
    for pole, rho in zip(dims.poles, zeta_residues):
        if pole.multiplicity != 1:
            skipped.append(pole.omega)
            continue
        z = (beta - pole.omega) / alpha
        poch = pochhammer(z + 1.0, k)
        if poch == 0:
            raise ZeroDivisionError(
                f"Pochhammer denominator vanished at omega={pole.omega}")
        terms.append(FormulaTerm(omega=pole.omega,
                                 coeff=complex(rho) / poch,
                                 exponent=z + k,
                                 poch_denominator=poch))
    terms.sort(key=lambda tm: (abs(tm.omega.imag), tm.omega.imag,
                               tm.omega.real))
    return TermBuildResult(terms=tuple(terms), skipped=tuple(skipped))


def remainder_term(ratios: RatioMultiset, remainder: SampledFunction,
                   beta: float, alpha: float, k: int,
                   flat_tol: float = 0.02) -> FormulaTerm | None:
    """Contribution of the remainder transform's own pole at s = 0.

    When the normalized remainder tends to a nonzero constant c0 as
    t -> 0 (its transform then has a simple pole at 0 with residue c0),
    the zeta function of the solution picks up an extra pole at s = 0
    beyond the complex-dimension set, with residue zeta(0) * alpha * c0
    for s -> zeta_f(s/alpha).  Direct antiderivatives contain this
    polynomial-order term, so the comparison series must carry it too.
    Returns None when the remainder vanishes at 0 faster than a constant
    (no pole) or has no clean power behavior.
    """
    try:
        p, c0 = leading_power_fit(remainder.ts, remainder.vals)
    except FitError:
        return None
    if abs(p) > flat_tol or c0 == 0.0:
        return None
    poly = DirichletPoly(ratios)
    rho = complex(1.0 / poly(0.0)) * alpha * c0
    z = (beta - 0.0) / alpha
    poch = pochhammer(z + 1.0, k)
    return FormulaTerm(omega=0.0 + 0.0j, coeff=rho / poch, exponent=z + k,
                       poch_denominator=poch)


@dataclass(frozen=True)
class PartialSumSeries:
    """Evaluated symmetric partial sums for each imaginary-part cutoff."""

    t_grid: np.ndarray = field(repr=False)
    im_cutoffs: tuple[float, ...]
    sums: np.ndarray = field(repr=False)        # (n_cutoffs, n_t) real parts
    imag_leakage: tuple[float, ...] = ()
    terms_used: tuple[int, ...] = ()

    def best(self) -> np.ndarray:
        """Partial sum at the largest cutoff."""
        return self.sums[-1]


def evaluate_sum(terms, t_grid, im_cutoffs=DEFAULT_CUTOFFS
                 ) -> PartialSumSeries:
    """Sum terms with |Im omega| <= T for each cutoff T.

    Terms are accumulated in increasing |Im omega| (fixed order, so the
    reduction is deterministic); the real part is returned and the
    imaginary leakage recorded, which must be at noise level whenever the
    underlying data is real (conjugate pairing).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise ValueError("t_grid must be positive")
    cutoffs = tuple(sorted(im_cutoffs))
    terms = sorted(terms, key=lambda tm: (abs(tm.omega.imag),
                                          tm.omega.imag, tm.omega.real))
    log_t = np.log(t_grid)
    sums = np.zeros((len(cutoffs), len(t_grid)))
    leaks = []
    used = []
    acc = np.zeros(len(t_grid), dtype=complex)
    idx = 0
    for ci, cutoff in enumerate(cutoffs):
        while idx < len(terms) and abs(terms[idx].omega.imag) <= cutoff:
            tm = terms[idx]
            acc += tm.coeff * np.exp(tm.exponent * log_t)
            idx += 1
        sums[ci] = acc.real
        leaks.append(float(np.max(np.abs(acc.imag))) if len(acc) else 0.0)
        used.append(idx)
    return PartialSumSeries(t_grid=t_grid, im_cutoffs=cutoffs, sums=sums,
                            imag_leakage=tuple(leaks),
                            terms_used=tuple(used))


@dataclass(frozen=True)
class ExplicitComparison:
    """Residual between a directly computed antiderivative and the sums."""

    t_grid: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    max_rel_dev: float
    fitted_slope: float | None
    expected_remainder_exp: float
    floor: float
    at_floor: bool
    passed: bool


def compare_explicit(direct: SampledFunction, series: PartialSumSeries,
                     expected_remainder_exp: float,
                     floor: float | None = None,
                     slope_slack: float = 0.15) -> ExplicitComparison:
    """Fit the decay order of direct - series against the expected one.

    Passes when the log-log slope of |residual| reaches
    expected_remainder_exp - slope_slack, or when the residual sits below
    the supplied noise floor (closed-form fixtures hit the floor).
    """
    t = series.t_grid
    direct_vals = direct(t)
    res = direct_vals - series.best()
    scale = float(np.max(np.abs(direct_vals)))
    if floor is None:
        floor = 1e-12 * scale
    max_rel = float(np.max(np.abs(res) / np.maximum(np.abs(direct_vals),
                                                    1e-300)))
    usable = np.abs(res) > floor
    if usable.sum() < 4:
        return ExplicitComparison(
            t_grid=t, residual=res, max_rel_dev=max_rel, fitted_slope=None,
            expected_remainder_exp=expected_remainder_exp, floor=floor,
            at_floor=True, passed=True)
    slope = float(np.polyfit(np.log(t[usable]),
                             np.log(np.abs(res[usable])), 1)[0])
    passed = slope >= expected_remainder_exp - slope_slack
    return ExplicitComparison(
        t_grid=t, residual=res, max_rel_dev=max_rel, fitted_slope=slope,
        expected_remainder_exp=expected_remainder_exp, floor=floor,
        at_floor=False, passed=bool(passed))
