import numpy as np
import pytest

from fractaldims.explicit import (FormulaTerm, build_terms, compare_explicit,
                                  evaluate_sum, pochhammer, remainder_term)
from fractaldims.mellin import sfe_zeta_residue
from fractaldims.sampled import SampledFunction, geometric_grid
from fractaldims.zeta import (ComplexDimensionSet, Pole, RatioMultiset,
                              detect_lattice, lattice_poles)

LOG3 = np.log(3.0)


def test_pochhammer_values():
    assert pochhammer(4.2 + 1j, 0) == 1
    assert pochhammer(1.0, 3) == pytest.approx(6.0)
    assert pochhammer(0.5, 2) == pytest.approx(0.75)


def test_build_terms_single_real_pole():
    d = 0.8
    rho = 2.5
    dims = ComplexDimensionSet(poles=(Pole(complex(d), complex(rho)),),
                               window=(0, 1, 10))
    built = build_terms(dims, [rho], beta=2.0, alpha=1.0, k=2)
    (term,) = built.terms
    # coefficient rho / ((3-D)(4-D)), exponent 4-D
    assert term.exponent == pytest.approx(4 - d)
    assert term.coeff == pytest.approx(rho / ((3 - d) * (4 - d)))


def test_build_terms_conjugate_coefficients():
    w = 0.7 + 3.1j
    rho = 0.2 - 0.1j
    dims = ComplexDimensionSet(
        poles=(Pole(w, rho), Pole(w.conjugate(), rho.conjugate())),
        window=(0, 1, 10))
    built = build_terms(dims, [rho, rho.conjugate()], beta=2.0, alpha=1.0,
                        k=2)
    c1, c2 = (t.coeff for t in built.terms)
    assert c1 == pytest.approx(c2.conjugate())


def test_build_terms_empty():
    dims = ComplexDimensionSet(poles=(), window=(0, 1, 10))
    built = build_terms(dims, [], beta=2.0, alpha=1.0, k=2)
    assert built.terms == ()


def test_build_terms_skips_non_simple():
    dims = ComplexDimensionSet(
        poles=(Pole(0.5 + 0j, 1.0 + 0j, multiplicity=2),),
        window=(0, 1, 10))
    built = build_terms(dims, [1.0], beta=2.0, alpha=1.0, k=2)
    assert built.terms == ()
    assert built.skipped == (0.5 + 0j,)


def test_evaluate_sum_single_real_term():
    term = FormulaTerm(omega=0.5 + 0j, coeff=2.0 + 0j, exponent=1.5 + 0j,
                       poch_denominator=1.0 + 0j)
    t = geometric_grid(1e-3, 1.0, 24)
    series = evaluate_sum([term], t, im_cutoffs=(1.0, 10.0))
    for row in series.sums:
        assert np.allclose(row, 2.0 * t ** 1.5)
    assert max(series.imag_leakage) == 0.0


def test_compare_explicit_floor_case():
    # synthetic two-term function with exactly matching terms
    t = geometric_grid(1e-3, 1e-1, 48)
    terms = [
        FormulaTerm(omega=0.4 + 0j, coeff=1.3 + 0j, exponent=2.6 + 0j,
                    poch_denominator=1.0 + 0j),
        FormulaTerm(omega=0.9 + 0j, coeff=-0.4 + 0j, exponent=2.1 + 0j,
                    poch_denominator=1.0 + 0j),
    ]
    direct = SampledFunction(t, 1.3 * t ** 2.6 - 0.4 * t ** 2.1)
    series = evaluate_sum(terms, t, im_cutoffs=(10.0,))
    comp = compare_explicit(direct, series, expected_remainder_exp=3.0)
    assert comp.at_floor
    assert comp.passed
    assert comp.max_rel_dev < 1e-12


@pytest.fixture(scope="module")
def cantor_terms(cantor_string):
    ratios = RatioMultiset(((1 / 3, 2),))
    cs = cantor_string
    tg = np.geomspace(1e-5, 0.4, 4000)
    vg = cs.volume(tg)
    delta = float(tg[np.searchsorted(vg, 0.9) - 1])
    ts = np.unique(np.concatenate([
        geometric_grid(1e-8, 3 * delta * 1.01, 400),
        cs.lens / 2, cs.lens * (1 + 1e-9)]))
    ts = ts[ts > 0]
    f = SampledFunction(ts, cs.volume(ts) / ts)
    rn = SampledFunction(ts, cs.remainder(ts) / ts)
    dims = lattice_poles(detect_lattice(ratios), im_max=90.0)
    residues = [sfe_zeta_residue(ratios, f, rn, p.omega, delta, alpha=1.0)
                for p in dims.poles]
    built = build_terms(dims, residues, beta=1.0, alpha=1.0, k=2)
    extra = remainder_term(ratios, rn, beta=1.0, alpha=1.0, k=2)
    return ratios, cs, delta, dims, built, extra


def test_cantor_remainder_term_is_minus_third(cantor_terms):
    _, _, _, _, _, extra = cantor_terms
    assert extra is not None
    assert extra.coeff == pytest.approx(-1 / 3, rel=1e-9)
    assert extra.exponent == pytest.approx(3.0)


def test_cantor_partial_sums_converge_and_match(cantor_terms):
    ratios, cs, delta, dims, built, extra = cantor_terms
    t = geometric_grid(1e-3, 1e-1, 60)
    series = evaluate_sum(list(built.terms) + [extra], t,
                          im_cutoffs=(10, 20, 40, 80))
    direct = SampledFunction(t, cs.volume_anti2(t))
    comp = compare_explicit(direct, series, expected_remainder_exp=2.95)
    assert comp.max_rel_dev < 0.01
    # cutoff increments eventually decrease
    incs = [np.max(np.abs(series.sums[i + 1] - series.sums[i]))
            for i in range(len(series.im_cutoffs) - 1)]
    assert incs[-1] < incs[0]
    # realness: conjugate pairing keeps imaginary leakage at noise level
    assert series.imag_leakage[-1] < 1e-9 * np.max(np.abs(series.sums[-1]))


def test_cantor_leading_term_dominance(cantor_terms):
    ratios, cs, delta, dims, built, extra = cantor_terms
    # average of series / t^(1-D+2) over one multiplicative period
    # reproduces the D-line coefficient c0 = Res / poch within 2%
    d = np.log(2) / LOG3
    period = 2 * np.pi / LOG3
    t = np.exp(np.linspace(np.log(2e-3), np.log(2e-3) + np.log(3), 600))
    series = evaluate_sum(list(built.terms) + [extra], t, im_cutoffs=(90,))
    direct = cs.volume_anti2(t)
    c0 = None
    for term in built.terms:
        if abs(term.omega.imag) < 1e-9:
            c0 = term.coeff.real
    scaled = direct / t ** (3 - d)
    avg = np.trapezoid(scaled, np.log(t)) / np.log(3)
    assert avg == pytest.approx(c0, rel=0.02)


def test_remainder_term_none_for_decaying_remainder():
    ts = geometric_grid(1e-6, 1.0, 200)
    decaying = SampledFunction(ts, ts ** 0.5)
    ratios = RatioMultiset(((1 / 3, 2),))
    assert remainder_term(ratios, decaying, beta=1.0, alpha=1.0, k=2) is None
