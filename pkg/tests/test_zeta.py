import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractaldims.errors import MultiplePoleError, PoleProximityError
from fractaldims.zeta import (ComplexDimensionSet, DirichletPoly,
                              RatioMultiset, detect_lattice, lattice_poles,
                              lower_similarity_dimension, nonlattice_poles,
                              rescale, residue_contour, residue_simple,
                              screen_lower_bound, similarity_dimension,
                              zeta_eval)

LOG3 = np.log(3.0)
CANTOR = RatioMultiset(((1 / 3, 2),))
KOCH = RatioMultiset(((1 / 3, 4),))


def random_multiset(rng, max_entries=3):
    k = rng.integers(1, max_entries + 1)
    ratios = np.sort(rng.uniform(0.05, 0.9, size=k))[::-1]
    while len(set(np.round(ratios, 6))) < k:
        ratios = np.sort(rng.uniform(0.05, 0.9, size=k))[::-1]
    mults = rng.integers(1, 5, size=k)
    return RatioMultiset(tuple((float(r), int(m))
                               for r, m in zip(ratios, mults)))


# ---------------------------------------------------------------- dimensions


def test_similarity_dimension_koch():
    d = similarity_dimension(KOCH)
    assert d == pytest.approx(np.log(4) / LOG3, abs=1e-12)


def test_similarity_dimension_half():
    assert similarity_dimension(RatioMultiset(((0.5, 2),))) == \
        pytest.approx(1.0, abs=1e-12)


def test_similarity_dimension_pentaflake_bisection_oracle():
    rm = RatioMultiset(((2 / 5, 2), (1 / 5, 4)))
    # independent plain bisection on the Moran sum
    lo, hi = 0.0, 3.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if 4 * (1 / 5) ** mid + 2 * (2 / 5) ** mid > 1:
            lo = mid
        else:
            hi = mid
    assert similarity_dimension(rm) == pytest.approx(0.5 * (lo + hi),
                                                     abs=1e-12)


def test_lower_dimension_single_ratio_equals_upper():
    assert lower_similarity_dimension(KOCH) == \
        pytest.approx(similarity_dimension(KOCH), abs=1e-12)


@pytest.mark.parametrize("n,expect_sign", [(3, -1), (4, 0), (5, 1)])
def test_lower_dimension_gkf_sign_pattern(n, expect_sign):
    r = 0.25
    ell = (1 - r) / 2
    rm = RatioMultiset(((ell, 2), (r, n - 1)))
    d_lo = lower_similarity_dimension(rm)
    if expect_sign == 0:
        assert abs(d_lo) < 1e-10
    elif expect_sign < 0:
        assert d_lo < 0
    else:
        assert d_lo > 0


def test_moran_root_random_property():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        rm = random_multiset(rng)
        poly = DirichletPoly(rm)
        d = similarity_dimension(rm)
        assert float(poly(d - 1e-6)) < 0 < float(poly(d + 1e-6))
        # the Moran sum is strictly decreasing on sampled reals
        sigmas = np.linspace(d - 2, d + 2, 9)
        vals = poly.moran_sum(sigmas)
        assert np.all(np.diff(vals) < 0)


# ---------------------------------------------------------------- lattice


def test_detect_lattice_single_ratio():
    lat = detect_lattice(KOCH)
    assert lat is not None
    assert lat.generator == pytest.approx(1 / 3, abs=1e-14)
    assert lat.exponents == ((1, 4),)


def test_detect_lattice_powers():
    lat = detect_lattice(RatioMultiset(((1 / 9, 1), (1 / 3, 1))))
    assert lat is not None
    assert lat.generator == pytest.approx(1 / 3, abs=1e-13)
    assert set(lat.exponents) == {(1, 1), (2, 1)}


def test_detect_lattice_squareflake_nonlattice():
    # log(3/8)/log(1/4) has no small rational approximation
    for cap in (16, 64, 256):
        assert detect_lattice(RatioMultiset(((3 / 8, 2), (1 / 4, 3))),
                              max_denominator=cap) is None


def test_detect_lattice_exponent_gcd_reduced():
    lat = detect_lattice(RatioMultiset(((1 / 9, 1), (1 / 81, 2))))
    assert lat is not None
    ks = [k for k, _ in lat.exponents]
    assert np.gcd.reduce(ks) == 1


# ---------------------------------------------------------------- poles


def test_lattice_poles_cantor_line():
    dims = lattice_poles(detect_lattice(CANTOR), im_max=120.0)
    period = 2 * np.pi / LOG3
    ups = sorted((p.omega for p in dims.poles if p.omega.imag > -1e-9),
                 key=lambda w: w.imag)
    for k, omega in enumerate(ups[:20]):
        expect = np.log(2) / LOG3 + 1j * k * period
        assert abs(omega - expect) < 1e-8


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_lattice_poles_koch_family_real_parts(n):
    dims = lattice_poles(detect_lattice(RatioMultiset(((1 / 3, n + 1),))),
                         im_max=40.0)
    for p in dims.poles:
        assert p.omega.real == pytest.approx(np.log(n + 1) / LOG3,
                                             abs=1e-10)


def test_lattice_poles_half_ratio_line_through_zero():
    dims = lattice_poles(detect_lattice(RatioMultiset(((0.5, 1),))),
                         im_max=30.0)
    period = 2 * np.pi / np.log(2)
    for p in dims.poles:
        assert abs(p.omega.real) < 1e-10
        assert abs(p.omega.imag / period - round(p.omega.imag / period)) \
            < 1e-10


def test_lattice_vertical_spacing_exact():
    dims = lattice_poles(detect_lattice(CANTOR), im_max=100.0)
    period = 2 * np.pi / LOG3
    ims = np.sort([p.omega.imag for p in dims.poles])
    assert np.allclose(np.diff(ims), period, atol=1e-10)


def test_nonlattice_matches_lattice_on_cantor():
    d_lat = lattice_poles(detect_lattice(CANTOR), im_max=30.0)
    poly = DirichletPoly(CANTOR)
    d = np.log(2) / LOG3
    d_non = nonlattice_poles(poly, (d - 0.1, d + 0.1), 30.0)
    w1 = sorted((p.omega for p in d_lat.poles),
                key=lambda w: (w.imag, w.real))
    w2 = sorted((p.omega for p in d_non.poles),
                key=lambda w: (w.imag, w.real))
    assert len(w1) == len(w2)
    assert max(abs(a - b) for a, b in zip(w1, w2)) < 1e-8


def test_nonlattice_empty_band():
    poly = DirichletPoly(CANTOR)
    dims = nonlattice_poles(poly, (2.0, 3.0), 20.0)
    assert dims.poles == ()


def test_nonlattice_pole_band_and_conjugacy():
    rm = RatioMultiset(((2 / 5, 2), (1 / 5, 4)))
    poly = DirichletPoly(rm)
    d_up = similarity_dimension(rm)
    d_lo = lower_similarity_dimension(rm)
    dims = nonlattice_poles(poly, (d_lo, d_up), 25.0)
    omegas = dims.omegas()
    assert np.all(omegas.real >= d_lo - 1e-9)
    assert np.all(omegas.real <= d_up + 1e-9)
    as_set = {(round(w.real, 9), round(w.imag, 9)) for w in omegas}
    conj = {(a, -b) for a, b in as_set}
    assert as_set == conj
    assert max(abs(poly(w)) for w in omegas) < 1e-10


# ---------------------------------------------------------------- evaluation


def test_zeta_eval_cantor_at_two():
    poly = DirichletPoly(CANTOR)
    assert zeta_eval(poly, 2.0) == pytest.approx(9 / 7, abs=1e-14)


def test_zeta_eval_large_re_tends_to_one():
    poly = DirichletPoly(KOCH)
    assert zeta_eval(poly, 200.0) == pytest.approx(1.0, abs=1e-12)


def test_zeta_eval_refuses_pole():
    poly = DirichletPoly(CANTOR)
    d = similarity_dimension(CANTOR)
    with pytest.raises(PoleProximityError):
        zeta_eval(poly, d)


def test_residue_simple_cantor():
    poly = DirichletPoly(CANTOR)
    d = similarity_dimension(CANTOR)
    assert residue_simple(poly, d) == pytest.approx(1 / LOG3, abs=1e-12)


def test_residue_simple_two_halves():
    rm = RatioMultiset(((0.5, 2),))
    assert residue_simple(DirichletPoly(rm), 1.0) == \
        pytest.approx(1 / np.log(2), abs=1e-12)


def test_residue_simple_rejects_non_pole():
    poly = DirichletPoly(CANTOR)
    with pytest.raises(ValueError):
        residue_simple(poly, 2.0 + 0j)


def test_residue_contour_matches_simple():
    poly = DirichletPoly(CANTOR)
    d = similarity_dimension(CANTOR)
    res = residue_contour(lambda s: zeta_eval(poly, s), d, radius=1e-3)
    assert res == pytest.approx(residue_simple(poly, d), rel=1e-10)


# ---------------------------------------------------------------- screen


def test_screen_bound_cantor_at_zero():
    assert screen_lower_bound(DirichletPoly(CANTOR), 0.0) == \
        pytest.approx(1.0, abs=1e-14)


def test_screen_bound_vanishes_at_lower_dimension():
    rm = RatioMultiset(((2 / 5, 2), (1 / 5, 4)))
    d_lo = lower_similarity_dimension(rm)
    vals = [screen_lower_bound(DirichletPoly(rm), d_lo - eps)
            for eps in (0.1, 0.01, 0.001)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 0.01


def test_screen_bound_respected_by_samples():
    # sigma must sit below D_l (~= 0.2805 for this system)
    rm = RatioMultiset(((2 / 5, 2), (1 / 5, 4)))
    poly = DirichletPoly(rm)
    sigma = 0.25
    bound = screen_lower_bound(poly, sigma)
    assert bound > 0
    taus = np.linspace(-100, 100, 40001)
    sampled = np.abs(poly(sigma + 1j * taus))
    assert sampled.min() >= bound - 1e-12


def test_screen_bound_rejects_sigma_above():
    with pytest.raises(ValueError):
        screen_lower_bound(DirichletPoly(CANTOR), 1.0)


# ---------------------------------------------------------------- rescale


def test_rescale_identity():
    dims = lattice_poles(detect_lattice(CANTOR), im_max=20.0)
    same = rescale(dims, 1.0)
    assert np.allclose(same.omegas(), dims.omegas())


def test_rescale_halves_poles_and_residues():
    dims = lattice_poles(detect_lattice(CANTOR), im_max=20.0)
    half = rescale(dims, 2.0)
    assert np.allclose(half.omegas(), dims.omegas() / 2)
    assert np.allclose(half.residues(), dims.residues() / 2)
    # contour oracle: residue of s -> zeta(2s) at omega/2
    poly = DirichletPoly(CANTOR)
    omega = dims.omegas()[np.argmin(np.abs(dims.omegas().imag))]
    res = residue_contour(lambda s: zeta_eval(poly, 2 * s), omega / 2,
                          radius=1e-3)
    assert res == pytest.approx(residue_simple(poly, omega) / 2, rel=1e-9)


def test_json_roundtrip():
    dims = lattice_poles(detect_lattice(CANTOR), im_max=20.0)
    back = ComplexDimensionSet.from_json(dims.to_json())
    assert np.allclose(back.omegas(), dims.omegas())
    assert np.allclose(back.residues(), dims.residues())
    assert back.lattice.generator == pytest.approx(dims.lattice.generator)
    doc = json.loads(dims.to_json())
    assert {"re", "im", "res_re", "res_im", "mult"} <= set(doc["poles"][0])


# ------------------------------------------------------- GKF simplicity


@pytest.mark.parametrize("n,r", [(3, 1 / 3), (4, 3 - 2 * np.sqrt(2))])
def test_gkf_lattice_pole_simplicity(n, r):
    ell = (1 - r) / 2
    rm = RatioMultiset.from_pairs(((ell, 2), (r, n - 1)))
    lat = detect_lattice(rm)
    assert lat is not None
    dims = lattice_poles(lat, im_max=60.0)
    poly = DirichletPoly(rm)
    for p in dims.poles:
        assert p.multiplicity == 1
        assert abs(poly.derivative(p.omega)) > 1e-6
