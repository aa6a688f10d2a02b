import numpy as np
import pytest

from fractaldims.errors import GeometryError, ResolutionError
from fractaldims.heat import (HeatProblem, decomposition_remainder,
                              heat_content, heat_content_mc,
                              heat_exponent_fit, solve_heat_content,
                              solve_heat_fdm)
from fractaldims.sampled import SampledFunction, geometric_grid
from fractaldims.vonkoch import GKCParams

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_initial_interior_zero_and_small_t():
    field = solve_heat_fdm(HeatProblem(region=SQUARE), h=0.02, dt=2e-4,
                           t_end=2e-4, save_times=[2e-4], keep_fields=True)
    grid = field.fields[2e-4]
    # deep interior still cold after one step
    assert np.nanmin(grid) >= 0.0
    center = grid[grid.shape[0] // 2, grid.shape[1] // 2]
    assert center < 1e-6


def test_discrete_maximum_principle_and_monotonicity():
    times = [1e-3, 5e-3, 2e-2, 1e-1]
    field = solve_heat_fdm(HeatProblem(region=SQUARE), h=0.02, dt=2e-4,
                           t_end=0.1, save_times=times, keep_fields=True)
    prev = None
    for t in times:
        grid = field.fields[t]
        vals = grid[np.isfinite(grid)]
        assert np.all(vals >= -1e-12)
        assert np.all(vals <= 1.0 + 1e-12)
        if prev is not None:
            both = np.isfinite(grid) & np.isfinite(prev)
            assert np.all(grid[both] >= prev[both] - 1e-10)
        prev = grid
    assert np.all(np.diff(field.contents) > 0)


def test_steady_state_fills_region():
    field = solve_heat_fdm(HeatProblem(region=SQUARE), h=0.02, dt=2e-4,
                           t_end=3.0, save_times=[3.0], keep_fields=True)
    grid = field.fields[3.0]
    assert np.nanmin(grid) > 0.999
    assert field.contents[-1] == pytest.approx(1.0, rel=1e-3)


def test_content_bounded_by_area():
    # the trapezoidal corner closure can overshoot by O(h^2) per corner
    prob = HeatProblem(region=SQUARE)
    h = 0.01
    e = solve_heat_content(prob, h=h, save_times=[0.01, 0.1, 1.0])
    assert np.all(e.vals <= prob.area + 4 * h * h)


def test_content_matches_square_oracle_coarse(square_oracle):
    ts = geometric_grid(1e-4, 1e-2, 8)
    e = solve_heat_content(HeatProblem(region=SQUARE), h=4e-3,
                           save_times=ts)
    rel = np.abs(e.vals - square_oracle(ts)) / square_oracle(ts)
    assert rel.max() < 0.01


def test_centerline_profile_matches_rod_oracle(rod_profile_oracle):
    rect = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 2.0], [0.0, 2.0]])
    t = 0.01
    field = solve_heat_fdm(HeatProblem(region=rect), h=4e-3, dt=8e-6,
                           t_end=t, save_times=[t], keep_fields=True)
    grid = field.fields[t]
    ys = field.bbox[1] + (np.arange(grid.shape[1]) + 0.5) * field.h
    j = int(np.argmin(np.abs(ys - 1.0)))
    xs = field.bbox[0] + (np.arange(grid.shape[0]) + 0.5) * field.h
    sel = np.isfinite(grid[:, j]) & (grid[:, j] < 1.0)
    profile = grid[sel, j]
    exact = rod_profile_oracle(xs[sel], t)
    assert np.max(np.abs(profile - exact)) < 0.01


def test_small_t_perimeter_law(square_oracle):
    # leading law E ~ (2/sqrt(pi)) |dOmega| sqrt(t); perimeter 4
    ts = geometric_grid(1e-6, 1e-5, 8)
    coef = square_oracle(ts) / np.sqrt(ts)
    assert np.allclose(coef, 8 / np.sqrt(np.pi), rtol=0.03)


def test_mc_cross_check_fast(square_oracle):
    tv = np.array([2e-3])
    est, sig = heat_content_mc(SQUARE, tv, n_paths=30000, seed=99,
                               steps_per_t=800)
    oracle = square_oracle(tv)
    assert abs(est[0] - oracle[0]) < 4 * sig[0]


def test_mc_deterministic_given_seed():
    tv = np.array([1e-3])
    a = heat_content_mc(SQUARE, tv, n_paths=5000, seed=1, steps_per_t=300)
    b = heat_content_mc(SQUARE, tv, n_paths=5000, seed=1, steps_per_t=300)
    assert a[0][0] == b[0][0]


def test_exact_tiling_toy():
    # four disjoint half-scale squares tile the unit square; with every
    # sub-boundary held at 1 the decomposition is exact, so independent
    # solves of one half-square agree with the rescaled full solve up to
    # discretization.
    ts = geometric_grid(2e-4, 2e-3, 6)
    half = 0.5 * SQUARE
    e_half = solve_heat_content(HeatProblem(region=half), h=1e-3,
                                save_times=ts)
    e_full = solve_heat_content(HeatProblem(region=SQUARE), h=2e-3,
                                save_times=4 * ts)
    union = 4 * e_half.vals           # E of the 4-square union
    predicted = e_full.vals           # = 4 * (1/4) E(4t)
    rel = np.abs(union - predicted) / predicted
    assert rel.max() < 0.01


def test_rotation_invariance_of_content():
    ang = 0.35
    rot = np.array([[np.cos(ang), -np.sin(ang)],
                    [np.sin(ang), np.cos(ang)]])
    ts = geometric_grid(5e-4, 5e-3, 5)
    e1 = solve_heat_content(HeatProblem(region=SQUARE), h=2.5e-3,
                            save_times=ts)
    e2 = solve_heat_content(HeatProblem(region=SQUARE @ rot.T), h=2.5e-3,
                            save_times=ts)
    rel = np.abs(e1.vals - e2.vals) / e1.vals
    assert rel.max() < 0.02


def test_decomposition_remainder_small_level():
    ts = np.array([1e-3, 2e-3, 3e-3])
    rem = decomposition_remainder(GKCParams(3, 1 / 3), 2, ts, h=4e-3)
    assert np.isfinite(rem.meta["linear_bound_fit"])
    # contents tend to zero with t, so the remainder does too
    assert np.all(np.abs(rem.vals) < 0.2)


def test_decomposition_remainder_resolution_guard():
    with pytest.raises(ResolutionError):
        decomposition_remainder(GKCParams(3, 1 / 3), 2, [1e-6], h=4e-3)


def test_heat_refuses_unverified_region():
    with pytest.raises(GeometryError):
        decomposition_remainder(GKCParams(6, 0.3), 2, [1e-3], h=4e-3)


def test_exponent_fit_pure_power():
    ts = geometric_grid(1e-4, 1e-2, 24)
    content = SampledFunction(ts, 0.8 * ts ** 0.4)
    assert heat_exponent_fit(content, (1e-4, 1e-2)) == \
        pytest.approx(0.4, abs=1e-3)


def test_exponent_fit_square_is_half(square_oracle):
    ts = geometric_grid(1e-4, 1e-2, 24)
    content = SampledFunction(ts, square_oracle(ts))
    p = heat_exponent_fit(content, (1e-4, 1e-2))
    assert abs(p - 0.5) < 0.05


def test_diffusivity_rescales_time(square_oracle):
    # E_C(t) = E_1(C t): check via the oracle at C = 2
    ts = geometric_grid(1e-4, 1e-3, 5)
    assert np.allclose(square_oracle(2 * ts), square_oracle(2 * ts))
    e = solve_heat_content(HeatProblem(region=SQUARE, diffusivity=2.0),
                           h=4e-3, save_times=2 * ts)
    rel = np.abs(e.vals - square_oracle(2 * ts)) / square_oracle(2 * ts)
    assert rel.max() < 0.01
