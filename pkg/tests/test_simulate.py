"""Sampler laws and the determinism contract."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from sphereqv.covariance import (
    FbmSpec,
    LineGrid,
    PowerSpectrum,
    fbm_spatial_row,
    increment_gram_fl,
    kernel_fl,
)
from sphereqv.moments import exact_mean_vnl, exact_var_vnl, trace_cumulant
from sphereqv.simulate import (
    FbmTarget,
    FullField,
    PathSample,
    SampleSpec,
    SingleEll,
    batch_quadratic_variation,
    quadratic_variation,
    rep_seed_sequence,
    rep_stream_id,
    sample_f_line,
    sample_fbm_pair,
    sample_fl_line,
)
from sphereqv.specfun import harmonic_meridian_table


def _spec(target, n=16, seed=123, reps=1):
    return SampleSpec(target=target, grid=LineGrid(n), seed=seed,
                      replications=reps)


# ======================================================================
# Determinism contract
# ======================================================================

def test_batch_split_invariance():
    spec = _spec(SingleEll(4, 1.5), n=24, seed=77, reps=10)
    whole = batch_quadratic_variation(spec, 0, 10)
    assert_array_equal(whole, batch_quadratic_variation(spec, 0, 10))
    parts = np.concatenate([
        batch_quadratic_variation(spec, 0, 3),
        batch_quadratic_variation(spec, 3, 4),
        batch_quadratic_variation(spec, 7, 3),
    ])
    assert_allclose(whole, parts, rtol=1e-12)


def test_batch_split_invariance_full_field():
    sp = PowerSpectrum.power_law(1.0, 0.3, l_max=12)
    spec = _spec(FullField(sp), n=8, seed=5, reps=6)
    whole = batch_quadratic_variation(spec, 0, 6)
    # same batch bitwise; different splits only move the last ulp
    assert_array_equal(whole, batch_quadratic_variation(spec, 0, 6))
    parts = np.concatenate([batch_quadratic_variation(spec, r, 1)
                            for r in range(6)])
    assert_allclose(whole, parts, rtol=1e-12)


def test_single_path_matches_batch_value():
    spec = _spec(SingleEll(3, 0.8), n=12, seed=2024, reps=4)
    batch = batch_quadratic_variation(spec, 0, 4)
    for rep in range(4):
        rng = np.random.default_rng(rep_seed_sequence(spec, rep))
        path = sample_fl_line(3, 0.8, spec.grid, rng)
        assert_allclose(quadratic_variation(path), batch[rep], rtol=1e-10)


def test_full_field_path_matches_batch_value():
    sp = PowerSpectrum.explicit([0.5, 1.0, 0.25], l_min=2)
    spec = _spec(FullField(sp), n=10, seed=31, reps=3)
    batch = batch_quadratic_variation(spec, 0, 3)
    for rep in range(3):
        rng = np.random.default_rng(rep_seed_sequence(spec, rep))
        path = sample_f_line(sp, spec.grid, rng)
        assert_allclose(quadratic_variation(path), batch[rep], rtol=1e-10)


def test_fbm_pair_matches_batch_value():
    fspec = FbmSpec(hurst=0.6, spectrum=PowerSpectrum.single(2, 1.0),
                    times=(2.0, 1.0))
    spec = _spec(FbmTarget(fspec), n=8, seed=9, reps=2)
    batch = batch_quadratic_variation(spec, 0, 2)
    assert batch.shape == (2, 2)
    for rep in range(2):
        rng = np.random.default_rng(rep_seed_sequence(spec, rep))
        pt, ps = sample_fbm_pair(fspec, spec.grid, rng)
        assert_allclose(quadratic_variation(pt), batch[rep, 0], rtol=1e-10)
        assert_allclose(quadratic_variation(ps), batch[rep, 1], rtol=1e-10)


def test_stream_ids():
    s1 = _spec(SingleEll(5, 1.0), seed=42)
    assert rep_stream_id(s1, 3) == "42:3:5"
    s2 = _spec(FullField(PowerSpectrum.single(2, 1.0)), seed=42)
    assert rep_stream_id(s2, 0) == "42:0"


def test_draw_layout_is_degree_ascending():
    # reconstruct a full-field path from the documented layout: for each
    # degree l in ascending order, l+1 normals scaled by √C_l (m = 0) and
    # √(2 C_l) (m ≥ 1) against the normalized harmonics
    sp = PowerSpectrum.power_law(0.7, 0.4, l_max=200)  # spans a chunk boundary
    grid = LineGrid(4)
    rng = np.random.default_rng(314)
    path = sample_f_line(sp, grid, rng)

    rng2 = np.random.default_rng(314)
    want = np.zeros(grid.n + 1)
    for ell in range(1, 201):
        lam = harmonic_meridian_table(ell, grid.points)
        w = np.full(ell + 1, math.sqrt(2.0 * sp.cl(ell)))
        w[0] = math.sqrt(sp.cl(ell))
        want += (w * rng2.standard_normal(ell + 1)) @ lam
    assert_allclose(path.values, want, rtol=0, atol=1e-12)


# ======================================================================
# Sampling laws
# ======================================================================

def test_zero_spectrum_gives_zero_path():
    path = sample_fl_line(3, 0.0, LineGrid(8), np.random.default_rng(0))
    assert_array_equal(path.values, np.zeros(9))


def test_two_point_covariance_law():
    ell, n, b = 1, 8, 200000
    grid = LineGrid(n)
    rng = np.random.default_rng(5150)
    lam = harmonic_meridian_table(ell, grid.points)
    w = np.full(ell + 1, math.sqrt(2.0))
    w[0] = 1.0
    paths = rng.standard_normal((b, ell + 1)) @ (w[:, None] * lam)
    emp = paths.T @ paths / b
    want = kernel_fl(ell, 1.0, grid.points[:, None], grid.points[None, :])
    se = np.sqrt((np.outer(np.diag(want), np.diag(want)) + want ** 2) / b)
    assert np.max(np.abs(emp - want) / se) < 5.0


def test_increment_covariance_law():
    ell, n, b = 6, 8, 200000
    grid = LineGrid(n)
    rng = np.random.default_rng(616)
    lam = harmonic_meridian_table(ell, grid.points)
    w = np.full(ell + 1, math.sqrt(2.0))
    w[0] = 1.0
    d = np.diff(rng.standard_normal((b, ell + 1)) @ (w[:, None] * lam), axis=1)
    emp = d.T @ d / b
    want = increment_gram_fl(ell, 1.0, grid).sigma
    se = np.sqrt((np.outer(np.diag(want), np.diag(want)) + want ** 2) / b)
    assert np.max(np.abs(emp - want) / se) < 5.0


def test_quadratic_variation_moments_law():
    spec = _spec(SingleEll(3, 1.0), n=32, seed=8811, reps=100000)
    v = batch_quadratic_variation(spec, 0, spec.replications)
    gram = increment_gram_fl(3, 1.0, spec.grid)
    mean, var = exact_mean_vnl(3, 1.0, 32), exact_var_vnl(gram)
    assert abs(v.mean() - mean) < 4.0 * math.sqrt(var / v.size)
    # sample-variance band from the exact fourth cumulant
    k4 = trace_cumulant(gram, 4)
    se_var = math.sqrt((k4 + 2 * var ** 2) / v.size)
    assert abs(v.var(ddof=1) - var) < 5.0 * se_var


def test_full_field_pointwise_variance_law():
    sp = PowerSpectrum.power_law(1.0, 0.2, l_max=64)
    spec = _spec(FullField(sp), n=16, seed=3030, reps=1)
    b = 30000
    gens = [np.random.default_rng(rep_seed_sequence(spec, r)) for r in range(b)]
    from sphereqv.simulate import _field_paths_batch
    paths = _field_paths_batch(sp, spec.grid, gens)
    ells = sp.degrees()
    want = float(np.sum(sp.cl(ells) * (2 * ells + 1) / (4 * math.pi)))
    emp = paths.var(axis=0, ddof=1)
    se = want * math.sqrt(2.0 / b)
    assert np.max(np.abs(emp - want)) < 5.0 * se


def test_fbm_marginal_scales_as_time_power():
    h, t, s = 0.3, 2.0, 1.0
    fspec = FbmSpec(hurst=h, spectrum=PowerSpectrum.explicit([0.8, 0.4], l_min=1),
                    times=(t, s))
    spec = _spec(FbmTarget(fspec), n=16, seed=99, reps=4000)
    v = batch_quadratic_variation(spec, 0, spec.replications)
    ratio = v[:, 0].mean() / v[:, 1].mean()
    want = (t / s) ** (2 * h)
    assert abs(ratio / want - 1) < 0.1
    # time-t marginal mean equals the trace of the scaled spatial Gram
    from scipy.linalg import toeplitz
    spatial = toeplitz(fbm_spatial_row(fspec.spectrum, spec.grid))
    mean_t = t ** (2 * h) * np.trace(spatial)
    var_t = 2.0 * np.sum((t ** (2 * h) * spatial) ** 2)
    assert abs(v[:, 0].mean() - mean_t) < 4.0 * math.sqrt(var_t / v.shape[0])


def test_fbm_rescaled_quadratic_variations_share_one_law():
    h = 0.7
    fspec = FbmSpec(hurst=h, spectrum=PowerSpectrum.single(3, 1.0),
                    times=(2.0, 1.0))
    spec = _spec(FbmTarget(fspec), n=12, seed=4242, reps=3000)
    a = batch_quadratic_variation(spec, 0, 1500)[:, 0] / 2.0 ** (2 * h)
    b = batch_quadratic_variation(spec, 1500, 1500)[:, 1]  # disjoint reps
    assert stats.ks_2samp(a, b).pvalue > 1e-3


# ======================================================================
# Quadratic variation and validation
# ======================================================================

def test_quadratic_variation_values():
    assert quadratic_variation(PathSample(values=np.ones(5))) == 0.0
    assert quadratic_variation([0.0, 1.0, 0.0]) == 2.0
    with pytest.raises(ValueError):
        quadratic_variation([1.0])


def test_path_sample_validation():
    with pytest.raises(ValueError):
        PathSample(values=np.array([1.0]))
    with pytest.raises(ValueError):
        PathSample(values=np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        PathSample(values=np.ones((2, 2)))
    assert len(PathSample(values=np.zeros(4))) == 4


def test_sample_spec_validation():
    grid = LineGrid(4)
    with pytest.raises(TypeError):
        SampleSpec(target="field", grid=grid, seed=1)
    with pytest.raises(ValueError):
        SampleSpec(target=SingleEll(1, 1.0), grid=grid, seed=-1)
    with pytest.raises(ValueError):
        SampleSpec(target=SingleEll(1, 1.0), grid=grid, seed=2 ** 64)
    with pytest.raises(ValueError):
        SampleSpec(target=SingleEll(1, 1.0), grid=grid, seed=1, replications=0)
    with pytest.raises(ValueError):
        SingleEll(0, 1.0)
    with pytest.raises(ValueError):
        SingleEll(2, -1.0)


def test_batch_rejects_empty_range():
    spec = _spec(SingleEll(1, 1.0))
    with pytest.raises(ValueError):
        batch_quadratic_variation(spec, 0, 0)
