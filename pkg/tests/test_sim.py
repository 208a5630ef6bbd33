import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpdeconv import DegradationSpec, HsiCube, degrade, gaussian_kernel, psnr, rmse, synth_lowrank
from cpdeconv.palm import DeconvProblem
from cpdeconv.objective import RegWeights
from cpdeconv.tensor_model import DimensionMismatch, reconstruct_cube


def test_gaussian_size_one():
    np.testing.assert_array_equal(gaussian_kernel(1, 3.0), [[1.0]])


def test_gaussian_normalized_and_symmetric():
    g = gaussian_kernel(9, 2.0)
    assert g.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(g, g.T)
    np.testing.assert_array_equal(g, g[::-1, ::-1])
    assert g.argmax() == 40


def test_gaussian_corner_to_center_ratio():
    g = gaussian_kernel(3, 2.0)
    assert g[0, 0] / g[1, 1] == pytest.approx(math.exp(-0.25), rel=1e-12)


def test_gaussian_narrow_is_delta():
    assert gaussian_kernel(5, 1e-3)[2, 2] >= 1 - 1e-9


@pytest.mark.parametrize("size, sigma", [(4, 1.0), (0, 1.0), (3, 0.0)])
def test_gaussian_rejects(size, sigma):
    with pytest.raises(ValueError):
        gaussian_kernel(size, sigma)


def test_spec_validation():
    with pytest.raises(ValueError):
        DegradationSpec(spectrally_invariant=False)
    with pytest.raises(ValueError):
        DegradationSpec(noise_sigma=-0.1)


def test_degrade_identity_blur_no_noise(rng):
    clean = HsiCube(rng.uniform(size=(3, 6, 5)))
    observed, bank = degrade(clean, DegradationSpec(kernel_size=1, noise_sigma=0.0))
    np.testing.assert_allclose(observed.data, clean.data, atol=1e-12)
    assert bank.n == 3


def test_residual_vanishes_at_truth():
    clean, factors = synth_lowrank(16, 16, 4, 2, seed=3)
    observed, bank = degrade(clean, DegradationSpec(noise_sigma=0.0))
    s = DeconvProblem(observed, bank, RegWeights()).residual_terms(factors.a, factors.b, factors.c)
    assert np.abs(s).max() <= 1e-12


def test_noise_statistics():
    clean = HsiCube.zeros(128, 128, 8)
    observed, _ = degrade(clean, DegradationSpec(noise_sigma=0.01, seed=0))
    assert 0.0095 <= observed.data.std() <= 0.0105
    assert abs(observed.data.mean()) <= 1e-3


def test_degrade_deterministic_and_seeded():
    clean, _ = synth_lowrank(12, 12, 3, 2)
    spec = DegradationSpec(seed=5)
    y1, _ = degrade(clean, spec)
    y2, _ = degrade(clean, spec)
    y3, _ = degrade(clean, DegradationSpec(seed=6))
    np.testing.assert_array_equal(y1.data, y2.data)
    assert not np.array_equal(y1.data, y3.data)


def test_degrade_kernel_too_large():
    with pytest.raises(ValueError):
        degrade(HsiCube.zeros(5, 5, 2), DegradationSpec(kernel_size=9))


def test_synth_rank_and_peak():
    cube, f = synth_lowrank(20, 18, 6, 1, seed=2)
    assert cube.shape == (20, 18, 6)
    assert cube.data.max() == 1.0
    assert (cube.data >= 0).all()
    # rank one: the unfolded pixel-by-band matrix has one nonzero singular value
    sv = np.linalg.svd(cube.data.reshape(6, -1), compute_uv=False)
    assert sv[1] <= 1e-12 * sv[0]
    np.testing.assert_allclose(reconstruct_cube(f).data, cube.data, rtol=0, atol=1e-15)


def test_synth_deterministic():
    c1, f1 = synth_lowrank(10, 10, 3, 2, seed=4)
    c2, f2 = synth_lowrank(10, 10, 3, 2, seed=4)
    np.testing.assert_array_equal(c1.data, c2.data)
    np.testing.assert_array_equal(f1.a, f2.a)


def test_rmse_psnr_examples():
    ref = HsiCube.zeros(4, 4, 2)
    off = HsiCube(np.full((2, 4, 4), 0.1))
    assert rmse(ref, off) == pytest.approx(0.1, rel=1e-12)
    assert psnr(ref, off) == pytest.approx(20.0, abs=1e-9)
    assert psnr(ref, ref) == 200.0
    assert psnr(ref, HsiCube(np.full((2, 4, 4), 25.5)), peak=255.0) == pytest.approx(20.0, abs=1e-9)


def test_metric_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        rmse(HsiCube.zeros(2, 2, 2), HsiCube.zeros(2, 2, 3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5))
def test_metrics_shift_invariant(seed, shift):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(size=(2, 2, 3, 3))
    base = rmse(HsiCube(x), HsiCube(y))
    assert rmse(HsiCube(x + shift), HsiCube(y + shift)) == pytest.approx(base, rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-6, 1.0), st.floats(1.01, 10.0))
def test_psnr_decreases_with_error(e, factor):
    ref = HsiCube.zeros(2, 2, 1)
    assert psnr(ref, HsiCube(np.full((1, 2, 2), e * factor))) < psnr(ref, HsiCube(np.full((1, 2, 2), e)))
