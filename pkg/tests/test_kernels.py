import numpy as np
import pytest

from remixsep import kernels


@pytest.fixture
def arrays():
    rng = np.random.default_rng(42)
    a = rng.standard_normal((2, 3000))
    b = rng.standard_normal((2, 3000))
    return a, b


def test_numpy_and_active_backend_agree(arrays):
    a, b = arrays
    assert np.allclose(kernels.blend_arrays(a, b, 0.3), kernels._np_blend(a, b, 0.3))
    assert kernels.mean_sq(a) == pytest.approx(kernels._np_mean_sq(a), rel=1e-12)
    assert kernels.mean_sq_diff(a, b) == pytest.approx(kernels._np_mean_sq_diff(a, b), rel=1e-12)
    sig, err = kernels.energy_pair(a, b)
    sig_np, err_np = kernels._np_energy_pair(a, b)
    assert sig == pytest.approx(sig_np, rel=1e-12)
    assert err == pytest.approx(err_np, rel=1e-12)
    stats = kernels.sisnr_stats(np.ascontiguousarray(a[0]), np.ascontiguousarray(b[0]))
    stats_np = kernels._np_sisnr_stats(a[0], b[0])
    assert stats == pytest.approx(stats_np, rel=1e-9)


def test_blend_r1_is_bit_exact(arrays):
    a, b = arrays
    assert np.array_equal(kernels.blend_arrays(a, b, 1.0), a)
    assert np.array_equal(kernels._np_blend(a, b, 1.0), a)
    if kernels.HAS_NUMBA:
        assert np.array_equal(kernels._nb_blend(a, b, 1.0), a)


def test_blend_r0_is_bit_exact(arrays):
    a, b = arrays
    assert np.array_equal(kernels.blend_arrays(a, b, 0.0), b)


def test_overlap_add_matches_numpy_path():
    rng = np.random.default_rng(7)
    frames = rng.standard_normal((9, 64))
    window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(64) / 64)
    acc, wsq = kernels.overlap_add(frames, window, 32)
    acc_np, wsq_np = kernels._np_overlap_add(frames, window, 32)
    assert acc.shape == (64 + 8 * 32,)
    assert np.allclose(acc, acc_np)
    assert np.allclose(wsq, wsq_np)


def test_overlap_add_empty():
    acc, wsq = kernels.overlap_add(np.zeros((0, 64)), np.ones(64), 32)
    assert acc.size == 0 and wsq.size == 0


def test_mean_sq_reductions():
    a = np.array([[1.0, -1.0, 3.0]])
    assert kernels.mean_sq(a) == pytest.approx(11.0 / 3.0)
    assert kernels.mean_sq_diff(a, a) == 0.0
