import math

import numpy as np
import pytest

from qmimo.analytics import gamma_q0
from qmimo.channel import DimensionMismatch, LinkParams, draw_channel, transmit
from qmimo.detector import DetectionMatrix, detect, post_detection_sinr, zf_matrix, zf_matrix_quantized
from qmimo.modem import constellation, modulate
from qmimo.numerics import RngStream, SingularGram, cgauss_matrix, gram_inverse, hermitian
from qmimo.quantizer import aqnm_params, design_lloyd_max, quantize_vector


def random_h(seed, N=16, K=4):
    return cgauss_matrix(N, K, 1.0, RngStream(seed, 0))


def test_identity_channel():
    det = zf_matrix(np.eye(3, dtype=complex))
    np.testing.assert_allclose(det.A, np.eye(3), atol=1e-15)
    assert det.alpha_used == 1.0


def test_noiseless_detection_exact():
    H = random_h(1)
    x = modulate(RngStream(1, 1).generator().integers(0, 2, 16), constellation(16))
    np.testing.assert_allclose(detect(zf_matrix(H), H @ x), x, atol=1e-8)


def test_duplicate_column_singular():
    H = random_h(2)
    H[:, 3] = H[:, 1]
    with pytest.raises(SingularGram):
        zf_matrix(H)


@pytest.mark.parametrize("b", [1, 2, 3, 4, math.inf])
def test_zero_forcing_identity(b):
    for seed in range(10):
        H = random_h(seed, 40, 8)
        det = zf_matrix_quantized(H, aqnm_params(b))
        target = np.eye(8) / det.alpha_used
        assert np.max(np.abs(hermitian(det.A) @ H - target)) <= 1e-8


def test_alpha_one_matches_plain_zf():
    H = random_h(3)
    np.testing.assert_array_equal(zf_matrix_quantized(H, aqnm_params(math.inf)).A, zf_matrix(H).A)


def test_alpha_half_doubles_entries():
    from qmimo.quantizer import AqnmParams

    H = random_h(4)
    det = zf_matrix_quantized(H, AqnmParams(1, 0.5))
    np.testing.assert_array_equal(det.A, 2.0 * zf_matrix(H).A)
    assert det.alpha_used == 0.5


def test_aqnm_mean_path_recovers_symbols():
    H = random_h(5)
    params = aqnm_params(1)
    x = modulate([0, 1, 1, 1, 1, 0, 0, 0], constellation(4))
    xhat = detect(zf_matrix_quantized(H, params), params.alpha * (H @ x))
    np.testing.assert_allclose(xhat, x, atol=1e-8)


def test_detect_identity_and_dimension_check():
    y = np.array([1 + 2j, -3j])
    np.testing.assert_array_equal(detect(DetectionMatrix(np.eye(2, dtype=complex)), y), y)
    with pytest.raises(DimensionMismatch):
        detect(DetectionMatrix(np.eye(2, dtype=complex)), np.ones(3))


def test_sinr_unquantized_reduction():
    H = random_h(6, 20, 4)
    p = LinkParams(20, 4, 1.0, 0.1)
    sinr = post_detection_sinr(H, p, aqnm_params(math.inf))
    np.testing.assert_allclose(sinr, p.gamma0 / np.diag(gram_inverse(H)).real)


def test_sinr_scalar_channel():
    p = LinkParams(1, 1, 1.0, 0.25)
    assert post_detection_sinr(np.ones((1, 1), dtype=complex), p, aqnm_params(math.inf))[0] == pytest.approx(4.0)


def test_sinr_mean_matches_gamma_mean():
    p = LinkParams(100, 10, 1.0, 0.5)
    params = aqnm_params(2)
    vals = [np.mean(post_detection_sinr(draw_channel(p, RngStream(9, i)), p, params)) for i in range(1000)]
    expected = gamma_q0(1.0, 0.5, 10, params.alpha) * 91
    assert np.mean(vals) == pytest.approx(expected, rel=0.02)


@pytest.mark.parametrize("b", [2, 3])
def test_effective_noise_matches_quantized_sinr(b):
    # empirical per-user variance of x_hat - x vs 1/gamma_qk, averaged over channel draws
    p = LinkParams.from_gamma0(100, 10, 1.0)
    params = aqnm_params(b)
    spec = design_lloyd_max(b)
    c = constellation(4)
    ratios = []
    for i in range(200):
        gen = RngStream(10 + b, i).generator()
        H = draw_channel(p, gen)
        x = modulate(gen.integers(0, 2, 2 * 10 * 200), c).reshape(10, 200)
        y = transmit(H, x, p, gen)
        sigma = np.sqrt((np.sum(np.abs(H) ** 2, axis=1, keepdims=True) + p.sigma_n2) / 2)
        xhat = detect(zf_matrix_quantized(H, params), quantize_vector(y, spec, sigma))
        emp = np.mean(np.abs(xhat - x) ** 2, axis=1)
        ratios.append(emp * post_detection_sinr(H, p, params))
    assert np.mean(ratios) == pytest.approx(1.0, rel=0.10)
