import numpy as np
import pytest

from qmimo.channel import DimensionMismatch, LinkParams, draw_channel, transmit
from qmimo.modem import constellation, modulate
from qmimo.numerics import RngStream, gram_inverse


def test_link_params_validation():
    with pytest.raises(ValueError):
        LinkParams(N=4, K=5)
    with pytest.raises(ValueError):
        LinkParams(N=4, K=2, sigma_n2=0.0)
    p = LinkParams.from_gamma0(100, 10, 20.0)
    assert p.gamma0 == pytest.approx(20.0)
    assert p.rx_power == pytest.approx(10.05)


def test_draw_channel_deterministic():
    p = LinkParams(8, 2)
    np.testing.assert_array_equal(draw_channel(p, RngStream(1, 2)), draw_channel(p, RngStream(1, 2)))
    assert draw_channel(p, RngStream(1, 2)).shape == (8, 2)


def test_received_power_per_antenna():
    p = LinkParams(100, 10, 1.0, 0.5)
    c = constellation(16)
    powers = []
    for i in range(10_000):
        gen = RngStream(3, i).generator()
        H = draw_channel(p, gen)
        x = modulate(gen.integers(0, 2, 40), c)
        powers.append(np.mean(np.abs(transmit(H, x, p, gen)) ** 2))
    assert np.mean(powers) == pytest.approx(p.K * p.sigma_x2 + p.sigma_n2, rel=0.02)


def test_inverse_gram_mean():
    p = LinkParams(100, 10)
    vals = [np.mean(1 / np.diag(gram_inverse(draw_channel(p, RngStream(4, i)))).real) for i in range(2000)]
    assert np.mean(vals) == pytest.approx(91.0, abs=1.0)


def test_noiseless_limit():
    p = LinkParams(16, 4, 1.0, 1e-30)
    gen = RngStream(5, 0).generator()
    H = draw_channel(p, gen)
    x = modulate(gen.integers(0, 2, 8), constellation(4))
    np.testing.assert_allclose(transmit(H, x, p, gen), H @ x, atol=1e-12)


def test_identity_channel_statistics():
    p = LinkParams(2, 2, 4.0, 0.25)
    x = np.array([2.0, 0.0])
    ys = np.array([transmit(np.eye(2, dtype=complex), x, p, RngStream(6, i)) for i in range(20_000)])
    assert np.mean(ys[:, 0]).real == pytest.approx(2.0, abs=0.02)
    assert np.var(ys[:, 0]) == pytest.approx(0.25, rel=0.05)


def test_block_transmit_shape():
    p = LinkParams(8, 3)
    H = draw_channel(p, RngStream(0, 0))
    assert transmit(H, np.ones((3, 5)), p, RngStream(0, 1)).shape == (8, 5)


def test_dimension_mismatch():
    p = LinkParams(8, 3)
    H = draw_channel(p, RngStream(0, 0))
    with pytest.raises(DimensionMismatch):
        transmit(H, np.ones(4), p, RngStream(0, 1))


def test_linear_in_symbols():
    p = LinkParams(12, 3)
    H = draw_channel(p, RngStream(7, 0))
    rng = lambda: RngStream(7, 1)  # noqa: E731 same noise for every call
    x1 = np.array([1 + 1j, -1, 0.5j])
    x2 = np.array([0.2, 1j, -1 - 1j])
    n = transmit(H, np.zeros(3), p, rng())
    lhs = transmit(H, x1 + x2, p, rng())
    rhs = transmit(H, x1, p, rng()) + transmit(H, x2, p, rng()) - n
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_noise_uncorrelated_across_trials():
    p = LinkParams(1, 1)
    zero = np.zeros(1)
    a = np.array([transmit(np.ones((1, 1)), zero, p, RngStream(8, 2 * i))[0] for i in range(100_000)])
    b = np.array([transmit(np.ones((1, 1)), zero, p, RngStream(8, 2 * i + 1))[0] for i in range(100_000)])
    corr = np.mean(a * np.conj(b)) / np.sqrt(np.mean(np.abs(a) ** 2) * np.mean(np.abs(b) ** 2))
    assert abs(corr) < 0.01
