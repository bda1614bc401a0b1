import numpy as np
import pytest

from dare import build_qam
from dare.channel import ChannelModel, add_awgn, draw_channel, noise_sigma, transmit


class TestDrawChannel:
    def test_flat_unit_power(self):
        rng = np.random.default_rng(1)
        h = np.stack([draw_channel(ChannelModel("rayleigh_flat", 4, 4), rng) for _ in range(6250)])
        assert h.size == 10**5
        assert 0.99 <= np.mean(np.abs(h) ** 2) <= 1.01
        assert abs(np.mean(h**2)) < 0.01  # circular

    def test_deterministic(self):
        model = ChannelModel("rayleigh_multitap", 4, 2, taps=4)
        a = draw_channel(model, np.random.default_rng([3, 5]))
        b = draw_channel(model, np.random.default_rng([3, 5]))
        np.testing.assert_array_equal(a, b)

    def test_identity(self):
        h = draw_channel(ChannelModel("identity", 3, 2), np.random.default_rng(0))
        np.testing.assert_array_equal(h, np.eye(3, 2))

    def test_multitap_correlation(self):
        n_sc, taps = 64, 4
        model = ChannelModel("rayleigh_multitap", 2, 2, taps=taps, n_subcarriers=n_sc)
        rng = np.random.default_rng(2)
        h = np.stack([draw_channel(model, rng) for _ in range(3000)])  # (draws, sc, m, k)
        assert h.shape[1:] == (n_sc, 2, 2)
        assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.02)

        def corr(lag):
            a, b = h[:, :-lag], h[:, lag:]
            return abs(np.mean(a * b.conj())) / np.mean(np.abs(h) ** 2)

        assert corr(1) > 0.9
        # equal-power taps decorrelate at lag n_sc / taps
        assert corr(n_sc // taps) < 0.05
        expected = abs(np.mean(np.exp(-2j * np.pi * np.arange(taps) * taps / n_sc)))
        assert corr(taps) == pytest.approx(expected, abs=0.03)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "cdl", "m": 2, "k": 2},
            {"kind": "rayleigh_flat", "m": 2, "k": 2, "taps": 3},
            {"kind": "rayleigh_flat", "m": 0, "k": 2},
            {"kind": "rayleigh_multitap", "m": 2, "k": 2, "taps": 0},
        ],
    )
    def test_rejects_bad_model(self, kwargs):
        with pytest.raises(ValueError):
            ChannelModel(**kwargs)


class TestNoise:
    def test_sigma_convention(self):
        assert noise_sigma(10.0, 4) ** 2 == pytest.approx(0.4)
        assert noise_sigma(0.0, 1) == 1.0

    def test_zero_sigma(self):
        x = np.arange(4) + 1j
        np.testing.assert_array_equal(add_awgn(x, 0.0, np.random.default_rng(0)), x)

    def test_moments(self):
        sigma = 0.7
        n = add_awgn(np.zeros(10**6), sigma, np.random.default_rng(4))
        assert np.var(n) == pytest.approx(sigma**2, rel=0.01)
        assert abs(np.mean(n**2)) < 0.01 * sigma**2

    def test_reproducible(self):
        a = add_awgn(np.zeros(8), 1.0, np.random.default_rng(9))
        b = add_awgn(np.zeros(8), 1.0, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            add_awgn(np.zeros(2), -1.0, np.random.default_rng(0))


class TestTransmit:
    def test_all_plus_qpsk(self):
        c = build_qam(4)
        np.testing.assert_allclose(transmit(np.ones(2), c, 1), [(1 + 1j) / np.sqrt(2)])

    def test_round_trip_labels(self, constellation, rng):
        c = constellation
        bits = rng.choice([-1, 1], 3 * c.bits_per_symbol)
        s = transmit(bits, c, 3)
        got = np.concatenate([c.labels[c.point_index(x)] for x in s])
        np.testing.assert_array_equal(got, bits)

    def test_energy(self, rng):
        c = build_qam(16)
        s = np.concatenate([transmit(rng.choice([-1, 1], 16), c, 4) for _ in range(20000)])
        assert np.mean(np.abs(s) ** 2) == pytest.approx(1.0, abs=0.01)

    @pytest.mark.parametrize("bits", [np.ones(3), np.zeros(4)])
    def test_rejects_bad_bits(self, bits):
        with pytest.raises(ValueError):
            transmit(bits, build_qam(4), 2)
