import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rollcast.decomp import (
    CeemdanConfig, IMFDecomposition, IntegrityError, NotSiftableError, SiftConfig,
    ceemdan, count_zero_crossings, emd, extract_kth_mode, find_extrema, reconstruct,
    sift_one_imf,
)
from rollcast.wavesim import TimeSeries, simulate_roll

T_SINE = np.arange(1000) * 0.01
SINE = TimeSeries(np.sin(2 * np.pi * 0.5 * T_SINE), 0.01)
T_TWO = np.arange(2000) * 0.01
LOW = np.sin(2 * np.pi * 0.5 * T_TWO)
HIGH = np.sin(2 * np.pi * 5.0 * T_TWO)
TWO_TONE = TimeSeries(LOW + HIGH, 0.01)
RAMP = TimeSeries(np.linspace(0.0, 3.0, 200), 0.01)
SMALL = CeemdanConfig(ensemble_size=20)


def corr(a, b):
    return float(np.corrcoef(a, b)[0, 1])


def n_extrema(x):
    mx, mn = find_extrema(x)
    return mx.size + mn.size


class TestExtrema:
    def test_plateau_counts_once(self):
        mx, mn = find_extrema(np.array([0, 1, 1, 1, 0, -1, -1, 0.0]))
        assert mx.tolist() == [3] and mn.tolist() == [6]

    def test_flat_has_none(self):
        mx, mn = find_extrema(np.zeros(10))
        assert mx.size == mn.size == 0

    def test_zero_crossings_skip_exact_zeros(self):
        assert count_zero_crossings(np.array([1.0, 0.0, -1.0, 0.0, 0.0, 2.0])) == 2


class TestSift:
    def test_sinusoid(self):
        imf, res = sift_one_imf(SINE)
        assert corr(imf.values, SINE.values) > 0.99
        assert np.max(np.abs(res.values)) < 0.05

    def test_ramp_not_siftable(self):
        with pytest.raises(NotSiftableError):
            sift_one_imf(RAMP)

    def test_too_short(self):
        with pytest.raises(ValueError):
            sift_one_imf(TimeSeries([1.0, 2.0, 1.0]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_imf_plus_residue_is_exact(self, seed):
        x = TimeSeries(np.random.default_rng(seed).standard_normal(64))
        imf, res = sift_one_imf(x)
        assert np.max(np.abs(imf.values + res.values - x.values)) <= 1e-12


class TestEmd:
    def test_monotonic_input(self):
        d = emd(RAMP)
        assert d.n_modes == 0
        assert np.array_equal(d.residual, RAMP.values)

    def test_two_tone_first_mode(self):
        d = emd(TWO_TONE)
        assert corr(d.modes[0], HIGH) > 0.95

    def test_modes_ordered_by_zero_crossings(self):
        d = emd(simulate_roll(seed=0))
        zc = [count_zero_crossings(m) for m in d.modes]
        assert zc == sorted(zc, reverse=True)

    @pytest.mark.parametrize("seed", range(5))
    def test_near_imf_and_residual_stop(self, seed):
        d = emd(simulate_roll(seed=seed))
        for m in d.modes:
            assert abs(n_extrema(m) - count_zero_crossings(m)) <= 2
        assert n_extrema(d.residual) < 3

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_reconstruction_random(self, seed):
        x = TimeSeries(np.random.default_rng(seed).standard_normal(100))
        assert np.max(np.abs(reconstruct(emd(x)).values - x.values)) < 1e-9


class TestExtractKth:
    def test_first_on_sinusoid(self):
        assert corr(extract_kth_mode(SINE, 1).values, SINE.values) > 0.99

    def test_ramp_gives_zeros(self):
        assert np.all(extract_kth_mode(RAMP, 5).values == 0)

    def test_second_on_two_tone(self):
        assert corr(extract_kth_mode(TWO_TONE, 2).values, LOW) > 0.9

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            extract_kth_mode(SINE, 0)


class TestCeemdan:
    def test_zero_signal(self):
        d = ceemdan(TimeSeries(np.zeros(200)), SMALL)
        bound = 3 * SMALL.noise_scale * 0.0 / np.sqrt(SMALL.ensemble_size)
        assert all(np.max(np.abs(m)) <= bound for m in d.modes)
        assert np.all(d.residual == 0)

    def test_two_tone_across_seeds(self):
        counts = []
        for seed in range(5):
            d = ceemdan(TWO_TONE, CeemdanConfig(ensemble_size=20, seed=seed))
            assert corr(d.modes[0], HIGH) > 0.95
            counts.append(d.n_modes)
        assert max(counts) - min(counts) <= 2  # stable to within +-1 of the middle

    def test_determinism(self):
        x = simulate_roll(seed=3)
        a, b = ceemdan(x, SMALL), ceemdan(x, SMALL)
        assert a.components().tobytes() == b.components().tobytes()
        c = ceemdan(x, CeemdanConfig(ensemble_size=20, seed=1))
        assert not np.array_equal(a.modes[0], c.modes[0])

    def test_reconstruction_and_residual_stop(self):
        x = simulate_roll(seed=0)
        d = ceemdan(x, SMALL)
        assert np.max(np.abs(reconstruct(d).values - x.values)) < 1e-9
        assert n_extrema(d.residual) < 3

    @pytest.mark.xfail(strict=True, reason="ensemble-averaged modes are not IMFs themselves")
    def test_near_imf(self):
        d = ceemdan(simulate_roll(seed=0), SMALL)
        for m in d.modes:
            assert abs(n_extrema(m) - count_zero_crossings(m)) <= 2

    @pytest.mark.xfail(strict=True, reason="fixed-amplitude noise leaves averaged remnant "
                                          "modes whose crossings exceed earlier modes")
    def test_modes_ordered_by_zero_crossings(self):
        d = ceemdan(simulate_roll(seed=0), CeemdanConfig())
        zc = [count_zero_crossings(m) for m in d.modes]
        assert zc == sorted(zc, reverse=True)

    @pytest.mark.parametrize("kw", [{"ensemble_size": 1}, {"noise_scale": 0.0}])
    def test_config_rejected(self, kw):
        with pytest.raises(ValueError):
            CeemdanConfig(**kw)


class TestReconstruct:
    def test_zero_modes(self):
        s = np.array([1.0, -2.0, 3.0])
        d = IMFDecomposition(np.zeros((2, 3)), s, 0.1, "emd")
        assert np.array_equal(reconstruct(d).values, s)

    def test_length_mismatch(self):
        d = IMFDecomposition(np.zeros((1, 3)), np.zeros(3), 0.1, "emd")
        d.modes = np.zeros((1, 4))
        with pytest.raises(IntegrityError):
            reconstruct(d)


def test_sift_config_validation():
    with pytest.raises(ValueError):
        SiftConfig(sd_threshold=0)
