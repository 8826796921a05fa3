import math

import numpy as np
import pytest

from bfo.engine import NUM_PARTIALS, OscillatorState, _osc_block
from bfo import cordic
from bfo.fxp import U0_32, quantize
from bfo.metrology import (DEFAULT_PEAK, GOLDEN_SINAD_DB, PRESET_KINDS,
                           WelchConfig, preset, sinad_vs_reference,
                           spectrum_to_csv, thdn, welch_psd)

FS = 96000.0


def sine(f, n, amp=0.9, fs=FS, phase=0.3):
    t = np.arange(n)
    return amp * np.sin(2 * np.pi * f * t / fs + phase)


class TestWelchPsd:
    def test_peak_bin_at_tone(self):
        # bin-centered tone: fs/fft_size * 512
        f = FS / (1 << 14) * 512
        est = welch_psd(sine(f, 1 << 16), fs=FS)
        assert np.argmax(est.power_db) == 512
        assert est.power_db[512] == 0.0
        assert est.freqs.size == (1 << 13) + 1

    def test_dc_buffer(self):
        est = welch_psd(np.ones(1 << 15), fs=FS)
        assert np.argmax(est.power_db) == 0

    def test_white_noise_flat(self):
        rng = np.random.default_rng(21)
        est = welch_psd(rng.standard_normal(1 << 20), fs=FS)
        mid = est.power_db[10:8000]
        assert mid.max() - mid.min() <= 6.0  # +/-3 dB around flat

    def test_parseval_single_segment(self):
        rng = np.random.default_rng(22)
        x = rng.standard_normal(1 << 14)
        est = welch_psd(x, fs=FS)
        win = np.hanning(1 << 14)
        want = np.mean((x * win) ** 2)
        assert est.power.sum() == pytest.approx(want, rel=1e-9)

    def test_scale_covariance_and_invariance(self):
        x = sine(997.0, 1 << 16)
        a = welch_psd(x, fs=FS)
        b = welch_psd(8.0 * x, fs=FS)
        assert b.power == pytest.approx(64.0 * a.power, rel=1e-12)
        assert np.array_equal(a.power_db, b.power_db)

    def test_short_buffer_rejected(self):
        with pytest.raises(ValueError):
            welch_psd(np.zeros(100))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            WelchConfig(window="hamming")
        with pytest.raises(ValueError):
            WelchConfig(overlap=1.0)

    def test_csv_output(self, tmp_path):
        est = welch_psd(sine(1000.0, 1 << 15), fs=FS)
        path = tmp_path / "psd.csv"
        spectrum_to_csv(est, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "frequency_hz,power_db"
        assert len(lines) == 1 + est.freqs.size
        f0, p0 = lines[1].split(",")
        assert float(f0) == 0.0 and float(p0) <= 0.0


class TestThdn:
    def test_pure_sine_floor(self):
        report = thdn(sine(1000.0, 1 << 16), 1000.0, FS)
        assert report.value_db <= -250.0
        assert report.kind == "THD+N"
        assert report.fundamental_hz == pytest.approx(1000.0, abs=1e-3)

    def test_two_tone_ratio(self):
        x = sine(1000.0, 1 << 16) + sine(3000.0, 1 << 16, amp=0.009)
        report = thdn(x, 1000.0, FS)
        assert report.value_db == pytest.approx(-40.0, abs=0.1)

    def test_scale_invariance(self):
        x = sine(1000.0, 1 << 16) + sine(3000.0, 1 << 16, amp=0.0009)
        a = thdn(x, 1000.0, FS).value_db
        b = thdn(100.0 * x, 1000.0, FS).value_db
        assert a == pytest.approx(b, abs=1e-9)

    def test_detuned_fundamental_recovered(self):
        # 0.4 Hz off nominal: the refinement search must absorb it
        x = sine(1000.4, 1 << 16)
        report = thdn(x, 1000.0, FS)
        assert report.value_db <= -200.0
        assert report.fundamental_hz == pytest.approx(1000.4, abs=1e-2)

    def test_unresolvable_f0(self):
        with pytest.raises(ValueError):
            thdn(sine(5.0, 1 << 15), 5.0, FS)
        with pytest.raises(ValueError):
            thdn(sine(100.0, 1 << 15), FS / 2, FS)

    def test_quantized_24bit_noise(self):
        x = np.round(sine(1000.0, 1 << 16) * 2**23) / 2**23
        report = thdn(x, 1000.0, FS)
        assert report.value_db == pytest.approx(-146.0, abs=3.0)


class TestSinad:
    def test_identical_buffers_exact(self):
        x = sine(440.0, 4096)
        report = sinad_vs_reference(x, x)
        assert report.exact and math.isinf(report.value_db)

    def test_gain_alignment(self):
        # pure gain difference is absorbed by the LS alignment
        # (power-of-two gain so the scaling is float-exact)
        x = sine(440.0, 4096)
        report = sinad_vs_reference(4.0 * x, x)
        assert report.exact

    def test_known_error_power(self):
        rng = np.random.default_rng(31)
        r = sine(440.0, 1 << 15)
        noise = rng.standard_normal(r.size)
        noise -= (noise @ r) / (r @ r) * r    # orthogonal to the reference
        noise *= math.sqrt(r @ r / (noise @ noise)) * 1e-3
        report = sinad_vs_reference(r + noise, r)
        assert report.value_db == pytest.approx(60.0, abs=0.01)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            sinad_vs_reference(np.zeros(10), np.zeros(11))

    def test_silent_reference(self):
        with pytest.raises(ValueError):
            sinad_vs_reference(np.ones(16), np.zeros(16))


class TestPresets:
    def test_sine_single_pair(self):
        t = preset("sine")
        nz = np.nonzero((t.a != 0) | (t.b != 0))[0]
        assert list(nz) == [0]
        assert t.n[0] == 1 << 16

    def test_sawtooth_highest_harmonic(self):
        # at f=20 Hz every harmonic up to n=1024 (20480 Hz) passes the gate
        t = preset("sawtooth")
        delta = quantize(20.0 / FS, U0_32).raw
        prod = np.uint64(delta) * t.n.astype(np.uint64)
        gated = prod < (np.uint64(1) << np.uint64(47))
        assert gated.all()
        assert t.n[-1] == 1024 << 16
        assert (t.n[-1] >> 16) * 20.0 == 20480.0

    @pytest.mark.parametrize("kind", PRESET_KINDS)
    def test_no_clipping_at_default_amplitude(self, kind):
        osc = OscillatorState()
        osc.table = preset(kind)
        osc.delta_raw = quantize(20.0 / FS, U0_32).raw
        _, clipped = _osc_block(osc, 4800, cordic.DEFAULT_PARAMS)
        assert not clipped

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            preset("square")

    def test_max_partials_range(self):
        with pytest.raises(ValueError):
            preset("sine", max_partials=0)
        t = preset("sawtooth", max_partials=16)
        assert np.count_nonzero(t.b) == 16

    def test_peak_near_requested_amplitude(self):
        for kind in ("sine", "sawtooth", "triangle", "pulse"):
            t = preset(kind)
            osc = OscillatorState()
            osc.table = t
            osc.delta_raw = quantize(20.0 / FS, U0_32).raw
            y, _ = _osc_block(osc, 4800, cordic.DEFAULT_PARAMS)
            peak = np.abs(y).max() / 2**31
            assert 0.8 * DEFAULT_PEAK <= peak <= 1.0

    def test_goldens_present(self):
        assert set(GOLDEN_SINAD_DB) == {"super-saw", "rect-saw"}
