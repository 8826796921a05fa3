import numpy as np
import pytest

from bfo import metrology
from bfo.fxp import S0_31, U0_32, U16_16, quantize
from bfo.patch import PatchError, load, loads

BASIC = """
# two-voice demo
samplerate 96000
mix 1.0 0.0 0.0 1.0

[osc 0 0]
preset sawtooth
frequency 440.0
gain 0.5

[osc 1 3]
partial 1 0.25 0.0 1.0
partial 3 0.1 -0.05 3.0
frequency 100.0
band 0.0 0.25
bitmask 0x0000000f
rate-period 2
"""


class TestLoads:
    def test_basic_patch(self):
        lp = loads(BASIC)
        assert lp.samplerate == 96000.0
        osc = lp.chip.voices[0][0]
        assert np.array_equal(osc.table.b, metrology.preset("sawtooth").b)
        assert osc.delta_raw == quantize(440.0 / 96000.0, U0_32).raw
        assert osc.gain_raw == quantize(0.5, S0_31).raw

        osc2 = lp.chip.voices[1][3]
        assert osc2.table.a[0] == quantize(0.25, S0_31).raw
        assert osc2.table.n[2] == quantize(3.0, U16_16).raw
        assert osc2.band_hi_raw == quantize(0.25, U0_32).raw
        assert osc2.bitmask == 0x0F
        assert osc2.rate_period == 2

    def test_defaults(self):
        lp = loads("")
        assert lp.samplerate == 96000.0
        assert lp.chip.mix_raw == [[1 << 30, 0], [0, 1 << 30]]

    def test_preset_amplitude(self):
        lp = loads("[osc 0 0]\npreset sine\namplitude 0.5\n")
        want = metrology.preset("sine", amplitude=0.5)
        assert lp.chip.voices[0][0].table == want

    def test_subwaves(self):
        lp = loads("[osc 0 0]\npreset sawtooth\nsubwave 1 16 0.25\nsubwave 17 32 0.5\n")
        osc = lp.chip.voices[0][0]
        assert osc.subwave_count == 2
        assert (osc.subwave_slots[0].lo, osc.subwave_slots[0].hi) == (1, 16)
        assert osc.subwave_slots[1].weight_raw == quantize(0.5, S0_31).raw

    def test_comments_and_blanks(self):
        lp = loads("\n# comment\nsamplerate 48000 # trailing\n")
        assert lp.samplerate == 48000.0


class TestErrors:
    def check(self, text, line_no, fragment):
        with pytest.raises(PatchError) as exc:
            loads(text)
        assert exc.value.line_no == line_no
        assert fragment in str(exc.value)

    def test_unknown_chip_key(self):
        self.check("volume 3\n", 1, "unknown chip key")

    def test_unknown_osc_key(self):
        self.check("[osc 0 0]\nwobble 1\n", 2, "unknown oscillator key")

    def test_bad_section(self):
        self.check("[oscillator 0]\n", 1, "bad section header")

    def test_osc_out_of_range(self):
        self.check("[osc 2 0]\n", 1, "out of range")

    def test_gain_out_of_range(self):
        self.check("[osc 0 0]\ngain 1.5\n", 2, "gain")

    def test_frequency_out_of_range(self):
        self.check("samplerate 96000\n[osc 0 0]\nfrequency 96000\n", 3, "frequency")

    def test_preset_and_partials_exclusive(self):
        self.check("[osc 0 0]\npreset sine\npartial 1 0.5 0 1\n", 1, "exclusive")

    def test_unknown_preset(self):
        self.check("[osc 0 0]\npreset square\n", 2, "unknown preset")

    def test_overlapping_subwaves(self):
        self.check("[osc 0 0]\nsubwave 1 8 0.5\nsubwave 8 9 0.5\n", 1, "overlap")

    def test_too_many_subwaves(self):
        text = "[osc 0 0]\n" + "".join(
            f"subwave {8 * i + 1} {8 * i + 8} 0.1\n" for i in range(5))
        self.check(text, 6, "more than 4")

    def test_bad_bitmask(self):
        self.check("[osc 0 0]\nbitmask zz\n", 2, "bad bitmask")

    def test_bad_rate_period(self):
        self.check("[osc 0 0]\nrate-period 0\n", 2, "rate-period")


def test_load_from_file(tmp_path):
    p = tmp_path / "demo.bfo"
    p.write_text(BASIC)
    lp = load(p)
    assert lp.chip.voices[0][0].delta_raw == quantize(440.0 / 96000.0, U0_32).raw
