# Line-oriented patch file format.
#
# A patch configures one chip.  Blank lines and '#' comments are
# ignored.  Chip-level keys come first; each oscillator is introduced by
# a section header '[osc VOICE OSC]' with VOICE in 0..1 and OSC in 0..3.
#
#   samplerate 96000
#   mix 1.0 0.0 0.0 1.0          # m00 m01 m10 m11, each in [-2, 2)
#
#   [osc 0 0]
#   preset sawtooth              # or explicit 'partial' lines
#   frequency 440.0              # Hz, 0 <= f < samplerate
#   amplitude 0.99609375         # optional preset peak, default 1 - 2^-8
#   band 0.0 0.5                 # f_HP f_LP, normalized to samplerate
#   gain 1.0                     # voice-mix weight, [-1, 1)
#   bitmask 0x000000ff           # crusher mask, raw hex
#   rate-period 4                # sample-and-hold period, >= 1
#   subwave 1 256 0.25           # first last weight, up to 4 lines
#   partial 3 0.5 0.0 3.0        # k a b n (k is 1-based)
#
# Unknown keys are rejected.  Every numeric field is validated against
# its register's Q-format range at load time.

from __future__ import annotations

from dataclasses import dataclass

from .engine import (ChipState, MAX_SUBWAVES, NUM_PARTIALS, NUM_VOICES,
                     OSCS_PER_VOICE, Subwave)
from .fxp import S0_31, S1_30, U0_32, U16_16, quantize_ex
from . import metrology


class PatchError(ValueError):
    """Patch file rejected; message carries the line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class LoadedPatch:
    chip: ChipState
    samplerate: float


def _quantize_field(line_no, value, fmt, what):
    word, saturated = quantize_ex(value, fmt)
    if saturated:
        raise PatchError(line_no, f"{what} {value!r} outside {fmt} range")
    return word.raw


def _parse_floats(line_no, parts, n, what):
    if len(parts) != n:
        raise PatchError(line_no, f"{what} expects {n} values, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError as e:
        raise PatchError(line_no, f"{what}: {e}") from None


def loads(text: str) -> LoadedPatch:
    chip = ChipState()
    samplerate = 96000.0
    osc = None
    osc_line = 0
    pending = []  # (line_no, key, parts) for the current oscillator

    def flush_osc():
        if osc is None:
            return
        preset_name = None
        amplitude = metrology.DEFAULT_PEAK
        partials = []
        freq_line = None
        subwaves = []
        for line_no, key, parts in pending:
            if key == "preset":
                if len(parts) != 1:
                    raise PatchError(line_no, "preset expects one name")
                if parts[0] not in metrology.PRESET_KINDS:
                    raise PatchError(line_no, f"unknown preset {parts[0]!r}")
                preset_name = parts[0]
            elif key == "amplitude":
                amplitude, = _parse_floats(line_no, parts, 1, "amplitude")
                if not (0.0 < amplitude <= 1.0):
                    raise PatchError(line_no, "amplitude must be in (0, 1]")
            elif key == "frequency":
                f, = _parse_floats(line_no, parts, 1, "frequency")
                if not (0.0 <= f < samplerate):
                    raise PatchError(line_no, f"frequency {f} outside [0, samplerate)")
                freq_line = (line_no, f)
            elif key == "band":
                lo, hi = _parse_floats(line_no, parts, 2, "band")
                osc.band_lo_raw = _quantize_field(line_no, lo, U0_32, "band f_HP")
                osc.band_hi_raw = _quantize_field(line_no, hi, U0_32, "band f_LP")
            elif key == "gain":
                g, = _parse_floats(line_no, parts, 1, "gain")
                osc.gain_raw = _quantize_field(line_no, g, S0_31, "gain")
            elif key == "bitmask":
                if len(parts) != 1:
                    raise PatchError(line_no, "bitmask expects one value")
                try:
                    mask = int(parts[0], 0)
                except ValueError:
                    raise PatchError(line_no, f"bad bitmask {parts[0]!r}") from None
                if not (0 <= mask < 1 << 32):
                    raise PatchError(line_no, "bitmask must fit in 32 bits")
                osc.bitmask = mask
            elif key == "rate-period":
                if len(parts) != 1 or not parts[0].isdigit():
                    raise PatchError(line_no, "rate-period expects a positive integer")
                period = int(parts[0])
                if period < 1:
                    raise PatchError(line_no, "rate-period must be >= 1")
                osc.rate_period = period
            elif key == "subwave":
                if len(subwaves) >= MAX_SUBWAVES:
                    raise PatchError(line_no, f"more than {MAX_SUBWAVES} subwaves")
                lo_s, hi_s, w_s = (parts + ["", "", ""])[:3]
                if len(parts) != 3 or not (lo_s.isdigit() and hi_s.isdigit()):
                    raise PatchError(line_no, "subwave expects: first last weight")
                w = _parse_floats(line_no, [w_s], 1, "subwave weight")[0]
                sub = Subwave(int(lo_s), int(hi_s),
                              _quantize_field(line_no, w, S0_31, "subwave weight"))
                if not (1 <= sub.lo <= sub.hi <= NUM_PARTIALS):
                    raise PatchError(line_no, f"subwave range [{sub.lo},{sub.hi}] invalid")
                subwaves.append(sub)
            elif key == "partial":
                vals = _parse_floats(line_no, parts, 4, "partial")
                k = int(vals[0])
                if not (1 <= k <= NUM_PARTIALS) or vals[0] != k:
                    raise PatchError(line_no, f"partial index {parts[0]} invalid")
                if vals[3] < 0:
                    raise PatchError(line_no, "partial multiplier must be >= 0")
                partials.append((line_no, k, vals[1], vals[2], vals[3]))
            else:
                raise PatchError(line_no, f"unknown oscillator key {key!r}")
        if preset_name is not None and partials:
            raise PatchError(osc_line, "preset and explicit partials are exclusive")
        if preset_name is not None:
            osc.table = metrology.preset(preset_name, amplitude=amplitude)
        for line_no, k, a, b, n in partials:
            osc.table.a[k - 1] = _quantize_field(line_no, a, S0_31, "partial a")
            osc.table.b[k - 1] = _quantize_field(line_no, b, S0_31, "partial b")
            osc.table.n[k - 1] = _quantize_field(line_no, n, U16_16, "partial n")
        if freq_line is not None:
            line_no, f = freq_line
            osc.delta_raw = _quantize_field(line_no, f / samplerate, U0_32, "frequency")
        for i, sub in enumerate(subwaves):
            osc.subwave_slots[i] = sub
        osc.subwave_count = len(subwaves)
        try:
            osc.active_subwaves()
        except ValueError as e:
            raise PatchError(osc_line, str(e)) from None

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            flush_osc()
            parts = line.strip("[]").split()
            if len(parts) != 3 or parts[0] != "osc":
                raise PatchError(line_no, f"bad section header {line!r}")
            try:
                v, o = int(parts[1]), int(parts[2])
            except ValueError:
                raise PatchError(line_no, f"bad section header {line!r}") from None
            if not (0 <= v < NUM_VOICES and 0 <= o < OSCS_PER_VOICE):
                raise PatchError(line_no, f"oscillator [{v} {o}] out of range")
            osc = chip.voices[v][o]
            osc_line = line_no
            pending = []
            continue
        key, *parts = line.split()
        if osc is None:
            if key == "samplerate":
                samplerate, = _parse_floats(line_no, parts, 1, "samplerate")
                if samplerate <= 0:
                    raise PatchError(line_no, "samplerate must be positive")
            elif key == "mix":
                vals = _parse_floats(line_no, parts, 4, "mix")
                for i, v in enumerate(vals):
                    chip.mix_raw[i // 2][i % 2] = _quantize_field(line_no, v, S1_30, "mix entry")
            else:
                raise PatchError(line_no, f"unknown chip key {key!r}")
        else:
            pending.append((line_no, key, parts))
    flush_osc()
    return LoadedPatch(chip=chip, samplerate=samplerate)


def load(path) -> LoadedPatch:
    with open(path, "r") as f:
        return loads(f.read())
