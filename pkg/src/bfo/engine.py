# Cycle-faithful model of one BFO chip.
#
# Two voices of four oscillators each.  Every oscillator holds a
# 1024-entry partial table (the 1024x96-bit register file) and computes
# one output sample per 1024 partial-cycles using the single-argument
# method: a 48-bit phase accumulator theta ({u,16,32}, integer part
# wrapping mod 2**16) advanced by delta each sample, with per-partial
# arguments theta_k = frac(theta * n_k) truncated to 32 bits.  Partials
# whose frequency falls outside the band-pass gate are skipped (their
# clock cycle is still consumed).  Oscillator outputs pass through
# subwave weighting, bit-crusher, rate-crusher and saturation; voices are
# weighted sums of their oscillators; a 2x2 mix matrix produces the
# stereo pair, truncated to 24 bits.  Optional first-order sigma-delta
# modulators emit 1024x-oversampled PDM bitstreams.

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import cordic
from .fxp import FixedWord, S0_31, S1_30, U0_32, U16_16, U16_32, frac_mod1, mul_full
from ._intmath import mulshift_floor

NUM_PARTIALS = 1024
NUM_VOICES = 2
OSCS_PER_VOICE = 4
MAX_SUBWAVES = 4

THETA_BITS = 48          # {u,16,32} accumulator
THETA_MASK = (1 << THETA_BITS) - 1
OUT_BITS = 24
PDM_OSR = 1024

# theta_k is computed at 32 fractional bits but enters the rotator with
# the low bits dropped; this reduced angle precision sets the engine's
# noise floor (the CORDIC itself is more precise than the chip output).
ANGLE_PORT_QF = 25
_PORT_DROP = 32 - ANGLE_PORT_QF

# Rotator outputs are rounded to the voice accumulator's LSB as they
# are summed; the accumulator is narrower than the CORDIC datapath.
# Rounding (not truncation) keeps the per-partial quantization zero-mean
# so a 1024-partial sum carries no coherent offset.
ACC_QF = 27

_S31_MAX = (1 << 31) - 1
_S31_MIN = -(1 << 31)


@dataclass
class Partial:
    """One register-file word: amplitude pair and frequency multiplier."""

    a_raw: int = 0   # {s,0,31}
    b_raw: int = 0   # {s,0,31}
    n_raw: int = 0   # {u,16,16}

    @classmethod
    def from_real(cls, a: float, b: float, n: float) -> "Partial":
        from .fxp import quantize
        return cls(quantize(a, S0_31).raw, quantize(b, S0_31).raw,
                   quantize(n, U16_16).raw)


class PartialTable:
    """1024 partials stored as parallel raw-integer arrays."""

    def __init__(self, a_raw=None, b_raw=None, n_raw=None):
        self.a = np.zeros(NUM_PARTIALS, dtype=np.int64)
        self.b = np.zeros(NUM_PARTIALS, dtype=np.int64)
        self.n = np.zeros(NUM_PARTIALS, dtype=np.int64)
        if a_raw is not None:
            self.a[:] = a_raw
        if b_raw is not None:
            self.b[:] = b_raw
        if n_raw is not None:
            self.n[:] = n_raw
        self._validate()

    def _validate(self):
        if (np.any(self.a < _S31_MIN) or np.any(self.a > _S31_MAX)
                or np.any(self.b < _S31_MIN) or np.any(self.b > _S31_MAX)
                or np.any(self.n < 0) or np.any(self.n >= 1 << 32)):
            raise ValueError("partial coefficient out of register range")

    def set_partial(self, k: int, p: Partial):
        """k is 0-based here; the memory map documents the word layout."""
        self.a[k] = p.a_raw
        self.b[k] = p.b_raw
        self.n[k] = p.n_raw
        self._validate()

    def partial(self, k: int) -> Partial:
        return Partial(int(self.a[k]), int(self.b[k]), int(self.n[k]))

    def copy(self) -> "PartialTable":
        return PartialTable(self.a, self.b, self.n)

    def __eq__(self, other):
        return (isinstance(other, PartialTable)
                and np.array_equal(self.a, other.a)
                and np.array_equal(self.b, other.b)
                and np.array_equal(self.n, other.n))


@dataclass
class Subwave:
    """A contiguous 1-based partial index range with a blend weight."""

    lo: int = 1
    hi: int = 0          # inclusive; hi < lo means empty
    weight_raw: int = 0  # {s,0,31}


@dataclass
class OscillatorState:
    table: PartialTable = field(default_factory=PartialTable)
    delta_raw: int = 0                    # {u,0,32}
    theta_raw: int = 0                    # {u,16,32} as a 48-bit integer
    band_lo_raw: int = 0                  # f_HP {u,0,32}
    band_hi_raw: int = 1 << 31            # f_LP {u,0,32}, default Nyquist
    subwave_slots: list = field(default_factory=lambda: [Subwave() for _ in range(MAX_SUBWAVES)])
    subwave_count: int = 0                # 0 = plain mode (all partials, unit weight)
    bitmask: int = 0                      # 32-bit crusher mask, 0 = identity
    rate_period: int = 1                  # sample-and-hold period, 1 = identity
    rate_hold_raw: int = 0                # held pre-saturation value, 31 frac bits
    rate_phase: int = 0                   # samples since the hold last updated
    gain_raw: int = _S31_MAX              # {s,0,31} voice-mix weight

    def active_subwaves(self) -> list:
        subs = self.subwave_slots[: self.subwave_count]
        used = np.zeros(NUM_PARTIALS, dtype=bool)
        for s in subs:
            if not (1 <= s.lo <= s.hi <= NUM_PARTIALS):
                raise ValueError(f"subwave range [{s.lo},{s.hi}] invalid")
            if used[s.lo - 1: s.hi].any():
                raise ValueError("subwave ranges overlap")
            used[s.lo - 1: s.hi] = True
        return subs


def identity_mix():
    one = 1 << 30  # 1.0 at {s,1,30}
    return [[one, 0], [0, one]]


@dataclass
class ChipState:
    voices: list = field(default_factory=lambda: [
        [OscillatorState() for _ in range(OSCS_PER_VOICE)] for _ in range(NUM_VOICES)])
    mix_raw: list = field(default_factory=identity_mix)  # 2x2 {s,1,30}
    clip_osc: list = field(default_factory=lambda: [[False] * OSCS_PER_VOICE for _ in range(NUM_VOICES)])
    clip_voice: list = field(default_factory=lambda: [False] * NUM_VOICES)
    clip_mix: list = field(default_factory=lambda: [False] * NUM_VOICES)
    pdm_integ: list = field(default_factory=lambda: [0, 0])  # {s,3,31} integrators
    sample_index: int = 0
    cycles_consumed: int = 0

    def clip_word(self) -> int:
        """Pack the sticky clip flags into one register word."""
        w = 0
        for v in range(NUM_VOICES):
            for o in range(OSCS_PER_VOICE):
                w |= int(self.clip_osc[v][o]) << (v * OSCS_PER_VOICE + o)
        w |= int(self.clip_voice[0]) << 8
        w |= int(self.clip_voice[1]) << 9
        w |= int(self.clip_mix[0]) << 10
        w |= int(self.clip_mix[1]) << 11
        return w

    def clear_clips(self):
        for v in range(NUM_VOICES):
            for o in range(OSCS_PER_VOICE):
                self.clip_osc[v][o] = False
            self.clip_voice[v] = False
            self.clip_mix[v] = False


# ---------------------------------------------------------------------------
# Scalar per-partial operations (the spec-level contract surface)

def partial_argument(theta: FixedWord, n: FixedWord) -> FixedWord:
    """theta_k = frac(theta * n_k) truncated to 32 fractional bits."""
    if theta.fmt != U16_32 or n.fmt != U16_16:
        raise ValueError("partial_argument expects {u,16,32} and {u,16,16}")
    return frac_mod1(mul_full(theta, n), 32)


def partial_gate(delta: FixedWord, n: FixedWord, band: tuple) -> bool:
    """True iff f_HP <= delta*n < f_LP, compared exactly (no rounding)."""
    lo, hi = band
    prod = delta.raw * n.raw  # delta {u,0,32} x n {u,16,16}: 48 fractional bits
    return (lo.raw << 16) <= prod < (hi.raw << 16)


# ---------------------------------------------------------------------------
# Vectorized render core

def _gate_mask(table: PartialTable, delta_raw: int, lo_raw: int, hi_raw: int):
    prod = np.uint64(delta_raw) * table.n.astype(np.uint64)
    return (prod >= np.uint64(lo_raw << 16)) & (prod < np.uint64(hi_raw << 16))


def _accumulate_partials(table, ks, delta_raw, theta0, count, params):
    """Sum of gated partials ks over a block; int64 at ACC_QF frac bits."""
    dq = params.datapath_qf
    ell = np.arange(count, dtype=np.uint64)
    theta = (np.uint64(theta0) + np.uint64(delta_raw) * ell) & np.uint64(THETA_MASK)
    acc = np.zeros(count, dtype=np.int64)
    for k in ks:
        n = np.uint64(table.n[k])
        theta_k = ((theta * n) & np.uint64(THETA_MASK)) >> np.uint64(16)
        port = ((theta_k >> np.uint64(_PORT_DROP)) << np.uint64(_PORT_DROP)).astype(np.int64)
        # rotate (a_k, -b_k): first component is a*co + b*si (Eq. 11 form)
        x, _ = cordic.rotate_raw(port, int(table.a[k]), -int(table.b[k]), params)
        acc += (x + np.int64(1 << (dq - ACC_QF - 1))) >> np.int64(dq - ACC_QF)
    return acc


def _osc_block(osc: OscillatorState, count: int, params) -> tuple:
    """Render one oscillator for a block; returns (y31 int64 array, clipped).

    Advances theta and the rate-crusher state.  y31 is the saturated
    {s,0,31} output as raw integers.
    """
    gate = _gate_mask(osc.table, osc.delta_raw, osc.band_lo_raw, osc.band_hi_raw)
    live = gate & ((osc.table.a != 0) | (osc.table.b != 0))
    theta0 = osc.theta_raw

    subs = osc.active_subwaves()
    y = np.zeros(count, dtype=np.int64)
    if osc.subwave_count == 0:
        ks = np.nonzero(live)[0]
        acc = _accumulate_partials(osc.table, ks, osc.delta_raw, theta0, count, params)
        y = acc << np.int64(31 - ACC_QF)
    else:
        for s in subs:
            ks = np.nonzero(live[s.lo - 1: s.hi])[0] + (s.lo - 1)
            acc = _accumulate_partials(osc.table, ks, osc.delta_raw, theta0, count, params)
            # narrow each subwave to 31 fractional bits before summing so
            # the blend is exactly linear in the weights
            y += mulshift_floor(acc, s.weight_raw, ACC_QF)

    osc.theta_raw = (theta0 + osc.delta_raw * count) & THETA_MASK

    # bit-crusher: force masked output bits to zero (two's complement)
    if osc.bitmask:
        y &= ~np.int64(osc.bitmask & 0xFFFFFFFF)

    # rate-crusher: sample-and-hold with an integer period
    if osc.rate_period > 1:
        idx = np.arange(count, dtype=np.int64)
        upd = (osc.rate_phase + idx) % osc.rate_period == 0
        pos = np.where(upd, idx, np.int64(-1))
        last = np.maximum.accumulate(pos)
        held = np.where(last >= 0, y[np.maximum(last, 0)], np.int64(osc.rate_hold_raw))
        osc.rate_hold_raw = int(held[-1])
        osc.rate_phase = (osc.rate_phase + count) % osc.rate_period
        y = held

    clipped = bool(np.any(y > _S31_MAX) or np.any(y < _S31_MIN))
    y = np.clip(y, _S31_MIN, _S31_MAX)
    return y, clipped


def _mix_block(chip: ChipState, count: int, params) -> tuple:
    """Render all oscillators and mix; returns (left31, right31) int64 arrays."""
    voice_out = []
    for v in range(NUM_VOICES):
        vsum = np.zeros(count, dtype=np.int64)
        for o in range(OSCS_PER_VOICE):
            osc = chip.voices[v][o]
            y, clipped = _osc_block(osc, count, params)
            if clipped:
                chip.clip_osc[v][o] = True
            vsum += mulshift_floor(y, osc.gain_raw, 31)
        if np.any(vsum > _S31_MAX) or np.any(vsum < _S31_MIN):
            chip.clip_voice[v] = True
            vsum = np.clip(vsum, _S31_MIN, _S31_MAX)
        voice_out.append(vsum)

    out = []
    for ch in range(2):
        m0, m1 = chip.mix_raw[ch]
        s = mulshift_floor(voice_out[0], m0, 30) + mulshift_floor(voice_out[1], m1, 30)
        if np.any(s > _S31_MAX) or np.any(s < _S31_MIN):
            chip.clip_mix[ch] = True
            s = np.clip(s, _S31_MIN, _S31_MAX)
        out.append(s)

    chip.sample_index += count
    chip.cycles_consumed += count * NUM_VOICES * OSCS_PER_VOICE * NUM_PARTIALS
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Public sample/stream interfaces

def osc_sample(osc: OscillatorState, params=cordic.DEFAULT_PARAMS) -> tuple:
    """One oscillator output sample as a {s,0,31} word plus its clip flag."""
    y, clipped = _osc_block(osc, 1, params)
    return FixedWord(int(y[0]), S0_31), clipped


def chip_sample(chip: ChipState, params=cordic.DEFAULT_PARAMS) -> tuple:
    """One stereo sample pair as 24-bit integers."""
    left, right = _mix_block(chip, 1, params)
    return int(left[0]) >> 8, int(right[0]) >> 8


def render(chip: ChipState, count: int, params=cordic.DEFAULT_PARAMS):
    """count stereo samples as an int32 array of shape (count, 2).

    Output words are the top 24 bits of the {s,0,31} mix outputs (the 8
    LSBs are dropped, matching the DAC-width truncation).
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return np.zeros((0, 2), dtype=np.int32)
    left, right = _mix_block(chip, count, params)
    out = np.empty((count, 2), dtype=np.int32)
    out[:, 0] = (left >> np.int64(8)).astype(np.int32)
    out[:, 1] = (right >> np.int64(8)).astype(np.int32)
    return out


@njit(cache=True)
def _sigma_delta(x31, integ0, osr):
    """First-order sigma-delta: one bit per modulator step.

    x31: input samples at 31 fractional bits, held over osr steps.
    Feedback is +/-(1 - 2**-31) full scale; the integrator is {s,3,31}.
    """
    full = np.int64((1 << 31) - 1)
    bits = np.empty(x31.size * osr, dtype=np.uint8)
    integ = integ0
    pos = 0
    for i in range(x31.size):
        x = x31[i]
        for _ in range(osr):
            fb = full if integ >= 0 else -full
            bit = np.uint8(1) if integ >= 0 else np.uint8(0)
            integ += x - fb
            bits[pos] = bit
            pos += 1
    return bits, integ


def pdm_stream(chip: ChipState, params=cordic.DEFAULT_PARAMS, count: int = 0):
    """PDM bitstreams for both channels, 1024 bits per output sample.

    Returns (left_bits, right_bits) as uint8 arrays of 0/1 values with
    length 1024*count.
    """
    if count == 0:
        return np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.uint8)
    left, right = _mix_block(chip, count, params)
    lbits, chip.pdm_integ[0] = _sigma_delta(left, np.int64(chip.pdm_integ[0]), PDM_OSR)
    rbits, chip.pdm_integ[1] = _sigma_delta(right, np.int64(chip.pdm_integ[1]), PDM_OSR)
    return lbits, rbits
