# Reference generators for quality comparison.
#
# float_reference evaluates the Fourier series in double precision with
# exact (un-wrapped) angle arguments, mirroring the floating-point model
# the chip output is judged against.  iir_generate reimplements the
# prior-art approach: a marginally stable two-term recursion
# s[l] = 2cos(w)*s[l-1] - s[l-2] with quantized coefficient and state,
# reseeded from a high-precision source every restart_interval samples.

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import PartialTable, _gate_mask

# Prior-art word widths are not published; these were calibrated once so
# the 1 kHz THD+N lands at the reported -94.27 dB and then frozen.
# The multiply-accumulate truncates (coefficient rounding assumed only
# at programming time).
IIR_COEFF_QF = 23
IIR_STATE_QF = 24


@dataclass(frozen=True)
class IirOscConfig:
    freq_ratio: float                      # f / f_s, in (0, 0.5)
    coeff_qf: int = IIR_COEFF_QF
    state_qf: int = IIR_STATE_QF
    restart_interval: int = 128

    def __post_init__(self):
        if not (0.0 < self.freq_ratio < 0.5):
            raise ValueError("freq_ratio must be in (0, 0.5)")
        if self.restart_interval < 1:
            raise ValueError("restart_interval must be >= 1")


def float_reference(table: PartialTable, delta_raw: int, band, count: int):
    """Double-precision Fourier series with exact angles 2*pi*delta*n*l.

    Gating matches the engine exactly (same raw-integer comparison).
    band is (f_HP_raw, f_LP_raw) at {u,0,32}.
    """
    lo_raw, hi_raw = band
    gate = _gate_mask(table, delta_raw, lo_raw, hi_raw)
    live = gate & ((table.a != 0) | (table.b != 0))
    ks = np.nonzero(live)[0]
    ell = np.arange(count, dtype=np.float64)
    out = np.zeros(count, dtype=np.float64)
    delta = delta_raw / 2.0**32
    for k in ks:
        n = table.n[k] / 2.0**16
        a = table.a[k] / 2.0**31
        b = table.b[k] / 2.0**31
        ang = (2.0 * np.pi) * ((delta * n * ell) % 1.0)
        out += a * np.cos(ang) + b * np.sin(ang)
    return out


def iir_seed(cfg: IirOscConfig, amplitude: float, ell: int) -> int:
    """State word seeded from a double-precision sinusoid at sample ell."""
    w = 2.0 * math.pi * cfg.freq_ratio
    return round(amplitude * math.sin(w * ell) * 2**cfg.state_qf)


def iir_generate(cfg: IirOscConfig, amplitude: float, count: int):
    """Fixed-point sinusoid buffer as int64 raws at state_qf fractional bits.

    Between restarts the recursion propagates coefficient and truncation
    error; every restart_interval samples the two state words are
    re-seeded from the double-precision source.
    """
    coeff = round(2.0 * math.cos(2.0 * math.pi * cfg.freq_ratio) * 2**cfg.coeff_qf)
    out = np.zeros(count, dtype=np.int64)
    s1 = s2 = 0
    for ell in range(count):
        if ell % cfg.restart_interval == 0:
            # retrieve two consecutive high-precision samples
            s1 = iir_seed(cfg, amplitude, ell)
            s2 = iir_seed(cfg, amplitude, ell - 1)
        else:
            s1, s2 = ((coeff * s1) >> cfg.coeff_qf) - s2, s1
        out[ell] = s1
    return out


def iir_generate_float(cfg: IirOscConfig, amplitude: float, count: int):
    """iir_generate scaled to real values."""
    return iir_generate(cfg, amplitude, count) / 2.0**cfg.state_qf
