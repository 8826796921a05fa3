# Exact 64-bit multiply-shift primitives.
#
# numpy int64 cannot hold the full product of a wide datapath value and a
# 32-bit coefficient, so products are computed with the multiplier split
# into 16-bit halves.  With b = b_hi*2**16 + b_lo (b_hi = b >> 16 floor,
# 0 <= b_lo < 2**16) and floor shifts throughout:
#
#   floor(a*b / 2**s) == floor((a*b_hi + floor(a*b_lo / 2**16)) / 2**(s-16))
#
# which is exact for signed a and b as long as every intermediate stays
# inside int64 (requires |a| < 2**47 and s > 16).

from __future__ import annotations

import numpy as np


def mulshift_floor(a, b: int, shift: int):
    """floor(a * b / 2**shift) element-wise; a is int64 scalar/array."""
    a = np.asarray(a, dtype=np.int64)
    b_hi = np.int64(b >> 16)
    b_lo = np.int64(b & 0xFFFF)
    return (a * b_hi + ((a * b_lo) >> np.int64(16))) >> np.int64(shift - 16)


def mulshift_round(a, b: int, shift: int):
    """floor((a * b + 2**(shift-1)) / 2**shift) element-wise."""
    a = np.asarray(a, dtype=np.int64)
    b_hi = np.int64(b >> 16)
    b_lo = np.int64(b & 0xFFFF)
    low = a * b_lo + np.int64(1 << (shift - 1))
    return (a * b_hi + (low >> np.int64(16))) >> np.int64(shift - 16)
