# Fixed-point number kernel.
#
# Every quantity inside the engine is a raw integer bit pattern plus a
# Q-format {sign, qi, qf}: qi integer bits, qf fractional bits, and one
# extra sign bit when signed.  The real value of a word is raw * 2**-qf,
# with raw interpreted two's-complement iff the format is signed.

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational


class FormatError(ValueError):
    """Operands have incompatible Q-formats."""


class WidthError(ValueError):
    """Result would exceed the supported intermediate width."""


# Widest product in the design is {u,16,32} x {u,16,16} -> 80 bits,
# so 96 fractional bits is a comfortable cap for exact intermediates.
MAX_PRODUCT_QF = 96

# Storage formats (register words) never exceed 64 bits; exact products
# may be wider and are allowed up to this limit.
MAX_WIDTH = 128
MAX_STORAGE_WIDTH = 64


@dataclass(frozen=True)
class QFormat:
    """Q-format descriptor {sign, qi, qf}."""

    signed: bool
    qi: int
    qf: int

    def __post_init__(self):
        if self.qi < 0 or self.qf < 0:
            raise FormatError(f"negative field width in {self}")
        if self.width > MAX_WIDTH:
            raise FormatError(f"{self} wider than {MAX_WIDTH} bits")

    @property
    def width(self) -> int:
        return self.qi + self.qf + (1 if self.signed else 0)

    @property
    def min_raw(self) -> int:
        return -(1 << (self.qi + self.qf)) if self.signed else 0

    @property
    def max_raw(self) -> int:
        return (1 << (self.qi + self.qf)) - 1

    @property
    def lsb(self) -> Fraction:
        return Fraction(1, 1 << self.qf)

    def __str__(self) -> str:
        return f"{{{'s' if self.signed else 'u'},{self.qi},{self.qf}}}"


# Formats used throughout the design.
S0_31 = QFormat(True, 0, 31)    # coefficients a_k, b_k, gains, weights
U16_16 = QFormat(False, 16, 16)  # frequency multipliers n_k
U0_32 = QFormat(False, 0, 32)    # delta = f/f_s, band edges, theta_k
U16_32 = QFormat(False, 16, 32)  # theta accumulator
S1_30 = QFormat(True, 1, 30)     # mix matrix entries (1.0 exactly representable)


@dataclass(frozen=True)
class FixedWord:
    """A raw bit pattern together with its Q-format."""

    raw: int
    fmt: QFormat

    def __post_init__(self):
        if not (self.fmt.min_raw <= self.raw <= self.fmt.max_raw):
            raise FormatError(f"raw {self.raw} out of range for {self.fmt}")

    @property
    def value(self) -> float:
        return self.raw / (1 << self.fmt.qf)

    @property
    def exact(self) -> Fraction:
        return Fraction(self.raw, 1 << self.fmt.qf)

    def __str__(self) -> str:
        return f"{self.value!r}{self.fmt}"


def to_real(w: FixedWord) -> Fraction:
    """Exact rational value of a word."""
    return w.exact


def _as_fraction(x) -> Fraction:
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(x)  # exact conversion for floats and ints


def quantize_ex(x, fmt: QFormat, mode: str = "round") -> tuple[FixedWord, bool]:
    """Quantize a real value; returns (word, saturated flag).

    mode 'round' is round-nearest-even; 'truncate' drops excess bits
    (floor, matching hardware bit-dropping).
    """
    scaled = _as_fraction(x) * (1 << fmt.qf)
    if mode == "round":
        n = scaled.numerator
        d = scaled.denominator
        q, r = divmod(n, d)
        # round half to even on the exact rational
        if 2 * r > d or (2 * r == d and q % 2 == 1):
            q += 1
        raw = q
    elif mode == "truncate":
        raw = scaled.numerator // scaled.denominator
    else:
        raise ValueError(f"unknown quantize mode {mode!r}")
    saturated = False
    if raw < fmt.min_raw:
        raw, saturated = fmt.min_raw, True
    elif raw > fmt.max_raw:
        raw, saturated = fmt.max_raw, True
    return FixedWord(raw, fmt), saturated


def quantize(x, fmt: QFormat, mode: str = "round") -> FixedWord:
    """Quantize a real value, saturating silently at the format limits."""
    return quantize_ex(x, fmt, mode)[0]


def add_wrap(a: FixedWord, b: FixedWord) -> FixedWord:
    """Modular addition; overflow bits beyond the format width are discarded."""
    if a.fmt.qf != b.fmt.qf or a.fmt.signed != b.fmt.signed:
        raise FormatError(f"add_wrap formats differ: {a.fmt} vs {b.fmt}")
    fmt = a.fmt
    modulus = 1 << fmt.width
    raw = (a.raw + b.raw) % modulus
    if fmt.signed and raw > fmt.max_raw:
        raw -= modulus
    return FixedWord(raw, fmt)


def mul_full(a: FixedWord, b: FixedWord) -> FixedWord:
    """Exact full-precision product; no rounding."""
    qf = a.fmt.qf + b.fmt.qf
    if qf > MAX_PRODUCT_QF:
        raise WidthError(f"product fractional width {qf} exceeds {MAX_PRODUCT_QF}")
    fmt = QFormat(a.fmt.signed or b.fmt.signed, a.fmt.qi + b.fmt.qi, qf)
    return FixedWord(a.raw * b.raw, fmt)


def frac_mod1(a: FixedWord, out_qf: int) -> FixedWord:
    """Discard integer bits, truncate the fraction to out_qf bits."""
    if a.fmt.signed:
        raise FormatError("frac_mod1 requires an unsigned operand")
    frac = a.raw & ((1 << a.fmt.qf) - 1)
    if out_qf <= a.fmt.qf:
        raw = frac >> (a.fmt.qf - out_qf)
    else:
        raw = frac << (out_qf - a.fmt.qf)
    return FixedWord(raw, QFormat(False, 0, out_qf))


def saturate_narrow(a: FixedWord, fmt: QFormat) -> tuple[FixedWord, bool]:
    """Clamp to fmt's range; excess fractional bits truncated (floor)."""
    if fmt.qf <= a.fmt.qf:
        raw = a.raw >> (a.fmt.qf - fmt.qf)
    else:
        raw = a.raw << (fmt.qf - a.fmt.qf)
    clipped = False
    if raw < fmt.min_raw:
        raw, clipped = fmt.min_raw, True
    elif raw > fmt.max_raw:
        raw, clipped = fmt.max_raw, True
    return FixedWord(raw, fmt), clipped
