# Turns-parameterized CORDIC rotator.
#
# Computes co(theta) = cos(2*pi*theta), si(theta) = sin(2*pi*theta) and the
# Givens rotation of an arbitrary pair in pure shift-add integer arithmetic.
# Angles are in turns, so quadrant reduction is a 2-bit field extract and
# the residual angle lives in [0, 1/4).  The micro-rotation loop drives the
# residual to zero with d_m in {-1,+1}; the constant gain kappa is applied
# as one final multiply so coefficients keep their full {s,0,31} range.

from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt

import numpy as np

from .fxp import FixedWord, QFormat, S0_31, U0_32
from ._intmath import mulshift_round

# Angle table: round(atan(2**-m) / (2*pi) * 2**47) for m = 0..25, i.e.
# micro-rotation angles in turns at {u,0,47}.  Frozen constants; the test
# suite recomputes them from an arbitrary-precision oracle.
ANGLE_QF = 47
ATAN_TURNS_Q47 = (
    17592186044416, 10385273835258, 5487293476722, 2785435848431,
    1398123104044, 699743120514, 349956943380, 174989150442,
    87495910248, 43748122008, 21874081865, 10937043540,
    5468522096, 2734261089, 1367130549, 683565275,
    341782638, 170891319, 85445659, 42722830,
    21361415, 10680707, 5340354, 2670177,
    1335088, 667544,
)

# kappa = prod_m (1 + 2**-2m)**-1/2 for M=26, rounded at {u,0,31}.
KAPPA_QF = 31
KAPPA_RAW_Q31_M26 = 1304065748

DEFAULT_STAGES = 26
# Internal datapath: {s,2,35}.  Two integer guard bits hold the sqrt(2)
# growth before the kappa correction; 35 fractional bits keep the
# accumulated truncation noise of a 1024-partial sum below the output LSB.
DEFAULT_DATAPATH_QF = 35


def kappa_raw(stages: int, qf: int = KAPPA_QF) -> int:
    """round(2**qf * prod_{m<stages} (1+2**-2m)**-1/2), integer-exact."""
    num = den = 1
    for m in range(stages):
        num *= 1 << (2 * m)
        den *= (1 << (2 * m)) + 1
    guard = 20
    v = isqrt((num << (2 * (qf + guard))) // den)
    return (v + (1 << (guard - 1))) >> guard


@dataclass(frozen=True)
class CordicParams:
    """Micro-rotation count, angle table, gain constant, datapath width."""

    stages: int = DEFAULT_STAGES
    angle_table: tuple = ATAN_TURNS_Q47
    kappa: int = KAPPA_RAW_Q31_M26
    datapath_qf: int = DEFAULT_DATAPATH_QF

    def __post_init__(self):
        if not (1 <= self.stages <= len(self.angle_table)):
            raise ValueError("stages exceeds angle table length")
        tab = self.angle_table[: self.stages]
        if any(tab[i] <= tab[i + 1] for i in range(len(tab) - 1)):
            raise ValueError("angle table must be strictly decreasing")
        if not (31 <= self.datapath_qf <= 44):
            raise ValueError("datapath_qf out of supported range")

    @classmethod
    def for_stages(cls, stages: int) -> "CordicParams":
        return cls(stages=stages, kappa=kappa_raw(stages))

    @property
    def datapath_fmt(self) -> QFormat:
        return QFormat(True, 2, self.datapath_qf)


DEFAULT_PARAMS = CordicParams()


@dataclass(frozen=True)
class RotationPair:
    """A signed coordinate pair in the internal datapath format."""

    p1: FixedWord
    p2: FixedWord


def quadrant_correct(theta: FixedWord, p: RotationPair) -> tuple[FixedWord, RotationPair]:
    """Rotate p exactly by floor(4*theta)/4 turns; return the residual angle.

    Quarter-turn rotations are coordinate swaps and negations, so this step
    introduces no arithmetic error.
    """
    if theta.fmt != U0_32:
        raise ValueError("theta must be {u,0,32} turns")
    quadrant = theta.raw >> 30
    x, y = p.p1.raw, p.p2.raw
    if quadrant == 1:
        x, y = -y, x
    elif quadrant == 2:
        x, y = -x, -y
    elif quadrant == 3:
        x, y = y, -x
    fmt = p.p1.fmt
    residual = FixedWord(theta.raw & ((1 << 30) - 1), U0_32)
    return residual, RotationPair(FixedWord(x, fmt), FixedWord(y, fmt))


def rotate_raw(theta_raw, p1_raw, p2_raw, params: CordicParams = DEFAULT_PARAMS):
    """Vectorized integer core: rotate (p1, p2) by theta turns.

    theta_raw: {u,0,32} raws (scalar or array); p1_raw, p2_raw: {s,0,31}
    raws.  Returns int64 raws in the {s,2,datapath_qf} format.  Shifts
    truncate (arithmetic right shift), matching a hardware datapath.
    """
    dq = params.datapath_qf
    th = np.asarray(theta_raw, dtype=np.int64)
    scalar = th.ndim == 0
    th = np.atleast_1d(th)
    x0 = np.atleast_1d(np.asarray(p1_raw, dtype=np.int64) << np.int64(dq - 31))
    y0 = np.atleast_1d(np.asarray(p2_raw, dtype=np.int64) << np.int64(dq - 31))

    quadrant = th >> np.int64(30)
    x = np.where(quadrant == 0, x0, 0) + np.where(quadrant == 1, -y0, 0) \
        + np.where(quadrant == 2, -x0, 0) + np.where(quadrant == 3, y0, 0)
    y = np.where(quadrant == 0, y0, 0) + np.where(quadrant == 1, x0, 0) \
        + np.where(quadrant == 2, -y0, 0) + np.where(quadrant == 3, -x0, 0)

    # residual angle in [0, 1/4) turns at {s,*,47}; driven toward zero
    z = (th & np.int64((1 << 30) - 1)) << np.int64(ANGLE_QF - 32)
    for m in range(params.stages):
        pos = z >= 0
        xs = x >> np.int64(m)
        ys = y >> np.int64(m)
        phi = np.int64(params.angle_table[m])
        x, y = np.where(pos, x - ys, x + ys), np.where(pos, y + xs, y - xs)
        z = np.where(pos, z - phi, z + phi)

    x = mulshift_round(x, params.kappa, KAPPA_QF)
    y = mulshift_round(y, params.kappa, KAPPA_QF)
    if scalar:
        return int(x[0]), int(y[0])
    return x, y


def rotate(theta: FixedWord, p1: FixedWord, p2: FixedWord,
           params: CordicParams = DEFAULT_PARAMS) -> tuple[FixedWord, FixedWord]:
    """Givens rotation of ({s,0,31}) pair by theta ({u,0,32}) turns."""
    if theta.fmt != U0_32:
        raise ValueError("theta must be {u,0,32} turns")
    if p1.fmt != S0_31 or p2.fmt != S0_31:
        raise ValueError("rotation inputs must be {s,0,31}")
    x, y = rotate_raw(theta.raw, p1.raw, p2.raw, params)
    fmt = params.datapath_fmt
    return FixedWord(x, fmt), FixedWord(y, fmt)


# Largest {s,0,31} value, used as the unit vector for cosi.
_ONE_MINUS_EPS = (1 << 31) - 1


def cosi(theta: FixedWord, params: CordicParams = DEFAULT_PARAMS) -> tuple[FixedWord, FixedWord]:
    """co(theta), si(theta) as rotate(theta, 1-2**-31, 0)."""
    return rotate(theta, FixedWord(_ONE_MINUS_EPS, S0_31), FixedWord(0, S0_31), params)


def cosi_raw(theta_raw, params: CordicParams = DEFAULT_PARAMS):
    """Vectorized cosi on raw angles; returns datapath raws."""
    return rotate_raw(theta_raw, _ONE_MINUS_EPS, 0, params)
