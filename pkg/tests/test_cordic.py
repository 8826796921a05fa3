import numpy as np
import pytest

from bfo.cordic import (ANGLE_QF, ATAN_TURNS_Q47, DEFAULT_PARAMS, KAPPA_QF,
                        KAPPA_RAW_Q31_M26, CordicParams, RotationPair, cosi,
                        cosi_raw, kappa_raw, quadrant_correct, rotate,
                        rotate_raw)
from bfo.fxp import FixedWord, S0_31, U0_32, quantize

DQ = DEFAULT_PARAMS.datapath_qf
DP_FMT = DEFAULT_PARAMS.datapath_fmt


def dp(x: float) -> FixedWord:
    return quantize(x, DP_FMT)


class TestConstants:
    def test_angle_table_oracle(self):
        # recompute the frozen table with an arbitrary-precision oracle
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 60
        for m, frozen in enumerate(ATAN_TURNS_Q47):
            want = int(mp.nint(mp.atan(mp.mpf(2) ** -m) / (2 * mp.pi) * 2**ANGLE_QF))
            assert frozen == want

    def test_kappa_oracle(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 60
        k = mp.mpf(1)
        for m in range(26):
            k /= mp.sqrt(1 + mp.mpf(2) ** (-2 * m))
        assert KAPPA_RAW_Q31_M26 == int(mp.nint(k * 2**KAPPA_QF))
        assert abs(float(k) - 0.6072529350088813) <= 2**-30

    def test_kappa_raw_integer_recomputation(self):
        assert kappa_raw(26) == KAPPA_RAW_Q31_M26

    def test_angle_table_strictly_decreasing(self):
        tab = ATAN_TURNS_Q47
        assert all(tab[i] > tab[i + 1] for i in range(len(tab) - 1))
        with pytest.raises(ValueError):
            CordicParams(angle_table=(5, 5, 4))


class TestQuadrantCorrect:
    def test_quarter_turn(self):
        theta = quantize(0.25, U0_32)
        residual, p = quadrant_correct(theta, RotationPair(dp(1.0), dp(0.0)))
        assert residual.raw == 0
        assert (p.p1.value, p.p2.value) == (0.0, 1.0)

    def test_identity(self):
        pair = RotationPair(dp(0.3), dp(-0.7))
        residual, p = quadrant_correct(FixedWord(0, U0_32), pair)
        assert residual.raw == 0 and p == pair

    def test_three_quarter_turns(self):
        theta = quantize(0.875, U0_32)
        residual, p = quadrant_correct(theta, RotationPair(dp(1.0), dp(0.0)))
        assert residual.exact == 0.125
        assert (p.p1.value, p.p2.value) == (0.0, -1.0)


class TestRotate:
    def test_identity_rotation(self):
        one = FixedWord(S0_31.max_raw, S0_31)
        p1, p2 = rotate(FixedWord(0, U0_32), one, FixedWord(0, S0_31))
        assert abs(p1.value - one.value) <= 2**-23
        assert abs(p2.value) <= 2**-23

    def test_eighth_turn(self):
        p1, p2 = rotate(quantize(0.125, U0_32), quantize(0.5, S0_31),
                        FixedWord(0, S0_31))
        want = 0.5 * np.sqrt(2) / 2
        assert abs(p1.value - want) <= 2**-23
        assert abs(p2.value - want) <= 2**-23

    def test_quarter_turn_swaps(self):
        a, b = quantize(0.31, S0_31), quantize(0.12, S0_31)
        nb = FixedWord(-b.raw, S0_31)
        p1, _ = rotate(quantize(0.25, U0_32), a, nb)
        assert abs(p1.value - b.value) <= 2**-23


class TestCosi:
    def test_zero(self):
        co, si = cosi(FixedWord(0, U0_32))
        assert abs(co.value - 1.0) <= 2**-23 and abs(si.value) <= 2**-23

    def test_half_turn(self):
        co, si = cosi(quantize(0.5, U0_32))
        assert abs(co.value + 1.0) <= 2**-23 and abs(si.value) <= 2**-23

    def test_third_turn(self):
        co, si = cosi(quantize(1 / 3, U0_32))
        assert abs(co.value + 0.5) <= 2**-23
        assert abs(si.value - np.sqrt(3) / 2) <= 2**-23


class TestProperties:
    def test_precision_random(self):
        rng = np.random.default_rng(5)
        th = rng.integers(0, 1 << 32, 100_000)
        x, y = cosi_raw(th)
        ang = th / 2**32 * 2 * np.pi
        err = np.maximum(np.abs(x / 2**DQ - np.cos(ang)),
                         np.abs(y / 2**DQ - np.sin(ang)))
        assert err.max() <= 2**-23

    def test_norm_preservation(self):
        rng = np.random.default_rng(6)
        p1 = rng.integers(-(1 << 31), 1 << 31, 5000)
        p2 = rng.integers(-(1 << 31), 1 << 31, 5000)
        th = rng.integers(0, 1 << 32, 5000)
        norm_in = np.hypot(p1 / 2**31, p2 / 2**31)
        keep = norm_in >= 0.25
        x, y = rotate_raw(th[keep], p1[keep], p2[keep])
        ratio = np.hypot(x / 2**DQ, y / 2**DQ) / norm_in[keep]
        assert ratio.min() >= 1 - 2**-22
        assert ratio.max() <= 1 + 2**-22

    def test_determinism(self):
        rng = np.random.default_rng(7)
        th = rng.integers(0, 1 << 32, 1000)
        x1, y1 = cosi_raw(th)
        x2, y2 = cosi_raw(th)
        assert np.array_equal(x1, x2) and np.array_equal(y1, y2)

    def test_monotone_refinement(self):
        rng = np.random.default_rng(8)
        th = rng.integers(0, 1 << 32, 20_000)
        ang = th / 2**32 * 2 * np.pi
        errs = []
        for m in range(16, 27):
            x, y = cosi_raw(th, CordicParams.for_stages(m))
            errs.append(max(np.abs(x / 2**DQ - np.cos(ang)).max(),
                            np.abs(y / 2**DQ - np.sin(ang)).max()))
        assert all(errs[i + 1] <= errs[i] for i in range(len(errs) - 1))
