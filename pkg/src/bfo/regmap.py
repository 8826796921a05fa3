# SPI command interface emulation.
#
# Each command is 48 bits: a 16-bit address followed by a 32-bit data
# word, framed big-endian as 6 bytes on the wire.  The address layout
# below is a documented stand-in (the real chip's map is unpublished);
# it is frozen so golden command streams stay stable.
#
# Memory map (addresses in hex):
#
#   oscillator region, one per oscillator, base = (voice*4 + osc) << 12:
#     base + 0x000 .. base + 0xBFF   wavetable, partial k at offset 3k:
#                                      +0 a_k {s,0,31}
#                                      +1 b_k {s,0,31}
#                                      +2 n_k {u,16,16}
#     base + 0xC00                   delta {u,0,32}
#     base + 0xC01                   band f_HP {u,0,32}
#     base + 0xC02                   band f_LP {u,0,32}
#     base + 0xC03                   bit-crusher mask (32 bits)
#     base + 0xC04                   rate-crusher period (>= 1)
#     base + 0xC05                   gain {s,0,31}
#     base + 0xC06                   subwave count (0..4)
#     base + 0xC07 + 3i              subwave i first partial (1-based)
#     base + 0xC08 + 3i              subwave i last partial (inclusive)
#     base + 0xC09 + 3i              subwave i weight {s,0,31}
#
#   chip region:
#     0x8000 .. 0x8003               mix matrix m00 m01 m10 m11 {s,1,30}
#     0x8010                         clip flags (read-only, clear-on-read)

from __future__ import annotations

from dataclasses import dataclass

from .engine import (ChipState, MAX_SUBWAVES, NUM_PARTIALS, NUM_VOICES,
                     OSCS_PER_VOICE)

COMMAND_BYTES = 6
COMMAND_BITS = 48

WAVETABLE_WORDS = 3 * NUM_PARTIALS      # 0xC00
REG_DELTA = 0xC00
REG_BAND_LO = 0xC01
REG_BAND_HI = 0xC02
REG_BITMASK = 0xC03
REG_RATE_PERIOD = 0xC04
REG_GAIN = 0xC05
REG_SUBWAVE_COUNT = 0xC06
REG_SUBWAVE_BASE = 0xC07                # 3 words per subwave slot
OSC_REGION_WORDS = REG_SUBWAVE_BASE + 3 * MAX_SUBWAVES

MIX_BASE = 0x8000
CLIP_FLAGS_ADDR = 0x8010


class AddressError(ValueError):
    """Unmapped register address."""


class AccessError(ValueError):
    """Write to a read-only register."""


class RegisterValueError(ValueError):
    """Data word invalid for the targeted register."""


class FramingError(ValueError):
    """Byte stream does not divide into whole 6-byte commands."""

    def __init__(self, offset: int):
        super().__init__(f"truncated command at byte offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class RegisterCommand:
    address: int
    data: int

    def __post_init__(self):
        if not (0 <= self.address < 1 << 16):
            raise ValueError("address must be a 16-bit value")
        if not (0 <= self.data < 1 << 32):
            raise ValueError("data must be a 32-bit word")


def osc_base(voice: int, osc: int) -> int:
    return (voice * OSCS_PER_VOICE + osc) << 12

def partial_address(voice: int, osc: int, k: int, word: int) -> int:
    """Address of wavetable word 0..2 (a, b, n) of 0-based partial k."""
    return osc_base(voice, osc) + 3 * k + word

def osc_reg_address(voice: int, osc: int, reg: int) -> int:
    return osc_base(voice, osc) + reg


def _to_signed32(d: int) -> int:
    return d - (1 << 32) if d >= 1 << 31 else d

def _from_signed32(v: int) -> int:
    return v + (1 << 32) if v < 0 else v


def apply(chip: ChipState, cmd: RegisterCommand) -> ChipState:
    """Apply one register write to the chip; returns the same chip."""
    addr, data = cmd.address, cmd.data
    region = addr >> 12
    if region < NUM_VOICES * OSCS_PER_VOICE:
        osc = chip.voices[region // OSCS_PER_VOICE][region % OSCS_PER_VOICE]
        off = addr & 0xFFF
        if off < WAVETABLE_WORDS:
            k, word = divmod(off, 3)
            if word == 0:
                osc.table.a[k] = _to_signed32(data)
            elif word == 1:
                osc.table.b[k] = _to_signed32(data)
            else:
                osc.table.n[k] = data
            return chip
        if off == REG_DELTA:
            osc.delta_raw = data
        elif off == REG_BAND_LO:
            osc.band_lo_raw = data
        elif off == REG_BAND_HI:
            osc.band_hi_raw = data
        elif off == REG_BITMASK:
            osc.bitmask = data
        elif off == REG_RATE_PERIOD:
            if data < 1:
                raise RegisterValueError("rate period must be >= 1")
            osc.rate_period = data
        elif off == REG_GAIN:
            osc.gain_raw = _to_signed32(data)
        elif off == REG_SUBWAVE_COUNT:
            if data > MAX_SUBWAVES:
                raise RegisterValueError(f"subwave count {data} exceeds {MAX_SUBWAVES}")
            osc.subwave_count = data
        elif REG_SUBWAVE_BASE <= off < OSC_REGION_WORDS:
            slot, word = divmod(off - REG_SUBWAVE_BASE, 3)
            sub = osc.subwave_slots[slot]
            if word == 0:
                sub.lo = data
            elif word == 1:
                sub.hi = data
            else:
                sub.weight_raw = _to_signed32(data)
        else:
            raise AddressError(f"unmapped address {addr:#06x}")
        return chip
    if MIX_BASE <= addr < MIX_BASE + 4:
        i = addr - MIX_BASE
        chip.mix_raw[i // 2][i % 2] = _to_signed32(data)
        return chip
    if addr == CLIP_FLAGS_ADDR:
        raise AccessError("clip-flag register is read-only")
    raise AddressError(f"unmapped address {addr:#06x}")


def read(chip: ChipState, address: int) -> int:
    """Read back a register word; the clip register clears on read."""
    region = address >> 12
    if region < NUM_VOICES * OSCS_PER_VOICE:
        osc = chip.voices[region // OSCS_PER_VOICE][region % OSCS_PER_VOICE]
        off = address & 0xFFF
        if off < WAVETABLE_WORDS:
            k, word = divmod(off, 3)
            v = (osc.table.a[k], osc.table.b[k], osc.table.n[k])[word]
            return _from_signed32(int(v))
        regs = {
            REG_DELTA: osc.delta_raw,
            REG_BAND_LO: osc.band_lo_raw,
            REG_BAND_HI: osc.band_hi_raw,
            REG_BITMASK: osc.bitmask,
            REG_RATE_PERIOD: osc.rate_period,
            REG_GAIN: _from_signed32(osc.gain_raw),
            REG_SUBWAVE_COUNT: osc.subwave_count,
        }
        if off in regs:
            return regs[off]
        if REG_SUBWAVE_BASE <= off < OSC_REGION_WORDS:
            slot, word = divmod(off - REG_SUBWAVE_BASE, 3)
            sub = osc.subwave_slots[slot]
            return (sub.lo, sub.hi, _from_signed32(sub.weight_raw))[word]
        raise AddressError(f"unmapped address {address:#06x}")
    if MIX_BASE <= address < MIX_BASE + 4:
        i = address - MIX_BASE
        return _from_signed32(chip.mix_raw[i // 2][i % 2])
    if address == CLIP_FLAGS_ADDR:
        word = chip.clip_word()
        chip.clear_clips()
        return word
    raise AddressError(f"unmapped address {address:#06x}")


def serialize(commands) -> bytes:
    """Encode commands as consecutive big-endian 6-byte records."""
    out = bytearray()
    for cmd in commands:
        out += cmd.address.to_bytes(2, "big")
        out += cmd.data.to_bytes(4, "big")
    return bytes(out)


def parse_stream(data: bytes):
    """Decode a byte stream into RegisterCommands."""
    if len(data) % COMMAND_BYTES != 0:
        raise FramingError(len(data) - len(data) % COMMAND_BYTES)
    cmds = []
    for i in range(0, len(data), COMMAND_BYTES):
        addr = int.from_bytes(data[i:i + 2], "big")
        word = int.from_bytes(data[i + 2:i + 6], "big")
        cmds.append(RegisterCommand(addr, word))
    return cmds


def wavetable_commands(voice: int, osc: int, table) -> list:
    """Full-wavetable programming stream: 3072 commands."""
    cmds = []
    for k in range(NUM_PARTIALS):
        cmds.append(RegisterCommand(partial_address(voice, osc, k, 0),
                                    _from_signed32(int(table.a[k]))))
        cmds.append(RegisterCommand(partial_address(voice, osc, k, 1),
                                    _from_signed32(int(table.b[k]))))
        cmds.append(RegisterCommand(partial_address(voice, osc, k, 2),
                                    int(table.n[k])))
    return cmds


def reprogram_time(num_commands: int, baud: float) -> float:
    """Transfer time in seconds for num_commands 48-bit commands."""
    if baud <= 0:
        raise ValueError("baud rate must be positive")
    return num_commands * COMMAND_BITS / baud
