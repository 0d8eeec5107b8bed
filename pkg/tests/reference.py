"""Hand-rolled reference implementations the tests measure the library
against.  Everything here is deliberately scalar and slow: independence
from the library's vectorized code paths is the point."""

from __future__ import annotations

import struct

import numpy as np

from tenvec.comm import ring_chunks
from tenvec.precision import PrecisionMode


def f32_bits_to_f16_bits(u: int) -> int:
    """Scalar binary32 -> binary16 conversion, round-to-nearest-even,
    overflow to infinity, gradual underflow to half subnormals."""
    sign = (u >> 16) & 0x8000
    u &= 0x7FFFFFFF
    if u >= 0x7F800000:  # inf or nan
        return sign | (0x7C00 if u == 0x7F800000 else 0x7E00)
    if u >= 0x477FF000:  # 65520.0 and above round to +/-inf
        return sign | 0x7C00
    if u < 0x38800000:  # below 2^-14: half subnormal or zero
        if u < 0x33000000:  # below 2^-25: rounds to zero (tie at 2^-25 is even)
            return sign
        exp = u >> 23
        man = (u & 0x7FFFFF) | 0x800000
        shift = 126 - exp  # bring the significand to units of 2^-24
        q, rem = man >> shift, man & ((1 << shift) - 1)
        half = 1 << (shift - 1)
        if rem > half or (rem == half and q & 1):
            q += 1
        return sign | q
    exp = (u >> 23) - 112  # rebias 127 -> 15
    q = (exp << 10) | ((u >> 13) & 0x3FF)
    rem = u & 0x1FFF
    if rem > 0x1000 or (rem == 0x1000 and q & 1):
        q += 1  # carry may bump the exponent; boundary to inf was cut above
    return sign | q


def f32_to_f16_soft(x: float) -> np.float16:
    (u,) = struct.unpack("<I", struct.pack("<f", x))
    (bits,) = struct.unpack("<e", struct.pack("<H", f32_bits_to_f16_bits(u)))
    return np.float16(bits)


def f32_to_bf16_bits_soft(x: float) -> int:
    (u,) = struct.unpack("<I", struct.pack("<f", x))
    return u >> 16


def scalar_promote(v, mode: PrecisionMode) -> float:
    if mode.storage == "brain":
        (f,) = struct.unpack("<f", struct.pack("<I", int(v) << 16))
        return float(f)
    return float(v)


def scalar_demote(x: float, mode: PrecisionMode):
    if mode.storage == "brain":
        (u,) = struct.unpack("<I", struct.pack("<f", np.float32(x)))
        return np.uint16(u >> 16)
    if mode.storage == "half":
        return f32_to_f16_soft(float(np.float32(x)))
    if mode.storage == "single":
        return np.float32(x)
    return np.float64(x)


def serial_rank_sum(bufs: list[np.ndarray]) -> np.ndarray:
    """Elementwise sum folded in ascending rank order, one scalar at a
    time; scalar IEEE adds match the vectorized ones bitwise."""
    n = bufs[0].size
    out = np.empty(n, dtype=bufs[0].dtype)
    for e in range(n):
        acc = bufs[0][e]
        for r in range(1, len(bufs)):
            acc = acc + bufs[r][e]
        out[e] = acc
    return out


def mixed_ring_fold_oracle(bufs: list[np.ndarray], mode: PrecisionMode) -> np.ndarray:
    """Scalar replay of the mixed ring reduction: chunk c starts on rank
    c and folds ranks c+1, c+2, ... with a storage-precision demotion
    between hops."""
    p = len(bufs)
    n = bufs[0].size
    out = np.empty(n, dtype=bufs[0].dtype)
    for c, (lo, hi) in enumerate(ring_chunks(n, p)):
        for e in range(lo, hi):
            cur = bufs[c][e]
            for i in range(1, p):
                wide = scalar_promote(cur, mode) + scalar_promote(bufs[(c + i) % p][e], mode)
                if mode.compute == "single":
                    wide = np.float32(wide)
                cur = scalar_demote(wide, mode)
            out[e] = cur
    return out


def contract_loops(values: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    """Mode-k contraction by raw index arithmetic on the flat buffer;
    written against the layout definition (last index fastest), not
    against any library view helper."""
    extents = values.shape
    d = len(extents)
    flat = values.reshape(-1)
    strides = [1] * d
    for i in range(d - 2, -1, -1):
        strides[i] = strides[i + 1] * extents[i + 1]
    out_dims = [i for i in range(d) if i != k]
    out_extents = tuple(extents[i] for i in out_dims)
    out = np.zeros(int(np.prod(out_extents, dtype=int)) if out_dims else 1)
    idx = [0] * d
    out_pos = 0
    while True:
        base = sum(idx[i] * strides[i] for i in out_dims)
        acc = 0.0
        for j in range(extents[k]):
            acc += flat[base + j * strides[k]] * x[j]
        out[out_pos] = acc
        out_pos += 1
        for i in reversed(out_dims):
            idx[i] += 1
            if idx[i] < extents[i]:
                break
            idx[i] = 0
        else:
            break
    return out.reshape(out_extents if out_dims else (1,))
