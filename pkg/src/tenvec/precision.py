"""Storage/compute precision pairs and the conversions between them.

Buffers live in a (possibly narrow) storage format; arithmetic runs in a
compute format at least as wide.  Supported pairs:

    f64      double storage, double compute
    f32      single storage, single compute
    f32f64   single storage, double compute
    f16f32   half storage, single compute
    bf16f32  brain storage, single compute

Half uses IEEE binary16 with round-to-nearest-even on demotion (overflow
saturates to infinity).  Brain is the top 16 bits of binary32: demotion is
plain truncation of the low mantissa bits, promotion re-appends zeros.
Brain buffers are held as uint16 bit patterns since NumPy has no native
bfloat16 dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ModeError(ValueError):
    """Unknown precision mode or invalid storage/compute combination."""


@dataclass(frozen=True)
class PrecisionMode:
    """A valid (storage, compute) pair.

    Attributes
    ----------
    name : str
        Short spelling used on the command line (``f64``, ``bf16f32``, ...).
    storage : str
        One of ``double``, ``single``, ``half``, ``brain``.
    compute : str
        One of ``double``, ``single``.
    """

    name: str
    storage: str
    compute: str

    @property
    def storage_dtype(self) -> np.dtype:
        return _STORAGE_DTYPES[self.storage]

    @property
    def compute_dtype(self) -> np.dtype:
        return _COMPUTE_DTYPES[self.compute]

    @property
    def storage_bytes(self) -> int:
        return self.storage_dtype.itemsize

    @property
    def compute_bytes(self) -> int:
        return self.compute_dtype.itemsize

    @property
    def mixed(self) -> bool:
        return self.storage != self.compute


_STORAGE_DTYPES = {
    "double": np.dtype(np.float64),
    "single": np.dtype(np.float32),
    "half": np.dtype(np.float16),
    "brain": np.dtype(np.uint16),  # bit patterns, not numbers
}

_COMPUTE_DTYPES = {
    "double": np.dtype(np.float64),
    "single": np.dtype(np.float32),
}

F64 = PrecisionMode("f64", "double", "double")
F32 = PrecisionMode("f32", "single", "single")
F32F64 = PrecisionMode("f32f64", "single", "double")
F16F32 = PrecisionMode("f16f32", "half", "single")
BF16F32 = PrecisionMode("bf16f32", "brain", "single")

MODES = {m.name: m for m in (F64, F32, F32F64, F16F32, BF16F32)}


def parse_mode(name: str) -> PrecisionMode:
    try:
        return MODES[name]
    except KeyError:
        raise ModeError(f"unknown precision mode {name!r}; pick one of {sorted(MODES)}") from None


def f32_to_bf16_bits(a: np.ndarray) -> np.ndarray:
    """Truncate binary32 values to brain bit patterns (uint16)."""
    a32 = np.ascontiguousarray(a, dtype=np.float32)
    return (a32.view(np.uint32) >> np.uint32(16)).astype(np.uint16)


def bf16_bits_to_f32(bits: np.ndarray) -> np.ndarray:
    """Widen brain bit patterns back to binary32; exact by construction."""
    b = np.ascontiguousarray(bits, dtype=np.uint16)
    return (b.astype(np.uint32) << np.uint32(16)).view(np.float32)


def promote(a: np.ndarray, mode: PrecisionMode) -> np.ndarray:
    """Storage buffer -> compute buffer.  Always exact."""
    if mode.storage == "brain":
        wide = bf16_bits_to_f32(a)
    else:
        wide = np.asarray(a, dtype=mode.storage_dtype)
    return wide.astype(mode.compute_dtype, copy=False)


def demote(a: np.ndarray, mode: PrecisionMode) -> np.ndarray:
    """Compute buffer -> storage buffer.

    Rounds to nearest even for double->single and ->half; half overflow
    saturates to infinity.  Brain truncates after the (exact or RN) step
    down to binary32.
    """
    if mode.storage == "brain":
        return f32_to_bf16_bits(np.asarray(a, dtype=np.float32))
    with np.errstate(over="ignore"):
        return np.asarray(a).astype(mode.storage_dtype, copy=False)


def demote_copy(a: np.ndarray, mode: PrecisionMode) -> np.ndarray:
    out = demote(a, mode)
    if out is a or out.base is a:
        out = out.copy()
    return out


def storage_zeros(n: int, mode: PrecisionMode) -> np.ndarray:
    if mode.storage == "brain":
        return np.zeros(n, dtype=np.uint16)  # 0x0000 is +0.0 in brain
    return np.zeros(n, dtype=mode.storage_dtype)


def storage_empty(n: int, mode: PrecisionMode) -> np.ndarray:
    return np.empty(n, dtype=mode.storage_dtype)
