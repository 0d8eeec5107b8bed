"""Halve tensor storage while keeping double-precision arithmetic.

Storage modes pair a memory dtype with a compute dtype.  Brain floats are
stored as the top 16 bits of an f32 (pure truncation), halves round to
nearest even, and f32 storage promotes to f64 before every product.  The
ring reduction honors the same contract per hop, so mixed collectives are
reproducible bit for bit.
"""

import numpy as np

import tenvec

# brain storage truncates: pi keeps 8 mantissa bits
pi32 = np.float32(np.pi)
bits = tenvec.f32_to_bf16_bits(np.array([pi32]))[0]
back = tenvec.bf16_bits_to_f32(np.array([bits], dtype=np.uint16))[0]
print(f"pi as f32      = {pi32!r}")
print(f"pi as bf16 bits = 0x{bits:04X}, promoted back = {back!r}")

# half storage rounds to nearest even instead
h = tenvec.demote(np.array([np.pi]), tenvec.F16F32)[0]
print(f"pi as f16      = {float(h)!r}")

# integer values up to 97 survive every storage mode exactly, which is why
# benchmark fills stay integer
vals = np.arange(1.0, 98.0)
for mode in tenvec.MODES.values():
    stored = tenvec.demote(vals, mode)
    assert np.array_equal(tenvec.promote(stored, mode).astype(float), vals)
print("fills 1..97 are exactly representable in every storage mode")

rng = np.random.default_rng(5)
n = 48
A64 = rng.integers(1, 98, (n, n, n)).astype(float)
x0 = tenvec.initial_vectors(tenvec.Shape((n, n, n)), kind="random", seed=9)

ref = tenvec.dhopm3(tenvec.distribute(tenvec.Tensor.from_array(A64), 1, 2), x0, sweeps=3)

print()
print(f"{'storage':>8} {'bytes/elem':>10} {'max factor error':>17}")
for name in ("f64", "f32f64", "bf16f32", "f16f32"):
    mode = tenvec.parse_mode(name)
    t = tenvec.Tensor.from_array(A64, mode)
    start = [tenvec.demote(v.astype(mode.compute_dtype), mode).copy() for v in x0]
    res = tenvec.dhopm3(tenvec.distribute(t, 1, 2), start, sweeps=3)
    err = max(
        float(np.max(np.abs(
            (tenvec.bf16_bits_to_f32(a).astype(float) if a.dtype == np.uint16
             else np.asarray(a, dtype=float)) - b)))
        for a, b in zip(res.vectors, ref.vectors)
    )
    print(f"{name:>8} {mode.storage_dtype.itemsize:>10} {err:>17.2e}")

# the mixed ring folds in storage precision per hop, deterministically
mode = tenvec.F16F32
ranks = [tenvec.demote(rng.uniform(-2, 2, 9), mode) for _ in range(4)]
bufs = [r.copy() for r in ranks]
tenvec.ring_all_reduce_mixed(bufs, mode)
again = [r.copy() for r in ranks]
tenvec.ring_all_reduce_mixed(again, mode)
assert all(np.array_equal(a, b) for a, b in zip(bufs, again))
print()
print("mixed ring reduction is bitwise reproducible across runs")
