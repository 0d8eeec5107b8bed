"""Contract a tensor with a vector along each mode and watch the counters.

For a hypersquare the streamed element count is the same no matter which
mode is contracted: the kernel always reads the N tensor elements plus the
n_k vector elements and writes N/n_k outputs.  Layout-aware slab iteration
is what buys this, there is no transposition anywhere.
"""

import time

import numpy as np

import tenvec

n = 64
d = 3
rng = np.random.default_rng(0)

A = tenvec.Tensor.from_array(rng.integers(1, 98, (n,) * d).astype(float))
x = rng.integers(1, 98, n).astype(float)

print(f"hypersquare {A.shape.extents}, N = {A.size} elements")
print(f"{'mode':>4} {'read':>10} {'written':>8} {'touched':>10} {'ms':>8}")

for k in range(d):
    counters = tenvec.KernelCounters()
    t0 = time.perf_counter()
    y = tenvec.tvc_native(A, x, k, counters=counters)
    ms = 1e3 * (time.perf_counter() - t0)

    # the numpy oracle loops over the same slabs without BLAS
    assert np.array_equal(y.buf, tenvec.tvc_looped_oracle(A, x, k).reshape(-1))
    print(f"{k:>4} {counters.elements_read:>10} {counters.elements_written:>8}"
          f" {counters.elements_touched:>10} {ms:>8.2f}")

print()
print("every mode touched", n**d + n, "+", n ** (d - 1), "elements, as predicted")

# a mixed shape streams the same N but the vector and output sizes follow n_k
B = tenvec.Tensor.from_array(rng.integers(1, 98, (32, 96, 16)).astype(float))
print()
print(f"mixed shape {B.shape.extents}")
for k in range(3):
    counters = tenvec.KernelCounters()
    xb = rng.integers(1, 98, B.shape.extents[k]).astype(float)
    tenvec.tvc_native(B, xb, k, counters=counters)
    print(f"  mode {k}: read {counters.elements_read} = N + {B.shape.extents[k]},"
          f" wrote {counters.elements_written}")
