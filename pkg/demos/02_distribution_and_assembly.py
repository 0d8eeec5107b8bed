"""Split a tensor across ranks, contract in place, and put it back together.

A one-dimensional split along mode s gives each rank a contiguous block of
that mode.  Contraction along any other mode never needs communication: the
result stays split along the shifted mode index.  Contraction along the
split mode itself leaves one full-size partial sum per rank, which can be
reduced right away or carried forward and summed at the end.
"""

import numpy as np

import tenvec

rng = np.random.default_rng(1)
A = tenvec.Tensor.from_array(rng.integers(-4, 5, (8, 6, 4)).astype(float))

print(f"tensor {A.shape.extents}, split along mode 1 over 3 ranks")
dt = tenvec.distribute(A, s=1, p=3)
for r, part in enumerate(dt.parts):
    print(f"  rank {r}: block {part.shape.extents}")

# mode 0 is not the split mode: each rank contracts its own block, done
x0 = rng.integers(-4, 5, 8).astype(float)
out = tenvec.dtvc(dt, x0, k=0)
print(f"contract mode 0: no communication, result split along mode"
      f" {out.split_mode} with blocks {[p.shape.extents for p in out.parts]}")
assert np.array_equal(tenvec.undistribute(out).buf,
                      tenvec.tvc_native(A, x0, 0).buf)

# mode 1 is the split mode: every rank owns a slice of x and produces a
# full-size partial sum
x1 = rng.integers(-4, 5, 6).astype(float)
deferred = tenvec.dtvc(tenvec.distribute(A, 1, 3), x1, k=1, defer=True)
print(f"contract mode 1 deferred: {len(deferred.parts)} partial sums of shape"
      f" {deferred.parts[0].shape.extents}, summed on assembly")

ccounters = [tenvec.CommCounters() for _ in range(3)]
reduced = tenvec.dtvc(tenvec.distribute(A, 1, 3), x1, k=1, ccounters=ccounters)
print(f"contract mode 1 reduced: ring allreduce leaves one copy, each rank"
      f" moved {ccounters[0].touched_elements} elements")

want = tenvec.tvc_native(A, x1, 1).buf
assert np.array_equal(tenvec.undistribute(deferred).buf, want)
assert np.array_equal(tenvec.undistribute(reduced).buf, want)

# deferred partial sums distribute through later contractions
x2 = rng.integers(-4, 5, 4).astype(float)
chained = tenvec.dtvc(deferred, x2, k=1)
serial = tenvec.tvc_native(tenvec.Tensor.from_array(want.reshape(8, 4)), x2, 1)
assert np.array_equal(tenvec.undistribute(chained).buf, serial.buf)
print("a deferred partial sum contracts again without assembling first")

# two ways to reassemble a split tensor
print()
for s in range(3):
    parts, plan = tenvec.split(A, s, 3)
    for strategy in ("interleave", "gather-copy"):
        back, stats = tenvec.reassemble_with_stats(parts, plan, strategy)
        assert np.array_equal(back.buf, A.buf)
        print(f"  s={s} {strategy:>11}: {stats.messages_per_rank} messages/rank,"
              f" {stats.extra_local_elements} extra local elements")
print("interleave pays messages, gather-copy pays one local repack pass")
