"""Exact streamed-memory arithmetic for sequential and distributed sweeps.

Everything here is computed with Fractions, so the identities hold to the
last digit: per-rank sweep cost versus split mode, the efficiency penalty
of splitting, the reuse economy over the classical method, and the ring
traffic that the reduction adds on top.
"""

from fractions import Fraction

import tenvec

print("per-sweep streamed elements, sequential:  m_seq(d, n)")
for d, n in ((2, 30623), (3, 979), (4, 175), (6, 31), (10, 8)):
    print(f"  d={d:>2} n={n:>5}: {tenvec.m_seq(d, n)} elements per iteration,"
          f" {tenvec.M_seq(d, n)} per sweep")

d, n = 4, 64
print()
print(f"distributed sweep cost per rank, d={d} n={n}")
print(f"{'p':>3} " + " ".join(f"{f's={s}':>12}" for s in range(d)) + f" {'min':>12}")
for p in (1, 2, 4, 8, 16):
    row = [tenvec.M_par(d, n, p, s) for s in range(d)]
    best = tenvec.M_par_min(d, n, p)
    assert best == min(row) == row[-1]  # deepest split always wins
    print(f"{p:>3} " + " ".join(f"{float(v):>12.1f}" for v in row)
          + f" {float(best):>12.1f}")

print()
print("parallel inefficiency 1/eta = p * M_par / M_seq (at the best s)")
for p in (1, 2, 4, 8, 16, 32, 64):
    v = tenvec.eta_inv(d, n, p, d - 1)
    print(f"  p={p:>3}: {float(v):.4f}")

print()
print("reuse economy 1/H = model cost / measured three-buffer cost")
for dd, nn in ((3, 16), (5, 12), (10, 8)):
    vals = [float(tenvec.H_inv(dd, nn, p, s)) for p in (1, 2, 4) for s in (0, dd - 1)]
    print(f"  d={dd:>2} n={nn:>2}: {min(vals):.3f} .. {max(vals):.3f}")

# moving the split one mode deeper costs exactly the predicted increment
for dd in range(2, 8):
    for s in range(1, dd):
        assert tenvec.splitting_shift_residual(dd, 16, 4, s) == 0
print()
print("split-shift recursion residual is identically zero")

# ring traffic approaches 4/7 of the matrix sweep floor as p -> n at d=2
print()
print("ring allreduce overhead against the d=2 per-rank floor, p = n")
for nn in (10, 100, 1000, 10000):
    ratio = Fraction(tenvec.ring_overhead(nn, nn)) / tenvec.M_par_min(2, nn, nn)
    print(f"  n={nn:>5}: {float(ratio):.5f}  (limit 4/7 = {4 / 7:.5f})")

print()
rep = tenvec.cost_report(3, 979, 4, 2)
print(f"cost report d=3 n=979 p=4 s=2: M_par={rep.M_par} eta_inv={float(rep.eta_inv):.4f}"
      f" H_inv={float(rep.H_inv):.4f} ring={rep.ring_overhead}")
