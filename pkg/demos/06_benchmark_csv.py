"""Drive the benchmark layer directly and audit its predictions.

Every benchmark result carries both the analytic element count and the
count measured by the kernel instrumentation; for the contraction and
power-method subcommands on well-formed configurations they are equal,
not merely close.  Deterministic mode strips timing so two runs emit
byte-identical CSV.
"""

import io

import tenvec

# one sequential contraction
cfg = tenvec.BenchConfig(subcommand="tvc", dims=tenvec.Shape((64, 64, 64)), k=1,
                         iters=3, fill="ramp")
res = tenvec.run_bench(cfg)
print(f"tvc 64^3 mode 1: predicted {res.touched_pred} touched,"
      f" measured {res.touched_meas}, {res.bytes_s / 1e9:.2f} GB/s")
assert res.touched_pred == res.touched_meas

# a distributed power method over 4 worker threads
cfg = tenvec.BenchConfig(subcommand="hopm", dims=tenvec.Shape((32, 32, 32)), s=0,
                         workers=4, sweeps=2, iters=3, fill="integer-random", seed=12)
res = tenvec.run_bench(cfg)
print(f"hopm 32^3 p=4 s=0: predicted {res.touched_pred}, measured"
      f" {res.touched_meas}, {res.it_s:.1f} it/s")
assert res.touched_pred == res.touched_meas

# the preset map picks near-constant-footprint extents per order
print()
print("paper presets:", {d: tenvec.preset_shape(f"paper:d{d}").extents[0] for d in range(2, 11)})
print("desk presets: ", {d: tenvec.preset_shape(f"desk:d{d}").extents[0] for d in range(2, 11)})

# sweeping the contraction mode yields one CSV row per point and a spread
# statistic: the bandwidth stddev across modes is obliviousness, measured.
# it shrinks as the tensor outgrows cache and the walk turns into streaming
print()
grid, stats = tenvec.sweep_grid(
    tenvec.BenchConfig(subcommand="tvc", dims=tenvec.Shape((224, 224, 224)),
                       iters=5, seed=1),
)
buf = io.StringIO()
tenvec.emit_csv(grid, buf)
print(buf.getvalue().rstrip())
print(f"{stats.runs} runs, mean {stats.mean_bytes_s / 1e9:.2f} GB/s,"
      f" bandwidth spread across modes {stats.stddev_pct:.1f}%")

# deterministic mode: no timing, byte-identical output
a, b = io.StringIO(), io.StringIO()
for target in (a, b):
    runs, _ = tenvec.sweep_grid(
        tenvec.BenchConfig(subcommand="tvc", dims=tenvec.Shape((8, 8, 8)),
                           deterministic=True, seed=4),
    )
    tenvec.emit_csv(runs, target)
assert a.getvalue() == b.getvalue()
print()
print("deterministic rerun is byte-identical,", len(a.getvalue()), "bytes")

# the analytic-model subcommand has its own schema
buf = io.StringIO()
tenvec.emit_cost_csv([tenvec.cost_report(3, 979, p, 2) for p in (1, 2, 4, 8)], buf)
print()
print(buf.getvalue().rstrip())
