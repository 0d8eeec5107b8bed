"""Benchmark harness: timed kernel loops, touched-memory audits, CSV.

Every benchmarked operation is deterministic for a fixed fill, so one
instrumented pass per iteration both times the kernel and audits its
streamed elements against the analytic prediction.  Throughput metrics
follow the usual bandwidth-benchmark conventions: iterations per second,
iterations per second per rank, and streamed bytes per second optionally
normalized to a peak measured with the triad microbenchmark.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, replace

import numpy as np

from .comm import CommCounters
from .costmodel import CostReport, simulate_hopm
from .hopm import dhopm3, distribute, dtvc, initial_vectors
from .kernels import KernelCounters, tvc_native
from .precision import F64, PrecisionMode, demote_copy
from .tensor import Shape, Tensor, parse_shape, reassemble


class ConfigError(ValueError):
    """The benchmark configuration cannot be run as requested."""


FILLS = ("ones", "ramp", "integer-random")
ASSEMBLIES = ("interleave", "gather-copy")

# hypersquare presets: paper:dN at survey scale (several GB), desk:dN at
# laptop scale with the same orders
PAPER_EXTENTS = {2: 30623, 3: 979, 4: 175, 5: 63, 6: 31, 7: 19, 8: 13, 9: 10, 10: 8}
DESK_EXTENTS = {2: 1024, 3: 64, 4: 24, 5: 12, 6: 8, 7: 6, 8: 5, 9: 4, 10: 4}


def preset_shape(name: str) -> Shape:
    family, _, dn = name.partition(":")
    table = {"paper": PAPER_EXTENTS, "desk": DESK_EXTENTS}.get(family)
    if table is None or not dn.startswith("d"):
        raise ConfigError(f"unknown preset {name!r}; use paper:dN or desk:dN")
    try:
        n = table[int(dn[1:])]
    except (KeyError, ValueError):
        raise ConfigError(f"no preset {name!r}; the order runs over 2..10") from None
    return Shape((n,) * int(dn[1:]))


def parse_dims(text: str) -> Shape:
    """Shape literal ("2,3,4", "8^3") or preset name ("desk:d3")."""
    if ":" in text:
        return preset_shape(text)
    try:
        return parse_shape(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def fill_array(size: int, fill: str, seed: int, stream: int = 0) -> np.ndarray:
    """Element values before storage demotion.

    The default integer fill keeps every value in [1, 97] so double
    arithmetic on small suites is exact in oracle comparisons; ramp is a
    position-dependent fill that exposes layout mistakes; all three stay
    exactly representable in every storage format.
    """
    if fill == "ones":
        return np.ones(size)
    if fill == "ramp":
        return np.arange(size, dtype=np.float64) % 97.0 + 1.0
    if fill == "integer-random":
        return np.random.default_rng((seed, stream)).integers(1, 98, size).astype(np.float64)
    raise ConfigError(f"unknown fill {fill!r}; pick one of {FILLS}")


def make_tensor(shape: Shape, fill: str, seed: int, mode: PrecisionMode = F64) -> Tensor:
    return Tensor.from_array(fill_array(shape.size, fill, seed).reshape(shape.extents), mode)


def make_vector(n: int, fill: str, seed: int, stream: int, mode: PrecisionMode = F64) -> np.ndarray:
    return demote_copy(fill_array(n, fill, seed, stream), mode)


@dataclass
class BenchConfig:
    subcommand: str
    dims: Shape
    k: int | None = None
    s: int = 0
    workers: int = 1
    vl: int = 1
    precision: PrecisionMode = F64
    seconds: float | None = None
    iters: int | None = None
    sweeps: int = 1
    tasks: int = 1
    assembly: str | None = None
    fill: str = "integer-random"
    seed: int = 1
    peak: float | None = None
    deterministic: bool = False
    classical: bool = False
    defer: bool = False


@dataclass
class BenchResult:
    config: BenchConfig
    p_eff: int
    iterations: int
    times: list[float]
    touched_pred: int
    touched_meas: int

    @property
    def elapsed_s(self) -> float:
        return sum(self.times)

    @property
    def it_s(self) -> float:
        return self.iterations / self.elapsed_s

    @property
    def it_sp(self) -> float:
        return self.it_s / self.p_eff

    @property
    def bytes_s(self) -> float:
        return self.touched_meas * self.config.precision.storage_bytes * self.it_s

    @property
    def stddev_pct(self) -> float | None:
        """Unbiased sample standard deviation of the per-iteration times,
        as a percentage of their mean."""
        if len(self.times) < 2:
            return None
        return 100.0 * statistics.stdev(self.times) / statistics.fmean(self.times)

    @property
    def norm_bw_pct(self) -> float | None:
        if self.config.peak is None:
            return None
        return 100.0 * self.bytes_s / self.config.peak


def _normalized(cfg: BenchConfig) -> BenchConfig:
    if cfg.subcommand not in ("tvc", "dtvc", "hopm", "triad"):
        raise ConfigError(f"unknown or untimed subcommand {cfg.subcommand!r}")
    if cfg.seconds is not None and cfg.iters is not None:
        raise ConfigError("give a time budget or an iteration count, not both")
    if cfg.deterministic:
        if cfg.seconds is not None:
            raise ConfigError("deterministic runs need a fixed iteration count, not a time budget")
        if cfg.iters is None:
            cfg = replace(cfg, iters=3)
    if cfg.seconds is None and cfg.iters is None:
        cfg = replace(cfg, seconds=1.0)
    if cfg.seconds is not None and cfg.seconds <= 0:
        raise ConfigError("the time budget must be positive")
    if cfg.iters is not None and cfg.iters < 1:
        raise ConfigError("the iteration count must be >= 1")
    if cfg.workers < 1 or cfg.vl < 1 or cfg.tasks < 1 or cfg.sweeps < 1:
        raise ConfigError("workers, vl, tasks and sweeps must be >= 1")
    if cfg.fill not in FILLS:
        raise ConfigError(f"unknown fill {cfg.fill!r}; pick one of {FILLS}")
    if cfg.assembly is not None and cfg.assembly not in ASSEMBLIES:
        raise ConfigError(f"unknown assembly {cfg.assembly!r}; pick one of {ASSEMBLIES}")
    d = cfg.dims.order
    if cfg.subcommand in ("tvc", "dtvc"):
        if cfg.k is None:
            raise ConfigError("tvc and dtvc need a contraction mode")
        if not 0 <= cfg.k < d:
            raise ConfigError(f"contraction mode {cfg.k} out of range for order {d}")
    if cfg.subcommand in ("dtvc", "hopm"):
        if not 0 <= cfg.s < d:
            raise ConfigError(f"split mode {cfg.s} out of range for order {d}")
        n_s = cfg.dims.extents[cfg.s]
        if cfg.workers > n_s:
            raise ConfigError(
                f"{cfg.workers} workers cannot split mode {cfg.s} of extent {n_s}; "
                f"the effective maximum is {n_s}"
            )
    return cfg


def _setup_tvc(cfg: BenchConfig):
    t = make_tensor(cfg.dims, cfg.fill, cfg.seed, cfg.precision)
    nk = cfg.dims.extents[cfg.k]
    x = make_vector(nk, cfg.fill, cfg.seed, cfg.k + 1, cfg.precision)
    pred = t.size + nk + t.size // nk

    def once() -> int:
        kc = KernelCounters()
        tvc_native(t, x, cfg.k, tasks=cfg.tasks, counters=kc)
        return kc.elements_touched

    return once, pred, 1


def _setup_dtvc(cfg: BenchConfig):
    t = make_tensor(cfg.dims, cfg.fill, cfg.seed, cfg.precision)
    dt = distribute(t, cfg.s, cfg.workers, cfg.vl)
    p = dt.plan.p_eff
    nk = cfg.dims.extents[cfg.k]
    x = make_vector(nk, cfg.fill, cfg.seed, cfg.k + 1, cfg.precision)
    m = t.size // nk
    if cfg.k != cfg.s:
        pred = t.size + p * nk + m
    else:
        pred = t.size + nk + p * m
        if not cfg.defer:
            pred += 4 * m * (p - 1)

    def once() -> int:
        kcs = [KernelCounters() for _ in range(p)]
        ccs = [CommCounters() for _ in range(p)]
        out = dtvc(dt, x, cfg.k, cfg.defer, tasks=cfg.tasks, kcounters=kcs, ccounters=ccs)
        if cfg.assembly is not None and out.kind == "disjoint" and len(out.parts) > 1:
            reassemble(out.parts, out.plan, cfg.assembly)
        return sum(c.elements_touched for c in kcs) + sum(c.touched_elements for c in ccs)

    return once, pred, p


def _setup_hopm(cfg: BenchConfig):
    t = make_tensor(cfg.dims, cfg.fill, cfg.seed, cfg.precision)
    dt = distribute(t, cfg.s, cfg.workers, cfg.vl)
    p = dt.plan.p_eff
    x0 = initial_vectors(t.shape, cfg.precision)
    reuse = not cfg.classical
    sim = simulate_hopm(
        cfg.dims.extents, cfg.s, cfg.workers, cfg.vl, reuse=reuse,
        convention="natural" if reuse else "model",
    )
    kernel_per_sweep = sum(r.touched for r in sim)
    comm_per_sweep = sum(
        (2 if j == cfg.s else 4) * n * (p - 1) for j, n in enumerate(cfg.dims.extents)
    )
    pred = cfg.sweeps * (kernel_per_sweep + comm_per_sweep)

    def once() -> int:
        res = dhopm3(dt, x0, cfg.sweeps, reuse=reuse, tasks=cfg.tasks)
        return sum(c.elements_touched for c in res.kernel_counters) + sum(
            c.touched_elements for c in res.comm_counters
        )

    return once, pred, p


def _setup_triad(cfg: BenchConfig):
    n = cfg.dims.size
    scalar = 3.0
    a = np.empty(n)
    b = fill_array(n, cfg.fill, cfg.seed, 1)
    c = fill_array(n, cfg.fill, cfg.seed, 2)
    blk = 1 << 15
    wrk = np.empty(min(blk, n))

    def once() -> int:
        # blocked a = b + scalar*c through a cache-resident work buffer,
        # so main-memory traffic is the conventional 3n of the triad
        for lo in range(0, n, blk):
            hi = min(lo + blk, n)
            w = wrk[: hi - lo]
            np.multiply(c[lo:hi], scalar, out=w)
            w += b[lo:hi]
            a[lo:hi] = w
        return 3 * n

    once.arrays = (a, b, c, scalar)
    return once, 3 * n, 1


_SETUP = {"tvc": _setup_tvc, "dtvc": _setup_dtvc, "hopm": _setup_hopm, "triad": _setup_triad}


def run_bench(cfg: BenchConfig) -> BenchResult:
    """Warm up once, then loop the configured operation until the time
    budget or iteration count is exhausted; every iteration re-measures
    the streamed elements and must reproduce them exactly."""
    cfg = _normalized(cfg)
    once, pred, p_eff = _SETUP[cfg.subcommand](cfg)
    once()  # warmup, untimed
    times: list[float] = []
    elapsed = 0.0
    meas = None
    while True:
        t0 = time.perf_counter()
        got = once()
        dt_s = time.perf_counter() - t0
        times.append(dt_s)
        elapsed += dt_s
        if meas is None:
            meas = got
        elif got != meas:
            raise RuntimeError(f"touched elements drifted between iterations: {meas} vs {got}")
        if cfg.iters is not None:
            if len(times) >= cfg.iters:
                break
        elif elapsed >= cfg.seconds:
            break
    return BenchResult(
        config=cfg,
        p_eff=p_eff,
        iterations=len(times),
        times=times,
        touched_pred=pred,
        touched_meas=meas,
    )


def stream_triad(
    n: int = 1 << 25,
    seconds: float | None = None,
    iters: int | None = None,
    fill: str = "ones",
) -> BenchResult:
    """Memory-bandwidth baseline: a = b + 3*c over three length-n buffers,
    3n elements per pass.  The default length dwarfs any last-level cache;
    the result serves as the local peak for bandwidth normalization."""
    cfg = BenchConfig("triad", Shape((n,)), seconds=seconds, iters=iters, fill=fill)
    return run_bench(cfg)


# -- CSV ---------------------------------------------------------------------

CSV_COLUMNS = [
    "subcommand", "d", "dims", "k", "s", "p_req", "p_eff", "precision",
    "iterations", "elapsed_s", "it_s", "it_sp", "bytes_s", "norm_bw_pct",
    "touched_pred", "touched_meas", "stddev_pct",
]

COST_CSV_COLUMNS = [
    "d", "n", "p", "s", "m_seq", "M_par", "M_par_min", "eta_inv", "H_inv", "ring_overhead",
]


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)  # shortest round-tripping decimal form
    return str(v)


def result_row(r: BenchResult) -> list[str]:
    cfg = r.config
    sub = cfg.subcommand
    det = cfg.deterministic
    k = cfg.k if sub in ("tvc", "dtvc") else None
    s = cfg.s if sub in ("dtvc", "hopm") else None
    cells = [
        sub,
        cfg.dims.order,
        str(cfg.dims),
        k,
        s,
        cfg.workers,
        r.p_eff,
        cfg.precision.name,
        r.iterations,
        None if det else r.elapsed_s,
        None if det else r.it_s,
        None if det else r.it_sp,
        None if det else r.bytes_s,
        None if det else r.norm_bw_pct,
        r.touched_pred,
        r.touched_meas,
        None if det else r.stddev_pct,
    ]
    return [_fmt(c) for c in cells]


def _write_rows(rows: list[list[str]], destination) -> None:
    text = "".join(",".join(row) + "\n" for row in rows)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def emit_csv(results: list[BenchResult], destination) -> None:
    """Fixed 17-column schema, UTF-8, LF line endings, '.' decimals.
    Timing-derived cells are NA under --deterministic so two identical
    configurations emit byte-identical files."""
    if not results:
        raise ValueError("nothing to emit")
    _write_rows([CSV_COLUMNS] + [result_row(r) for r in results], destination)


def cost_row(rep: CostReport) -> list[str]:
    cells = [
        rep.d, rep.n, rep.p, rep.s, rep.m_seq,
        float(rep.M_par), float(rep.M_par_min), float(rep.eta_inv),
        float(rep.H_inv), float(rep.ring_overhead),
    ]
    return [_fmt(c) for c in cells]


def emit_cost_csv(reports: list[CostReport], destination) -> None:
    if not reports:
        raise ValueError("nothing to emit")
    _write_rows([COST_CSV_COLUMNS] + [cost_row(r) for r in reports], destination)


# -- grid sweeps --------------------------------------------------------------


@dataclass
class GridStats:
    """Spread of the streamed bandwidth across a contraction/split grid:
    the obliviousness statistic.  stddev_pct is scale-free, so it is the
    same whether or not a peak normalization was configured."""

    runs: int
    mean_bytes_s: float
    stddev_pct: float | None
    mean_norm_pct: float | None


def sweep_grid(
    cfg: BenchConfig,
    ks: list[int] | None = None,
    ss: list[int] | None = None,
) -> tuple[list[BenchResult], GridStats]:
    """Run the (k, s) grid of a template config and aggregate bandwidth.

    tvc sweeps contraction modes only, hopm sweeps split modes only, dtvc
    sweeps the full d x d grid.
    """
    d = cfg.dims.order
    if cfg.subcommand == "tvc":
        pairs = [(k, cfg.s) for k in (ks if ks is not None else range(d))]
    elif cfg.subcommand == "dtvc":
        pairs = [
            (k, s)
            for k in (ks if ks is not None else range(d))
            for s in (ss if ss is not None else range(d))
        ]
    elif cfg.subcommand == "hopm":
        pairs = [(None, s) for s in (ss if ss is not None else range(d))]
    else:
        raise ConfigError(f"no grid to sweep for {cfg.subcommand!r}")
    results = [run_bench(replace(cfg, k=k, s=s)) for k, s in pairs]
    bws = [r.bytes_s for r in results]
    mean = statistics.fmean(bws)
    stats = GridStats(
        runs=len(results),
        mean_bytes_s=mean,
        stddev_pct=100.0 * statistics.stdev(bws) / mean if len(bws) > 1 else None,
        mean_norm_pct=100.0 * mean / cfg.peak if cfg.peak is not None else None,
    )
    return results, stats
