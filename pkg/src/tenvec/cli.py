"""Command-line front end.

    tenvec tvc   --dims 8^3 --mode 1
    tenvec dtvc  --dims desk:d3 --mode 2 --split 0 --workers 4
    tenvec hopm  --dims desk:d4 --split 1 --workers 2 --sweeps 3
    tenvec cost  --dims 8^5 --split 0 --workers 4
    tenvec triad --dims 33554432 --seconds 2

Benchmark rows go to stdout (or --csv) in a fixed 17-column schema; the
cost subcommand emits the analytic model's 10-column schema instead.
Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    ASSEMBLIES,
    BenchConfig,
    ConfigError,
    FILLS,
    emit_cost_csv,
    emit_csv,
    parse_dims,
    run_bench,
)
from .comm import CollectiveError
from .costmodel import cost_report
from .hopm import ContractError
from .kernels import KernelError, NormalizationError
from .precision import MODES, ModeError, parse_mode
from .tensor import AssemblyError


def _add_common(p: argparse.ArgumentParser, *, dims_default: str | None = None) -> None:
    p.add_argument(
        "--dims",
        default=dims_default,
        required=dims_default is None,
        help='shape literal "2,3,4" / "979^3" or preset paper:dN / desk:dN',
    )
    p.add_argument("--precision", default="f64", choices=sorted(MODES))
    p.add_argument("--csv", default=None, metavar="PATH", help="write CSV here instead of stdout")


def _add_timing(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seconds", type=float, default=None, help="time budget per run")
    p.add_argument("--iters", type=int, default=None, help="fixed iteration count per run")
    p.add_argument("--fill", default="integer-random", choices=FILLS)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--tasks", type=int, default=1, help="output partitions per contraction")
    p.add_argument("--peak", type=float, default=None, help="peak bytes/s for normalization")
    p.add_argument(
        "--deterministic",
        action="store_true",
        help="fixed iteration count and NA timing cells: byte-identical CSV",
    )


def _add_split(p: argparse.ArgumentParser) -> None:
    p.add_argument("--split", type=int, default=0, help="mode the tensor is cut along")
    p.add_argument("--workers", type=int, default=1, help="requested rank count")
    p.add_argument("--vl", type=int, default=1, help="vector length guiding chunk rounding")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tenvec",
        description="dense tensor-vector contraction benchmarks and the streamed-memory cost model",
    )
    sub = ap.add_subparsers(dest="subcommand", required=True)

    tvc = sub.add_parser("tvc", help="single-rank contraction benchmark")
    _add_common(tvc)
    _add_timing(tvc)
    tvc.add_argument("--mode", dest="k", type=int, required=True, help="contraction mode")

    dtvc = sub.add_parser("dtvc", help="distributed contraction benchmark")
    _add_common(dtvc)
    _add_timing(dtvc)
    _add_split(dtvc)
    dtvc.add_argument("--mode", dest="k", type=int, required=True, help="contraction mode")
    dtvc.add_argument(
        "--defer",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="keep partial sums instead of reducing when the contraction hits the split mode",
    )
    dtvc.add_argument(
        "--assembly",
        choices=ASSEMBLIES,
        default=None,
        help="reassemble disjoint results each iteration with this strategy",
    )

    hopm = sub.add_parser("hopm", help="distributed power-method benchmark")
    _add_common(hopm)
    _add_timing(hopm)
    _add_split(hopm)
    hopm.add_argument("--sweeps", type=int, default=1, help="outer sweeps per iteration")
    hopm.add_argument(
        "--classical-hopm",
        dest="classical",
        action="store_true",
        help="full contraction chains every iteration instead of carried-tensor reuse",
    )

    cost = sub.add_parser("cost", help="analytic streamed-memory model, no execution")
    _add_common(cost)
    cost.add_argument("--split", type=int, default=0)
    cost.add_argument("--workers", type=int, default=1)

    triad = sub.add_parser("triad", help="stream bandwidth baseline a = b + 3c")
    _add_common(triad, dims_default=str(1 << 25))
    _add_timing(triad)

    return ap


def _bench_config(args: argparse.Namespace) -> BenchConfig:
    return BenchConfig(
        subcommand=args.subcommand,
        dims=parse_dims(args.dims),
        k=getattr(args, "k", None),
        s=getattr(args, "split", 0),
        workers=getattr(args, "workers", 1),
        vl=getattr(args, "vl", 1),
        precision=parse_mode(args.precision),
        seconds=args.seconds,
        iters=args.iters,
        sweeps=getattr(args, "sweeps", 1),
        tasks=args.tasks,
        assembly=getattr(args, "assembly", None),
        fill=args.fill,
        seed=args.seed,
        peak=args.peak,
        deterministic=args.deterministic,
        classical=getattr(args, "classical", False),
        defer=getattr(args, "defer", False),
    )


def _dispatch(args: argparse.Namespace) -> int:
    destination = args.csv if args.csv is not None else sys.stdout
    if args.subcommand == "cost":
        shape = parse_dims(args.dims)
        if len(set(shape.extents)) != 1:
            raise ConfigError("the cost model's closed forms need a hypersquare shape n^d")
        try:
            rep = cost_report(shape.order, shape.extents[0], args.workers, args.split)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        emit_cost_csv([rep], destination)
        return 0
    result = run_bench(_bench_config(args))
    emit_csv([result], destination)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ModeError) as exc:
        print(f"tenvec: configuration error: {exc}", file=sys.stderr)
        return 2
    except (
        KernelError,
        NormalizationError,
        ContractError,
        AssemblyError,
        CollectiveError,
        OSError,
        MemoryError,
    ) as exc:
        print(f"tenvec: runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
