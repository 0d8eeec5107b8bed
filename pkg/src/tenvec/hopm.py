"""Distributed tensor-vector contraction and the higher-order power method.

A tensor split along one mode runs contractions without any communication
as long as the contracted mode differs from the split one: the owned
slabs stay disjoint and the split mode's index just shifts down past the
contraction.  Contracting the split mode itself turns every rank's slab
into a full-size partial sum; the reduction can run right away or be
deferred through later contractions by linearity.

The power method updates one direction vector per external iteration j by
contracting every other mode.  The reuse schedule keeps the previous
iteration's leading chain in a carried tensor W, which shrinks the sweep
from d(d-1) contractions to (d-1)(d+2)/2, and rotates the results through
three preallocated buffers per rank.  Iteration j = s ends in a gather of
disjoint vector slices; every other iteration ends in a ring allreduce of
full-length partial vectors.  Every rank then normalizes redundantly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .comm import CommCounters, WorkerGroup, ring_all_reduce, ring_all_reduce_mixed
from .costmodel import iteration_plan, simulate_hopm
from .kernels import KernelCounters, normalize, tvc_native
from .precision import F64, PrecisionMode, demote, promote, storage_empty
from .tensor import Shape, SplitPlan, Tensor, make_split_plan, reassemble, split


class ContractError(ValueError):
    """Distributed operands do not fit the requested contraction."""


DISJOINT = "disjoint"
PARTIAL_SUM = "partial-sum"


@dataclass
class DistributedTensor:
    """plan + per-rank parts.

    kind "disjoint": part r owns the slab plan.ranges[r] of the split
    mode.  kind "partial-sum": every part has the full global shape and
    the global tensor is their elementwise sum.
    """

    plan: SplitPlan
    parts: list[Tensor]
    kind: str = DISJOINT

    @property
    def split_mode(self) -> int | None:
        return self.plan.s if self.kind == DISJOINT else None

    @property
    def order(self) -> int:
        return self.parts[0].order

    @property
    def mode(self) -> PrecisionMode:
        return self.parts[0].mode

    def global_shape(self) -> Shape:
        if self.kind == PARTIAL_SUM:
            return self.parts[0].shape
        return self.parts[0].shape.with_extent(self.plan.s, self.plan.extent)


def distribute(t: Tensor, s: int, p: int, vl: int = 1) -> DistributedTensor:
    parts, plan = split(t, s, p, vl)
    return DistributedTensor(plan, parts, DISJOINT)


def undistribute(dt: DistributedTensor, strategy: str = "interleave") -> Tensor:
    """Collapse back to one tensor: reassembly for disjoint parts, an
    ascending rank-order sum for partial sums."""
    if dt.kind == DISJOINT:
        return reassemble(dt.parts, dt.plan, strategy)
    acc = promote(dt.parts[0].buf, dt.mode).copy()
    for part in dt.parts[1:]:
        acc += promote(part.buf, dt.mode)
    return Tensor(dt.global_shape(), demote(acc, dt.mode).copy(), dt.mode)


def mode_remap(original: int, contracted) -> int:
    """Axis of an original mode inside a tensor whose `contracted` modes
    are gone: the original index minus the contracted modes below it."""
    if original in contracted:
        raise ValueError(f"mode {original} was already contracted")
    return original - sum(1 for c in contracted if c < original)


def dtvc(
    dt: DistributedTensor,
    x: np.ndarray,
    k: int,
    defer: bool = False,
    *,
    tasks: int = 1,
    kcounters: list[KernelCounters] | None = None,
    ccounters: list[CommCounters] | None = None,
) -> DistributedTensor:
    """Contract mode k of a distributed tensor with vector x.

    Disjoint input, k != s: rank-local contractions against the full
    vector, no communication; the result stays disjoint and the split
    mode shifts to s-1 when it sat above k.  Disjoint input, k = s: every
    rank contracts its slab against its slice of x, leaving full-size
    partial sums; defer keeps them (they flow through later contractions
    by linearity), otherwise a ring allreduce folds them into one
    replicated tensor returned with single-rank semantics.  Partial-sum
    input: rank-local contractions against the full vector, any k.
    """
    d = dt.order
    if not 0 <= k < d:
        raise ContractError(f"mode {k} out of range for order-{d} tensor")
    gshape = dt.global_shape()
    if x.shape != (gshape.extents[k],):
        raise ContractError(f"vector of {x.size} for mode {k} of extent {gshape.extents[k]}")

    def kc(r):
        return kcounters[r] if kcounters is not None else None

    if dt.kind == PARTIAL_SUM or k != dt.plan.s:
        parts = [
            tvc_native(part, x, k, tasks=tasks, counters=kc(r))
            for r, part in enumerate(dt.parts)
        ]
        if dt.kind == PARTIAL_SUM:
            return DistributedTensor(dt.plan, parts, PARTIAL_SUM)
        s = dt.plan.s if dt.plan.s < k else dt.plan.s - 1
        plan = SplitPlan(s, dt.plan.p_requested, dt.plan.p_eff, dt.plan.chunk, dt.plan.ranges)
        return DistributedTensor(plan, parts, DISJOINT)

    # k = s: slab x slice, full-size partial results
    parts = [
        tvc_native(part, x[a:b], k, tasks=tasks, counters=kc(r))
        for r, (part, (a, b)) in enumerate(zip(dt.parts, dt.plan.ranges))
    ]
    reduced_plan = make_split_plan(parts[0].shape.extents[0], 0, 1)
    if defer:
        return DistributedTensor(reduced_plan, parts, PARTIAL_SUM)
    bufs = [part.buf for part in parts]
    if dt.mode.mixed:
        ring_all_reduce_mixed(bufs, dt.mode, ccounters)
    else:
        ring_all_reduce(bufs, ccounters)
    return DistributedTensor(reduced_plan, [parts[0]], DISJOINT)


@dataclass
class HopmResult:
    """Direction vectors plus instrumentation of one power-method run."""

    vectors: list[np.ndarray]
    norms: list[list[float]]  # per sweep, per external iteration
    sweeps: int
    tvc_count: int
    tvc_per_sweep: int
    kernel_counters: list[KernelCounters]
    comm_counters: list[CommCounters] | None
    iteration_touched: list[list[int]]  # per rank, sweeps*d entries
    reuse: bool


def initial_vectors(
    shape: Shape, mode: PrecisionMode = F64, kind: str = "ones", seed: int | None = None
) -> list[np.ndarray]:
    """One unit vector per mode, identical on every rank."""
    rng = np.random.default_rng(seed)
    out = []
    for n in shape.extents:
        if kind == "ones":
            v = np.ones(n)
        elif kind == "random":
            v = rng.standard_normal(n)
        else:
            raise ValueError(f"unknown start vector kind {kind!r}")
        xs = demote(v.astype(mode.compute_dtype), mode).copy()
        normalize(xs, mode=mode)
        out.append(xs)
    return out


def hopm_canonical(
    A: Tensor, x0: list[np.ndarray] | None = None, sweeps: int = 1, *, tasks: int = 1
) -> HopmResult:
    """Sequential power method, no reuse: every external iteration
    contracts all other modes in ascending order straight from A.

    Per external iteration the kernels stream exactly
    N + 2*sum_{k=2}^{d-1} n^k + (d+3)n elements for a hypersquare tensor.
    """
    d = A.order
    x = [v.copy() for v in (x0 or initial_vectors(A.shape, A.mode))]
    kc = KernelCounters()
    norms: list[list[float]] = []
    touched: list[int] = []
    tvc_count = 0
    for _ in range(sweeps):
        lam = []
        for j in range(d):
            before = kc.elements_touched
            cur = A
            contracted: set[int] = set()
            for k in (m for m in range(d) if m != j):
                cur = tvc_native(cur, x[k], mode_remap(k, contracted), tasks=tasks, counters=kc)
                contracted.add(k)
                tvc_count += 1
            x[j] = cur.buf.copy()
            lam.append(normalize(x[j], mode=A.mode, counters=kc))
            touched.append(kc.elements_touched - before)
        norms.append(lam)
    return HopmResult(
        vectors=x,
        norms=norms,
        sweeps=sweeps,
        tvc_count=tvc_count,
        tvc_per_sweep=d * (d - 1),
        kernel_counters=[kc],
        comm_counters=None,
        iteration_touched=[touched],
        reuse=False,
    )


def dhopm3(
    dt: DistributedTensor,
    x0: list[np.ndarray] | None = None,
    sweeps: int = 1,
    *,
    reuse: bool = True,
    tasks: int = 1,
    timeout: float = 60.0,
) -> HopmResult:
    """Distributed power method over the parts of dt.

    With reuse (the default) each rank rotates intermediates through
    three preallocated buffers: the first contraction of iteration j
    writes the carried tensor for iteration j+1, the rest of the chain
    ping-pongs across the remaining two.  reuse=False recomputes every
    chain from the input slab (the classical schedule); its counters
    follow the analytic model's charging conventions, see costmodel.

    All ranks return bitwise identical vectors; rank 0's are reported.
    """
    if dt.kind != DISJOINT:
        raise ContractError("the power method needs a disjoint input tensor")
    gshape = dt.global_shape()
    d = gshape.order
    if d < 2:
        raise ContractError("the power method needs order >= 2")
    extents = gshape.extents
    plan = dt.plan
    s = plan.s
    p = plan.p_eff
    mode = dt.mode
    x_init = x0 or initial_vectors(gshape, mode)
    if len(x_init) != d or any(v.size != extents[j] for j, v in enumerate(x_init)):
        raise ContractError("need one start vector per mode, matching extents")

    sim = simulate_hopm(extents, s, p, reuse=reuse)
    group = WorkerGroup(p, timeout=timeout)
    sb = mode.storage_bytes

    def worker(rank: int):
        part = dt.parts[rank]
        a, b = plan.ranges[rank]
        q = b - a
        x = [v.copy() for v in x_init]
        bufsize = max(sim[rank].buffer_elements, 1)
        bufs = [storage_empty(bufsize, mode) for _ in range(3)]
        w_idx: int | None = None
        w_tensor: Tensor | None = None
        w_contracted: frozenset = frozenset()
        w_partial = False
        kc = KernelCounters()
        norms: list[list[float]] = []
        touched: list[int] = []
        tvc_count = 0
        for _ in range(sweeps):
            lam = []
            for j in range(d):
                before = kc.elements_touched
                start_contracted, modes = iteration_plan(d, j, reuse)
                if reuse and j >= 2:
                    if w_contracted != start_contracted:
                        raise ContractError("carried tensor out of step with the schedule")
                    cur, contracted, partial = w_tensor, w_contracted, w_partial
                else:
                    cur, contracted, partial = part, frozenset(), False
                pool = [0, 1, 2] if w_idx is None else [ix for ix in (0, 1, 2) if ix != w_idx] + [w_idx]
                for t, k in enumerate(modes):
                    hits_split = k == s and not partial
                    vec = x[k][a:b] if hits_split else x[k]
                    slot = pool[0] if t == 0 else pool[1 + (t - 1) % 2]
                    in_elements = cur.size
                    cur = tvc_native(
                        cur,
                        vec,
                        mode_remap(k, contracted),
                        out=bufs[slot],
                        tasks=tasks,
                        counters=kc if reuse else None,
                    )
                    tvc_count += 1
                    contracted = contracted | {k}
                    partial = partial or hits_split
                    if not reuse:
                        # classical counters follow the model's conventions
                        final = t == len(modes) - 1
                        write = cur.size if (not final or j == s) else -(-extents[j] // p)
                        kc.count("tvc", in_elements + extents[k], write, sb)
                    if t == 0:
                        w_tensor, w_contracted, w_partial = cur, contracted, partial
                        new_w_idx = slot
                w_idx = new_w_idx
                if j == s:
                    if partial or cur.size != q:
                        raise ContractError("split mode did not survive its own iteration")
                    x[j] = group.all_gather(rank, cur.buf)
                else:
                    if mode.mixed:
                        group.all_reduce_sum_mixed(rank, cur.buf, mode)
                    else:
                        group.all_reduce_sum(rank, cur.buf)
                    x[j] = cur.buf.copy()
                lam.append(normalize(x[j], mode=mode, counters=kc if reuse else None))
                if not reuse:
                    share = q if j == s else extents[j]
                    kc.count("normalize", 2 * share, share, sb)
                touched.append(kc.elements_touched - before)
            norms.append(lam)
        return x, norms, tvc_count, kc, touched

    results = group.run(worker)
    x0v, norms0 = results[0][0], results[0][1]
    for x_r, *_ in results[1:]:
        if any(not np.array_equal(v0, vr) for v0, vr in zip(x0v, x_r)):
            raise ContractError("ranks disagree on the direction vectors")
    tvc_count = results[0][2]
    return HopmResult(
        vectors=x0v,
        norms=norms0,
        sweeps=sweeps,
        tvc_count=tvc_count,
        tvc_per_sweep=tvc_count // max(sweeps, 1),
        kernel_counters=[r[3] for r in results],
        comm_counters=group.counters,
        iteration_touched=[r[4] for r in results],
        reuse=reuse,
    )
