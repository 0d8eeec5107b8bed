"""Analytic streamed-memory model for the higher-order power method.

All quantities count streamed elements per rank and per sweep for
hypersquare tensors (order d, extent n, split mode s over p ranks):

    m_seq          one external iteration, sequential
    m_par          one external iteration, distributed (j = s or j != s)
    M_par          full sweep, distributed, closed form
    M_par_min      the s-independent floor of M_par
    eta_inv        p * M_par / M_seq, the parallel traffic inflation
    H_inv          M_par over the simulated traffic of the reuse schedule
    ring_overhead  per-rank elements moved by one length-n ring allreduce

Closed forms are exact rationals.  The counting conventions: the tensor
and every intermediate stream once per read and once per write, input
vectors are read in full on every rank, the final output write is charged
at one rank's share, and normalization costs three passes over that same
share for the gather iteration (j = s) or over the full vector otherwise.

The schedule simulator below walks the exact per-rank contraction
sequence (with or without reuse of the carried W tensor) for arbitrary
shapes and is the source of truth where the closed forms do not apply.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .tensor import make_split_plan


def _geom_sum(n: int, lo: int, hi: int) -> int:
    return sum(n**k for k in range(lo, hi + 1)) if hi >= lo else 0


def _check(d: int, n: int, p: int = 1, s: int = 0) -> None:
    if d < 2:
        raise ValueError("the power method needs order >= 2")
    if n < 1 or p < 1:
        raise ValueError("extent and rank count must be >= 1")
    if not 0 <= s < d:
        raise ValueError(f"split mode {s} out of range for order {d}")


def _bracket(num: int, n: int, p: int, division: str) -> Fraction:
    """[num / p]: per-rank share of a size-num block split along one
    extent-n mode; ceiling charges the full ceil(n/p) chunk."""
    if division == "exact":
        return Fraction(num, p)
    if division == "ceiling":
        return Fraction((num // n) * -(-n // p))
    raise ValueError(f"unknown division mode {division!r}")


def m_seq(d: int, n: int) -> int:
    """Sequential streamed elements of one external iteration."""
    _check(d, n)
    return n**d + 2 * _geom_sum(n, 2, d - 1) + (d + 3) * n


def M_seq(d: int, n: int) -> int:
    return d * m_seq(d, n)


def m_par(d: int, n: int, p: int, s: int, j: int, division: str = "ceiling") -> tuple[Fraction, Fraction]:
    """Distributed streamed elements of external iteration j.

    Returns (bracketed, approximate).  The two coincide whenever p
    divides n.  For j != s the iteration crosses the split mode and pays
    full-size intermediates from that point on: l = 0 below the split,
    l = 1 above it.
    """
    _check(d, n, p, s)
    if not 0 <= j < d:
        raise ValueError(f"iteration {j} out of range for order {d}")
    over = Fraction(p - 1, p)
    base_br = (
        _bracket(n**d, n, p, division)
        + 2 * sum(_bracket(n**k, n, p, division) for k in range(2, d))
        + 4 * _bracket(n, n, p, division)
        + (d - 1) * n
    )
    base_ap = Fraction(m_seq(d, n), p) + over * (d - 1) * n
    if j == s:
        return base_br, base_ap
    l = 0 if j < s else 1
    extra = over * (2 * _geom_sum(n, 2, d - s - l) + 3 * n)
    approx = Fraction(m_seq(d, n), p) + over * (2 * _geom_sum(n, 2, d - s - l) + (d + 2) * n)
    return base_br + extra, approx


def M_par(d: int, n: int, p: int, s: int) -> Fraction:
    """Closed-form per-rank sweep total for the classical schedule."""
    _check(d, n, p, s)
    over = Fraction(p - 1, p)
    return (
        Fraction(M_seq(d, n), p)
        + over * (d - 1) * (d + 3) * n
        + over * (s * 2 * _geom_sum(n, 2, d - s) + (d - s - 1) * 2 * _geom_sum(n, 2, d - s - 1))
    )


def M_par_min(d: int, n: int, p: int) -> Fraction:
    """The s-independent part of M_par; attained at s = d-1."""
    _check(d, n, p)
    return Fraction(M_seq(d, n), p) + Fraction(p - 1, p) * (d - 1) * (d + 3) * n


def M_par_bracketed(d: int, n: int, p: int, s: int, division: str = "ceiling") -> Fraction:
    """Sweep total assembled from the bracketed per-iteration counts."""
    total = Fraction(0)
    for j in range(d):
        total += m_par(d, n, p, s, j, division)[0]
    return total


def splitting_shift_residual(d: int, n: int, p: int, s: int) -> Fraction:
    """Zero iff moving the split from mode s to s-1 costs exactly
    (p-1)/p * ((d-s-1) 2n^{d-s} + (s-1) 2n^{d-s+1}) more per sweep."""
    _check(d, n, p, s)
    if s < 1:
        raise ValueError("the recursion relates s to s-1, so s >= 1")
    step = Fraction(p - 1, p) * ((d - s - 1) * 2 * n ** (d - s) + (s - 1) * 2 * n ** (d - s + 1))
    return M_par(d, n, p, s - 1) - M_par(d, n, p, s) - step


def ring_overhead(n: int, p: int) -> Fraction:
    """Per-rank elements touched by one ring allreduce of length n."""
    if n < 0 or p < 1:
        raise ValueError("need n >= 0 and p >= 1")
    return Fraction(4 * n * (p - 1), p)


# -- schedule simulation ---------------------------------------------------


def iteration_plan(d: int, j: int, reuse: bool) -> tuple[frozenset, list[int]]:
    """Modes contracted in external iteration j, in execution order,
    plus the modes already folded into the iteration's input tensor.

    With reuse, iterations 0 and 1 run the full chain from the input
    tensor while every later iteration starts from the carried tensor W
    (modes 0..j-2 already contracted) and only folds mode j-1 plus the
    modes above j.  Without reuse every iteration runs the full chain.
    """
    if not reuse:
        return frozenset(), [k for k in range(d) if k != j]
    if j == 0:
        return frozenset(), list(range(1, d))
    if j == 1:
        return frozenset(), [0] + list(range(2, d))
    return frozenset(range(j - 1)), [j - 1] + list(range(j + 1, d))


def tvc_per_sweep(d: int, reuse: bool) -> int:
    return sum(len(iteration_plan(d, j, reuse)[1]) for j in range(d))


@dataclass(frozen=True)
class TvcStep:
    j: int
    k: int
    in_elements: int
    out_elements: int
    vec_full: int
    vec_local: int
    is_final: bool
    partial_out: bool


def sweep_steps(extents: tuple[int, ...], s: int, rank_range: tuple[int, int], reuse: bool = True) -> list[TvcStep]:
    """Exact per-rank contraction sequence of one sweep.

    rank_range is the half-open slice this rank owns along mode s.  A
    contraction of the split mode switches the running tensor from the
    owned slab to a full-size partial sum; all sizes downstream of that
    point are global.
    """
    d = len(extents)
    a, b = rank_range
    q = b - a

    def size(contracted: frozenset, partial: bool) -> int:
        tot = 1
        for i, n in enumerate(extents):
            if i not in contracted:
                tot *= n if (partial or i != s) else q
        return tot

    steps = []
    for j in range(d):
        contracted, modes = iteration_plan(d, j, reuse)
        partial = s in contracted
        cur = size(contracted, partial)
        for t, k in enumerate(modes):
            hits_split = k == s and not partial
            nxt_contracted = contracted | {k}
            nxt_partial = partial or hits_split
            nxt = size(nxt_contracted, nxt_partial)
            steps.append(
                TvcStep(
                    j=j,
                    k=k,
                    in_elements=cur,
                    out_elements=nxt,
                    vec_full=extents[k],
                    vec_local=q if hits_split else extents[k],
                    is_final=t == len(modes) - 1,
                    partial_out=nxt_partial,
                )
            )
            contracted, partial, cur = nxt_contracted, nxt_partial, nxt
    return steps


@dataclass
class HopmSimRank:
    """Per-rank sweep simulation: streamed elements per external
    iteration, the sweep total, and the largest intermediate."""

    iteration_touched: list[int]
    buffer_elements: int
    tvc_count: int

    @property
    def touched(self) -> int:
        return sum(self.iteration_touched)


def simulate_hopm(
    extents: tuple[int, ...],
    s: int,
    p: int,
    vl: int = 1,
    reuse: bool = True,
    convention: str = "natural",
) -> list[HopmSimRank]:
    """Walk one sweep on every rank and count streamed elements.

    convention "natural" mirrors the kernel counters of the executing
    code: actual buffer sizes, the local slice of the contraction vector
    when the split mode is hit, full-vector normalization.  Convention
    "model" reproduces the closed forms instead: full vectors always, the
    final write charged at one rank's share, normalization over the share
    for j = s and over the full vector otherwise.
    """
    if convention not in ("natural", "model"):
        raise ValueError(f"unknown convention {convention!r}")
    d = len(extents)
    plan = make_split_plan(extents[s], s, p, vl)
    ranks = []
    for rank_range in plan.ranges:
        steps = sweep_steps(extents, s, rank_range, reuse)
        per_iter = [0] * d
        buffer_elements = 0
        for st in steps:
            buffer_elements = max(buffer_elements, st.out_elements)
            if convention == "natural":
                write = st.out_elements
                vec = st.vec_local
            else:
                vec = st.vec_full
                if st.is_final:
                    write = st.out_elements if st.j == s else -(-extents[st.j] // plan.p_eff)
                else:
                    write = st.out_elements
            per_iter[st.j] += st.in_elements + vec + write
        for j in range(d):
            if convention == "natural":
                per_iter[j] += 3 * extents[j]
            else:
                b, a = rank_range[1], rank_range[0]
                per_iter[j] += 3 * (b - a) if j == s else 3 * extents[j]
        ranks.append(HopmSimRank(per_iter, buffer_elements, len(steps)))
    return ranks


# -- derived ratios --------------------------------------------------------


def eta_inv(d: int, n: int, p: int, s: int) -> Fraction:
    """How much more the p ranks stream in total than one rank would."""
    return p * M_par(d, n, p, s) / M_seq(d, n)


def H_inv(d: int, n: int, p: int, s: int) -> Fraction:
    """Streamed-memory economy of the reuse schedule over the classical
    one: closed-form M_par divided by the simulated reuse traffic of the
    widest rank."""
    sim = simulate_hopm((n,) * d, s, p, reuse=True, convention="natural")
    return M_par(d, n, p, s) / sim[0].touched


@dataclass
class CostReport:
    d: int
    n: int
    p: int
    s: int
    m_seq: int
    M_par: Fraction
    M_par_min: Fraction
    eta_inv: Fraction
    H_inv: Fraction
    ring_overhead: Fraction


def cost_report(d: int, n: int, p: int, s: int) -> CostReport:
    _check(d, n, p, s)
    return CostReport(
        d=d,
        n=n,
        p=p,
        s=s,
        m_seq=m_seq(d, n),
        M_par=M_par(d, n, p, s),
        M_par_min=M_par_min(d, n, p),
        eta_inv=eta_inv(d, n, p, s),
        H_inv=H_inv(d, n, p, s),
        ring_overhead=ring_overhead(n, p),
    )
