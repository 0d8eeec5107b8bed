"""Dense tensor-vector contraction with mode-oblivious streaming cost.

The library couples four things that are usually studied apart: a native
contraction kernel whose streamed memory is identical for every mode, a
one-dimensional distribution layer with ring collectives, a three-buffer
distributed power method that skips already-computed contraction chains,
and an exact analytic model of the elements every variant must stream.
Instrumented counters let each measured run be audited against the model.
"""

from .bench import (
    BenchConfig,
    BenchResult,
    ConfigError,
    GridStats,
    emit_cost_csv,
    emit_csv,
    parse_dims,
    preset_shape,
    run_bench,
    stream_triad,
    sweep_grid,
)
from .comm import (
    CollectiveError,
    CollectiveTimeout,
    CommCounters,
    WorkerGroup,
    ring_all_gather,
    ring_all_reduce,
    ring_all_reduce_mixed,
    ring_chunks,
)
from .costmodel import (
    CostReport,
    H_inv,
    M_par,
    M_par_bracketed,
    M_par_min,
    M_seq,
    cost_report,
    eta_inv,
    iteration_plan,
    m_par,
    m_seq,
    ring_overhead,
    simulate_hopm,
    splitting_shift_residual,
    sweep_steps,
    tvc_per_sweep,
)
from .hopm import (
    ContractError,
    DistributedTensor,
    HopmResult,
    dhopm3,
    distribute,
    dtvc,
    hopm_canonical,
    initial_vectors,
    mode_remap,
    undistribute,
)
from .kernels import (
    KernelCounters,
    KernelError,
    NormalizationError,
    axpby,
    getvc,
    norm2,
    normalize,
    task_ranges,
    tvc_looped_oracle,
    tvc_native,
)
from .precision import (
    BF16F32,
    F16F32,
    F32,
    F32F64,
    F64,
    MODES,
    ModeError,
    PrecisionMode,
    bf16_bits_to_f32,
    demote,
    f32_to_bf16_bits,
    parse_mode,
    promote,
)
from .tensor import (
    AssemblyError,
    AssemblyStats,
    Shape,
    SplitPlan,
    Tensor,
    interleave_messages_per_rank,
    linear_index,
    make_split_plan,
    matricize_dims,
    optimal_division,
    parse_shape,
    reassemble,
    reassemble_with_stats,
    split,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
