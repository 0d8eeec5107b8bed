import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tenvec.kernels import (
    MATVEC,
    VECMAT,
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
from tenvec.precision import BF16F32, F16F32, F32F64, F64, MODES, demote, promote
from tenvec.tensor import Shape, Tensor

from .reference import contract_loops, scalar_demote, scalar_promote


def test_getvc_matvec_example():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    y = np.empty(2)
    getvc(MATVEC, 1.0, a, np.array([10.0, 1.0]), 0.0, y)
    assert y.tolist() == [12.0, 34.0]


def test_getvc_vecmat_example():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    y = np.empty(2)
    getvc(VECMAT, 1.0, a, np.array([10.0, 1.0]), 0.0, y)
    assert y.tolist() == [13.0, 24.0]


def test_getvc_alpha_zero_beta_one_is_identity():
    a = np.array([[5.0, 6.0], [7.0, 8.0]])
    y = np.array([7.0, 7.0])
    getvc(MATVEC, 0.0, a, np.array([1.0, 1.0]), 1.0, y)
    assert y.tolist() == [7.0, 7.0]


def test_getvc_beta_zero_never_reads_y():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    y = np.full(2, np.nan)
    getvc(MATVEC, 1.0, a, np.array([10.0, 1.0]), 0.0, y)
    assert not np.any(np.isnan(y))


def test_getvc_dimension_mismatch():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(KernelError):
        getvc(MATVEC, 1.0, a, np.ones(3), 0.0, np.empty(2))


def test_task_ranges_cover_exactly_once():
    for total in (1, 5, 8, 17):
        for tasks in (1, 2, 3, 8, 30):
            ranges = task_ranges(total, tasks)
            hits = np.zeros(total, dtype=int)
            for a, b in ranges:
                hits[a:b] += 1
            assert np.all(hits == 1), (total, tasks)


def test_tvc_native_ones_example():
    t = Tensor.from_array(np.ones((2, 3, 4)))
    y = tvc_native(t, np.ones(3), 1)
    assert y.shape.extents == (2, 4)
    assert np.all(y.to_float64() == 3.0)


def test_tvc_matches_oracles_on_random_shapes():
    rng = np.random.default_rng(1234)
    for _ in range(200):
        d = int(rng.integers(2, 6))
        extents = tuple(int(e) for e in rng.integers(1, 7, d))
        vals = rng.integers(1, 97, extents).astype(float)
        t = Tensor.from_array(vals)
        k = int(rng.integers(0, d))
        x = rng.integers(1, 97, extents[k]).astype(float)
        native = tvc_native(t, x, k).to_float64()
        looped = tvc_looped_oracle(t, x, k)
        assert np.array_equal(native, looped)
        assert np.array_equal(looped.reshape(-1), contract_loops(vals, x, k).reshape(-1))


def test_tvc_tasked_integer_data_bitwise():
    # exactly representable data leaves nothing for the task split to
    # reassociate, so any task count must reproduce the same bits
    rng = np.random.default_rng(5)
    t = Tensor.from_array(rng.integers(-9, 10, (4, 5, 6)).astype(float))
    for k in range(3):
        x = rng.integers(1, 8, t.shape.extents[k]).astype(float)
        base = tvc_native(t, x, k).to_float64()
        for tasks in (2, 3, 7):
            assert np.array_equal(tvc_native(t, x, k, tasks=tasks).to_float64(), base)


def test_tvc_tasked_float_data_reproducible_and_close():
    # each task count fixes its own reduction blocking: repeated runs are
    # bit-identical, different task counts agree to rounding error
    rng = np.random.default_rng(5)
    t = Tensor.from_array(rng.standard_normal((4, 5, 6)))
    for k in range(3):
        x = rng.standard_normal(t.shape.extents[k])
        base = tvc_native(t, x, k).to_float64()
        for tasks in (1, 2, 3, 7):
            first = tvc_native(t, x, k, tasks=tasks).to_float64()
            again = tvc_native(t, x, k, tasks=tasks).to_float64()
            assert np.array_equal(first, again)
            assert np.allclose(first, base, rtol=1e-13, atol=1e-13)


def test_tvc_beta_zero_output_written_everywhere():
    t = Tensor.from_array(np.ones((3, 4, 2)))
    for k in range(3):
        out = np.full(t.size // t.shape.extents[k], np.nan)
        y = tvc_native(t, np.ones(t.shape.extents[k]), k, out=out, tasks=3)
        assert not np.any(np.isnan(y.buf))


def test_tvc_unit_vector_selects_slice():
    rng = np.random.default_rng(9)
    vals = rng.standard_normal((3, 4, 5))
    t = Tensor.from_array(vals)
    e2 = np.zeros(4)
    e2[2] = 1.0
    got = tvc_native(t, e2, 1).to_float64()
    assert np.allclose(got, vals[:, 2, :], rtol=0, atol=0)


def test_tvc_counters_mode_oblivious():
    n, d = 4, 3
    t = Tensor.from_array(np.ones((n,) * d))
    counts = []
    for k in range(d):
        kc = KernelCounters()
        tvc_native(t, np.ones(n), k, counters=kc)
        counts.append((kc.elements_read, kc.elements_written))
    assert counts == [(64 + 4, 16)] * d
    kc = KernelCounters()
    tvc_native(t, np.ones(n), 1, beta=1.0, out=np.zeros(16), counters=kc)
    assert kc.elements_read == 64 + 4 + 16  # beta != 0 also reads y


def test_tvc_linearity():
    rng = np.random.default_rng(17)
    t = Tensor.from_array(rng.standard_normal((4, 3, 5)))
    x = rng.standard_normal(3)
    z = rng.standard_normal(3)
    a, b = 1.7, -0.3
    lhs = tvc_native(t, a * x + b * z, 1).to_float64()
    rhs = a * tvc_native(t, x, 1).to_float64() + b * tvc_native(t, z, 1).to_float64()
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_tvc_vector_length_mismatch():
    t = Tensor.from_array(np.ones((2, 3)))
    with pytest.raises(KernelError):
        tvc_native(t, np.ones(2), 1)
    with pytest.raises(KernelError):
        tvc_native(t, np.ones(3), 1, out=np.empty(1))


def test_tvc_mixed_precision_accumulates_wide():
    # a half-storage sum that would die at 65504 if accumulated narrow
    t = Tensor.from_array(np.full((1, 4096), 32.0), F16F32)
    y = tvc_native(t, np.ones(4096, np.float16), 1)
    # 131072 overflows half on store (documented saturation), but the
    # compute-precision accumulation must reach it exactly first
    assert promote(y.buf, F16F32)[0] == np.float32(np.inf)
    t2 = Tensor.from_array(np.full((1, 1000), 32.0), F16F32)
    y2 = tvc_native(t2, np.ones(1000, np.float16), 1)
    assert promote(y2.buf, F16F32)[0] == np.float32(32000.0)


def test_axpby_examples():
    y = np.array([9.0], dtype=np.float16)
    axpby(2.0, np.array([1.5], np.float16), 0.0, y, mode=F16F32)
    assert y[0] == np.float16(3.0)
    y = np.array([1.0, 2.0, 3.0])
    axpby(1.0, np.array([1.0, 2.0, 3.0]), 1.0, y, mode=F64)
    assert y.tolist() == [2.0, 4.0, 6.0]


@pytest.mark.parametrize("name", sorted(MODES))
def test_axpby_matches_scalar_reference(name):
    mode = MODES[name]
    rng = np.random.default_rng(31)
    n = 1000
    x = demote(rng.standard_normal(n), mode)
    y0 = demote(rng.standard_normal(n), mode)
    alpha, beta = 1.25, -0.5
    y = y0.copy()
    axpby(alpha, x, beta, y, mode=mode, vl=8)
    ct = mode.compute_dtype.type
    want = np.array(
        [
            scalar_demote(ct(alpha) * ct(scalar_promote(x[i], mode)) + ct(beta) * ct(scalar_promote(y0[i], mode)), mode)
            for i in range(n)
        ],
        dtype=y.dtype,
    )
    assert np.array_equal(y, want)


def test_axpby_counters_and_errors():
    kc = KernelCounters()
    y = np.ones(10)
    axpby(1.0, np.ones(10), 1.0, y, counters=kc)
    assert (kc.elements_read, kc.elements_written) == (20, 10)
    kc = KernelCounters()
    axpby(1.0, np.ones(10), 0.0, y, counters=kc)
    assert (kc.elements_read, kc.elements_written) == (10, 10)
    with pytest.raises(KernelError):
        axpby(1.0, np.ones(3), 1.0, np.ones(4))


def test_norm2_and_normalize():
    x = np.array([3.0, 4.0])
    assert norm2(x) == 5.0
    kc = KernelCounters()
    nrm = normalize(x, counters=kc)
    assert nrm == 5.0
    assert np.allclose(x, [0.6, 0.8], rtol=0, atol=0)
    assert kc.elements_touched == 6  # 3n convention
    # idempotence on a unit vector
    y = x.copy()
    normalize(y)
    assert np.array_equal(x, y)
    with pytest.raises(NormalizationError):
        normalize(np.zeros(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_normalize_unit_norm_within_4_ulp(seed):
    x = np.random.default_rng(seed).standard_normal(1000)
    normalize(x)
    err = abs(norm2(x) - 1.0)
    assert err <= 4 * np.finfo(np.float64).eps


def test_normalize_mixed_precision_counts_storage_bytes():
    x = demote(np.random.default_rng(2).standard_normal(64), BF16F32)
    kc = KernelCounters()
    normalize(x, mode=BF16F32, counters=kc)
    assert kc.bytes_touched == 3 * 64 * BF16F32.storage_bytes
    assert abs(norm2(x, mode=BF16F32) - 1.0) < 1e-2  # brain storage is coarse


def test_getvc_mixed_storage_pipeline():
    # brain storage: promote to f32, contract in f32, truncate on store
    a64 = np.array([[1.5, 2.25], [3.0, -4.5]])
    x64 = np.array([0.5, 2.0])
    a = Tensor.from_array(a64, BF16F32)
    xs = demote(x64, BF16F32)
    y = tvc_native(a, xs, 1)
    ap = promote(a.buf, BF16F32).reshape(2, 2)
    want = demote(ap @ promote(xs, BF16F32), BF16F32)
    assert np.array_equal(y.buf, want)
    # all chosen values are exactly representable in brain, so the result
    # also matches the wide reference after one final truncation
    assert np.array_equal(y.buf, demote(a64 @ x64, BF16F32))


def test_f32f64_runs_and_stays_close():
    rng = np.random.default_rng(12)
    t = Tensor.from_array(rng.standard_normal((4, 4)), F32F64)
    x = demote(rng.standard_normal(4), F32F64)
    y = tvc_native(t, x, 1)
    wide = promote(t.buf, F32F64).reshape(4, 4) @ promote(x, F32F64)
    assert np.allclose(promote(y.buf, F32F64), wide, rtol=1e-7)
