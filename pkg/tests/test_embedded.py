"""Embedded pre-posting chain: roots, infinite-queue head, truncation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poolqueue import (
    ModelType,
    NoRootError,
    PostingDistribution,
    SystemParams,
    admission_P,
    admission_tpm,
    build_tpm,
    characteristic_root,
    embedded_P,
    infinite_queue_Q,
    model_type,
    stationary_vector,
)


def exp_params(v, w, lam, a):
    return SystemParams(v=v, w=w, lam=lam, posting=PostingDistribution("exponential", a))


# -- parameter validation --------------------------------------------------


def test_params_validation():
    d = PostingDistribution("exponential", 1.0)
    with pytest.raises(ValueError, match="v must be"):
        SystemParams(v=0, w=5, lam=1.0, posting=d)
    with pytest.raises(ValueError, match="must not exceed capacity"):
        SystemParams(v=6, w=5, lam=1.0, posting=d)
    with pytest.raises(ValueError, match="lam must be positive"):
        SystemParams(v=1, w=5, lam=0.0, posting=d)


def test_derived_quantities():
    p = exp_params(2, 5, 2.0, 1.5)
    assert p.s == 3
    assert p.a == 1.5
    assert p.offered_load == pytest.approx(1.5)


def test_model_type_boundary():
    # type 1 iff capacity covers two full batches
    assert model_type(exp_params(2, 4, 1.0, 0.5)) is ModelType.TYPE1
    assert model_type(exp_params(2, 5, 1.0, 0.5)) is ModelType.TYPE1
    assert model_type(exp_params(3, 5, 1.0, 0.5)) is ModelType.TYPE2
    assert model_type(exp_params(5, 5, 1.0, 0.5)) is ModelType.TYPE2


# -- characteristic root ---------------------------------------------------


def test_root_v1_closed_form():
    # v=1: root is exactly 1 / (lam * a)
    assert characteristic_root(1, 1.0, 0.5) == pytest.approx(2.0, abs=1e-14)
    assert characteristic_root(1, 2.0, 0.4) == pytest.approx(1.25, abs=1e-14)


@given(
    v=st.integers(1, 12),
    rho=st.floats(0.05, 0.95),
    lam=st.floats(0.2, 4.0),
)
@settings(max_examples=80, deadline=None)
def test_root_satisfies_equation(v, rho, lam):
    a = rho * v / lam
    z0 = characteristic_root(v, lam, a)
    la = lam * a
    residual = (1 + la) * z0**v - la * z0 ** (v + 1) - 1.0
    assert z0 > 1.0
    assert abs(residual) < 1e-10 * max(1.0, z0**v)


def test_root_missing_at_heavy_load():
    with pytest.raises(NoRootError, match="offered load"):
        characteristic_root(1, 2.0, 0.5)  # load exactly 1
    with pytest.raises(NoRootError):
        characteristic_root(2, 2.2, 1.3)  # load 1.43


# -- infinite-queue head ---------------------------------------------------


def test_geometric_head_example():
    # v=1, lam*a = 0.5: Q_i = 0.5^{i+1}
    p = exp_params(1, 5, 1.0, 0.5)
    Q = infinite_queue_Q(p)
    assert Q[0] == pytest.approx(0.5, abs=1e-14)
    assert Q[3] == pytest.approx(0.5**4, abs=1e-14)


def test_geometric_head_second_example():
    # lam*a = 9 with v = 10: r = 1/z0, Q_0 = 1 - r
    p = exp_params(10, 20, 3.0, 3.0)
    z0 = characteristic_root(10, 3.0, 3.0)
    Q = infinite_queue_Q(p)
    assert Q[0] == pytest.approx(1.0 - 1.0 / z0, abs=1e-12)


@pytest.mark.parametrize("v", [1, 2, 5, 10])
@pytest.mark.parametrize("rho", [0.1, 0.5, 0.9])
def test_geometric_vs_truncated_solve(v, rho):
    # two independent routes to the same head must agree
    lam = 1.7
    a = rho * v / lam
    p = exp_params(v, max(2 * v, 6), lam, a)
    head = p.w - p.v + 1
    geo = infinite_queue_Q(p, method="geometric")[:head]
    num = infinite_queue_Q(p, method="solve")[:head]
    assert np.max(np.abs(geo - num)) < 1e-8


def test_truncated_solve_nonexponential_is_distribution_head():
    p = SystemParams(v=3, w=9, lam=1.0, posting=PostingDistribution("erlang", 1.5, shape=3))
    Q = infinite_queue_Q(p)
    assert np.all(Q[: p.w + 1] >= -1e-15)
    assert Q.sum() == pytest.approx(1.0, abs=1e-9)


def test_truncation_eps_invariance():
    p = SystemParams(v=2, w=8, lam=1.0, posting=PostingDistribution("deterministic", 1.0))
    head = p.w - p.v + 1
    a = infinite_queue_Q(p, eps=1e-10)[:head]
    b = infinite_queue_Q(p, eps=1e-13)[:head]
    assert np.max(np.abs(a - b)) < 1e-10


def test_infinite_queue_requires_stability():
    with pytest.raises(NoRootError):
        infinite_queue_Q(exp_params(2, 5, 2.2, 1.3))


def test_geometric_method_guard():
    p = SystemParams(v=2, w=6, lam=1.0, posting=PostingDistribution("deterministic", 1.0))
    with pytest.raises(ValueError, match="exponential"):
        infinite_queue_Q(p, method="geometric")


# -- truncate-and-renormalize vector ---------------------------------------


def test_embedded_P_kappa_example():
    # v=1, w=5, lam*a=0.5: the retained head Q_0..Q_4 sums to 1 - 0.5^5
    p = exp_params(1, 5, 1.0, 0.5)
    sol = embedded_P(p)
    assert sol.norm_constant == pytest.approx(1.0 / (1.0 - 0.5**5), abs=1e-12)
    assert sol.norm_constant == pytest.approx(1.0322580645161292, abs=1e-9)
    assert sol.P.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(sol.P[p.w - p.v + 1 :] == 0.0)


def test_embedded_P_full_batch_capacity():
    # v = w: the only retained state is 0
    sol = embedded_P(exp_params(4, 4, 1.0, 0.5))
    assert sol.P[0] == pytest.approx(1.0)
    assert sol.root is not None


def test_embedded_P_nonexponential_has_no_root():
    p = SystemParams(v=2, w=6, lam=1.0, posting=PostingDistribution("erlang", 1.0, shape=2))
    sol = embedded_P(p)
    assert sol.root is None
    assert sol.P.sum() == pytest.approx(1.0, abs=1e-10)


# -- transition matrices ---------------------------------------------------


def test_build_tpm_shape_and_rows():
    p = exp_params(2, 5, 1.0, 0.5)
    M = build_tpm(p)
    assert M.shape == (6, 6)
    assert np.allclose(M.sum(axis=1), 1.0, atol=1e-12)
    # rows 0..v all share the unshifted kernel row
    assert np.array_equal(M[0], M[2])
    # unreachable states get the diagnostic self-loop
    assert M[4, 4] == 1.0 and M[5, 5] == 1.0


def test_build_tpm_shifted_entry():
    # v=2, w=6: row 3 has leftover 1, so entry (3, 1) is the kernel at 0
    p = exp_params(2, 6, 1.0, 0.5)
    M = build_tpm(p)
    assert M[3, 1] == pytest.approx(p.posting.psi(p.lam, 0))
    assert M[3, 0] == 0.0


def test_admission_tpm_rows_and_tail():
    p = SystemParams(v=3, w=7, lam=2.0, posting=PostingDistribution("erlang", 0.9, shape=2))
    M = admission_tpm(p)
    assert np.allclose(M.sum(axis=1), 1.0, atol=1e-12)
    # the final column carries the clipped kernel tail from every row
    row, tail = p.posting.psi_row(p.lam, p.w)
    assert M[0, p.w] == pytest.approx(tail + row[p.w], abs=1e-12)


def test_stationary_vector_two_state():
    M = np.array([[0.7, 0.3], [0.4, 0.6]])
    pi = stationary_vector(M)
    assert pi == pytest.approx([4 / 7, 3 / 7])


def test_admission_P_is_distribution_any_load():
    # works above offered load 1, where the infinite-queue head does not exist
    p = exp_params(2, 5, 2.2, 1.3)
    pre = admission_P(p)
    assert pre.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(pre >= -1e-15)
