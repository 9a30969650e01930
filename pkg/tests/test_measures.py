import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from swent.errors import DimensionError, ValidationError
from swent.measures import (MeasureSpec, Norm, block_norm, composite_measure_bound,
                            composite_vector_norm, induced_norm, is_metzler, lower_measure,
                            matrix_measure, measure, measure_batch, metzler_eigen_max,
                            network_matrix_of)

from oracles import (composite_measure_lower, composite_norm, measure_by_difference_quotient)

KINDS = ["one", "two", "inf"]

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square(n_min=1, n_max=5):
    return st.integers(n_min, n_max).flatmap(lambda n: arrays(np.float64, (n, n), elements=finite))


def test_example_matrix_all_kinds():
    A = [[-1, 0.1], [0.1, -1]]
    for kind in KINDS:
        assert matrix_measure(A, kind) == pytest.approx(-0.9, abs=1e-12)


def test_row_and_column_sums():
    A = np.array([[1.0, -2.0], [0.5, -3.0]])
    assert matrix_measure(A, "inf") == pytest.approx(max(1 + 2, -3 + 0.5))
    assert matrix_measure(A, "one") == pytest.approx(max(1 + 0.5, -3 + 2))
    assert matrix_measure(A, "two") == pytest.approx(np.linalg.eigvalsh((A + A.T) / 2)[-1])


def test_identity_and_zero():
    for kind in KINDS:
        assert matrix_measure(np.eye(3), kind) == pytest.approx(1.0)
        assert matrix_measure(np.zeros((3, 3)), kind) == 0.0


def test_rejects_non_square_and_nonfinite():
    with pytest.raises(DimensionError):
        matrix_measure(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        matrix_measure([[np.nan, 0], [0, 1]])
    with pytest.raises(ValidationError):
        Norm.parse("three")


@pytest.mark.parametrize("kind", KINDS)
def test_agrees_with_difference_quotient(kind):
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = rng.integers(2, 7)
        A = rng.normal(size=(n, n))
        assert matrix_measure(A, kind) == pytest.approx(measure_by_difference_quotient(A, kind), abs=1e-5)


@settings(max_examples=60, deadline=None)
@given(square(), st.sampled_from(KINDS))
def test_sandwich_of_eigenvalue_real_parts(A, kind):
    lam = np.linalg.eigvals(A).real
    tol = 1e-9 * (1 + np.abs(A).sum())
    assert lower_measure(A, MeasureSpec.basic(kind)) <= lam.min() + tol
    assert lam.max() <= matrix_measure(A, kind) + tol


@settings(max_examples=60, deadline=None)
@given(square(2, 4).flatmap(lambda A: st.tuples(st.just(A), arrays(np.float64, A.shape, elements=finite))),
       st.sampled_from(KINDS), st.floats(0, 5))
def test_subadditive_and_positively_homogeneous(AB, kind, c):
    A, B = AB
    tol = 1e-9 * (1 + np.abs(A).sum() + np.abs(B).sum())
    assert matrix_measure(A + B, kind) <= matrix_measure(A, kind) + matrix_measure(B, kind) + tol
    assert matrix_measure(c * A, kind) == pytest.approx(c * matrix_measure(A, kind), abs=tol * (1 + c))
    assert matrix_measure(A + c * np.eye(len(A)), kind) == pytest.approx(matrix_measure(A, kind) + c,
                                                                        abs=tol * (1 + c))


@settings(max_examples=60, deadline=None)
@given(square(), st.sampled_from(KINDS))
def test_measure_bounded_by_norm(A, kind):
    tol = 1e-9 * (1 + np.abs(A).sum())
    assert abs(matrix_measure(A, kind)) <= induced_norm(A, kind) + tol


def test_batch_matches_scalar():
    rng = np.random.default_rng(2)
    J = rng.normal(size=(20, 4, 4))
    for kind in KINDS:
        spec = MeasureSpec.basic(kind)
        assert np.allclose(measure_batch(J, spec), [matrix_measure(M, kind) for M in J])
    spec = MeasureSpec.composite([2, 2], ["one", "two"], "inf")
    assert np.allclose(measure_batch(J, spec), [measure(M, spec) for M in J])


def _sampled_block_norm(A, out_kind, in_kind, rng, samples=20000):
    """Lower estimate of the block norm plus exact vertex maxima where available."""
    ordp = {"one": 1, "two": 2, "inf": np.inf}
    k = A.shape[1]
    V = rng.standard_normal((samples, k))
    if in_kind == "inf":
        V = np.vstack([V, np.array(list(itertools.product((-1.0, 1.0), repeat=k)))])
    if in_kind == "one":
        V = np.vstack([V, np.eye(k)])
    V /= np.linalg.norm(V, ordp[in_kind], axis=1)[:, None]
    return np.max(np.linalg.norm(V @ A.T, ordp[out_kind], axis=1))


@pytest.mark.parametrize("out_kind,in_kind", list(itertools.product(KINDS, KINDS)))
def test_block_norm_against_sampling(out_kind, in_kind):
    rng = np.random.default_rng(3)
    for _ in range(10):
        A = rng.normal(size=(rng.integers(1, 4), rng.integers(1, 4)))
        exact = block_norm(A, out_kind, in_kind)
        sampled = _sampled_block_norm(A, out_kind, in_kind, rng)
        assert sampled <= exact + 1e-9
        exact_vertices = in_kind in ("one", "inf")
        assert sampled >= exact * (1 - (1e-9 if exact_vertices else 2e-2))


def test_block_norm_mixed_pair_is_not_spectral_norm():
    # infinity -> one norm of the all-ones 2x2 block is 4, its largest singular value is 2
    A = np.ones((2, 2))
    assert block_norm(A, "one", "inf") == pytest.approx(4.0)
    assert np.linalg.norm(A, 2) == pytest.approx(2.0)


def test_network_matrix_example_blocks():
    A = np.array([[-1, 0.1, 0.3], [0.1, -1, 0], [0.2, -0.4, -2]])
    spec = MeasureSpec.composite([2, 1])
    N = network_matrix_of(A, spec)
    assert N[0, 0] == pytest.approx(-0.9)
    assert N[0, 1] == pytest.approx(0.3)
    assert N[1, 0] == pytest.approx(0.6)
    assert N[1, 1] == pytest.approx(-2.0)
    assert is_metzler(N)


def test_composite_vector_norm_matches_oracle():
    rng = np.random.default_rng(4)
    spec = MeasureSpec.composite([2, 3, 1], ["one", "two", "inf"], "two")
    for _ in range(20):
        v = rng.normal(size=6)
        assert composite_vector_norm(v, spec) == pytest.approx(
            composite_norm(v, [2, 3, 1], ["one", "two", "inf"], "two")[0])


def test_basic_spec_has_no_network_bound():
    with pytest.raises(ValidationError):
        network_matrix_of(np.eye(2), MeasureSpec.basic("inf"))
    with pytest.raises(ValidationError):
        matrix_measure(np.eye(2), MeasureSpec.composite([1, 1]))


def test_composite_with_singleton_blocks_and_inf_network_equals_basic_inf():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(4, 4))
    spec = MeasureSpec.composite([1, 1, 1, 1], "inf", "inf")
    assert composite_measure_bound(A, spec) == pytest.approx(matrix_measure(A, "inf"))


def test_aggregation_bound_against_sampled_composite_measure():
    rng = np.random.default_rng(6)
    for _ in range(10):
        part = [2, 1, 2]
        local = list(rng.choice(KINDS, size=3))
        net = str(rng.choice(KINDS))
        A = rng.normal(size=(5, 5))
        spec = MeasureSpec.composite(part, local, net)
        est = composite_measure_lower(A, part, local, net, rng, samples=4000)
        assert est <= composite_measure_bound(A, spec) + 1e-6


def test_metzler_monotonicity_of_network_measure():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = rng.integers(2, 5)
        B = rng.normal(size=(m, m))
        B[~np.eye(m, dtype=bool)] = np.abs(B[~np.eye(m, dtype=bool)])
        A = B + np.abs(rng.normal(size=(m, m)))
        for kind in KINDS:
            assert matrix_measure(A, kind) >= matrix_measure(B, kind) - 1e-12


def test_metzler_eigen_max_is_real_rightmost():
    A = np.array([[-2.0, 1.0], [3.0, -1.0]])
    lam = np.linalg.eigvals(A)
    assert metzler_eigen_max(A) == pytest.approx(lam.real.max())
    with pytest.raises(ValidationError):
        metzler_eigen_max([[0, -1], [1, 0]])


def test_metzler_eigenvalue_below_every_measure():
    rng = np.random.default_rng(8)
    for _ in range(30):
        m = 3
        A = np.abs(rng.normal(size=(m, m))) - 3 * np.eye(m)
        lam = metzler_eigen_max(A)
        for kind in KINDS:
            assert lam <= matrix_measure(A, kind) + 1e-12
