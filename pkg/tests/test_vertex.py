import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgraph import ConditionError, VertexCondition, validate_condition, vertex_sigma
from qgraph.vertex import nk_matrices, vertex_sigma_derivative
from conftest import random_general


def test_dirichlet_as_general_is_valid():
    validate_condition(VertexCondition.general(np.eye(3), np.zeros((3, 3))), 3)


def test_zero_pair_has_low_rank():
    with pytest.raises(ConditionError, match="rank"):
        validate_condition(VertexCondition.general(np.zeros((2, 2)), np.zeros((2, 2))), 2, "v")


def test_non_hermitian_product_rejected():
    A = np.array([[1, 0], [0, 1]])
    B = np.array([[0, 1], [0, 0]])
    with pytest.raises(ConditionError, match="Hermitian"):
        validate_condition(VertexCondition.general(A, B), 2, "v7")


def test_error_names_vertex():
    with pytest.raises(ConditionError, match="v7"):
        validate_condition(VertexCondition.general(np.zeros((1, 1)), np.zeros((1, 1))), 1, "v7")


def test_shape_mismatch():
    with pytest.raises(ConditionError, match="2x2"):
        validate_condition(VertexCondition.general(np.eye(3), np.eye(3)), 2)


def test_constant_must_be_unitary():
    validate_condition(VertexCondition.constant([[0, 1], [1, 0]]), 2)
    with pytest.raises(ConditionError, match="unitary"):
        validate_condition(VertexCondition.constant([[0.5, 0], [0, 1]]), 2)
    assert not VertexCondition.constant([[1]]).validated


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_nk_matrices_realise_nk(d):
    A, B = nk_matrices(d)
    cond = validate_condition(VertexCondition.general(A, B), d)
    np.testing.assert_allclose(vertex_sigma(cond, 1.7, d),
                               vertex_sigma(VertexCondition.neumann_kirchhoff(), 1.7, d), atol=1e-13)


def test_named_sigmas():
    np.testing.assert_array_equal(vertex_sigma(VertexCondition.dirichlet(), 2.0, 1), [[-1]])
    neumann = VertexCondition.general([[0]], [[1]])
    np.testing.assert_allclose(vertex_sigma(neumann, 2.0, 1), [[1]])
    S = vertex_sigma(VertexCondition.neumann_kirchhoff(), 2.0, 3)
    np.testing.assert_allclose(np.diag(S), [-1 / 3] * 3)
    np.testing.assert_allclose(S[0, 1], 2 / 3)


def test_nk_involution_and_row_sums():
    for d in range(1, 7):
        S = vertex_sigma(VertexCondition.neumann_kirchhoff(), 1.0, d)
        np.testing.assert_allclose(S @ S, np.eye(d), atol=1e-15)
        np.testing.assert_allclose(S.sum(axis=1), np.ones(d), atol=1e-15)


def test_k_zero_rejected():
    with pytest.raises(ConditionError, match="k = 0"):
        vertex_sigma(VertexCondition.general([[1]], [[1]]), 0, 1)


def test_k_independent_derivatives_vanish():
    for c in (VertexCondition.neumann_kirchhoff(), VertexCondition.dirichlet()):
        assert not np.any(vertex_sigma_derivative(c, 1.3, 3))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 5), k=st.floats(0.05, 50.0))
def test_general_sigma_unitary(seed, d, k):
    cond = validate_condition(random_general(d, np.random.default_rng(seed)), d)
    S = vertex_sigma(cond, k, d)
    assert np.max(np.abs(S.conj().T @ S - np.eye(d))) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4), k=st.floats(0.3, 10.0))
def test_sigma_derivative_matches_finite_difference(seed, d, k):
    cond = random_general(d, np.random.default_rng(seed))
    h = 1e-6
    fd = (vertex_sigma(cond, k + h, d) - vertex_sigma(cond, k - h, d)) / (2 * h)
    exact = vertex_sigma_derivative(cond, k, d)
    assert np.max(np.abs(fd - exact)) <= 1e-6 * max(1.0, np.max(np.abs(exact)))
