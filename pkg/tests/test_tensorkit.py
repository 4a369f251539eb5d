"""Finite differences, Gram-Schmidt frames and metric contractions."""

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sasakigeo.errors import DomainError, GeometryError, NumericError, RankError, ShapeError
from sasakigeo.tensorkit import (
    FDScheme,
    contract_with_metric,
    finite_difference_derivative,
    finite_difference_hessian,
    gram_schmidt_frame,
    inner,
)


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------


class TestDerivative:
    def test_bilinear_second_order_is_exact(self):
        d = finite_difference_derivative(lambda x: np.array(x[0] * x[1]), [1.0, 2.0], FDScheme(order=2))
        npt.assert_allclose(d, [2.0, 1.0], rtol=1e-10)

    def test_constant_tensor_gives_zero_of_extended_shape(self):
        d = finite_difference_derivative(lambda x: np.ones((2, 3)), np.zeros(4))
        assert d.shape == (4, 2, 3)
        npt.assert_allclose(d, 0.0, atol=1e-12)

    def test_sine(self):
        d = finite_difference_derivative(lambda x: np.array(np.sin(x[0])), [0.3], FDScheme(step=1e-4))
        npt.assert_allclose(d, [np.cos(0.3)], atol=1e-8)

    @pytest.mark.parametrize("order", [2, 4])
    def test_polynomials_up_to_order_are_exact(self, order):
        def field(x):
            return np.array([x[0] ** order, x[0] ** (order - 1) * x[1], 3.0 * x[1] ** 2])

        p = np.array([0.7, -1.3])
        exact = np.array(
            [
                [order * p[0] ** (order - 1), (order - 1) * p[0] ** (order - 2) * p[1], 0.0],
                [0.0, p[0] ** (order - 1), 6.0 * p[1]],
            ]
        )
        d = finite_difference_derivative(field, p, FDScheme(step=1e-2, order=order))
        npt.assert_allclose(d, exact, rtol=1e-10, atol=1e-10)

    @pytest.mark.parametrize("order, expected", [(2, 2.0), (4, 4.0)])
    def test_convergence_order(self, order, expected):
        f = lambda x: np.array(np.exp(np.sin(x[0])))  # noqa: E731
        exact = np.cos(0.4) * np.exp(np.sin(0.4))
        errs = [abs(finite_difference_derivative(f, [0.4], FDScheme(h, order))[0] - exact) for h in (0.1, 0.05)]
        assert np.log2(errs[0] / errs[1]) == pytest.approx(expected, abs=0.2)

    def test_richardson_improves_accuracy(self):
        f = lambda x: np.array(np.exp(np.sin(x[0])))  # noqa: E731
        exact = np.cos(0.4) * np.exp(np.sin(0.4))
        plain = finite_difference_derivative(f, [0.4], FDScheme(0.05, 4))[0]
        extra = finite_difference_derivative(f, [0.4], FDScheme(0.05, 4, richardson=True))[0]
        assert abs(extra - exact) < abs(plain - exact) / 10

    def test_step_scales_with_coordinate(self):
        npt.assert_allclose(FDScheme(1e-3).steps_at(np.array([0.5, -20.0])), [1e-3, 2e-2])

    def test_domain_error(self):
        with pytest.raises(DomainError):
            finite_difference_derivative(lambda x: x, [0.0], domain=lambda x: x[0] >= 0)

    def test_non_finite_value(self):
        with pytest.raises(NumericError):
            finite_difference_derivative(lambda x: np.array(1.0 / x[0]) if x[0] > 0 else np.array(np.nan), [0.0])

    def test_invalid_scheme(self):
        with pytest.raises(ValueError):
            FDScheme(step=0.0)
        with pytest.raises(ValueError):
            FDScheme(order=3)


class TestHessian:
    def test_quadratic_form(self):
        A = np.array([[2.0, 0.5, 0.0], [0.5, -1.0, 0.3], [0.0, 0.3, 4.0]])
        H = finite_difference_hessian(lambda x: np.array(0.5 * x @ A @ x), [0.2, -0.1, 0.7])
        npt.assert_allclose(H, A, atol=1e-8)

    def test_matches_nested_first_derivatives(self):
        def field(x):
            return np.array([np.sin(x[0] * x[1]), np.exp(x[1]) * x[2]])

        p = np.array([0.3, -0.2, 0.5])
        H = finite_difference_hessian(field, p, FDScheme(1e-3, 4, True))
        nested = finite_difference_derivative(lambda y: finite_difference_derivative(field, y), p)
        npt.assert_allclose(H, nested, atol=1e-7)


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


def spd(rng, m):
    B = rng.standard_normal((m, m))
    return B @ B.T + m * np.eye(m)


class TestGramSchmidt:
    def test_identity(self):
        npt.assert_allclose(gram_schmidt_frame(np.eye(3)), np.eye(3))

    def test_diagonal_rescale(self):
        npt.assert_allclose(gram_schmidt_frame(np.diag([4.0, 1.0])), [[0.5, 0.0], [0.0, 1.0]])

    def test_distinguished_last(self):
        F = gram_schmidt_frame(np.eye(3), distinguished_last=[0.0, 0.0, 2.0])
        npt.assert_allclose(F[-1], [0.0, 0.0, 1.0])
        npt.assert_allclose(F[:2, 2], 0.0, atol=1e-14)
        npt.assert_allclose(F @ F.T, np.eye(3), atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 6))
    def test_orthonormal_for_random_gram(self, seed, m):
        rng = np.random.default_rng(seed)
        g = spd(rng, m)
        d = rng.standard_normal(m)
        for F in (gram_schmidt_frame(g), gram_schmidt_frame(g, distinguished_last=d)):
            npt.assert_allclose(F @ g @ F.T, np.eye(m), atol=1e-10)
        F = gram_schmidt_frame(g, distinguished_last=d)
        npt.assert_allclose(F[-1] * np.sqrt(d @ g @ d), d, atol=1e-10)

    def test_not_positive_definite(self):
        with pytest.raises(GeometryError):
            gram_schmidt_frame(np.diag([1.0, -1.0]))

    def test_not_symmetric(self):
        with pytest.raises(GeometryError):
            gram_schmidt_frame(np.array([[1.0, 0.2], [0.0, 1.0]]))

    def test_dependent_seed(self):
        with pytest.raises(RankError):
            gram_schmidt_frame(np.eye(2), seed=[[1.0, 1.0], [2.0, 2.0]])

    def test_zero_distinguished(self):
        with pytest.raises(RankError):
            gram_schmidt_frame(np.eye(2), distinguished_last=[0.0, 0.0])


# ---------------------------------------------------------------------------
# Contractions
# ---------------------------------------------------------------------------


class TestContract:
    @pytest.mark.parametrize(
        "a, b, gram, expected",
        [
            ([1, 0], [0, 1], np.eye(2), 0.0),
            ([1, 2], [3, 4], np.eye(2), 11.0),
            ([1, 0], [1, 0], np.diag([9.0, 9.0]), 9.0),
        ],
    )
    def test_vector_pairs(self, a, b, gram, expected):
        t = np.multiply.outer(np.asarray(a, float), np.asarray(b, float))
        assert contract_with_metric(t, gram, [(0, 1)]) == pytest.approx(expected)
        assert inner(gram, a, b) == pytest.approx(expected)

    def test_surviving_slots_keep_order(self, rng):
        t = rng.standard_normal((3, 2, 3, 4))
        g = spd(rng, 3)
        out = contract_with_metric(t, g, [(0, 2)])
        npt.assert_allclose(out, np.einsum("aibj,ab->ij", t, g))

    @settings(max_examples=30, deadline=None)
    @given(
        a=arrays(np.float64, 3, elements=st.floats(-5, 5)),
        b=arrays(np.float64, 3, elements=st.floats(-5, 5)),
        c=arrays(np.float64, 3, elements=st.floats(-5, 5)),
        s=st.floats(-3, 3),
    )
    def test_bilinear_and_symmetric(self, a, b, c, s):
        g = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 3.0]])
        pair = lambda x, y: contract_with_metric(np.multiply.outer(x, y), g, [(0, 1)])  # noqa: E731
        npt.assert_allclose(pair(a, b), pair(b, a), atol=1e-9)
        npt.assert_allclose(pair(a + s * c, b), pair(a, b) + s * pair(c, b), atol=1e-8)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            contract_with_metric(np.ones((2, 3)), np.eye(2), [(0, 1)])
        with pytest.raises(ShapeError):
            contract_with_metric(np.ones((2, 2)), np.eye(2), [(0, 0)])
