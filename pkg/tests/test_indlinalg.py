import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from indefsl.errors import DegenerateError, InvalidInputError
from indefsl.indlinalg import (
    HermitianForm, SignatureMetric, apply_J, complex_det, lorentz_basis, metric_diagonalize,
    omega_eval, signature_matrix, signature_of, to_complex, to_real,
)

km = st.integers(1, 5).flatmap(lambda m: st.tuples(st.integers(0, m), st.just(m)))
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestSignatureMetric:
    def test_signs(self):
        np.testing.assert_array_equal(SignatureMetric(2, 4).signs, [-1, -1, 1, 1])

    def test_rejects_bad_index(self):
        with pytest.raises(InvalidInputError):
            SignatureMetric(5, 4)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            SignatureMetric(1, 3)([1, 0], [0, 1])

    def test_lorentzian_null_vector(self):
        assert SignatureMetric(1, 2)([1, 1], [1, 1]) == 0

    def test_signature_matrix(self):
        np.testing.assert_array_equal(signature_matrix(1, 3), np.diag([-1.0, 1, 1]))


class TestHermitianForm:
    def test_J_squares_to_minus_identity(self):
        J = HermitianForm(1, 3).J
        np.testing.assert_array_equal(J @ J, -np.eye(6))

    def test_J_action(self):
        np.testing.assert_array_equal(apply_J([1, 2, 3, 4]), [-3, -4, 1, 2])

    def test_h_decomposes_into_g_and_omega(self, rng):
        form = HermitianForm(1, 3)
        v, w = rng.normal(size=6), rng.normal(size=6)
        h = form.hermitian(to_complex(v), to_complex(w))
        assert h.real == pytest.approx(form.g(v, w))
        assert -h.imag == pytest.approx(form.omega(v, w))

    def test_omega_matrix_matches_eval(self, rng):
        form = HermitianForm(2, 3)
        v, w = rng.normal(size=6), rng.normal(size=6)
        assert v @ form.omega_matrix @ w == pytest.approx(omega_eval(form, v, w))

    def test_wrong_length(self):
        with pytest.raises(InvalidInputError):
            HermitianForm(1, 2).g([1, 2, 3], [1, 2, 3])

    @settings(max_examples=60, deadline=None)
    @given(km, st.data())
    def test_J_is_an_isometry(self, shape, data):
        k, m = shape
        form = HermitianForm(k, m)
        v = data.draw(arrays(float, 2 * m, elements=finite))
        w = data.draw(arrays(float, 2 * m, elements=finite))
        assert form.g(apply_J(v), apply_J(w)) == pytest.approx(form.g(v, w), abs=1e-9)
        assert form.omega(v, w) == pytest.approx(-form.omega(w, v), abs=1e-9)
        assert form.omega(v, w) == pytest.approx(form.g(apply_J(v), w), abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(km, st.data())
    def test_real_complex_roundtrip(self, shape, data):
        _, m = shape
        v = data.draw(arrays(float, 2 * m, elements=finite))
        np.testing.assert_array_equal(to_real(to_complex(v)), v)


class TestDeterminantsAndSignatures:
    def test_complex_det_oracle(self, rng):
        M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        lam = np.linalg.eigvals(M)
        assert complex_det(M) == pytest.approx(np.prod(lam), rel=1e-12)

    def test_complex_det_rejects_rectangular(self):
        with pytest.raises(InvalidInputError):
            complex_det(np.ones((2, 3)))

    def test_signature_counts(self):
        assert signature_of(np.diag([-2.0, 0.0, 3.0, 1.0])) == (1, 1, 2)

    def test_signature_rejects_asymmetric(self):
        with pytest.raises(InvalidInputError):
            signature_of(np.array([[0.0, 1.0], [0.0, 0.0]]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2**31))
    def test_lorentz_basis(self, n, seed):
        r = np.random.default_rng(seed)
        A = r.normal(size=(n, n))
        G = A + A.T + np.diag(np.where(r.random(n) < 0.5, -3.0, 3.0))
        try:
            P, signs = lorentz_basis(G)
        except DegenerateError:
            return
        np.testing.assert_allclose(P.T @ G @ P, np.diag(signs), atol=1e-8)
        assert list(signs) == sorted(signs)

    def test_lorentz_basis_degenerate(self):
        with pytest.raises(DegenerateError):
            lorentz_basis(np.array([[0.0, 1.0], [1.0, 0.0]]) * 0 + np.diag([1.0, 0.0]))


class TestMetricDiagonalize:
    def test_self_adjoint_real_spectrum(self):
        G = np.diag([-1.0, 1.0])
        A = np.array([[2.0, 0.0], [0.0, -1.0]])
        d = metric_diagonalize(A, G)
        assert d.ok
        np.testing.assert_allclose(sorted(d.eigenvalues), [-1, 2])
        np.testing.assert_allclose(d.reassemble(), A, atol=1e-12)

    def test_complex_spectrum_reported(self):
        # boost-like operator, self-adjoint for diag(-1, 1), eigenvalues +-i
        A = np.array([[0.0, 1.0], [-1.0, 0.0]])
        d = metric_diagonalize(A, np.diag([-1.0, 1.0]))
        assert not d.ok and "complex" in d.reason

    def test_rejects_non_self_adjoint(self):
        with pytest.raises(InvalidInputError):
            metric_diagonalize(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))
