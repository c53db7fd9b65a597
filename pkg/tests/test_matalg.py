import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algqm import (
    DimensionMismatchError,
    NotHermitianError,
    as_matrix,
    check_hermitian,
    commutator,
    cstar_norm,
    eig_hermitian,
    is_hermitian,
    jacobi_eigh,
    matrix_from_literal,
    matrix_to_literal,
    tau,
    unitary_conjugate_exp,
    unitary_exp,
    vector_from_literal,
)

from conftest import TAU1, TAU2, TAU3, random_hermitian, random_matrix


class TestMatrixValidation:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            as_matrix(np.zeros((2, 3)))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            as_matrix([[np.nan, 0], [0, 1]])

    def test_hermiticity(self):
        assert is_hermitian(TAU2)
        assert not is_hermitian([[0, 1], [0, 0]])
        with pytest.raises(NotHermitianError):
            check_hermitian([[0, 1j], [1j, 0]])

    def test_check_symmetrizes_within_tolerance(self):
        a = np.array([[1, 1e-12], [0, 2]], dtype=complex)
        out = check_hermitian(a)
        assert np.array_equal(out, out.conj().T)


class TestCommutator:
    def test_diagonal_pair_commutes(self):
        h = np.diag([1.0, -1.0])
        assert np.all(commutator(h, np.diag([0.0, 1.0])) == 0)

    def test_pauli_pair(self):
        assert np.allclose(commutator(TAU1, TAU2), 2j * TAU3, atol=1e-15)

    def test_identity_commutes(self, rng):
        a = random_matrix(rng, 4)
        assert np.allclose(commutator(a, np.eye(4)), 0, atol=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            commutator(np.eye(2), np.eye(3))


class TestJacobi:
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 20])
    def test_against_numpy_oracle(self, rng, n):
        a = random_hermitian(rng, n)
        w, v = jacobi_eigh(a)
        assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-10)
        assert np.allclose(v.conj().T @ v, np.eye(n), atol=1e-12)
        assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - a) <= 1e-9

    def test_ascending(self, rng):
        w, _ = jacobi_eigh(random_hermitian(rng, 6))
        assert np.all(np.diff(w) >= 0)

    def test_large_entries(self):
        a = np.array([[1e150, 1e150], [1e150, -1e150]])
        w, _ = jacobi_eigh(a)
        assert np.allclose(w, [-np.sqrt(2) * 1e150, np.sqrt(2) * 1e150], rtol=1e-12)


class TestEigHermitian:
    def test_hamiltonian_example(self):
        spec = eig_hermitian(np.diag([1.0, -1.0]))
        assert np.allclose(spec.eigenvalues, [-1, 1])
        assert np.allclose(spec.projectors[0], np.diag([0, 1]))
        assert np.allclose(spec.projectors[1], np.diag([1, 0]))

    def test_identity_single_eigenvalue(self):
        spec = eig_hermitian(np.eye(3))
        assert len(spec) == 1
        assert spec.eigenvalues[0] == pytest.approx(1.0)
        assert np.allclose(spec.projectors[0], np.eye(3))
        assert spec.rank(0) == 3

    def test_tau1(self):
        spec = eig_hermitian(TAU1)
        assert np.allclose(spec.eigenvalues, [-1, 1])
        assert np.allclose(spec.projectors[0], (np.eye(2) - TAU1) / 2)
        assert np.allclose(spec.projectors[1], (np.eye(2) + TAU1) / 2)

    def test_clusters_near_degenerate(self):
        spec = eig_hermitian(np.diag([1.0, 1.0 + 1e-11, 0.0]))
        assert len(spec) == 2
        assert [spec.rank(i) for i in range(2)] == [1, 2]
        assert not spec.is_nondegenerate()

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            eig_hermitian([[0, 1], [0, 0]])

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_decomposition_invariants(self, rng, n):
        for _ in range(10):
            a = random_hermitian(rng, n)
            spec = eig_hermitian(a)
            ps = spec.projectors
            assert np.linalg.norm(spec.reconstruct() - a) <= 1e-9
            assert np.max(np.abs(sum(ps) - np.eye(n))) <= 1e-9
            for i, p in enumerate(ps):
                assert np.max(np.abs(p @ p - p)) <= 1e-9
                assert np.max(np.abs(p - p.conj().T)) <= 1e-9
                for q in ps[i + 1 :]:
                    assert np.max(np.abs(p @ q)) <= 1e-9

    def test_degenerate_rotated(self, rng):
        from conftest import random_unitary

        u = random_unitary(rng, 4)
        a = u @ np.diag([2.0, 2.0, -1.0, 5.0]) @ u.conj().T
        spec = eig_hermitian(a)
        assert np.allclose(spec.eigenvalues, [-1, 2, 5], atol=1e-9)
        assert [spec.rank(i) for i in range(3)] == [1, 2, 1]
        assert spec.is_one_dimensional(0) and not spec.is_one_dimensional(1)


class TestCstarNorm:
    def test_zero(self):
        assert cstar_norm(np.zeros((3, 3))) == 0.0

    def test_nilpotent(self):
        assert cstar_norm([[0, 1], [0, 0]]) == pytest.approx(1.0, abs=1e-12)

    def test_unit_direction(self, rng):
        for _ in range(5):
            n = rng.normal(size=3)
            assert cstar_norm(tau(n / np.linalg.norm(n))) == pytest.approx(1.0, abs=1e-12)

    def test_matches_operator_2_norm(self, rng):
        r = random_matrix(rng, 5)
        assert cstar_norm(r) == pytest.approx(np.linalg.norm(r, 2), rel=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_cstar_identity(self, n, seed):
        g = np.random.default_rng(seed)
        r = random_matrix(g, n)
        nr = cstar_norm(r)
        assert abs(cstar_norm(r.conj().T @ r) - nr**2) <= 1e-9 * max(1.0, nr**2)


class TestUnitaryExp:
    def test_zero_time(self, rng):
        a = random_hermitian(rng, 3)
        assert np.array_equal(unitary_conjugate_exp(random_hermitian(rng, 3), a, 0.0), check_hermitian(a))

    def test_commuting_unchanged(self):
        a = np.diag([3.0, -2.0])
        for t in (0.3, 1.7, 10.0):
            assert np.allclose(unitary_conjugate_exp(np.diag([1.0, -1.0]), a, t), a, atol=1e-14)

    def test_quarter_turn_flips_tau1(self):
        out = unitary_conjugate_exp(np.diag([1.0, -1.0]), TAU1, np.pi / 2)
        assert np.allclose(out, -TAU1, atol=1e-14)

    def test_unitary(self, rng):
        u = unitary_exp(random_hermitian(rng, 4), 0.7)
        assert np.allclose(u @ u.conj().T, np.eye(4), atol=1e-12)


class TestLiterals:
    def test_parse_mixed_entries(self):
        m = matrix_from_literal([[1, [0, 2]], [[0, -2], 3.5]])
        assert m[0, 1] == 2j and m[1, 0] == -2j and m[1, 1] == 3.5

    def test_round_trip(self, rng):
        a = random_matrix(rng, 3)
        lit = json.loads(json.dumps(matrix_to_literal(a)))
        assert np.array_equal(matrix_from_literal(lit), a)

    def test_vector(self):
        assert np.array_equal(vector_from_literal([1, [0, 1]]), np.array([1, 1j]))

    @pytest.mark.parametrize("bad", [[[1, 2]], [[1, [1, 2, 3]], [0, 1]], "x", [[1, "a"], [0, 1]]])
    def test_malformed(self, bad):
        with pytest.raises((ValueError, TypeError)):
            matrix_from_literal(bad)
