import numpy as np
import pytest

from algqm import StateFunctional, cstar_norm, gns_construct, gns_verify, matrix_units

from conftest import P0, TAU1, random_hermitian, random_matrix, random_unitary


def gram_rank_oracle(rho):
    """Rank of the Gram form computed directly with numpy."""
    n = rho.shape[0]
    units = matrix_units(n)
    g = np.array([[np.trace(rho @ bi.conj().T @ bj) for bj in units] for bi in units])
    return np.linalg.matrix_rank(g, tol=1e-10 * np.abs(np.linalg.eigvalsh(g)).max())


def random_pure(rng, n):
    return StateFunctional.pure(rng.normal(size=n) + 1j * rng.normal(size=n))


class TestConstruct:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_pure_rank(self, rng, n):
        s = random_pure(rng, n)
        rep = gns_construct(s)
        assert rep.rep_dim == n == gram_rank_oracle(s.density)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_mixed_rank(self, n):
        rep = gns_construct(StateFunctional.maximally_mixed(n))
        assert rep.rep_dim == n * n

    def test_rank_two_mixture(self, rng):
        u = random_unitary(rng, 3)
        rho = u @ np.diag([0.7, 0.3, 0.0]) @ u.conj().T
        rep = gns_construct(StateFunctional(rho))
        assert rep.rep_dim == 6 == gram_rank_oracle(rho)

    def test_scalars(self):
        rep = gns_construct(StateFunctional(np.eye(1)))
        assert rep.rep_dim == 1
        assert np.allclose(rep.represent([[3.0 - 1j]]), [[3.0 - 1j]])

    def test_rejects_non_state(self):
        with pytest.raises(TypeError):
            gns_construct(np.eye(2) / 2)


class TestIdentities:
    def test_example_state(self):
        rep = gns_construct(StateFunctional(P0))
        report = gns_verify(rep, 200, seed=0)
        assert rep.rep_dim == 2
        assert report.passed(1e-9), report.residuals

    def test_zero_maps_to_zero(self):
        rep = gns_construct(StateFunctional(P0))
        assert np.all(rep.represent(np.zeros((2, 2))) == 0)

    def test_ground_projector_fixes_cyclic_vector(self):
        rep = gns_construct(StateFunctional(P0))
        omega = rep.cyclic_vector
        assert np.allclose(rep.represent(P0) @ omega, omega, atol=1e-12)
        assert np.linalg.norm(omega) == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_states(self, seed):
        rng = np.random.default_rng(seed)
        n = 2 + seed % 3
        x = random_matrix(rng, n)
        rho = x @ x.conj().T
        rep = gns_construct(StateFunctional(rho / np.trace(rho).real))
        assert gns_verify(rep, 50, seed=seed).passed(1e-9)

    def test_contractive(self, rng):
        rep = gns_construct(StateFunctional.maximally_mixed(2))
        for _ in range(20):
            r = random_matrix(rng, 2)
            assert cstar_norm(rep.represent(r)) <= cstar_norm(r) + 1e-9


class TestNullSpace:
    def test_null_elements_kill_cyclic_vector(self, rng):
        s = StateFunctional(P0)
        rep = gns_construct(s)
        for _ in range(10):
            # R with R e2 = 0 is in the null space of the ground state
            r = random_matrix(rng, 2)
            r[:, 1] = 0
            assert abs(s(r.conj().T @ r)) <= 1e-12
            assert np.linalg.norm(rep.represent(r) @ rep.cyclic_vector) <= np.sqrt(rep.null_cutoff) + 1e-10

    def test_vector_of_null_element(self):
        rep = gns_construct(StateFunctional(P0))
        r = np.array([[1.0, 0.0], [1.0, 0.0]])
        assert np.linalg.norm(rep.vector(r)) <= 1e-12


class TestPureEquivalence:
    def test_characteristic_polynomials(self, rng):
        s = random_pure(rng, 3)
        rep = gns_construct(s)
        for _ in range(20):
            a = random_hermitian(rng, 3)
            assert np.allclose(np.poly(rep.represent(a)), np.poly(a), atol=1e-8)


class TestDump:
    def test_json_fields(self):
        rep = gns_construct(StateFunctional(P0))
        out = rep.to_json({"tau1": TAU1})
        assert out["source_dim"] == 2 and out["rep_dim"] == 2
        assert len(out["cyclic_vector"]) == 2
        assert set(out["operators"]) == {"tau1"}
