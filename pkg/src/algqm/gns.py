"""GNS representation of the full matrix algebra ``M_n`` from a state functional.

The algebra is treated as the ``n^2``-dimensional linear space spanned by
the matrix units ``E_kl`` (coordinate index ``k * n + l``).  Classes modulo
the null space of ``Psi`` form the representation space; since everything
is finite-dimensional the completion step is a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import StateFunctional
from .matalg import as_matrix, cstar_norm, jacobi_eigh, matrix_to_literal

__all__ = ["GnsRepresentation", "GnsReport", "gns_construct", "gns_verify", "matrix_units"]

NULL_RTOL = 1e-10


def matrix_units(n: int) -> list[np.ndarray]:
    units = []
    for k in range(n):
        for l in range(n):
            e = np.zeros((n, n), dtype=np.complex128)
            e[k, l] = 1.0
            units.append(e)
    return units


def _coords(a: np.ndarray) -> np.ndarray:
    # coefficient of E_kl is a[k, l]
    return a.reshape(-1)


def _left_mult(s: np.ndarray) -> np.ndarray:
    """Matrix of ``R -> S R`` acting on matrix-unit coordinates."""
    n = s.shape[0]
    return np.kron(s, np.eye(n))


@dataclass(frozen=True, eq=False)
class GnsRepresentation:
    state: StateFunctional
    gram: np.ndarray
    basis: np.ndarray  # (n^2, r) Gram eigenvectors spanning the quotient
    weights: np.ndarray  # (r,) Gram eigenvalues, all above the null cutoff
    null_cutoff: float

    @property
    def source_dim(self) -> int:
        return self.state.dim

    @property
    def rep_dim(self) -> int:
        return self.basis.shape[1]

    def vector(self, r) -> np.ndarray:
        """Coordinates of the class ``Phi(R)`` in the orthonormal basis of the representation space."""
        x = _coords(as_matrix(r))
        return (self.basis.conj().T @ (self.gram @ x)) / np.sqrt(self.weights)

    @property
    def cyclic_vector(self) -> np.ndarray:
        return self.vector(np.eye(self.source_dim))

    def represent(self, s) -> np.ndarray:
        """Operator ``Pi(S)`` with ``Pi(S) Phi(R) = Phi(S R)``."""
        s = as_matrix(s)
        scale = 1.0 / np.sqrt(self.weights)
        inner = self.basis.conj().T @ self.gram @ _left_mult(s) @ self.basis
        return scale[:, None] * inner * scale[None, :]

    def to_json(self, observables: dict | None = None) -> dict:
        omega = self.cyclic_vector
        return {
            "source_dim": self.source_dim,
            "rep_dim": self.rep_dim,
            "cyclic_vector": [[float(z.real) + 0.0, float(z.imag) + 0.0] for z in omega],
            "operators": {
                name: matrix_to_literal(self.represent(a)) for name, a in (observables or {}).items()
            },
        }


def gns_construct(state: StateFunctional) -> GnsRepresentation:
    """Build the GNS representation of ``M_n`` for ``state``.

    The Gram matrix ``G_ij = Psi(B_i* B_j)`` over the matrix units is
    diagonalized; eigenvectors whose eigenvalue exceeds ``1e-10`` times the
    largest one span the quotient by the null space.
    """
    if not isinstance(state, StateFunctional):
        raise TypeError("state must be a StateFunctional")
    units = matrix_units(state.dim)
    gram = np.array([[state(bi.conj().T @ bj) for bj in units] for bi in units])
    w, v = jacobi_eigh(gram)
    cutoff = NULL_RTOL * w[-1]
    keep = w > cutoff
    return GnsRepresentation(state, gram, v[:, keep], w[keep], float(cutoff))


@dataclass
class GnsReport:
    trials: int
    residuals: dict

    def passed(self, tol: float = 1e-9) -> bool:
        return all(r <= tol for r in self.residuals.values())


def _random_matrix(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def gns_verify(rep: GnsRepresentation, trials: int, seed: int = 0) -> GnsReport:
    """Check the representation identities on random pairs ``(R, S)``.

    Residuals reported: inner product vs ``Psi(R* S)``, multiplicativity,
    adjoint, unit, cyclic expectation ``<Omega, Pi(A) Omega>`` vs ``Psi(A)``,
    and contractivity excess ``||Pi(R)|| - ||R||``.
    """
    rng = np.random.default_rng(seed)
    n = rep.source_dim
    psi = rep.state
    omega = rep.cyclic_vector
    res = dict.fromkeys(
        ["inner_product", "homomorphism", "adjoint", "unit", "cyclic_expectation", "contractivity"],
        0.0,
    )
    res["unit"] = float(np.max(np.abs(rep.represent(np.eye(n)) - np.eye(rep.rep_dim))))
    for _ in range(trials):
        r, s = _random_matrix(rng, n), _random_matrix(rng, n)
        pr, ps = rep.represent(r), rep.represent(s)
        ip = np.vdot(rep.vector(r), rep.vector(s))
        res["inner_product"] = max(res["inner_product"], abs(ip - psi(r.conj().T @ s)))
        res["homomorphism"] = max(res["homomorphism"], float(np.max(np.abs(rep.represent(r @ s) - pr @ ps))))
        res["adjoint"] = max(res["adjoint"], float(np.max(np.abs(rep.represent(r.conj().T) - pr.conj().T))))
        res["cyclic_expectation"] = max(res["cyclic_expectation"], abs(np.vdot(omega, pr @ omega) - psi(r)))
        res["contractivity"] = max(res["contractivity"], cstar_norm(pr) - cstar_norm(r))
    return GnsReport(trials, {k: float(v) for k, v in res.items()})
