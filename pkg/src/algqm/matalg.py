"""Dense complex matrix arithmetic, Hermitian spectral decomposition and the C*-norm.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Every public
function validates its inputs through :func:`as_matrix`, so callers can pass
nested lists, real arrays or matrix literals interchangeably.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TAU_HERM",
    "TAU_PROJ",
    "TAU_EIG",
    "NotHermitianError",
    "DimensionMismatchError",
    "ConvergenceError",
    "SpectralDecomposition",
    "as_matrix",
    "is_hermitian",
    "check_hermitian",
    "dagger",
    "commutator",
    "jacobi_eigh",
    "eig_hermitian",
    "cstar_norm",
    "unitary_exp",
    "unitary_conjugate_exp",
    "matrix_from_literal",
    "matrix_to_literal",
    "vector_from_literal",
    "PAULI",
    "tau",
]

TAU_HERM = 1e-10
TAU_PROJ = 1e-9
TAU_EIG = 1e-9

MAX_SWEEPS = 100
OFFDIAG_RTOL = 1e-12


class NotHermitianError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite square complex matrix of dimension >= 1."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _same_dim(*mats: np.ndarray) -> None:
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(dims)}")


def dagger(a) -> np.ndarray:
    return as_matrix(a).conj().T


def is_hermitian(a, tol: float = TAU_HERM) -> bool:
    m = as_matrix(a)
    scale = max(1.0, float(np.max(np.abs(m))))
    return float(np.max(np.abs(m - m.conj().T))) <= tol * scale


def check_hermitian(a, tol: float = TAU_HERM, name: str = "matrix") -> np.ndarray:
    """Return the symmetrized matrix, raising if ``a`` is not Hermitian within ``tol``."""
    m = as_matrix(a)
    if not is_hermitian(m, tol):
        raise NotHermitianError(f"{name} is not Hermitian")
    return 0.5 * (m + m.conj().T)


def commutator(a, b) -> np.ndarray:
    """Return ``AB - BA``."""
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return a @ b - b @ a


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(a, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver for a complex Hermitian matrix.

    Each rotation first removes the phase of the pivot ``a[p, q]`` and then
    applies the classical real symmetric rotation, so the combined 2x2 unitary
    annihilates the pivot exactly.

    Returns
    -------
    w : (n,) ndarray
        Eigenvalues, ascending.
    v : (n, n) ndarray
        Orthonormal eigenvectors as columns, ``a @ v[:, i] = w[i] * v[:, i]``.
    """
    a = check_hermitian(a).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    threshold = OFFDIAG_RTOL * float(np.linalg.norm(a))
    for _ in range(max_sweeps):
        if _offdiag_norm(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                w = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ w
                a[idx, :] = w.conj().T @ a[idx, :]
                a[q, p] = 0.0
                a[p, q] = 0.0
                v[:, idx] = v[:, idx] @ w
    else:
        if _offdiag_norm(a) > threshold:
            raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct eigenvalues (ascending) with their orthogonal spectral projectors."""

    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        for p in self.projectors:
            p.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        return sum(lam * p for lam, p in zip(self.eigenvalues, self.projectors))

    def rank(self, i: int) -> int:
        return int(round(np.trace(self.projectors[i]).real))

    def is_one_dimensional(self, i: int, tol: float = TAU_PROJ) -> bool:
        return abs(np.trace(self.projectors[i]).real - 1.0) <= tol

    def is_nondegenerate(self) -> bool:
        return len(self.eigenvalues) == self.dim

    def index_of(self, value: float, tol: float = 1e-8) -> int:
        for i, lam in enumerate(self.eigenvalues):
            if abs(lam - value) <= tol:
                return i
        raise KeyError(value)

    def apply(self, func) -> np.ndarray:
        """Matrix function ``f(A) = sum_i f(lambda_i) P_i``."""
        return sum(func(lam) * p for lam, p in zip(self.eigenvalues, self.projectors))


def eig_hermitian(a, tol: float | None = None) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix with degenerate eigenvalues merged.

    Eigenvalues closer than ``tol`` (default ``1e-8 * max(1, ||A||)``) are
    grouped into one cluster; the cluster's value is its mean and its
    projector the sum of the member eigenprojectors.
    """
    w, v = jacobi_eigh(a)
    if tol is None:
        tol = 1e-8 * max(1.0, float(np.max(np.abs(w))))
    groups: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    values, projectors = [], []
    for g in groups:
        vecs = v[:, g]
        values.append(float(np.mean(w[g])))
        projectors.append(vecs @ vecs.conj().T)
    return SpectralDecomposition(tuple(values), tuple(projectors))


def cstar_norm(r) -> float:
    """C*-norm ``sqrt(rho(R* R))``, the square root of the largest eigenvalue of ``R* R``."""
    r = as_matrix(r)
    w, _ = jacobi_eigh(r.conj().T @ r)
    return float(np.sqrt(max(w[-1], 0.0)))


def unitary_exp(h, t: float) -> np.ndarray:
    """Return ``exp(-i H t)`` built from the eigendecomposition of ``H``."""
    w, v = jacobi_eigh(h)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    if np.max(np.abs(u @ u.conj().T - np.eye(len(w)))) > TAU_PROJ:
        raise ConvergenceError("exponential lost unitarity")
    return u


def unitary_conjugate_exp(h, a, t: float) -> np.ndarray:
    """Return ``U A U*`` with ``U = exp(-i H t)``."""
    a = as_matrix(a)
    if t == 0:
        return a.copy()
    u = unitary_exp(h, t)
    _same_dim(u, a)
    return u @ a @ u.conj().T


def _entry(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"complex entry must be [re, im], got {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValueError(f"bad matrix entry {x!r}")
    return complex(float(x), 0.0)


def matrix_from_literal(lit) -> np.ndarray:
    """Parse a matrix literal: a list of rows whose entries are numbers or ``[re, im]``."""
    if isinstance(lit, str):
        lit = json.loads(lit)
    if not isinstance(lit, list) or not lit or not all(isinstance(r, list) for r in lit):
        raise ValueError("matrix literal must be a non-empty list of rows")
    return as_matrix([[_entry(x) for x in row] for row in lit])


def vector_from_literal(lit) -> np.ndarray:
    if not isinstance(lit, list) or not lit:
        raise ValueError("vector literal must be a non-empty list")
    vec = np.array([_entry(x) for x in lit], dtype=np.complex128)
    if not np.all(np.isfinite(vec)):
        raise ValueError("vector has non-finite entries")
    return vec


def _emit(z: complex):
    re, im = float(z.real) + 0.0, float(z.imag) + 0.0
    return re if im == 0.0 else [re, im]


def matrix_to_literal(a) -> list:
    return [[_emit(z) for z in row] for row in as_matrix(a)]


PAULI = {
    1: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    2: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    3: np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def tau(n) -> np.ndarray:
    """``tau(n) = n . (tau_1, tau_2, tau_3)`` for a 3-vector ``n``."""
    n = np.asarray(n, dtype=float)
    return n[0] * PAULI[1] + n[1] * PAULI[2] + n[2] * PAULI[3]

