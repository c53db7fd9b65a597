"""Measurement contexts: maximal commutative subalgebras of the full matrix algebra.

A context is stored as its frame, a complete family of mutually orthogonal
rank-1 projectors.  Every observable of the context is a real linear
combination of the frame projectors, and the frame projectors themselves are
used as the context's generators.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .matalg import (
    TAU_PROJ,
    DimensionMismatchError,
    as_matrix,
    check_hermitian,
    commutator,
    eig_hermitian,
    jacobi_eigh,
    matrix_from_literal,
    matrix_to_literal,
)

__all__ = [
    "TAU_OVERLAP",
    "KEY_DECIMALS",
    "DegenerateSpectrumError",
    "NonCommutingError",
    "NonMaximalFamilyError",
    "Context",
    "canonical_entries",
    "observable_key",
    "context_from_vectors",
    "context_of",
    "joint_context",
    "completing_context",
    "contains",
    "intersection",
    "intersection_components",
    "common_refinement",
]

TAU_OVERLAP = 1e-8
KEY_DECIMALS = 6


class DegenerateSpectrumError(ValueError):
    pass


class NonCommutingError(ValueError):
    pass


class NonMaximalFamilyError(ValueError):
    pass


def canonical_entries(a: np.ndarray) -> tuple:
    """Entries rounded to ``KEY_DECIMALS``, flattened as ``(re, im, re, im, ...)``."""
    r = np.round(np.asarray(a, dtype=np.complex128), KEY_DECIMALS)
    # + 0.0 folds negative zeros produced by rounding
    flat = np.stack([r.real.ravel() + 0.0, r.imag.ravel() + 0.0], axis=1).ravel()
    return tuple(float(x) for x in flat)


def observable_key(a) -> str:
    """Identity string of an observable (rounded-entry serialization)."""
    m = as_matrix(a)
    return f"{m.shape[0]}:" + json.dumps(canonical_entries(m), separators=(",", ":"))


def _projector(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


@dataclass(frozen=True, eq=False)
class Context:
    """A maximal commutative subalgebra, given by its frame of rank-1 projectors.

    The frame is kept in canonical order (sorted by rounded entries), so the
    outcome index ``k`` of a context refers to ``frame[k]`` independently of the
    order in which the projectors were supplied.
    """

    frame: tuple[np.ndarray, ...]
    key: str = field(init=False)

    def __post_init__(self):
        frame = [as_matrix(p) for p in self.frame]
        if not frame:
            raise ValueError("empty frame")
        dim = frame[0].shape[0]
        if len(frame) != dim:
            raise NonMaximalFamilyError(f"frame of {len(frame)} projectors in dimension {dim}")
        eye = np.eye(dim)
        for i, p in enumerate(frame):
            if p.shape != (dim, dim):
                raise DimensionMismatchError("frame projectors differ in dimension")
            if np.max(np.abs(p @ p - p)) > TAU_PROJ or np.max(np.abs(p - p.conj().T)) > TAU_PROJ:
                raise ValueError(f"frame element {i} is not an orthogonal projector")
            if abs(np.trace(p).real - 1.0) > TAU_PROJ:
                raise NonMaximalFamilyError(f"frame element {i} is not one-dimensional")
        if np.max(np.abs(sum(frame) - eye)) > TAU_PROJ:
            raise ValueError("frame does not sum to the identity")
        frame.sort(key=canonical_entries)
        for p in frame:
            p.setflags(write=False)
        object.__setattr__(self, "frame", tuple(frame))
        payload = [canonical_entries(p) for p in frame]
        object.__setattr__(self, "key", f"{dim}:" + json.dumps(payload, separators=(",", ":")))

    @property
    def dim(self) -> int:
        return self.frame[0].shape[0]

    def __eq__(self, other):
        return isinstance(other, Context) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Context(dim={self.dim}, key={self.short_key})"

    @property
    def short_key(self) -> str:
        return hashlib.sha256(self.key.encode()).hexdigest()[:12]

    def coefficients(self, a) -> np.ndarray:
        """Real coefficients ``c_k = tr(P_k A)``; ``A = sum c_k P_k`` when ``A`` is in the context."""
        a = as_matrix(a)
        return np.array([np.trace(p @ a).real for p in self.frame])

    def element(self, coeffs) -> np.ndarray:
        """The observable ``sum_k c_k P_k``."""
        return sum(float(c) * p for c, p in zip(coeffs, self.frame))

    def vectors(self) -> np.ndarray:
        """Unit vectors spanning the frame projectors, as columns (phases arbitrary)."""
        cols = []
        for p in self.frame:
            j = int(np.argmax(np.abs(np.diag(p))))
            cols.append(p[:, j] / np.sqrt(p[j, j].real))
        return np.stack(cols, axis=1)

    def index_of_projector(self, p, tol: float = TAU_PROJ) -> int | None:
        """Index of the frame element equal to ``p`` (Frobenius distance), or ``None``."""
        p = as_matrix(p)
        for k, q in enumerate(self.frame):
            if np.linalg.norm(q - p) <= tol:
                return k
        return None

    def transformed(self, u) -> Context:
        """The context ``{U P U*}`` obtained by unitary conjugation of the frame."""
        u = as_matrix(u)
        return Context(tuple(u @ p @ u.conj().T for p in self.frame))

    def to_json(self) -> dict:
        return {"dim": self.dim, "frame": [matrix_to_literal(p) for p in self.frame]}

    @classmethod
    def from_json(cls, obj) -> Context:
        if isinstance(obj, str):
            obj = json.loads(obj)
        frame = tuple(matrix_from_literal(lit) for lit in obj["frame"])
        ctx = cls(frame)
        if ctx.dim != obj["dim"]:
            raise DimensionMismatchError("dim field disagrees with frame")
        return ctx


def context_from_vectors(vectors) -> Context:
    """Context whose frame is spanned by the given orthogonal vectors (rows or list)."""
    vs = [np.asarray(v, dtype=np.complex128) for v in vectors]
    return Context(tuple(_projector(v) for v in vs))


def context_of(a) -> Context:
    """The context generated by a Hermitian matrix with nondegenerate spectrum."""
    spec = eig_hermitian(check_hermitian(a))
    if not spec.is_nondegenerate():
        raise DegenerateSpectrumError(
            f"spectrum has {len(spec)} distinct values in dimension {spec.dim}; "
            "supply a completing family instead"
        )
    return Context(spec.projectors)


def common_refinement(family, tol: float = TAU_PROJ) -> list[np.ndarray]:
    """Common spectral projectors of pairwise commuting Hermitian matrices."""
    mats = [check_hermitian(a) for a in family]
    if not mats:
        raise ValueError("empty family")
    dim = mats[0].shape[0]
    for m in mats:
        if m.shape[0] != dim:
            raise DimensionMismatchError("family members differ in dimension")
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            scale = max(1.0, float(np.max(np.abs(mats[i]))) * float(np.max(np.abs(mats[j]))))
            if np.max(np.abs(commutator(mats[i], mats[j]))) > tol * scale:
                raise NonCommutingError(f"family members {i} and {j} do not commute")
    blocks = [np.eye(dim, dtype=np.complex128)]
    for m in mats:
        spec = eig_hermitian(m)
        refined = []
        for b in blocks:
            for p in spec.projectors:
                q = b @ p
                if np.trace(q).real > 0.5:
                    refined.append(0.5 * (q + q.conj().T))
        blocks = refined
    return blocks


def joint_context(family) -> Context:
    """The context generated by a maximal family of commuting Hermitian matrices."""
    blocks = common_refinement(family)
    if len(blocks) != blocks[0].shape[0]:
        raise NonMaximalFamilyError(
            f"family has joint eigenspaces of dimension > 1 ({len(blocks)} blocks)"
        )
    return Context(tuple(blocks))


def completing_context(family) -> Context:
    """A context containing every member of a commuting family.

    Joint eigenspaces of dimension greater than one are split by an arbitrary
    (but deterministic) orthonormal basis of the block.
    """
    frame = []
    for b in common_refinement(family):
        r = int(round(np.trace(b).real))
        if r == 1:
            frame.append(b)
            continue
        _, v = jacobi_eigh(b)
        for j in range(b.shape[0] - r, b.shape[0]):
            frame.append(_projector(v[:, j]))
    return Context(tuple(frame))


def contains(ctx: Context, a, tol: float = TAU_PROJ) -> bool:
    """Whether the Hermitian matrix ``a`` belongs to the context (commutes with its frame)."""
    a = check_hermitian(a)
    if a.shape[0] != ctx.dim:
        raise DimensionMismatchError(f"observable dim {a.shape[0]} != context dim {ctx.dim}")
    scale = max(1.0, float(np.max(np.abs(a))))
    return all(np.max(np.abs(p @ a - a @ p)) <= tol * scale for p in ctx.frame)


def _components(c1: Context, c2: Context, tol: float) -> list[tuple[list[int], list[int]]]:
    n = c1.dim
    overlap = np.array([[np.trace(p @ q).real for q in c2.frame] for p in c1.frame])
    parent = list(range(2 * n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(n):
            if overlap[i, j] > tol:
                parent[find(i)] = find(n + j)
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for x in range(2 * n):
        left, right = groups.setdefault(find(x), ([], []))
        (left if x < n else right).append(x % n)
    return sorted(groups.values(), key=lambda g: min(g[0]) if g[0] else n)


def intersection_components(c1: Context, c2: Context, tol: float = TAU_OVERLAP):
    """Connected components of the frame overlap graph as ``(c1 indices, c2 indices)`` pairs."""
    if c1.dim != c2.dim:
        raise DimensionMismatchError("contexts differ in dimension")
    return _components(c1, c2, tol)


def intersection(c1: Context, c2: Context, tol: float = TAU_OVERLAP) -> list[np.ndarray]:
    """Minimal projectors of the common subalgebra of two contexts.

    Returns a partition of the identity; ``[I]`` when the intersection is trivial.
    """
    comps = intersection_components(c1, c2, tol)
    projs = [sum(c1.frame[i] for i in left) for left, _ in comps]
    return sorted(projs, key=canonical_entries)
