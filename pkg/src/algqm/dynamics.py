"""Heisenberg dynamics, time averages, compressions and the ergodicity check.

Evolution follows ``dA/dt = i[H, A]``, whose solution is
``A(t) = exp(iHt) A exp(-iHt)``.  The infinite-time average of ``A(t)`` is the
pinching ``sum_n P_n A P_n`` over the spectral projectors of ``H``; it does not
depend on the sign convention of the exponent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .contexts import completing_context, contains
from .matalg import (
    TAU_PROJ,
    SpectralDecomposition,
    as_matrix,
    check_hermitian,
    eig_hermitian,
    matrix_from_literal,
    matrix_to_literal,
)
from .valuation import DeviceType, IncompatibleDeviceError, PhysicalState, evaluate

__all__ = [
    "NotGroundStateError",
    "StepSizeError",
    "HamiltonianModel",
    "heisenberg_evolve",
    "evolve_valuation",
    "time_average",
    "time_average_quadrature",
    "compress",
    "ErgodicityReport",
    "ergodicity_check",
]


class NotGroundStateError(ValueError):
    pass


class StepSizeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """A Hermitian Hamiltonian with a designated nondegenerate level ``E_0``.

    ``ground_index`` indexes the ascending distinct eigenvalues; it defaults
    to the lowest nondegenerate level.  ``E_0`` need not be the minimum.
    """

    H: np.ndarray
    ground_index: int | None = None
    spectral: SpectralDecomposition = field(init=False, repr=False)

    def __post_init__(self):
        h = check_hermitian(self.H, name="Hamiltonian")
        h.setflags(write=False)
        spec = eig_hermitian(h)
        idx = self.ground_index
        if idx is None:
            idx = next((i for i in range(len(spec)) if spec.is_one_dimensional(i)), None)
            if idx is None:
                raise ValueError("Hamiltonian has no nondegenerate eigenvalue")
        if not 0 <= idx < len(spec):
            raise ValueError(f"ground_index {idx} out of range (0..{len(spec) - 1})")
        if not spec.is_one_dimensional(idx):
            raise ValueError(f"eigenvalue {spec.eigenvalues[idx]} at ground_index is degenerate")
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "ground_index", int(idx))
        object.__setattr__(self, "spectral", spec)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def ground_energy(self) -> float:
        return self.spectral.eigenvalues[self.ground_index]

    @property
    def ground_projector(self) -> np.ndarray:
        return self.spectral.projectors[self.ground_index]

    @property
    def norm(self) -> float:
        return max(abs(e) for e in self.spectral.eigenvalues)

    def min_gap(self) -> float:
        ev = self.spectral.eigenvalues
        return min((b - a for a, b in zip(ev, ev[1:])), default=0.0)

    def propagator(self, t: float) -> np.ndarray:
        """``exp(-iHt)`` assembled from the spectral projectors."""
        return sum(
            np.exp(-1j * e * t) * p
            for e, p in zip(self.spectral.eigenvalues, self.spectral.projectors)
        )

    def to_json(self) -> dict:
        return {"H": matrix_to_literal(self.H), "ground_index": self.ground_index}

    @classmethod
    def from_json(cls, obj) -> HamiltonianModel:
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - {"H", "ground_index"}
        if unknown:
            raise ValueError(f"unknown Hamiltonian fields: {sorted(unknown)}")
        return cls(matrix_from_literal(obj["H"]), obj.get("ground_index"))


def heisenberg_evolve(model: HamiltonianModel, a, t: float) -> np.ndarray:
    """``A(t) = exp(iHt) A exp(-iHt)``, the solution of ``dA/dt = i[H, A]`` with ``A(0) = A``."""
    a = check_hermitian(a, name="observable")
    if t == 0:
        return a
    v = model.propagator(-t)
    return v @ a @ v.conj().T


def evolve_valuation(
    phi: PhysicalState,
    model: HamiltonianModel,
    a,
    device: DeviceType,
    t: float,
    transport: bool = True,
) -> float:
    """Value ``phi_t(A) = phi(A(t))`` read through ``device``.

    With ``transport`` the device context is carried along by the same
    conjugation as the observable, so compatibility is preserved.  Without it
    the fixed device must already be compatible with ``A(t)``.
    """
    at = heisenberg_evolve(model, a, t)
    if transport:
        moved = device.context if t == 0 else device.context.transformed(model.propagator(-t))
        device = DeviceType(device.label, moved)
    elif not contains(device.context, at):
        raise IncompatibleDeviceError("evolved observable left the device context")
    return evaluate(phi, at, device)


def time_average(model: HamiltonianModel, a) -> np.ndarray:
    """Infinite-time average ``sum_n P_n A P_n`` over the spectral projectors of ``H``."""
    a = check_hermitian(a, name="observable")
    return sum(p @ a @ p for p in model.spectral.projectors)


def time_average_quadrature(
    model: HamiltonianModel, a, L: float, steps: int, chunk: int = 1 << 18
) -> np.ndarray:
    """Trapezoid-rule approximation of ``(1/2L) int_{-L}^{L} A(t) dt``.

    ``A(t)`` is expanded as ``sum_{m,n} exp(i(E_m - E_n)t) P_m A P_n`` and the
    trapezoid weights are summed per frequency, which is the same rule applied
    to the integrand term by term.
    """
    a = check_hermitian(a, name="observable")
    if L <= 0 or steps < 1:
        raise ValueError("L and steps must be positive")
    h = 2.0 * L / steps
    if model.norm > 0 and h > 0.1 / model.norm:
        raise StepSizeError(f"step {h:.3e} exceeds 0.1/||H|| = {0.1 / model.norm:.3e}")
    energies = np.array(model.spectral.eigenvalues)
    projs = model.spectral.projectors
    omega = energies[:, None] - energies[None, :]
    sums = np.zeros(omega.shape, dtype=np.complex128)
    for start in range(0, steps + 1, chunk):
        j = np.arange(start, min(start + chunk, steps + 1))
        w = np.full(j.shape, h)
        w[j == 0] = h / 2
        w[j == steps] = h / 2
        t = -L + j * h
        sums += np.einsum("k,mnk->mn", w, np.exp(1j * omega[:, :, None] * t[None, None, :]))
    out = np.zeros_like(a)
    for m, pm in enumerate(projs):
        for n, pn in enumerate(projs):
            out += sums[m, n] * (pm @ a @ pn)
    return out / (2.0 * L)


def _check_rank_one_projector(p) -> np.ndarray:
    p = as_matrix(p)
    if (
        np.max(np.abs(p @ p - p)) > TAU_PROJ
        or np.max(np.abs(p - p.conj().T)) > TAU_PROJ
        or abs(np.trace(p).real - 1.0) > TAU_PROJ
    ):
        raise ValueError("not a one-dimensional orthogonal projector")
    return p


def compress(p, a) -> float:
    """The scalar ``s`` with ``p A p = s p`` for a one-dimensional projector ``p``."""
    p = _check_rank_one_projector(p)
    a = check_hermitian(a, name="observable")
    return float(np.trace(p @ a).real)


@dataclass
class ErgodicityReport:
    time_averaged_value: float
    compression: float
    f_term: float
    ground_value: float
    passed: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def ergodicity_check(model: HamiltonianModel, a, phi0: PhysicalState, tol: float = 1e-10):
    """Compare the ground-state value of the time average with the compression ``Psi_0(A)``.

    The time average and the ground projector commute, so both are read
    through one device over a context containing them.  The remainder
    ``F = sum_{n != 0} P_n A P_n`` is orthogonal to ``p_0`` and must read 0.
    """
    p0 = model.ground_projector
    abar = time_average(model, a)
    device = DeviceType.for_context(completing_context([abar, p0]))
    ground_value = evaluate(phi0, p0, device)
    if abs(ground_value - 1.0) > 1e-9:
        raise NotGroundStateError(f"phi0(p0) = {ground_value!r}, not a ground physical state")
    value = evaluate(phi0, abar, device)
    psi = compress(p0, a)
    f_term = evaluate(phi0, abar - p0 @ abar @ p0, device)
    passed = abs(value - psi) <= tol and abs(f_term) <= tol
    return ErgodicityReport(value, psi, f_term, ground_value, passed)
