"""Quantum states as ensembles of physical states.

The ensemble measure is realized per context by Born sampling: a sampled
physical state draws its outcome on a context ``C`` from ``tr(rho P_k)``
using a counter-based stream keyed by ``(seed, C)`` at position ``index``.
Sample means of device readings then converge to ``tr(rho A)``, and because
the stream of a device depends only on its context, devices of different
types read statistically equivalent ensembles.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .contexts import Context, contains, observable_key
from .matalg import (
    TAU_PROJ,
    DimensionMismatchError,
    as_matrix,
    check_hermitian,
    jacobi_eigh,
    matrix_to_literal,
)
from .streams import uniform_at, uniforms
from .valuation import DeviceType, IncompatibleDeviceError, PhysicalState

__all__ = [
    "InvalidStateError",
    "StateFunctional",
    "RunningStats",
    "SampledEnsembleStats",
    "born_probs",
    "device_readings",
    "sample_physical_state",
    "expected_value",
    "monte_carlo_average",
    "RepresentativityReport",
    "representativity_test",
]

CHUNK = 65536


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StateFunctional:
    """A positive normalized linear functional ``A -> tr(rho A)``."""

    density: np.ndarray

    def __post_init__(self):
        rho = as_matrix(self.density)
        try:
            rho = check_hermitian(rho, name="density")
        except ValueError as exc:
            raise InvalidStateError(str(exc)) from None
        w, _ = jacobi_eigh(rho)
        if w[0] < -1e-10:
            raise InvalidStateError(f"density has negative eigenvalue {w[0]:.3e}")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise InvalidStateError(f"density trace {np.trace(rho).real!r} != 1")
        rho.setflags(write=False)
        object.__setattr__(self, "density", rho)

    @classmethod
    def pure(cls, vector) -> StateFunctional:
        v = np.asarray(vector, dtype=np.complex128)
        norm = np.linalg.norm(v)
        if norm == 0 or not np.isfinite(norm):
            raise InvalidStateError("state vector must be nonzero and finite")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> StateFunctional:
        return cls(np.eye(dim) / dim)

    @property
    def dim(self) -> int:
        return self.density.shape[0]

    @property
    def is_pure(self) -> bool:
        rho = self.density
        return bool(np.max(np.abs(rho @ rho - rho)) <= TAU_PROJ)

    def __call__(self, a) -> complex:
        """``tr(rho A)`` for an arbitrary (not necessarily Hermitian) element."""
        a = as_matrix(a)
        if a.shape != self.density.shape:
            raise DimensionMismatchError("observable and state differ in dimension")
        return complex(np.trace(self.density @ a))

    def to_json(self) -> dict:
        return {"density": matrix_to_literal(self.density)}


def born_probs(state: StateFunctional, ctx: Context) -> np.ndarray:
    """Outcome probabilities ``tr(rho P_k)`` over the frame of ``ctx``."""
    if state.dim != ctx.dim:
        raise DimensionMismatchError(f"state dim {state.dim} != context dim {ctx.dim}")
    p = np.array([np.trace(state.density @ q).real for q in ctx.frame])
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _pinned_index(state: StateFunctional, ctx: Context) -> int | None:
    """Frame index equal to the projector of a pure state, if the context contains it."""
    if not state.is_pure:
        return None
    return ctx.index_of_projector(state.density)


def _draw(probs: np.ndarray, u) -> np.ndarray:
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    return np.minimum(np.searchsorted(cum, u, side="right"), len(probs) - 1)


def _stream_name(ctx: Context) -> str:
    return "born|" + ctx.key


class _BornExtension:
    def __init__(self, state: StateFunctional, seed: int, index: int):
        self.state, self.seed, self.index = state, seed, index

    def __call__(self, phi: PhysicalState, ctx: Context) -> int:
        pinned = _pinned_index(self.state, ctx)
        if pinned is not None:
            return pinned
        u = uniform_at(self.seed, _stream_name(ctx), self.index)
        return int(_draw(born_probs(self.state, ctx), u))


def sample_physical_state(state: StateFunctional, seed: int, index: int = 0) -> PhysicalState:
    """One member of the ensemble of ``state``, realized lazily context by context.

    On a context containing the projector of a pure state the outcome is that
    projector with certainty (the state is stable on it).
    """
    ext = _BornExtension(state, seed, index)
    return PhysicalState(state.dim, provenance=f"born(seed={seed},index={index})", extender=ext)


def expected_value(state: StateFunctional, a) -> float:
    """Quantum average ``tr(rho A)`` of a Hermitian observable."""
    a = check_hermitian(a, name="observable")
    return float(state(a).real)


class RunningStats:
    """One-pass mean and variance with an order-fixed pairwise merge."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def push(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def push_batch(self, xs: np.ndarray) -> None:
        other = RunningStats()
        other.count = len(xs)
        if other.count:
            other.mean = float(np.mean(xs))
            other.m2 = float(np.sum((xs - other.mean) ** 2))
        self.merge(other)

    def merge(self, other: RunningStats) -> None:
        if other.count == 0:
            return
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / n
        self.m2 += other.m2 + delta * delta * self.count * other.count / n
        self.count = n

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def stderr(self) -> float:
        return math.sqrt(max(self.variance, 0.0) / self.count) if self.count else 0.0


@dataclass(frozen=True)
class SampledEnsembleStats:
    count: int
    mean: float
    second_moment: float
    stderr: float
    seed: int
    device: str

    @property
    def variance(self) -> float:
        return self.stderr**2 * self.count


def device_readings(
    state: StateFunctional, a, device: DeviceType, n: int, seed: int, start: int = 0
) -> np.ndarray:
    """Readings of ``device`` on samples ``start .. start + n - 1`` of the ensemble."""
    ctx = device.context
    values = ctx.coefficients(a)
    pinned = _pinned_index(state, ctx)
    if pinned is not None:
        return np.full(n, values[pinned])
    u = uniforms(seed, _stream_name(ctx), n, start=start)
    return values[_draw(born_probs(state, ctx), u)]


def monte_carlo_average(
    state: StateFunctional, a, device: DeviceType, n: int, seed: int
) -> SampledEnsembleStats:
    """Sample mean and standard error of ``n`` independent device readings.

    Reading ``i`` is the value ``device`` registers on
    ``sample_physical_state(state, seed, i)``.
    """
    a = check_hermitian(a, name="observable")
    if n < 1:
        raise ValueError("n must be positive")
    if not contains(device.context, a):
        raise IncompatibleDeviceError(f"device {device.label!r} is not compatible with the observable")
    stats = RunningStats()
    sq = 0.0
    for start in range(0, n, CHUNK):
        xs = device_readings(state, a, device, min(CHUNK, n - start), seed, start)
        stats.push_batch(xs)
        sq += float(np.sum(xs * xs))
    return SampledEnsembleStats(n, stats.mean, sq / n, stats.stderr, seed, device.label)


@dataclass
class RepresentativityReport:
    observable_key: str
    oracle: float
    means: dict
    stderrs: dict
    pairwise: list
    oracle_deviation: dict
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def representativity_test(
    state: StateFunctional, a, devices, n: int, seed: int, sigmas: float = 5.0
) -> RepresentativityReport:
    """Compare sample means of one observable read through several device types.

    Passes when every pair of means agrees within ``sigmas`` combined standard
    errors and every mean agrees with ``tr(rho A)`` within ``sigmas`` of its
    own standard error.
    """
    devices = list(devices)
    if len(devices) < 2:
        raise ValueError("need at least two devices")
    if len({d.context.key for d in devices}) != len(devices):
        raise ValueError("device contexts must be distinct")
    if len({d.label for d in devices}) != len(devices):
        raise ValueError("device labels must be distinct")
    oracle = expected_value(state, a)
    runs = {d.label: monte_carlo_average(state, a, d, n, seed) for d in devices}
    pairwise = []
    ok = True
    labels = [d.label for d in devices]
    for i, li in enumerate(labels):
        for lj in labels[i + 1 :]:
            delta = abs(runs[li].mean - runs[lj].mean)
            bound = sigmas * math.hypot(runs[li].stderr, runs[lj].stderr)
            good = delta <= bound + 1e-12
            ok &= good
            pairwise.append({"devices": [li, lj], "delta": delta, "bound": bound, "pass": good})
    deviation = {}
    for lab, st in runs.items():
        dev = abs(st.mean - oracle)
        deviation[lab] = dev
        ok &= dev <= sigmas * st.stderr + 1e-12
    return RepresentativityReport(
        observable_key(a),
        oracle,
        {lab: st.mean for lab, st in runs.items()},
        {lab: st.stderr for lab, st in runs.items()},
        pairwise,
        deviation,
        bool(ok),
    )
