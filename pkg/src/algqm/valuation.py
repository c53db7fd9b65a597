"""Physical-state valuations.

A :class:`PhysicalState` assigns to each context one outcome index ``k``;
restricted to that context it is the real homomorphism ``sum c_j P_j -> c_k``.
States may be *lazy*: an extension recipe fixes outcomes on contexts the
first time they are queried, and the result is cached so that repeated
measurements are reproducible.

Values that depend on the measuring device (the same observable read through
devices of different contexts) are recorded per ``(observable key, device
label)`` in :attr:`PhysicalState.device_values`.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .contexts import (
    Context,
    contains,
    context_of,
    intersection_components,
    observable_key,
)
from .matalg import (
    TAU_EIG,
    TAU_PROJ,
    DimensionMismatchError,
    PAULI,
    check_hermitian,
    cstar_norm,
    eig_hermitian,
    jacobi_eigh,
)
from .streams import uniform_at

__all__ = [
    "IncompatibleDeviceError",
    "UnassignedContextError",
    "MissingDeviceValueError",
    "DeviceType",
    "PhysicalState",
    "Selector",
    "first_allowed",
    "random_selector",
    "evaluate",
    "construct_greedy",
    "greedy_step",
    "spin_half_state",
    "permutation_closure",
    "ks_search",
    "separation_witness",
    "ValuationReport",
    "check_valuation_properties",
]


class IncompatibleDeviceError(ValueError):
    pass


class UnassignedContextError(KeyError):
    pass


class MissingDeviceValueError(KeyError):
    pass


@dataclass(frozen=True)
class DeviceType:
    """A measuring device type: a label plus the context its analyzer is compatible with."""

    label: str
    context: Context

    @classmethod
    def for_context(cls, ctx: Context) -> DeviceType:
        return cls(default_label(ctx), ctx)


def default_label(ctx: Context) -> str:
    return f"ctx:{ctx.short_key}"


# (context, allowed outcome indices) -> chosen index
Selector = Callable[[Context, list], int]


def first_allowed(ctx: Context, allowed: list) -> int:
    return allowed[0]


def random_selector(seed: int) -> Selector:
    """Selector drawing uniformly among allowed indices from a per-context stream."""

    def select(ctx: Context, allowed: list) -> int:
        u = uniform_at(seed, "select|" + ctx.key, 0)
        return allowed[int(u * len(allowed))]

    return select


class PhysicalState:
    """Outcome assignments per context, device-indexed values, and an optional extension recipe.

    ``extender(state, ctx)`` returns the outcome index for a context that has
    not been assigned yet; it is called at most once per context.
    """

    def __init__(
        self,
        dim: int,
        assignments: dict | None = None,
        device_values: dict | None = None,
        provenance: str = "explicit",
        extender: Callable | None = None,
    ):
        self.dim = int(dim)
        self.contexts: dict[str, Context] = {}
        self.assignments: dict[str, int] = {}
        self.labels: dict[str, str] = {}
        self.device_values: dict[tuple[str, str], float] = dict(device_values or {})
        self.provenance = provenance
        self.extender = extender
        for ctx, k in (assignments or {}).items():
            self.assign(ctx, k)

    def __repr__(self):
        return (
            f"PhysicalState(dim={self.dim}, assigned={len(self.assignments)}, "
            f"device_values={len(self.device_values)}, provenance={self.provenance!r})"
        )

    def assign(self, ctx: Context, k: int, label: str | None = None) -> None:
        if ctx.dim != self.dim:
            raise DimensionMismatchError(f"context dim {ctx.dim} != state dim {self.dim}")
        if not 0 <= k < self.dim:
            raise ValueError(f"outcome index {k} out of range for dim {self.dim}")
        if ctx.key in self.assignments and self.assignments[ctx.key] != k:
            raise ValueError("context already assigned a different outcome")
        self.contexts[ctx.key] = ctx
        self.assignments[ctx.key] = int(k)
        self.labels.setdefault(ctx.key, label or default_label(ctx))

    def is_assigned(self, ctx: Context) -> bool:
        return ctx.key in self.assignments

    def outcome(self, ctx: Context, extend: bool = True) -> int:
        k = self.assignments.get(ctx.key)
        if k is not None:
            return k
        if not extend or self.extender is None:
            raise UnassignedContextError(f"no outcome assigned on {ctx!r}")
        k = int(self.extender(self, ctx))
        self.assign(ctx, k)
        return k

    def copy(self) -> PhysicalState:
        new = PhysicalState(self.dim, provenance=self.provenance, extender=self.extender)
        new.contexts = dict(self.contexts)
        new.assignments = dict(self.assignments)
        new.labels = dict(self.labels)
        new.device_values = dict(self.device_values)
        return new

    def assigned_contexts(self) -> list[tuple[Context, int]]:
        return [(self.contexts[key], k) for key, k in self.assignments.items()]

    def is_single_valued(self) -> bool:
        return not self.device_values

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "provenance": self.provenance,
            "assignments": [
                {"context_key": key, "index": k} for key, k in self.assignments.items()
            ],
            "device_values": [
                {"observable_key": obs, "device": dev, "value": val}
                for (obs, dev), val in sorted(self.device_values.items())
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def evaluate(phi: PhysicalState, a, device: DeviceType, extend: bool = True) -> float:
    """Value registered by ``device`` for observable ``a`` in physical state ``phi``."""
    a = check_hermitian(a)
    if not contains(device.context, a):
        raise IncompatibleDeviceError(
            f"device {device.label!r} is not compatible with the observable"
        )
    recorded = phi.device_values.get((observable_key(a), device.label))
    if recorded is not None:
        return recorded
    k = phi.outcome(device.context, extend=extend)
    return float(np.trace(device.context.frame[k] @ a).real)


def _allowed_indices(ctx: Context, priors: list[tuple[Context, int]]) -> set[int]:
    """Max-k rule: honour prior contexts in order until the next would make the choice empty."""
    allowed = set(range(ctx.dim))
    for prior, k_prior in priors:
        block = next(left for left, right in intersection_components(ctx, prior) if k_prior in right)
        narrowed = allowed & set(block)
        if not narrowed:
            break
        allowed = narrowed
    return allowed


def greedy_step(
    phi: PhysicalState, ctx: Context, choice: Selector = first_allowed, label: str | None = None
) -> int:
    """Fix the outcome of ``phi`` on ``ctx`` by the max-k consistency rule.

    Prior contexts inconsistent with the chosen outcome leave the shared
    intersection projectors with device-dependent values, which are recorded
    in ``phi.device_values``.
    """
    if phi.is_assigned(ctx):
        return phi.assignments[ctx.key]
    priors = phi.assigned_contexts()
    allowed = sorted(_allowed_indices(ctx, priors))
    k = int(choice(ctx, allowed))
    if k not in allowed:
        raise ValueError(f"selector chose {k}, not in allowed {allowed}")
    label = label or default_label(ctx)
    phi.assign(ctx, k, label)
    for prior, k_prior in priors:
        prior_label = phi.labels[prior.key]
        for left, right in intersection_components(ctx, prior):
            mine, theirs = float(k in left), float(k_prior in right)
            if mine != theirs:
                key = observable_key(sum(ctx.frame[i] for i in left))
                phi.device_values[(key, label)] = mine
                phi.device_values[(key, prior_label)] = theirs
    return k


class _GreedyExtension:
    def __init__(self, choice: Selector):
        self.choice = choice

    def __call__(self, phi: PhysicalState, ctx: Context) -> int:
        priors = phi.assigned_contexts()
        allowed = sorted(_allowed_indices(ctx, priors))
        return int(self.choice(ctx, allowed))


def construct_greedy(
    ordered_contexts, choice: Selector = first_allowed, labels=None
) -> PhysicalState:
    """Build a physical state context by context with the max-k consistency rule.

    Parameters
    ----------
    ordered_contexts : list of Context
        Processing order; earlier contexts take precedence.
    choice : Selector
        Picks the outcome among the allowed indices of each new context.
    labels : list of str, optional
        Device labels for the contexts, used to key device-dependent values.
    """
    contexts = list(ordered_contexts)
    if not contexts:
        raise ValueError("empty context list")
    dim = contexts[0].dim
    if any(c.dim != dim for c in contexts):
        raise DimensionMismatchError("contexts differ in dimension")
    labels = list(labels) if labels is not None else [None] * len(contexts)
    phi = PhysicalState(dim, provenance="greedy", extender=_GreedyExtension(choice))
    for ctx, label in zip(contexts, labels):
        greedy_step(phi, ctx, choice, label)
    return phi


def _bloch_vector(p: np.ndarray) -> np.ndarray:
    return np.array([np.trace(p @ PAULI[i]).real for i in (1, 2, 3)])


def spin_half_state(f: Callable[[np.ndarray], int], directions=()) -> PhysicalState:
    """Dimension-2 physical state with ``phi(tau(n)) = f(n)``.

    ``f`` must be odd, ``f(-n) = -f(n)``, with values in ``{-1, +1}``.  The
    context of ``tau(n)`` has frame ``(I +- tau(n)) / 2``; the state selects the
    projector whose Bloch vector ``m`` has ``f(m) = +1``.
    """

    def extend(phi: PhysicalState, ctx: Context) -> int:
        m = _bloch_vector(ctx.frame[0])
        return 0 if f(m) > 0 else 1

    phi = PhysicalState(2, provenance="spin-half", extender=extend)
    for n in directions:
        phi.outcome(context_of(n[0] * PAULI[1] + n[1] * PAULI[2] + n[2] * PAULI[3]))
    return phi


def permutation_closure(phi: PhysicalState, observable, devices) -> list[PhysicalState]:
    """All states obtained by permuting the device-indexed values of one observable.

    The orbit has one member per distinct permutation of the value multiset;
    every member agrees with ``phi`` on all other observables.
    """
    key = observable if isinstance(observable, str) else observable_key(observable)
    labels = [d.label for d in devices]
    try:
        values = [phi.device_values[(key, lab)] for lab in labels]
    except KeyError as exc:
        raise MissingDeviceValueError(f"no device value for {exc.args[0]!r}") from None
    orbit = []
    for perm in sorted(set(itertools.permutations(values))):
        member = phi.copy()
        for lab, val in zip(labels, perm):
            member.device_values[(key, lab)] = val
        member.provenance = f"{phi.provenance}|perm{tuple(perm)}"
        orbit.append(member)
    return orbit


def _vertices(bases) -> tuple[list[np.ndarray], list[list[int]]]:
    verts: list[np.ndarray] = []
    members = []
    for ctx in bases:
        ids = []
        for p in ctx.frame:
            for j, q in enumerate(verts):
                if np.linalg.norm(p - q) <= TAU_PROJ:
                    ids.append(j)
                    break
            else:
                verts.append(p)
                ids.append(len(verts) - 1)
        members.append(ids)
    return verts, members


def ks_search(bases) -> dict[int, int] | None:
    """Search for a noncontextual 0/1 valuation of a family of contexts.

    Every context must have exactly one frame projector valued 1, and a
    projector shared between contexts gets the same value in all of them.

    Returns
    -------
    dict or None
        ``{context index: outcome index}`` witnessing a valuation, or ``None``
        when the family is an obstruction (no such valuation exists).
    """
    bases = list(bases)
    if not bases:
        return {}
    if len({c.dim for c in bases}) != 1:
        raise DimensionMismatchError("contexts differ in dimension")
    _, members = _vertices(bases)
    nv = 1 + max(v for m in members for v in m)
    incident: list[list[int]] = [[] for _ in range(nv)]
    for ci, m in enumerate(members):
        for v in m:
            incident[v].append(ci)
    value = [-1] * nv

    def set_value(v: int, x: int, trail: list) -> bool:
        stack = [(v, x)]
        while stack:
            v, x = stack.pop()
            if value[v] != -1:
                if value[v] != x:
                    return False
                continue
            value[v] = x
            trail.append(v)
            for ci in incident[v]:
                vs = members[ci]
                if x == 1:
                    stack.extend((w, 0) for w in vs if w != v)
                else:
                    if any(value[w] == 1 for w in vs):
                        continue
                    free = [w for w in vs if value[w] == -1]
                    if not free:
                        return False
                    if len(free) == 1:
                        stack.append((free[0], 1))
        return True

    def undo(trail: list) -> None:
        for v in trail:
            value[v] = -1

    def search() -> bool:
        best = None
        for vs in members:
            if any(value[w] == 1 for w in vs):
                continue
            free = [w for w in vs if value[w] == -1]
            if not free:
                return False
            if best is None or len(free) < len(best):
                best = free
        if best is None:
            return True
        for v in best:
            trail: list = []
            if set_value(v, 1, trail) and search():
                return True
            undo(trail)
        return False

    if not search():
        return None
    return {ci: next(i for i, w in enumerate(m) if value[w] == 1) for ci, m in enumerate(members)}


def separation_witness(a1, a2) -> tuple[Context, int] | None:
    """A context and outcome on which two observables are told apart.

    The context is an eigenframe of ``a1 - a2`` and the outcome its
    largest-magnitude eigenvector, so the two observables' values on that
    frame projector (``tr(P a1)`` vs ``tr(P a2)``) differ by ``||a1 - a2||``.
    Returns ``None`` when the observables agree within ``1e-8 * max(1, ||a1||, ||a2||)``.
    """
    a1, a2 = check_hermitian(a1), check_hermitian(a2)
    if a1.shape != a2.shape:
        raise DimensionMismatchError("observables differ in dimension")
    diff = a1 - a2
    tau_sep = 1e-8 * max(1.0, cstar_norm(a1), cstar_norm(a2))
    if cstar_norm(diff) <= tau_sep:
        return None
    w, v = jacobi_eigh(diff)
    ctx = Context(tuple(np.outer(v[:, j], v[:, j].conj()) for j in range(len(w))))
    j = int(np.argmax(np.abs(w)))
    p = np.outer(v[:, j], v[:, j].conj())
    return ctx, ctx.index_of_projector(p)


@dataclass
class ValuationReport:
    samples: int
    residuals: dict = field(default_factory=dict)
    spectrum_realized: bool = True
    passed: bool = True

    def lines(self) -> list[str]:
        out = [f"{name}: max residual {res:.3e}" for name, res in self.residuals.items()]
        out.append(f"spectral points realized per context: {self.spectrum_realized}")
        return out


def check_valuation_properties(
    phi: PhysicalState, ctx: Context, samples: int, seed: int = 0, tol: float = 1e-8
) -> ValuationReport:
    """Check the single-context valuation identities on random observables of ``ctx``.

    Residuals: ``phi(0)``, ``phi(I) - 1``, negativity of ``phi(A^2)``, distance
    of ``phi(A)`` to the spectrum, multiplicativity and additivity.  The
    realization check evaluates every observable under each outcome of the
    context and requires every eigenvalue to be hit.
    """
    if not phi.is_assigned(ctx):
        raise UnassignedContextError(f"state not assigned on {ctx!r}")
    rng = np.random.default_rng(seed)
    dev = DeviceType.for_context(ctx)
    d = ctx.dim
    eye = np.eye(d)
    res = {
        "zero": abs(evaluate(phi, np.zeros((d, d)), dev)),
        "unit": abs(evaluate(phi, eye, dev) - 1.0),
        "square_negativity": 0.0,
        "spectrum_distance": 0.0,
        "multiplicativity": 0.0,
        "additivity": 0.0,
    }
    branches = [PhysicalState(d, {ctx: k}) for k in range(d)]
    realized = True
    for _ in range(samples):
        a = ctx.element(rng.normal(size=d))
        b = ctx.element(rng.normal(size=d))
        x, y = rng.normal(size=2)
        fa, fb = evaluate(phi, a, dev), evaluate(phi, b, dev)
        res["square_negativity"] = max(res["square_negativity"], -evaluate(phi, a @ a, dev))
        spec = eig_hermitian(a)
        dist = min(abs(fa - lam) for lam in spec.eigenvalues)
        res["spectrum_distance"] = max(res["spectrum_distance"], dist)
        res["multiplicativity"] = max(res["multiplicativity"], abs(evaluate(phi, a @ b, dev) - fa * fb))
        lin = evaluate(phi, x * a + y * b, dev) - x * fa - y * fb
        res["additivity"] = max(res["additivity"], abs(lin))
        values = [evaluate(br, a, dev) for br in branches]
        for lam in spec.eigenvalues:
            if min(abs(v - lam) for v in values) > tol * max(1.0, abs(lam)):
                realized = False
    passed = (
        res["zero"] <= TAU_EIG
        and res["unit"] <= TAU_EIG
        and res["square_negativity"] <= 1e-12
        and res["spectrum_distance"] <= tol
        and res["multiplicativity"] <= tol
        and res["additivity"] <= tol
        and realized
    )
    return ValuationReport(samples, res, realized, passed)
