"""Command-line front end.

``algqm demo`` runs the spin-1/2 worked example; ``algqm run PROBLEM CMD``
loads a JSON problem file and writes a JSON report.  Exit codes: 0 PASS,
1 FAIL, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .contexts import context_from_vectors, context_of, joint_context, observable_key
from .dynamics import HamiltonianModel, compress, ergodicity_check, time_average, time_average_quadrature
from .ensemble import (
    InvalidStateError,
    StateFunctional,
    expected_value,
    monte_carlo_average,
    representativity_test,
    sample_physical_state,
)
from .gns import gns_construct, gns_verify
from .matalg import check_hermitian, cstar_norm, matrix_from_literal, matrix_to_literal, tau, vector_from_literal
from .valuation import DeviceType, evaluate, ks_search, spin_half_state

__all__ = ["ProblemError", "ProblemFile", "load_problem", "cmd_demo_spin_half", "cmd_run", "main"]

SCHEMA_VERSION = 1
SUBCOMMANDS = ("average", "representativity", "timeavg", "ergodicity", "gns", "ks")

DEFAULT_TOLERANCES = {
    "sigmas": 5.0,
    "average_abs": 1e-10,
    "timeavg": 0.05,
    "ergodicity": 1e-10,
    "gns": 1e-9,
}
DEFAULT_RUN = {"n": 100000, "seed": 0, "trials": 200}

TOP_FIELDS = {"dim", "observables", "hamiltonian", "state", "devices", "run"}
RUN_FIELDS = {"observable", "n", "seed", "device", "L", "steps", "trials", "tolerances"}
DEVICE_FIELDS = {"label", "generator", "generators", "basis"}


class ProblemError(ValueError):
    """Malformed problem file; ``where`` names the offending field or position."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class ProblemFile:
    dim: int
    observables: dict = field(default_factory=dict)
    hamiltonian: HamiltonianModel | None = None
    state: StateFunctional | None = None
    devices: list = field(default_factory=list)
    run: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)


def _matrix(lit, where: str, dim: int, hermitian: bool = True) -> np.ndarray:
    try:
        m = matrix_from_literal(lit)
        if hermitian:
            m = check_hermitian(m)
    except ValueError as exc:
        raise ProblemError(where, str(exc)) from None
    if m.shape[0] != dim:
        raise ProblemError(where, f"dimension {m.shape[0]} != problem dim {dim}")
    return m


def _check_fields(obj, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ProblemError(where, "expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ProblemError(where, f"unknown fields {sorted(unknown)}")


def _device(obj, i: int, dim: int) -> DeviceType:
    where = f"devices[{i}]"
    _check_fields(obj, DEVICE_FIELDS, where)
    label = obj.get("label")
    if not isinstance(label, str) or not label:
        raise ProblemError(f"{where}.label", "missing device label")
    given = [k for k in ("generator", "generators", "basis") if k in obj]
    if len(given) != 1:
        raise ProblemError(where, "give exactly one of generator, generators, basis")
    kind = given[0]
    try:
        if kind == "generator":
            ctx = context_of(_matrix(obj[kind], f"{where}.generator", dim))
        elif kind == "generators":
            mats = [_matrix(m, f"{where}.generators[{j}]", dim) for j, m in enumerate(obj[kind])]
            ctx = joint_context(mats)
        else:
            vecs = [vector_from_literal(v) for v in obj[kind]]
            ctx = context_from_vectors(vecs)
    except ProblemError:
        raise
    except (ValueError, TypeError) as exc:
        raise ProblemError(f"{where}.{kind}", str(exc)) from None
    if ctx.dim != dim:
        raise ProblemError(where, f"context dimension {ctx.dim} != problem dim {dim}")
    return DeviceType(label, ctx)


def parse_problem(obj) -> ProblemFile:
    _check_fields(obj, TOP_FIELDS, "problem")
    dim = obj.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ProblemError("dim", "must be a positive integer")
    prob = ProblemFile(dim)
    observables = obj.get("observables", {})
    if not isinstance(observables, dict):
        raise ProblemError("observables", "expected an object of named matrices")
    for name, lit in observables.items():
        prob.observables[name] = _matrix(lit, f"observables.{name}", dim)
    if "hamiltonian" in obj:
        h = obj["hamiltonian"]
        _check_fields(h, {"H", "ground_index"}, "hamiltonian")
        if "H" not in h:
            raise ProblemError("hamiltonian.H", "missing")
        hm = _matrix(h["H"], "hamiltonian.H", dim)
        try:
            prob.hamiltonian = HamiltonianModel(hm, h.get("ground_index"))
        except ValueError as exc:
            raise ProblemError("hamiltonian", str(exc)) from None
    if "state" in obj:
        s = obj["state"]
        _check_fields(s, {"density", "vector"}, "state")
        if len(s) != 1:
            raise ProblemError("state", "give exactly one of density, vector")
        try:
            if "density" in s:
                prob.state = StateFunctional(_matrix(s["density"], "state.density", dim))
            else:
                vec = vector_from_literal(s["vector"])
                if len(vec) != dim:
                    raise ProblemError("state.vector", f"length {len(vec)} != problem dim {dim}")
                prob.state = StateFunctional.pure(vec)
        except InvalidStateError as exc:
            raise ProblemError("state", str(exc)) from None
        except ValueError as exc:
            if isinstance(exc, ProblemError):
                raise
            raise ProblemError("state", str(exc)) from None
    devices = obj.get("devices", [])
    if not isinstance(devices, list):
        raise ProblemError("devices", "expected a list")
    prob.devices = [_device(d, i, dim) for i, d in enumerate(devices)]
    if len({d.label for d in prob.devices}) != len(prob.devices):
        raise ProblemError("devices", "duplicate device labels")
    run = obj.get("run", {})
    _check_fields(run, RUN_FIELDS, "run")
    tolerances = run.get("tolerances", {})
    _check_fields(tolerances, set(DEFAULT_TOLERANCES), "run.tolerances")
    prob.tolerances = {**DEFAULT_TOLERANCES, **{k: float(v) for k, v in tolerances.items()}}
    prob.run = {**DEFAULT_RUN, **{k: v for k, v in run.items() if k != "tolerances"}}
    return prob


def load_problem(path: str) -> ProblemFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemError(path, str(exc)) from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return parse_problem(obj)


def _need(value, where: str):
    if value is None:
        raise ProblemError(where, "required for this subcommand")
    return value


def _observable(prob: ProblemFile):
    name = _need(prob.run.get("observable"), "run.observable")
    if name not in prob.observables:
        raise ProblemError("run.observable", f"no observable named {name!r}")
    return name, prob.observables[name]


def _select_devices(prob: ProblemFile, labels):
    if not labels:
        return list(prob.devices)
    by_label = {d.label: d for d in prob.devices}
    missing = [lab for lab in labels if lab not in by_label]
    if missing:
        raise ProblemError("device", f"unknown device labels {missing}")
    return [by_label[lab] for lab in labels]


def _run_average(prob: ProblemFile) -> dict:
    name, a = _observable(prob)
    state = _need(prob.state, "state")
    label = prob.run.get("device")
    if label is None:
        raise ProblemError("device", "average needs --device or run.device")
    (device,) = _select_devices(prob, [label])
    stats = monte_carlo_average(state, a, device, int(prob.run["n"]), int(prob.run["seed"]))
    oracle = expected_value(state, a)
    tol = prob.tolerances
    ok = abs(stats.mean - oracle) <= tol["sigmas"] * stats.stderr + tol["average_abs"]
    return {
        "state": state.to_json(),
        "observable": name,
        "observable_key": observable_key(a),
        "device": device.label,
        "n": stats.count,
        "seed": stats.seed,
        "mean": stats.mean,
        "stderr": stats.stderr,
        "oracle": oracle,
        "pass": bool(ok),
    }


def _run_representativity(prob: ProblemFile) -> dict:
    name, a = _observable(prob)
    state = _need(prob.state, "state")
    label = prob.run.get("device")
    devices = _select_devices(prob, label.split(",") if label else None)
    rep = representativity_test(
        state, a, devices, int(prob.run["n"]), int(prob.run["seed"]), prob.tolerances["sigmas"]
    )
    out = rep.to_json()
    out.update(observable=name, n=int(prob.run["n"]), seed=int(prob.run["seed"]))
    out["pass"] = out.pop("passed")
    return out


def _run_timeavg(prob: ProblemFile) -> dict:
    name, a = _observable(prob)
    model = _need(prob.hamiltonian, "hamiltonian")
    gap = model.min_gap()
    L = prob.run.get("L")
    if L is None:
        L = 200.0 / gap if gap > 0 else 1.0
    L = float(L)
    steps = prob.run.get("steps")
    if steps is None:
        steps = max(1, math.ceil(2.0 * L * model.norm / 0.1))
    pinch = time_average(model, a)
    quad = time_average_quadrature(model, a, L, int(steps))
    residual = cstar_norm(quad - pinch)
    return {
        "observable": name,
        "L": L,
        "steps": int(steps),
        "min_gap": gap,
        "time_average": matrix_to_literal(np.round(pinch, 12)),
        "residual": residual,
        "pass": bool(residual <= prob.tolerances["timeavg"]),
    }


def _run_ergodicity(prob: ProblemFile) -> dict:
    name, a = _observable(prob)
    model = _need(prob.hamiltonian, "hamiltonian")
    p0 = model.ground_projector
    vec = p0[:, int(np.argmax(np.abs(np.diag(p0))))]
    phi0 = sample_physical_state(StateFunctional.pure(vec), int(prob.run["seed"]))
    rep = ergodicity_check(model, a, phi0, tol=prob.tolerances["ergodicity"])
    out = rep.to_json()
    out.update(observable=name, ground_energy=model.ground_energy, seed=int(prob.run["seed"]))
    out["pass"] = out.pop("passed")
    return out


def _run_gns(prob: ProblemFile) -> dict:
    state = _need(prob.state, "state")
    rep = gns_construct(state)
    report = gns_verify(rep, int(prob.run["trials"]), seed=int(prob.run["seed"]))
    dump = rep.to_json(prob.observables)
    return {
        "source_dim": rep.source_dim,
        "rep_dim": rep.rep_dim,
        "trials": report.trials,
        "residuals": report.residuals,
        "representation": dump,
        "pass": report.passed(prob.tolerances["gns"]),
    }


def _run_ks(prob: ProblemFile) -> dict:
    if not prob.devices:
        raise ProblemError("devices", "ks needs at least one device context")
    ctxs = [d.context for d in prob.devices]
    witness = ks_search(ctxs)
    if witness is None:
        return {"contexts": len(ctxs), "result": "OBSTRUCTION", "pass": False}
    assignment = {prob.devices[i].label: k for i, k in witness.items()}
    return {"contexts": len(ctxs), "result": "WITNESS", "assignment": assignment, "pass": True}


RUNNERS = {
    "average": _run_average,
    "representativity": _run_representativity,
    "timeavg": _run_timeavg,
    "ergodicity": _run_ergodicity,
    "gns": _run_gns,
    "ks": _run_ks,
}


def _apply_overrides(prob: ProblemFile, args) -> None:
    for flag in ("n", "seed", "device", "L", "steps"):
        value = getattr(args, flag, None)
        if value is not None:
            prob.run[flag] = value
    for item in args.tol_override or []:
        key, sep, value = item.partition("=")
        if not sep or key not in DEFAULT_TOLERANCES:
            raise ProblemError("--tol-override", f"expected NAME=VALUE with NAME in {sorted(DEFAULT_TOLERANCES)}")
        try:
            prob.tolerances[key] = float(value)
        except ValueError:
            raise ProblemError("--tol-override", f"bad value {value!r}") from None


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(problem: str, subcommand: str, args=None) -> int:
    """Run one subcommand on a problem file and write its report; returns the exit code."""
    args = args or argparse.Namespace(tol_override=None, out=None)
    try:
        if subcommand not in RUNNERS:
            raise ProblemError("subcommand", f"unknown {subcommand!r}; choose from {SUBCOMMANDS}")
        prob = load_problem(problem)
        _apply_overrides(prob, args)
        body = RUNNERS[subcommand](prob)
    except ProblemError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    report = {"schema_version": SCHEMA_VERSION, "command": subcommand, **body}
    _emit(report, getattr(args, "out", None))
    return 0 if report["pass"] else 1


def _ground_sign(n) -> int:
    """Odd sign function with ``f(e_3) = -1``: sign of the first nonzero of ``(-n3, n2, n1)``."""
    for x in (-n[2], n[1], n[0]):
        if abs(x) > 1e-12:
            return 1 if x > 0 else -1
    raise ValueError("zero direction")


def cmd_demo_spin_half(a: float = 2.0, b: complex = 0.5 + 0.25j, d: float = -3.0, e0: float = 1.0,
                       out=None, tol: float = 1e-10) -> int:
    """The 2x2 example: ground compression, time average, Bloch decomposition, ergodicity."""
    out = out or sys.stdout
    c = b.conjugate()
    A = np.array([[a, b], [c, d]], dtype=np.complex128)
    model = HamiltonianModel(np.diag([e0, -e0]), ground_index=0)
    p0 = model.ground_projector
    results = []

    def report(text: str, ok: bool) -> None:
        results.append(ok)
        print(f"{text} : {'PASS' if ok else 'FAIL'}", file=out)

    psi0 = compress(p0, A)
    report(f"Ψ₀(A) = {psi0:g} = d", abs(psi0 - d) <= tol)

    abar = time_average(model, A)
    report(f"Ā = diag({abar[0, 0].real:g}, {abar[1, 1].real:g})",
           bool(np.max(np.abs(abar - np.diag([a, d]))) <= tol))

    r = math.sqrt((a - d) ** 2 / 4 + (b * c).real)
    r0 = (a + d) / 2
    n = np.array([((b + c) / (2 * r)).real, ((b - c) / (2j * r)).real, (a - d) / (2 * r)])
    print(f"r = sqrt((a−d)²/4 + bb*) = {r:.10f}", file=out)
    print(f"r₀ = (a+d)/2 = {r0:g}", file=out)
    print(f"n̄ = ({n[0]:.10f}, {n[1]:.10f}, {n[2]:.10f})", file=out)
    # with b in the upper-right corner the standard tau_2 needs the mirrored second component
    bloch = n * np.array([1.0, -1.0, 1.0])
    recon = r0 * np.eye(2) + r * tau(bloch)
    report("A = r₀I + r·τ(n₁, −n₂, n₃), |n̄| = 1",
           bool(np.max(np.abs(recon - A)) <= tol and abs(np.linalg.norm(n) - 1) <= tol))

    phi = spin_half_state(_ground_sign)
    dev = DeviceType.for_context(context_of(A))
    value = evaluate(phi, A, dev)
    fn = _ground_sign(bloch)
    report(f"φ(A) = {value:.10f} = r₀ + r·f(n̄) with f(n̄) = {fn:+d}", abs(value - (r0 + r * fn)) <= tol)

    erg = ergodicity_check(model, A, phi, tol=tol)
    report(f"φ₀α(Ā) = {erg.time_averaged_value:g} = d = Ψ₀(A)",
           erg.passed and abs(erg.time_averaged_value - d) <= tol)

    ok = all(results)
    print(f"demo: {'PASS' if ok else 'FAIL'}", file=out)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="algqm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("demo", help="run the spin-1/2 worked example")
    run = sub.add_parser("run", help="run a subcommand on a problem file")
    run.add_argument("problem", help="problem file (JSON)")
    run.add_argument("subcommand", choices=SUBCOMMANDS)
    run.add_argument("--n", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--device", help="device label (comma-separated for representativity)")
    run.add_argument("--L", type=float)
    run.add_argument("--steps", type=int)
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--tol-override", action="append", metavar="NAME=VALUE")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "demo":
        return cmd_demo_spin_half()
    return cmd_run(args.problem, args.subcommand, args)


if __name__ == "__main__":
    sys.exit(main())
