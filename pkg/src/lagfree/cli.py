"""Command-line front end.

Every subcommand reads a JSON config (``--config``) and/or flags, flags
winning, prints a JSON summary on stdout and optionally writes a CSV to
``--output``.  Errors go to stderr as ``{"code", "message", "context"}``.

Exit codes: 0 success, 2 invalid config, 3 numerical nonconvergence,
4 acceptance failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .action import closed_form_action, effective_action_quadrature
from .dynamics import damped_free_trajectory, trajectory_to_csv
from .errors import (
    AliasingError,
    DegenerateKernelError,
    DivergenceError,
    GridLeakError,
    InvalidInputError,
    LagfreeError,
    NonConvergenceError,
    ResolutionError,
)
from .geometry import (
    ExtendedPhasePoint,
    ForceField,
    closedness_defect,
    free_hamiltonian,
    harmonic_hamiltonian,
    integrate_omega,
    stokes_residual,
    surface_from_csv,
    surface_to_csv,
)
from .lattice import convergence_report, report_to_csv, richardson_limit
from .propagator import PropagatorSpec, chapman_kolmogorov_residual, propagator_kernel
from .wavepacket import evolve, gaussian_packet, moments, norm, wavefunction_to_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 2, 3, 4

DEFAULTS = {
    "kappa": 1.0,
    "hbar": 1.0,
    "q0": 0.0,
    "t0": 0.0,
    "q1": 1.0,
    "t1": 1.0,
    "seed": 0,
    "q_min": -3.0,
    "q_max": 3.0,
    "q_points": 41,
    "samples": 2001,
    "ns": [32, 64, 128],
    "t_mid": None,
    "tol": 1e-10,
    "grid": 64,
    "system": "damped",
    "surface": None,
    "scale": 1e-2,
    "center": 0.0,
    "momentum": 0.0,
    "width": 1.0,
    "times": [0.5, 1.0],
    "wave_q_min": -24.0,
    "wave_q_max": 24.0,
    "wave_points": 6401,
    "only": None,
    "output": None,
}

COMMANDS = ("action", "propagator", "cktest", "lattice", "surface", "evolve", "verify")


class CliError(Exception):
    def __init__(self, exit_code, code, message, **context):
        super().__init__(message)
        self.exit_code, self.code, self.message, self.context = exit_code, code, message, context


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_CONFIG, "invalid_arguments", message)


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--config", help="JSON file with parameters; flags override it")
    g.add_argument("--output", "-o", help="CSV output path")
    for name in ("kappa", "hbar", "q0", "t0", "q1", "t1"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--seed", type=int)

    grid = _Parser(add_help=False)
    grid.add_argument("--q-min", dest="q_min", type=float)
    grid.add_argument("--q-max", dest="q_max", type=float)
    grid.add_argument("--q-points", dest="q_points", type=int)

    parser = _Parser(prog="lagfree", description="Dissipative propagator toolkit")
    parser.add_argument("--version", action="version", version=f"lagfree {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("action", parents=[common], help="closed-form vs quadrature action")
    p.add_argument("--samples", type=int)

    sub.add_parser("propagator", parents=[common, grid], help="amplitude table q0,q1,re,im")

    p = sub.add_parser("cktest", parents=[common, grid], help="Chapman-Kolmogorov residual")
    p.add_argument("--t-mid", dest="t_mid", type=float)
    p.add_argument("--tol", type=float, help="residual below which the kernel counts as Markovian")

    p = sub.add_parser("lattice", parents=[common], help="lattice convergence report")
    p.add_argument("--ns", type=_ints, help="comma-separated slice counts")

    p = sub.add_parser("surface", parents=[common], help="Stokes residual and closedness defect")
    p.add_argument("--system", choices=["free", "harmonic", "damped"])
    p.add_argument("--surface", help="surface CSV (t,s,q,p); generated when omitted")
    p.add_argument("--grid", type=int, help="nodes per direction for a generated surface")
    p.add_argument("--scale", type=float, help="cube edge for the closedness defect")

    p = sub.add_parser("evolve", parents=[common], help="wavepacket evolution report")
    p.add_argument("--center", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--times", type=_floats, help="comma-separated final times")
    p.add_argument("--q-min", dest="wave_q_min", type=float)
    p.add_argument("--q-max", dest="wave_q_max", type=float)
    p.add_argument("--q-points", dest="wave_points", type=int)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", type=_ints, help="comma-separated criterion numbers")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_CONFIG, "invalid_config", f"cannot read config: {exc}", path=args.config)
        if not isinstance(loaded, dict):
            raise CliError(EXIT_CONFIG, "invalid_config", "config must be a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise CliError(EXIT_CONFIG, "invalid_config", "unknown config keys", keys=unknown)
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in DEFAULTS and val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    if cfg["hbar"] is None or float(cfg["hbar"]) <= 0:
        raise CliError(EXIT_CONFIG, "invalid_parameter", "hbar must be > 0", hbar=cfg["hbar"])
    if float(cfg["kappa"]) < 0:
        raise CliError(EXIT_CONFIG, "invalid_parameter", "kappa must be >= 0", kappa=cfg["kappa"])
    if not float(cfg["t1"]) > float(cfg["t0"]):
        raise CliError(EXIT_CONFIG, "invalid_parameter", "t1 must exceed t0", t0=cfg["t0"], t1=cfg["t1"])
    return cfg


def config_hash(cfg: dict) -> str:
    payload = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _header(cfg):
    return f"lagfree {cfg['command']} config_sha256={config_hash(cfg)}"


def _write(cfg, text):
    path = cfg.get("output")
    if not path:
        return None
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(EXIT_CONFIG, "unwritable_output", str(exc), path=path)
    return path


def _q_grid(cfg):
    n = int(cfg["q_points"])
    if n < 1:
        raise InvalidInputError("q_points must be >= 1", q_points=n)
    return np.linspace(float(cfg["q_min"]), float(cfg["q_max"]), n)


def _spec(cfg):
    return PropagatorSpec(cfg["kappa"], cfg["hbar"], cfg["t0"], cfg["t1"])


# --- commands -------------------------------------------------------------


def cmd_action(cfg):
    k, q0, t0, q1, t1 = (float(cfg[x]) for x in ("kappa", "q0", "t0", "q1", "t1"))
    closed = closed_form_action(k, q0, t0, q1, t1)
    traj = damped_free_trajectory(k, q0, t0, q1, t1, int(cfg["samples"]))
    quad = effective_action_quadrature(traj, k)
    return {
        "closed_form": closed, "quadrature": quad, "difference": abs(closed - quad),
        "samples": int(cfg["samples"]), "output": _write(cfg, trajectory_to_csv(traj, _header(cfg))),
    }


def cmd_propagator(cfg):
    q = _q_grid(cfg)
    kern = propagator_kernel(_spec(cfg))
    lines = ["q0,q1,re,im"]
    for a in q:
        for b in q:
            z = complex(kern(a, b))
            lines.append(f"{a!r},{b!r},{z.real!r},{z.imag!r}")
    path = _write(cfg, f"# {_header(cfg)}\n" + "\n".join(lines) + "\n")
    return {"points": int(q.size) ** 2, "modulus": abs(kern.prefactor), "output": path}


def cmd_cktest(cfg):
    spec = _spec(cfg)
    t_mid = cfg["t_mid"] if cfg["t_mid"] is not None else 0.5 * (spec.t0 + spec.t1)
    res = chapman_kolmogorov_residual(spec, float(t_mid), _q_grid(cfg))
    return {"residual": res, "t_mid": float(t_mid), "status": "markovian" if res < float(cfg["tol"]) else "non-markovian"}


def cmd_lattice(cfg):
    k, q0, t0, q1, t1 = (float(cfg[x]) for x in ("kappa", "q0", "t0", "q1", "t1"))
    ref = closed_form_action(k, q0, t0, q1, t1)
    ns = [int(n) for n in cfg["ns"]]
    rows = convergence_report(q0, t0, q1, t1, k, float(cfg["hbar"]), ns, reference=ref)
    out = {"closed_form": ref, "rows": rows, "output": _write(cfg, report_to_csv(rows, _header(cfg)))}
    if len(ns) == 3:
        out["richardson"] = richardson_limit(ns, [r["S_N"] for r in rows])
    return out


def _generated_surface(cfg, field_):
    from .verification import perturbed_surface

    n = int(cfg["grid"])
    kind = "harmonic" if cfg["system"] == "harmonic" else "free"
    if cfg["system"] != "damped":
        return perturbed_surface(kind, n, seed=int(cfg["seed"]), q0=cfg["q0"], q1=cfg["q1"], t0=cfg["t0"], t1=cfg["t1"])
    from .geometry import ruled_surface

    cl = damped_free_trajectory(cfg["kappa"], cfg["q0"], cfg["t0"], cfg["q1"], cfg["t1"], n + 1)
    rng = np.random.default_rng(int(cfg["seed"]))
    tau = (cl.t_samples - cl.t_samples[0]) / (cl.t_samples[-1] - cl.t_samples[0])
    dq = 0.05 * rng.normal() * np.sin(np.pi * tau)
    dp = 0.05 * rng.normal() * np.cos(np.pi * tau)
    return ruled_surface(cl.t_samples, cl.q_samples, cl.p_samples, cl.q_samples + dq, cl.p_samples + dp,
                         np.linspace(0.0, 1.0, n + 1))


def cmd_surface(cfg):
    system = cfg["system"]
    field_ = {"free": ForceField.free(), "harmonic": ForceField.harmonic(),
              "damped": ForceField.damped(cfg["kappa"])}[system]
    if cfg["surface"]:
        try:
            surf = surface_from_csv(Path(cfg["surface"]).read_text())
        except OSError as exc:
            raise CliError(EXIT_CONFIG, "invalid_config", f"cannot read surface: {exc}", path=cfg["surface"])
    else:
        surf = _generated_surface(cfg, field_)
    point = ExtendedPhasePoint(cfg["q0"], 0.0, cfg["t0"])
    out = {
        "system": system,
        "grid": list(surf.shape),
        "integral": integrate_omega(surf, field_),
        "closedness_defect": closedness_defect(field_, point, float(cfg["scale"])),
        "stokes_residual": None,
    }
    ham = {"free": free_hamiltonian, "harmonic": harmonic_hamiltonian}.get(system)
    if ham is not None:
        out["stokes_residual"] = stokes_residual(surf, ham, field_)
    out["output"] = _write(cfg, surface_to_csv(surf, _header(cfg)))
    return out


def cmd_evolve(cfg):
    state = gaussian_packet(cfg["center"], cfg["momentum"], cfg["width"], cfg["wave_q_min"], cfg["wave_q_max"],
                            int(cfg["wave_points"]), cfg["hbar"])
    rows, final = [], state
    for t in cfg["times"]:
        final = evolve(state, PropagatorSpec(cfg["kappa"], cfg["hbar"], cfg["t0"], float(t)))
        c, w = moments(final)
        rows.append({"t": float(t), "norm": norm(final), "center": c, "width": w})
    return {"report": rows, "output": _write(cfg, wavefunction_to_csv(final, _header(cfg)))}


def cmd_verify(cfg):
    from .verification import run_acceptance

    results = run_acceptance(cfg["only"])
    for r in results:
        print(r.line(), file=sys.stderr)
    summary = {
        "passed": all(r.passed for r in results),
        "criteria": [
            {"number": r.number, "name": r.name, "passed": r.passed, "seconds": round(r.seconds, 3),
             "details": json.loads(json.dumps(r.details, default=_jsonable))}
            for r in results
        ],
    }
    return summary


HANDLERS = {
    "action": cmd_action,
    "propagator": cmd_propagator,
    "cktest": cmd_cktest,
    "lattice": cmd_lattice,
    "surface": cmd_surface,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
}


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _finite_or_none(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    return obj


def _emit_error(code, message, context):
    print(json.dumps({"code": code, "message": message, "context": context}, default=_jsonable), file=sys.stderr)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise CliError(EXIT_CONFIG, "invalid_arguments", "a command is required", commands=list(COMMANDS))
        cfg = resolve_config(args)
        result = HANDLERS[args.command](cfg)
    except CliError as exc:
        _emit_error(exc.code, exc.message, exc.context)
        return exc.exit_code
    except (NonConvergenceError, DivergenceError, DegenerateKernelError) as exc:
        _emit_error(exc.code, exc.message, exc.context)
        return EXIT_NUMERIC
    except (InvalidInputError, AliasingError, GridLeakError, ResolutionError, LagfreeError) as exc:
        _emit_error(exc.code, exc.message, exc.context)
        return EXIT_CONFIG
    result["config_sha256"] = config_hash(cfg)
    result = _finite_or_none(json.loads(json.dumps(result, default=_jsonable)))
    print(json.dumps(result, indent=2, allow_nan=False))
    if args.command == "verify" and not result["passed"]:
        return EXIT_ACCEPTANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
