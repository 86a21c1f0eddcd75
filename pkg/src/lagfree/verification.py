"""Acceptance harness: one check per claim, each with a pinned tolerance.

``run_acceptance()`` is what ``lagfree verify`` executes and what
``tests/test_acceptance.py`` asserts on.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .action import action_quadratic_form, closed_form_action, effective_action_quadrature
from .dynamics import damped_free_trajectory, solve_bvp
from .geometry import (
    ExtendedPhasePoint,
    ForceField,
    SurfaceGrid,
    closedness_defect,
    free_hamiltonian,
    harmonic_hamiltonian,
    integrate_omega,
    ruled_surface,
    stokes_residual,
)
from .lattice import (
    LatticeSpec,
    build_lattice,
    calibrated_amplitude,
    lattice_action_and_amplitude,
    stationary_lattice_path,
)
from .propagator import (
    PropagatorSpec,
    analytic_propagator,
    chapman_kolmogorov_residual,
    delta_limit_ladder,
    free_propagator,
    prefactor_from_normalization,
)
from .wavepacket import composition_defect, evolve, gaussian_packet, kernel_composition_defect, moments, norm

__all__ = ["CriterionResult", "CRITERIA", "run_acceptance", "random_sweep", "perturbed_surface", "bulged_surface"]

SEED = 20240611


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}"


def random_sweep(n: int = 200, seed: int = SEED):
    """(kappa, q0, t0, q1, t1) tuples: kappa in [0.01, 2], dt in [0.1, 5], endpoints in [-3, 3]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        kappa = rng.uniform(0.01, 2.0)
        dt = rng.uniform(0.1, 5.0)
        t0 = rng.uniform(-2.0, 2.0)
        q0, q1 = rng.uniform(-3.0, 3.0, 2)
        out.append((float(kappa), float(q0), float(t0), float(q1), float(t0 + dt)))
    return out


def perturbed_surface(kind: str, n: int, seed: int = 0, amplitude: float = 0.05,
                      q0: float = 1.0, q1: float = 0.5, t0: float = 0.0, t1: float = 1.0) -> SurfaceGrid:
    """Ruled surface from the classical path to a smoothly perturbed one.

    The perturbation is a short random sine series in q (vanishing at the
    ends) and a cosine series in p, scaled by ``amplitude``.
    """
    field_ = {"free": ForceField.free(), "harmonic": ForceField.harmonic()}[kind]
    cl = solve_bvp(field_, q0, t0, q1, t1, steps=n)
    rng = np.random.default_rng(seed)
    cq = rng.normal(size=4) * amplitude / np.arange(1, 5) ** 2
    cp = rng.normal(size=4) * amplitude / np.arange(1, 5)
    tau = (cl.t_samples - t0) / (t1 - t0)
    dq = sum(c * np.sin((m + 1) * np.pi * tau) for m, c in enumerate(cq))
    dp = sum(c * np.cos(m * np.pi * tau) for m, c in enumerate(cp))
    return ruled_surface(cl.t_samples, cl.q_samples, cl.p_samples, cl.q_samples + dq, cl.p_samples + dp,
                         np.linspace(0.0, 1.0, n + 1))


def bulged_surface(surface: SurfaceGrid, amplitude: float = 0.2) -> SurfaceGrid:
    """Same boundary as ``surface``, interior displaced in q and p."""
    t, s = surface.t_nodes, surface.s_nodes
    tau = ((t - t[0]) / (t[-1] - t[0]))[:, None]
    sig = ((s - s[0]) / (s[-1] - s[0]))[None, :]
    bump = np.sin(np.pi * tau) * np.sin(np.pi * sig)
    return SurfaceGrid(
        t, s,
        surface.q_values + amplitude * bump * (1 + 0.5 * np.cos(2 * np.pi * sig)),
        surface.p_values + amplitude * bump * np.cos(np.pi * tau),
    )


# --- criteria -------------------------------------------------------------


def _c1_action_identity():
    worst = 0.0
    for kappa, q0, t0, q1, t1 in random_sweep():
        exact = closed_form_action(kappa, q0, t0, q1, t1)
        quad = effective_action_quadrature(damped_free_trajectory(kappa, q0, t0, q1, t1, 2001), kappa)
        worst = max(worst, abs(exact - quad) / abs(exact))
    return worst < 1e-8, {"max_rel_err": worst, "tol": 1e-8, "samples": 200}


def _c2_frictionless_action():
    # The exact action differs from the free one by -kappa (q1^2 - q0^2) / 2,
    # so errors are measured against the endpoint scale (|q0| + |q1|)^2 / (2 dt)
    # rather than (q1 - q0)^2 / (2 dt), which vanishes for q0 = q1.
    kappa = 1e-10
    worst = abs(closed_form_action(kappa, 0.0, 0.0, 1.0, 1.0) - 0.5) / 0.5
    for k, q0, t0, q1, t1 in random_sweep(seed=SEED + 1):
        dt = t1 - t0
        free = (q1 - q0) ** 2 / (2 * dt)
        scale = (abs(q0) + abs(q1)) ** 2 / (2 * dt)
        worst = max(worst, abs(closed_form_action(kappa, q0, t0, q1, t1) - free) / scale)
    return worst < 1e-9, {"max_rel_err": worst, "tol": 1e-9}


def _c3_normalization():
    worst_mod, worst_fd = 0.0, 0.0
    h = 1e-3
    for kappa, q0, t0, q1, t1 in random_sweep():
        spec = PropagatorSpec(kappa, 1.0, t0, t1)
        form = action_quadratic_form(kappa, t0, t1)
        eq8 = math.sqrt(kappa / (4 * math.pi * spec.hbar * math.tanh(0.5 * kappa * (t1 - t0))))
        worst_mod = max(worst_mod, abs(prefactor_from_normalization(form, spec.hbar) - eq8) / eq8)
        worst_mod = max(worst_mod, abs(abs(analytic_propagator(spec, q0, q1)) - eq8) / eq8)

        def s(a, b):
            return closed_form_action(kappa, a, t0, b, t1)

        mixed = (s(q0 + h, q1 + h) - s(q0 + h, q1 - h) - s(q0 - h, q1 + h) + s(q0 - h, q1 - h)) / (4 * h * h)
        worst_fd = max(worst_fd, abs(mixed - form.beta) / abs(form.beta))
    ok = worst_mod < 1e-10 and worst_fd < 1e-6
    return ok, {"max_rel_modulus_err": worst_mod, "max_rel_fd_err": worst_fd, "tol_modulus": 1e-10, "tol_fd": 1e-6}


def _c4_free_limit():
    spec = PropagatorSpec(1e-8, 1.0, 0.0, 1.0)
    q0s = np.linspace(-2.5, 2.5, 11)
    q1s = np.linspace(2.0, -2.0, 11)
    worst = 0.0
    for q0, q1 in zip(q0s, q1s):
        ref = cmath.exp(1j * (q1 - q0) ** 2 / 2) / cmath.sqrt(2j * math.pi)
        worst = max(worst, abs(analytic_propagator(spec, q0, q1).value - ref))
    return worst < 1e-6, {"max_abs_err": worst, "tol": 1e-6, "pairs": 11}


def _c5_time_translation():
    worst = 0.0
    for kappa in (0.0, 0.3, 1.0, 2.0):
        base = PropagatorSpec(kappa, 1.0, 0.0, 1.3)
        for q0, q1 in ((0.0, 1.0), (-2.0, 1.5), (3.0, -3.0)):
            a = analytic_propagator(base, q0, q1).value
            for delta in (-5.0, 1.0, 17.3):
                b = analytic_propagator(base.shifted(delta), q0, q1).value
                worst = max(worst, abs(a - b))
    return worst < 1e-12, {"max_abs_diff": worst, "tol": 1e-12, "shifts": [-5, 1, 17.3]}


def _c6_non_markovian():
    free = chapman_kolmogorov_residual(PropagatorSpec(0.0, 1.0, 0.0, 1.0), 0.5)
    spec = PropagatorSpec(1.0, 1.0, 0.0, 1.0)
    damped = chapman_kolmogorov_residual(spec, 0.5)
    state = gaussian_packet(0.0, 0.0, 1.0, -24.0, 24.0, 6401)
    grid_route = composition_defect(state, spec, 0.5)
    kernel_route = kernel_composition_defect(state, spec, 0.5)
    ok = free < 1e-12 and damped > 1e-3 and abs(grid_route - kernel_route) < 1e-6
    return ok, {
        "ck_residual_kappa0": free, "ck_residual_kappa1": damped,
        "wavepacket_defect": grid_route, "kernel_contracted_defect": kernel_route,
        "route_gap": abs(grid_route - kernel_route),
    }


def _c7_saddle_point():
    kappa, q0, q1 = 1.0, 0.0, 1.0
    errs, worst_eq = [], 0.0
    for n in (32, 64, 128):
        spec = LatticeSpec(n, q0, 0.0, q1, 1.0, kappa)
        path = stationary_lattice_path(build_lattice(spec))
        eps = spec.eps
        res = (path[2:] - 2 * path[1:-1] + path[:-2]) + eps**2 * kappa * spec.p_cl_samples[1:-1]
        worst_eq = max(worst_eq, float(np.max(np.abs(res))) / (np.finfo(float).eps * max(1.0, np.max(np.abs(path)))))
        exact = damped_free_trajectory(kappa, q0, 0.0, q1, 1.0, n + 1).q_samples
        errs.append(float(np.max(np.abs(path - exact))))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = worst_eq < 64 and all(abs(r - 4) <= 0.2 for r in ratios)
    return ok, {"saddle_residual_in_ulps": worst_eq, "max_errors": errs, "ratios": ratios}


def _c8_lattice():
    spec = PropagatorSpec(1.0, 1.0, 0.0, 1.0)
    cal = calibrated_amplitude(build_lattice(LatticeSpec(128, 0.0, 0.0, 1.0, 1.0, 1.0)))
    ref = analytic_propagator(spec, 0.0, 1.0).value
    rel = abs(cal.value - ref) / abs(ref)
    worst_free = 0.0
    for n in (2, 3, 8, 32, 64, 128):
        _, amp = lattice_action_and_amplitude(build_lattice(LatticeSpec(n, -0.7, 0.0, 1.1, 1.0, 0.0)))
        worst_free = max(worst_free, abs(amp.value - complex(free_propagator(1.0, 1.0, -0.7, 1.1))))
    ok = rel < 1e-4 and worst_free < 1e-12
    return ok, {"calibrated_rel_err": rel, "free_lattice_abs_err": worst_free}


def _c9_geometry():
    n = 256
    res = {}
    for kind, ham in (("free", free_hamiltonian), ("harmonic", harmonic_hamiltonian)):
        field_ = ForceField.free() if kind == "free" else ForceField.harmonic()
        res[f"stokes_{kind}"] = max(stokes_residual(perturbed_surface(kind, n, seed), ham, field_) for seed in range(4))
        surf = perturbed_surface(kind, n, 0)
        res[f"pair_gap_{kind}"] = abs(integrate_omega(surf, field_) - integrate_omega(bulged_surface(surf), field_))
    defects = {}
    for kappa in (0.25, 0.5, 1.0):
        d = closedness_defect(ForceField.damped(kappa), ExtendedPhasePoint(0.4, -0.3, 0.2), 1e-2)
        defects[kappa] = abs(d + kappa) / kappa
    res["closedness_rel_err"] = max(defects.values())
    ok = (
        res["stokes_free"] < 1e-6 and res["stokes_harmonic"] < 1e-6
        and res["pair_gap_free"] < 1e-5 and res["pair_gap_harmonic"] < 1e-5
        and res["closedness_rel_err"] < 0.01
    )
    return ok, res


def _c10_delta_limit():
    dts = [1e-1, 1e-2, 1e-3, 1e-4]
    info, ok = {}, True
    for kappa in (0.0, 1.0):
        ladder = delta_limit_ladder(kappa, 1.0, dts, test_width=0.5)
        info[f"kappa={kappa}"] = ladder.tolist()
        ok &= bool(np.all(np.diff(ladder) < 0)) and ladder[-1] < 1e-3
    return ok, info


def _c11_wavepacket():
    state = gaussian_packet(0.0, 0.0, 1.0, -24.0, 24.0, 6401)
    worst_norm = max(abs(norm(evolve(state, PropagatorSpec(k, 1.0, 0.0, 1.0))) - 1.0) for k in (0.0, 0.5, 1.0))
    worst_width = 0.0
    for dt in (0.5, 1.0, 1.5, 2.0, 3.0):
        _, width = moments(evolve(state, PropagatorSpec(0.0, 1.0, 0.0, dt)))
        expected = math.sqrt(1.0 + (dt / 2.0) ** 2)
        worst_width = max(worst_width, abs(width - expected) / expected)
    ok = worst_norm < 1e-6 and worst_width < 1e-4
    return ok, {"max_norm_err": worst_norm, "max_width_rel_err": worst_width}


CRITERIA: list[tuple[int, str, Callable]] = [
    (1, "action identity: closed form vs Simpson quadrature (rel 1e-8)", _c1_action_identity),
    (2, "frictionless action limit (rel 1e-9)", _c2_frictionless_action),
    (3, "propagator normalization and mixed derivative (1e-10 / 1e-6)", _c3_normalization),
    (4, "free-particle limit of the amplitude (1e-6)", _c4_free_limit),
    (5, "time-translation invariance (1e-12)", _c5_time_translation),
    (6, "non-Markovian composition (CK residual, two routes)", _c6_non_markovian),
    (7, "saddle-point equation on the lattice, order eps^2", _c7_saddle_point),
    (8, "lattice amplitude: calibrated 1e-4, free exact 1e-12", _c8_lattice),
    (9, "Stokes residual, boundary dependence, closedness defect", _c9_geometry),
    (10, "delta limit ladder monotone, < 1e-3 at dt = 1e-4", _c10_delta_limit),
    (11, "wavepacket norm 1e-6 and free spreading 1e-4", _c11_wavepacket),
]


def run_criterion(number: int) -> CriterionResult:
    for num, name, fn in CRITERIA:
        if num == number:
            start = time.perf_counter()
            ok, details = fn()
            return CriterionResult(num, name, bool(ok), details, time.perf_counter() - start)
    raise KeyError(number)


def run_acceptance(numbers=None) -> list[CriterionResult]:
    wanted = [c[0] for c in CRITERIA] if numbers is None else list(numbers)
    return [run_criterion(n) for n in wanted]
