"""Transition amplitude of the damped free particle and its diagnostics.

The amplitude is ``C exp(i S / hbar)`` with ``S`` the closed-form action and

    C = sqrt(kappa / (4 pi i hbar tanh(kappa dt / 2)))

on the branch that carries the free-particle phase ``exp(-i pi/4)``.  The
modulus is fixed by probability conservation: integrating ``A* A`` over the
final point leaves a Fourier kernel with frequency ``beta`` (the mixed
coefficient of the action), which forces ``|C|^2 = |beta| / (2 pi hbar)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from .action import ActionForm, action_quadratic_form, closed_form_action
from .dynamics import SERIES_THRESHOLD
from .errors import DegenerateKernelError, InvalidInputError, NonConvergenceError

__all__ = [
    "Amplitude",
    "PropagatorSpec",
    "GaussianKernel",
    "analytic_propagator",
    "analytic_modulus",
    "prefactor_from_normalization",
    "propagator_kernel",
    "free_propagator",
    "smeared_delta",
    "delta_limit_residual",
    "delta_limit_ladder",
    "composed_kernel",
    "chapman_kolmogorov_residual",
    "DEFAULT_Q_GRID",
]

DEFAULT_Q_GRID = np.linspace(-3.0, 3.0, 41)
_FREE_PHASE = cmath.exp(-0.25j * math.pi)


@dataclass(frozen=True)
class Amplitude:
    value: complex
    hbar: float

    def __post_init__(self):
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise InvalidInputError("amplitude is not finite", value=str(v))
        object.__setattr__(self, "value", v)

    def __abs__(self):
        return abs(self.value)

    @property
    def phase(self) -> float:
        return cmath.phase(self.value)


@dataclass(frozen=True)
class PropagatorSpec:
    kappa: float = 0.0
    hbar: float = 1.0
    t0: float = 0.0
    t1: float = 1.0

    def __post_init__(self):
        for name in ("kappa", "hbar", "t0", "t1"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise InvalidInputError(f"{name} must be finite", **{name: val})
            object.__setattr__(self, name, val)
        if self.kappa < 0:
            raise InvalidInputError("kappa must be >= 0", kappa=self.kappa)
        if self.hbar <= 0:
            raise InvalidInputError("hbar must be > 0", hbar=self.hbar)
        if not self.t1 > self.t0:
            raise InvalidInputError("only forward evolution t1 > t0 is defined", t0=self.t0, t1=self.t1)

    @property
    def delta_t(self) -> float:
        return self.t1 - self.t0

    def between(self, t0: float, t1: float) -> "PropagatorSpec":
        return replace(self, t0=t0, t1=t1)

    def shifted(self, delta: float) -> "PropagatorSpec":
        return replace(self, t0=self.t0 + delta, t1=self.t1 + delta)


@dataclass(frozen=True)
class GaussianKernel:
    """``K(q1 | q0) = prefactor * exp(i/hbar (alpha q1^2 + beta q0 q1 + gamma q0^2))``."""

    prefactor: complex
    alpha: float
    beta: float
    gamma: float
    hbar: float

    def __call__(self, q0, q1):
        q0 = np.asarray(q0, dtype=float)
        q1 = np.asarray(q1, dtype=float)
        phase = (self.alpha * q1**2 + self.beta * q0 * q1 + self.gamma * q0**2) / self.hbar
        return self.prefactor * np.exp(1j * phase)

    def matrix(self, q0_nodes, q1_nodes):
        """Kernel values with rows indexed by q1 and columns by q0."""
        return self(np.asarray(q0_nodes)[None, :], np.asarray(q1_nodes)[:, None])

    def compose(self, earlier: "GaussianKernel") -> "GaussianKernel":
        """``int dq self(q1 | q) earlier(q | q0)`` in closed form."""
        if self.hbar != earlier.hbar:
            raise InvalidInputError("kernels carry different hbar", hbar=(self.hbar, earlier.hbar))
        hbar = self.hbar
        a = self.gamma + earlier.alpha
        if a == 0 or not math.isfinite(a):
            raise DegenerateKernelError("composed quadratic coefficient vanishes", coefficient=a)
        # int exp(i/hbar (a q^2 + b q)) dq = sqrt(pi hbar/|a|) e^{i sgn(a) pi/4} e^{-i b^2/(4 a hbar)}
        gauss = math.sqrt(math.pi * hbar / abs(a)) * cmath.exp(0.25j * math.pi * math.copysign(1.0, a))
        return GaussianKernel(
            prefactor=self.prefactor * earlier.prefactor * gauss,
            alpha=self.alpha - self.beta**2 / (4 * a),
            beta=-self.beta * earlier.beta / (2 * a),
            gamma=earlier.gamma - earlier.beta**2 / (4 * a),
            hbar=hbar,
        )


def analytic_modulus(spec: PropagatorSpec) -> float:
    """``sqrt(kappa / (4 pi hbar tanh(kappa dt / 2)))``, equal to 1/sqrt(2 pi hbar dt) at kappa = 0."""
    x = spec.kappa * spec.delta_t
    if abs(x) < SERIES_THRESHOLD:
        return 1.0 / math.sqrt(2 * math.pi * spec.hbar * spec.delta_t)
    return math.sqrt(spec.kappa / (4 * math.pi * spec.hbar * math.tanh(0.5 * x)))


def analytic_propagator(spec: PropagatorSpec, q0: float, q1: float) -> Amplitude:
    s_cl = closed_form_action(spec.kappa, q0, spec.t0, q1, spec.t1)
    value = analytic_modulus(spec) * _FREE_PHASE * cmath.exp(1j * s_cl / spec.hbar)
    return Amplitude(value, spec.hbar)


def prefactor_from_normalization(form: ActionForm, hbar: float) -> float:
    """Modulus ``sqrt(|beta| / (2 pi hbar))`` that turns int dq1 A* A into a unit delta.

    Raises
    ------
    DegenerateKernelError
        If ``form.beta == 0``: the overlap kernel then carries no frequency.
    """
    if hbar <= 0:
        raise InvalidInputError("hbar must be > 0", hbar=hbar)
    if form.beta == 0:
        raise DegenerateKernelError("beta = 0 gives no normalizable overlap kernel")
    return math.sqrt(abs(form.beta) / (2 * math.pi * hbar))


def propagator_kernel(spec: PropagatorSpec) -> GaussianKernel:
    """Vectorized form of :func:`analytic_propagator`."""
    form = action_quadratic_form(spec.kappa, spec.t0, spec.t1)
    return GaussianKernel(
        prefactor=analytic_modulus(spec) * _FREE_PHASE,
        alpha=form.alpha, beta=form.beta, gamma=form.gamma, hbar=spec.hbar,
    )


def free_propagator(hbar: float, dt: float, q0, q1):
    """Schrodinger free-particle kernel, unit mass."""
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    return np.exp(1j * (q1 - q0) ** 2 / (2 * hbar * dt)) / np.sqrt(2j * np.pi * hbar * dt)


# --- delta limit ----------------------------------------------------------


def _gaussian(q, center, width):
    return np.exp(-((q - center) ** 2) / (2 * width**2)) / math.sqrt(2 * math.pi * width**2)


def smeared_delta(spec: PropagatorSpec, test_width: float, q_center: float, q1_nodes, method: str = "analytic",
                  points_per_period: int = 20, max_points: int = 2_000_001):
    """``int dq0 A(q1 | q0) g(q0)`` for a normalized Gaussian g.

    ``method='analytic'`` reduces the Gaussian-times-chirp integral exactly;
    ``method='simpson'`` integrates on a q0 grid over +-12 widths that holds
    ``points_per_period`` samples per kernel phase period, and raises
    :class:`NonConvergenceError` if that would exceed ``max_points``.
    """
    if not test_width > 0:
        raise InvalidInputError("test_width must be > 0", test_width=test_width)
    kern = propagator_kernel(spec)
    q1 = np.asarray(q1_nodes, dtype=float)
    hb = spec.hbar
    if method == "analytic":
        a = 1.0 / (2 * test_width**2) - 1j * kern.gamma / hb
        b = q_center / test_width**2 + 1j * kern.beta * q1 / hb
        expo = 1j * kern.alpha * q1**2 / hb - q_center**2 / (2 * test_width**2) + b**2 / (4 * a)
        return kern.prefactor * np.sqrt(np.pi / a) * np.exp(expo) / math.sqrt(2 * math.pi * test_width**2)
    if method != "simpson":
        raise InvalidInputError("unknown method", method=method)
    lo, hi = q_center - 12 * test_width, q_center + 12 * test_width
    omega = (2 * abs(kern.gamma) * max(abs(lo), abs(hi)) + abs(kern.beta) * float(np.max(np.abs(q1)))) / hb
    period = 2 * math.pi / omega if omega > 0 else hi - lo
    n = int(math.ceil((hi - lo) / period * points_per_period)) + 1
    n = max(n, 801)
    if n > max_points:
        raise NonConvergenceError(
            "oscillatory quadrature needs more points than allowed",
            delta_t=spec.delta_t, required_points=n, max_points=max_points,
        )
    n += (n + 1) % 2
    q0 = np.linspace(lo, hi, n)
    g = _gaussian(q0, q_center, test_width)
    return np.array([simpson(kern(q0, x) * g, x=q0) for x in q1])


def delta_limit_residual(spec: PropagatorSpec, test_width: float, q_center: float,
                         q1_nodes=DEFAULT_Q_GRID, method: str = "analytic") -> float:
    """``max_q1 |int dq0 A(q1 | q0) g(q0) - g(q1)|`` over the propagation interval."""
    q1 = np.asarray(q1_nodes, dtype=float)
    got = smeared_delta(spec, test_width, q_center, q1, method=method)
    return float(np.max(np.abs(got - _gaussian(q1, q_center, test_width))))


def delta_limit_ladder(kappa: float, hbar: float, dts, test_width: float = 0.5, q_center: float = 0.0,
                       t0: float = 0.0, q1_nodes=DEFAULT_Q_GRID, method: str = "analytic") -> np.ndarray:
    return np.array([
        delta_limit_residual(PropagatorSpec(kappa, hbar, t0, t0 + dt), test_width, q_center, q1_nodes, method)
        for dt in dts
    ])


# --- Chapman-Kolmogorov ---------------------------------------------------


def composed_kernel(spec: PropagatorSpec, t_mid: float) -> GaussianKernel:
    """``int dq A(q1, t1 | q, t_mid) A(q, t_mid | q0, t0)`` as a Gaussian kernel."""
    if not spec.t0 < t_mid < spec.t1:
        raise InvalidInputError("t_mid must lie strictly between t0 and t1", t0=spec.t0, t_mid=t_mid, t1=spec.t1)
    first = propagator_kernel(spec.between(spec.t0, t_mid))
    second = propagator_kernel(spec.between(t_mid, spec.t1))
    return second.compose(first)


def chapman_kolmogorov_residual(spec: PropagatorSpec, t_mid: float, q_grid: Optional[np.ndarray] = None) -> float:
    """Relative sup-norm gap between the composed and the direct amplitude.

    Evaluated over all pairs ``(q0, q1)`` of ``q_grid`` (default [-3, 3],
    41 points).  Zero up to rounding for kappa = 0.
    """
    q = DEFAULT_Q_GRID if q_grid is None else np.asarray(q_grid, dtype=float)
    comp = composed_kernel(spec, t_mid).matrix(q, q)
    direct = propagator_kernel(spec).matrix(q, q)
    return float(np.max(np.abs(comp - direct) / np.abs(direct)))
