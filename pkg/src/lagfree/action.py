"""Classical action of the damped free particle.

The action assigned to the connecting trajectory is the integral of
``1/2 p^2 - kappa p q`` (unit mass, ``p = q'``).  For linear friction it
has the closed form

    S = (kappa/4) (q1 - q0) [(q0 + 3 q1) E1 - (q1 + 3 q0) E0] / (E0 - E1),
    Ei = exp(-kappa ti),

which is a quadratic form in the endpoints that depends on the times only
through ``t1 - t0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .dynamics import SERIES_THRESHOLD, Trajectory, kappa_over_one_minus_exp
from .errors import InvalidInputError

__all__ = [
    "ActionForm",
    "effective_action_quadrature",
    "closed_form_action",
    "action_quadratic_form",
]


def _check_times(kappa, t0, t1):
    if not (np.isfinite(kappa) and kappa >= 0):
        raise InvalidInputError("kappa must be finite and >= 0", kappa=kappa)
    if not (np.isfinite(t0) and np.isfinite(t1)) or not t1 > t0:
        raise InvalidInputError("t1 must exceed t0", t0=t0, t1=t1)


@dataclass(frozen=True)
class ActionForm:
    """``S(q1, q0) = alpha q1^2 + beta q0 q1 + gamma q0^2``."""

    kappa: float
    delta_t: float
    alpha: float
    beta: float
    gamma: float

    def __call__(self, q0, q1):
        q0 = np.asarray(q0, dtype=float)
        q1 = np.asarray(q1, dtype=float)
        return self.alpha * q1**2 + self.beta * q0 * q1 + self.gamma * q0**2


def effective_action_quadrature(traj: Trajectory, kappa: float) -> float:
    """Composite Simpson value of the integral of 1/2 p^2 - kappa p q along ``traj``."""
    if len(traj) < 3:
        raise InvalidInputError("quadrature needs at least 3 samples", samples=len(traj))
    p, q = traj.p_samples, traj.q_samples
    return float(simpson(0.5 * p**2 - kappa * p * q, x=traj.t_samples))


def closed_form_action(kappa: float, q0: float, t0: float, q1: float, t1: float) -> float:
    kappa, q0, t0, q1, t1 = map(float, (kappa, q0, t0, q1, t1))
    _check_times(kappa, t0, t1)
    dt = t1 - t0
    x = kappa * dt
    if abs(x) < SERIES_THRESHOLD:
        return (q1 - q0) ** 2 / (2 * dt) - 0.5 * kappa * (q1**2 - q0**2)
    # numerator and denominator divided by E0, so only exp(-kappa dt) enters
    r = np.exp(-x)
    return float(0.25 * kappa * (q1 - q0) * ((q0 + 3 * q1) * r - (q1 + 3 * q0)) / -np.expm1(-x))


def action_quadratic_form(kappa: float, t0: float, t1: float) -> ActionForm:
    """Expanded coefficients of :func:`closed_form_action`.

    With ``c = kappa / (1 - exp(-kappa dt))``::

        alpha = c/2 - 3 kappa/4,  beta = -c + kappa/2,  gamma = c/2 + kappa/4

    so ``|beta| = (kappa/2) coth(kappa dt / 2)``.
    """
    kappa, t0, t1 = float(kappa), float(t0), float(t1)
    _check_times(kappa, t0, t1)
    dt = t1 - t0
    c = kappa_over_one_minus_exp(kappa, dt)
    return ActionForm(
        kappa=kappa,
        delta_t=dt,
        alpha=0.5 * c - 0.75 * kappa,
        beta=-c + 0.5 * kappa,
        gamma=0.5 * c + 0.25 * kappa,
    )
