"""Classical trajectories from force fields.

Initial-value integration (RK4), two-point boundary values by secant
shooting on the initial momentum, and the closed-form damped free particle.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivergenceError, InvalidInputError, NonConvergenceError
from .geometry import ExtendedPhasePoint, ForceField

__all__ = [
    "SERIES_THRESHOLD",
    "Trajectory",
    "integrate_ivp",
    "solve_bvp",
    "damped_free_trajectory",
    "kappa_over_one_minus_exp",
    "trajectory_to_csv",
]

# |kappa * dt| below which exponential closed forms switch to their series
SERIES_THRESHOLD = 1e-8


def kappa_over_one_minus_exp(kappa: float, dt: float) -> float:
    """kappa / (1 - exp(-kappa dt)), continuous at kappa = 0 where it is 1/dt."""
    x = kappa * dt
    if abs(x) < SERIES_THRESHOLD:
        return (1.0 + 0.5 * x) / dt
    return kappa / -np.expm1(-x)


@dataclass(frozen=True, eq=False)
class Trajectory:
    t_samples: np.ndarray
    q_samples: np.ndarray
    p_samples: np.ndarray
    field_tag: str = "custom"

    def __post_init__(self):
        t, q, p = (np.asarray(a, dtype=float) for a in (self.t_samples, self.q_samples, self.p_samples))
        if not (t.ndim == q.ndim == p.ndim == 1 and t.size == q.size == p.size):
            raise InvalidInputError("trajectory arrays must be 1-d and of equal length")
        if t.size < 2:
            raise InvalidInputError("trajectory needs at least 2 samples", size=int(t.size))
        if not np.all(np.diff(t) > 0):
            raise InvalidInputError("trajectory times must be strictly increasing")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
            raise InvalidInputError("trajectory contains non-finite values")
        for name, arr in (("t_samples", t), ("q_samples", q), ("p_samples", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.t_samples.size

    @property
    def start(self) -> ExtendedPhasePoint:
        return ExtendedPhasePoint(self.q_samples[0], self.p_samples[0], self.t_samples[0])

    @property
    def end(self) -> ExtendedPhasePoint:
        return ExtendedPhasePoint(self.q_samples[-1], self.p_samples[-1], self.t_samples[-1])


def _rhs(field: ForceField, q, p, t):
    return field.velocity(q, p, t), field.force(q, p, t)


def integrate_ivp(field: ForceField, start: ExtendedPhasePoint, t1: float, steps: int) -> Trajectory:
    """Classical RK4 for q' = T(q) p, p' = F(q, p, t) on a uniform time grid.

    Raises
    ------
    DivergenceError
        If the state becomes non-finite; ``context['time']`` names the step.
    """
    steps = int(steps)
    if steps < 2:
        raise InvalidInputError("steps must be >= 2", steps=steps)
    if not t1 > start.t:
        raise InvalidInputError("t1 must exceed the start time", t0=start.t, t1=t1)
    ts = np.linspace(start.t, t1, steps + 1)
    qs = np.empty(steps + 1)
    ps = np.empty(steps + 1)
    q, p = float(start.q), float(start.p)
    qs[0], ps[0] = q, p
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(steps):
            t, h = ts[n], ts[n + 1] - ts[n]
            try:
                k1q, k1p = _rhs(field, q, p, t)
                k2q, k2p = _rhs(field, q + 0.5 * h * k1q, p + 0.5 * h * k1p, t + 0.5 * h)
                k3q, k3p = _rhs(field, q + 0.5 * h * k2q, p + 0.5 * h * k2p, t + 0.5 * h)
                k4q, k4p = _rhs(field, q + h * k3q, p + h * k3p, t + h)
                q = float(q + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q))
                p = float(p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p))
            except OverflowError:
                q = p = float("inf")
            if not (np.isfinite(q) and np.isfinite(p)):
                raise DivergenceError(f"integration diverged at t={ts[n + 1]!r}", time=float(ts[n + 1]))
            qs[n + 1], ps[n + 1] = q, p
    return Trajectory(ts, qs, ps, field_tag=field.name)


def solve_bvp(
    field: ForceField,
    q0: float,
    t0: float,
    q1: float,
    t1: float,
    steps: int = 1000,
    tol: float = 1e-10,
    max_iter: int = 100,
    p_guess: Optional[float] = None,
) -> Trajectory:
    """Trajectory from (q0, t0) to (q1, t1) by secant shooting on p(t0).

    The endpoint map p0 -> q(t1) is affine for linear fields, so the secant
    step lands on the solution after one update there.  Failure to reach
    ``|q(t1) - q1| < tol`` within ``max_iter`` iterations raises
    :class:`NonConvergenceError` with the last two momenta; that usually
    means the connecting trajectory is not unique or does not exist.
    """
    if not t1 > t0:
        raise InvalidInputError("t1 must exceed t0", t0=t0, t1=t1)

    def shoot(p0):
        traj = integrate_ivp(field, ExtendedPhasePoint(q0, p0, t0), t1, steps)
        return traj, traj.q_samples[-1] - q1

    if p_guess is None:
        metric = float(field.kinetic_metric(np.asarray(q0, dtype=float)))
        p_guess = (q1 - q0) / ((t1 - t0) * metric)
    pa = float(p_guess)
    pb = pa + max(1.0, abs(pa)) * 0.1
    traj_a, fa = shoot(pa)
    if abs(fa) < tol:
        return traj_a
    traj_b, fb = shoot(pb)
    for _ in range(max_iter):
        if abs(fb) < tol:
            return traj_b
        if fb == fa:
            break
        pa, pb = pb, pb - fb * (pb - pa) / (fb - fa)
        fa = fb
        traj_b, fb = shoot(pb)
    if abs(fb) < tol:
        return traj_b
    raise NonConvergenceError(
        "shooting did not converge; the connecting trajectory may not be unique",
        bracket=(pa, pb), mismatch=float(fb),
    )


def damped_free_trajectory(kappa: float, q0: float, t0: float, q1: float, t1: float, samples: int = 201) -> Trajectory:
    """Exact solution of q'' = -kappa q' through (q0, t0) and (q1, t1).

    ``q = q0 + (q1 - q0) (1 - e^{-kappa tau}) / (1 - e^{-kappa dt})`` with
    ``tau = t - t0``, evaluated through ``expm1``; ``p = q'``.
    """
    kappa = float(kappa)
    if not np.isfinite(kappa) or kappa < 0:
        raise InvalidInputError("kappa must be finite and >= 0", kappa=kappa)
    if not t1 > t0:
        raise InvalidInputError("t1 must exceed t0", t0=t0, t1=t1)
    samples = int(samples)
    if samples < 2:
        raise InvalidInputError("samples must be >= 2", samples=samples)
    dt = t1 - t0
    ts = np.linspace(t0, t1, samples)
    tau = np.linspace(0.0, dt, samples)
    dq = q1 - q0
    if abs(kappa * dt) < SERIES_THRESHOLD:
        frac = (tau / dt) * (1.0 + 0.5 * kappa * (dt - tau))
    else:
        frac = np.expm1(-kappa * tau) / np.expm1(-kappa * dt)
    qs = q0 + dq * frac
    qs[0], qs[-1] = q0, q1
    ps = dq * kappa_over_one_minus_exp(kappa, dt) * np.exp(-kappa * tau)
    return Trajectory(ts, qs, ps, field_tag=f"damped(kappa={kappa!r})")


def trajectory_to_csv(traj: Trajectory, header_comment: Optional[str] = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "q", "p"])
    for row in zip(traj.t_samples, traj.q_samples, traj.p_samples):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
