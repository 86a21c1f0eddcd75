"""Time-sliced effective path integral of the damped free particle.

The discrete action on N slices of width eps is

    S_N = sum_k (q_{k+1} - q_k)^2 / (2 eps) - eps sum_k w_k kappa p_cl(t_k) q_k

with trapezoid weights w_k (1/2 at the clamped ends, whose terms go into the
constant).  Interior unknowns q_1..q_{N-1} see the symmetric tridiagonal
matrix with 2/eps on the diagonal and -1/eps off it.  The momentum p_cl is
the classical one, held fixed: the path integral is Gaussian with a linear
source.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .action import action_quadratic_form
from .dynamics import damped_free_trajectory
from .errors import InvalidInputError
from .propagator import Amplitude, prefactor_from_normalization

__all__ = [
    "LatticeSpec",
    "LatticeSystem",
    "build_lattice",
    "stationary_lattice_path",
    "discrete_action",
    "tridiagonal_log_det",
    "lattice_action_and_amplitude",
    "calibrated_amplitude",
    "normalization_ratio",
    "convergence_report",
    "richardson_limit",
    "report_to_csv",
]


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Slicing of the effective path integral.

    ``p_cl_samples`` holds the classical momentum at all N+1 nodes;
    it is taken from the exact damped trajectory when omitted.
    """

    n_slices: int
    q0: float
    t0: float
    q1: float
    t1: float
    kappa: float = 0.0
    hbar: float = 1.0
    p_cl_samples: Optional[np.ndarray] = None

    def __post_init__(self):
        n = int(self.n_slices)
        if n < 2:
            raise InvalidInputError("n_slices must be >= 2", n_slices=self.n_slices)
        object.__setattr__(self, "n_slices", n)
        if not self.t1 > self.t0:
            raise InvalidInputError("t1 must exceed t0", t0=self.t0, t1=self.t1)
        if self.kappa < 0 or self.hbar <= 0:
            raise InvalidInputError("need kappa >= 0 and hbar > 0", kappa=self.kappa, hbar=self.hbar)
        if self.p_cl_samples is None:
            traj = damped_free_trajectory(self.kappa, self.q0, self.t0, self.q1, self.t1, n + 1)
            p = traj.p_samples
        else:
            p = np.asarray(self.p_cl_samples, dtype=float)
            if p.shape != (n + 1,):
                raise InvalidInputError("p_cl_samples must have n_slices + 1 entries", shape=p.shape)
        object.__setattr__(self, "p_cl_samples", p)

    @property
    def eps(self) -> float:
        return (self.t1 - self.t0) / self.n_slices

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_slices + 1)


@dataclass(frozen=True, eq=False)
class LatticeSystem:
    """``S_N(x) = 1/2 x^T M x + linear . x + constant`` over interior nodes."""

    spec: LatticeSpec
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    linear: np.ndarray
    constant: float


def build_lattice(spec: LatticeSpec) -> LatticeSystem:
    n, eps = spec.n_slices, spec.eps
    m = n - 1
    diag = np.full(m, 2.0 / eps)
    off = np.full(m - 1, -1.0 / eps)
    source = spec.kappa * spec.p_cl_samples
    lin = -eps * source[1:-1]
    lin[0] -= spec.q0 / eps
    lin[-1] -= spec.q1 / eps
    const = (spec.q0**2 + spec.q1**2) / (2 * eps) - 0.5 * eps * (source[0] * spec.q0 + source[-1] * spec.q1)
    return LatticeSystem(spec, diag, off, lin, float(const))


def stationary_lattice_path(system: LatticeSystem) -> np.ndarray:
    """All N+1 node positions of the stationary path, endpoints included."""
    m = system.diagonal.size
    banded = np.zeros((3, m))
    banded[0, 1:] = system.off_diagonal
    banded[1] = system.diagonal
    banded[2, :-1] = system.off_diagonal
    interior = solve_banded((1, 1), banded, -system.linear)
    return np.concatenate([[system.spec.q0], interior, [system.spec.q1]])


def discrete_action(spec: LatticeSpec, path: np.ndarray) -> float:
    """S_N evaluated on a full node path (endpoints included)."""
    path = np.asarray(path, dtype=float)
    eps = spec.eps
    w = np.ones(spec.n_slices + 1)
    w[0] = w[-1] = 0.5
    kinetic = np.sum(np.diff(path) ** 2) / (2 * eps)
    return float(kinetic - eps * np.sum(w * spec.kappa * spec.p_cl_samples * path))


def tridiagonal_log_det(diagonal: Sequence[float], off_diagonal: Sequence[float]) -> tuple[float, int]:
    """``(log|det|, number of negative pivots)`` of a symmetric tridiagonal matrix.

    Uses the pivot recurrence ``r_k = d_k - e_{k-1}^2 / r_{k-1}``, whose
    product is the determinant; pivots are accumulated in log form.
    """
    d = np.asarray(diagonal, dtype=float)
    e = np.asarray(off_diagonal, dtype=float)
    log_det, negatives = 0.0, 0
    r = d[0]
    for k in range(d.size):
        if k:
            r = d[k] - e[k - 1] ** 2 / r
        if r == 0:
            raise InvalidInputError("singular tridiagonal matrix", pivot=k)
        log_det += math.log(abs(r))
        negatives += r < 0
    return log_det, negatives


def lattice_action_and_amplitude(system: LatticeSystem) -> tuple[float, Amplitude]:
    """Stationary action and the Gaussian lattice amplitude.

    Each slice contributes the measure factor ``(2 pi i hbar eps)^{-1/2}``;
    integrating the N-1 interior nodes gives ``(2 pi i hbar)^{(N-1)/2}
    det(M)^{-1/2}``, with an extra ``exp(-i pi/2)`` per negative eigenvalue.
    """
    spec = system.spec
    n, eps, hbar = spec.n_slices, spec.eps, spec.hbar
    path = stationary_lattice_path(system)
    s_n = discrete_action(spec, path)
    log_det, negatives = tridiagonal_log_det(system.diagonal, system.off_diagonal)
    log_mod = -0.5 * n * math.log(2 * math.pi * hbar * eps) + 0.5 * (n - 1) * math.log(2 * math.pi * hbar) - 0.5 * log_det
    positives = (n - 1) - negatives
    phase = -0.25 * math.pi * n + 0.25 * math.pi * (positives - negatives)
    return s_n, Amplitude(math.exp(log_mod) * cmath.exp(1j * (phase + s_n / hbar)), hbar)


def calibrated_amplitude(system: LatticeSystem) -> Amplitude:
    """Lattice amplitude with its modulus replaced by the probability-conserving one."""
    spec = system.spec
    _, raw = lattice_action_and_amplitude(system)
    target = prefactor_from_normalization(action_quadratic_form(spec.kappa, spec.t0, spec.t1), spec.hbar)
    return Amplitude(raw.value * (target / abs(raw.value)), spec.hbar)


def normalization_ratio(kappa: float, dt: float) -> float:
    """Calibrated over raw lattice modulus, ``sqrt(x / (2 tanh(x/2)))`` with x = kappa dt."""
    x = kappa * dt
    if abs(x) < 1e-8:
        return 1.0
    return math.sqrt(x / (2 * math.tanh(0.5 * x)))


def richardson_limit(ns: Sequence[int], values: Sequence[float], orders: Sequence[int] = (2, 4)) -> float:
    """Extrapolate ``values(N)`` to N -> inf assuming errors in eps^order terms."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.size != len(orders) + 1:
        raise InvalidInputError("need one more sample than correction orders", samples=int(ns.size))
    design = np.column_stack([np.ones_like(ns)] + [ns ** (-float(o)) for o in orders])
    return float(np.linalg.solve(design, values)[0])


def convergence_report(q0: float, t0: float, q1: float, t1: float, kappa: float, hbar: float = 1.0,
                       ns: Sequence[int] = (32, 64, 128), reference: Optional[float] = None) -> list[dict]:
    """Rows ``N, S_N, abs_err, ratio`` where ratio is the error ratio to the previous N."""
    rows, prev = [], None
    for n in ns:
        s_n, _ = lattice_action_and_amplitude(build_lattice(LatticeSpec(n, q0, t0, q1, t1, kappa, hbar)))
        err = abs(s_n - reference) if reference is not None else float("nan")
        ratio = prev / err if prev is not None and err > 0 else float("nan")
        rows.append({"N": int(n), "S_N": s_n, "abs_err": err, "ratio": ratio})
        prev = err
    return rows


def report_to_csv(rows: list[dict], header_comment: Optional[str] = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "S_N", "abs_err", "ratio"])
    for r in rows:
        w.writerow([r["N"], repr(r["S_N"]), repr(r["abs_err"]), repr(r["ratio"])])
    return buf.getvalue()
