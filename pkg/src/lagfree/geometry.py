"""Extended phase space geometry for one-dimensional systems.

The two-form evaluated here is

    Omega = dp ^ dq - (T p dp - F dq) ^ dt

which reduces to d(p dq - H dt) whenever the force is generated by a
potential.  Surfaces are sampled on tensor grids in a parameter square and
integrated cell by cell with the midpoint rule; loops are integrated with the
trapezoid rule.  Only n = 1 is supported.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "ExtendedPhasePoint",
    "ForceField",
    "SurfaceGrid",
    "LoopPath",
    "omega_density",
    "integrate_omega",
    "contour_integral",
    "line_integral",
    "boundary_loop",
    "stokes_residual",
    "closedness_defect",
    "ruled_surface",
    "free_hamiltonian",
    "harmonic_hamiltonian",
    "surface_to_csv",
    "surface_from_csv",
]

Hamiltonian = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ExtendedPhasePoint:
    q: float
    p: float
    t: float

    def __post_init__(self):
        if not all(np.isfinite((self.q, self.p, self.t))):
            raise InvalidInputError("phase point must be finite", q=self.q, p=self.p, t=self.t)


def _unit_metric(q):
    return np.ones_like(np.asarray(q, dtype=float))


@dataclass(frozen=True)
class ForceField:
    """Kinetic metric plus force: the classical data that replaces a Lagrangian.

    ``kinetic_metric(q)`` is the inverse mass T in ``T = 1/2 T p^2`` and
    ``force(q, p, t)`` the generalized force F.  ``velocity`` overrides the
    default ``T(q) p`` for fields built from a Hamiltonian numerically.
    """

    kinetic_metric: Callable = _unit_metric
    force: Callable = lambda q, p, t: np.zeros_like(np.asarray(p, dtype=float))
    friction_kappa: Optional[float] = None
    name: str = "custom"
    velocity_fn: Optional[Callable] = field(default=None, repr=False)

    @classmethod
    def free(cls) -> "ForceField":
        return cls(name="free")

    @classmethod
    def damped(cls, kappa: float) -> "ForceField":
        kappa = float(kappa)
        if not np.isfinite(kappa) or kappa < 0:
            raise InvalidInputError("friction must be finite and >= 0", kappa=kappa)
        return cls(
            force=lambda q, p, t: -kappa * np.asarray(p, dtype=float),
            friction_kappa=kappa,
            name=f"damped(kappa={kappa!r})",
        )

    @classmethod
    def harmonic(cls, omega: float = 1.0) -> "ForceField":
        w2 = float(omega) ** 2
        return cls(
            force=lambda q, p, t: -w2 * np.asarray(q, dtype=float) + 0.0 * np.asarray(p, dtype=float),
            name=f"harmonic(omega={float(omega)!r})",
        )

    @classmethod
    def from_hamiltonian(cls, hamiltonian: Hamiltonian, step: float = 1e-5) -> "ForceField":
        """Potential field with F = -dH/dq and velocity dH/dp by central differences."""

        def _dq(q, p, t):
            q = np.asarray(q, dtype=float)
            h = step * (1.0 + np.abs(q))
            return (hamiltonian(q + h, p, t) - hamiltonian(q - h, p, t)) / (2 * h)

        def _dp(q, p, t):
            p = np.asarray(p, dtype=float)
            h = step * (1.0 + np.abs(p))
            return (hamiltonian(q, p + h, t) - hamiltonian(q, p - h, t)) / (2 * h)

        def _metric(q):
            # second derivative in p at p = 0: exact for quadratic kinetic terms
            q = np.asarray(q, dtype=float)
            h = 1e-3
            z = np.zeros_like(q)
            return (hamiltonian(q, z + h, z) - 2 * hamiltonian(q, z, z) + hamiltonian(q, z - h, z)) / h**2

        return cls(
            kinetic_metric=_metric,
            force=lambda q, p, t: -_dq(q, p, t),
            name="from_hamiltonian",
            velocity_fn=_dp,
        )

    def velocity(self, q, p, t):
        if self.velocity_fn is not None:
            return self.velocity_fn(q, p, t)
        return self.kinetic_metric(q) * p


def free_hamiltonian(q, p, t):
    return 0.5 * np.asarray(p, dtype=float) ** 2


def harmonic_hamiltonian(q, p, t):
    return 0.5 * np.asarray(p, dtype=float) ** 2 + 0.5 * np.asarray(q, dtype=float) ** 2


def _strictly_increasing(x, name):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidInputError(f"{name} needs at least 2 nodes", size=int(x.size))
    if not np.all(np.diff(x) > 0):
        raise InvalidInputError(f"{name} must be strictly increasing")
    return x


@dataclass(frozen=True, eq=False)
class SurfaceGrid:
    """Sampled map (t, s) -> (q(t, s), p(t, s), t).

    Arrays are indexed ``[i, j]`` with ``i`` along ``t_nodes`` and ``j`` along
    ``s_nodes``.  Column 0 is the classical curve, column K the sampled curve;
    rows 0 and M are the momentum-only closing curves and must keep q fixed.
    """

    t_nodes: np.ndarray
    s_nodes: np.ndarray
    q_values: np.ndarray
    p_values: np.ndarray

    def __post_init__(self):
        t = _strictly_increasing(self.t_nodes, "t_nodes")
        s = _strictly_increasing(self.s_nodes, "s_nodes")
        q = np.asarray(self.q_values, dtype=float)
        p = np.asarray(self.p_values, dtype=float)
        shape = (t.size, s.size)
        if q.shape != shape or p.shape != shape:
            raise InvalidInputError(
                "q_values/p_values must have shape (len(t_nodes), len(s_nodes))",
                expected=shape, q_shape=q.shape, p_shape=p.shape,
            )
        for row in (0, -1):
            edge = q[row]
            if np.all(np.isfinite(edge)):
                tol = 1e-12 * max(1.0, float(np.max(np.abs(edge))))
                if np.max(np.abs(edge - edge[0])) > tol:
                    raise InvalidInputError("boundary rows must keep q constant along s", row=row)
        for name, arr in (("t_nodes", t), ("s_nodes", s), ("q_values", q), ("p_values", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self):
        return self.q_values.shape

    @property
    def time_values(self) -> np.ndarray:
        return np.broadcast_to(self.t_nodes[:, None], self.shape)

    def reversed_s(self) -> "SurfaceGrid":
        return SurfaceGrid(
            t_nodes=self.t_nodes,
            s_nodes=self.s_nodes[0] + self.s_nodes[-1] - self.s_nodes[::-1],
            q_values=self.q_values[:, ::-1],
            p_values=self.p_values[:, ::-1],
        )

    def split_s(self, j: int) -> tuple["SurfaceGrid", "SurfaceGrid"]:
        """Two sub-surfaces sharing column ``j``."""
        if not 0 < j < self.s_nodes.size - 1:
            raise InvalidInputError("split column must be interior", j=j)
        lo = SurfaceGrid(self.t_nodes, self.s_nodes[: j + 1], self.q_values[:, : j + 1], self.p_values[:, : j + 1])
        hi = SurfaceGrid(self.t_nodes, self.s_nodes[j:], self.q_values[:, j:], self.p_values[:, j:])
        return lo, hi


@dataclass(frozen=True, eq=False)
class LoopPath:
    """Closed polyline in extended phase space.

    ``orientation = -1`` means the points are traversed in reverse.
    """

    q: np.ndarray
    p: np.ndarray
    t: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        q, p, t = (np.asarray(a, dtype=float) for a in (self.q, self.p, self.t))
        if not (q.shape == p.shape == t.shape) or q.ndim != 1 or q.size < 2:
            raise InvalidInputError("loop needs equal-length 1-d coordinate arrays")
        if self.orientation not in (1, -1):
            raise InvalidInputError("orientation must be +1 or -1", orientation=self.orientation)
        first = np.array([q[0], p[0], t[0]])
        last = np.array([q[-1], p[-1], t[-1]])
        if not np.allclose(first, last, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(first))))):
            raise InvalidInputError("loop is not closed: first point differs from last")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", t)

    @classmethod
    def from_points(cls, points: Sequence[ExtendedPhasePoint], orientation: int = 1) -> "LoopPath":
        return cls(
            q=np.array([pt.q for pt in points]),
            p=np.array([pt.p for pt in points]),
            t=np.array([pt.t for pt in points]),
            orientation=orientation,
        )

    @property
    def points(self) -> list[ExtendedPhasePoint]:
        return [ExtendedPhasePoint(*xyz) for xyz in zip(self.q, self.p, self.t)]

    def reversed(self) -> "LoopPath":
        return LoopPath(self.q, self.p, self.t, orientation=-self.orientation)


# --- two-form on parametrized patches -------------------------------------


def _cell_densities(q, p, t, du, dv, field_: ForceField):
    """Pullback of Omega at cell midpoints of a (u, v) patch.

    ``q, p, t`` are node arrays of shape (nu, nv); ``du, dv`` the spacings
    (shape (nu-1,) and (nv-1,)).  Returns densities of shape (nu-1, nv-1)
    with respect to du ^ dv.
    """

    def d_u(x):
        return 0.5 * ((x[1:, :-1] - x[:-1, :-1]) + (x[1:, 1:] - x[:-1, 1:])) / du[:, None]

    def d_v(x):
        return 0.5 * ((x[:-1, 1:] - x[:-1, :-1]) + (x[1:, 1:] - x[1:, :-1])) / dv[None, :]

    def mid(x):
        return 0.25 * (x[:-1, :-1] + x[1:, :-1] + x[:-1, 1:] + x[1:, 1:])

    qm, pm, tm = mid(q), mid(p), mid(t)
    q_u, q_v, p_u, p_v, t_u, t_v = d_u(q), d_v(q), d_u(p), d_v(p), d_u(t), d_v(t)
    vel = field_.velocity(qm, pm, tm)
    force = field_.force(qm, pm, tm)
    # Omega = 1 dp^dq + (-T p) dp^dt + F dq^dt
    return (
        (p_u * q_v - p_v * q_u)
        - vel * (p_u * t_v - p_v * t_u)
        + force * (q_u * t_v - q_v * t_u)
    )


def _patch_integral(q, p, t, u, v, field_):
    du, dv = np.diff(u), np.diff(v)
    dens = _cell_densities(q, p, t, du, dv, field_)
    return float(np.sum(dens * du[:, None] * dv[None, :]))


def _require_finite(surface: SurfaceGrid):
    if not (np.all(np.isfinite(surface.q_values)) and np.all(np.isfinite(surface.p_values))):
        raise InvalidInputError("surface contains non-finite values")


def omega_density(surface: SurfaceGrid, field: ForceField, cell: tuple[int, int]) -> float:
    """Omega(d/dt, d/ds) at the midpoint of cell ``(i, j)``.

    The cell spans nodes ``i, i+1`` in t and ``j, j+1`` in s.  The value is
    ``p_t q_s - p_s q_t + T p p_s - F q_s`` with centred differences.
    """
    _require_finite(surface)
    i, j = cell
    m, k = surface.shape
    if not (0 <= i < m - 1 and 0 <= j < k - 1):
        raise InvalidInputError("cell index outside the grid", cell=(i, j), cells=(m - 1, k - 1))
    sl = (slice(i, i + 2), slice(j, j + 2))
    dens = _cell_densities(
        surface.q_values[sl], surface.p_values[sl], surface.time_values[sl],
        np.diff(surface.t_nodes[i : i + 2]), np.diff(surface.s_nodes[j : j + 2]),
        field,
    )
    return float(dens[0, 0])


def integrate_omega(surface: SurfaceGrid, field: ForceField) -> float:
    """Midpoint-rule value of the surface integral of Omega over ``surface``."""
    _require_finite(surface)
    return _patch_integral(
        surface.q_values, surface.p_values, surface.time_values,
        surface.t_nodes, surface.s_nodes, field,
    )


# --- loops ----------------------------------------------------------------


def line_integral(q, p, t, hamiltonian: Hamiltonian) -> float:
    """Trapezoid value of the integral of p dq - H dt along a polyline."""
    q, p, t = (np.asarray(a, dtype=float) for a in (q, p, t))
    h = np.broadcast_to(np.asarray(hamiltonian(q, p, t), dtype=float), q.shape)
    return float(np.sum(0.5 * (p[1:] + p[:-1]) * np.diff(q) - 0.5 * (h[1:] + h[:-1]) * np.diff(t)))


def contour_integral(loop: LoopPath, hamiltonian: Hamiltonian) -> float:
    value = line_integral(loop.q, loop.p, loop.t, hamiltonian)
    return loop.orientation * value


def boundary_loop(surface: SurfaceGrid) -> LoopPath:
    """Induced boundary of the (t, s) square, counter-clockwise.

    Traversal: classical column forward in t, final row up in s, sampled
    column backward in t, initial row down in s.  With this orientation
    Stokes' theorem reads ``contour_integral == integrate_omega``.
    """
    q, p = surface.q_values, surface.p_values
    t = surface.time_values
    idx_i = np.concatenate([
        np.arange(surface.shape[0]),
        np.full(surface.shape[1] - 1, surface.shape[0] - 1),
        np.arange(surface.shape[0] - 2, -1, -1),
        np.zeros(surface.shape[1] - 1, dtype=int),
    ])
    idx_j = np.concatenate([
        np.zeros(surface.shape[0], dtype=int),
        np.arange(1, surface.shape[1]),
        np.full(surface.shape[0] - 1, surface.shape[1] - 1),
        np.arange(surface.shape[1] - 2, -1, -1),
    ])
    return LoopPath(q[idx_i, idx_j], p[idx_i, idx_j], t[idx_i, idx_j])


def stokes_residual(surface: SurfaceGrid, hamiltonian: Hamiltonian, field: Optional[ForceField] = None) -> float:
    """|surface integral - boundary contour integral| for a potential system.

    ``field`` defaults to the one generated by ``hamiltonian``.
    """
    if field is None:
        field = ForceField.from_hamiltonian(hamiltonian)
    return abs(integrate_omega(surface, field) - contour_integral(boundary_loop(surface), hamiltonian))


def closedness_defect(field: ForceField, point: ExtendedPhasePoint, scale: float) -> float:
    """Estimate of dOmega(d/dp, d/dq, d/dt) at ``point``.

    Sums the outward flux of Omega through the six faces of a coordinate
    cube of edge ``scale`` (each face integrated with the same midpoint
    machinery as surfaces) and divides by the cube volume.  Returns about
    ``-kappa`` for linear friction and about 0 for potential fields.
    """
    scale = float(scale)
    if not np.isfinite(scale) or scale <= 0:
        raise InvalidInputError("scale must be > 0", scale=scale)
    h = 0.5 * scale
    c = {"q": point.q, "p": point.p, "t": point.t}
    edge = np.array([-h, h])

    def face(normal, sign, first, second):
        # (first, second) ordered so that (normal, first, second) is positive
        # for sign=+1; the opposite face flips the pair.
        if sign < 0:
            first, second = second, first
        a, b = np.meshgrid(c[first] + edge, c[second] + edge, indexing="ij")
        coords = {first: a, second: b, normal: np.full_like(a, c[normal] + sign * h)}
        u, v = c[first] + edge, c[second] + edge
        return _patch_integral(coords["q"], coords["p"], coords["t"], u, v, field)

    flux = (
        face("p", +1, "q", "t") + face("p", -1, "q", "t")
        + face("q", +1, "t", "p") + face("q", -1, "t", "p")
        + face("t", +1, "p", "q") + face("t", -1, "p", "q")
    )
    return flux / scale**3


# --- construction helpers -------------------------------------------------


def ruled_surface(t_nodes, q_classical, p_classical, q_sampled, p_sampled, s_nodes) -> SurfaceGrid:
    """Surface interpolating linearly in s from the classical to the sampled curve.

    The curves must share their end positions; the closing rows are then
    momentum-only segments, linear in p.
    """
    s = _strictly_increasing(s_nodes, "s_nodes")
    w = ((s - s[0]) / (s[-1] - s[0]))[None, :]
    qc, pc, qs, ps = (np.asarray(a, dtype=float)[:, None] for a in (q_classical, p_classical, q_sampled, p_sampled))
    return SurfaceGrid(
        t_nodes=np.asarray(t_nodes, dtype=float),
        s_nodes=s,
        q_values=(1 - w) * qc + w * qs,
        p_values=(1 - w) * pc + w * ps,
    )


# --- CSV ------------------------------------------------------------------


def surface_to_csv(surface: SurfaceGrid, header_comment: Optional[str] = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "s", "q", "p"])
    for i, t in enumerate(surface.t_nodes):
        for j, s in enumerate(surface.s_nodes):
            writer.writerow([repr(float(t)), repr(float(s)), repr(float(surface.q_values[i, j])), repr(float(surface.p_values[i, j]))])
    return buf.getvalue()


def surface_from_csv(text: str) -> SurfaceGrid:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames != ["t", "s", "q", "p"]:
        raise InvalidInputError("surface CSV header must be t,s,q,p", header=reader.fieldnames)
    rows = np.array([[float(r["t"]), float(r["s"]), float(r["q"]), float(r["p"])] for r in reader])
    if rows.size == 0:
        raise InvalidInputError("surface CSV has no rows")
    t_nodes = np.unique(rows[:, 0])
    s_nodes = np.unique(rows[:, 1])
    m, k = t_nodes.size, s_nodes.size
    if rows.shape[0] != m * k:
        raise InvalidInputError("surface CSV is not a full tensor grid", rows=rows.shape[0], expected=m * k)
    grid = rows.reshape(m, k, 4)
    if not (np.all(grid[:, :, 0] == t_nodes[:, None]) and np.all(grid[:, :, 1] == s_nodes[None, :])):
        raise InvalidInputError("surface CSV rows must be row-major over (t, s)")
    return SurfaceGrid(t_nodes, s_nodes, grid[:, :, 2], grid[:, :, 3])
