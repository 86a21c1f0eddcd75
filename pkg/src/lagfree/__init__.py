"""Lagrangian-free quantization of the damped free particle.

Extended phase space two-form and Stokes checks, classical boundary-value
trajectories, the dissipative action and propagator, a lattice cross-check
and wavepacket evolution.
"""

__version__ = "0.1.0"

from .action import ActionForm, action_quadratic_form, closed_form_action, effective_action_quadrature
from .dynamics import Trajectory, damped_free_trajectory, integrate_ivp, solve_bvp
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
    LoopPath,
    SurfaceGrid,
    closedness_defect,
    contour_integral,
    integrate_omega,
    omega_density,
    stokes_residual,
)
from .lattice import (
    LatticeSpec,
    LatticeSystem,
    build_lattice,
    calibrated_amplitude,
    lattice_action_and_amplitude,
    stationary_lattice_path,
)
from .propagator import (
    Amplitude,
    PropagatorSpec,
    analytic_propagator,
    chapman_kolmogorov_residual,
    delta_limit_residual,
    prefactor_from_normalization,
)
from .wavepacket import WaveGrid, composition_defect, evolve, gaussian_packet
