"""Exception hierarchy shared by all numerical modules."""


class LagfreeError(Exception):
    """Base class. ``context`` carries machine-readable details for the CLI."""

    code = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context


class InvalidInputError(LagfreeError, ValueError):
    code = "invalid_input"


class DivergenceError(LagfreeError, ArithmeticError):
    code = "divergence"


class NonConvergenceError(LagfreeError, ArithmeticError):
    code = "nonconvergence"


class DegenerateKernelError(LagfreeError, ArithmeticError):
    code = "degenerate_kernel"


class ResolutionError(LagfreeError, ValueError):
    """Grid too coarse for the requested state."""

    code = "resolution"


class AliasingError(LagfreeError, ValueError):
    """Kernel phase not resolved by the grid (Nyquist guard)."""

    code = "aliasing"


class GridLeakError(LagfreeError, ValueError):
    """Wavefunction support reaches the grid boundary."""

    code = "grid_leak"
