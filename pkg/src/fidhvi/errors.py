"""Exception types shared across the package."""


class ConfigError(Exception):
    """Raised for malformed run configurations (bad preset name, grid, tolerances)."""


class ConstantViolation(Exception):
    """A declared structural constant fails its required inequality.

    Carries the two sides of the violated inequality so callers can report
    exactly what was checked.
    """

    def __init__(self, message: str, lhs: float | None = None, rhs: float | None = None):
        super().__init__(message)
        self.lhs = lhs
        self.rhs = rhs


class NonConvergence(Exception):
    """An iterative solve exhausted its budget or diverged.

    ``best`` holds the last iterate, ``residual`` its residual, so callers can
    inspect how far the solve got.
    """

    def __init__(self, message: str, best=None, residual: float | None = None):
        super().__init__(message)
        self.best = best
        self.residual = residual
