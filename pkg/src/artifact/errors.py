"""Exception types shared across modules."""
from __future__ import annotations


class DomainError(ValueError):
    """A point lies outside a surface's parameter domain or an argument is invalid."""


class SingularPointError(ArithmeticError):
    """The metric degenerates (EG - F^2 below the regularity threshold)."""

    def __init__(self, message, det=None):
        super().__init__(message)
        self.det = det


class IntegrationError(RuntimeError):
    """Geodesic integration stopped early; ``partial`` holds the curve so far."""

    def __init__(self, message, partial=None, status=None):
        super().__init__(message)
        self.partial = partial
        self.status = status


class ConvergenceError(RuntimeError):
    """An iterative method failed to converge; ``best`` holds the best iterate."""

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class QuadratureError(ArithmeticError):
    """The quadrature integrand is infeasible or the adaptive scheme failed."""


class TurningPointError(DomainError):
    """The first integral's denominator vanishes: the curve is tangent to a parallel."""
