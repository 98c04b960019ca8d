"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A scene, grid, or experiment configuration violates a precondition."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DegenerateDecompositionError(DomainError):
    """Tangent-frame decomposition is singular (anti-parallel normals)."""


class SolverFailureError(RuntimeError):
    """An iterative solver failed to converge or a time stepper blew up."""
