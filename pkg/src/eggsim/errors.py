"""Exception types shared across the simulator."""


class GeometryDomainError(ValueError):
    """Input outside the geometric domain (e.g. axial coordinate beyond the pole)."""


class GimbalLockError(ValueError):
    """Euler-rate inversion requested too close to the z-x-z chart singularity."""


class DegenerateInertiaError(ValueError):
    """Combined inertia tensor is singular; the explicit ODE cannot be formed."""


class MissingBindingError(KeyError):
    """A symbolic evaluation was missing the numeric value for an atom."""

    def __init__(self, token: str):
        super().__init__(token)
        self.token = token

    def __str__(self) -> str:
        return f"no numeric binding supplied for atom '{self.token}'"


class ConfigError(ValueError):
    """Scenario configuration is missing a field or violates an invariant."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NonFiniteStateError(RuntimeError):
    """Integration produced a non-finite state component."""
