"""Exception types shared across the package."""


class TopologyError(ValueError):
    """A lattice operation was asked for on an incompatible topology."""


class ConfigError(ValueError):
    """Invalid run configuration (bad key, bad value, missing field)."""


class StabilityError(RuntimeError):
    """The requested time step violates the integrator stability guard."""


class NumericalError(RuntimeError):
    """A numerical routine failed (non-finite amplitudes, solver breakdown)."""


class TrackingError(RuntimeError):
    """Eigenstate continuity tracking lost the followed state."""


class NearDegeneracyError(RuntimeError):
    """Spectral quantities are undefined because two levels (nearly) coincide."""


class PhaseUndefinedError(RuntimeError):
    """An output-port amplitude is too small to carry a meaningful phase."""
