"""Exception types shared across the package."""


class AttsimError(Exception):
    """Base class for all errors raised by attsim."""


class InvalidInput(AttsimError):
    """An argument violates a documented precondition."""


class NumericalFailure(AttsimError):
    """An iterative or linear-algebra routine could not produce a result."""


class DegenerateQuaternion(AttsimError):
    """Quaternion norm too small to normalize."""


class GibbsSingularity(AttsimError):
    """Gibbs vector undefined: rotation is at (or numerically near) 180 degrees."""


class BehindImagePlane(AttsimError):
    """Projection requested for a direction with no positive boresight component."""


class DegenerateGeometry(AttsimError):
    """Vector pair too close to collinear to span a triad."""


class UnderdeterminedAttitude(AttsimError):
    """Observation set does not pin down a unique attitude."""


class ConfigError(AttsimError):
    """Simulation configuration file is missing, malformed, or inconsistent."""
