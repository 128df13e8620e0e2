"""Exception hierarchy shared across the package."""


class RingmotError(Exception):
    """Base class for all package errors."""


class DomainError(RingmotError):
    """An argument lies outside the documented domain."""


class DegenerateQuantileError(RingmotError):
    """The CDF has a flat plateau at the requested mass level.

    Raised instead of silently picking a point inside the plateau.
    """


class ConstructionError(RingmotError):
    """A cost model or density could not be built from the given pieces."""


class ConcentrationError(RingmotError):
    """kappa(rho; r) >= 1/n, so the off-diagonal support argument fails."""


class ThresholdNotFoundError(RingmotError):
    """No truncation threshold on the scan grid satisfies the support conditions."""


class SizeGuardError(RingmotError):
    """A problem size exceeds the guard documented for the operation."""


class RegimeError(RingmotError):
    """The mollification width is too large for the plan's support separation."""


class StateError(RingmotError):
    """An operation was called on an object in the wrong state."""
