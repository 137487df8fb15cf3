"""Exception hierarchy shared by all cfree modules."""


class CfreeError(Exception):
    """Base class for errors raised by cfree."""


class DimensionError(CfreeError, ValueError):
    """Operands have incompatible dimensions."""


class DegenerateError(CfreeError, ValueError):
    """A geometric construction has no well-defined result (e.g. a zero normal)."""


class UnboundedPolytopeError(CfreeError):
    """A polytope expected to be bounded is not."""


class EmptyInteriorError(CfreeError):
    """A polytope has no interior point."""


class NotInteriorError(CfreeError, ValueError):
    """A point required to be strictly inside a polytope is not."""


class CollisionError(CfreeError, ValueError):
    """A configuration required to be collision-free is in collision (or vice versa)."""
