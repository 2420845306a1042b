"""Exception hierarchy shared by every cfx module."""


class CfxError(Exception):
    """Base class for all errors raised by cfx."""


class ParameterError(CfxError, ValueError):
    """Invalid input parameter (odd q, q too small, bad map id, ...)."""


class PoleError(CfxError, ArithmeticError):
    """A Moebius map was evaluated at (or within tolerance of) its pole."""


class ZeroOrbit(PoleError):
    """The orbit reached 0 (or its conjugate) where the next step is undefined."""


class DiscontinuityPoint(CfxError, ArithmeticError):
    """The point sits within tolerance of a cylinder boundary."""


class Unbounded(PoleError):
    """A rotation sent the point to infinity."""


class FixedPoint(CfxError, ArithmeticError):
    """The point is a parabolic fixed point; acceleration never exits."""


class InfiniteArea(CfxError, ValueError):
    """The requested domain has infinite Lebesgue measure."""


class NoClosedForm(CfxError, ValueError):
    """No closed-form area is available for this domain."""


class UnsupportedQ(ParameterError):
    """The construction is only valid for larger q."""


class InsufficientData(CfxError, ValueError):
    """Not enough cloud data to fit a boundary."""


class OrbitTerminated(CfxError, RuntimeError):
    """An orbit died too early to produce a usable average."""


class NoReturn(CfxError, RuntimeError):
    """No return to the target region within the iteration budget."""


class EmptyFiber(CfxError, RuntimeError):
    """A constructed interval left the map's domain."""
