"""Exception hierarchy shared by every henonlab module."""


class HenonLabError(Exception):
    """Base class for all library errors."""


class ZeroParameter(HenonLabError):
    """A Laurent polynomial with a pole was evaluated at t = 0."""


class DegenerateFamily(HenonLabError):
    """A family coefficient that must be nonzero vanishes identically."""


class ParameterTooLarge(HenonLabError):
    """The parameter t is outside the regime where the asymptotic bounds apply."""


class InsufficientPrecision(HenonLabError):
    """A truncated series cannot certify the order of a result."""


class TropicalTie(HenonLabError):
    """Several terms attain the minimal order in a tropical step.

    ``terms`` lists the labels of the minimizing terms and ``value`` is the
    common order they attain.
    """

    def __init__(self, terms, value):
        self.terms = tuple(terms)
        self.value = value
        super().__init__(f"tropical tie at order {value} between {', '.join(self.terms)}")


class InvalidRadius(HenonLabError):
    """The escape radius does not dominate the family coefficients."""


class BudgetExceeded(HenonLabError):
    """A symbolic computation would exceed its size budget."""


class StructureViolation(HenonLabError):
    """A homogeneous datum failed one of its structural invariants."""


class NonFiniteField(HenonLabError):
    """A grid field contains NaN or infinite values."""


class OrbitEscaped(HenonLabError):
    """An orbit left the bailout radius before the requested number of steps."""


class IterateOverflow(HenonLabError):
    """An iterate left the floating point range."""
