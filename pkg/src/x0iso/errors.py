"""Exception hierarchy shared across the package."""


class X0IsoError(Exception):
    """Base class for all domain errors."""


# --- series ---

class ZeroLeadingCoefficient(X0IsoError):
    """Attempted to invert a series that is zero on its known window."""


class PrecisionExceeded(X0IsoError):
    """A coefficient beyond the known truncation order was requested."""


# --- relations ---

class NoRelationFound(X0IsoError):
    """No algebraic relation exists up to the requested total degree."""


class AmbiguousRelation(X0IsoError):
    """Nullspace dimension > 1 at the minimal degree; order M is too small."""


class NoExpressionFound(X0IsoError):
    """Target could not be expressed in the generators within the bounds."""


class AmbiguousExpression(X0IsoError):
    """More than one inequivalent expression matches; insufficient data."""


class InconsistentPartial(X0IsoError):
    """A partially known series cannot be completed consistently."""


class InsufficientOrder(X0IsoError):
    """Input series are not known to high enough order for the solve."""


# --- moduli ---

class PointNotOnCurve(X0IsoError):
    """The supplied point does not satisfy the model's plane relation."""


class DenominatorVanishes(X0IsoError):
    """A rational map's denominator vanishes at the evaluation point."""


class SingularCurve(X0IsoError):
    """4A^3 + 27B^2 = 0; not an elliptic curve."""


class PointAtInfinity(X0IsoError):
    """Projective points at infinity are not evaluable in the affine chart."""


class NotTwists(X0IsoError):
    """The two curves have different j-invariants."""


class NotQuadraticTwist(X0IsoError):
    """Same j, but the curves are not related by a quadratic twist."""


class UnknownCurve(X0IsoError):
    """No catalog curve matches the computed j-invariant."""


class BudgetExceeded(X0IsoError):
    """A linear-algebra dimension exceeded the configured budget."""

    def __init__(self, message, dimension=None, budget=None):
        super().__init__(message)
        self.dimension = dimension
        self.budget = budget


# --- heegner ---

class UnsupportedLevel(X0IsoError):
    """No built-in Heegner point for this level."""


class PrecisionUnreachable(X0IsoError):
    """|q| too close to 1 for the configured term cap."""


class ReconstructionFailed(X0IsoError):
    """No continued-fraction convergent passes the acceptance gate."""


class ImaginaryResidueTooLarge(X0IsoError):
    """An invariant that must be real has a non-negligible imaginary part."""


# --- catalog ---

class UnknownLabel(X0IsoError):
    """Label not present in the snapshot (and online mode disabled)."""


class UnknownLevel(X0IsoError):
    """Level outside the sporadic set."""


class NetworkUnavailable(X0IsoError):
    """Online refresh requested but the endpoint is unreachable."""


class SchemaMismatch(X0IsoError):
    """Remote data did not match the expected snapshot schema."""
