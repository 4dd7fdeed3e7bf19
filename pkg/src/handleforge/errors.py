"""Exception hierarchy for handleforge.

All library errors derive from :class:`HandleForgeError` so callers can catch
one base class.  Errors that correspond to bad user input (wrong parameter
regime, malformed matrices, ...) derive from :class:`UsageError`; the CLI maps
those to exit code 2 and the service maps them to HTTP 400.
"""

from __future__ import annotations


class HandleForgeError(Exception):
    """Base class for all handleforge errors."""


class UsageError(HandleForgeError):
    """Invalid input or parameters on the wrong side of a validity regime."""


class DomainEmpty(UsageError):
    """A requested profile has an empty natural domain."""


class OutOfDomain(HandleForgeError):
    """Evaluation point outside a profile's domain."""


class OutOfRange(HandleForgeError):
    """Inversion target outside the profile's range."""


class NotMonotone(HandleForgeError):
    """Profile is not strictly monotone where monotonicity is required."""


class NotPositive(HandleForgeError):
    """Profile value is not strictly positive where positivity is required."""


class NotInvertible(HandleForgeError):
    """Local inverse does not exist (vanishing first derivative)."""


class IntegrationError(HandleForgeError):
    """No closed-form antiderivative, or a non-integrable singularity."""


class SingularPoint(HandleForgeError):
    """Zero complex gradient; the tangent frame is undefined."""


class NotOnHypersurface(HandleForgeError):
    """Point fails the hypersurface membership equation."""


class ShapeError(UsageError):
    """Dimension mismatch between matrices, points and split dimensions."""


class NotStronglyPsh(UsageError):
    """Quadratic model is not strongly plurisubharmonic (min eigenvalue <= 1)."""


class WrongRegime(UsageError):
    """Parameter on the wrong side of the regime boundary (e.g. lambda vs 1)."""


class EpsilonTooLarge(UsageError):
    """No admissible derived constants for the requested epsilon."""


class DegenerateConstants(UsageError):
    """Derived constants violate their ordering constraints."""


class RadiusTooLarge(UsageError):
    """Mollification windows would overlap or leave their segments."""


class VerificationFailed(HandleForgeError):
    """Grid certification found a violated inequality.

    Carries the location and the offending signed margin.
    """

    def __init__(self, message: str, location: float | None = None,
                 margin: float | None = None, report=None):
        super().__init__(message)
        self.location = location
        self.margin = margin
        self.report = report
