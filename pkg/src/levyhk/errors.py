"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`LevyError`.
The two intermediate classes decide how the command line maps failures to
exit codes: :class:`InvalidInput` becomes exit code 2 and
:class:`NumericalFailure` becomes exit code 3.
"""


class LevyError(Exception):
    """Base class for library errors."""


class InvalidInput(LevyError, ValueError):
    """The caller supplied something outside the documented domain."""


class NumericalFailure(LevyError, ArithmeticError):
    """A numerical routine could not reach its target accuracy."""


# measure
class NonSymmetricMatrix(InvalidInput):
    pass


class NegativeDefinite(InvalidInput):
    pass


class NonIntegrableMeasure(InvalidInput):
    pass


class CompoundPoisson(InvalidInput):
    pass


class NegativeMass(NumericalFailure):
    """A difference of measures went negative on a queried set."""


class NonIntegrableAnnulus(NumericalFailure):
    pass


class NonUnitDirection(InvalidInput):
    pass


class MinorizationViolated(InvalidInput):
    pass


class BadParameter(InvalidInput):
    pass


class UnsupportedOperation(InvalidInput):
    """The requested operation is not available for this measure node."""


# exponent / concentration
class QuadratureFailure(NumericalFailure):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class BracketFailure(NumericalFailure):
    pass


class ScalingWindowInvalid(InvalidInput):
    pass


# conditions
class NoScaling(NumericalFailure):
    pass


class InconsistentVerdicts(NumericalFailure):
    pass


# density
class NotIntegrable(NumericalFailure):
    pass


class AliasingDetected(NumericalFailure):
    pass


class VariantPreconditionFailed(InvalidInput):
    pass


# decompose_diag
class MembershipViolated(InvalidInput):
    pass


# simulate
class CutoffTooCoarse(InvalidInput):
    pass
