"""Exception types. Every error carries a short machine-readable ``code``."""


class TomoError(ValueError):
    """Base class for input and contract errors (CLI exit status 2)."""

    code = "invalid-input"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"code": self.code, "message": str(self)}
        if self.details:
            out["details"] = self.details
        return out


class InvalidInput(TomoError):
    code = "invalid-input"


class InvalidDimension(TomoError):
    code = "invalid-dimension"


class DimensionMismatch(TomoError):
    code = "dimension-mismatch"


class OutOfEllipsoid(TomoError):
    code = "out-of-ellipsoid"


class InvalidRadius(TomoError):
    code = "invalid-radius"


class InvalidOption(TomoError):
    code = "invalid-option"


class DegenerateEllipsoid(TomoError):
    code = "degenerate-ellipsoid"


class IncompleteDesign(TomoError):
    code = "incomplete-design"


class InstanceTooLarge(TomoError):
    code = "instance-too-large"


class InvalidWitnessInput(TomoError):
    code = "invalid-witness-input"


class PrecisionUnreachable(TomoError):
    code = "precision-unreachable"


class LemmaInapplicable(TomoError):
    """Raised when a path needs a strictly positive definite mean."""

    code = "lemma-inapplicable"


class InsufficientSamples(TomoError):
    code = "insufficient-samples"


class NormalizationUnresolvable(TomoError):
    """No PSD sample was drawn; ``lower_bound`` is a one-sided bound on C."""

    code = "normalization-unresolvable"

    def __init__(self, message="", lower_bound=None, **details):
        super().__init__(message, lower_bound=lower_bound, **details)
        self.lower_bound = lower_bound


class ResolutionFailure(TomoError):
    """The geometric decision came back UNDECIDED."""

    code = "resolution-failure"

    def __init__(self, message="", verdict=None, **details):
        super().__init__(message, **details)
        self.verdict = verdict


class SchemaViolation(TomoError):
    code = "schema-violation"


class NumericalFailure(RuntimeError):
    """Internal numeric breakdown (CLI exit status 3)."""

    code = "numeric-failure"

    def to_dict(self):
        return {"code": self.code, "message": str(self)}
