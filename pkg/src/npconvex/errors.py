"""Exception hierarchy shared by the whole package.

Two families matter operationally: ValidationFailure (bad inputs or
configuration, CLI exit code 2) and ComputationFailure (a well-posed
problem whose solve cannot proceed, CLI exit code 1).  Every error
carries a short machine-readable ``category`` used in CLI error JSON.
"""

from __future__ import annotations


class NPConvexError(Exception):
    category = "error"


class ValidationFailure(NPConvexError):
    category = "validation"


class ComputationFailure(NPConvexError):
    category = "runtime"


class DomainError(ValidationFailure):
    """An argument lies outside its documented domain."""

    category = "domain"


class EmptySample(ValidationFailure):
    category = "empty_sample"


class EmptyData(ValidationFailure):
    category = "empty_data"


class DimensionMismatch(ValidationFailure):
    category = "dimension_mismatch"


class BaseRangeError(ValidationFailure):
    """A base classifier produced a value outside [-1, 1]."""

    category = "base_range"


class UnknownScenario(ValidationFailure):
    category = "unknown_scenario"


class SchemaError(ValidationFailure):
    category = "schema"


class NonFiniteValue(ValidationFailure):
    category = "non_finite"


class UnknownLabel(ValidationFailure):
    category = "unknown_label"


class OneClassEmpty(ValidationFailure):
    """A pooled sample contains only one label."""

    category = "one_class_empty"


class SampleTooSmall(ValidationFailure):
    """The strengthened constraint level alpha - kappa/sqrt(n) is not positive."""

    category = "sample_too_small"


class Infeasible(ComputationFailure):
    """No point of the simplex satisfies the constraint."""

    category = "infeasible"


class HypothesisFailed(ComputationFailure):
    """A lemma check was invoked with its hypothesis violated."""

    category = "hypothesis_failed"
