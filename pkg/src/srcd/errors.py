"""Exception hierarchy.

Three tiers matter to the CLI: input problems (exit code 2), verification
failures (exit code 1) and internal-consistency violations (exit code 3).
The latter signal a bug in this package, never bad user data.
"""


class SrcdError(Exception):
    """Base class for all package errors."""


class InputError(SrcdError):
    """Bad user-supplied data (CLI exit code 2)."""


class InternalConsistencyError(SrcdError):
    """A cross-check that must hold by construction failed (CLI exit code 3)."""


# -- structure / input validation ------------------------------------------

class DimensionMismatch(InputError):
    pass


class UnknownExample(InputError):
    pass


class BadParam(InputError):
    pass


class NotPositiveDefinite(InputError):
    pass


class ValidationError(InputError):
    """A structure failed validate_structure; carries the failing check name."""


class ParseError(InputError):
    """Malformed JSON; message is position-annotated."""


class SchemaError(InputError):
    """Well-formed JSON that does not match the structure-file schema."""


# -- preconditions of geometric operations ---------------------------------

class NotOrthonormalFrame(InputError):
    pass


class NotStepTwo(InputError):
    pass


class ZeroCurvature(InputError):
    """Horizontal bundle is integrable; vertical normalization is meaningless."""


class NotNormalized(InputError):
    pass


class UnboundedConstant(InputError):
    """A bound constant is a sentinel; the requested assembly is undefined."""


class NotVertical(InputError):
    pass


class BadDimension(InputError):
    pass


class ConstraintViolated(InputError):
    """A 2-jet does not satisfy the Hessian commutation constraint."""


class RequiresParallelVerticalMetric(InputError):
    pass


class NonPositiveRho20(InputError):
    pass


class RequiresParallelMetric(InputError):
    pass


class NonPositiveKappa(InputError):
    pass


class UnsupportedAlgebra(InputError):
    pass


class NoRealization(InputError):
    pass


class InsufficientPaths(InputError):
    """Monte Carlo error bars too large to resolve the quadratic residual."""


# -- hard internal checks ----------------------------------------------------

class TorsionMismatch(InternalConsistencyError):
    """Torsion of the adapted connection differs from -(curvature + co-curvature)."""


class AsymmetricRicci(InternalConsistencyError):
    pass


class NumericalBlowup(SrcdError):
    """Simulated matrix norms exceeded the abort threshold."""
