"""Exception hierarchy.

Every numerical failure carries the violated invariant's name and its
largest observed residual so callers (and the CLI) can report it.
"""


class AmalgamError(Exception):
    """Base class for all package errors."""

    invariant = "unspecified"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

    def describe(self):
        text = f"{type(self).__name__}: {self}"
        if self.residual is not None:
            text += f" (max residual {self.residual:.3e})"
        return text


class ValidationError(AmalgamError, ValueError):
    """Malformed input: dimension mismatch, wrong shape, out-of-range parameter."""

    invariant = "input shape"


class FaithfulnessError(AmalgamError):
    invariant = "faithful state (positive-definite density)"


class NoCompatibleCE(AmalgamError):
    invariant = "state-preserving conditional expectation axioms"


class EmbeddingNotHomomorphism(AmalgamError):
    invariant = "unital *-homomorphism"


class ExpectationError(AmalgamError):
    invariant = "conditional expectation onto the embedded base"


class NotIdenticallyDistributed(AmalgamError):
    invariant = "arm-independent moments"


class UnsupportedWord(AmalgamError):
    invariant = "product-form letters x_i b"


class IllConditioned(AmalgamError):
    invariant = "Vandermonde conditioning"

    def __init__(self, message, condition_number=None, residual=None):
        super().__init__(message, residual)
        self.condition_number = condition_number


class ResidualTooLarge(AmalgamError):
    invariant = "Vandermonde least-squares residual / projection recovery"


class NotCommutative(AmalgamError):
    invariant = "commutative subalgebra"


class NotCentral(AmalgamError):
    invariant = "subalgebra contained in the center"


class StateNotEPreserving(AmalgamError):
    invariant = "state preserved by the expectation"


class IllDefined(AmalgamError):
    invariant = "expectation constant on GNS null classes"
