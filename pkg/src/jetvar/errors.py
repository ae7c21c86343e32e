"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: parse/validation problems exit 2,
mathematical degeneracies (singular metrics and friends) exit 3, and
internal identity-verification failures exit 4.
"""


class JetvarError(Exception):
    """Base class for all package errors."""


class ParseError(JetvarError):
    """Malformed expression or problem-file text.

    Carries the offending position when known (0-based offset into the
    source string).
    """

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownIdentifierError(ParseError):
    """Identifier does not resolve in the declared context."""


class OrderError(JetvarError):
    """A jet multi-index exceeds the declared order."""


class EvaluationError(JetvarError):
    """Numeric evaluation failed: unbound atom, zero division, bad radicand."""


class SubstitutionError(JetvarError):
    """Cyclic binding set passed to substitute()."""


class SingularError(JetvarError):
    """A symbolic matrix required to be invertible has zero determinant."""


class VerificationError(JetvarError):
    """An internally self-checked identity failed; signals a bug, not bad input."""
