"""
Exceptions raised by topolab.

Every exception carries the process exit code the command line tool
uses when it reaches the top level.
"""


class TopolabError(Exception):
    """Base class for all topolab errors."""
    exit_code = 1


class UsageError(TopolabError):
    exit_code = 1


class SchemaError(TopolabError):
    """A certificate file does not match the envelope schema."""
    exit_code = 1


class ConfigError(TopolabError):
    exit_code = 1


class PreconditionError(TopolabError, ValueError):
    """An operation was called on inputs outside its domain."""
    exit_code = 2


class RepresentationError(PreconditionError):
    """Finitely supported and tail sequences were mixed."""


class MembershipError(PreconditionError):
    """An element does not belong to the space it was used in."""


class IllPosedQuotientError(PreconditionError):
    """A subgroup descriptor does not contain the lattice it is taken modulo."""


class ZeroElementError(PreconditionError):
    """A witness was requested for the neutral element (or its coset)."""


class InvalidGroupError(PreconditionError):
    pass


class InvalidFilterError(PreconditionError):
    pass


class NonSubgroupBaseError(PreconditionError):
    pass


class NonGeneratingSetError(PreconditionError):
    pass


class LimitExceededError(PreconditionError):
    """An exhaustive search was asked to run beyond its documented limit."""


class SearchExhaustedError(PreconditionError):
    """A bounded scan hit its index cap before finding what it looked for."""


class VerificationError(TopolabError):
    """A replayed check failed.

    The first failing assertion is kept in ``failure`` so callers can
    report it without parsing the message.
    """
    exit_code = 3

    def __init__(self, failure, detail=None):
        self.failure = failure
        self.detail = detail
        message = failure if detail is None else f"{failure}: {detail}"
        super().__init__(message)
