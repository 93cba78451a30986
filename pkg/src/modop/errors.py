"""Exception hierarchy.

Errors are split by who is at fault: bad data or unmet preconditions
(caller), versus identities that the library guarantees by construction
(a :class:`IdentityViolation` firing means a bug, not a bad input).
"""


class ModopError(Exception):
    """Base class for all library errors."""


class StructureError(ModopError):
    """Shapes, sizes, or algebra layouts do not match."""


class InvarianceError(ModopError):
    """A subspace fails the algebra-invariance certificate.

    Raised when a candidate submodule is not closed under the right
    algebra action (equivalently, when its per-block dimensions are
    not divisible by the block sizes).
    """

    def __init__(self, msg: str, residual: float | None = None):
        super().__init__(msg)
        self.residual = residual


class UnmetHypothesisError(ModopError):
    """A documented precondition of an operation does not hold.

    Used for things like non-commuting inputs to a commuting check or
    a claimed complement that fails to be one.  This reports a bad
    instance, not a falsified theorem.
    """


class IdentityViolation(ModopError):
    """An exact structural identity failed.

    These identities (K-theory bookkeeping, alternating dimension sums,
    witness balances) hold by construction whenever the rank decisions
    underneath are sound, so this error must never fire on well-margined
    instances.  It is deliberately loud rather than a report flag.
    """


class DataError(ModopError):
    """Malformed serialized input (JSON files, CLI payloads)."""
