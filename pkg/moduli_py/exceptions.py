class ModuliPyError(Exception):
    """Base exception class for all exceptions raised by moduli_py."""


class UsageError(ModuliPyError):
    """The request is malformed and can not be evaluated as given.

    For example, an EtaSpec JSON document that does not parse, an unknown preset name, series built over
    different variable orders, or a residue requested in the wrong order.
    """


class CoprimalityError(UsageError):
    """Rank and degree are not coprime, the moduli space is not smooth and compact there."""


class RankError(UsageError):
    """Rank, genus or a generator index is out of range.

    Ranks start at 2, genera start at 2, and b-generators are indexed by 2 <= r <= n and 1 <= k <= 2g.
    """


class DomainError(ModuliPyError):
    """A mathematical precondition of an operation is violated.

    For example, taking exp of a series with a pole, a binomial power of a series that is not a perturbation of 1,
    or rewriting a polynomial that is not symmetric.
    """


class SingularSeriesError(DomainError):
    """The series has no invertible leading term in the iterated order."""


class CapViolationError(ModuliPyError):
    """A coefficient was requested outside the truncation caps, or a truncation check did not reproduce a value.

    The caller should recompute with larger caps.
    """


class TruncationError(CapViolationError):
    """The value could not be stabilised even after doubling the truncation budgets."""


class ExponentOverflowError(ModuliPyError):
    """An exponent left the machine-size range supported by the series kernel."""


class CacheError(ModuliPyError):
    """A cache record is unreadable or does not match its key."""
