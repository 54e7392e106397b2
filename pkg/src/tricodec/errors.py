"""Exception hierarchy.

Decode failures get distinct subclasses so callers (and the CLI exit codes)
can tell a truncated file from a corrupt one.
"""


class TriCodecError(Exception):
    pass


class ContractViolation(TriCodecError, ValueError):
    """A precondition of a public operation was not met."""


class DegenerateGeometryError(TriCodecError, ValueError):
    """Vertex set cannot be triangulated (all points collinear)."""


class BudgetInfeasibleError(TriCodecError, ValueError):
    """The byte budget is smaller than the smallest encodable model."""


class DecodeError(TriCodecError, ValueError):
    pass


class UnsupportedVersionError(DecodeError):
    pass


class TruncatedStreamError(DecodeError):
    pass


class InconsistentCountsError(DecodeError):
    pass


class CorruptStreamError(DecodeError):
    pass
