from enum import Enum, IntEnum

"""
Prebuilt Constants
"""

EXPONENT_BOUND = 2**31 - 1
"""@private

Largest exponent magnitude the series kernel accepts, also used as the cap of an untruncated variable.
"""

SCHEMA_VERSION = 2
"""@private"""

generator_degrees: dict[str, int] = {
    "a": 0,  # a_r has degree 2r
    "b": -1,  # b_r^k has degree 2r - 1
    "f": -2,  # f_r has degree 2r - 2
}
"""@private

Offsets added to 2r to get the cohomological degree of each generator family.
"""

"""
Prebuilt Enums
"""


class VariableKind(Enum):
    RESIDUE = "residue"
    """Laurent variable consumed by an iterated residue, one of Y_1, ..., Y_{n-1}."""
    LAURENT = "laurent"
    """Laurent parameter that is never residued, the scaling parameter ε."""
    PARAMETER = "parameter"
    """Polynomial parameter, t or λ."""
    NILPOTENT = "nilpotent"
    """Nilpotent parameter δ_r with a fixed nilpotency order."""

    @property
    def laurent(self) -> bool:
        return self in (VariableKind.RESIDUE, VariableKind.LAURENT)


class Command(Enum):
    PAIR = "pair"
    PONTRYAGIN = "pontryagin"
    CHERN = "chern"
    VERIFY = "verify"


class OutputFormat(Enum):
    TEXT = "text"
    JSON = "json"


class Preset(Enum):
    ETA0_EXPF2 = "eta0_expf2"
    """The discriminant class η₀ times exp f₂."""
    THADDEUS = "thaddeus_invariant"
    """(a₂)^r exp(f₂ + λ Σ b₂^k b₂^{k+g}), rank 2 only."""


class ExitCode(IntEnum):
    OK = 0
    ENGINE_ERROR = 1
    USAGE = 2
    CHECK_FAILED = 3


class CheckStatus(Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    REPORT = "REPORT"
    """Experimental result, logged but never gating."""
