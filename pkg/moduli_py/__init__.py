from .moduli import ModuliClient
from .formulas import ChernFormula, IResidueFormula, PairingFormula
from .enums import Command, ExitCode, OutputFormat, Preset
from .models import *

__all__ = [
    "ModuliClient",
    "moduli",
    "models",
    "enums",
    "exceptions",
    "formulas",
    "series",
    "grassmann",
    "lie",
    "symfunc",
    "fg",
]
