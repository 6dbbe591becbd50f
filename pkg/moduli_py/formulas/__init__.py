from .base import CapPlan, Evaluation, IResidueFormula
from .residue import PairingFormula, eps_bounds, nonvanishing_residue
from .chern import ChernFormula, chern_character, z_vector

__all__ = [
    "CapPlan",
    "Evaluation",
    "IResidueFormula",
    "PairingFormula",
    "ChernFormula",
    "eps_bounds",
    "nonvanishing_residue",
    "chern_character",
    "z_vector",
]
