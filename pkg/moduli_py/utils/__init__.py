from .bernoulli import bernoulli, todd_coefficient
from .monomials import GeneratorMonomial, complementary_monomials, monomials_of_degree

__all__ = ["bernoulli", "todd_coefficient", "GeneratorMonomial", "monomials_of_degree", "complementary_monomials"]
