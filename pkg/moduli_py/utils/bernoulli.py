from fractions import Fraction
from functools import lru_cache
from math import comb, factorial


@lru_cache(maxsize=None)
def bernoulli(k: int) -> Fraction:
    """The k-th Bernoulli number in the convention x/(e^x - 1) = Σ B_k x^k / k!, so B_1 = -1/2."""
    if k < 0:
        raise ValueError(f"negative Bernoulli index {k}")
    if k == 0:
        return Fraction(1)
    if k == 1:
        return Fraction(-1, 2)
    if k % 2:
        return Fraction(0)
    return -sum((comb(k + 1, m) * bernoulli(m) for m in range(k)), Fraction(0)) / (k + 1)


def todd_coefficient(k: int) -> Fraction:
    """Coefficient of x^k in T(x) = x/(e^x - 1)."""
    return bernoulli(k) / factorial(k)
