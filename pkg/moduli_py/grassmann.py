import logging
from itertools import permutations
from math import factorial
from typing import Sequence

from moduli_py.exceptions import DomainError, UsageError
from moduli_py.series import IteratedLaurentSeries, add, mul

logger = logging.getLogger(__name__)

MAX_GENERATORS = 64
"""@private"""


def generator_index(j: int, k: int, rows: int) -> int:
    """Canonical position of ζ_j^k: ζ_1^1 < ζ_2^1 < ... < ζ_{n-1}^1 < ζ_1^2 < ... < ζ_{n-1}^{2g}."""
    return (k - 1) * rows + (j - 1)


def _reorder_sign(left: int, right: int) -> int:
    # number of pairs (x in left, y in right) with x > y
    swaps = 0
    while right:
        low = right & -right
        swaps += bin(left & ~((low << 1) - 1)).count("1")
        right ^= low
    return -1 if swaps & 1 else 1


class GrassmannElement:
    """An element of the exterior algebra on ζ_j^k (1 <= j <= rows, 1 <= k <= 2g) over the series ring.

    Terms are keyed by bitmasks over the canonical generator order.
    """

    __slots__ = ("rows", "g", "scalar_ring", "terms")

    def __init__(
        self, rows: int, g: int, scalar_ring: IteratedLaurentSeries, terms: dict[int, IteratedLaurentSeries] | None = None
    ) -> None:
        if rows * 2 * g > MAX_GENERATORS:
            raise UsageError(f"{rows * 2 * g} Grassmann generators exceed the supported {MAX_GENERATORS}")
        self.rows = rows
        self.g = g
        self.scalar_ring = scalar_ring
        self.terms = {mask: c for mask, c in (terms or {}).items() if not c.is_zero()}

    @property
    def size(self) -> int:
        return self.rows * 2 * self.g

    @property
    def top_mask(self) -> int:
        return (1 << self.size) - 1

    def _like(self, terms: dict[int, IteratedLaurentSeries]) -> "GrassmannElement":
        return GrassmannElement(self.rows, self.g, self.scalar_ring, terms)

    def _check(self, other: "GrassmannElement") -> None:
        if (self.rows, self.g) != (other.rows, other.g) or self.scalar_ring.order != other.scalar_ring.order:
            raise UsageError("Grassmann elements over different generator sets")

    def scalar(self, value: IteratedLaurentSeries) -> "GrassmannElement":
        return self._like({0: value})

    def generator(self, j: int, k: int, coefficient: IteratedLaurentSeries | None = None) -> "GrassmannElement":
        if not (1 <= j <= self.rows and 1 <= k <= 2 * self.g):
            raise UsageError(f"ζ_{j}^{k} is not a generator")
        value = coefficient if coefficient is not None else self.scalar_ring.one()
        return self._like({1 << generator_index(j, k, self.rows): value})

    def __add__(self, other: "GrassmannElement") -> "GrassmannElement":
        self._check(other)
        terms = dict(self.terms)
        for mask, c in other.terms.items():
            terms[mask] = add(terms[mask], c) if mask in terms else c
        return self._like(terms)

    def __neg__(self) -> "GrassmannElement":
        return self._like({mask: -c for mask, c in self.terms.items()})

    def __sub__(self, other: "GrassmannElement") -> "GrassmannElement":
        return self + (-other)

    def __mul__(self, other: "GrassmannElement") -> "GrassmannElement":
        return wedge(self, other)

    def scale(self, factor: IteratedLaurentSeries) -> "GrassmannElement":
        return self._like({mask: mul(c, factor) for mask, c in self.terms.items()})

    def degrees(self) -> set[int]:
        return {bin(mask).count("1") for mask in self.terms}

    def __repr__(self) -> str:
        return f"GrassmannElement({len(self.terms)} terms over {self.size} generators)"


def wedge(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    """Exterior product, with the sign of moving every generator of `b` past the larger ones of `a`."""
    a._check(b)
    terms: dict[int, IteratedLaurentSeries] = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            if ma & mb:
                continue
            product = mul(ca, cb)
            if _reorder_sign(ma, mb) < 0:
                product = -product
            mask = ma | mb
            terms[mask] = add(terms[mask], product) if mask in terms else product
    return a._like(terms)


def grassmann_exp(e: GrassmannElement) -> GrassmannElement:
    """exp(e) for a nilpotent element of even degree.

    Raises:
        DomainError: `e` has an odd-degree part or a scalar part.
    """
    degrees = e.degrees()
    if 0 in degrees or any(d % 2 for d in degrees):
        raise DomainError("grassmann_exp needs an even element without scalar part")
    result = e.scalar(e.scalar_ring.one())
    power = result
    k = 0
    while True:
        k += 1
        power = wedge(power, e)
        if not power.terms:
            break
        result = result + power._like({mask: c / factorial(k) for mask, c in power.terms.items()})
    return result


def orientation_sign(rows: int, g: int) -> int:
    """Sign making the Berezin integral of exp(-Σ ζ_i^k ζ_j^{k+g} M_ij) equal to det(M)^g."""
    exponent = g * (rows + rows * (rows - 1) // 2) + rows * g * (g - 1) // 2
    return -1 if exponent % 2 else 1


def berezin(e: GrassmannElement) -> IteratedLaurentSeries:
    """Coefficient of the top monomial in canonical order, times the orientation sign."""
    top = e.terms.get(e.top_mask)
    if top is None:
        return e.scalar_ring.zero()
    return top if orientation_sign(e.rows, e.g) > 0 else -top


def quadratic_form(matrix: Sequence[Sequence[IteratedLaurentSeries]], g: int) -> GrassmannElement:
    """-Σ_{i,j} Σ_{k<=g} ζ_i^k ζ_j^{k+g} M_ij."""
    rows = len(matrix)
    ring = matrix[0][0]
    terms: dict[int, IteratedLaurentSeries] = {}
    for k in range(1, g + 1):
        for i in range(rows):
            for j in range(rows):
                entry = matrix[i][j]
                if entry.is_zero():
                    continue
                left = generator_index(i + 1, k, rows)
                right = generator_index(j + 1, k + g, rows)
                mask = (1 << left) | (1 << right)
                value = -entry if left < right else entry
                terms[mask] = add(terms[mask], value) if mask in terms else value
    return GrassmannElement(rows, g, ring, terms)


def linear_form(vector: Sequence[IteratedLaurentSeries], k: int, g: int) -> GrassmannElement:
    """Σ_j v_j ζ_j^k."""
    rows = len(vector)
    terms = {1 << generator_index(j + 1, k, rows): v for j, v in enumerate(vector) if not v.is_zero()}
    return GrassmannElement(rows, g, vector[0], terms)


def determinant(matrix: Sequence[Sequence[IteratedLaurentSeries]]) -> IteratedLaurentSeries:
    """Leibniz expansion over the series ring."""
    size = len(matrix)
    total = matrix[0][0].zero()
    for permutation in permutations(range(size)):
        inversions = sum(1 for i in range(size) for j in range(i + 1, size) if permutation[i] > permutation[j])
        term = matrix[0][permutation[0]]
        for i in range(1, size):
            term = mul(term, matrix[i][permutation[i]])
        total = add(total, -term if inversions % 2 else term)
    return total


def berezin_quadratic(matrix: Sequence[Sequence[IteratedLaurentSeries]], g: int) -> IteratedLaurentSeries:
    """berezin(grassmann_exp(quadratic_form(M, g))) through the determinant, det(M)^g."""
    return determinant(matrix) ** g
