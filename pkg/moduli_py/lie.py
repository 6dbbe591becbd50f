import logging
from fractions import Fraction
from functools import cached_property
from itertools import permutations
from math import gcd

from moduli_py.exceptions import CoprimalityError, RankError
from moduli_py.models import WeylElement
from moduli_py.series import IteratedLaurentSeries, VariableOrder, add, mul

logger = logging.getLogger(__name__)


def c_tilde(n: int, d: int) -> tuple[Fraction, ...]:
    """The n-vector with j-th entry d/n - ⌊jd/n⌋ + ⌊(j-1)d/n⌋, its entries sum to 0.

    Raises:
        CoprimalityError: n and d are not coprime.
    """
    if gcd(n, d) != 1:
        raise CoprimalityError(f"rank {n} and degree {d} are not coprime")
    return tuple(Fraction(d, n) - (j * d) // n + ((j - 1) * d) // n for j in range(1, n + 1))


def coroot(n: int, j: int) -> tuple[Fraction, ...]:
    """The lattice generator ê_j = e_j - e_{j+1}."""
    return tuple(Fraction(1 if i == j else -1 if i == j + 1 else 0) for i in range(1, n + 1))


def weyl_elements(n: int) -> list[WeylElement]:
    """All (n-1)! elements of W_{n-1}, the identity first."""
    if n < 2:
        raise RankError(f"rank {n} is below 2")
    return [WeylElement(p) for p in permutations(range(n - 1))]


def cartan_matrix(n: int) -> list[list[int]]:
    """Cartan matrix of A_{n-1}."""
    return [[2 if i == j else -1 if abs(i - j) == 1 else 0 for j in range(n - 1)] for i in range(n - 1)]


class RootData:
    """SU(n) data for the residue formula, expressed as polynomials in Y_1, ..., Y_{n-1}.

    Every polynomial is built complete over the uncapped order, so callers truncate when they multiply.
    """

    def __init__(self, n: int, d: int, order: VariableOrder) -> None:
        if n < 2:
            raise RankError(f"rank {n} is below 2")
        self.n = n
        self.d = d
        self.order = order
        self._ring = IteratedLaurentSeries(order, {(0,) * order.size: 1})
        self._elementary: dict[frozenset[int], list[IteratedLaurentSeries]] = {}

    @cached_property
    def c_tilde(self) -> tuple[Fraction, ...]:
        return c_tilde(self.n, self.d)

    @cached_property
    def x_coordinates(self) -> list[IteratedLaurentSeries]:
        """X_i = Σ_{k>=i} Y_k - (1/n) Σ_k k·Y_k, so that Σ X_i = 0 and X_j - X_{j+1} = Y_j."""
        n = self.n
        xs = []
        for i in range(1, n + 1):
            terms: dict[tuple[int, ...], Fraction] = {}
            for k in range(1, n):
                weight = (1 if k >= i else 0) - Fraction(k, n)
                if weight:
                    terms[self.order.monomial({f"Y{k}": 1})] = weight
            xs.append(IteratedLaurentSeries(self.order, terms))
        return xs

    def y(self, j: int) -> IteratedLaurentSeries:
        return self._ring.variable(f"Y{j}")

    def root(self, i: int, j: int) -> IteratedLaurentSeries:
        """X_i - X_j = Y_i + ... + Y_{j-1} for i < j."""
        total = self._ring.zero()
        for k in range(i, j):
            total = add(total, self.y(k))
        return total

    def elementary(self, r: int, excluded: frozenset[int] = frozenset()) -> IteratedLaurentSeries:
        """e_r of the X_i with indices (0-based) outside `excluded`."""
        if r < 0:
            return self._ring.zero()
        table = self._elementary.get(excluded)
        if table is None:
            table = [self._ring.one()]
            for i, x in enumerate(self.x_coordinates):
                if i in excluded:
                    continue
                table.append(self._ring.zero())
                for m in range(len(table) - 1, 0, -1):
                    table[m] = add(table[m], mul(table[m - 1], x))
            self._elementary[excluded] = table
        return table[r] if r < len(table) else self._ring.zero()

    def _check_rank(self, r: int) -> None:
        if not 2 <= r <= self.n:
            raise RankError(f"σ_{r} is not defined for rank {self.n}")

    def sigma(self, r: int) -> IteratedLaurentSeries:
        """The r-th elementary symmetric function of X_1, ..., X_n."""
        self._check_rank(r)
        return self.elementary(r)

    def d_sigma(self, r: int, v: tuple[Fraction, ...]) -> IteratedLaurentSeries:
        """Directional derivative dσ_r at X along v: Σ_i v_i e_{r-1}(X without X_i)."""
        self._check_rank(r)
        total = self._ring.zero()
        for i, vi in enumerate(v):
            if vi:
                total = add(total, self.elementary(r - 1, frozenset({i})).scale(vi))
        return total

    def second_derivative(self, r: int, u: tuple[Fraction, ...], v: tuple[Fraction, ...]) -> IteratedLaurentSeries:
        """∂²σ_r(u, v) = Σ_{i≠k} u_i v_k e_{r-2}(X without X_i, X_k)."""
        self._check_rank(r)
        total = self._ring.zero()
        for i, ui in enumerate(u):
            for k, vk in enumerate(v):
                if i != k and ui and vk:
                    total = add(total, self.elementary(r - 2, frozenset({i, k})).scale(ui * vk))
        return total

    def hessian_sigma(self, r: int) -> list[list[IteratedLaurentSeries]]:
        """∂²σ_r(ê_i, ê_j) over the lattice generators, tridiagonal (-2, 1) for r = 2."""
        basis = [coroot(self.n, j) for j in range(1, self.n)]
        return [[self.second_derivative(r, u, v) for v in basis] for u in basis]

    def discriminant_power(self, m: int) -> IteratedLaurentSeries:
        """∏_{i<j} (X_i - X_j)^m."""
        total = self._ring.one()
        for i in range(1, self.n + 1):
            for j in range(i + 1, self.n + 1):
                total = mul(total, self.root(i, j) ** m)
        return total

    def weyl_elements(self) -> list[WeylElement]:
        return weyl_elements(self.n)
