import logging
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import sympy
from sympy.polys.polyfuncs import symmetrize

from moduli_py.exceptions import DomainError, RankError
from moduli_py.models import SigmaPolynomial, SymmetricPolynomial

logger = logging.getLogger(__name__)


def x_symbols(n: int) -> tuple[sympy.Symbol, ...]:
    return sympy.symbols(f"X1:{n + 1}")


def sigma_symbols(n: int) -> tuple[sympy.Symbol, ...]:
    """s1, ..., sn standing for σ_1, ..., σ_n."""
    return sympy.symbols(f"s1:{n + 1}")


def elementary_expr(k: int, items: tuple[sympy.Expr, ...] | list[sympy.Expr]) -> sympy.Expr:
    """e_k of arbitrary expressions."""
    return sympy.Add(*(sympy.Mul(*chosen) for chosen in combinations(items, k)))


def _to_fraction(value: sympy.Rational) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def to_expr(p: SymmetricPolynomial) -> sympy.Expr:
    xs = x_symbols(p.n)
    return sympy.Add(
        *(sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*(x**e for x, e in zip(xs, exps))) for exps, c in p.terms.items())
    )


def from_expr(n: int, expr: sympy.Expr) -> SymmetricPolynomial:
    """Read an expression in X1, ..., Xn into a SymmetricPolynomial, without checking symmetry."""
    poly = sympy.Poly(sympy.expand(expr), *x_symbols(n))
    return SymmetricPolynomial(n, {tuple(m): _to_fraction(c) for m, c in poly.terms() if c != 0})


def to_elementary(p: SymmetricPolynomial) -> SigmaPolynomial:
    """Rewrite a symmetric polynomial in σ_2, ..., σ_n with σ_1 set to 0.

    Args:
        p: a polynomial in X_1, ..., X_n invariant under every permutation of the indices.
    Returns:
        the σ-polynomial, it agrees with p on the hyperplane X_1 + ... + X_n = 0.
    Raises:
        DomainError: p is not symmetric.
    """
    n = p.n
    xs = x_symbols(n)
    ss = sigma_symbols(n)
    expr = to_expr(p)
    if expr.is_number:
        value = _to_fraction(expr)
        return SigmaPolynomial(n, {(0,) * (n - 1): value} if value else {})
    symmetric, remainder, _ = symmetrize(expr, *xs, formal=True, symbols=ss)
    if sympy.expand(remainder) != 0:
        raise DomainError(f"polynomial is not symmetric, remainder {remainder}")
    reduced = sympy.expand(symmetric.subs(ss[0], 0))
    terms: dict[tuple[int, ...], Fraction] = {}
    if reduced != 0:
        poly = sympy.Poly(reduced, *ss[1:])
        terms = {tuple(m): _to_fraction(c) for m, c in poly.terms() if c != 0}
    result = SigmaPolynomial(n, terms)
    _check_round_trip(p, result)
    return result


def from_sigma(q: SigmaPolynomial) -> sympy.Expr:
    """Substitute σ_r(X) back into a σ-polynomial."""
    n = q.n
    xs = x_symbols(n)
    sigmas = [elementary_expr(r, xs) for r in range(2, n + 1)]
    return sympy.Add(
        *(
            sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*(s**m for s, m in zip(sigmas, exps)))
            for exps, c in q.terms.items()
        )
    )


def _on_hyperplane(n: int, expr: sympy.Expr) -> sympy.Expr:
    xs = x_symbols(n)
    return sympy.expand(expr.subs(xs[-1], -sum(xs[:-1])))


def _check_round_trip(p: SymmetricPolynomial, q: SigmaPolynomial) -> None:
    difference = _on_hyperplane(p.n, to_expr(p) - from_sigma(q))
    if difference != 0:
        raise DomainError(f"σ-rewrite does not reproduce the polynomial, difference {difference}")


@lru_cache(maxsize=None)
def pontryagin_generators(n: int) -> tuple[SigmaPolynomial, ...]:
    """The elementary symmetric functions of the squared roots (X_i - X_j)², rewritten in σ_2, ..., σ_n."""
    if n < 2:
        raise RankError(f"rank {n} is below 2")
    xs = x_symbols(n)
    squares = [(xs[i] - xs[j]) ** 2 for i in range(n) for j in range(i + 1, n)]
    generators = []
    for k in range(1, len(squares) + 1):
        expr = elementary_expr(k, squares)
        generators.append(to_elementary(from_expr(n, expr)))
    logger.debug("rank %d Pontryagin generators: %s", n, [str(q) for q in generators])
    return tuple(generators)


@lru_cache(maxsize=None)
def discriminant_class(n: int, g: int) -> SigmaPolynomial:
    """The class η₀ of D(X)^{2g-2} = ∏_{i<j} (X_i - X_j)^{2g-2}, of degree 2n(n-1)(g-1)."""
    if n < 2 or g < 2:
        raise RankError(f"discriminant class needs n >= 2 and g >= 2, got n={n}, g={g}")
    xs = x_symbols(n)
    expr = sympy.Mul(*((xs[i] - xs[j]) ** (2 * g - 2) for i in range(n) for j in range(i + 1, n)))
    return to_elementary(from_expr(n, expr))
