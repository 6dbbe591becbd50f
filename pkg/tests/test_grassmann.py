import random
from fractions import Fraction

import pytest
import sympy

from moduli_py.exceptions import DomainError, UsageError
from moduli_py.grassmann import (
    GrassmannElement,
    berezin,
    berezin_quadratic,
    determinant,
    generator_index,
    grassmann_exp,
    linear_form,
    orientation_sign,
    quadratic_form,
    wedge,
)
from moduli_py.series import IteratedLaurentSeries


def _matrix(ring: IteratedLaurentSeries, rows: list[list[int]]) -> list[list[IteratedLaurentSeries]]:
    return [[ring.constant(x) for x in row] for row in rows]


def test_exterior_algebra(ring: IteratedLaurentSeries):
    one = GrassmannElement(2, 1, ring).scalar(ring.one())
    x = one.generator(1, 1)
    y = one.generator(2, 2)
    assert wedge(x, y).terms == (-wedge(y, x)).terms
    assert not wedge(x, x).terms
    assert (x * y).degrees() == {2}
    assert generator_index(2, 2, 2) == 3

    form = linear_form([ring.constant(2), ring.zero()], 2, 1)
    assert list(form.terms) == [1 << generator_index(1, 2, 2)]

    with pytest.raises(UsageError):
        one.generator(3, 1)
    with pytest.raises(UsageError):
        GrassmannElement(5, 7, ring)
    with pytest.raises(DomainError):
        grassmann_exp(x)


def test_berezin_determinant(ring: IteratedLaurentSeries):
    assert berezin(grassmann_exp(quadratic_form(_matrix(ring, [[3]]), 1))) == 3
    assert orientation_sign(1, 1) == -1

    one = GrassmannElement(1, 1, ring).scalar(ring.one())
    assert berezin(one.generator(1, 1) * one.generator(1, 2)) == -1
    assert berezin(one) == 0

    matrices = [
        [[2, 1], [4, 3]],
        [[0, 1], [1, 0]],
        [[Fraction(1, 2), -3], [5, Fraction(2, 3)]],
    ]
    for rows in matrices:
        matrix = _matrix(ring, rows)
        det = determinant(matrix)
        for g in (1, 2):
            assert berezin(grassmann_exp(quadratic_form(matrix, g))) == det**g
            assert berezin_quadratic(matrix, g) == det**g

    matrix = _matrix(ring, [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
    assert determinant(matrix) == 4
    assert berezin(grassmann_exp(quadratic_form(matrix, 2))) == 16


def test_berezin_over_series(ring: IteratedLaurentSeries):
    capped = ring.with_caps(ring.order.make_caps(eps=3))
    eps = capped.variable("eps")
    matrix = [[eps * -2, capped.constant(1)], [capped.constant(1), eps * -2]]
    value = berezin(grassmann_exp(quadratic_form(matrix, 1)))
    assert value == 4 * eps * eps - 1


def _random_element(rng: random.Random, one: GrassmannElement, degree: int | None = None) -> GrassmannElement:
    terms = {}
    for _ in range(rng.randint(1, 4)):
        mask = rng.randrange(1 << one.size)
        if degree is not None:
            mask = sum(1 << i for i in rng.sample(range(one.size), degree))
        terms[mask] = one.scalar_ring.constant(rng.randint(-4, 4))
    return GrassmannElement(one.rows, one.g, one.scalar_ring, terms)


def test_wedge_laws(ring: IteratedLaurentSeries):
    rng = random.Random(5)
    one = GrassmannElement(2, 2, ring).scalar(ring.one())
    for _ in range(30):
        a, b, c = (_random_element(rng, one) for _ in range(3))
        assert wedge(wedge(a, b), c).terms == wedge(a, wedge(b, c)).terms
        assert wedge(a, b + c).terms == (wedge(a, b) + wedge(a, c)).terms

        p, q = rng.randint(0, 4), rng.randint(0, 4)
        x, y = _random_element(rng, one, p), _random_element(rng, one, q)
        swapped = wedge(y, x) if (p * q) % 2 == 0 else -wedge(y, x)
        assert wedge(x, y).terms == swapped.terms


def test_berezin_random_matrices(ring: IteratedLaurentSeries):
    rng = random.Random(3)
    shapes = [(rows, g) for rows in (1, 2, 3) for g in (1, 2, 3) if rows * g <= 6]
    for _ in range(20):
        rows, g = rng.choice(shapes)
        entries = [[Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(rows)] for _ in range(rows)]
        matrix = _matrix(ring, entries)
        oracle = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in entries]).det() ** g
        value = berezin(grassmann_exp(quadratic_form(matrix, g)))
        assert value.coefficient({}) == Fraction(int(oracle.p), int(oracle.q))
        assert value == determinant(matrix) ** g
