import random
from fractions import Fraction

import pytest
import sympy

from moduli_py.enums import EXPONENT_BOUND
from moduli_py.exceptions import (
    CapViolationError,
    DomainError,
    ExponentOverflowError,
    SingularSeriesError,
    UsageError,
)
from moduli_py.series import (
    IteratedLaurentSeries,
    VariableOrder,
    exp_series,
    invert,
    mul,
    power_binomial,
    residue,
    todd,
)


def test_series_arithmetic(ring: IteratedLaurentSeries):
    order = ring.order
    capped = ring.with_caps(order.make_caps(t=5))
    t = capped.variable("t")

    geometric = invert(1 - t)
    assert all(geometric.coefficient({"t": k}) == 1 for k in range(6))
    assert not geometric.complete
    with pytest.raises(CapViolationError):
        geometric.coefficient({"t": 6})

    s = ring.with_caps(order.make_caps(Y1=4)).variable("Y1")
    s = s + s * s
    inverse = invert(s)
    assert inverse.coefficient({"Y1": -1}) == 1
    assert inverse.coefficient({"Y1": 0}) == -1
    assert inverse.coefficient({"Y1": 3}) == 1
    assert s * inverse == 1

    assert (t + 1) ** 2 == 1 + 2 * t + t * t
    assert (t * 3) / 6 == t.scale(Fraction(1, 2))


def test_iterated_order(ring: IteratedLaurentSeries):
    order = ring.order
    y = ring.variable("Y1")
    t = ring.variable("t")
    assert (t + ring.monomial({"Y1": -1})).leading_monomial() == order.monomial({"Y1": -1})
    assert (t + y**5).leading_monomial() == order.monomial({"Y1": 5})
    assert (ring.variable("eps") + t).leading_monomial() == order.monomial({"t": 1})
    with pytest.raises(SingularSeriesError):
        ring.zero().leading_monomial()


def test_todd_expansion(ring: IteratedLaurentSeries):
    x = ring.with_caps(ring.order.make_caps(t=8)).variable("t")
    value = todd(x)
    symbol = sympy.Symbol("x")
    expected = sympy.series(symbol / (sympy.exp(symbol) - 1), symbol, 0, 9).removeO()
    for k in range(9):
        c = sympy.Rational(expected.coeff(symbol, k))
        assert value.coefficient({"t": k}) == Fraction(int(c.p), int(c.q))

    root = power_binomial(x, Fraction(1, 2))
    expected = sympy.series(sympy.sqrt(1 + symbol), symbol, 0, 9).removeO()
    for k in range(9):
        c = sympy.Rational(expected.coeff(symbol, k))
        assert root.coefficient({"t": k}) == Fraction(int(c.p), int(c.q))
    assert power_binomial(x, 3) == 1 + 3 * x + 3 * x * x + x * x * x

    e = exp_series(x)
    assert e.coefficient({"t": 4}) == Fraction(1, 24)
    with pytest.raises(DomainError):
        exp_series(ring.monomial({"Y1": -1}))
    with pytest.raises(DomainError):
        exp_series(ring.one())


def test_residues(ring: IteratedLaurentSeries, ring3: IteratedLaurentSeries):
    t = ring.variable("t")
    value = residue(mul(ring.monomial({"Y1": -1}), 1 + t), "Y1")
    assert value == 1 + t
    assert value.cap("Y1") == EXPONENT_BOUND
    with pytest.raises(UsageError):
        residue(value, "Y1")
    with pytest.raises(UsageError):
        residue(ring, "t")

    with pytest.raises(UsageError):
        residue(ring3, "Y1")
    inner = residue(ring3.monomial({"Y1": -1, "Y2": -1}), "Y2")
    assert residue(inner, "Y1") == 1

    shallow = IteratedLaurentSeries(ring.order, {}, ring.order.make_caps(Y1=-2))
    with pytest.raises(CapViolationError):
        residue(shallow, "Y1")


def test_nilpotent_parameters(ring3: IteratedLaurentSeries):
    delta = ring3.variable("d3")
    cube = delta**3
    assert cube.is_zero()
    assert cube.complete
    assert (1 + delta) ** 3 == 1 + 3 * delta + 3 * delta * delta
    with pytest.raises(SingularSeriesError):
        invert(delta)


def test_series_errors(ring: IteratedLaurentSeries, ring3: IteratedLaurentSeries):
    with pytest.raises(UsageError):
        ring + ring3
    with pytest.raises(DomainError):
        ring.monomial({"t": -1})
    with pytest.raises(ExponentOverflowError):
        ring.variable("Y1").shift({"Y1": EXPONENT_BOUND})
    with pytest.raises(UsageError):
        VariableOrder.for_rank(2).index("Y2")


def _random_series(
    rng: random.Random, base: IteratedLaurentSeries, spans: dict[str, tuple[int, int]], size: int
) -> IteratedLaurentSeries:
    terms = {}
    for _ in range(size):
        exponents = {name: rng.randint(low, high) for name, (low, high) in spans.items()}
        terms[base.order.monomial(exponents)] = Fraction(rng.randint(-5, 5), rng.randint(1, 3))
    return IteratedLaurentSeries(base.order, terms, base.caps)


def test_ring_axioms(ring: IteratedLaurentSeries):
    rng = random.Random(7)
    spans = {"Y1": (-2, 2), "t": (0, 2), "eps": (-1, 2)}
    for _ in range(20):
        a, b, c = (_random_series(rng, ring, spans, rng.randint(1, 4)) for _ in range(3))
        assert a + b == b + a
        assert a * b == b * a
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + ring.zero() == a and a * ring.one() == a
        assert (a - a).is_zero()


def test_random_inverses(ring3: IteratedLaurentSeries):
    rng = random.Random(11)
    base = ring3.with_caps(ring3.order.make_caps(0, Y1=4, Y2=4, t=3))
    spans = {"Y1": (-2, 2), "Y2": (-2, 2), "t": (0, 2)}
    for _ in range(100):
        s = _random_series(rng, base, spans, rng.randint(1, 3))
        # a t-free term keeps the leading term free of t
        s = s + base.monomial({"Y1": rng.randint(-2, 2), "Y2": rng.randint(-2, 2)}, rng.choice([-3, -1, 1, 2]))
        if all(e[2] > 0 for e in s.terms):
            continue
        inverse = invert(s)
        assert mul(s, inverse) == 1
        assert mul(inverse, s) == 1


def test_inverse_with_mixed_directions(ring3: IteratedLaurentSeries):
    base = ring3.with_caps(ring3.order.make_caps(0, Y1=4, Y2=4, t=3))
    s = base.constant(-2)
    s = s + base.monomial({"Y1": -1, "Y2": 2}, -5) + base.monomial({"Y2": 2}, -2) + base.monomial({"Y1": 1, "Y2": -1, "t": 2}, 5)
    inverse = invert(s)
    assert inverse.coefficient({}) == Fraction(-1, 2)
    assert inverse.coefficient({"Y1": -1, "Y2": 2}) == Fraction(5, 4)
    assert s * inverse == 1

    alternating = invert(base.variable("Y1") + base.variable("Y2"))
    for k in range(5):
        assert alternating.coefficient({"Y1": -k - 1, "Y2": k}) == (-1) ** k


def test_exp_additive(ring3: IteratedLaurentSeries):
    rng = random.Random(13)
    base = ring3.with_caps(ring3.order.make_caps(0, t=4, eps=3, d3=2))
    spans = {"t": (0, 2), "eps": (0, 2), "d3": (0, 1)}
    for _ in range(20):
        a, b = (_random_series(rng, base, spans, 3) for _ in range(2))
        a = a - a.coefficient({})
        b = b - b.coefficient({})
        assert exp_series(a + b) == exp_series(a) * exp_series(b)
