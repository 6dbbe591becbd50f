import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Mapping, Union

from moduli_py.enums import EXPONENT_BOUND, VariableKind
from moduli_py.exceptions import (
    CapViolationError,
    DomainError,
    ExponentOverflowError,
    SingularSeriesError,
    UsageError,
)
from moduli_py.utils.bernoulli import todd_coefficient

logger = logging.getLogger(__name__)

Monomial = tuple[int, ...]
Scalar = Union[int, Fraction]

MAX_ITERATIONS = 1 << 14
"""@private"""


@dataclass(frozen=True)
class VariableOrder:
    """The ordered variables shared by every series of one computation.

    Variables are listed outermost to innermost: the residue variables Y_1, ..., Y_{n-1}, the parameters t, ε, λ and
    finally the nilpotent δ_3, ..., δ_n. Inner variables are infinitesimal with respect to outer ones, which fixes the
    direction every expansion is taken in.
    """

    names: tuple[str, ...]
    kinds: tuple[VariableKind, ...]
    nilpotency: tuple[int | None, ...]

    def __post_init__(self):
        if not (len(self.names) == len(self.kinds) == len(self.nilpotency)):
            raise UsageError("variable names, kinds and nilpotency orders must have the same length")
        if len(set(self.names)) != len(self.names):
            raise UsageError(f"variable names are not unique: {self.names}")
        for name, kind, order in zip(self.names, self.kinds, self.nilpotency):
            if kind is VariableKind.NILPOTENT and (order is None or order < 0):
                raise UsageError(f"nilpotent variable {name} needs a nilpotency order >= 0")

    @classmethod
    def for_rank(cls, n: int, nilpotency: Mapping[int, int] | None = None) -> "VariableOrder":
        """Build the standard order for rank `n`.

        Args:
            n: the rank, at least 2.
            nilpotency: the order N_r of each δ_r, missing ranks default to 0.
        Returns:
            the order Y_1, ..., Y_{n-1}, t, eps, lam, d3, ..., dn.
        """
        nilpotency = nilpotency or {}
        names = [f"Y{j}" for j in range(1, n)] + ["t", "eps", "lam"] + [f"d{r}" for r in range(3, n + 1)]
        kinds = [VariableKind.RESIDUE] * (n - 1)
        kinds += [VariableKind.PARAMETER, VariableKind.LAURENT, VariableKind.PARAMETER]
        kinds += [VariableKind.NILPOTENT] * (n - 2)
        orders = [None] * (n + 2) + [nilpotency.get(r, 0) for r in range(3, n + 1)]
        return cls(tuple(names), tuple(kinds), tuple(orders))

    @property
    def size(self) -> int:
        return len(self.names)

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._positions[name]
        except KeyError:
            raise UsageError(f"unknown variable {name}")

    @cached_property
    def residue_indices(self) -> tuple[int, ...]:
        return tuple(i for i, kind in enumerate(self.kinds) if kind is VariableKind.RESIDUE)

    @cached_property
    def nilpotent_indices(self) -> tuple[int, ...]:
        return tuple(i for i, kind in enumerate(self.kinds) if kind is VariableKind.NILPOTENT)

    def monomial(self, exponents: Mapping[str, int] | None = None) -> Monomial:
        """Exponent vector from a name to exponent mapping, absent names are 0."""
        vector = [0] * self.size
        for name, exponent in (exponents or {}).items():
            vector[self.index(name)] = exponent
        return tuple(vector)

    def make_caps(self, default: int = EXPONENT_BOUND, **caps: int) -> tuple[int, ...]:
        """Caps per variable, nilpotent variables are always capped at their nilpotency order."""
        vector = [default] * self.size
        for name, cap in caps.items():
            vector[self.index(name)] = cap
        for i in self.nilpotent_indices:
            vector[i] = min(vector[i], self.nilpotency[i])
        return tuple(vector)


class IteratedLaurentSeries:
    """An exact-rational multivariate Laurent series over a `VariableOrder`.

    Coefficients are stored sparsely by exponent vector. `caps` bounds the exponents kept per variable and every
    monomial within the caps carries its exact coefficient. `complete` records that no term was ever dropped, in
    which case the stored terms are the whole series.

    Series are immutable after construction and may be shared freely between threads.
    """

    __slots__ = ("order", "terms", "caps", "complete", "consumed")

    def __init__(
        self,
        order: VariableOrder,
        terms: Mapping[Monomial, Scalar] | None = None,
        caps: Iterable[int] | None = None,
        complete: bool = True,
        consumed: int = 0,
    ) -> None:
        self.order = order
        self.caps: tuple[int, ...] = order.make_caps() if caps is None else tuple(caps)
        if len(self.caps) != order.size:
            raise UsageError("caps do not match the variable order")
        self.caps = tuple(
            min(cap, order.nilpotency[i]) if i in order.nilpotent_indices else cap for i, cap in enumerate(self.caps)
        )
        self.consumed = consumed
        kept: dict[Monomial, Fraction] = {}
        dropped = False
        for exponents, value in (terms or {}).items():
            if value == 0:
                continue
            if len(exponents) != order.size:
                raise UsageError(f"exponent vector {exponents} does not match the variable order")
            _check_exponents(order, exponents)
            if _vanishes(order, exponents):
                continue
            if any(e > cap for e, cap in zip(exponents, self.caps)):
                dropped = True
                continue
            kept[exponents] = Fraction(value)
        self.terms: dict[Monomial, Fraction] = kept
        self.complete = complete and not dropped

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exponents in sorted(self.terms, key=_leading_key):
            names = "*".join(
                name if e == 1 else f"{name}^{e}" for name, e in zip(self.order.names, exponents) if e != 0
            )
            coefficient = self.terms[exponents]
            parts.append(f"{coefficient}*{names}" if names else str(coefficient))
        return " + ".join(parts) + ("" if self.complete else " + ...")

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.constant(other)
        if not isinstance(other, IteratedLaurentSeries):
            return NotImplemented
        return self.order == other.order and self.terms == other.terms

    __hash__ = None

    def __add__(self, other: "IteratedLaurentSeries | Scalar") -> "IteratedLaurentSeries":
        return add(self, self._coerce(other))

    __radd__ = __add__

    def __neg__(self) -> "IteratedLaurentSeries":
        return self.scale(-1)

    def __sub__(self, other: "IteratedLaurentSeries | Scalar") -> "IteratedLaurentSeries":
        return add(self, -self._coerce(other))

    def __rsub__(self, other: Scalar) -> "IteratedLaurentSeries":
        return add(self._coerce(other), -self)

    def __mul__(self, other: "IteratedLaurentSeries | Scalar") -> "IteratedLaurentSeries":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "IteratedLaurentSeries":
        return self.scale(Fraction(1) / Fraction(other))

    def __pow__(self, exponent: int) -> "IteratedLaurentSeries":
        if exponent < 0:
            return invert(self) ** (-exponent)
        result = self.one()
        base = self
        while exponent:
            if exponent & 1:
                result = mul(result, base)
            exponent >>= 1
            if exponent:
                base = mul(base, base)
        return result

    def _coerce(self, other: "IteratedLaurentSeries | Scalar") -> "IteratedLaurentSeries":
        if isinstance(other, IteratedLaurentSeries):
            return other
        return self.constant(other)

    # Constructors

    def constant(self, value: Scalar) -> "IteratedLaurentSeries":
        """A constant series in the same order and caps as this one."""
        return IteratedLaurentSeries(self.order, {(0,) * self.order.size: value}, self.caps)

    def one(self) -> "IteratedLaurentSeries":
        return self.constant(1)

    def zero(self) -> "IteratedLaurentSeries":
        return IteratedLaurentSeries(self.order, {}, self.caps)

    def variable(self, name: str, coefficient: Scalar = 1) -> "IteratedLaurentSeries":
        return IteratedLaurentSeries(self.order, {self.order.monomial({name: 1}): coefficient}, self.caps)

    def monomial(self, exponents: Mapping[str, int], coefficient: Scalar = 1) -> "IteratedLaurentSeries":
        return IteratedLaurentSeries(self.order, {self.order.monomial(exponents): coefficient}, self.caps)

    # Queries

    def is_zero(self) -> bool:
        return not self.terms

    def leading_monomial(self) -> Monomial:
        """The dominant monomial in the iterated order.

        Comparison starts at the innermost variable: the monomial with the smallest power of the most infinitesimal
        variable dominates, ties are broken by the next variable outwards.
        """
        if not self.terms:
            raise SingularSeriesError("the zero series has no leading term")
        return min(self.terms, key=_leading_key)

    def valuation(self, name: str) -> int | None:
        """Smallest stored exponent of `name`, None for the zero series."""
        i = self.order.index(name)
        return min((e[i] for e in self.terms), default=None)

    def degree(self, name: str) -> int | None:
        """Largest stored exponent of `name`, None for the zero series."""
        i = self.order.index(name)
        return max((e[i] for e in self.terms), default=None)

    def is_polynomial_in(self, *names: str) -> bool:
        indices = [self.order.index(name) for name in names]
        return all(e[i] >= 0 for e in self.terms for i in indices)

    def coefficient(self, monomial: Monomial | Mapping[str, int]) -> Fraction:
        return coefficient(self, monomial)

    def cap(self, name: str) -> int:
        return self.caps[self.order.index(name)]

    # Transformations

    def scale(self, factor: Scalar) -> "IteratedLaurentSeries":
        factor = Fraction(factor)
        return IteratedLaurentSeries(
            self.order, {e: c * factor for e, c in self.terms.items()}, self.caps, self.complete, self.consumed
        )

    def truncate(self, caps: Iterable[int]) -> "IteratedLaurentSeries":
        """Drop every monomial above `caps`, the result caps are the componentwise minimum."""
        caps = tuple(min(a, b) for a, b in zip(self.caps, caps))
        return IteratedLaurentSeries(self.order, self.terms, caps, self.complete, self.consumed)

    def with_caps(self, caps: Iterable[int]) -> "IteratedLaurentSeries":
        """Reinterpret a complete series under new caps."""
        if not self.complete:
            raise CapViolationError("only a complete series can be recapped")
        return IteratedLaurentSeries(self.order, self.terms, caps, True, self.consumed)

    def shift(self, exponents: Mapping[str, int], coefficient: Scalar = 1) -> "IteratedLaurentSeries":
        """Multiply by a monomial, the caps move along with the exponents."""
        delta = self.order.monomial(exponents)
        coefficient = Fraction(coefficient)
        caps = tuple(min(cap + d, EXPONENT_BOUND) for cap, d in zip(self.caps, delta))
        terms = {tuple(x + d for x, d in zip(e, delta)): c * coefficient for e, c in self.terms.items()}
        return IteratedLaurentSeries(self.order, terms, caps, self.complete, self.consumed)

    def substitute_zero(self, name: str) -> "IteratedLaurentSeries":
        """Set a polynomial variable to 0."""
        i = self.order.index(name)
        if not self.is_polynomial_in(name):
            raise DomainError(f"can not set {name} to 0 in a series with negative powers of it")
        terms = {e: c for e, c in self.terms.items() if e[i] == 0}
        return IteratedLaurentSeries(self.order, terms, self.caps, self.complete, self.consumed)

    def select(self, predicate: Callable[[Monomial], bool]) -> "IteratedLaurentSeries":
        """Keep the terms whose exponent vector satisfies `predicate`."""
        terms = {e: c for e, c in self.terms.items() if predicate(e)}
        return IteratedLaurentSeries(self.order, terms, self.caps, self.complete, self.consumed)

    def collect(self, *names: str) -> dict[tuple[int, ...], "IteratedLaurentSeries"]:
        """Group terms by the exponents of `names`, each group keeps the other variables."""
        indices = [self.order.index(name) for name in names]
        groups: dict[tuple[int, ...], dict[Monomial, Fraction]] = {}
        for e, c in self.terms.items():
            key = tuple(e[i] for i in indices)
            rest = tuple(0 if i in indices else x for i, x in enumerate(e))
            groups.setdefault(key, {})[rest] = c
        return {
            key: IteratedLaurentSeries(self.order, terms, self.caps, self.complete, self.consumed)
            for key, terms in groups.items()
        }


def _leading_key(exponents: Monomial) -> Monomial:
    return exponents[::-1]


def _vanishes(order: VariableOrder, exponents: Monomial) -> bool:
    return any(exponents[i] > order.nilpotency[i] for i in order.nilpotent_indices)


def _check_exponents(order: VariableOrder, exponents: Monomial) -> None:
    for name, kind, e in zip(order.names, order.kinds, exponents):
        if e > EXPONENT_BOUND or e < -EXPONENT_BOUND:
            raise ExponentOverflowError(f"exponent {e} of {name} is out of range")
        if e < 0 and not kind.laurent:
            raise DomainError(f"negative power of the polynomial variable {name}")


def _check_orders(a: IteratedLaurentSeries, b: IteratedLaurentSeries) -> None:
    if a.order != b.order:
        raise UsageError(f"series over different variable orders: {a.order.names} and {b.order.names}")


def _shrunk_caps(a: IteratedLaurentSeries, b: IteratedLaurentSeries, caps: tuple[int, ...]) -> tuple[int, ...]:
    # a truncated operand times a Laurent operand is only exact up to its cap plus the other's valuation
    shrunk = list(caps)
    for x, y in ((a, b), (b, a)):
        if x.complete or not y.terms:
            continue
        for i in range(len(shrunk)):
            floor = min(e[i] for e in y.terms)
            if floor < 0:
                shrunk[i] = min(shrunk[i], x.caps[i] + floor)
    return tuple(shrunk)


def add(a: IteratedLaurentSeries, b: IteratedLaurentSeries) -> IteratedLaurentSeries:
    """Coefficientwise sum, exact within the componentwise minimum of the caps."""
    _check_orders(a, b)
    caps = tuple(min(x, y) for x, y in zip(a.caps, b.caps))
    terms = dict(a.terms)
    for e, c in b.terms.items():
        terms[e] = terms.get(e, 0) + c
    return IteratedLaurentSeries(a.order, terms, caps, a.complete and b.complete, max(a.consumed, b.consumed))


def mul(
    a: IteratedLaurentSeries, b: IteratedLaurentSeries, caps: Iterable[int] | None = None
) -> IteratedLaurentSeries:
    """Cauchy product truncated to the componentwise minimum of the caps.

    Args:
        a: the left factor.
        b: the right factor.
        caps: optional tighter caps for the product, terms beyond them are never formed.
    Returns:
        the product, nilpotent powers above their order are dropped.
    Raises:
        UsageError: the factors live over different variable orders.
        ExponentOverflowError: a product exponent left the supported range.
    """
    _check_orders(a, b)
    result_caps = tuple(min(x, y) for x, y in zip(a.caps, b.caps))
    if caps is not None:
        result_caps = tuple(min(x, y) for x, y in zip(result_caps, caps))
    result_caps = _shrunk_caps(a, b, result_caps)
    terms: dict[Monomial, Fraction] = {}
    dropped = False
    for ea, ca in a.terms.items():
        for eb, cb in b.terms.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            if any(x > cap for x, cap in zip(e, result_caps)):
                dropped = dropped or not _vanishes(a.order, e)
                continue
            terms[e] = terms.get(e, 0) + ca * cb
    complete = a.complete and b.complete and not dropped
    return IteratedLaurentSeries(a.order, terms, result_caps, complete, max(a.consumed, b.consumed))


def _geometric_caps(
    r: dict[Monomial, Fraction], order: VariableOrder, bounds: tuple[int, ...]
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Iteration caps and slack for summing Σ (-r)^k when the result is wanted up to `bounds`.

    Every monomial of r is positive in the iterated order, so its innermost nonzero exponent is positive. Walking
    the variables innermost first, the factors whose innermost nonzero exponent sits at variable i are counted
    against the bound of i plus the slack that the inner factors can give back there. The slack of i is the most
    the inner factors can lower the exponent of i, a partial product may exceed the bound by that much.
    """
    size = order.size
    level = {e: max(i for i in range(size) if e[i] != 0) for e in r}
    rising = [all(e[i] >= 0 for e in r) for i in range(size)]
    falling = [all(e[i] <= 0 for e in r) for i in range(size)]
    iteration = list(bounds)
    slack = [0] * size
    counts = [0] * size
    for i in reversed(range(size)):
        if falling[i] and not rising[i]:
            iteration[i] = EXPONENT_BOUND
            continue
        if not rising[i]:
            slack[i] = sum(
                counts[j] * max((-e[i] for e in r if level[e] == j and e[i] < 0), default=0)
                for j in range(i + 1, size)
            )
            negative = [e for e in r if e[i] < 0]
            headrooms = [
                bounds[u] for u in range(size) if rising[u] and bounds[u] >= 0 and all(e[u] > 0 for e in negative)
            ]
            if headrooms:
                slack[i] = min(slack[i], max(-e[i] for e in negative) * min(headrooms))
            iteration[i] = min(bounds[i] + slack[i], EXPONENT_BOUND)
        steps = [e[i] for e in r if level[e] == i]
        if steps:
            counts[i] = min(max(bounds[i] + slack[i], 0) // min(steps), EXPONENT_BOUND)
    return tuple(iteration), tuple(slack)


def invert(s: IteratedLaurentSeries) -> IteratedLaurentSeries:
    """Multiplicative inverse in the iterated order.

    The series is written as c·x^L·(1 + r) with c·x^L its leading term and the geometric series in r is summed.
    Variables whose exponents in r only rise are truncated at their cap, variables that only fall need no
    truncation and variables that do both are carried with enough slack to stay exact.

    Raises:
        SingularSeriesError: the series is zero, or its leading term involves a nilpotent variable.
    """
    order = s.order
    lead = s.leading_monomial()
    if any(lead[i] != 0 for i in order.nilpotent_indices):
        raise SingularSeriesError(f"leading term of {s!r} is nilpotent")
    leading_coefficient = s.terms[lead]
    r = {
        tuple(x - l for x, l in zip(e, lead)): c / leading_coefficient for e, c in s.terms.items() if e != lead
    }
    bounds = tuple(min(cap + l, EXPONENT_BOUND) for cap, l in zip(s.caps, lead))
    if not r:
        iteration, slack = bounds, (0,) * order.size
    else:
        iteration, slack = _geometric_caps(r, order, bounds)

    total: dict[Monomial, Fraction] = {}
    power: dict[Monomial, Fraction] = {(0,) * order.size: Fraction(1)}
    for k in range(MAX_ITERATIONS):
        for e, c in power.items():
            total[e] = total.get(e, 0) + c
        following: dict[Monomial, Fraction] = {}
        for ep, cp in power.items():
            for er, cr in r.items():
                e = tuple(x + y for x, y in zip(ep, er))
                if any(x > cap for x, cap in zip(e, iteration)):
                    continue
                following[e] = following.get(e, 0) - cp * cr
        power = {e: c for e, c in following.items() if c != 0}
        if not power:
            break
    else:
        raise CapViolationError(f"inverse of {s!r} did not terminate within {MAX_ITERATIONS} terms")
    logger.debug("inverted a series of %d terms in %d steps", len(s.terms), k + 1)

    caps = s.caps
    if not s.complete:
        caps = tuple(cap - 2 * max(l, 0) - sl for cap, l, sl in zip(caps, lead, slack))
    inverse = {tuple(x - l for x, l in zip(e, lead)): c / leading_coefficient for e, c in total.items()}
    complete = s.complete and len(r) == 0
    return IteratedLaurentSeries(order, inverse, caps, complete, s.consumed)


def _power_sum(
    s: IteratedLaurentSeries, coefficients: Callable[[int], Fraction], operation: str
) -> IteratedLaurentSeries:
    """Σ c_k s^k for a series with nonnegative exponents and zero constant term."""
    zero = (0,) * s.order.size
    if s.terms.get(zero, 0) != 0:
        raise DomainError(f"{operation} needs a series without constant term")
    if not all(x >= 0 for e in s.terms for x in e):
        raise DomainError(f"{operation} is undefined for a series with negative exponents")
    result = s.constant(coefficients(0))
    power = s.one()
    for k in range(1, MAX_ITERATIONS):
        power = mul(power, s)
        if power.is_zero():
            break
        c = coefficients(k)
        if c != 0:
            result = add(result, power.scale(c))
    else:
        raise CapViolationError(f"{operation} did not terminate within {MAX_ITERATIONS} terms")
    complete = s.complete and power.complete
    return IteratedLaurentSeries(s.order, result.terms, s.caps, complete, s.consumed)


def exp_series(s: IteratedLaurentSeries) -> IteratedLaurentSeries:
    """exp(s) truncated at the caps of `s`.

    Raises:
        DomainError: `s` has a pole or a nonzero constant term.
    """
    reciprocal_factorials = [Fraction(1)]

    def coefficients(k: int) -> Fraction:
        while len(reciprocal_factorials) <= k:
            reciprocal_factorials.append(reciprocal_factorials[-1] / len(reciprocal_factorials))
        return reciprocal_factorials[k]

    return _power_sum(s, coefficients, "exp_series")


def power_binomial(u: IteratedLaurentSeries, alpha: Scalar) -> IteratedLaurentSeries:
    """(1 + u)^α by the generalized binomial series.

    Args:
        u: a perturbation, without constant term and without poles.
        alpha: any rational exponent.
    Raises:
        DomainError: `u` is not a perturbation of 0.
    """
    alpha = Fraction(alpha)
    binomials = [Fraction(1)]

    def coefficients(k: int) -> Fraction:
        while len(binomials) <= k:
            j = len(binomials)
            binomials.append(binomials[-1] * (alpha - j + 1) / j)
        return binomials[k]

    return _power_sum(u, coefficients, "power_binomial")


def todd(x: IteratedLaurentSeries) -> IteratedLaurentSeries:
    """T(x) = x/(e^x - 1) through its Bernoulli expansion."""
    return _power_sum(x, todd_coefficient, "todd")


def residue(s: IteratedLaurentSeries, variable: str) -> IteratedLaurentSeries:
    """The coefficient of variable^{-1}, as a series in the remaining variables.

    Residues are taken innermost first: Y_{n-1}, then Y_{n-2}, down to Y_1.

    Raises:
        UsageError: `variable` is not the innermost residue variable still present.
        CapViolationError: the caps of `variable` do not reach -1.
    """
    order = s.order
    i = order.index(variable)
    residues = order.residue_indices
    if s.consumed >= len(residues) or residues[len(residues) - 1 - s.consumed] != i:
        expected = "none" if s.consumed >= len(residues) else order.names[residues[len(residues) - 1 - s.consumed]]
        raise UsageError(f"residue in {variable} requested, the next residue variable is {expected}")
    if s.caps[i] < -1:
        raise CapViolationError(f"cap {s.caps[i]} of {variable} is below the residue exponent")
    terms = {e[:i] + (0,) + e[i + 1 :]: c for e, c in s.terms.items() if e[i] == -1}
    # the residued variable is gone, only its exponent 0 remains
    caps = s.caps[:i] + (EXPONENT_BOUND,) + s.caps[i + 1 :]
    return IteratedLaurentSeries(order, terms, caps, s.complete, s.consumed + 1)


def coefficient(s: IteratedLaurentSeries, monomial: Monomial | Mapping[str, int]) -> Fraction:
    """The exact coefficient of one monomial.

    Raises:
        CapViolationError: the monomial lies outside the caps, recompute with larger caps.
    """
    if not isinstance(monomial, tuple):
        monomial = s.order.monomial(monomial)
    for name, e, cap in zip(s.order.names, monomial, s.caps):
        if e > cap:
            raise CapViolationError(f"exponent {e} of {name} is above the cap {cap}")
    return s.terms.get(monomial, Fraction(0))
