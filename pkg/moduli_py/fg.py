import logging
import threading
from dataclasses import dataclass, field
from fractions import Fraction

from moduli_py.exceptions import DomainError, UsageError
from moduli_py.series import IteratedLaurentSeries, VariableOrder, exp_series, invert, mul, residue

logger = logging.getLogger(__name__)

TLPolynomial = dict[tuple[int, int], Fraction]
"""@private

Sparse Laurent polynomial in t and λ, keyed by (t-power, λ-power).
"""

_ORDER = VariableOrder.for_rank(2)


def _add(p: TLPolynomial, q: TLPolynomial, factor: Fraction = Fraction(1), t_shift: int = 0) -> TLPolynomial:
    """p + factor·t^{t_shift}·q"""
    result = dict(p)
    for (a, b), c in q.items():
        key = (a + t_shift, b)
        result[key] = result.get(key, 0) + factor * c
    return {key: c for key, c in result.items() if c}


def t_degree(p: TLPolynomial) -> int | None:
    return max((a for a, _ in p), default=None)


@dataclass
class FResidue:
    """F(k, s) as numerator / (1 + 4t)^{s+1}.

    `series` is the t-expansion of F itself up to `t_cap`.
    """

    k: int
    s: int
    numerator: TLPolynomial
    series: TLPolynomial
    t_cap: int

    @property
    def denominator_power(self) -> int:
        return self.s + 1

    @property
    def degree(self) -> int | None:
        """Total t-degree of the rational function, λ has weight 0, None for F = 0."""
        top = t_degree(self.numerator)
        return None if top is None else top - self.denominator_power

    def leading(self) -> TLPolynomial:
        """The t-leading part LC·t^{deg} / (4t)^{s+1}, a λ-polynomial times one power of t."""
        top = t_degree(self.numerator)
        if top is None:
            return {}
        scale = Fraction(1, 4 ** (self.s + 1))
        return {(a - self.denominator_power, b): c * scale for (a, b), c in self.numerator.items() if a == top}


def f_residue(k: int, s: int, t_cap: int | None = None) -> FResidue:
    """F(k,s) = Res_{Y=0} [(1 - λY²/2)(1 - Y²t²) + 4t]^k / (Y^{2s}(e^{Y/2}(1 + Yt)² - e^{-Y/2}(1 - Yt)²)).

    Args:
        k: the power of the numerator, k >= 0.
        s: half the extra pole order, s >= 0.
        t_cap: the t-precision of the expansion of F, at least k + 2s + 2.
    Returns:
        F(k, s), with numerator F·(1 + 4t)^{s+1} checked to be a polynomial of t-degree at most k + 2s.
    Raises:
        UsageError: k or s is negative.
        DomainError: the numerator is not a polynomial of the expected degree.
    """
    if k < 0 or s < 0:
        raise UsageError(f"F({k}, {s}) needs k, s >= 0")
    cap = max(k + 2 * s + 2, t_cap or 0)
    caps = _ORDER.make_caps(0, Y1=2 * s + 2, t=cap, lam=k)
    ring = IteratedLaurentSeries(_ORDER, {(0,) * _ORDER.size: 1}, caps)
    y = ring.variable("Y1")
    t = ring.variable("t")
    lam = ring.variable("lam")
    yt = mul(y, t)
    denominator = mul(exp_series(y / 2), (1 + yt) ** 2) - mul(exp_series(-y / 2), (1 - yt) ** 2)
    base = mul(1 - mul(lam, y * y) / 2, 1 - yt * yt) + t.scale(4)
    integrand = mul(base**k, invert(denominator.shift({"Y1": -1})))
    value = residue(integrand.shift({"Y1": -2 * s - 1}), "Y1")
    series = {(e[1], e[3]): c for e, c in value.terms.items()}

    numerator = series
    factor = {(0, 0): Fraction(1), (1, 0): Fraction(4)}
    for _ in range(s + 1):
        numerator = _truncated_product(numerator, factor, cap)
    overflow = {key: c for key, c in numerator.items() if key[0] > k + 2 * s}
    if overflow:
        raise DomainError(f"F({k}, {s})·(1 + 4t)^{s + 1} is not a polynomial of degree <= {k + 2 * s}: {overflow}")
    logger.debug("F(%d, %d) has total degree %s", k, s, t_degree(numerator))
    return FResidue(k, s, numerator, series, cap)


def _truncated_product(p: TLPolynomial, q: TLPolynomial, t_cap: int) -> TLPolynomial:
    result: TLPolynomial = {}
    for (a1, b1), c1 in p.items():
        for (a2, b2), c2 in q.items():
            if a1 + a2 <= t_cap:
                key = (a1 + a2, b1 + b2)
                result[key] = result.get(key, 0) + c1 * c2
    return {key: c for key, c in result.items() if c}


def g_closed_form(k: int, s: int) -> TLPolynomial | None:
    """The printed closed form of G(k, s) where one exists.

    G(k, s) = (-1)^s 2^{3k-2s-2} t^{k+s-1} for k <= s, which includes G(0, s),
    and G(s+1, s) = (-1)^s (2^{s+1} - 1) t^{2s}.
    """
    if k <= s:
        return {(k + s - 1, 0): (-1) ** s * Fraction(2) ** (3 * k - 2 * s - 2)}
    if k == s + 1:
        return {(2 * s, 0): Fraction((-1) ** s * (2 ** (s + 1) - 1))}
    return None


@dataclass
class FGTable:
    """Memoised F(k, s) and G(k, s), safe to share between threads."""

    _f: dict[tuple[int, int], FResidue] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def f(self, k: int, s: int) -> FResidue:
        with self._lock:
            cached = self._f.get((k, s))
        if cached is not None:
            return cached
        value = f_residue(k, s)
        with self._lock:
            return self._f.setdefault((k, s), value)

    def g(self, k: int, s: int) -> TLPolynomial:
        """G(k, s), the degree k+s-1 part of F(k, s), 0 for s = -1 or when F has lower degree."""
        if s == -1:
            return {}
        entry = self.f(k, s)
        if entry.degree != k + s - 1:
            return {}
        return entry.leading()

    def recurrence_defect(self, k: int, s: int) -> TLPolynomial:
        """G(k+1, s) - 4t·G(k, s) + t²·G(k, s-1), empty when the recurrence holds."""
        defect = _add(self.g(k + 1, s), self.g(k, s), Fraction(-4), 1)
        return _add(defect, self.g(k, s - 1), Fraction(1), 2)

    def fill(self, k_max: int, s_max: int) -> "FGTable":
        for k in range(k_max + 1):
            for s in range(s_max + 1):
                self.f(k, s)
        return self

    @property
    def entries(self) -> dict[tuple[int, int], FResidue]:
        with self._lock:
            return dict(self._f)


def g_table(k_max: int, s_max: int, table: FGTable | None = None) -> FGTable:
    """F and G for 0 <= k <= k_max, 0 <= s <= s_max."""
    if k_max < 0 or s_max < 0:
        raise UsageError("table bounds must be nonnegative")
    return (table or FGTable()).fill(k_max, s_max)


def thaddeus_chern(g: int, r: int, table: FGTable | None = None, t_cap: int | None = None) -> TLPolynomial:
    """(-1)^{g-1-r} 2^{g-1-2r} F(g, g-1-r) expanded in t, the value of ∫ (a₂)^r exp(f₂ + λΣb₂^k b₂^{k+g}) c(t) on M(2,1).

    Raises:
        UsageError: r is outside 0..g-1.
    """
    s = g - 1 - r
    if s < 0 or r < 0:
        raise UsageError(f"a₂-power {r} is outside 0..{g - 1}")
    entry = f_residue(g, s, t_cap) if t_cap is not None or table is None else table.f(g, s)
    factor = (-1) ** s * Fraction(2) ** (g - 1 - 2 * r)
    return {key: c * factor for key, c in entry.series.items()}
