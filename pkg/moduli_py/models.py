import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, gcd, prod
from typing import TYPE_CHECKING

from moduli_py.enums import CheckStatus, generator_degrees
from moduli_py.exceptions import CoprimalityError, RankError, UsageError

if TYPE_CHECKING:
    from moduli_py.utils.monomials import GeneratorMonomial


@dataclass(frozen=True)
class RankDegreeGenus:
    n: int
    d: int
    g: int

    def __post_init__(self):
        if self.n < 2:
            raise RankError(f"rank {self.n} is below 2, the cohomology ring is trivial there")
        if self.g < 2:
            raise RankError(f"genus {self.g} is below 2")
        if gcd(self.n, self.d) != 1:
            raise CoprimalityError(f"rank {self.n} and degree {self.d} are not coprime")

    @property
    def dim(self) -> int:
        """Complex dimension (n²-1)(g-1)."""
        return (self.n**2 - 1) * (self.g - 1)

    @property
    def real_dim(self) -> int:
        """Real dimension, the degree of a top class."""
        return 2 * self.dim

    @property
    def pontryagin_threshold(self) -> int:
        """Degree 2n(n-1)(g-1) above which the Pontryagin ring vanishes."""
        return 2 * self.n * (self.n - 1) * (self.g - 1)

    @property
    def chern_threshold(self) -> int:
        """Index n(n-1)(g-1) above which the Chern classes are observed to vanish."""
        return self.n * (self.n - 1) * (self.g - 1)


@dataclass(frozen=True)
class WeylElement:
    """A permutation of the first n-1 coordinates of t, the n-th coordinate is fixed."""

    permutation: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise UsageError(f"{self.permutation} is not a permutation")

    def act(self, vector: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
        """Permute the first n-1 entries of `vector`."""
        k = len(self.permutation)
        return tuple(vector[self.permutation[i]] for i in range(k)) + tuple(vector[k:])


@dataclass
class EtaSpec:
    """A monomial ∏ (a_r)^{m_r} ∏ b_r^k ∏ (f_r)^{s_r}, optionally times exp(λ Σ_k b_2^k b_2^{k+g}).

    Ranks are keys of `a` and `f`, b-factors are (r, k) pairs kept in the order given. The pairing engine reorders
    them to increasing r then k and applies the permutation sign.
    """

    a: dict[int, int] = field(default_factory=dict)
    b: list[tuple[int, int]] = field(default_factory=list)
    f: dict[int, int] = field(default_factory=dict)
    lam: bool = False

    def __post_init__(self):
        self.a = {int(r): int(m) for r, m in self.a.items() if m}
        self.f = {int(r): int(s) for r, s in self.f.items() if s}
        self.b = [(int(r), int(k)) for r, k in self.b]
        if any(m < 0 for m in self.a.values()) or any(s < 0 for s in self.f.values()):
            raise UsageError("exponents of a_r and f_r must be nonnegative")

    def validate(self, rdg: RankDegreeGenus) -> "EtaSpec":
        """Check every generator index against rank and genus.

        Raises:
            RankError: a rank is outside 2..n or a b-index outside 1..2g.
        """
        for r in list(self.a) + list(self.f) + [r for r, _ in self.b]:
            if not 2 <= r <= rdg.n:
                raise RankError(f"generator rank {r} is outside 2..{rdg.n}")
        for _, k in self.b:
            if not 1 <= k <= 2 * rdg.g:
                raise RankError(f"b-index {k} is outside 1..{2 * rdg.g}")
        if self.lam and rdg.n != 2:
            raise UsageError("the λ-twisted class is only defined for rank 2")
        return self

    @property
    def degree(self) -> int:
        """Cohomological degree, without the λ-part."""
        return (
            sum((2 * r + generator_degrees["a"]) * m for r, m in self.a.items())
            + sum(2 * r + generator_degrees["b"] for r, _ in self.b)
            + sum((2 * r + generator_degrees["f"]) * s for r, s in self.f.items())
        )

    @property
    def f_total(self) -> int:
        """Σ s_r, the ε-power that carries the f-classes."""
        return sum(self.f.values())

    @property
    def f_weight(self) -> int:
        """∏ s_r!."""
        return prod(factorial(s) for s in self.f.values())

    def sorted_b(self) -> tuple[int, list[tuple[int, int]]]:
        """The b-factors in increasing (r, k) order and the sign of that reordering, 0 for a repeated factor."""
        factors = list(self.b)
        if len(set(factors)) != len(factors):
            return 0, sorted(factors)
        inversions = sum(1 for i in range(len(factors)) for j in range(i + 1, len(factors)) if factors[i] > factors[j])
        return (-1) ** inversions, sorted(factors)

    def times(self, other: "EtaSpec") -> "EtaSpec":
        """Product of two monomials, b-factors of `other` follow those of this one."""
        a = dict(self.a)
        for r, m in other.a.items():
            a[r] = a.get(r, 0) + m
        f = dict(self.f)
        for r, s in other.f.items():
            f[r] = f.get(r, 0) + s
        return EtaSpec(a=a, b=self.b + other.b, f=f, lam=self.lam or other.lam)

    def canonical(self) -> str:
        """Canonical JSON text, identical for equal specs."""
        return json.dumps(
            {
                "a": {str(r): m for r, m in sorted(self.a.items())},
                "b": [list(x) for x in self.b],
                "f": {str(r): s for r, s in sorted(self.f.items())},
                "lam": self.lam,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    def __str__(self) -> str:
        parts = [f"a{r}^{m}" if m > 1 else f"a{r}" for r, m in sorted(self.a.items())]
        parts += [f"b{r}^{k}" for r, k in self.b]
        parts += [f"f{r}^{s}" if s > 1 else f"f{r}" for r, s in sorted(self.f.items())]
        if self.lam:
            parts.append("exp(λΣbb)")
        return "*".join(parts) or "1"

    @staticmethod
    def from_monomial(monomial: "GeneratorMonomial") -> "EtaSpec":
        return EtaSpec(a=dict(monomial.a), b=list(monomial.b), f=dict(monomial.f))


@dataclass
class EtaClass:
    """A rational linear combination of EtaSpec monomials."""

    terms: list[tuple[Fraction, EtaSpec]]
    name: str | None = None

    @staticmethod
    def of(spec: EtaSpec) -> "EtaClass":
        return EtaClass([(Fraction(1), spec)])

    def times(self, spec: EtaSpec) -> "EtaClass":
        return EtaClass([(c, s.times(spec)) for c, s in self.terms], self.name)

    def __str__(self) -> str:
        if self.name:
            return self.name
        return " + ".join(f"{c}*{s}" for c, s in self.terms) or "0"


@dataclass
class SymmetricPolynomial:
    """An exact polynomial in X_1, ..., X_n, keyed by exponent vectors."""

    n: int
    terms: dict[tuple[int, ...], Fraction]


@dataclass
class SigmaPolynomial:
    """An exact polynomial in σ_2, ..., σ_n, keyed by exponent vectors (m_2, ..., m_n).

    Read with σ_r replaced by a_r it is the cohomology class p(a_2, ..., a_n).
    """

    n: int
    terms: dict[tuple[int, ...], Fraction]

    @property
    def degree(self) -> int | None:
        """Cohomological degree Σ 2r·m_r of the highest term."""
        return max((sum(2 * r * m for r, m in zip(range(2, self.n + 1), e)) for e in self.terms), default=None)

    def to_class(self, name: str | None = None) -> EtaClass:
        terms = [
            (c, EtaSpec(a={r: m for r, m in zip(range(2, self.n + 1), e)})) for e, c in sorted(self.terms.items())
        ]
        return EtaClass(terms, name)

    def __str__(self) -> str:
        parts = []
        for e, c in sorted(self.terms.items()):
            factors = "*".join(f"s{r}^{m}" if m > 1 else f"s{r}" for r, m in zip(range(2, self.n + 1), e) if m)
            parts.append(f"{c}*{factors}" if factors else str(c))
        return " + ".join(parts) or "0"


@dataclass
class WeylTerm:
    weyl: WeylElement
    contribution: Fraction


@dataclass
class PairingResult:
    """An exact pairing with its provenance.

    `raw_value` is the residue formula taken with its printed prefactor, `value` is `raw_value * calibration`.
    """

    spec: EtaSpec
    value: Fraction
    raw_value: Fraction
    calibration: int
    caps: dict[str, int]
    cap_check_passed: bool
    terms: list[WeylTerm] = field(default_factory=list)


@dataclass
class ChernPairing:
    """∫ η·c(M(n,d))(t) with f_2 absorbed as exp f_2.

    `coefficients[r][j]` is the coefficient of t^r λ^j.
    """

    spec: EtaSpec
    g: int
    coefficients: dict[int, dict[int, Fraction]]
    caps: dict[str, int]
    cap_check_passed: bool

    @property
    def degree(self) -> int | None:
        """Highest power of t with a nonzero coefficient."""
        return max((r for r, row in self.coefficients.items() if any(row.values())), default=None)

    def coefficient(self, r: int, j: int = 0) -> Fraction:
        return self.coefficients.get(r, {}).get(j, Fraction(0))

    def f2_power(self, r: int, real_dim: int) -> int | None:
        """The power of f_2 forced by degree in the t^r coefficient, None if none fits."""
        rest = real_dim - 2 * r - self.spec.degree
        if rest < 0 or rest % 2:
            return None
        return rest // 2

    def monomial_coefficient(self, r: int, real_dim: int) -> Fraction:
        """The pairing of the monomial spec·f_2^{s} against c_r, with s forced by degree."""
        s = self.f2_power(r, real_dim)
        if s is None:
            return Fraction(0)
        return self.coefficient(r) * factorial(s)


@dataclass
class CheckOutcome:
    name: str
    status: CheckStatus
    detail: str = ""
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status is not CheckStatus.FAIL


@dataclass
class PontryaginEntry:
    monomial: EtaSpec
    complement: EtaSpec
    value: Fraction


@dataclass
class PontryaginReport:
    rdg: RankDegreeGenus
    threshold: int
    entries: list[PontryaginEntry]
    witness: Fraction

    @property
    def counterexamples(self) -> list[PontryaginEntry]:
        return [entry for entry in self.entries if entry.value != 0]

    @property
    def passed(self) -> bool:
        return not self.counterexamples and self.witness != 0


@dataclass
class ChernVanishingReport:
    rdg: RankDegreeGenus
    threshold: int
    nonvanishing: list[tuple[EtaSpec, int, Fraction]]
    ratio: Fraction | None
    proportional: bool
    duality: list["DualityEntry"] = field(default_factory=list)

    @property
    def vanishes(self) -> bool:
        """Every c_r with r above the threshold pairs to 0 with the spanning set."""
        return not self.nonvanishing


@dataclass
class DualityEntry:
    """One complementary monomial x with ∫ x·c_r and ∫ x·reference."""

    monomial: EtaSpec
    chern: Fraction
    reference: Fraction


@dataclass
class ChernTopClass:
    """c_{2g-2}(M(2,1)) as a multiple of (a₂)^{g-1}, found by Poincaré duality."""

    g: int
    multiple: Fraction | None
    entries: list[DualityEntry]

    @property
    def expected(self) -> int:
        """2^{2g-2}(2^g - 1)."""
        return 2 ** (2 * self.g - 2) * (2**self.g - 1)

    @property
    def consistent(self) -> bool:
        """The multiple is the same for every entry, entries with a vanishing reference also vanish in c."""
        return self.multiple is not None and all(e.chern == self.multiple * e.reference for e in self.entries)
