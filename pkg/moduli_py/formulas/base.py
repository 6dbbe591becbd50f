import asyncio
import logging
from abc import abstractmethod
from concurrent.futures import Executor
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable, Generic, Iterable, TypeVar

from moduli_py.exceptions import CapViolationError, TruncationError
from moduli_py.grassmann import berezin, berezin_quadratic, grassmann_exp, linear_form, quadratic_form, wedge
from moduli_py.lie import RootData, coroot
from moduli_py.models import EtaSpec, RankDegreeGenus, WeylElement
from moduli_py.series import IteratedLaurentSeries, VariableOrder, invert, mul, residue

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass
class CapPlan:
    """Truncation caps of one evaluation.

    Caps are derived from pole budgets: the residue target Y_j^{-1} plus every pole order Y_j can pick up from the
    factors of the integrand, processed from the innermost residue variable outwards.
    """

    order: VariableOrder
    caps: tuple[int, ...]
    budgets: dict[str, int] = field(default_factory=dict)
    fixed: frozenset[str] = frozenset()

    def named(self) -> dict[str, int]:
        return {name: cap for name, cap in zip(self.order.names, self.caps) if name in self.budgets}

    def widened(self, margin: int) -> "CapPlan":
        """The same plan with every budgeted cap outside `fixed` raised by `margin`."""
        caps = tuple(
            cap if i in self.order.nilpotent_indices or name not in self.budgets or name in self.fixed else cap + margin
            for i, (name, cap) in enumerate(zip(self.order.names, self.caps))
        )
        return CapPlan(self.order, caps, self.budgets, self.fixed)


@dataclass
class Evaluation(Generic[T]):
    value: T
    plan: CapPlan
    cap_check_passed: bool
    terms: list[tuple[WeylElement, T]]


class IResidueFormula:
    """An iterated-residue formula for pairings on M(n,d), summed over the Weyl group W_{n-1}.

    The integrand of each Weyl element is a product of factors, all but the exponential one independent of the
    element. Subclasses provide the factors and the parameter caps, this class plans the truncation, multiplies,
    takes the residues innermost first and checks that the extracted value survives larger caps.

    Available formulas: `PairingFormula`, `ChernFormula`
    """

    fixed_parameters: tuple[str, ...] = ()
    """@private

    Parameters whose cap is exact by construction and stays put in the truncation check.
    """

    def __init__(self, rdg: RankDegreeGenus, spec: EtaSpec, caps_override: int | None = None) -> None:
        self.rdg = rdg
        self.spec = spec.validate(rdg)
        self.n = rdg.n
        self.g = rdg.g
        self.caps_override = caps_override
        self.order = VariableOrder.for_rank(self.n, {r: spec.f.get(r, 0) for r in range(3, self.n + 1)})
        self.root_data = RootData(self.n, rdg.d, self.order)

    @property
    def root_power(self) -> int:
        """The exponent 2g-2 of each root in the denominator."""
        return 2 * self.g - 2

    @property
    def delta_total(self) -> int:
        """Σ N_r over the nilpotent parameters."""
        return sum(self.spec.f.get(r, 0) for r in range(3, self.n + 1))

    @property
    def lam_cap(self) -> int:
        return (self.n - 1) * self.g if self.spec.lam else 0

    @property
    def prefactor(self) -> Fraction:
        """(-1)^{n(n-1)(g-1)/2} / n!."""
        n, g = self.n, self.g
        return Fraction((-1) ** (n * (n - 1) * (g - 1) // 2), factorial(n))

    @abstractmethod
    def t_pole(self) -> int:
        """@private

        Pole order in Y_j contributed by the j-th denominator factor.
        """
        raise NotImplementedError()

    @abstractmethod
    def parameter_caps(self, scale: int) -> dict[str, int]:
        """@private"""
        raise NotImplementedError()

    @abstractmethod
    def t_factor(self, j: int, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """@private"""
        raise NotImplementedError()

    @abstractmethod
    def grassmann_factor(self, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """@private"""
        raise NotImplementedError()

    @abstractmethod
    def exponential_factor(self, shift: tuple[Fraction, ...], caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """@private"""
        raise NotImplementedError()

    def extra_factors(self, caps: tuple[int, ...]) -> list[IteratedLaurentSeries]:
        """@private"""
        return []

    def ring(self, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """The constant 1 under `caps`, used to build every other series."""
        return IteratedLaurentSeries(self.order, {(0,) * self.order.size: 1}, caps)

    def widen(self, caps: tuple[int, ...], **margins: int) -> tuple[int, ...]:
        """Caps raised by per-variable margins."""
        raised = list(caps)
        for name, margin in margins.items():
            raised[self.order.index(name)] += margin
        return tuple(raised)

    def cap_plan(self, scale: int = 1) -> CapPlan:
        """Caps from pole budgets, `scale` multiplies every budget."""
        n = self.n
        budgets: dict[str, int] = {}
        y_caps: dict[int, int] = {}
        for j in range(n - 1, 0, -1):
            pole = self.t_pole()
            for k in range(j + 1, n + 1):
                pole += self.root_power + sum(y_caps[l] for l in range(j + 1, k))
            y_caps[j] = -1 + scale * pole
            budgets[f"Y{j}"] = pole
        if self.caps_override is not None:
            for j, cap in y_caps.items():
                if self.caps_override < cap:
                    logger.warning("cap override %d for Y%d is below the budget %d", self.caps_override, j, cap)
                y_caps[j] = self.caps_override
        parameters = self.parameter_caps(scale)
        budgets.update({name: cap for name, cap in parameters.items()})
        caps = self.order.make_caps(0, **{f"Y{j}": cap for j, cap in y_caps.items()}, **parameters)
        plan = CapPlan(self.order, caps, budgets, frozenset(self.fixed_parameters))
        logger.info("cap plan for %s at n=%d g=%d: %s", self.spec, n, self.g, plan.named())
        return plan

    def dq(self, v: tuple[Fraction, ...]) -> IteratedLaurentSeries:
        """dσ_2(v) + Σ_r δ_r dσ_r(v)."""
        total = self.root_data.d_sigma(2, v)
        return total + self.nilpotent_direction(v)

    def nilpotent_direction(self, v: tuple[Fraction, ...]) -> IteratedLaurentSeries:
        """Σ_r δ_r dσ_r(v)."""
        total = self.root_data.sigma(2).zero()
        for r in range(3, self.n + 1):
            total = total + mul(self.root_data.d_sigma(r, v), total.variable(f"d{r}"))
        return total

    def hessian_q(self, caps: tuple[int, ...]) -> list[list[IteratedLaurentSeries]]:
        """∂²(σ_2 + Σ δ_r σ_r)(ê_i, ê_j)."""
        rows = self.n - 1
        ring = self.ring(caps)
        hessian = [[entry.truncate(caps) for entry in row] for row in self.root_data.hessian_sigma(2)]
        for r in range(3, self.n + 1):
            delta = ring.variable(f"d{r}")
            extra = self.root_data.hessian_sigma(r)
            hessian = [[hessian[i][k] + mul(delta, extra[i][k], caps) for k in range(rows)] for i in range(rows)]
        return hessian

    def lambda_matrix(self, caps: tuple[int, ...]) -> list[list[IteratedLaurentSeries]]:
        """λ v vᵀ with v_j = dσ_2(ê_j), the matrix of λ Σ_k b_2^k b_2^{k+g}."""
        lam = self.ring(caps).variable("lam")
        v = [self.root_data.d_sigma(2, coroot(self.n, j)).truncate(caps) for j in range(1, self.n)]
        return [[mul(lam, mul(x, y, caps), caps) for y in v] for x in v]

    def berezin_factor(self, matrix: list[list[IteratedLaurentSeries]], caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """∫_{T^{2g}} exp(-Σ ζ_i^k ζ_j^{k+g} M_ij) times the b-factors of the monomial in (r, k) order."""
        if not self.spec.b:
            return berezin_quadratic(matrix, self.g).truncate(caps)
        sign, factors = self.spec.sorted_b()
        if sign == 0:
            return self.ring(caps).zero()
        element = grassmann_exp(quadratic_form(matrix, self.g))
        for r, k in factors:
            vector = [self.root_data.d_sigma(r, coroot(self.n, j)).truncate(caps) for j in range(1, self.n)]
            element = wedge(element, linear_form(vector, k, self.g))
        value = berezin(element).truncate(caps)
        return value if sign > 0 else -value

    def numerator(self, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """∏ σ_r^{m_r}."""
        result = self.ring(caps)
        for r, m in sorted(self.spec.a.items()):
            result = mul(result, self.root_data.sigma(r).truncate(caps) ** m)
        return result

    def discriminant_inverse(self, caps: tuple[int, ...]) -> list[IteratedLaurentSeries]:
        """1/(X_i - X_j)^{2g-2} for every root, each with a pole in its outermost variable only."""
        factors = []
        for i in range(1, self.n + 1):
            for j in range(i + 1, self.n + 1):
                power = self.root_data.root(i, j) ** self.root_power
                factors.append(invert(power.with_caps(caps)))
        return factors

    def common_factor(self, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """Product of every factor that does not depend on the Weyl element."""
        factors = self.discriminant_inverse(caps)
        factors += [self.t_factor(j, caps) for j in range(1, self.n)]
        factors.append(self.numerator(caps))
        factors += self.extra_factors(caps)
        factors.append(self.grassmann_factor(caps))
        product = self.ring(caps)
        for factor in factors:
            product = mul(product, factor, caps)
            logger.debug("partial product has %d terms", len(product.terms))
        return product

    def weyl_orbit(self) -> dict[tuple[Fraction, ...], list[WeylElement]]:
        """Weyl elements grouped by the shifted vector w·c̃ they produce."""
        orbit: dict[tuple[Fraction, ...], list[WeylElement]] = {}
        for w in self.root_data.weyl_elements():
            orbit.setdefault(w.act(self.root_data.c_tilde), []).append(w)
        return orbit

    def residues(self, series: IteratedLaurentSeries) -> IteratedLaurentSeries:
        """Res_{Y_1} ... Res_{Y_{n-1}}, innermost first."""
        for j in range(self.n - 1, 0, -1):
            series = residue(series, f"Y{j}")
        return series

    def weyl_term(
        self, shift: tuple[Fraction, ...], common: IteratedLaurentSeries, caps: tuple[int, ...]
    ) -> IteratedLaurentSeries:
        integrand = mul(common, self.exponential_factor(shift, caps), caps)
        return self.residues(integrand).scale(self.prefactor)

    async def evaluate(self, plan: CapPlan, pool: Executor) -> list[tuple[list[WeylElement], IteratedLaurentSeries]]:
        """Per-orbit residue series under one cap plan, each already multiplied by the global prefactor."""
        loop = asyncio.get_running_loop()
        common = await loop.run_in_executor(pool, self.common_factor, plan.caps)
        orbit = self.weyl_orbit()
        series = await asyncio.gather(
            *(loop.run_in_executor(pool, self.weyl_term, shift, common, plan.caps) for shift in orbit)
        )
        return [(elements, s) for elements, s in zip(orbit.values(), series)]

    async def stable_evaluate(self, extract: Callable[[IteratedLaurentSeries], T], pool: Executor) -> Evaluation[T]:
        """Evaluate and extract under the planned caps, then again with every cap raised by 2.

        A mismatch or cap violation triggers one retry with doubled budgets.

        Raises:
            TruncationError: the doubled budgets still do not reproduce the value.
        """
        last_error: Exception | None = None
        for scale in (1, 2):
            plan = self.cap_plan(scale)
            try:
                orbits = await self.evaluate(plan, pool)
                checks = await self.evaluate(plan.widened(2), pool)
                terms = [(elements, extract(s)) for elements, s in orbits]
                value = extract(_total(orbits))
                check = extract(_total(checks))
            except CapViolationError as e:
                logger.info("evaluation at scale %d hit a cap: %s", scale, e)
                last_error = e
                continue
            if value == check:
                weyl_terms = [(w, v) for elements, v in terms for w in elements]
                return Evaluation(value, plan, True, weyl_terms)
            logger.info("value changed under larger caps at scale %d, retrying with doubled budgets", scale)
            last_error = None
        raise TruncationError(f"could not stabilise the pairing of {self.spec}: {last_error or 'values differ'}")


def _total(orbits: Iterable[tuple[list[WeylElement], IteratedLaurentSeries]]) -> IteratedLaurentSeries:
    total = None
    for elements, s in orbits:
        term = s.scale(len(elements))
        total = term if total is None else total + term
    return total
