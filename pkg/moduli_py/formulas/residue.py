import asyncio
import logging
from concurrent.futures import Executor
from fractions import Fraction

from moduli_py.formulas.base import IResidueFormula
from moduli_py.lie import coroot
from moduli_py.models import EtaSpec, PairingResult, RankDegreeGenus, WeylTerm
from moduli_py.series import IteratedLaurentSeries, exp_series, invert, mul, todd
from moduli_py.symfunc import discriminant_class

logger = logging.getLogger(__name__)


def eps_bounds(rdg: RankDegreeGenus, spec: EtaSpec) -> tuple[int, int]:
    """Bounds on the ε-expansion of the canonical pairing series.

    Returns:
        (degree bound, valuation bound), the valuation bound is clamped at 0.
    """
    n, g = rdg.n, rdg.g
    a_degree = sum(2 * r * m for r, m in spec.a.items())
    b_degree = sum(2 * r - 1 for r, _ in spec.b)
    degree = (rdg.real_dim - a_degree - b_degree) // 2
    valuation = max((2 * (n - 1) * (g - 1) - len(spec.b)) // 2, 0)
    return degree, valuation


class PairingFormula(IResidueFormula):
    """The residue formula for ∫_{M(n,d)} η with q replaced by εq.

    f_r classes enter through exp(ε(f_2 + δ_3 f_3 + ... + δ_n f_n)), so the pairing of a monomial with f-exponents
    s_r is read off at ε^{Σ s_r} ∏ δ_r^{s_r}.
    """

    def __init__(
        self, rdg: RankDegreeGenus, spec: EtaSpec, caps_override: int | None = None, eps_target: int | None = None
    ) -> None:
        super().__init__(rdg, spec, caps_override)
        self.eps_target = spec.f_total if eps_target is None else eps_target

    def t_pole(self) -> int:
        return 1 + self.delta_total

    def parameter_caps(self, scale: int) -> dict[str, int]:
        return {"eps": self.eps_target + scale * (self.n - 1), "t": 0, "lam": self.lam_cap}

    def t_factor(self, j: int, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """1/(1 - exp(ε(N_j - Y_j))) = ε^{-1} T(ε(N_j - Y_j)) / (Y_j - N_j)."""
        wide = self.widen(caps, **{f"Y{j}": 1 + self.delta_total, "eps": 1})
        ring = self.ring(wide)
        y = ring.variable(f"Y{j}")
        nilpotent = self.nilpotent_direction(coroot(self.n, j)).truncate(wide)
        x = mul(ring.variable("eps"), nilpotent - y, wide)
        factor = mul(todd(x), invert(y - nilpotent), wide)
        return factor.shift({"eps": -1}).truncate(caps)

    def grassmann_factor(self, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """Berezin integral of exp(-Σ ζ_i^k ζ_j^{k+g} M_ij) with M = ε∂²q - λvvᵀ."""
        eps = self.ring(caps).variable("eps")
        hessian = self.hessian_q(caps)
        twist = self.lambda_matrix(caps)
        rows = self.n - 1
        matrix = [[mul(eps, hessian[i][k], caps) - twist[i][k] for k in range(rows)] for i in range(rows)]
        return self.berezin_factor(matrix, caps)

    def exponential_factor(self, shift: tuple[Fraction, ...], caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """exp(ε dq_X(w·c̃))."""
        eps = self.ring(caps).variable("eps")
        return exp_series(mul(eps, self.dq(shift).truncate(caps), caps))

    def monomial(self, lam_power: int = 0) -> dict[str, int]:
        """The exponents ε^{Σ s_r} ∏ δ_r^{s_r} λ^j the pairing is read off at."""
        deltas = {f"d{r}": self.spec.f.get(r, 0) for r in range(3, self.n + 1)}
        return {"eps": self.eps_target, "lam": lam_power, **deltas}

    def orientation(self, lam_power: int = 0) -> int:
        """(-1)^{(n-1)g - P/2 - j} for the λ^j coefficient, between the quadratic sign used here and the Chern one."""
        exponent = (self.n - 1) * self.g - len(self.spec.b) // 2 - lam_power
        return -1 if exponent % 2 else 1

    @property
    def calibration(self) -> int:
        """The orientation factor of the λ^0 coefficient, the one `pair` reads off."""
        return self.orientation(0)

    async def pair_canonical(self, pool: Executor) -> IteratedLaurentSeries:
        """The Weyl-summed residue series in ε, δ_r and λ.

        Every ε-power from -(n-1) up to the target is kept, so that missing negative powers are observable.
        """
        low = -(self.n - 1)
        high = self.eps_target
        eps = self.order.index("eps")
        lam = self.order.index("lam")

        def extract(series: IteratedLaurentSeries) -> tuple:
            kept = series.select(lambda e: low <= e[eps] <= high and e[lam] <= self.lam_cap)
            return tuple(sorted(kept.terms.items()))

        evaluation = await self.stable_evaluate(extract, pool)
        caps = self.order.make_caps(0, eps=high, lam=self.lam_cap)
        return IteratedLaurentSeries(self.order, dict(evaluation.value), caps)

    async def pair(self, pool: Executor) -> PairingResult:
        """The exact pairing of the monomial against the fundamental class.

        Returns 0 without any evaluation when the degree is not 2(n²-1)(g-1).
        """
        spec = self.spec
        if spec.degree != self.rdg.real_dim:
            logger.info("%s has degree %d, not top degree %d", spec, spec.degree, self.rdg.real_dim)
            return PairingResult(spec, Fraction(0), Fraction(0), self.calibration, {}, True, [])
        monomial = self.monomial()
        evaluation = await self.stable_evaluate(lambda s: s.coefficient(monomial), pool)
        weight = spec.f_weight
        raw = evaluation.value * weight
        terms = [WeylTerm(w, value * weight * self.calibration) for w, value in evaluation.terms]
        for term in terms:
            logger.debug("Weyl element %s contributes %s", term.weyl.permutation, term.contribution)
        return PairingResult(
            spec=spec,
            value=raw * self.calibration,
            raw_value=raw,
            calibration=self.calibration,
            caps=evaluation.plan.named(),
            cap_check_passed=evaluation.cap_check_passed,
            terms=terms,
        )


async def nonvanishing_residue(
    n: int, d: int, pool: Executor, g: int = 2, formula: type[PairingFormula] = PairingFormula
) -> Fraction:
    """Σ_w Res ∏_j exp(β_j(w) Y_j) / (1 - exp(-Y_j)) with dσ_2(w·c̃) = Σ β_j(w) Y_j, read off the engine.

    The canonical series of η₀ = D^{2g-2} cancels the root denominators, what remains is the prefactor, the Berezin
    integral det(ε∂²σ_2)^g = ((-1)^{n-1} n ε^{n-1})^g and one ε^{-1} per residue. Every residue of the simplified
    integrand is 1, so the result is (n-1)!.
    """
    rdg = RankDegreeGenus(n, d, g)
    eta0 = discriminant_class(n, g).to_class("eta0")
    fill = (n - 1) * (g - 1)
    formulas = [formula(rdg, spec, eps_target=fill) for _, spec in eta0.terms]
    series = await asyncio.gather(*(f.pair_canonical(pool) for f in formulas))
    total = sum((c * s.coefficient({"eps": fill}) for (c, _), s in zip(eta0.terms, series)), Fraction(0))
    grassmann = Fraction((-1) ** ((n - 1) * g) * n**g)
    value = total / (formulas[0].prefactor * grassmann)
    logger.info("Weyl-summed nonvanishing residue at n=%d d=%d g=%d: %s", n, d, g, value)
    return value
