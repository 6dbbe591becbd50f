import logging
from concurrent.futures import Executor
from dataclasses import replace
from fractions import Fraction

from moduli_py.formulas.base import IResidueFormula
from moduli_py.grassmann import GrassmannElement, quadratic_form
from moduli_py.lie import RootData, coroot
from moduli_py.models import ChernPairing, EtaSpec, RankDegreeGenus
from moduli_py.series import IteratedLaurentSeries, VariableOrder, exp_series, invert, mul, power_binomial, todd

logger = logging.getLogger(__name__)


def z_vector(n: int, i: int, j: int) -> list[Fraction]:
    """Coefficients of Z_{i,j} = -ζ_{i-1} + ζ_i + ζ_{j-1} - ζ_j in ζ_1, ..., ζ_{n-1}, with ζ_0 = ζ_n = 0."""
    z = [Fraction(0)] * (n - 1)
    for index, sign in ((i - 1, -1), (i, 1), (j - 1, 1), (j, -1)):
        if 1 <= index <= n - 1:
            z[index - 1] += sign
    return z


def difference(root_data: RootData, p: int, q: int) -> IteratedLaurentSeries:
    """X_p - X_q."""
    xs = root_data.x_coordinates
    return xs[p - 1] - xs[q - 1]


class ChernFormula(IResidueFormula):
    """The residue formula for ∫_{M(n,d)} η·c(M(n,d))(t).

    t is the innermost expansion variable. f_2 is always absorbed as exp f_2, explicit f_r with r >= 3 are read off
    through δ_r, so one evaluation gives the pairing of η·f_2^s with every c_r at once.
    """

    fixed_parameters = ("t",)

    def __init__(self, rdg: RankDegreeGenus, spec: EtaSpec, caps_override: int | None = None) -> None:
        stripped = replace(spec, f={r: s for r, s in spec.f.items() if r != 2})
        if 2 in spec.f:
            logger.info("f_2 in %s is absorbed as exp f_2, its power is fixed by degree", spec)
        super().__init__(rdg, stripped, caps_override)

    @property
    def t_cap(self) -> int:
        """(n²-1)(g-1), the highest Chern class that can pair nontrivially."""
        return self.rdg.dim

    def t_pole(self) -> int:
        return 1 + self.t_cap + self.delta_total

    def parameter_caps(self, scale: int) -> dict[str, int]:
        return {"t": self.t_cap, "eps": 0, "lam": self.lam_cap}

    def v_factor(self, p: int, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """V_p(X, t), expanded with t infinitesimal, equal to 1 at t = 0."""
        ring = self.ring(caps)
        t = ring.variable("t")
        result = ring.one()
        for q in range(1, self.n + 1):
            numerators = (difference(self.root_data, q, p), difference(self.root_data, p + 1, q))
            denominators = (difference(self.root_data, p, q), difference(self.root_data, q, p + 1))
            for x in numerators:
                result = mul(result, 1 + mul(x.truncate(caps), t, caps), caps)
            for x in denominators:
                result = mul(result, invert(1 + mul(x.truncate(caps), t, caps)), caps)
        return result

    def t_factor(self, p: int, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """1/(1 - exp(dq(ê_p))·V_p).

        With a = dq(ê_p) = N_p - Y_p this is T(a)/(Y_p - N_p) · 1/(1 - w), w = (V_p - 1)·T(-a)/(Y_p - N_p).
        """
        margin = 2 * (1 + self.delta_total) * (self.t_cap + 1)
        wide = self.widen(caps, **{f"Y{p}": margin})
        ring = self.ring(wide)
        y = ring.variable(f"Y{p}")
        nilpotent = self.nilpotent_direction(coroot(self.n, p)).truncate(wide)
        a = nilpotent - y
        pole = invert(y - nilpotent)
        w = mul(mul(self.v_factor(p, wide) - 1, todd(-a), wide), pole, wide)
        factor = mul(mul(todd(a), pole, wide), invert(1 - w), wide)
        return factor.truncate(caps)

    def extra_factors(self, caps: tuple[int, ...]) -> list[IteratedLaurentSeries]:
        """∏_{p≠q} (1 + (X_p - X_q)t)^{g-1+c̃_q-c̃_p}."""
        t = self.ring(caps).variable("t")
        c = self.root_data.c_tilde
        factors = []
        for p in range(1, self.n + 1):
            for q in range(1, self.n + 1):
                if p == q:
                    continue
                u = mul(difference(self.root_data, p, q).truncate(caps), t, caps)
                factors.append(power_binomial(u, self.g - 1 + c[q - 1] - c[p - 1]))
        return factors

    def grassmann_factor(self, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """Berezin integral of exp(-Σ ζ_i^k ζ_j^{k+g} M_ij) with
        M = -∂²q + Σ_{i<j} 2t/(1 - (X_i - X_j)²t²)·z zᵀ - λvvᵀ.
        """
        rows = self.n - 1
        ring = self.ring(caps)
        t = ring.variable("t")
        hessian = self.hessian_q(caps)
        twist = self.lambda_matrix(caps)
        matrix = [[-hessian[i][k] - twist[i][k] for k in range(rows)] for i in range(rows)]
        for i in range(1, self.n + 1):
            for j in range(i + 1, self.n + 1):
                root = self.root_data.root(i, j).truncate(caps)
                square = mul(mul(root, root, caps), mul(t, t, caps), caps)
                weight = mul(t.scale(2), invert(1 - square), caps)
                z = z_vector(self.n, i, j)
                for a in range(rows):
                    for b in range(rows):
                        if z[a] and z[b]:
                            matrix[a][b] = matrix[a][b] + weight.scale(z[a] * z[b])
        return self.berezin_factor(matrix, caps)

    def exponential_factor(self, shift: tuple[Fraction, ...], caps: tuple[int, ...]) -> IteratedLaurentSeries:
        """exp(dq_X(w·c̃))."""
        return exp_series(self.dq(shift).truncate(caps))

    def _extract(self, series: IteratedLaurentSeries) -> dict[int, dict[int, Fraction]]:
        deltas = {f"d{r}": self.spec.f.get(r, 0) for r in range(3, self.n + 1)}
        coefficients: dict[int, dict[int, Fraction]] = {}
        for r in range(self.t_cap + 1):
            row = {j: series.coefficient({"t": r, "lam": j, **deltas}) for j in range(self.lam_cap + 1)}
            coefficients[r] = {j: c for j, c in row.items() if c}
        return coefficients

    async def chern_pair(self, pool: Executor) -> ChernPairing:
        """The t-polynomial ∫ η·exp(f_2)·c(t), each coefficient a polynomial in λ.

        Coefficients are scaled by ∏_{r>=3} s_r! for the explicit f_r powers. The f_2 power is left to
        `ChernPairing.monomial_coefficient`.
        """
        evaluation = await self.stable_evaluate(self._extract, pool)
        weight = self.spec.f_weight
        coefficients = {r: {j: c * weight for j, c in row.items()} for r, row in evaluation.value.items()}
        pairing = ChernPairing(self.spec, self.g, coefficients, evaluation.plan.named(), evaluation.cap_check_passed)
        logger.info("∫ %s·exp(f_2)·c(t) has t-degree %s", self.spec, pairing.degree)
        return pairing


def chern_character(
    n: int, d: int, g: int, lattice_shift: tuple[int, ...] | None = None, caps: tuple[int, ...] | None = None
) -> GrassmannElement:
    """The Chern character of M(n,d) restricted to one fixed component, with coefficients in Y_1, ..., Y_{n-1}.

    (1 - g) + Σ_{i,j} e^{X_i - X_j}(g - 1 + ω_j - ω_i) - Σ_{i<j} Σ_k Z_{i,j}^k Z_{i,j}^{k+g}(e^{X_i - X_j} + e^{X_j - X_i})
    with ω = c̃ + lattice_shift.

    Args:
        n: the rank.
        d: the degree, coprime to n.
        g: the genus.
        lattice_shift: the lattice point Λ₀ labelling the component, 0 by default.
        caps: truncation caps of the coefficients, Y-degree 2g by default.
    Returns:
        the Grassmann element, its scalar part has constant term (n²-1)(g-1).
    """
    rdg = RankDegreeGenus(n, d, g)
    order = VariableOrder.for_rank(n)
    if caps is None:
        caps = order.make_caps(0, **{f"Y{j}": 2 * g for j in range(1, n)})
    root_data = RootData(n, d, order)
    omega = [c + (lattice_shift[i] if lattice_shift else 0) for i, c in enumerate(root_data.c_tilde)]
    ring = IteratedLaurentSeries(order, {(0,) * order.size: 1}, caps)

    def e(i: int, j: int) -> IteratedLaurentSeries:
        return exp_series(difference(root_data, i, j).truncate(caps)) if i != j else ring.one()

    scalar = ring.constant(1 - g)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            scalar = scalar + e(i, j).scale(g - 1 + omega[j - 1] - omega[i - 1])
    rows = n - 1
    zero = ring.zero()
    matrix = [[zero] * rows for _ in range(rows)]
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            weight = e(i, j) + e(j, i)
            z = z_vector(n, i, j)
            for a in range(rows):
                for b in range(rows):
                    if z[a] and z[b]:
                        matrix[a][b] = matrix[a][b] + weight.scale(z[a] * z[b])
    logger.debug("Chern character at %s built over caps %s", rdg, caps)
    return quadratic_form(matrix, g) + GrassmannElement(rows, g, ring).scalar(scalar)
