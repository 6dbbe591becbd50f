import logging
import random
from fractions import Fraction
from math import factorial

import sympy

from moduli_py.enums import CheckStatus
from moduli_py.fg import g_closed_form, g_table
from moduli_py.formulas import PairingFormula
from moduli_py.grassmann import berezin, grassmann_exp, quadratic_form
from moduli_py.models import CheckOutcome, EtaSpec, RankDegreeGenus
from moduli_py.moduli import ModuliClient
from moduli_py.schemas import resolve_eta
from moduli_py.series import IteratedLaurentSeries, VariableOrder
from moduli_py.utils import complementary_monomials

logger = logging.getLogger(__name__)

SEED = 20240229
"""@private"""


class SignFlippedPairingFormula(PairingFormula):
    """A deliberately broken formula, the Berezin integral carries the wrong sign."""

    def grassmann_factor(self, caps: tuple[int, ...]) -> IteratedLaurentSeries:
        return -super().grassmann_factor(caps)


def _outcome(name: str, ok: bool, detail: str, **data) -> CheckOutcome:
    outcome = CheckOutcome(name, CheckStatus.PASS if ok else CheckStatus.FAIL, detail, data)
    log = logger.info if ok else logger.warning
    log("%s: %s (%s)", name, outcome.status.value, detail)
    return outcome


class Verifier:
    """Runs the desk-scale acceptance checks against one client."""

    def __init__(self, client: ModuliClient, quick: bool = False) -> None:
        self.client = client
        self.quick = quick
        self.random = random.Random(SEED)
        self.cap_checks: list[bool] = []

    async def run(self) -> list[CheckOutcome]:
        checks = [
            self.top_power_vanishing,
            self.sharpness_witness,
            self.nonvanishing_residue,
            self.berezin_determinant,
            self.g_closed_forms,
            self.chern_top_class,
            self.eps_polynomiality,
        ]
        if not self.quick:
            checks += [self.pontryagin_rank3, self.chern_experiment]
        outcomes = [await check() for check in checks]
        outcomes.append(
            _outcome(
                "truncation_independence",
                all(self.cap_checks),
                f"{len(self.cap_checks)} values reproduced with every cap raised by 2",
            )
        )
        return outcomes

    async def _pair(self, rdg: RankDegreeGenus, spec: EtaSpec) -> Fraction:
        result = await self.client.pair(rdg, spec)
        self.cap_checks.append(result.cap_check_passed)
        return result.value

    async def top_power_vanishing(self) -> CheckOutcome:
        """(a₂)^g times every complementary monomial pairs to 0 on M(2,1)."""
        failures = []
        total = 0
        for g in (2,) if self.quick else (2, 3):
            rdg = RankDegreeGenus(2, 1, g)
            power = EtaSpec(a={2: g})
            for complement in complementary_monomials(2, g, power.degree):
                total += 1
                spec = power.times(EtaSpec.from_monomial(complement))
                value = await self._pair(rdg, spec)
                if value:
                    failures.append(f"g={g} {spec}: {value}")
        return _outcome("top_power_vanishing", not failures, f"{total} pairings", failures=failures)

    async def sharpness_witness(self) -> CheckOutcome:
        """∫_{M(2,1)} η₀·exp f₂ = (-2)^{g-1}."""
        values = {}
        for g in (2, 3) if self.quick else (2, 3, 4):
            rdg = RankDegreeGenus(2, 1, g)
            values[g] = await self.client.pair_class(rdg, resolve_eta("eta0_expf2", rdg))
        wrong = {g: str(v) for g, v in values.items() if v != (-2) ** (g - 1)}
        return _outcome("sharpness_witness", not wrong, f"values {values}", wrong=wrong)

    async def nonvanishing_residue(self) -> CheckOutcome:
        values = {n: await self.client.nonvanishing_residue(n, 1) for n in ((2,) if self.quick else (2, 3))}
        ok = all(v == factorial(n - 1) for n, v in values.items())
        return _outcome("nonvanishing_residue", ok, f"values {values}")

    def _random_matrix(self, rows: int, order: VariableOrder) -> list[list[IteratedLaurentSeries]]:
        ring = IteratedLaurentSeries(order, {(0,) * order.size: 1})
        return [
            [ring.constant(Fraction(self.random.randint(-9, 9), self.random.randint(1, 5))) for _ in range(rows)]
            for _ in range(rows)
        ]

    async def berezin_determinant(self) -> CheckOutcome:
        """berezin(exp(-Σ ζζM)) = det(M)^g for random rational M, det from sympy."""
        order = VariableOrder.for_rank(2)
        shapes = [(rows, g) for rows in (1, 2, 3) for g in (1, 2, 3) if rows * g <= 6]
        failures = []
        samples = 10 if self.quick else 50
        for _ in range(samples):
            rows, g = self.random.choice(shapes)
            matrix = self._random_matrix(rows, order)
            value = berezin(grassmann_exp(quadratic_form(matrix, g))).coefficient({})
            oracle = sympy.Matrix(
                [[sympy.Rational(e.coefficient({}).numerator, e.coefficient({}).denominator) for e in row] for row in matrix]
            ).det() ** g
            if sympy.Rational(value.numerator, value.denominator) != oracle:
                failures.append(f"rows={rows} g={g}: {value} != {oracle}")
        return _outcome("berezin_determinant", not failures, f"{samples} random matrices", failures=failures)

    async def g_closed_forms(self) -> CheckOutcome:
        s_max = 3 if self.quick else 5
        table = g_table(s_max + 1, s_max)
        failures = []
        for s in range(s_max + 1):
            for k in range(s + 2):
                expected = g_closed_form(k, s)
                if expected is not None and table.g(k, s) != expected:
                    failures.append(f"G({k},{s}) = {table.g(k, s)}, expected {expected}")
        for s in range(s_max + 1):
            for k in range(s_max + 1):
                if table.recurrence_defect(k, s):
                    failures.append(f"recurrence fails at k={k}, s={s}")
        return _outcome("g_closed_forms", not failures, f"s <= {s_max}", failures=failures)

    async def chern_top_class(self) -> CheckOutcome:
        failures = []
        for g in (2,) if self.quick else (2, 3):
            top = await self.client.chern_top_n2(g)
            if not top.consistent or top.multiple != top.expected:
                failures.append(f"g={g}: c_{2 * g - 2} = {top.multiple}·(a₂)^{g - 1}, expected {top.expected}")
            pairing = await self.client.chern(RankDegreeGenus(2, 1, g), EtaSpec())
            self.cap_checks.append(pairing.cap_check_passed)
            coefficient = pairing.coefficient(2 * g - 2)
            if pairing.degree is None or pairing.degree > 2 * g - 2 or coefficient != 2 ** (g - 1) * (2**g - 1):
                failures.append(f"g={g}: degree {pairing.degree}, top coefficient {coefficient}")
        return _outcome("chern_top_class", not failures, "Poincaré duality and top coefficient", failures=failures)

    def _random_spec(self, rdg: RankDegreeGenus) -> EtaSpec:
        while True:
            a = {r: self.random.randint(0, 2) for r in range(2, rdg.n + 1)}
            b = sorted({(self.random.randint(2, rdg.n), self.random.randint(1, 2 * rdg.g)) for _ in range(self.random.randint(0, 2))})
            spec = EtaSpec(a=a, b=list(b))
            if spec.degree <= rdg.real_dim:
                return spec

    async def eps_polynomiality(self) -> CheckOutcome:
        """No negative ε-powers, ε-degree and ε-valuation within their bounds."""
        cases = [RankDegreeGenus(2, 1, 2)] if self.quick else [RankDegreeGenus(2, 1, 2), RankDegreeGenus(3, 1, 2)]
        samples = 6 if self.quick else 30
        failures = []
        for rdg in cases:
            eps = VariableOrder.for_rank(rdg.n).index("eps")
            for _ in range(samples):
                spec = self._random_spec(rdg)
                series, (degree, valuation) = await self.client.pair_canonical(rdg, spec)
                powers = {e[eps] for e in series.terms}
                if powers and (min(powers) < valuation or max(powers) > degree):
                    failures.append(f"{rdg} {spec}: ε-powers {sorted(powers)}, bounds [{valuation}, {degree}]")
        return _outcome("eps_polynomiality", not failures, f"{samples} specs per case", failures=failures)

    async def pontryagin_rank3(self) -> CheckOutcome:
        report = await self.client.pontryagin_check(RankDegreeGenus(3, 1, 2))
        detail = f"{len(report.entries)} pairings above {report.threshold}, witness {report.witness}"
        return _outcome("pontryagin_rank3", report.passed, detail, counterexamples=len(report.counterexamples))

    async def chern_experiment(self) -> CheckOutcome:
        """Reported only, the vanishing above n(n-1)(g-1) is observed, not proved."""
        report = await self.client.chern_vanishing_report(RankDegreeGenus(3, 1, 2))
        detail = f"{len(report.nonvanishing)} nonvanishing above {report.threshold}, c_{report.threshold} = {report.ratio}·η₀"
        logger.info("chern_experiment: %s", detail)
        return CheckOutcome("chern_experiment", CheckStatus.REPORT, detail, {"proportional": report.proportional})


async def run_verification(client: ModuliClient, quick: bool = False) -> list[CheckOutcome]:
    return await Verifier(client, quick).run()

