import asyncio
import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import replace
from fractions import Fraction
from typing import Any, Awaitable, Callable, TypeVar

from moduli_py.caches import ResultCache, cache_key
from moduli_py.formulas import ChernFormula, PairingFormula, eps_bounds, nonvanishing_residue
from moduli_py.models import (
    ChernPairing,
    ChernTopClass,
    ChernVanishingReport,
    DualityEntry,
    EtaClass,
    EtaSpec,
    PairingResult,
    PontryaginEntry,
    PontryaginReport,
    RankDegreeGenus,
)
from moduli_py.schemas import RationalPayload, WeylTermPayload, resolve_eta
from moduli_py.series import IteratedLaurentSeries
from moduli_py.symfunc import discriminant_class
from moduli_py.utils import complementary_monomials, monomials_of_degree

logger = logging.getLogger(__name__)

T = TypeVar("T")


class ModuliClient:
    """The main client of moduli.py."""

    _cache: ResultCache | None

    def __init__(
        self,
        threads: int | None = None,
        cache: ResultCache | None = None,
        caps: int | None = None,
        verify_cache: bool = False,
        **kwargs,
    ) -> None:
        """Initialize the moduli.py client.

        Args:
            threads: worker processes for the series arithmetic, defaults to the number of CPUs.
            cache: an on-disk result cache, defaults to no caching.
            caps: a fixed cap for every residue variable, defaults to caps derived from pole budgets.
            verify_cache: recompute cache hits and warn when they differ.
            kwargs: `pairing_formula` and `chern_formula` replace the formula classes.
        """
        self._args = {
            "threads": threads or os.cpu_count() or 1,
            "caps": caps,
            "verify_cache": verify_cache,
            "pairing_formula": PairingFormula,
            "chern_formula": ChernFormula,
            **kwargs,
        }
        self._cache = cache

    def _executor(self) -> ProcessPoolExecutor:
        return ProcessPoolExecutor(max_workers=self._args["threads"])

    async def _cached(
        self,
        command: str,
        rdg: RankDegreeGenus,
        spec: EtaSpec,
        compute: Callable[[], Awaitable[T]],
        encode: Callable[[T], Any],
        decode: Callable[[Any], T],
    ) -> T:
        if self._cache is None:
            return await compute()
        extra = f"caps={self._args['caps']}"
        record = self._cache.get(cache_key(command, rdg, spec, extra))
        if record is not None and not self._args["verify_cache"]:
            return decode(record.value)
        value = await compute()
        encoded = encode(value)
        if record is not None:
            if record.value == encoded:
                logger.info("cache record for %s %s verified", command, spec)
                return value
            logger.warning("cache record for %s %s differs from recomputation, replacing it", command, spec)
        self._cache.put(command, rdg, spec, encoded, extra)
        return value

    async def _pair(self, rdg: RankDegreeGenus, spec: EtaSpec, pool: Executor) -> PairingResult:
        formula = self._args["pairing_formula"](rdg, spec, self._args["caps"])

        def encode(result: PairingResult) -> dict:
            return {
                "value": RationalPayload.of(result.value).model_dump(),
                "raw_value": RationalPayload.of(result.raw_value).model_dump(),
                "calibration": result.calibration,
                "caps": result.caps,
                "cap_check_passed": result.cap_check_passed,
                "weyl_terms": [WeylTermPayload.of(term).model_dump() for term in result.terms],
            }

        def decode(data: dict) -> PairingResult:
            return PairingResult(
                spec=spec,
                value=RationalPayload.model_validate(data["value"]).to_fraction(),
                raw_value=RationalPayload.model_validate(data["raw_value"]).to_fraction(),
                calibration=data["calibration"],
                caps=data["caps"],
                cap_check_passed=data["cap_check_passed"],
                terms=[WeylTermPayload.model_validate(term).to_term() for term in data["weyl_terms"]],
            )

        return await self._cached("pair", rdg, spec, lambda: formula.pair(pool), encode, decode)

    async def _pair_class(self, rdg: RankDegreeGenus, eta: EtaClass, pool: Executor) -> Fraction:
        results = await asyncio.gather(*(self._pair(rdg, spec, pool) for _, spec in eta.terms))
        return sum((c * result.value for (c, _), result in zip(eta.terms, results)), Fraction(0))

    async def _chern(self, rdg: RankDegreeGenus, spec: EtaSpec, pool: Executor) -> ChernPairing:
        formula = self._args["chern_formula"](rdg, spec, self._args["caps"])

        def encode(pairing: ChernPairing) -> dict:
            return {
                "coefficients": {
                    str(r): {str(j): RationalPayload.of(c).model_dump() for j, c in row.items()}
                    for r, row in pairing.coefficients.items()
                },
                "caps": pairing.caps,
                "cap_check_passed": pairing.cap_check_passed,
            }

        def decode(data: dict) -> ChernPairing:
            coefficients = {
                int(r): {int(j): RationalPayload.model_validate(c).to_fraction() for j, c in row.items()}
                for r, row in data["coefficients"].items()
            }
            return ChernPairing(formula.spec, rdg.g, coefficients, data["caps"], data["cap_check_passed"])

        return await self._cached("chern", rdg, formula.spec, lambda: formula.chern_pair(pool), encode, decode)

    async def pair(self, rdg: RankDegreeGenus, spec: EtaSpec) -> PairingResult:
        """Pair a monomial against the fundamental class of M(n,d).

        Args:
            rdg: rank, degree and genus.
            spec: the monomial, any f_2 power is explicit.
        Returns:
            the exact value with caps and the per-Weyl-element breakdown, 0 when the degree is not top.
        Raises:
            UsageError: the monomial does not fit rank and genus.
            TruncationError: the value could not be stabilised.
        """
        with self._executor() as pool:
            return await self._pair(rdg, spec, pool)

    async def pair_class(self, rdg: RankDegreeGenus, eta: EtaClass) -> Fraction:
        """Pair a rational combination of monomials, the monomials are evaluated concurrently."""
        with self._executor() as pool:
            return await self._pair_class(rdg, eta, pool)

    async def pair_canonical(self, rdg: RankDegreeGenus, spec: EtaSpec) -> tuple[IteratedLaurentSeries, tuple[int, int]]:
        """The Weyl-summed residue series in ε, δ_r and λ together with its ε-degree and ε-valuation bounds.

        The series is kept one ε-power beyond the degree bound, so that a violation of the bound is visible.
        """
        bounds = eps_bounds(rdg, spec)
        formula = self._args["pairing_formula"](rdg, spec, self._args["caps"], eps_target=max(bounds[0], 0) + 1)
        with self._executor() as pool:
            series = await formula.pair_canonical(pool)
        return series, bounds

    async def pontryagin_check(self, rdg: RankDegreeGenus, degree_threshold: int | None = None) -> PontryaginReport:
        """Pair every a-monomial above the degree threshold against every complementary monomial.

        The report passes when all of these vanish and the witness ∫ η₀·exp f₂ does not.

        Args:
            rdg: rank, degree and genus.
            degree_threshold: the degree above which a-monomials are checked, defaults to 2n(n-1)(g-1).
        """
        threshold = rdg.pontryagin_threshold if degree_threshold is None else degree_threshold
        pairs: list[tuple[EtaSpec, EtaSpec]] = []
        for degree in range(threshold + 1, rdg.real_dim + 1):
            for monomial in monomials_of_degree(rdg.n, rdg.g, degree, only_a=True):
                for complement in complementary_monomials(rdg.n, rdg.g, degree):
                    pairs.append((EtaSpec.from_monomial(monomial), EtaSpec.from_monomial(complement)))
        logger.info("checking %d pairings above degree %d on %s", len(pairs), threshold, rdg)
        witness_class = resolve_eta("eta0_expf2", rdg)
        with self._executor() as pool:
            results = await asyncio.gather(*(self._pair(rdg, m.times(c), pool) for m, c in pairs))
            witness = await self._pair_class(rdg, witness_class, pool)
        entries = [PontryaginEntry(m, c, result.value) for (m, c), result in zip(pairs, results)]
        report = PontryaginReport(rdg, threshold, entries, witness)
        for entry in report.counterexamples:
            logger.warning("∫ %s·%s = %s on %s, expected 0", entry.monomial, entry.complement, entry.value, rdg)
        return report

    async def chern(self, rdg: RankDegreeGenus, spec: EtaSpec) -> ChernPairing:
        """∫ η·exp(f₂)·c(M(n,d))(t) as a polynomial in t and λ.

        Raises:
            UsageError: the monomial does not fit rank and genus.
            TruncationError: the value could not be stabilised.
        """
        with self._executor() as pool:
            return await self._chern(rdg, spec, pool)

    async def chern_class(self, rdg: RankDegreeGenus, eta: EtaClass) -> ChernPairing:
        """`chern` of a rational combination of monomials, all of the same degree."""
        with self._executor() as pool:
            pairings = await asyncio.gather(*(self._chern(rdg, spec, pool) for _, spec in eta.terms))
        coefficients: dict[int, dict[int, Fraction]] = {}
        for (c, _), pairing in zip(eta.terms, pairings):
            for r, row in pairing.coefficients.items():
                target = coefficients.setdefault(r, {})
                for j, value in row.items():
                    target[j] = target.get(j, 0) + c * value
        coefficients = {r: {j: v for j, v in row.items() if v} for r, row in coefficients.items()}
        first = pairings[0]
        return ChernPairing(
            first.spec, rdg.g, coefficients, first.caps, all(p.cap_check_passed for p in pairings)
        )

    async def _chern_by_stripped(
        self, rdg: RankDegreeGenus, monomials: list[EtaSpec], pool: Executor
    ) -> list[ChernPairing]:
        # one evaluation per monomial with f_2 removed, f_2 is carried by exp f_2
        stripped = {}
        for spec in monomials:
            key = replace(spec, f={r: s for r, s in spec.f.items() if r != 2})
            stripped.setdefault(key.canonical(), key)
        pairings = await asyncio.gather(*(self._chern(rdg, spec, pool) for spec in stripped.values()))
        by_key = dict(zip(stripped, pairings))
        return [by_key[replace(spec, f={r: s for r, s in spec.f.items() if r != 2}).canonical()] for spec in monomials]

    async def _duality(
        self, rdg: RankDegreeGenus, r: int, reference: EtaClass, pool: Executor
    ) -> list[DualityEntry]:
        monomials = [EtaSpec.from_monomial(x) for x in complementary_monomials(rdg.n, rdg.g, 2 * r)]
        pairings = await self._chern_by_stripped(rdg, monomials, pool)
        references = await asyncio.gather(*(self._pair_class(rdg, reference.times(x), pool) for x in monomials))
        return [
            DualityEntry(x, pairing.monomial_coefficient(r, rdg.real_dim), value)
            for x, pairing, value in zip(monomials, pairings, references)
        ]

    async def chern_top_n2(self, g: int) -> ChernTopClass:
        """c_{2g-2}(M(2,1)) as a multiple of (a₂)^{g-1}, tested against every complementary monomial."""
        rdg = RankDegreeGenus(2, 1, g)
        reference = EtaClass.of(EtaSpec(a={2: g - 1}))
        with self._executor() as pool:
            entries = await self._duality(rdg, 2 * g - 2, reference, pool)
        result = ChernTopClass(g, _ratio(entries), entries)
        logger.info("c_%d(M(2,1)) at g=%d is %s·(a₂)^%d", 2 * g - 2, g, result.multiple, g - 1)
        return result

    async def chern_vanishing_report(self, rdg: RankDegreeGenus) -> ChernVanishingReport:
        """Observed vanishing of c_r above n(n-1)(g-1) and the ratio of that top class to η₀."""
        threshold = rdg.chern_threshold
        nonvanishing: list[tuple[EtaSpec, int, Fraction]] = []
        reference = discriminant_class(rdg.n, rdg.g).to_class("eta0")
        with self._executor() as pool:
            for r in range(threshold + 1, rdg.dim + 1):
                monomials = [EtaSpec.from_monomial(x) for x in complementary_monomials(rdg.n, rdg.g, 2 * r)]
                pairings = await self._chern_by_stripped(rdg, monomials, pool)
                for x, pairing in zip(monomials, pairings):
                    value = pairing.monomial_coefficient(r, rdg.real_dim)
                    if value:
                        nonvanishing.append((x, r, value))
            entries = await self._duality(rdg, threshold, reference, pool)
        ratio = _ratio(entries)
        proportional = bool(ratio) and all(e.chern == ratio * e.reference for e in entries)
        report = ChernVanishingReport(rdg, threshold, nonvanishing, ratio, proportional, entries)
        logger.info(
            "%s: %d nonvanishing Chern pairings above %d, c_%d = %s·η₀",
            rdg, len(nonvanishing), threshold, threshold, ratio,
        )
        return report

    async def nonvanishing_residue(self, n: int, d: int, g: int = 2) -> Fraction:
        """The Weyl-summed residue behind ∫ η₀·exp f₂ with the Grassmann factor divided out, (n-1)!."""
        with self._executor() as pool:
            return await nonvanishing_residue(n, d, pool, g, self._args["pairing_formula"])


def _ratio(entries: list[DualityEntry]) -> Fraction | None:
    for entry in entries:
        if entry.reference:
            return entry.chern / entry.reference
    return None
