from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import pytest

from moduli_py.exceptions import CoprimalityError, RankError, UsageError
from moduli_py.formulas import PairingFormula, eps_bounds
from moduli_py.models import EtaSpec, RankDegreeGenus, WeylElement
from moduli_py.moduli import ModuliClient
from moduli_py.schemas import resolve_eta
from moduli_py.verify import SignFlippedPairingFormula


@pytest.mark.asyncio()
async def test_rank2_pairings(moduli: ModuliClient):
    rdg = RankDegreeGenus(2, 1, 2)
    witness = await moduli.pair_class(rdg, resolve_eta("eta0_expf2", rdg))
    assert witness == -2

    result = await moduli.pair(rdg, EtaSpec(a={2: 1}, f={2: 1}))
    assert result.value == Fraction(1, 2)
    assert result.value == result.raw_value * result.calibration
    assert result.cap_check_passed
    assert len(result.terms) == 1 and result.terms[0].contribution == result.value
    assert result.caps["Y1"] >= -1

    volume = await moduli.pair(rdg, EtaSpec(f={2: 3}))
    assert volume.value == Fraction(1, 2)

    not_top = await moduli.pair(rdg, EtaSpec(a={2: 1}))
    assert not_top.value == 0 and not not_top.terms

    forward = await moduli.pair(rdg, EtaSpec(b=[(2, 1), (2, 3)]))
    backward = await moduli.pair(rdg, EtaSpec(b=[(2, 3), (2, 1)]))
    assert backward.value == -forward.value
    assert (await moduli.pair(rdg, EtaSpec(b=[(2, 1), (2, 1)]))).value == 0
    assert (await moduli.pair(rdg, EtaSpec(b=[(2, 1), (2, 2)]))).value == 0


@pytest.mark.asyncio()
async def test_top_power_vanishing(moduli: ModuliClient):
    rdg = RankDegreeGenus(2, 1, 3)
    assert await moduli.pair_class(rdg, resolve_eta("eta0_expf2", rdg)) == 4
    assert (await moduli.pair(rdg, EtaSpec(a={2: 2}, f={2: 2}))).value == Fraction(1, 2)
    assert (await moduli.pair(rdg, EtaSpec(a={2: 1}, f={2: 4}))).value == 1
    assert (await moduli.pair(rdg, EtaSpec(a={2: 2}, f={2: 4}))).value == 0
    assert (await moduli.pair(rdg, EtaSpec(a={2: 3}))).value == 0
    assert (await moduli.pair(rdg, EtaSpec(a={2: 4}))).value == 0


@pytest.mark.asyncio()
async def test_pontryagin_rank2(moduli: ModuliClient):
    vacuous = await moduli.pontryagin_check(RankDegreeGenus(2, 1, 2))
    assert vacuous.threshold == 4
    assert not vacuous.entries
    assert vacuous.witness == -2 and vacuous.passed

    report = await moduli.pontryagin_check(RankDegreeGenus(2, 1, 3))
    assert report.threshold == 8
    assert [str(e.monomial) for e in report.entries] == [str(EtaSpec(a={2: 3}))]
    assert report.passed and not report.counterexamples

    lowered = await moduli.pontryagin_check(RankDegreeGenus(2, 1, 3), degree_threshold=4)
    assert lowered.threshold == 4
    assert len(lowered.entries) == 3
    assert [(str(e.monomial), str(e.complement), e.value) for e in lowered.counterexamples] == [
        (str(EtaSpec(a={2: 2})), str(EtaSpec(f={2: 2})), Fraction(1, 2))
    ]
    assert not lowered.passed


@pytest.mark.asyncio()
async def test_eps_polynomiality(moduli: ModuliClient):
    rdg = RankDegreeGenus(2, 1, 2)
    assert eps_bounds(rdg, EtaSpec()) == (3, 1)
    assert eps_bounds(rdg, EtaSpec(a={2: 1})) == (1, 1)
    assert eps_bounds(rdg, EtaSpec(b=[(2, 1), (2, 3)])) == (0, 0)

    for spec in (EtaSpec(), EtaSpec(a={2: 1}), EtaSpec(b=[(2, 1), (2, 3)])):
        series, (degree, valuation) = await moduli.pair_canonical(rdg, spec)
        eps = series.order.index("eps")
        powers = {e[eps] for e in series.terms}
        assert all(valuation <= p <= degree for p in powers)


@pytest.mark.asyncio()
async def test_nonvanishing_residue(moduli: ModuliClient):
    assert await moduli.nonvanishing_residue(2, 1) == 1
    assert await moduli.nonvanishing_residue(2, 1, g=3) == 1

    flipped = ModuliClient(threads=1, pairing_formula=SignFlippedPairingFormula)
    assert await flipped.nonvanishing_residue(2, 1) == -1


def test_worker_processes(moduli: ModuliClient):
    with moduli._executor() as pool:
        assert isinstance(pool, ProcessPoolExecutor)
        assert pool._max_workers == 2


def test_weyl_orbits():
    swap = WeylElement((1, 0))
    single = PairingFormula(RankDegreeGenus(3, 1, 2), EtaSpec()).weyl_orbit()
    assert list(single.values()) == [[WeylElement((0, 1)), swap]]

    shifts = list(PairingFormula(RankDegreeGenus(3, 2, 2), EtaSpec()).weyl_orbit())
    assert len(shifts) == 2
    assert swap.act(shifts[0]) == shifts[1] and swap.act(shifts[1]) == shifts[0]


def test_orientation():
    formula = PairingFormula(RankDegreeGenus(2, 1, 2), EtaSpec(b=[(2, 1), (2, 3)], lam=True))
    assert formula.calibration == formula.orientation(0) == -1
    assert formula.orientation(1) == 1
    assert PairingFormula(RankDegreeGenus(2, 1, 3), EtaSpec()).calibration == -1


@pytest.mark.asyncio()
async def test_pairing_errors(moduli: ModuliClient):
    rdg = RankDegreeGenus(2, 1, 2)
    with pytest.raises(RankError):
        await moduli.pair(rdg, EtaSpec(a={3: 1}))
    with pytest.raises(RankError):
        await moduli.pair(rdg, EtaSpec(b=[(2, 5)]))
    with pytest.raises(UsageError):
        PairingFormula(RankDegreeGenus(3, 1, 2), EtaSpec(lam=True))
    with pytest.raises(CoprimalityError):
        RankDegreeGenus(2, 2, 2)
    with pytest.raises(RankError):
        RankDegreeGenus(2, 1, 1)
    with pytest.raises(UsageError):
        resolve_eta('{"a": {"2": "x"}}', rdg)
    with pytest.raises(UsageError):
        resolve_eta("thaddeus_invariant", RankDegreeGenus(3, 1, 2))


@pytest.mark.slow
@pytest.mark.asyncio()
async def test_pontryagin_rank3(moduli: ModuliClient):
    report = await moduli.pontryagin_check(RankDegreeGenus(3, 1, 2))
    assert report.threshold == 12
    assert report.entries
    assert report.passed


@pytest.mark.slow
@pytest.mark.asyncio()
async def test_rank3_residues(moduli: ModuliClient):
    assert await moduli.nonvanishing_residue(3, 1) == 2
    assert await moduli.nonvanishing_residue(3, 2) == 2

    spec = EtaSpec(a={2: 3}, f={2: 2})
    symmetric = await moduli.pair(RankDegreeGenus(3, 1, 2), spec)
    assert len(symmetric.terms) == 2
    assert symmetric.terms[0].contribution == symmetric.terms[1].contribution
    assert sum(t.contribution for t in symmetric.terms) == symmetric.value

    swapped = await moduli.pair(RankDegreeGenus(3, 2, 2), spec)
    assert sorted(t.weyl.permutation for t in swapped.terms) == [(0, 1), (1, 0)]
    assert sum(t.contribution for t in swapped.terms) == swapped.value
