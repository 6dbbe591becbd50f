from fractions import Fraction

import pytest

from moduli_py.fg import thaddeus_chern
from moduli_py.formulas import ChernFormula, chern_character, z_vector
from moduli_py.models import EtaSpec, RankDegreeGenus
from moduli_py.moduli import ModuliClient
from moduli_py.schemas import resolve_eta


def test_chern_ingredients():
    assert z_vector(2, 1, 2) == [2]
    assert z_vector(3, 1, 2) == [2, -1]
    assert z_vector(3, 1, 3) == [1, 1]
    assert z_vector(3, 2, 3) == [-1, 2]

    formula = ChernFormula(RankDegreeGenus(2, 1, 2), EtaSpec(f={2: 2}))
    assert formula.spec.f == {}
    assert formula.t_cap == 3
    caps = formula.cap_plan().caps
    assert formula.v_factor(1, caps).substitute_zero("t") == 1

    character = chern_character(2, 1, 2)
    assert character.terms[0].coefficient({}) == 3
    assert chern_character(3, 1, 2).terms[0].coefficient({}) == 8


@pytest.mark.asyncio()
async def test_chern_rank2(moduli: ModuliClient):
    rdg = RankDegreeGenus(2, 1, 2)
    pairing = await moduli.chern(rdg, EtaSpec())
    assert pairing.degree == 2
    assert pairing.coefficient(2) == 6
    assert pairing.coefficient(1) == 1
    assert pairing.coefficient(3) == 0
    assert pairing.cap_check_passed

    volume = await moduli.pair(rdg, EtaSpec(f={2: 3}))
    assert pairing.coefficient(0) == volume.value / 6 == Fraction(1, 12)

    twisted = await moduli.chern_class(rdg, resolve_eta("thaddeus_invariant", rdg, 1, absorb_f2=True))
    expected = thaddeus_chern(2, 1, t_cap=rdg.dim)
    for r in range(rdg.dim + 1):
        for j in range(rdg.g + 1):
            assert twisted.coefficient(r, j) == expected.get((r, j), 0)
    assert twisted.monomial_coefficient(1, rdg.real_dim) == 2

    theta = await moduli.chern(rdg, EtaSpec(lam=True))
    assert theta.coefficient(0, 1) == 2


@pytest.mark.asyncio()
async def test_chern_top_class(moduli: ModuliClient):
    top = await moduli.chern_top_n2(2)
    assert top.expected == 12
    assert top.multiple == 12
    assert top.consistent


@pytest.mark.slow
@pytest.mark.asyncio()
async def test_chern_rank3(moduli: ModuliClient):
    report = await moduli.chern_vanishing_report(RankDegreeGenus(3, 1, 2))
    assert report.threshold == 6
    assert report.vanishes
    assert report.ratio is not None
    assert {str(entry.monomial) for entry in report.duality} >= {"a2", "f2^2", "f3"}
