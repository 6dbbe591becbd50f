from fractions import Fraction

import pytest

from moduli_py.caches import fg_table
from moduli_py.exceptions import UsageError
from moduli_py.fg import FGTable, f_residue, g_closed_form, g_table, t_degree, thaddeus_chern


def test_f_residue():
    f = f_residue(2, 1)
    assert f.series == {(0, 0): Fraction(-1, 24), (1, 0): Fraction(-1, 2), (2, 0): Fraction(-3), (0, 1): Fraction(-1)}
    assert f.degree == 2
    assert t_degree(f.numerator) <= 2 + 2 * 1

    assert f_residue(0, 0).series[(0, 0)] == 1
    assert f_residue(0, 0).series[(1, 0)] == -4
    assert f_residue(1, 0).series == {(0, 0): Fraction(1)}

    with pytest.raises(UsageError):
        f_residue(-1, 0)


def test_g_table():
    table = g_table(4, 3, FGTable())
    assert table.g(1, 0) == {(0, 0): Fraction(1)}
    assert table.g(0, 0) == {(-1, 0): Fraction(1, 4)}
    assert table.g(2, 1) == {(2, 0): Fraction(-3)}
    assert table.g(3, -1) == {}

    for s in range(4):
        for k in range(s + 2):
            assert table.g(k, s) == g_closed_form(k, s)
    for s in range(3):
        for k in range(4):
            assert not table.recurrence_defect(k, s)

    for (k, s), entry in table.entries.items():
        assert entry.degree is None or entry.degree <= k + s - 1

    assert g_closed_form(3, 0) is None
    with pytest.raises(UsageError):
        g_table(-1, 0)


def test_thaddeus_chern():
    assert thaddeus_chern(2, 0, fg_table) == {
        (0, 0): Fraction(1, 12),
        (1, 0): Fraction(1),
        (2, 0): Fraction(6),
        (0, 1): Fraction(2),
    }
    assert thaddeus_chern(3, 0, t_cap=6)[(4, 0)] == 28
    assert thaddeus_chern(2, 1) == {(0, 0): Fraction(1, 2), (1, 0): Fraction(2)}
    with pytest.raises(UsageError):
        thaddeus_chern(2, 2)
