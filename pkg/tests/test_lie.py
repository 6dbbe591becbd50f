from fractions import Fraction

import pytest

from moduli_py.exceptions import CoprimalityError, RankError
from moduli_py.grassmann import determinant
from moduli_py.lie import RootData, c_tilde, cartan_matrix, coroot, weyl_elements
from moduli_py.models import WeylElement
from moduli_py.series import VariableOrder


def test_lattice_data():
    assert c_tilde(2, 1) == (Fraction(1, 2), Fraction(-1, 2))
    assert c_tilde(3, 1) == (Fraction(1, 3), Fraction(1, 3), Fraction(-2, 3))
    assert sum(c_tilde(5, 3)) == 0
    with pytest.raises(CoprimalityError):
        c_tilde(4, 2)

    assert coroot(3, 2) == (0, 1, -1)
    assert cartan_matrix(3) == [[2, -1], [-1, 2]]

    elements = weyl_elements(4)
    assert len(elements) == 6
    assert elements[0] == WeylElement((0, 1, 2))
    assert WeylElement((1, 0)).act((1, 2, 3)) == (2, 1, 3)
    with pytest.raises(RankError):
        weyl_elements(1)


def test_root_data():
    order = VariableOrder.for_rank(3)
    root_data = RootData(3, 1, order)
    x1, x2, x3 = root_data.x_coordinates
    assert x1 + x2 + x3 == 0
    assert x1 - x2 == root_data.y(1)
    assert x2 - x3 == root_data.y(2)
    assert root_data.root(1, 3) == root_data.y(1) + root_data.y(2)

    hessian = root_data.hessian_sigma(2)
    assert hessian == [[-2, 1], [1, -2]]
    assert root_data.d_sigma(2, coroot(3, 1)) == x2 - x1
    with pytest.raises(RankError):
        root_data.sigma(4)

    rank2 = RootData(2, 1, VariableOrder.for_rank(2))
    assert rank2.discriminant_power(2) == rank2.y(1) ** 2
    assert rank2.sigma(2) == rank2.y(1) * rank2.y(1) * Fraction(-1, 4)


def test_hessian_determinant():
    for n in range(2, 6):
        hessian = RootData(n, 1, VariableOrder.for_rank(n)).hessian_sigma(2)
        assert determinant(hessian) == (-1) ** (n - 1) * n
        assert [[entry.coefficient({}) for entry in row] for row in hessian] == [
            [-x for x in row] for row in cartan_matrix(n)
        ]
