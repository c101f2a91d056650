from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import int_matrices
from quadlink.zmodule import (FinAbGroup, GroupHom, IntMatrix, cokernel, cokernel_with_lifts,
                              kernel_basis, preimage_lattice, prime_power, smith_normal_form,
                              solve_integer)


def test_snf_of_diagonal_two_three():
    assert smith_normal_form([[2, 0], [0, 3]]).diagonal() == [1, 6]


def test_snf_of_zero_matrix():
    snf = smith_normal_form(IntMatrix([[0, 0], [0, 0]]))
    assert snf.diagonal() == [0, 0]
    assert abs(snf.U.determinant()) == 1 and abs(snf.V.determinant()) == 1


def test_snf_by_hand():
    assert smith_normal_form([[2, 4], [4, 2]]).diagonal() == [2, 6]


def test_cokernel_examples():
    g, proj = cokernel(IntMatrix([[8]]))
    assert g.orders == (8,) and g.free_rank == 0
    assert proj((13,)) == (5,)
    assert cokernel(IntMatrix.identity(3))[0].order == 1
    g, _ = cokernel(IntMatrix([[2, 0], [0, 0]]))
    assert g.orders == (2,) and g.free_rank == 1


def test_cokernel_is_primary_split():
    g, proj = cokernel(IntMatrix([[6]]))
    assert g.orders == (2, 3)
    assert proj((1,)) == (1, 1)


def test_kernel_examples():
    assert kernel_basis(IntMatrix([[0]])).columns() == [(1,)]
    assert kernel_basis(IntMatrix([[2, 1], [1, 1]])).cols == 0
    (col,) = kernel_basis(IntMatrix([[1, 2]])).columns()
    assert col in ((2, -1), (-2, 1))


def test_preimage_examples():
    trivial = GroupHom(FinAbGroup((), 2), FinAbGroup(()), IntMatrix([], 0, 2))
    assert preimage_lattice(IntMatrix.identity(2), trivial) == IntMatrix.identity(2)
    parity = GroupHom(FinAbGroup((), 2), FinAbGroup((2,)), IntMatrix([[1, 1]]))
    L = preimage_lattice(IntMatrix.identity(2), parity)
    assert abs(L.determinant()) == 2
    for v in ((1, 1), (0, 2)):
        assert solve_integer(L, v) is not None
    mod5 = GroupHom(FinAbGroup((), 1), FinAbGroup((5,)), IntMatrix([[1]]))
    assert preimage_lattice(IntMatrix.identity(1), mod5) == IntMatrix([[5]])


def test_prime_power():
    assert prime_power(8) == (2, 3)
    assert prime_power(12) is None
    assert prime_power(1) is None


def test_group_arithmetic():
    g = FinAbGroup((2, 4, 3))
    assert g.order == 24 and g.exponent == 12
    assert g.add((1, 3, 2), (1, 2, 2)) == (0, 1, 1)
    assert g.element_order((1, 2, 0)) == 2
    assert sum(1 for _ in g.elements()) == 24
    with pytest.raises(ValueError):
        FinAbGroup((6,))


def _is_diagonal_chain(D: IntMatrix) -> bool:
    d = [D[i, i] for i in range(min(D.rows, D.cols))]
    off = all(D[i, j] == 0 for i in range(D.rows) for j in range(D.cols) if i != j)
    nonzero = [x for x in d if x]
    chain = all(b % a == 0 for a, b in zip(nonzero, nonzero[1:]))
    zeros_last = all(x == 0 for x in d[len(nonzero):])
    return off and chain and zeros_last and all(x >= 0 for x in d)


@given(int_matrices(max_dim=8, bound=20))
def test_snf_factorization(M):
    snf = smith_normal_form(M)
    assert snf.U @ M @ snf.V == snf.D
    assert abs(snf.U.determinant()) == 1 and abs(snf.V.determinant()) == 1
    assert _is_diagonal_chain(snf.D)


@given(int_matrices(max_dim=6, bound=20, min_dim=1))
def test_cokernel_order_is_product_of_invariant_factors(M):
    g, _ = cokernel(M)
    d = smith_normal_form(M).diagonal()
    assert g.order == math.prod(x for x in d if x > 1)
    assert g.free_rank == M.rows - sum(1 for x in d if x)


@given(int_matrices(max_dim=6, bound=20, min_dim=1))
def test_cokernel_lifts_project_to_generators(M):
    g, proj, lifts = cokernel_with_lifts(M)
    for i, col in enumerate(lifts.columns()):
        assert proj(col) == g.generator(i)
    for col in M.columns():
        assert proj(col) == g.zero()


@given(int_matrices(max_dim=6, bound=20, min_dim=1))
def test_kernel_is_saturated(M):
    K = kernel_basis(M)
    assert M @ K == IntMatrix.zeros(M.rows, K.cols)
    assert all(x in (0, 1) for x in smith_normal_form(K).diagonal())
    assert K.cols == M.cols - smith_normal_form(M).rank


@given(int_matrices(max_dim=4, bound=6, min_dim=1), st.data())
def test_preimage_index_is_image_order(M, data):
    orders = tuple(data.draw(st.lists(st.sampled_from([2, 3, 4, 5, 8, 9]), max_size=3)))
    target = FinAbGroup(tuple(sorted(orders, key=FinAbGroup.sort_key)))
    hom_rows = [data.draw(st.lists(st.integers(0, 8), min_size=M.rows, max_size=M.rows))
                for _ in target.orders]
    hom = GroupHom(FinAbGroup((), M.rows), target, IntMatrix(hom_rows, len(target.orders), M.rows))
    L = preimage_lattice(M, hom)
    composite = GroupHom(FinAbGroup((), M.cols), target, hom.matrix @ M)
    assert L.cols == M.cols
    assert abs(L.determinant()) == composite.image_order()
    for col in L.columns():
        assert hom(M.apply(col)) == target.zero()
