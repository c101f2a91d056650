from __future__ import annotations

import random

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from quadlink.quadratic import QuadraticFunction, direct_sum
from quadlink.zmodule import IntMatrix

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# PASS/FAIL lines recorded by the acceptance suite, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@st.composite
def int_matrices(draw, max_dim=8, bound=20, min_dim=0):
    rows = draw(st.integers(min_dim, max_dim))
    cols = draw(st.integers(min_dim, max_dim))
    entries = draw(st.lists(st.integers(-bound, bound), min_size=rows * cols, max_size=rows * cols))
    return IntMatrix([entries[i * cols:(i + 1) * cols] for i in range(rows)], rows, cols)


@st.composite
def symmetric_grams(draw, max_rank=4, bound=5, min_rank=1, even=False):
    n = draw(st.integers(min_rank, max_rank))
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = draw(st.integers(-bound, bound))
            if i == j and even:
                v = 2 * (v // 2)
            rows[i][j] = rows[j][i] = v
    return IntMatrix(rows, n, n)


@st.composite
def quadratic_functions(draw, max_rank=4, bound=5, characteristic=False, nondegenerate=False,
                        even=False, min_rank=1):
    gram = draw(symmetric_grams(max_rank, bound, min_rank, even))
    if nondegenerate and gram.determinant() == 0:
        step = 2 if even else 1
        shift = [step * (bound + 1 + i) for i in range(gram.rows)]
        gram = gram + IntMatrix.diagonal_matrix(shift)
        while gram.determinant() == 0:
            gram = gram + IntMatrix.diagonal_matrix([2] * gram.rows)
    alpha = draw(st.lists(st.integers(-bound, bound), min_size=gram.rows, max_size=gram.rows))
    if characteristic:
        alpha = [a + ((gram[i, i] - a) % 2) for i, a in enumerate(alpha)]
    if even:
        alpha = [0] * gram.rows
    return QuadraticFunction(gram, tuple(alpha))


def random_gram(rng: random.Random, n: int, bound: int, even: bool = False) -> IntMatrix:
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = rng.randint(-bound, bound)
            if i == j and even:
                v = 2 * (v // 2)
            rows[i][j] = rows[j][i] = v
    return IntMatrix(rows, n, n)


def random_unimodular(rng: random.Random, n: int, steps: int = 6) -> IntMatrix:
    rows = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(steps):
        if n < 2:
            break
        i, j = rng.sample(range(n), 2)
        c = rng.choice((-1, 1))
        rows[i] = [a + c * b for a, b in zip(rows[i], rows[j])]
    return IntMatrix(rows, n, n)


def boundary_partner(k: QuadraticFunction, rng: random.Random, even: bool = False) -> QuadraticFunction:
    """A function whose boundary is isometric to that of k: new basis, alpha moved by 2 * Gram image,
    sometimes a unimodular summand."""
    U = random_unimodular(rng, k.rank)
    moved = k.restrict(U)
    v = [rng.randint(-2, 2) for _ in range(k.rank)]
    shift = moved.gram.apply(v)
    moved = QuadraticFunction(moved.gram, tuple(a + 2 * s for a, s in zip(moved.linear, shift)))
    if k.rank < 3 and rng.random() < 0.5:
        d = rng.choice((1, -1))
        extra = QuadraticFunction.of([[d]], [rng.choice((-1, 1, 3))]) if not even else \
            QuadraticFunction.of([[0, 1], [1, 0]], [0, 0])
        if moved.rank + extra.rank <= 3:
            moved = direct_sum(moved, extra)
    if even:
        moved = QuadraticFunction(moved.gram, (0,) * moved.rank)
    return moved
