"""Integral quadratic functions kappa(v) = lambda(v, v) + alpha(v) on free
abelian groups, with exact rational helpers and a lattice isometry search."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .zmodule import (FinAbGroup, GroupHom, IntMatrix, as_matrix, cokernel, hermite_rows,
                      kernel_basis, smith_normal_form, unimodular_inverse)


class Flavor(enum.Enum):
    EVEN_FORM = "EvenForm"
    EVEN = "Even"
    CHARACTERISTIC = "Characteristic"
    LINEAR = "Linear"
    OTHER = "Other"


class UndecidedError(RuntimeError):
    """A search hit its configured bounds without a verdict."""


class BoundExceededError(ValueError):
    """An input is larger than a configured bound allows."""


@dataclass(frozen=True)
class QuadraticFunction:
    """kappa(H, lambda, alpha) on H = Z^rank: symmetric Gram plus linear term."""

    gram: IntMatrix
    linear: tuple[int, ...]

    def __post_init__(self):
        g = as_matrix(self.gram)
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "linear", tuple(int(a) for a in self.linear))
        if not g.is_symmetric():
            raise ValueError("Gram matrix must be square and symmetric")
        if len(self.linear) != g.rows:
            raise ValueError("linear term has the wrong length")

    @classmethod
    def of(cls, gram, linear=None) -> QuadraticFunction:
        g = as_matrix(gram)
        return cls(g, tuple(linear) if linear is not None else (0,) * g.rows)

    @classmethod
    def empty(cls) -> QuadraticFunction:
        return cls(IntMatrix([], 0, 0), ())

    @property
    def rank(self) -> int:
        return self.gram.rows

    def pairing(self, v, w) -> int:
        return sum(v[i] * self.gram[i, j] * w[j] for i in range(self.rank) for j in range(self.rank))

    def __call__(self, v) -> int:
        return evaluate(self, v)

    def is_nondegenerate(self) -> bool:
        return self.gram.determinant() != 0

    def is_nonsingular(self) -> bool:
        return abs(self.gram.determinant()) == 1

    def restrict(self, basis: IntMatrix) -> QuadraticFunction:
        """kappa pulled back along the columns of `basis`."""
        basis = as_matrix(basis)
        g = basis.T @ self.gram @ basis
        a = tuple(sum(self.linear[i] * basis[i, j] for i in range(self.rank))
                  for j in range(basis.cols))
        return QuadraticFunction(g, a)


def evaluate(k: QuadraticFunction, v: Sequence[int]) -> int:
    """lambda(v, v) + alpha(v)."""
    if len(v) != k.rank:
        raise ValueError(f"vector of length {len(v)} for a rank {k.rank} function")
    return k.pairing(v, v) + sum(a * x for a, x in zip(k.linear, v))


def is_characteristic(k: QuadraticFunction) -> bool:
    """kappa takes only even values: diag(lambda) = alpha mod 2."""
    return all((k.gram[i, i] - k.linear[i]) % 2 == 0 for i in range(k.rank))


def has_even_gram(k: QuadraticFunction) -> bool:
    return all(k.gram[i, i] % 2 == 0 for i in range(k.rank))


def flavor(k: QuadraticFunction) -> Flavor:
    """Most specific tag, EvenForm > Even > Characteristic > Linear > Other."""
    if has_even_gram(k):
        return Flavor.EVEN_FORM if not any(k.linear) else Flavor.EVEN
    if is_characteristic(k):
        return Flavor.CHARACTERISTIC
    if not any(k.gram.entries):
        return Flavor.LINEAR
    return Flavor.OTHER


def category(k: QuadraticFunction) -> str | None:
    """Which boundary formula applies: 'c' (characteristic), 'ev' (even Gram) or None."""
    if is_characteristic(k):
        return "c"
    if has_even_gram(k):
        return "ev"
    return None


def signature(gram) -> int:
    """Exact signature by symmetric congruence diagonalization over Q."""
    g = as_matrix(gram)
    if not g.is_symmetric():
        raise ValueError("signature needs a symmetric matrix")
    n = g.rows
    a = [[Fraction(x) for x in r] for r in g.tolist()]
    pos = neg = 0
    for k in range(n):
        if a[k][k] == 0:
            j = next((j for j in range(k + 1, n) if a[j][j] != 0), None)
            if j is not None:
                a[k], a[j] = a[j], a[k]
                for r in a:
                    r[k], r[j] = r[j], r[k]
            else:
                j = next((j for j in range(k + 1, n) if a[k][j] != 0), None)
                if j is None:
                    continue
                # hyperbolic pair: replace e_k by e_k + e_j, then a[k][k] = 2 a[k][j]
                a[k] = [x + y for x, y in zip(a[k], a[j])]
                for r in a:
                    r[k] += r[j]
        p = a[k][k]
        if p > 0:
            pos += 1
        else:
            neg += 1
        for i in range(k + 1, n):
            if a[i][k]:
                c = a[i][k] / p
                a[i] = [x - c * y for x, y in zip(a[i], a[k])]
        for i in range(k + 1, n):
            a[k][i] = Fraction(0)
            a[i][k] = Fraction(0)
    return pos - neg


@lru_cache(maxsize=4096)
def rational_inverse(gram: IntMatrix) -> tuple[tuple[Fraction, ...], ...]:
    """Exact inverse of a nondegenerate integer matrix."""
    n = gram.rows
    a = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)]
         for i, r in enumerate(gram.tolist())]
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            raise ValueError("Gram matrix is degenerate")
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [x / p for x in a[c]]
        for i in range(n):
            if i != c and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return tuple(tuple(r[n:]) for r in a)


def inverse_pairing(gram, x: Sequence[int], y: Sequence[int]) -> Fraction:
    """lambda^{-1}(x, y) = y(lambda_hat^{-1} x) for covectors x, y."""
    g = as_matrix(gram)
    inv = rational_inverse(g)
    n = g.rows
    if len(x) != n or len(y) != n:
        raise ValueError("covector length mismatch")
    return sum((x[i] * inv[i][j] * y[j] for i in range(n) for j in range(n) if x[i] and y[j]),
               Fraction(0))


@dataclass(frozen=True)
class FundamentalSequence:
    """0 -> F -> H -> H* -> G -> 0 for lambda_hat, with the canonical section."""

    radical_basis: IntMatrix
    quotient: FinAbGroup
    projection: GroupHom
    section_basis: IntMatrix


def fundamental_sequence(k: QuadraticFunction) -> FundamentalSequence:
    """Radical F, quotient G = Cok(lambda_hat) and the canonical complement of F.

    The complement is spanned by the Smith transform columns outside the kernel
    block, so radical + section columns form a basis of H.
    """
    n = k.rank
    snf = smith_normal_form(k.gram)
    r = snf.rank
    radical = kernel_basis(k.gram)
    section = IntMatrix.from_columns([snf.V.column(j) for j in range(r)], n) if r else \
        IntMatrix.zeros(n, 0)
    group, proj = cokernel(k.gram)
    return FundamentalSequence(radical, group, proj, section)


def split_by_section(k: QuadraticFunction) -> tuple[tuple[int, ...], QuadraticFunction]:
    """(alpha restricted to the radical, kappa restricted to the canonical section)."""
    fs = fundamental_sequence(k)
    alpha_f = tuple(sum(k.linear[i] * fs.radical_basis[i, j] for i in range(k.rank))
                    for j in range(fs.radical_basis.cols))
    return alpha_f, k.restrict(fs.section_basis)


def direct_sum(k0: QuadraticFunction, k1: QuadraticFunction) -> QuadraticFunction:
    n0, n1 = k0.rank, k1.rank
    rows = [list(k0.gram.row(i)) + [0] * n1 for i in range(n0)]
    rows += [[0] * n0 + list(k1.gram.row(i)) for i in range(n1)]
    return QuadraticFunction(IntMatrix(rows, n0 + n1, n0 + n1), k0.linear + k1.linear)


def reverse(k: QuadraticFunction) -> QuadraticFunction:
    """kappa(H, -lambda, alpha)."""
    return QuadraticFunction(-k.gram, k.linear)


# ---------------------------------------------------------------------------
# isometry search

def _ldl(gram: IntMatrix):
    """Exact Gram = L D L^T data for a positive definite matrix: returns (d, mu)
    with Q(v) = sum_i d_i (v_i + sum_{j>i} mu[i][j] v_j)^2."""
    n = gram.rows
    a = [[Fraction(x) for x in r] for r in gram.tolist()]
    d = [Fraction(0)] * n
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        d[i] = a[i][i]
        if d[i] <= 0:
            raise ValueError("not positive definite")
        for j in range(i + 1, n):
            mu[i][j] = a[i][j] / d[i]
        for j in range(i + 1, n):
            for l in range(i + 1, n):
                a[j][l] -= a[i][j] * a[i][l] / d[i]
    return d, mu


def short_vectors(gram: IntMatrix, norm: int) -> list[tuple[int, ...]]:
    """All v with v^T G v == norm for positive definite G (Fincke-Pohst)."""
    n = gram.rows
    if norm < 0:
        return []
    if norm == 0:
        return [(0,) * n]
    d, mu = _ldl(gram)
    out = []
    v = [0] * n

    def rec(i: int, remaining: Fraction):
        if i < 0:
            if sum(v[a] * gram[a, b] * v[b] for a in range(n) for b in range(n)) == norm:
                out.append(tuple(v))
            return
        c = sum((mu[i][j] * v[j] for j in range(i + 1, n)), Fraction(0))
        span = math.sqrt(float(remaining / d[i])) + 1e-9
        lo = math.ceil(float(-c) - span)
        hi = math.floor(float(-c) + span)
        for x in range(lo, hi + 1):
            t = d[i] * (x + c) ** 2
            if t <= remaining:
                v[i] = x
                rec(i - 1, remaining - t)
        v[i] = 0

    rec(n - 1, Fraction(norm))
    out.sort(key=_vector_key)
    return out


def _entry_key(x: int) -> tuple[int, int]:
    # 0 < 1 < -1 < 2 < -2 < ...
    return (abs(x), 0 if x >= 0 else 1)


def _vector_key(v) -> tuple:
    return tuple(_entry_key(x) for x in v)


def _box_vectors(n: int, bound: int):
    vals = sorted(range(-bound, bound + 1), key=_entry_key)
    return sorted(itertools.product(vals, repeat=n), key=_vector_key)


def isometry_search(k0: QuadraticFunction, k1: QuadraticFunction, constraint_mod: int | None = None,
                    rank_bound: int = 8, entry_bound: int = 6, node_budget: int = 2_000_000,
                    box_budget: int = 200_000) -> IntMatrix | None:
    """Find Theta: H0 -> H1 (columns = images of the basis of H0) with
    Theta^T G1 Theta = G0 and alpha1 Theta = alpha0 (mod constraint_mod).

    Returns the least witness (entries ordered 0, 1, -1, 2, -2, ..., compared
    column by column), or None when no isometry exists. Definite forms are
    searched exhaustively. Other forms are searched in a bounded box of entries;
    if nothing is found there and no invariant rules an isometry out,
    UndecidedError is raised instead of answering no.
    """
    n = k0.rank
    if n != k1.rank:
        return None
    if n > rank_bound:
        raise BoundExceededError(f"rank {n} exceeds the configured bound {rank_bound}")
    mod = constraint_mod

    def alpha_ok(v, target):
        val = sum(a * x for a, x in zip(k1.linear, v))
        return (val - target) % mod == 0 if mod else val == target

    if k0 == k1:
        return IntMatrix.identity(n)
    if n == 0:
        return IntMatrix.identity(0)
    # invariants that rule out an isometry
    if k0.gram.determinant() != k1.gram.determinant():
        return None
    if signature(k0.gram) != signature(k1.gram):
        return None
    if has_even_gram(k0) != has_even_gram(k1):
        return None
    if cokernel(k0.gram)[0] != cokernel(k1.gram)[0]:
        return None
    if mod:
        if math.gcd(mod, *k0.linear) != math.gcd(mod, *k1.linear):
            return None
    else:
        if math.gcd(*k0.linear) != math.gcd(*k1.linear):
            return None
        if k0.is_nondegenerate() and inverse_pairing(k0.gram, k0.linear, k0.linear) != \
                inverse_pairing(k1.gram, k1.linear, k1.linear):
            return None
    if n == 1:
        for s in (1, -1):
            if alpha_ok((s,), k0.linear[0]):
                return IntMatrix([[s]])
        return None

    sig = signature(k0.gram)
    definite = k0.is_nondegenerate() and abs(sig) == n
    g1 = k1.gram if sig >= 0 else -k1.gram
    g0 = k0.gram if sig >= 0 else -k0.gram

    if definite:
        cache: dict[int, list] = {}

        def candidates(i):
            norm = g0[i, i]
            if norm not in cache:
                cache[norm] = short_vectors(g1, norm)
            return cache[norm]
    else:
        box = None
        for b in range(1, entry_bound + 1):
            if (2 * b + 1) ** n > box_budget:
                break
            box = b
        if box is None:
            raise UndecidedError("indefinite or degenerate form too large for the bounded search")
        pool = _box_vectors(n, box)
        norms: dict[int, list] = {}
        for v in pool:
            norms.setdefault(sum(v[a] * g1[a, b] * v[b] for a in range(n) for b in range(n)),
                             []).append(v)

        def candidates(i):
            return norms.get(g0[i, i], [])

    images: list[tuple[int, ...]] = []
    nodes = 0

    def pair1(v, w):
        return sum(v[a] * g1[a, b] * w[b] for a in range(n) for b in range(n))

    def rec(i: int) -> bool:
        nonlocal nodes
        if i == n:
            return abs(IntMatrix.from_columns(images, n).determinant()) == 1
        for v in candidates(i):
            nodes += 1
            if nodes > node_budget:
                raise UndecidedError("node budget exhausted in isometry search")
            if not alpha_ok(v, k0.linear[i]):
                continue
            if all(pair1(v, images[j]) == g0[i, j] for j in range(i)):
                images.append(v)
                if rec(i + 1):
                    return True
                images.pop()
        return False

    if rec(0):
        return IntMatrix.from_columns(images, n)
    if definite:
        return None
    raise UndecidedError(f"no isometry with entries bounded by {box}; not ruled out by invariants")


def is_isometry(theta: IntMatrix, k0: QuadraticFunction, k1: QuadraticFunction,
                constraint_mod: int | None = None) -> bool:
    theta = as_matrix(theta)
    if theta.shape != (k1.rank, k0.rank) or abs(theta.determinant()) != 1:
        return False
    if theta.T @ k1.gram @ theta != k0.gram:
        return False
    pulled = [sum(k1.linear[i] * theta[i, j] for i in range(k1.rank)) for j in range(k0.rank)]
    if constraint_mod:
        return all((p - a) % constraint_mod == 0 for p, a in zip(pulled, k0.linear))
    return tuple(pulled) == k0.linear


__all__ = [
    "Flavor", "QuadraticFunction", "FundamentalSequence", "UndecidedError", "BoundExceededError",
    "evaluate", "flavor", "category", "is_characteristic", "has_even_gram", "signature",
    "rational_inverse", "inverse_pairing", "fundamental_sequence", "split_by_section",
    "direct_sum", "reverse", "isometry_search", "is_isometry", "short_vectors",
    "hermite_rows", "unimodular_inverse",
]
