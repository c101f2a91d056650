"""Exact integer linear algebra: matrices, Smith normal form, finite abelian
groups given by cyclic orders, and homomorphisms between them.

Everything here works over Python ints, so nothing overflows.

>>> smith_normal_form(IntMatrix([[2, 4], [4, 2]])).diagonal()
[2, 6]
>>> cokernel(IntMatrix([[2, 0], [0, 0]]))[0]
FinAbGroup(orders=(2,), free_rank=1)
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class IntMatrix:
    """Immutable integer matrix stored row-major."""

    __slots__ = ("rows", "cols", "_data", "_hash")

    def __init__(self, data: Iterable[Iterable[int]] = (), rows: int | None = None,
                 cols: int | None = None):
        table = tuple(tuple(int(x) for x in row) for row in data)
        if rows is None:
            rows = len(table)
        if cols is None:
            cols = len(table[0]) if table else 0
        if len(table) != rows or any(len(r) != cols for r in table):
            raise ValueError(f"entries do not fit a {rows}x{cols} shape")
        if rows == 0:
            table = ()
        self.rows = rows
        self.cols = cols
        self._data = table
        self._hash = None

    @classmethod
    def zeros(cls, rows: int, cols: int) -> IntMatrix:
        return cls([[0] * cols for _ in range(rows)], rows, cols)

    @classmethod
    def identity(cls, n: int) -> IntMatrix:
        return cls([[int(i == j) for j in range(n)] for i in range(n)], n, n)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], rows: int) -> IntMatrix:
        columns = list(columns)
        return cls([[c[i] for c in columns] for i in range(rows)], rows, len(columns))

    @classmethod
    def diagonal_matrix(cls, entries: Sequence[int]) -> IntMatrix:
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)], n, n)

    @property
    def entries(self) -> tuple[int, ...]:
        return tuple(x for row in self._data for x in row)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self._data]

    def row(self, i: int) -> tuple[int, ...]:
        return self._data[i]

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self._data)

    def columns(self) -> list[tuple[int, ...]]:
        return [self.column(j) for j in range(self.cols)]

    def __getitem__(self, key: tuple[int, int]) -> int:
        i, j = key
        return self._data[i][j]

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return (self.rows, self.cols, self._data) == (other.rows, other.cols, other._data)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.rows, self.cols, self._data))
        return self._hash

    def __repr__(self) -> str:
        return f"IntMatrix({self.tolist()!r})" if self.rows else f"IntMatrix([], 0, {self.cols})"

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def transpose(self) -> IntMatrix:
        return IntMatrix([[self._data[i][j] for i in range(self.rows)] for j in range(self.cols)],
                         self.cols, self.rows)

    T = property(transpose)

    def __matmul__(self, other: IntMatrix) -> IntMatrix:
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        ocols = other.columns()
        return IntMatrix([[sum(a * b for a, b in zip(row, c)) for c in ocols] for row in self._data],
                         self.rows, other.cols)

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        if len(v) != self.cols:
            raise ValueError("dimension mismatch")
        return tuple(sum(a * b for a, b in zip(row, v)) for row in self._data)

    def __neg__(self) -> IntMatrix:
        return IntMatrix([[-x for x in r] for r in self._data], self.rows, self.cols)

    def __add__(self, other: IntMatrix) -> IntMatrix:
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return IntMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)],
                         self.rows, self.cols)

    def hstack(self, other: IntMatrix) -> IntMatrix:
        if self.rows != other.rows:
            raise ValueError("row count mismatch")
        return IntMatrix([r + s for r, s in zip(self._data, other._data)], self.rows,
                         self.cols + other.cols)

    def vstack(self, other: IntMatrix) -> IntMatrix:
        if self.cols != other.cols:
            raise ValueError("column count mismatch")
        return IntMatrix(self._data + other._data, self.rows + other.rows, self.cols)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> IntMatrix:
        return IntMatrix([[self._data[i][j] for j in cols] for i in rows], len(rows), len(cols))

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and all(
            self._data[i][j] == self._data[j][i] for i in range(self.rows) for j in range(i))

    def determinant(self) -> int:
        """Exact determinant by fraction-free (Bareiss) elimination."""
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        a = self.tolist()
        sign, prev = 1, 1
        for k in range(n - 1):
            if a[k][k] == 0:
                for i in range(k + 1, n):
                    if a[i][k] != 0:
                        a[k], a[i] = a[i], a[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return sign * a[n - 1][n - 1] if n else 1


def as_matrix(m) -> IntMatrix:
    return m if isinstance(m, IntMatrix) else IntMatrix(m)


@dataclass(frozen=True)
class SmithDecomposition:
    U: IntMatrix
    D: IntMatrix
    V: IntMatrix

    def diagonal(self) -> list[int]:
        return [self.D[i, i] for i in range(min(self.D.rows, self.D.cols))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal() if d != 0)


def smith_normal_form(M) -> SmithDecomposition:
    """Return unimodular U, V and diagonal D with U*M*V = D and d1 | d2 | ...

    Pivots are chosen with minimal absolute value (first in row-major order),
    which keeps intermediate entries small and makes the output deterministic.
    """
    M = as_matrix(M)
    m, n = M.shape
    a = M.tolist()
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for r in a:
            r[i], r[j] = r[j], r[i]
        for r in v:
            r[i], r[j] = r[j], r[i]

    def add_row(src, dst, c):  # row dst += c * row src
        a[dst] = [x + c * y for x, y in zip(a[dst], a[src])]
        u[dst] = [x + c * y for x, y in zip(u[dst], u[src])]

    def add_col(src, dst, c):  # col dst += c * col src
        for r in a:
            r[dst] += c * r[src]
        for r in v:
            r[dst] += c * r[src]

    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    x = a[i][j]
                    if x and (best is None or abs(x) < best[0]):
                        best = (abs(x), i, j)
            if best is None:
                break
            _, i, j = best
            if i != t:
                swap_rows(i, t)
            if j != t:
                swap_cols(j, t)
            p = a[t][t]
            dirty = False
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(t, i, -(a[i][t] // p))
                    dirty = dirty or a[i][t] != 0
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(t, j, -(a[t][j] // p))
                    dirty = dirty or a[t][j] != 0
            if dirty:
                continue
            bad = next((i for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % p), None)
            if bad is None:
                break
            add_row(bad, t, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
        if all(a[i][j] == 0 for i in range(t, m) for j in range(t, n)):
            break
    return SmithDecomposition(IntMatrix(u, m, m), IntMatrix(a, m, n), IntMatrix(v, n, n))


def unimodular_inverse(U: IntMatrix) -> IntMatrix:
    """Inverse of a unimodular matrix, computed exactly."""
    n = U.rows
    aug = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(U.tolist())]
    for col in range(n):
        # gcd elimination below the diagonal
        while True:
            nz = [i for i in range(col, n) if aug[i][col]]
            if not nz:
                raise ValueError("matrix is singular")
            piv = min(nz, key=lambda i: abs(aug[i][col]))
            aug[col], aug[piv] = aug[piv], aug[col]
            done = True
            for i in range(col + 1, n):
                if aug[i][col]:
                    q = aug[i][col] // aug[col][col]
                    aug[i] = [x - q * y for x, y in zip(aug[i], aug[col])]
                    done = done and aug[i][col] == 0
            if done:
                break
        if abs(aug[col][col]) != 1:
            raise ValueError("matrix is not unimodular")
        if aug[col][col] < 0:
            aug[col] = [-x for x in aug[col]]
    for col in range(n - 1, -1, -1):
        for i in range(col):
            q = aug[i][col]
            if q:
                aug[i] = [x - q * y for x, y in zip(aug[i], aug[col])]
    return IntMatrix([r[n:] for r in aug], n, n)


def hermite_rows(vectors: Iterable[Sequence[int]], dim: int) -> list[tuple[int, ...]]:
    """Row-style Hermite normal form of the lattice spanned by `vectors`.

    Pivots are positive and entries above a pivot lie in [0, pivot). The result
    depends only on the lattice, which gives canonical bases.
    """
    rows = [list(v) for v in vectors if any(v)]
    out: list[list[int]] = []
    for col in range(dim):
        active = [r for r in rows if r[col]]
        rest = [r for r in rows if not r[col]]
        while len(active) > 1:
            active.sort(key=lambda r: abs(r[col]))
            p = active[0]
            nxt = [p]
            for r in active[1:]:
                q = r[col] // p[col]
                r = [x - q * y for x, y in zip(r, p)]
                (nxt if r[col] else rest).append(r)
            active = nxt
        rows = [r for r in rest if any(r)]
        if active:
            p = active[0]
            if p[col] < 0:
                p = [-x for x in p]
            out.append(p)
    for idx, p in enumerate(out):
        col = next(j for j, x in enumerate(p) if x)
        for k in range(idx):
            q = out[k][col] // p[col]
            if q:
                out[k] = [x - q * y for x, y in zip(out[k], p)]
    return [tuple(r) for r in out]


def kernel_basis(M) -> IntMatrix:
    """Columns form a saturated basis of the integer kernel of M (canonical HNF)."""
    M = as_matrix(M)
    snf = smith_normal_form(M)
    r = snf.rank
    cols = [snf.V.column(j) for j in range(r, M.cols)]
    basis = hermite_rows(cols, M.cols)
    return IntMatrix.from_columns(basis, M.cols)


def solve_integer(M, b: Sequence[int]) -> tuple[int, ...] | None:
    """Some integer x with M x = b, or None when no integer solution exists."""
    M = as_matrix(M)
    snf = smith_normal_form(M)
    c = snf.U.apply(b)
    d = snf.diagonal()
    y = [0] * M.cols
    for i, ci in enumerate(c):
        di = d[i] if i < len(d) else 0
        if di == 0:
            if ci != 0:
                return None
        else:
            if ci % di:
                return None
            y[i] = ci // di
    return snf.V.apply(y)


def _factor(n: int) -> list[tuple[int, int]]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def prime_power(n: int) -> tuple[int, int] | None:
    """(p, k) with n = p**k, or None."""
    f = _factor(n) if n > 1 else []
    return f[0] if len(f) == 1 else None


@dataclass(frozen=True)
class FinAbGroup:
    """Z/o_1 + ... + Z/o_s + Z^free_rank with each o_i a prime power.

    Orders are sorted by prime and then exponent. Elements are integer tuples,
    one coordinate per cyclic factor (reduced) followed by the free coordinates.
    """

    orders: tuple[int, ...] = ()
    free_rank: int = 0

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(int(o) for o in self.orders))
        keys = []
        for o in self.orders:
            pk = prime_power(o)
            if pk is None:
                raise ValueError(f"cyclic order {o} is not a prime power")
            keys.append(pk)
        if keys != sorted(keys):
            raise ValueError(f"orders {self.orders} are not sorted by prime then exponent")
        if self.free_rank < 0:
            raise ValueError("negative free rank")

    @staticmethod
    def sort_key(order: int) -> tuple[int, int]:
        return prime_power(order)

    @classmethod
    def from_orders(cls, orders: Sequence[int], free_rank: int = 0) -> FinAbGroup:
        """Group from arbitrary orders: split into primary parts and sort."""
        parts = []
        for o in orders:
            for p, e in _factor(int(o)):
                parts.append(p ** e)
        return cls(tuple(sorted(parts, key=prime_power)), free_rank)

    @property
    def ngens(self) -> int:
        return len(self.orders) + self.free_rank

    @property
    def order(self) -> int:
        """Order of the torsion subgroup."""
        return math.prod(self.orders)

    @property
    def exponent(self) -> int:
        return math.lcm(*self.orders) if self.orders else 1

    def is_finite(self) -> bool:
        return self.free_rank == 0

    def torsion(self) -> FinAbGroup:
        return FinAbGroup(self.orders, 0)

    def primes(self) -> list[int]:
        return sorted({prime_power(o)[0] for o in self.orders})

    def reduce(self, x: Sequence[int]) -> tuple[int, ...]:
        if len(x) != self.ngens:
            raise ValueError(f"element {tuple(x)} has wrong length for {self}")
        s = len(self.orders)
        return tuple(xi % o for xi, o in zip(x, self.orders)) + tuple(x[s:])

    def zero(self) -> tuple[int, ...]:
        return (0,) * self.ngens

    def add(self, x, y) -> tuple[int, ...]:
        return self.reduce([a + b for a, b in zip(x, y)])

    def neg(self, x) -> tuple[int, ...]:
        return self.reduce([-a for a in x])

    def scale(self, c: int, x) -> tuple[int, ...]:
        return self.reduce([c * a for a in x])

    def generator(self, i: int) -> tuple[int, ...]:
        return tuple(int(j == i) for j in range(self.ngens))

    def element_order(self, x) -> int:
        """Order of x; 0 when x has a nonzero free coordinate."""
        s = len(self.orders)
        if any(x[s:]):
            return 0
        return math.lcm(1, *(o // math.gcd(o, xi) for o, xi in zip(self.orders, x)))

    def elements(self) -> Iterator[tuple[int, ...]]:
        """All torsion elements, lexicographic in the coordinates."""
        tail = (0,) * self.free_rank
        for x in itertools.product(*(range(o) for o in self.orders)):
            yield x + tail

    def index(self, x) -> int:
        """Position of a torsion element in `elements()`."""
        idx = 0
        for xi, o in zip(x, self.orders):
            idx = idx * o + xi % o
        return idx

    def direct_sum(self, other: FinAbGroup) -> tuple[FinAbGroup, list[int]]:
        """Sum group and, for each generator of self then other, its new position."""
        pairs = [(prime_power(o), 0, i, o) for i, o in enumerate(self.orders)]
        pairs += [(prime_power(o), 1, i, o) for i, o in enumerate(other.orders)]
        ordered = sorted(pairs)
        pos = {(side, i): k for k, (_, side, i, _) in enumerate(ordered)}
        ns = len(ordered)
        perm = [pos[(0, i)] for i in range(len(self.orders))]
        perm += [ns + i for i in range(self.free_rank)]
        perm += [pos[(1, i)] for i in range(len(other.orders))]
        perm += [ns + self.free_rank + i for i in range(other.free_rank)]
        return FinAbGroup(tuple(o for *_, o in ordered), self.free_rank + other.free_rank), perm

    def is_isomorphic(self, other: FinAbGroup) -> bool:
        return self == other


@dataclass(frozen=True)
class GroupHom:
    """Homomorphism given by the images of the source generators (columns)."""

    source: FinAbGroup
    target: FinAbGroup
    matrix: IntMatrix

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape != (self.target.ngens, self.source.ngens):
            raise ValueError(f"matrix shape {m.shape} does not match groups")
        cols = [self.target.reduce(c) for c in m.columns()]
        m = IntMatrix.from_columns(cols, self.target.ngens) if cols else \
            IntMatrix.zeros(self.target.ngens, 0)
        object.__setattr__(self, "matrix", m)
        for o, c in zip(self.source.orders, cols):
            if any(self.target.scale(o, c)):
                raise ValueError("images do not respect the orders of the source generators")

    @classmethod
    def from_images(cls, source: FinAbGroup, target: FinAbGroup, images) -> GroupHom:
        images = list(images)
        m = IntMatrix.from_columns(images, target.ngens) if images else \
            IntMatrix.zeros(target.ngens, 0)
        return cls(source, target, m)

    @classmethod
    def identity(cls, group: FinAbGroup) -> GroupHom:
        return cls(group, group, IntMatrix.identity(group.ngens))

    def __call__(self, x) -> tuple[int, ...]:
        return self.target.reduce(self.matrix.apply(x))

    def images(self) -> list[tuple[int, ...]]:
        return self.matrix.columns()

    def compose(self, first: GroupHom) -> GroupHom:
        """self after first."""
        if first.target != self.source:
            raise ValueError("groups do not compose")
        return GroupHom(first.source, self.target, self.matrix @ first.matrix)

    def image_order(self) -> int:
        """Order of the image of the source (finite source only)."""
        free = FinAbGroup((), self.source.ngens)
        lat = preimage_lattice(IntMatrix.identity(free.ngens), GroupHom(free, self.target, self.matrix))
        # the kernel lattice has index |image| inside Z^s
        return abs(lat.determinant()) if lat.rows == lat.cols else 0

    def is_isomorphism(self) -> bool:
        if not (self.source.is_finite() and self.target.is_finite()):
            raise ValueError("isomorphism test is only implemented for finite groups")
        return self.source.order == self.target.order and self.image_order() == self.target.order


def cokernel_with_lifts(M) -> tuple[FinAbGroup, GroupHom, IntMatrix]:
    """Cokernel of M: Z^n -> Z^m together with integer lifts of its generators.

    The projection is a homomorphism from the free group Z^m. The lifts are the
    columns of an m x ngens matrix whose projections are the standard generators.
    """
    M = as_matrix(M)
    m = M.rows
    snf = smith_normal_form(M)
    d = snf.diagonal()
    uinv = unimodular_inverse(snf.U) if m else IntMatrix.zeros(0, 0)
    factors = []  # (key, order, projection row, lift column)
    for i, di in enumerate(d):
        if di > 1:
            for p, e in _factor(di):
                pe = p ** e
                rest = di // pe
                # c = 1 mod p^e and 0 mod rest picks the p-primary generator
                c = (rest * pow(rest, -1, pe)) % di if rest > 1 else 1
                row = [x % pe for x in snf.U.row(i)]
                lift = [c * x for x in uinv.column(i)]
                factors.append(((p, e, i), pe, row, lift))
    factors.sort(key=lambda f: f[0])
    free = [i for i in range(m) if i >= len(d) or d[i] == 0]
    group = FinAbGroup(tuple(f[1] for f in factors), len(free))
    rows = [f[2] for f in factors] + [list(snf.U.row(i)) for i in free]
    lifts = [f[3] for f in factors] + [list(uinv.column(i)) for i in free]
    proj = GroupHom(FinAbGroup((), m), group, IntMatrix(rows, group.ngens, m))
    lift_m = IntMatrix.from_columns(lifts, m) if lifts else IntMatrix.zeros(m, 0)
    return group, proj, lift_m


def cokernel(M) -> tuple[FinAbGroup, GroupHom]:
    """Cok(M) in primary decomposition plus the projection from the codomain."""
    group, proj, _ = cokernel_with_lifts(M)
    return group, proj


def preimage_lattice(M, target_hom: GroupHom) -> IntMatrix:
    """Basis (columns, HNF) of {v : target_hom(M v) = 0}."""
    M = as_matrix(M)
    tgt = target_hom.target
    if target_hom.source.ngens != M.rows:
        raise ValueError("homomorphism does not compose with the matrix")
    A = target_hom.matrix @ M
    s = len(tgt.orders)
    n = M.cols
    rows = []
    for i in range(A.rows):
        extra = [0] * s
        if i < s:
            extra[i] = tgt.orders[i]
        rows.append(list(A.row(i)) + extra)
    if not rows:
        return IntMatrix.identity(n)
    K = kernel_basis(IntMatrix(rows, A.rows, n + s))
    gens = [c[:n] for c in K.columns()]
    basis = hermite_rows(gens, n)
    return IntMatrix.from_columns(basis, n) if basis else IntMatrix.zeros(n, 0)
