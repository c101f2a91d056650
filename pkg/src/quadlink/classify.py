"""Gluing and splitting, stable equivalence, and classification of linking data."""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from .quadratic import (BoundExceededError, QuadraticFunction, category, has_even_gram,
                        inverse_pairing, is_characteristic, _entry_key)
from .torsion import (DEFAULT_CAP, LinkingForm, QuadraticLinkingFunction, WilkensData,
                      boundary_presentation, boundary_quadratic, brute_isometry,
                      brute_wilkens_isometry, check_cap, elements,
                      homogeneous_refinement, is_qlf_isometry, kervaire_arf, modz,
                      primary_decompose, snap_rational, translate, wilkens_data)
from .zmodule import (FinAbGroup, GroupHom, IntMatrix, as_matrix, cokernel, kernel_basis,
                      preimage_lattice, prime_power, smith_normal_form, solve_integer)


class NotFoundAtBoundsError(BoundExceededError):
    """A bounded search ended without a witness."""


# ---------------------------------------------------------------------------
# gluing and splitting

@dataclass(frozen=True)
class GlueResult:
    """Glued function on H (in `basis` coordinates) with the embeddings of both pieces.

    `basis` columns live in H0* + H1*; i0 and i1 send the standard bases of H0
    and H1 to H-coordinates, isometrically from kappa0 and from kappa1 reversed.
    """

    kappa: QuadraticFunction
    basis: IntMatrix
    i0: IntMatrix
    i1: IntMatrix


def common_kind(k0: QuadraticFunction, k1: QuadraticFunction) -> str:
    """Boundary formula shared by two functions: 'c' or 'ev'."""
    if is_characteristic(k0) and is_characteristic(k1):
        return "c"
    if has_even_gram(k0) and has_even_gram(k1):
        return "ev"
    raise ValueError("functions do not share a characteristic or even flavor")


def glue(k0: QuadraticFunction, k1: QuadraticFunction, theta: GroupHom,
         kind: str | None = None) -> GlueResult:
    """kappa0 glued along theta to kappa1 reversed.

    H = {(x0, x1) in H0* + H1* : theta[x0] = [x1]} with pairing
    lambda0^{-1}(x0, y0) - lambda1^{-1}(x1, y1) and linear term
    lambda0^{-1}(alpha0, x0) - lambda1^{-1}(alpha1, x1).
    """
    if not (k0.is_nondegenerate() and k1.is_nondegenerate()):
        raise ValueError("gluing needs nondegenerate pieces")
    kind = kind or common_kind(k0, k1)
    p0, p1 = boundary_presentation(k0), boundary_presentation(k1)
    q0, q1 = boundary_quadratic(k0, kind), boundary_quadratic(k1, kind)
    if not is_qlf_isometry(theta, q0, q1):
        raise ValueError("theta is not an isometry of the boundary quadratic linking functions")
    n0, n1 = k0.rank, k1.rank
    ambient = FinAbGroup((), n0 + n1)
    cols = [p1.group.neg(theta(p0.projection.matrix.column(j))) for j in range(n0)]
    cols += [p1.projection.matrix.column(j) for j in range(n1)]
    relation = GroupHom.from_images(ambient, p1.group, cols)
    basis = preimage_lattice(IntMatrix.identity(n0 + n1), relation)
    vecs = basis.columns()

    def pair(u, v) -> Fraction:
        return (inverse_pairing(k0.gram, u[:n0], v[:n0])
                - inverse_pairing(k1.gram, u[n0:], v[n0:]))

    gram = []
    for u in vecs:
        row = []
        for v in vecs:
            x = pair(u, v)
            if x.denominator != 1:
                raise ArithmeticError(f"non-integral glued pairing {x}")
            row.append(int(x))
        gram.append(row)
    alpha_cov = tuple(k0.linear) + tuple(k1.linear)
    lin = []
    for u in vecs:
        x = pair(alpha_cov, u)
        if x.denominator != 1:
            raise ArithmeticError(f"non-integral glued linear term {x}")
        lin.append(int(x))
    n = len(vecs)
    kappa = QuadraticFunction(IntMatrix(gram, n, n), tuple(lin))

    def embed(vectors):
        out = []
        for v in vectors:
            c = solve_integer(basis, v)
            if c is None:
                raise ArithmeticError("embedded vector is not in the glued lattice")
            out.append(c)
        return IntMatrix.from_columns(out, n) if out else IntMatrix.zeros(n, 0)

    i0 = embed([tuple(k0.gram.column(j)) + (0,) * n1 for j in range(n0)])
    i1 = embed([(0,) * n0 + tuple(-x for x in k1.gram.column(j)) for j in range(n1)])
    return GlueResult(kappa, basis, i0, i1)


@dataclass(frozen=True)
class SplitResult:
    kappa0: QuadraticFunction
    kappa1: QuadraticFunction
    theta: GroupHom
    complement_basis: IntMatrix


def split(k: QuadraticFunction, h0_basis, kind: str | None = None) -> SplitResult:
    """Split a nonsingular kappa along the span of h0_basis.

    Returns kappa0 = kappa on H0, kappa1 = (kappa on the orthogonal complement)
    reversed, and the boundary isometry theta: TG0 -> TG1 with
    kappa = kappa0 glued along theta to kappa1 reversed.
    """
    if not k.is_nonsingular():
        raise ValueError("split needs a nonsingular function")
    B0 = as_matrix(h0_basis)
    if B0.rows != k.rank:
        raise ValueError("basis vectors have the wrong length")
    d = smith_normal_form(B0).diagonal()
    if len(d) < B0.cols or any(x != 1 for x in d[:B0.cols]):
        raise ValueError("basis does not span a direct summand")
    k0 = k.restrict(B0)
    if not k0.is_nondegenerate():
        raise ValueError("restriction to the summand is degenerate")
    B1 = kernel_basis(B0.T @ k.gram)
    r1 = k.restrict(B1)
    k1 = QuadraticFunction(-r1.gram, r1.linear)
    kind = kind or category(k)
    p0, p1 = boundary_presentation(k0), boundary_presentation(k1)
    images = []
    for i in range(p0.group.ngens):
        w = solve_integer(B0.T, p0.lift(i))
        if w is None:
            raise ArithmeticError("summand restriction is not surjective")
        images.append(p1.projection(B1.T.apply(w)))
    theta = GroupHom.from_images(p0.group, p1.group, images)
    if not is_qlf_isometry(theta, boundary_quadratic(k0, kind), boundary_quadratic(k1, kind)):
        raise ArithmeticError("extracted boundary map is not an isometry")
    return SplitResult(k0, k1, theta, B1)


def induced_boundary_map(src: QuadraticFunction, dst: QuadraticFunction, change) -> GroupHom:
    """TG(src) -> TG(dst) when dst = src restricted to the columns of `change`."""
    C = as_matrix(change)
    ps, pd = boundary_presentation(src), boundary_presentation(dst)
    images = [pd.projection(C.T.apply(ps.lift(i))) for i in range(ps.group.ngens)]
    return GroupHom.from_images(ps.group, pd.group, images)


@dataclass(frozen=True)
class StableVerdict:
    equivalent: bool
    witness: QuadraticFunction | None = None


def stably_equivalent(k0: QuadraticFunction, k1: QuadraticFunction,
                      cap: int | None = DEFAULT_CAP) -> StableVerdict:
    """Stable equivalence decided by isometry of the boundary families.

    When equivalent, the witness is the nonsingular function obtained by gluing
    kappa0 on a section to kappa1 on a matched section.
    """
    from .manifolds import family_of, families_isometric, matched_section

    kind = common_kind(k0, k1)
    f0, f1 = family_of(k0, kind), family_of(k1, kind)
    verdict = families_isometric(f0, f1, cap)
    if not verdict.isometric:
        return StableVerdict(False)
    s0 = matched_section(k0, f0, None)
    s1 = matched_section(k1, f1, verdict.shift)
    return StableVerdict(True, glue(s0, s1, verdict.theta, kind).kappa)


# ---------------------------------------------------------------------------
# Kawauchi-Kojima invariants

@dataclass(frozen=True)
class KKInvariants:
    """Ranks r_p^k, 2-primary c^k flags and phases sigma_k, odd discriminant classes.

    sigma maps a level to an integer mod 8, or None for the infinite value.
    """

    ranks: dict = field(default_factory=dict)
    sigma: dict = field(default_factory=dict)
    char_nonzero: dict = field(default_factory=dict)
    odd_discriminants: dict = field(default_factory=dict)

    def key(self) -> tuple:
        return tuple(tuple(sorted(d.items())) for d in
                     (self.ranks, self.sigma, self.char_nonzero, self.odd_discriminants))


def _levels(b: LinkingForm) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for i, o in enumerate(b.group.orders):
        out.setdefault(prime_power(o)[1], []).append(i)
    return out


def gauss_sum_level(b: LinkingForm, k: int) -> complex:
    """GS_k(b) over coset representatives of G / (elements of order <= 2^k)."""
    D = b.exponent
    B = b.int_gram
    orders = b.group.orders
    idx = [i for i, o in enumerate(orders) if o > 2 ** k]
    ranges = [range(orders[i] >> k) for i in idx]
    scale = 2 ** (k - 1)
    counts: dict[int, int] = {}
    for xs in itertools.product(*ranges):
        v = 0
        for a, i in enumerate(idx):
            xi = xs[a]
            if not xi:
                continue
            v += xi * xi * B[i][i]
            for c in range(a + 1, len(idx)):
                v += 2 * xi * xs[c] * B[i][idx[c]]
        v = (v * scale) % D
        counts[v] = counts.get(v, 0) + 1
    return sum(c * cmath.exp(2j * math.pi * v / D) for v, c in counts.items())


def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def _det_mod(rows: list[list[int]], p: int) -> int:
    m = [[x % p for x in r] for r in rows]
    n = len(m)
    det = 1
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det = det * m[c][c] % p
        inv = pow(m[c][c], -1, p)
        for r in range(c + 1, n):
            f = m[r][c] * inv % p
            if f:
                m[r] = [(x - f * y) % p for x, y in zip(m[r], m[c])]
    return det % p


def kk_invariants(b: LinkingForm, cap: int | None = DEFAULT_CAP) -> KKInvariants:
    check_cap(b.group, cap)
    ranks, sigma, char, odd = {}, {}, {}, {}
    for p, part in primary_decompose(b):
        levels = _levels(part)
        for k, idx in levels.items():
            ranks[(p, k)] = len(idx)
        if p == 2:
            for k in range(1, max(levels) + 1):
                # c^k is nonzero iff the F2-linear map x -> 2^{k-1} b(x, x) is
                # nonzero on the order 2^k generators
                nonzero = any(modz(2 ** (k - 1) * part.gram[i][i]) == Fraction(1, 2)
                              for i in levels.get(k, []))
                char[k] = nonzero
                if nonzero:
                    sigma[k] = None
                    continue
                gs = gauss_sum_level(part, k)
                if abs(gs) < 1e-9:
                    raise ArithmeticError(f"GS_{k} vanished")
                turn = snap_rational(cmath.phase(gs) / (2 * math.pi), 8)
                sigma[k] = int(turn * 8)
        else:
            for k, idx in levels.items():
                pk = p ** k
                rows = [[int(part.gram[i][j] * pk) for j in idx] for i in idx]
                odd[(p, k)] = _legendre(_det_mod(rows, p), p)
    return KKInvariants(ranks, sigma, char, odd)


def linking_forms_isometric(b0: LinkingForm, b1: LinkingForm, cap: int | None = DEFAULT_CAP) -> bool:
    """Isometry of linking forms from the rank, phase and discriminant invariants."""
    if b0.group.orders != b1.group.orders:
        return False
    return kk_invariants(b0, cap).key() == kk_invariants(b1, cap).key()


def qlf_isometric(q0: QuadraticLinkingFunction, q1: QuadraticLinkingFunction,
                  cap: int | None = DEFAULT_CAP) -> bool:
    """q0 and q1 are isometric iff their Wilkens pairs are and their K values agree."""
    if q0.group.orders != q1.group.orders:
        return False
    if kervaire_arf(q0, cap) != kervaire_arf(q1, cap):
        return False
    return brute_wilkens_isometry(wilkens_data(q0), wilkens_data(q1), cap) is not None


# ---------------------------------------------------------------------------
# generators

@dataclass(frozen=True)
class GeneratorName:
    """A(p, k, n), E0(k) or E1(k)."""

    family: str
    k: int
    p: int = 2
    n: int = 1

    def __post_init__(self):
        if self.family not in ("A", "E0", "E1"):
            raise ValueError(f"unknown generator family {self.family!r}")
        if self.k < 1:
            raise ValueError("level must be at least 1")
        if self.family == "E1" and self.k < 2:
            raise ValueError("E1 needs level at least 2")
        if self.family == "A":
            if prime_power(self.p) != (self.p, 1):
                raise ValueError(f"{self.p} is not a prime")
            if self.n % self.p == 0:
                raise ValueError("n must be a unit")
        elif self.p != 2:
            raise ValueError("E generators are 2-primary")

    def __str__(self) -> str:
        if self.family == "A":
            return f"A({self.p},{self.k},{self.n})"
        return f"{self.family}({self.k})"

    @classmethod
    def parse(cls, text: str) -> GeneratorName:
        text = text.strip().replace(" ", "")
        head, _, rest = text.partition("(")
        args = [int(a) for a in rest.rstrip(")").split(",") if a]
        if head == "A":
            if len(args) != 3:
                raise ValueError("A takes (p,k,n)")
            return cls("A", args[1], args[0], args[2])
        if head in ("E0", "E1") and len(args) == 1:
            return cls(head, args[0])
        raise ValueError(f"cannot parse generator name {text!r}")


def catalog_linking_form(name: GeneratorName) -> LinkingForm:
    k = name.k
    if name.family == "A":
        pk = name.p ** k
        return LinkingForm(FinAbGroup((pk,)), ((Fraction(name.n, pk),),))
    o = 2 ** k
    off = Fraction(1, o)
    diag = Fraction(0) if name.family == "E0" else Fraction(2, o)
    return LinkingForm(FinAbGroup((o, o)), ((diag, off), (off, diag)))


def generator_catalog(name: GeneratorName, refine=None) -> QuadraticLinkingFunction:
    """The catalog refinement of a generator, optionally translated by `refine`."""
    b = catalog_linking_form(name)
    k = name.k
    if name.family == "A" and name.p == 2:
        q = QuadraticLinkingFunction(b, (Fraction(name.n, 2 ** (k + 1)),))
    elif name.family == "A":
        q = homogeneous_refinement(b)
    elif name.family == "E0":
        q = QuadraticLinkingFunction(b, (Fraction(0), Fraction(0)))
    else:
        q = QuadraticLinkingFunction(b, (Fraction(1, 2 ** k), Fraction(1, 2 ** k)))
    return translate(q, refine) if refine is not None else q


def kk_generator(family: str, k: int, n: int = 1) -> LinkingForm:
    """2-primary generator A^k(n), E^{k,0} or E^{k,1} as a linking form."""
    if family == "A":
        return catalog_linking_form(GeneratorName("A", k, 2, n % 2 ** k))
    return catalog_linking_form(GeneratorName(family, k))


def block_sum(*forms: LinkingForm) -> LinkingForm:
    total = LinkingForm.trivial()
    for f in forms:
        total = total.direct_sum(f)[0]
    return total


def legal_units(k: int) -> tuple[int, ...]:
    """Admissible n for A^k(n) in the 2-primary presentation."""
    if k == 1:
        return (1,)
    if k == 2:
        return (1, -1)
    return (1, -1, 5, -5)


def kk_relations(k: int, corrected: bool = False) -> Iterator[tuple[str, LinkingForm, LinkingForm]]:
    """All instances at level k of the defining relations among 2-primary generators.

    As stated, (0.3) has E0 on the right; with `corrected` it uses E1, which is
    the form that actually matches 3 A^k(n).
    """
    A = lambda lev, n: kk_generator("A", lev, n)
    E0 = lambda lev: kk_generator("E0", lev)
    E1 = lambda lev: kk_generator("E1", lev)
    units, up1, up2 = legal_units(k), legal_units(k + 1), legal_units(k + 2)
    if k >= 3:
        for n1, n2 in itertools.product(units, repeat=2):
            yield (f"(0.1) n1={n1} n2={n2}", block_sum(A(k, n1), A(k, n2)),
                   block_sum(A(k, n1 + 4), A(k, n2 + 4)))
    for n in units:
        yield (f"(0.2) n={n}", block_sum(A(k, n), A(k, -n), A(k, -n)),
               block_sum(A(k, -n), E0(k)))
    if k >= 2:
        for n in units:
            yield (f"(0.3) n={n}", block_sum(A(k, n), A(k, n), A(k, n)),
                   block_sum(A(k, -n + 4), E1(k) if corrected else E0(k)))
        yield ("(0.4)", block_sum(E0(k), E0(k)), block_sum(E1(k), E1(k)))
    for n1, n2 in itertools.product(units, up1):
        yield (f"(1.1) n1={n1} n2={n2}", block_sum(A(k, n1), A(k + 1, n2)),
               block_sum(A(k, n1 + 2 * n2), A(k + 1, n2 + 2 * n1)))
    for n in units:
        yield (f"(1.2) n={n}", block_sum(A(k, n), E1(k + 1)), block_sum(A(k, n + 4), E0(k + 1)))
    if k >= 2:
        for n in up1:
            yield (f"(1.3) n={n}", block_sum(E1(k), A(k + 1, n)),
                   block_sum(E0(k), A(k + 1, n + 4)))
    for n1, n2 in itertools.product(units, up2):
        yield (f"(2.1) n1={n1} n2={n2}", block_sum(A(k, n1), A(k + 2, n2)),
               block_sum(A(k, n1 + 4), A(k + 2, n2 + 4)))


# ---------------------------------------------------------------------------
# realization

def _gram_candidates(rank: int, bound: int) -> Iterator[IntMatrix]:
    """Symmetric matrices with max |entry| exactly `bound`, small entries first."""
    values = sorted(range(-bound, bound + 1), key=_entry_key)
    slots = [(i, j) for i in range(rank) for j in range(i, rank)]
    for entries in itertools.product(values, repeat=len(slots)):
        if max(abs(x) for x in entries) != bound:
            continue
        rows = [[0] * rank for _ in range(rank)]
        for (i, j), x in zip(slots, entries):
            rows[i][j] = rows[j][i] = x
        yield IntMatrix(rows, rank, rank)


@lru_cache(maxsize=1024)
def realize(q: QuadraticLinkingFunction, rank_bound: int | None = None, entry_bound: int = 4,
            cap: int | None = DEFAULT_CAP) -> QuadraticFunction:
    """A characteristic kappa whose boundary is isometric to q, by bounded search.

    Grams are tried by rank, then by entry size; for each candidate Gram the
    linear term is the parity vector plus twice a lift of some a in G, since
    such shifts translate the boundary function by a.
    """
    check_cap(q.group, cap)
    if q.group.order == 1:
        return QuadraticFunction.empty()
    start = q.group.ngens
    rank_bound = rank_bound if rank_bound is not None else start + 2
    target_k = kervaire_arf(q, cap)
    for rank in range(start, rank_bound + 1):
        for bound in range(1, entry_bound + 1):
            for gram in _gram_candidates(rank, bound):
                if abs(gram.determinant()) != q.group.order:
                    continue
                group, _ = cokernel(gram)
                if group != q.group:
                    continue
                base = tuple(gram[i, i] % 2 for i in range(rank))
                kappa0 = QuadraticFunction(gram, base)
                q0 = boundary_quadratic(kappa0, "c")
                pres = boundary_presentation(kappa0)
                for a in elements(q.group):
                    qa = translate(q0, a)
                    if kervaire_arf(qa, cap) != target_k:
                        continue
                    if brute_isometry(qa, q, cap) is not None:
                        shift = pres.lifts.apply(a)
                        return QuadraticFunction(gram, tuple(x + 2 * s for x, s in zip(base, shift)))
    raise NotFoundAtBoundsError(
        f"no realization with rank <= {rank_bound} and entries <= {entry_bound}")


# ---------------------------------------------------------------------------
# ambiguity

def is_indecomposable(b: LinkingForm) -> bool:
    orders = b.group.orders
    if len(orders) == 1:
        return True
    if len(orders) == 2 and orders[0] == orders[1] and orders[0] % 2 == 0:
        k = prime_power(orders[0])[1]
        return not kk_invariants(b, None).char_nonzero.get(k, False)
    return False


def is_ambiguous(w: WilkensData) -> bool:
    """Whether two non-isometric refinements share this indecomposable Wilkens pair."""
    if not is_indecomposable(w.b):
        raise ValueError("ambiguity is only defined for indecomposable linking forms")
    g = w.b.group
    if g.order % 2:
        return False
    if g.order <= 4:
        return not any(w.beta)
    return any(x % math.gcd(4, o) for x, o in zip(w.beta, g.orders))


def refinement_classes(w: WilkensData, cap: int | None = DEFAULT_CAP) -> list[QuadraticLinkingFunction]:
    """One representative per isometry class of refinements with Wilkens pair w."""
    base = homogeneous_refinement(w.b)
    reps: list[QuadraticLinkingFunction] = []
    for a in elements(w.b.group):
        if w.b.group.scale(2, a) != w.beta:
            continue
        q = translate(base, a)
        if not any(brute_isometry(q, r, cap) is not None for r in reps):
            reps.append(q)
    return reps


__all__ = [
    "GlueResult", "SplitResult", "StableVerdict", "KKInvariants", "GeneratorName",
    "NotFoundAtBoundsError", "glue", "split", "induced_boundary_map", "stably_equivalent",
    "common_kind", "kk_invariants", "gauss_sum_level", "linking_forms_isometric",
    "qlf_isometric", "catalog_linking_form", "generator_catalog", "kk_generator", "block_sum",
    "legal_units", "kk_relations", "realize", "is_indecomposable", "is_ambiguous",
    "refinement_classes",
]
