"""Linking forms and quadratic linking functions on finite abelian groups.

Values in Q/Z are Fractions normalized into [0, 1). A form stores its values on
the generators of the group; everything else follows by bilinearity or by the
polarization rule for quadratic refinements.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Sequence

from .quadratic import (BoundExceededError, QuadraticFunction, category, inverse_pairing,
                        is_characteristic, signature, split_by_section)
from .zmodule import (FinAbGroup, GroupHom, IntMatrix, cokernel_with_lifts, prime_power,
                      _factor)

DEFAULT_CAP = 4096


class CapExceededError(BoundExceededError):
    """A finite group is larger than the configured oracle cap."""


def modz(x) -> Fraction:
    """Reduce a rational into [0, 1)."""
    x = Fraction(x)
    return x - math.floor(x)


def check_cap(group: FinAbGroup, cap: int | None):
    if cap is not None and group.order > cap:
        raise CapExceededError(f"group of order {group.order} exceeds the cap {cap}")


@lru_cache(maxsize=256)
def _elements(orders: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    return tuple(FinAbGroup(orders).elements())


@lru_cache(maxsize=256)
def _element_orders(orders: tuple[int, ...]) -> tuple[int, ...]:
    g = FinAbGroup(orders)
    return tuple(g.element_order(x) for x in _elements(orders))


# ---------------------------------------------------------------------------
# linking forms

@dataclass(frozen=True)
class LinkingForm:
    """Nonsingular symmetric bilinear form b: G x G -> Q/Z on a finite group."""

    group: FinAbGroup
    gram: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        g = self.group
        if g.free_rank:
            raise ValueError("a linking form lives on a finite group")
        s = len(g.orders)
        gram = tuple(tuple(modz(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", gram)
        if len(gram) != s or any(len(r) != s for r in gram):
            raise ValueError("Gram table does not match the number of generators")
        for i in range(s):
            for j in range(s):
                if gram[i][j] != gram[j][i]:
                    raise ValueError("linking form must be symmetric")
                if math.gcd(g.orders[i], g.orders[j]) % gram[i][j].denominator:
                    raise ValueError(f"entry ({i},{j}) = {gram[i][j]} has an impossible denominator")
        if not self.adjoint().is_isomorphism():
            raise ValueError("linking form is singular")

    @classmethod
    def from_cyclic(cls, orders: Sequence[int], gram) -> LinkingForm:
        """Form on Z/d_1 + ... + Z/d_s with arbitrary d_i, split into primary parts."""
        group, coeffs = _primary_split(orders)
        table = [[modz(ci * cj * Fraction(gram[i][j]))
                  for (j, cj) in coeffs] for (i, ci) in coeffs]
        return cls(group, tuple(tuple(r) for r in table))

    @classmethod
    def trivial(cls) -> LinkingForm:
        return cls(FinAbGroup(), ())

    @cached_property
    def exponent(self) -> int:
        return self.group.exponent

    @cached_property
    def int_gram(self) -> tuple[tuple[int, ...], ...]:
        """Numerators of the Gram table over the exponent D."""
        D = self.exponent
        return tuple(tuple(int(x * D) for x in r) for r in self.gram)

    def __call__(self, x, y) -> Fraction:
        return self.pair(x, y)

    def pair(self, x, y) -> Fraction:
        B = self.int_gram
        s = len(B)
        return Fraction(sum(x[i] * B[i][j] * y[j] for i in range(s) for j in range(s)
                            if x[i] and y[j]) % self.exponent, self.exponent)

    def adjoint(self) -> GroupHom:
        """x -> b(x, -) as a map to the character group, identified with G."""
        o = self.group.orders
        cols = [[int(self.gram[i][j] * o[j]) for j in range(len(o))] for i in range(len(o))]
        return GroupHom.from_images(self.group, self.group, cols)

    def negate(self) -> LinkingForm:
        return LinkingForm(self.group, tuple(tuple(-x for x in r) for r in self.gram))

    def pullback(self, theta: GroupHom) -> LinkingForm:
        """b(theta x, theta y) on the source of theta."""
        imgs = theta.images()
        return LinkingForm(theta.source, tuple(tuple(self.pair(u, v) for v in imgs) for u in imgs))

    def direct_sum(self, other: LinkingForm) -> tuple[LinkingForm, list[int]]:
        group, perm = self.group.direct_sum(other.group)
        s = len(group.orders)
        table = [[Fraction(0)] * s for _ in range(s)]
        for src, off in ((self, 0), (other, len(self.group.orders))):
            n = len(src.group.orders)
            for i in range(n):
                for j in range(n):
                    table[perm[off + i]][perm[off + j]] = src.gram[i][j]
        return LinkingForm(group, tuple(tuple(r) for r in table)), perm

    def restrict_generators(self, idx: Sequence[int]) -> LinkingForm:
        return LinkingForm(FinAbGroup(tuple(self.group.orders[i] for i in idx)),
                           tuple(tuple(self.gram[i][j] for j in idx) for i in idx))


def _primary_split(orders: Sequence[int]):
    """Primary generators c * e_i of Z/d_i (c = 1 mod p^e, 0 mod d_i / p^e)."""
    items = []
    for i, d in enumerate(orders):
        d = int(d)
        for p, e in _factor(d):
            pe = p ** e
            rest = d // pe
            c = (rest * pow(rest, -1, pe)) % d if rest > 1 else 1
            items.append(((p, e), i, c, pe))
    items.sort(key=lambda t: t[0])
    group = FinAbGroup(tuple(t[3] for t in items))
    return group, [(t[1], t[2]) for t in items]


# ---------------------------------------------------------------------------
# quadratic linking functions

@dataclass(frozen=True)
class QuadraticLinkingFunction:
    """Quadratic refinement q of a linking form, stored by its generator values."""

    base: LinkingForm
    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(modz(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        o = self.base.group.orders
        if len(vals) != len(o):
            raise ValueError("one value per generator is required")
        for i, oi in enumerate(o):
            if modz(oi * vals[i] + Fraction(oi * (oi - 1), 2) * self.base.gram[i][i]) != 0:
                raise ValueError(f"value {vals[i]} on generator {i} is not well defined")

    @classmethod
    def from_cyclic(cls, orders: Sequence[int], gram, values) -> QuadraticLinkingFunction:
        group, coeffs = _primary_split(orders)
        table = [[modz(ci * cj * Fraction(gram[i][j])) for (j, cj) in coeffs] for (i, ci) in coeffs]
        vals = [modz(c * Fraction(values[i]) + Fraction(c * (c - 1), 2) * Fraction(gram[i][i]))
                for (i, c) in coeffs]
        return cls(LinkingForm(group, tuple(tuple(r) for r in table)), tuple(vals))

    @classmethod
    def trivial(cls) -> QuadraticLinkingFunction:
        return cls(LinkingForm.trivial(), ())

    @property
    def group(self) -> FinAbGroup:
        return self.base.group

    @cached_property
    def denominator(self) -> int:
        """Common denominator 2D of all values (D the exponent)."""
        return 2 * self.base.exponent

    @cached_property
    def _ints(self):
        N = self.denominator
        s = len(self.values)
        Q = [int(v * N) for v in self.values]
        B = [[int(self.base.gram[i][j] * N) for j in range(s)] for i in range(s)]
        return Q, B

    def __call__(self, x) -> Fraction:
        return Fraction(self._eval_int(x), self.denominator)

    def _eval_int(self, x) -> int:
        Q, B = self._ints
        s = len(Q)
        tot = 0
        for i in range(s):
            xi = x[i]
            if not xi:
                continue
            tot += xi * Q[i] + (xi * (xi - 1) // 2) * B[i][i]
            for j in range(i + 1, s):
                if x[j]:
                    tot += xi * x[j] * B[i][j]
        return tot % self.denominator

    @cached_property
    def table(self) -> tuple[int, ...]:
        """Numerators (over `denominator`) of q on every element, in element order."""
        return tuple(self._eval_int(x) for x in _elements(self.group.orders))

    def negate(self) -> QuadraticLinkingFunction:
        return QuadraticLinkingFunction(self.base.negate(), tuple(-v for v in self.values))

    def pullback(self, theta: GroupHom) -> QuadraticLinkingFunction:
        return QuadraticLinkingFunction(self.base.pullback(theta),
                                        tuple(self(x) for x in theta.images()))

    def is_homogeneous(self) -> bool:
        return all(modz(2 * v - self.base.gram[i][i]) == 0 for i, v in enumerate(self.values))

    def direct_sum(self, other: QuadraticLinkingFunction) -> tuple[QuadraticLinkingFunction, list[int]]:
        base, perm = self.base.direct_sum(other.base)
        vals = [Fraction(0)] * len(base.group.orders)
        n0 = len(self.values)
        for i, v in enumerate(self.values):
            vals[perm[i]] = v
        for i, v in enumerate(other.values):
            vals[perm[n0 + i]] = v
        return QuadraticLinkingFunction(base, tuple(vals)), perm

    def restrict_generators(self, idx: Sequence[int]) -> QuadraticLinkingFunction:
        return QuadraticLinkingFunction(self.base.restrict_generators(idx),
                                        tuple(self.values[i] for i in idx))


def direct_sum_all(parts: Sequence[QuadraticLinkingFunction]):
    """Block sum of several functions; also returns, per part, its generator positions."""
    total = QuadraticLinkingFunction.trivial()
    positions: list[list[int]] = []
    for part in parts:
        total, perm = total.direct_sum(part)
        n_old = sum(len(p) for p in positions)
        positions = [[perm[i] for i in pos] for pos in positions]
        positions.append([perm[n_old + i] for i in range(len(part.values))])
    return total, positions


@dataclass(frozen=True)
class WilkensData:
    """(b, beta) with beta = 2a where q = (homogeneous refinement)_a."""

    b: LinkingForm
    beta: tuple[int, ...]

    def __post_init__(self):
        beta = self.b.group.reduce(self.beta)
        object.__setattr__(self, "beta", beta)
        if not is_even(self.b.group, beta):
            raise ValueError("beta must be divisible by 2")


def is_even(group: FinAbGroup, x) -> bool:
    return all(xi % 2 == 0 for xi, o in zip(x, group.orders) if o % 2 == 0)


def translate(q: QuadraticLinkingFunction, a) -> QuadraticLinkingFunction:
    """q_a(x) = q(x) + b(x, a)."""
    a = q.group.reduce(a)
    g = q.group
    return QuadraticLinkingFunction(q.base, tuple(
        v + q.base.pair(g.generator(i), a) for i, v in enumerate(q.values)))


def homogeneous_refinement(b: LinkingForm) -> QuadraticLinkingFunction:
    """The canonical homogeneous refinement: 2 q(g) = b(g, g) on each generator.

    Odd order generators get the unique value with odd denominator; 2-power
    generators get the half-lift lying in [0, 1/2).
    """
    vals = []
    for i, o in enumerate(b.group.orders):
        bii = b.gram[i][i]
        if o % 2:
            vals.append(modz(bii * (o + 1) / 2))
        else:
            vals.append(bii / 2)
    return QuadraticLinkingFunction(b, tuple(vals))


def solve_adjoint(b: LinkingForm, values: Sequence[Fraction]) -> tuple[int, ...]:
    """The unique a with b(g_i, a) = values[i] for every generator g_i."""
    g = b.group
    o = g.orders
    D = b.exponent
    target = tuple(int(modz(v) * D) for v in values)
    B = b.int_gram
    s = len(o)
    # a scan over the group is exact and cheap at oracle sizes
    for a in _elements(o):
        if all(sum(B[i][j] * a[j] for j in range(s)) % D == target[i] for i in range(s)):
            return a
    raise ValueError("values do not define a character of the group")


def wilkens_data(q: QuadraticLinkingFunction) -> WilkensData:
    base = homogeneous_refinement(q.base)
    diff = [v - h for v, h in zip(q.values, base.values)]
    a = solve_adjoint(q.base, diff)
    return WilkensData(q.base, q.group.scale(2, a))


def linear_displacement(q: QuadraticLinkingFunction) -> tuple[int, ...]:
    """The element a with q = (homogeneous refinement)_a."""
    base = homogeneous_refinement(q.base)
    return solve_adjoint(q.base, [v - h for v, h in zip(q.values, base.values)])


def all_refinements(b: LinkingForm) -> list[QuadraticLinkingFunction]:
    """Every quadratic refinement of b, as translates of the homogeneous one."""
    base = homogeneous_refinement(b)
    return [translate(base, a) for a in _elements(b.group.orders)]


# ---------------------------------------------------------------------------
# Gauss sums

SNAP_TOLERANCE = 1e-6


def snap_rational(x: float, denominator: int, tol: float = SNAP_TOLERANCE) -> Fraction:
    """Nearest m/denominator to x (mod 1), failing if it is farther than tol."""
    m = round(x * denominator)
    if abs(x - m / denominator) > tol:
        raise ArithmeticError(f"{x!r} is not within {tol} of a multiple of 1/{denominator}")
    return modz(Fraction(m, denominator))


def phase_sum(counts: dict[int, int], denominator: int) -> complex:
    return sum(c * cmath.exp(2j * math.pi * k / denominator) for k, c in counts.items())


def gauss_invariant(q: QuadraticLinkingFunction, cap: int | None = DEFAULT_CAP) -> tuple[complex, Fraction]:
    """Normalized Gauss sum GS(q) and K(q) = arg GS / 2pi, snapped exactly."""
    check_cap(q.group, cap)
    counts: dict[int, int] = {}
    for v in q.table:
        counts[v] = counts.get(v, 0) + 1
    gs = phase_sum(counts, q.denominator) / math.sqrt(q.group.order)
    if abs(gs) < 1e-9:
        raise ArithmeticError("Gauss sum vanished; the form is not nonsingular")
    turns = cmath.phase(gs) / (2 * math.pi)
    return gs, snap_rational(turns, 8 * q.group.order)


def kervaire_arf(q: QuadraticLinkingFunction, cap: int | None = DEFAULT_CAP) -> Fraction:
    return gauss_invariant(q, cap)[1]


# ---------------------------------------------------------------------------
# presentations

@dataclass(frozen=True)
class BoundaryPresentation:
    """Torsion quotient of a nondegenerate kappa with integer lifts of its generators."""

    kappa: QuadraticFunction
    group: FinAbGroup
    projection: GroupHom
    lifts: IntMatrix

    def lift(self, i: int) -> tuple[int, ...]:
        return self.lifts.column(i)


def boundary_presentation(k: QuadraticFunction) -> BoundaryPresentation:
    """Cok(lambda_hat) of the nondegenerate part of kappa, with generator lifts."""
    if not k.is_nondegenerate():
        k = split_by_section(k)[1]
    group, proj, lifts = cokernel_with_lifts(k.gram)
    return BoundaryPresentation(k, group, proj, lifts)


def boundary_linking_form(k: QuadraticFunction) -> LinkingForm:
    """b(x, y) = lambda^{-1}(x, y) mod Z on the torsion of Cok(lambda_hat)."""
    pres = boundary_presentation(k)
    lifts = [pres.lift(i) for i in range(len(pres.group.orders))]
    g = pres.kappa.gram
    table = tuple(tuple(modz(inverse_pairing(g, x, y)) for y in lifts) for x in lifts)
    return LinkingForm(pres.group, table)


def boundary_quadratic(k: QuadraticFunction, kind: str | None = None) -> QuadraticLinkingFunction:
    """Boundary quadratic linking function of kappa.

    kind 'c': (lambda^{-1}(x,x) + lambda^{-1}(x,alpha)) / 2, needs kappa characteristic.
    kind 'ev': lambda^{-1}(x,x) / 2, needs an even Gram matrix.
    By default 'c' is used when kappa is characteristic and 'ev' otherwise.
    """
    kind = kind or category(k)
    if kind is None:
        raise ValueError("kappa is neither characteristic nor has an even Gram matrix")
    if kind == "c" and not is_characteristic(k):
        raise ValueError("the characteristic formula needs a characteristic kappa")
    if kind == "ev" and any(k.gram[i, i] % 2 for i in range(k.rank)):
        raise ValueError("the even formula needs an even Gram matrix")
    pres = boundary_presentation(k)
    kp = pres.kappa
    b = boundary_linking_form(k)
    vals = []
    for i in range(len(pres.group.orders)):
        x = pres.lift(i)
        v = inverse_pairing(kp.gram, x, x)
        if kind == "c":
            v += inverse_pairing(kp.gram, x, kp.linear)
        vals.append(v / 2)
    return QuadraticLinkingFunction(b, tuple(vals))


def sbar_from_presentation(k: QuadraticFunction) -> Fraction:
    """(lambda^{-1}(alpha, alpha) - sigma(lambda)) / 8 mod Z."""
    if not k.is_nondegenerate():
        raise ValueError("sbar needs a nondegenerate presentation")
    if not is_characteristic(k):
        raise ValueError("sbar needs a characteristic presentation")
    return modz((inverse_pairing(k.gram, k.linear, k.linear) - signature(k.gram)) / 8)


# ---------------------------------------------------------------------------
# primary decomposition

def primary_decompose(x):
    """[(p, component)] for a LinkingForm or QuadraticLinkingFunction."""
    b = x.base if isinstance(x, QuadraticLinkingFunction) else x
    orders = b.group.orders
    primes = [prime_power(o)[0] for o in orders]
    for i in range(len(orders)):
        for j in range(len(orders)):
            if primes[i] != primes[j] and b.gram[i][j] != 0:
                raise ValueError("nonzero pairing between different primary components")
    out = []
    for p in sorted(set(primes)):
        idx = [i for i, pi in enumerate(primes) if pi == p]
        out.append((p, x.restrict_generators(idx)))
    return out


# ---------------------------------------------------------------------------
# brute-force isometry oracle

class _Target:
    """Element data of the target group used by the backtracking search."""

    def __init__(self, b: LinkingForm, q: QuadraticLinkingFunction | None):
        self.orders = b.group.orders
        self.elems = _elements(self.orders)
        self.eorders = _element_orders(self.orders)
        self.D = b.exponent
        B = b.int_gram
        s = len(self.orders)
        self.bvec = [tuple(sum(x[i] * B[i][j] for i in range(s)) % self.D for j in range(s))
                     for x in self.elems]
        self.norms = [sum(v * xi for v, xi in zip(bv, x)) % self.D
                      for bv, x in zip(self.bvec, self.elems)]
        self.qtab = q.table if q is not None else None


def _search(b0: LinkingForm, q0: QuadraticLinkingFunction | None, b1: LinkingForm,
            q1: QuadraticLinkingFunction | None, cap: int | None,
            accept: Callable[[list], bool] | None = None) -> GroupHom | None:
    g0, g1 = b0.group, b1.group
    check_cap(g0, cap)
    check_cap(g1, cap)
    if g0.orders != g1.orders:
        return None
    s = len(g0.orders)
    if s == 0:
        return GroupHom.identity(g0) if accept is None or accept([]) else None
    T = _Target(b1, q1)
    D = T.D
    B0 = b0.int_gram
    if q0 is not None:
        # q values share the denominator 2D on both sides
        Q0 = [int(v * 2 * D) for v in q0.values]
    cands = []
    for i, o in enumerate(g0.orders):
        c = [k for k in range(len(T.elems))
             if T.eorders[k] == o and T.norms[k] == B0[i][i]
             and (q0 is None or T.qtab[k] == Q0[i])]
        if not c:
            return None
        cands.append(c)
    chosen: list[int] = []

    def rec(i):
        if i == s:
            return accept is None or accept([T.elems[k] for k in chosen])
        for k in cands[i]:
            bv = T.bvec[k]
            ok = True
            for j in range(i):
                y = T.elems[chosen[j]]
                if sum(a * c for a, c in zip(bv, y)) % D != B0[i][j]:
                    ok = False
                    break
            if ok:
                chosen.append(k)
                if rec(i + 1):
                    return True
                chosen.pop()
        return False

    if rec(0):
        return GroupHom.from_images(g0, g1, [T.elems[k] for k in chosen])
    return None


def _carries(target: FinAbGroup, carry):
    if not carry:
        return None
    pairs = [(tuple(x0), target.reduce(x1)) for x0, x1 in carry]

    def accept(images):
        for x0, x1 in pairs:
            img = target.reduce([sum(c * im[t] for c, im in zip(x0, images))
                                 for t in range(target.ngens)])
            if img != x1:
                return False
        return True

    return accept


def brute_isometry(q0: QuadraticLinkingFunction, q1: QuadraticLinkingFunction,
                   cap: int | None = DEFAULT_CAP, carry=None) -> GroupHom | None:
    """Least theta with q1(theta x) = q0(x) for all x, by exhaustive backtracking.

    Generator images are tried in element order, so the first hit is the
    lexicographically least witness. Preserving the nonsingular form forces
    injectivity, hence bijectivity when the groups agree. `carry` lists pairs
    (x0, x1) that theta must send x0 to x1.
    """
    return _search(q0.base, q0, q1.base, q1, cap, _carries(q1.group, carry))


def brute_linking_isometry(b0: LinkingForm, b1: LinkingForm,
                           cap: int | None = DEFAULT_CAP) -> GroupHom | None:
    return _search(b0, None, b1, None, cap)


def brute_wilkens_isometry(w0: WilkensData, w1: WilkensData,
                           cap: int | None = DEFAULT_CAP) -> GroupHom | None:
    """Isometry of linking forms carrying beta0 to beta1."""
    return _search(w0.b, None, w1.b, None, cap, _carries(w1.b.group, [(w0.beta, w1.beta)]))


def is_qlf_isometry(theta: GroupHom, q0: QuadraticLinkingFunction,
                    q1: QuadraticLinkingFunction) -> bool:
    """Exact check that theta is bijective and q1 o theta = q0.

    Values on generators plus pairings between generators determine q by
    polarization, so no enumeration of the group is needed.
    """
    if theta.source != q0.group or theta.target != q1.group:
        return False
    if not theta.is_isomorphism():
        return False
    imgs = theta.images()
    if any(q1(y) != v for y, v in zip(imgs, q0.values)):
        return False
    return all(q1.base.pair(imgs[i], imgs[j]) == q0.base.gram[i][j]
               for i in range(len(imgs)) for j in range(i, len(imgs)))


def is_linking_isometry(theta: GroupHom, b0: LinkingForm, b1: LinkingForm) -> bool:
    if theta.source != b0.group or theta.target != b1.group or not theta.is_isomorphism():
        return False
    imgs = theta.images()
    return all(b1.pair(imgs[i], imgs[j]) == b0.gram[i][j]
               for i in range(len(imgs)) for j in range(i, len(imgs)))


def value_profile(q: QuadraticLinkingFunction) -> tuple:
    """Isometry invariant: sorted multiset of (element order, value) pairs."""
    eo = _element_orders(q.group.orders)
    return tuple(sorted(zip(eo, q.table)))


def elements(group: FinAbGroup) -> tuple[tuple[int, ...], ...]:
    return _elements(group.orders)


__all__ = [
    "DEFAULT_CAP", "CapExceededError", "LinkingForm", "QuadraticLinkingFunction", "WilkensData",
    "BoundaryPresentation", "modz", "translate", "homogeneous_refinement", "wilkens_data",
    "linear_displacement", "all_refinements", "gauss_invariant", "kervaire_arf",
    "boundary_presentation", "boundary_linking_form", "boundary_quadratic",
    "sbar_from_presentation", "primary_decompose", "brute_isometry", "brute_linking_isometry",
    "brute_wilkens_isometry", "is_qlf_isometry", "is_linking_isometry", "value_profile", "direct_sum_all", "elements",
    "is_even", "solve_adjoint", "snap_rational", "phase_sum", "check_cap",
]
