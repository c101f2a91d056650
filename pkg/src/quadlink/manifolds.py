"""Highly connected 7- and 15-manifolds described by presenting quadratic functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .quadratic import (QuadraticFunction, category, inverse_pairing, is_characteristic,
                        reverse, signature, split_by_section)
from .torsion import (DEFAULT_CAP, LinkingForm, QuadraticLinkingFunction, _primary_split,
                      boundary_presentation,
                      boundary_quadratic, brute_isometry, elements, kervaire_arf, modz,
                      translate)
from .zmodule import FinAbGroup, GroupHom

LEVELS = ("almost_diffeo", "homeo", "diffeo", "homotopy")

# orders of the groups of homotopy spheres bounding parallelizable manifolds
BP_ORDER = {7: 28, 15: 8128}


class UnsupportedComparisonError(ValueError):
    """The requested equivalence level is not decided for this input."""


# ---------------------------------------------------------------------------
# quadratic linking families

@dataclass(frozen=True)
class QuadraticLinkingFamily:
    """(G, q at the canonical section, beta) with G = TG + Z^f.

    beta lists the torsion coordinates first, then the values of alpha on the
    radical basis.
    """

    group: FinAbGroup
    beta: tuple[int, ...]
    q_at_section: QuadraticLinkingFunction
    kind: str = "c"

    @property
    def free_rank(self) -> int:
        return self.group.free_rank

    @property
    def torsion_beta(self) -> tuple[int, ...]:
        return self.beta[:len(self.group.orders)]

    @property
    def free_beta(self) -> tuple[int, ...]:
        return self.beta[len(self.group.orders):]

    @property
    def beta_divisibility(self) -> int:
        """gcd of the free part of beta (0 when it vanishes)."""
        return math.gcd(*self.free_beta) if self.free_beta else 0

    def negate(self) -> QuadraticLinkingFamily:
        return QuadraticLinkingFamily(self.group, self.beta, self.q_at_section.negate(), self.kind)

    @classmethod
    def torsion_only(cls, q: QuadraticLinkingFunction, beta=None, kind: str = "c"):
        from .torsion import wilkens_data
        beta = tuple(beta) if beta is not None else wilkens_data(q).beta
        return cls(q.group, beta, q, kind)


def family_of(k: QuadraticFunction, kind: str | None = None) -> QuadraticLinkingFamily:
    kind = kind or category(k)
    if kind is None:
        raise ValueError("kappa is neither characteristic nor has an even Gram matrix")
    alpha_free, ks = split_by_section(k)
    pres = boundary_presentation(ks)
    q = boundary_quadratic(ks, kind)
    beta = pres.projection(ks.linear) + tuple(alpha_free)
    return QuadraticLinkingFamily(FinAbGroup(pres.group.orders, len(alpha_free)), beta, q, kind)


@dataclass(frozen=True)
class FamilyVerdict:
    """Outcome of a family comparison; theta matches q0 with q1 translated by r * shift."""

    isometric: bool
    theta: GroupHom | None = None
    shift: tuple[int, ...] | None = None


def _translation_step(family: QuadraticLinkingFamily) -> int:
    if family.kind != "c" or not family.free_rank:
        return 0
    return family.beta_divisibility // 2


def _match_translates(q0, q1, step: int, cap, beta0=None, beta1=None):
    """First (theta, a) with q0 = (q1 translated by step*a) o theta."""
    g1 = q1.group
    k0 = kervaire_arf(q0, cap)
    seen = set()
    for a in elements(g1):
        t = g1.scale(step, a)
        if t in seen:
            continue
        seen.add(t)
        qt = translate(q1, t) if step else q1
        if kervaire_arf(qt, cap) != k0:
            continue
        carry = None
        if beta0 is not None:
            carry = [(beta0, g1.add(beta1, g1.scale(2, t)))]
        theta = brute_isometry(q0, qt, cap, carry)
        if theta is not None:
            return theta, a
        if not step:
            break
    return None


def families_isometric(f0: QuadraticLinkingFamily, f1: QuadraticLinkingFamily,
                       cap: int | None = DEFAULT_CAP) -> FamilyVerdict:
    """Decide isometry of quadratic linking families.

    Free ranks and the divisibility of the free part of beta must agree; the
    torsion parts must match after translating q1 by some element of r * TG,
    where 2r is that divisibility, carrying the torsion part of beta along.
    """
    if f0.kind != f1.kind:
        raise ValueError("families of different flavors")
    if f0.free_rank != f1.free_rank or f0.beta_divisibility != f1.beta_divisibility:
        return FamilyVerdict(False)
    if f0.group.orders != f1.group.orders:
        return FamilyVerdict(False)
    hit = _match_translates(f0.q_at_section, f1.q_at_section, _translation_step(f1), cap,
                            f0.torsion_beta, f1.torsion_beta)
    if hit is None:
        return FamilyVerdict(False)
    return FamilyVerdict(True, hit[0], hit[1])


def matched_section(k: QuadraticFunction, family: QuadraticLinkingFamily,
                    shift) -> QuadraticFunction:
    """kappa on a section whose boundary is q at the canonical section translated by r * shift.

    Moving the section by radical vectors changes alpha there by multiples of
    beta's free part, i.e. by 2r times an arbitrary covector.
    """
    _, ks = split_by_section(k)
    step = _translation_step(family)
    if shift is None or not step:
        return ks
    pres = boundary_presentation(ks)
    lift = pres.lifts.apply(shift)
    return QuadraticFunction(ks.gram, tuple(a + 2 * step * x for a, x in zip(ks.linear, lift)))


# ---------------------------------------------------------------------------
# manifold descriptors

@dataclass(frozen=True)
class ManifoldDescriptor:
    """A 2-connected 7-manifold or 6-connected 15-manifold via its presenting function."""

    dim: int
    presentation: QuadraticFunction
    sigma_p_exotic: bool = False

    def __post_init__(self):
        if self.dim not in (7, 15):
            raise ValueError("dimension must be 7 or 15")
        if not is_characteristic(self.presentation):
            raise ValueError("the presentation must be characteristic")
        if self.dim == 7 and self.sigma_p_exotic:
            raise ValueError("the boundary sphere is standard in dimension 7")


@dataclass(frozen=True)
class WilkensTriple:
    group: FinAbGroup
    b: LinkingForm
    beta: tuple[int, ...]


@dataclass(frozen=True)
class ManifoldInvariants:
    family: QuadraticLinkingFamily
    wilkens: WilkensTriple
    s1: Fraction | None
    sbar: Fraction | None


def _smooth_numerator(k: QuadraticFunction) -> Fraction:
    return inverse_pairing(k.gram, k.linear, k.linear) - signature(k.gram)


def invariants(P: ManifoldDescriptor) -> ManifoldInvariants:
    """Family, Wilkens triple and, for rational homology spheres, s1 and sbar."""
    fam = family_of(P.presentation, "c")
    triple = WilkensTriple(fam.group, fam.q_at_section.base, fam.beta)
    s1 = sbar = None
    if P.presentation.is_nondegenerate():
        num = _smooth_numerator(P.presentation)
        sbar = modz(num / 8)
        s1 = modz(num / (8 * BP_ORDER[P.dim]))
    return ManifoldInvariants(fam, triple, s1, sbar)


def reverse_orientation(P: ManifoldDescriptor) -> ManifoldDescriptor:
    return ManifoldDescriptor(P.dim, reverse(P.presentation), P.sigma_p_exotic)


@dataclass(frozen=True)
class BoundaryData:
    """Everything the comparison levels consult, however it was obtained."""

    dim: int
    family: QuadraticLinkingFamily
    s1: Fraction | None = None
    sigma_p_exotic: bool = False

    def reversed(self) -> BoundaryData:
        s1 = modz(-self.s1) if self.s1 is not None else None
        return BoundaryData(self.dim, self.family.negate(), s1, self.sigma_p_exotic)


def boundary_data(P: ManifoldDescriptor) -> BoundaryData:
    inv = invariants(P)
    return BoundaryData(P.dim, inv.family, inv.s1, P.sigma_p_exotic)


def _free_orbit_mod(v0, v1, modulus: int) -> bool:
    """Whether v0 and v1 lie in one GL(f, Z) orbit after reduction mod `modulus`."""
    if len(v0) != len(v1):
        return False
    if not v0:
        return True
    if len(v0) == 1:
        return (v0[0] - v1[0]) % modulus == 0 or (v0[0] + v1[0]) % modulus == 0
    return math.gcd(modulus, *v0) == math.gcd(modulus, *v1)


def homotopy_equivalent(d0: BoundaryData, d1: BoundaryData, cap: int | None = DEFAULT_CAP) -> bool:
    """Dimension 7: q0 matches q1 translated by 12a for some a.

    With free summands the free part of beta is compared modulo 24 and q1 may
    additionally be translated by the section action.
    """
    f0, f1 = d0.family, d1.family
    if f0.free_rank != f1.free_rank or f0.group.orders != f1.group.orders:
        return False
    if not _free_orbit_mod(f0.free_beta, f1.free_beta, 24):
        return False
    step = math.gcd(12, _translation_step(f1))
    return _match_translates(f0.q_at_section, f1.q_at_section, step, cap) is not None


def compare_data(d0: BoundaryData, d1: BoundaryData, level: str,
                 cap: int | None = DEFAULT_CAP) -> bool:
    """Orientation-preserving equivalence at the given level."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    if d0.dim != d1.dim:
        raise ValueError("dimensions differ")
    if level == "homotopy":
        if d0.dim != 7:
            raise UnsupportedComparisonError("homotopy classification is only available in dimension 7")
        return homotopy_equivalent(d0, d1, cap)
    if level == "homeo" and d0.dim != 7:
        raise UnsupportedComparisonError("homeomorphism is only decided in dimension 7")
    if level == "diffeo" and (d0.s1 is None or d1.s1 is None):
        raise UnsupportedComparisonError("s1 needs rational homology spheres")
    if not families_isometric(d0.family, d1.family, cap).isometric:
        return False
    if level == "diffeo":
        return d0.s1 == d1.s1 and d0.sigma_p_exotic == d1.sigma_p_exotic
    return True


def compare(P0: ManifoldDescriptor, P1: ManifoldDescriptor, level: str,
            cap: int | None = DEFAULT_CAP) -> bool:
    if P0.dim != P1.dim:
        raise ValueError("dimensions differ")
    return compare_data(boundary_data(P0), boundary_data(P1), level, cap)


# ---------------------------------------------------------------------------
# S^3-bundles over S^4

@dataclass(frozen=True)
class SphereBundle:
    """Total space of the S^3-bundle with Euler number n and stable class n + 2m."""

    m: int
    n: int

    def presentation(self) -> QuadraticFunction:
        return QuadraticFunction.of([[self.n]], [self.n + 2 * self.m])


@dataclass(frozen=True)
class BundleInvariants:
    group: FinAbGroup
    q: QuadraticLinkingFunction
    beta: tuple[int, ...]
    b: LinkingForm
    s1: Fraction | None
    sbar: Fraction | None


def _sign(n: int) -> int:
    return 1 if n > 0 else -1


def bundle_quadratic(m: int, n: int) -> QuadraticLinkingFunction:
    """The tabulated q(je) = (j^2 + 2mj) / 2n on Z/|n|, b(e, e) = 1/n.

    For odd n the factor 1/2 is read as the inverse of 2 modulo n.
    """
    N = abs(n)
    if n % 2 == 0:
        value = Fraction(1 + 2 * m, 2 * n)
    else:
        value = Fraction((1 + 2 * m) * ((N + 1) // 2), n)
    return QuadraticLinkingFunction.from_cyclic([N], [[Fraction(1, n)]], [value])


def bundle_sbar(m: int, n: int) -> Fraction:
    return modz(Fraction((n + 2 * m) ** 2 - n * _sign(n), 8 * n))


def bundle_s1(m: int, n: int) -> Fraction:
    return modz(Fraction((n + 2 * m) ** 2 - n * _sign(n), 8 * n * BP_ORDER[7]))


def bundle_invariants(B: SphereBundle) -> BundleInvariants:
    """Tabulated invariants; n = 0 yields the free family (Z, beta = 2m) and no s1."""
    if B.n == 0:
        group = FinAbGroup((), 1)
        return BundleInvariants(group, QuadraticLinkingFunction.trivial(), (2 * B.m,),
                                LinkingForm.trivial(), None, None)
    q = bundle_quadratic(B.m, B.n)
    # beta = 2m e, re-expressed on the primary generators of Z/|n|
    beta = _cyclic_to_primary(abs(B.n), 2 * B.m)
    return BundleInvariants(q.group, q, beta, q.base, bundle_s1(B.m, B.n), bundle_sbar(B.m, B.n))


def _cyclic_to_primary(N: int, j: int) -> tuple[int, ...]:
    """Coordinates of j e on the primary generators c_p e of Z/N (they sum to e)."""
    group, _ = _primary_split([N])
    return group.reduce([j] * group.ngens)


def bundle_data(B: SphereBundle) -> BoundaryData:
    """Table-driven boundary data of a bundle, for the generic classifier."""
    inv = bundle_invariants(B)
    fam = QuadraticLinkingFamily(inv.group, inv.beta, inv.q)
    return BoundaryData(7, fam, inv.s1)


@dataclass(frozen=True)
class BundleVerdict:
    preserving: bool
    reversing: bool

    @property
    def equivalent(self) -> bool:
        return self.preserving or self.reversing


def _bundle_x(m: int, n: int) -> int:
    return 4 * m * (n + m) + n * n - n


def _refined_homotopy(m0: int, m1: int, N: int, eps: int, s: int) -> bool:
    """Homotopy congruence obtained by pulling q(m1) back along multiplication by a unit.

    s*eps*q(m1, N)(a j) equals q(m', N)(j) with m' = s*eps*a*m1 + N*t/2 when
    s*eps*a^2 = 1 + N*t; translations by 12c then move m' by multiples of gcd(N, 12).
    """
    g = math.gcd(N, 12)
    for a in range(N):
        if (a * a - s * eps) % N:
            continue
        lift = (N * ((s * eps * a * a - 1) // N)) // 2 if N % 2 == 0 else 0
        if (m0 - s * eps * a * m1 - lift) % g == 0:
            return True
    return False


def bundle_compare(B0: SphereBundle, B1: SphereBundle, level: str,
                   homotopy_rule: str = "printed") -> BundleVerdict:
    """Closed-form congruence classifier for P(m0, n) against P(m1, eps n).

    homotopy_rule "printed" evaluates m0 = a m1 with a^2 = +-eps modulo gcd(n, 12);
    "refined" uses the unit condition modulo n and its lift modulo 2n.
    """
    if homotopy_rule not in ("printed", "refined"):
        raise ValueError(f"unknown homotopy rule {homotopy_rule!r}")
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    if abs(B0.n) != abs(B1.n):
        return BundleVerdict(False, False)
    if B0.n == 0:
        if level == "homotopy":
            same = (B0.m - B1.m) % 12 == 0 or (B0.m + B1.m) % 12 == 0
        else:
            same = abs(B0.m) == abs(B1.m)
        return BundleVerdict(same, same)
    if B0.n < 0 < B1.n:
        B0, B1 = B1, B0
    n, m0, m1 = B0.n, B0.m, B1.m
    eps = B1.n // B0.n
    N = abs(n)
    out = []
    for s in (1, -1):
        if level == "homotopy" and homotopy_rule == "refined":
            ok = _refined_homotopy(m0, m1, N, eps, s)
        elif level == "homotopy":
            g = math.gcd(N, 12)
            ok = any((a * a - s * eps) % g == 0 and (m0 - a * m1) % g == 0 for a in range(g))
        else:
            modulus = 224 * N if level == "diffeo" else 8 * N
            rhs = 4 * m1 * (n + eps * m1) + eps * (n * n - n)
            ok = (_bundle_x(m0, n) - s * rhs) % modulus == 0 and any(
                (a * a - s * eps) % N == 0 and (2 * m0 - 2 * a * m1) % N == 0 for a in range(N))
        out.append(ok)
    return BundleVerdict(*out)


def bundle_compare_generic(B0: SphereBundle, B1: SphereBundle, level: str,
                           cap: int | None = DEFAULT_CAP) -> BundleVerdict:
    """The same question answered by the generic classifier on table data."""
    d0, d1 = bundle_data(B0), bundle_data(B1)
    if d0.family.group != d1.family.group:
        return BundleVerdict(False, False)
    return BundleVerdict(compare_data(d0, d1, level, cap),
                         compare_data(d0, d1.reversed(), level, cap))


def coherence_sweep(max_n: int, levels=("homeo", "diffeo", "homotopy"), cap: int | None = DEFAULT_CAP,
                    homotopy_rule: str = "printed") -> list[dict]:
    """Compare the congruence classifier with the table-driven generic one."""
    rows = []
    for level in levels:
        checked = disagreements = 0
        examples = []
        for n in range(1, max_n + 1):
            for eps in (1, -1):
                for m0 in range(n):
                    for m1 in range(n):
                        B0, B1 = SphereBundle(m0, n), SphereBundle(m1, eps * n)
                        a = bundle_compare(B0, B1, level, homotopy_rule)
                        b = bundle_compare_generic(B0, B1, level, cap)
                        checked += 1
                        if a != b:
                            disagreements += 1
                            if len(examples) < 5:
                                examples.append([m0, n, m1, eps * n])
        rows.append({"level": level, "pairs": checked, "disagreements": disagreements,
                     "examples": examples})
    return rows


# ---------------------------------------------------------------------------
# pi_3(SO(4))

@dataclass(frozen=True)
class Pi3SO4Class:
    m: int
    n: int


@dataclass(frozen=True)
class Pi3Invariants:
    euler: int
    stable: int
    sg4: tuple[int, int]


def pi3_invariants(c: Pi3SO4Class) -> Pi3Invariants:
    """Euler number n, stable class 2m + n, image (m mod 12, n) in pi_3(SG(4))."""
    return Pi3Invariants(c.n, 2 * c.m + c.n, (c.m % 12, c.n))


__all__ = [
    "LEVELS", "BP_ORDER", "UnsupportedComparisonError", "QuadraticLinkingFamily", "family_of",
    "FamilyVerdict", "families_isometric", "matched_section", "ManifoldDescriptor",
    "WilkensTriple", "ManifoldInvariants", "invariants", "reverse_orientation", "BoundaryData",
    "boundary_data", "homotopy_equivalent", "compare_data", "compare", "SphereBundle",
    "BundleInvariants", "bundle_quadratic", "bundle_sbar", "bundle_s1", "bundle_invariants",
    "bundle_data", "BundleVerdict", "bundle_compare", "bundle_compare_generic", "coherence_sweep", "Pi3SO4Class",
    "Pi3Invariants", "pi3_invariants",
]
