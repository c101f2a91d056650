from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import quadratic_functions, random_unimodular
from quadlink.classify import qlf_isometric
from quadlink.manifolds import (ManifoldDescriptor, Pi3SO4Class, SphereBundle,
                                UnsupportedComparisonError, boundary_data, bundle_compare,
                                bundle_compare_generic, bundle_data, bundle_invariants,
                                coherence_sweep, compare,
                                compare_data, families_isometric, family_of, invariants,
                                matched_section, pi3_invariants, reverse_orientation)
from quadlink.quadratic import QuadraticFunction, direct_sum, split_by_section
from quadlink.torsion import (boundary_presentation, boundary_quadratic, brute_isometry,
                              direct_sum_all, elements, translate)
from quadlink.zmodule import IntMatrix

F = Fraction
HYPER = QuadraticFunction.of([[0, 1], [1, 0]], [0, 0])


def free_part(values) -> QuadraticFunction:
    n = len(values)
    return QuadraticFunction(IntMatrix.zeros(n, n), tuple(values))


def section_oracle(k0: QuadraticFunction, k1: QuadraticFunction) -> bool:
    """Family isometry by enumerating sections of k1 directly.

    Moving the section by radical vectors shifts alpha there by integer
    combinations of the radical values; shifts by twice the Gram image do not
    change the boundary, so a box of |det| steps per coordinate is exhaustive.
    """
    free0, ks0 = split_by_section(k0)
    free1, ks1 = split_by_section(k1)
    if len(free0) != len(free1):
        return False
    g0, g1 = math.gcd(*free0), math.gcd(*free1)
    if g0 != g1:
        return False
    q0 = boundary_quadratic(ks0)
    det = abs(ks1.gram.determinant()) if ks1.rank else 1
    steps = range(det) if g1 else range(1)
    for t in itertools.product(steps, repeat=ks1.rank):
        moved = QuadraticFunction(ks1.gram, tuple(a + g1 * x for a, x in zip(ks1.linear, t)))
        q1 = boundary_quadratic(moved)
        if q0.group == q1.group and brute_isometry(q0, q1) is not None:
            return True
    return False


@st.composite
def mixed_presentations(draw, max_torsion=16):
    """A characteristic function with free rank 1 or 2 and small torsion, in a scrambled basis."""
    ks = draw(quadratic_functions(max_rank=2, bound=3, characteristic=True, nondegenerate=True))
    assume(abs(ks.gram.determinant()) <= max_torsion)
    f = draw(st.integers(1, 2))
    free = [2 * draw(st.integers(-3, 3)) for _ in range(f)]
    k = direct_sum(ks, free_part(free))
    U = random_unimodular(random.Random(draw(st.integers(0, 10 ** 6))), k.rank, 8)
    return k.restrict(U)


def relative(k: QuadraticFunction, rng: random.Random) -> QuadraticFunction:
    """A scrambled presentation of the same family, sometimes with one value perturbed."""
    free, ks = split_by_section(k)
    if rng.random() < 0.3:
        free = list(free)
        free[0] += rng.choice((-2, 2))
    if rng.random() < 0.3 and ks.rank:
        ks = QuadraticFunction(ks.gram, (ks.linear[0] + 2,) + ks.linear[1:])
    if rng.random() < 0.5:
        free = free[::-1]
    moved = direct_sum(ks, free_part(free))
    return moved.restrict(random_unimodular(rng, moved.rank, 8))


# ---------------------------------------------------------------------------
# families

def test_family_of_nondegenerate_is_boundary():
    k = QuadraticFunction.of([[8]], [10])
    fam = family_of(k)
    assert fam.free_rank == 0 and fam.q_at_section == boundary_quadratic(k)


def test_family_of_pure_radical():
    fam = family_of(QuadraticFunction.of([[0]], [6]))
    assert fam.free_rank == 1 and fam.group.order == 1 and fam.beta == (6,)
    assert fam.beta_divisibility == 6


def test_family_of_mixed_by_hand():
    fam = family_of(QuadraticFunction.of([[2, 0], [0, 0]], [2, 6]))
    assert fam.group.orders == (2,) and fam.free_rank == 1
    assert fam.q_at_section.values == (F(3, 4),)
    assert fam.beta == (0, 6)


def test_free_family_examples():
    zero = IntMatrix.zeros(2, 2)
    a = family_of(QuadraticFunction(zero, (2, 0)))
    b = family_of(QuadraticFunction(zero, (0, 2)))
    assert families_isometric(a, b).isometric
    assert not families_isometric(family_of(QuadraticFunction.of([[0]], [2])),
                                  family_of(QuadraticFunction.of([[0]], [4]))).isometric


def test_torsion_families_reduce_to_qlf_isometry():
    for a, b in [((2, 0), (2, 2)), ((8, 10), (8, 34)), ((8, 10), (8, 2)), ((6, 0), (6, 6))]:
        k0, k1 = QuadraticFunction.of([[a[0]]], [a[1]]), QuadraticFunction.of([[b[0]]], [b[1]])
        verdict = families_isometric(family_of(k0), family_of(k1)).isometric
        assert verdict == qlf_isometric(boundary_quadratic(k0), boundary_quadratic(k1))


def test_section_action_translates():
    # on Z/2 + Z with radical value 2, q at the other section is the translate by 1
    k0 = QuadraticFunction.of([[2, 0], [0, 0]], [0, 2])
    k1 = QuadraticFunction.of([[2, 0], [0, 0]], [2, 2])
    assert families_isometric(family_of(k0), family_of(k1)).isometric
    assert not families_isometric(family_of(k0),
                                  family_of(QuadraticFunction.of([[2, 0], [0, 0]], [2, 4]))).isometric


def test_matched_section_realizes_shift():
    k0 = QuadraticFunction.of([[8, 0], [0, 0]], [2, 4])
    k1 = QuadraticFunction.of([[8, 0], [0, 0]], [10, 4])
    f0, f1 = family_of(k0), family_of(k1)
    verdict = families_isometric(f0, f1)
    assert verdict.isometric
    moved = matched_section(k1, f1, verdict.shift)
    assert brute_isometry(f0.q_at_section, boundary_quadratic(moved)) is not None


@given(mixed_presentations(), st.integers(0, 10 ** 6))
def test_family_isometry_matches_section_oracle(k0, seed):
    k1 = relative(k0, random.Random(seed))
    verdict = families_isometric(family_of(k0), family_of(k1))
    assert verdict.isometric == section_oracle(k0, k1)


@given(mixed_presentations(max_torsion=8), mixed_presentations(max_torsion=8))
def test_family_isometry_matches_oracle_on_unrelated_pairs(k0, k1):
    assert families_isometric(family_of(k0), family_of(k1)).isometric == section_oracle(k0, k1)


@given(mixed_presentations(max_torsion=8), st.integers(0, 10 ** 6))
def test_stabilization_does_not_change_family(k, seed):
    rng = random.Random(seed)
    extra = HYPER if rng.random() < 0.5 else QuadraticFunction.of([[1, 0], [0, -1]], [1, 3])
    stable = direct_sum(k, extra)
    stable = stable.restrict(random_unimodular(rng, stable.rank, 8))
    assert families_isometric(family_of(k), family_of(stable)).isometric


@given(mixed_presentations(max_torsion=8), mixed_presentations(max_torsion=8))
def test_connected_sum_adds_families(k0, k1):
    f0, f1 = family_of(k0), family_of(k1)
    total = family_of(direct_sum(k0, k1))
    assert total.free_rank == f0.free_rank + f1.free_rank
    assert total.beta_divisibility == math.gcd(f0.beta_divisibility, f1.beta_divisibility)
    assert total.group.order == f0.group.order * f1.group.order
    summed, _ = direct_sum_all([f0.q_at_section, f1.q_at_section])
    torsion = total.q_at_section.group
    step = total.beta_divisibility // 2
    translates = [translate(total.q_at_section, torsion.scale(step, a)) for a in elements(torsion)]
    assert any(brute_isometry(summed, q) is not None for q in translates)


# ---------------------------------------------------------------------------
# manifold invariants and comparisons

def test_invariants_of_small_example():
    P = ManifoldDescriptor(7, QuadraticFunction.of([[8]], [10]))
    inv = invariants(P)
    assert inv.sbar == F(7, 16)
    assert inv.s1 == F(23, 16 * 28)
    assert inv.wilkens.group.orders == (8,) and inv.wilkens.beta == (10 % 8,)
    assert invariants(ManifoldDescriptor(15, P.presentation)).s1 == F(23, 16 * 8128)


def test_invariants_of_even_nonsingular():
    P = ManifoldDescriptor(7, HYPER)
    inv = invariants(P)
    assert inv.sbar == 0 and inv.s1 == 0


def test_degenerate_presentation_has_no_smooth_invariant():
    inv = invariants(ManifoldDescriptor(7, QuadraticFunction.of([[0]], [2])))
    assert inv.sbar is None and inv.s1 is None and inv.family.free_rank == 1


def test_descriptor_validation():
    with pytest.raises(ValueError):
        ManifoldDescriptor(11, QuadraticFunction.of([[2]], [0]))
    with pytest.raises(ValueError):
        ManifoldDescriptor(7, QuadraticFunction.of([[2]], [1]))
    with pytest.raises(ValueError):
        ManifoldDescriptor(7, QuadraticFunction.of([[2]], [0]), sigma_p_exotic=True)


@given(quadratic_functions(max_rank=3, bound=3, characteristic=True, nondegenerate=True),
       quadratic_functions(max_rank=3, bound=3, characteristic=True, nondegenerate=True))
def test_sbar_is_additive(k0, k1):
    s = invariants(ManifoldDescriptor(7, direct_sum(k0, k1))).sbar
    s0 = invariants(ManifoldDescriptor(7, k0)).sbar
    s1 = invariants(ManifoldDescriptor(7, k1)).sbar
    assert s == (s0 + s1) % 1


def test_reverse_orientation():
    P = ManifoldDescriptor(7, QuadraticFunction.of([[8, 1], [1, 3]], [10, 1]))
    R = reverse_orientation(P)
    assert reverse_orientation(R) == P
    assert invariants(R).sbar == (-invariants(P).sbar) % 1
    # the cokernels of lambda and -lambda are the same quotient; compare beta through lifts
    pres_p, pres_r = boundary_presentation(P.presentation), boundary_presentation(R.presentation)
    beta_r = invariants(R).family.beta
    assert pres_p.projection(pres_r.lifts.apply(beta_r)) == invariants(P).family.beta
    assert invariants(R).wilkens.b == invariants(P).wilkens.b.negate()


def test_compare_self_at_every_level():
    P = ManifoldDescriptor(7, QuadraticFunction.of([[8]], [10]))
    for level in ("almost_diffeo", "homeo", "diffeo", "homotopy"):
        assert compare(P, P, level)


def test_twelve_fold_translation_is_homotopy_invisible():
    P0 = ManifoldDescriptor(7, QuadraticFunction.of([[8]], [10]))
    P1 = ManifoldDescriptor(7, QuadraticFunction.of([[8]], [10 + 24]))
    assert compare(P0, P1, "homotopy")
    P2 = ManifoldDescriptor(7, QuadraticFunction.of([[8]], [12]))
    assert not compare(P0, P2, "homotopy")


def test_dimension_fifteen_refusals():
    P = ManifoldDescriptor(15, QuadraticFunction.of([[8]], [10]))
    with pytest.raises(UnsupportedComparisonError):
        compare(P, P, "homotopy")
    with pytest.raises(UnsupportedComparisonError):
        compare(P, P, "homeo")
    assert compare(P, P, "diffeo")
    exotic = ManifoldDescriptor(15, P.presentation, sigma_p_exotic=True)
    assert compare(P, exotic, "almost_diffeo") and not compare(P, exotic, "diffeo")


def test_diffeo_needs_rational_homology_spheres():
    P = ManifoldDescriptor(7, QuadraticFunction.of([[0]], [2]))
    with pytest.raises(UnsupportedComparisonError):
        compare(P, P, "diffeo")
    assert compare(P, P, "homeo")


def test_free_homotopy_reduction_mod_24():
    P0 = ManifoldDescriptor(7, QuadraticFunction.of([[0]], [2]))
    P1 = ManifoldDescriptor(7, QuadraticFunction.of([[0]], [26]))
    P2 = ManifoldDescriptor(7, QuadraticFunction.of([[0]], [-22]))
    assert compare(P0, P1, "homotopy") and compare(P0, P2, "homotopy")
    assert not compare(P0, P1, "homeo")


# ---------------------------------------------------------------------------
# sphere bundles

def test_bundle_invariants_table():
    inv = bundle_invariants(SphereBundle(1, 8))
    assert inv.group.orders == (8,)
    assert inv.q.values == (F(3, 16),)
    assert [inv.q((j,)) for j in range(8)] == [F(j * j + 2 * j, 16) % 1 for j in range(8)]
    assert inv.beta == (2,) and inv.b.gram == ((F(1, 8),),)
    assert inv.sbar == F(7, 16)
    assert inv.s1 == F(23, 16 * 28) % 1
    inv = bundle_invariants(SphereBundle(0, 1))
    assert inv.group.order == 1 and inv.sbar == 0


def test_bundle_beta_is_even():
    for m, n in itertools.product(range(-4, 5), (-6, -3, 2, 5, 12)):
        inv = bundle_invariants(SphereBundle(m, n))
        assert all((x * (inv.group.exponent // o)) % 2 == 0 or o % 2 for x, o in
                   zip(inv.beta, inv.group.orders))


def test_odd_euler_number_table():
    q = bundle_invariants(SphereBundle(1, 3)).q
    # (j^2 + 2j) / 6 with 1/2 read as 2 mod 3
    assert [q((j,)) for j in range(3)] == [0, F(2 * 3 % 3, 3), F(2 * 8 % 3, 3)]


def test_bundle_free_case():
    inv = bundle_invariants(SphereBundle(3, 0))
    assert inv.group.free_rank == 1 and inv.beta == (6,) and inv.s1 is None
    assert bundle_compare(SphereBundle(3, 0), SphereBundle(-3, 0), "diffeo").equivalent
    assert not bundle_compare(SphereBundle(3, 0), SphereBundle(15, 0), "homeo").equivalent
    assert bundle_compare(SphereBundle(3, 0), SphereBundle(15, 0), "homotopy").equivalent


def test_bundle_compare_one_eight_against_five_eight():
    B0, B1 = SphereBundle(1, 8), SphereBundle(5, 8)
    assert not bundle_compare(B0, B1, "homeo").equivalent
    assert bundle_compare(B0, B1, "homotopy").equivalent
    assert bundle_compare_generic(B0, B1, "homotopy") == bundle_compare(B0, B1, "homotopy")
    assert bundle_compare_generic(B0, B1, "homeo") == bundle_compare(B0, B1, "homeo")
    d = (bundle_invariants(B0).sbar - bundle_invariants(B1).sbar) % 1
    assert d == F(1, 2)


def test_bundle_self_comparison():
    for m, n in [(0, 1), (2, 5), (3, 12), (1, -8)]:
        for level in ("homeo", "diffeo", "homotopy"):
            assert bundle_compare(SphereBundle(m, n), SphereBundle(m, n), level).preserving


def test_bundle_euler_mismatch():
    assert not bundle_compare(SphereBundle(1, 8), SphereBundle(1, 7), "homotopy").equivalent


def test_bundle_data_feeds_generic_classifier():
    d = bundle_data(SphereBundle(1, 8))
    assert compare_data(d, d, "diffeo")
    assert d.reversed().family.q_at_section == d.family.q_at_section.negate()


def test_coherence_small_grid_refined():
    rows = coherence_sweep(12, homotopy_rule="refined")
    assert all(r["disagreements"] == 0 and r["pairs"] > 0 for r in rows)


def test_printed_homotopy_congruence_is_too_coarse():
    rows = {r["level"]: r for r in coherence_sweep(8)}
    assert rows["homeo"]["disagreements"] == rows["diffeo"]["disagreements"] == 0
    assert rows["homotopy"]["disagreements"] > 0
    # the printed homeomorphism congruence identifies P(0,2) with -P(1,2) while the printed
    # homotopy congruence separates them
    B0, B1 = SphereBundle(0, 2), SphereBundle(1, 2)
    assert bundle_compare(B0, B1, "homeo").reversing
    assert not bundle_compare(B0, B1, "homotopy").equivalent
    assert bundle_compare(B0, B1, "homotopy", "refined").reversing
    # b = 1/7 and -1/7 are not isometric, yet gcd(7, 12) = 1 accepts both orientations
    B = SphereBundle(0, 7)
    assert bundle_compare(B, B, "homotopy").reversing
    assert not bundle_compare(B, B, "homotopy", "refined").reversing


def test_refined_rule_agrees_on_one_eight_pair():
    v = bundle_compare(SphereBundle(1, 8), SphereBundle(5, 8), "homotopy", "refined")
    assert v == bundle_compare(SphereBundle(1, 8), SphereBundle(5, 8), "homotopy")
    with pytest.raises(ValueError):
        bundle_compare(SphereBundle(1, 8), SphereBundle(5, 8), "homotopy", "guess")


def test_pi3_invariants():
    assert pi3_invariants(Pi3SO4Class(1, 0)) == pi3_invariants(Pi3SO4Class(1, 0))
    inv = pi3_invariants(Pi3SO4Class(1, 0))
    assert (inv.euler, inv.stable, inv.sg4) == (0, 2, (1, 0))
    assert pi3_invariants(Pi3SO4Class(12, 0)).sg4 == (0, 0)
    inv = pi3_invariants(Pi3SO4Class(0, 7))
    assert inv.euler == 7 and inv.stable == 7


def test_boundary_data_of_descriptor():
    P = ManifoldDescriptor(7, QuadraticFunction.of([[8]], [10]))
    d = boundary_data(P)
    assert d.s1 == invariants(P).s1 and d.dim == 7
