"""Exhaustive enumeration of small finite abelian groups, linking forms and refinements."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterator

from quadlink.torsion import LinkingForm, QuadraticLinkingFunction, elements
from quadlink.zmodule import FinAbGroup


def _factor(n: int) -> list[tuple[int, int]]:
    out, p = [], 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
        p += 1
    if n > 1:
        out.append((n, 1))
    return out


def _partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield (k,) + rest


def groups_of_order(order: int) -> Iterator[FinAbGroup]:
    per_prime = [[tuple(sorted(p ** e for e in part)) for part in _partitions(exp)]
                 for p, exp in _factor(order)]
    for combo in itertools.product(*per_prime):
        yield FinAbGroup(tuple(o for part in combo for o in part))


def groups_up_to(max_order: int, two_groups_only: bool = False) -> Iterator[FinAbGroup]:
    for order in range(1, max_order + 1):
        if two_groups_only and (order & (order - 1) or order == 1):
            continue
        yield from groups_of_order(order)


def linking_forms(group: FinAbGroup) -> Iterator[LinkingForm]:
    """Every nonsingular symmetric table on the given generators."""
    orders = group.orders
    slots = [(i, j) for i in range(len(orders)) for j in range(i, len(orders))]
    dens = [math.gcd(orders[i], orders[j]) for i, j in slots]
    for numerators in itertools.product(*[range(d) for d in dens]):
        table = [[Fraction(0)] * len(orders) for _ in orders]
        for (i, j), d, v in zip(slots, dens, numerators):
            table[i][j] = table[j][i] = Fraction(v, d)
        try:
            yield LinkingForm(group, tuple(map(tuple, table)))
        except ValueError:
            continue


def refinements(b: LinkingForm) -> Iterator[QuadraticLinkingFunction]:
    """Every refinement, by choosing generator values compatible with b(e_i, e_i)."""
    choices = []
    for i, o in enumerate(b.group.orders):
        half = b.gram[i][i] / 2
        # q(e) = b(e, e)/2 + c/o ... any value with 2q(e) = b(e, e) and o q(e) = 0 when o is odd
        options = {(half + Fraction(c, o)) % 1 for c in range(o)}
        options |= {(half + Fraction(1, 2) + Fraction(c, o)) % 1 for c in range(o)}
        choices.append(sorted(options))
    for values in itertools.product(*choices):
        try:
            yield QuadraticLinkingFunction(b, tuple(values))
        except ValueError:
            continue


def beta_by_definition(q: QuadraticLinkingFunction) -> tuple[int, ...]:
    """The element beta with b(x, beta) = q(x) - q(-x) for every x."""
    g = q.group
    found = [y for y in elements(g)
             if all(q.base.pair(x, y) == (q(x) - q(g.neg(x))) % 1 for x in map(g.generator, range(g.ngens)))]
    if len(found) != 1:
        raise ArithmeticError("beta is not unique; the form is singular")
    return found[0]
