"""The `tf` command line tool.

Exit status: 0 on success, 1 for a negative verdict under --strict, 2 for
malformed input, 3 when a cap is exceeded or a search is undecided.
"""

from __future__ import annotations

import argparse
import cmath
import json
import random
import sys
from typing import Any, Callable

from . import classify, manifolds, quadratic, torsion
from .documents import (DocumentError, emit_bundle, emit_hom, emit_manifold,
                        emit_qlf, emit_quadratic_function, load_json, parse_columns, parse_hom,
                        parse_linking_form, parse_manifold, parse_qlf, parse_quadratic_function,
                        rational_str)
from .quadratic import BoundExceededError, UndecidedError
from .zmodule import IntMatrix

LEVEL_WORDS = {"almost_diffeo": "almost diffeomorphic", "homeo": "homeomorphic",
               "diffeo": "diffeomorphic", "homotopy": "homotopy equivalent"}


class Report:
    """Collects ordered fields and renders them as text or JSON."""

    def __init__(self, title: str):
        self.title = title
        self.fields: dict[str, Any] = {}
        self.verdict: bool | None = None

    def add(self, key: str, value):
        self.fields[key] = value
        return self

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps({"command": self.title, **self.fields}, indent=2)
        width = max((len(k) for k in self.fields), default=0)
        lines = [self.title]
        for k, v in self.fields.items():
            if not isinstance(v, str):
                v = json.dumps(v)
            lines.append(f"  {k.ljust(width)}  {v}")
        return "\n".join(lines)


def _group_str(orders, free_rank: int = 0) -> str:
    parts = [f"Z/{o}" for o in orders] + ["Z"] * free_rank
    return " + ".join(parts) if parts else "0"


def _complex_str(z: complex) -> str:
    return f"{z.real:.12f}{z.imag:+.12f}i"


def _qlf_fields(rep: Report, q: torsion.QuadraticLinkingFunction, cap: int):
    rep.add("group", _group_str(q.group.orders))
    rep.add("b", [[rational_str(x) for x in r] for r in q.base.gram])
    rep.add("q", [rational_str(v) for v in q.values])
    w = torsion.wilkens_data(q)
    rep.add("beta(q)", list(w.beta))
    gs, k = torsion.gauss_invariant(q, cap)
    rep.add("GS", _complex_str(gs))
    rep.add("K", rational_str(k))


# ---------------------------------------------------------------------------
# handlers

def _load(path: str, parser: Callable):
    return parser(load_json(path), path)


def cmd_qform_invariants(args) -> Report:
    k = _load(args.file, parse_quadratic_function)
    rep = Report("qform invariants")
    rep.add("flavor", quadratic.flavor(k).value)
    rep.add("rank", k.rank)
    rep.add("signature", quadratic.signature(k.gram))
    rep.add("det", k.gram.determinant())
    fam_kind = quadratic.category(k)
    group = quadratic.fundamental_sequence(k).quotient
    rep.add("G", _group_str(group.orders, group.free_rank))
    rep.add("order of TG", group.torsion().order)
    if fam_kind is not None:
        fam = manifolds.family_of(k, fam_kind)
        rep.add("boundary formula", fam_kind)
        _qlf_fields(rep, fam.q_at_section, args.oracle_cap)
        rep.add("beta", list(fam.beta))
    else:
        rep.add("b", [[rational_str(x) for x in r]
                      for r in torsion.boundary_linking_form(k).gram])
    if k.is_nondegenerate() and quadratic.is_characteristic(k):
        rep.add("sbar", rational_str(torsion.sbar_from_presentation(k)))
    return rep


def cmd_qform_isometric(args) -> Report:
    k0 = _load(args.a, parse_quadratic_function)
    k1 = _load(args.b, parse_quadratic_function)
    theta = quadratic.isometry_search(k0, k1, constraint_mod=args.mod,
                                      rank_bound=args.rank_bound, entry_bound=args.entry_bound)
    rep = Report("qform isometric")
    rep.verdict = theta is not None
    rep.add("isometric", rep.verdict)
    if theta is not None:
        rep.add("witness", [list(c) for c in theta.columns()])
    return rep


def cmd_glue(args) -> Report:
    k0 = _load(args.a, parse_quadratic_function)
    k1 = _load(args.b, parse_quadratic_function)
    g0 = torsion.boundary_presentation(k0).group
    g1 = torsion.boundary_presentation(k1).group
    if args.theta:
        theta = parse_hom(load_json(args.theta), g0, g1, args.theta)
    else:
        kind = classify.common_kind(k0, k1)
        theta = torsion.brute_isometry(torsion.boundary_quadratic(k0, kind),
                                       torsion.boundary_quadratic(k1, kind), args.oracle_cap)
        if theta is None:
            raise DocumentError("theta", "boundaries are not isometric; nothing to glue along")
    try:
        res = classify.glue(k0, k1, theta)
    except ValueError as exc:
        raise DocumentError("theta", str(exc)) from None
    rep = Report("glue")
    rep.add("kappa", emit_quadratic_function(res.kappa))
    rep.add("theta", emit_hom(theta))
    rep.add("i0", [list(c) for c in res.i0.columns()])
    rep.add("i1", [list(c) for c in res.i1.columns()])
    return rep


def cmd_qform_split(args) -> Report:
    k = _load(args.file, parse_quadratic_function)
    basis = parse_columns(load_json(args.basis), k.rank, args.basis)
    try:
        res = classify.split(k, basis)
    except ValueError as exc:
        raise DocumentError(args.basis, str(exc)) from None
    rep = Report("split")
    rep.add("kappa0", emit_quadratic_function(res.kappa0))
    rep.add("kappa1", emit_quadratic_function(res.kappa1))
    rep.add("theta", emit_hom(res.theta))
    return rep


def cmd_qform_stable(args) -> Report:
    k0 = _load(args.a, parse_quadratic_function)
    k1 = _load(args.b, parse_quadratic_function)
    try:
        verdict = classify.stably_equivalent(k0, k1, args.oracle_cap)
    except ValueError as exc:
        if isinstance(exc, BoundExceededError):
            raise
        raise DocumentError(args.b, str(exc)) from None
    rep = Report("qform stable")
    rep.verdict = verdict.equivalent
    rep.add("stably equivalent", verdict.equivalent)
    if verdict.witness is not None:
        rep.add("witness", emit_quadratic_function(verdict.witness))
    return rep


def cmd_lform_invariants(args) -> Report:
    b = _load(args.file, parse_linking_form)
    rep = Report("lform invariants")
    rep.add("group", _group_str(b.group.orders))
    rep.add("b", [[rational_str(x) for x in r] for r in b.gram])
    rep.add("indecomposable", classify.is_indecomposable(b))
    _kk_fields(rep, classify.kk_invariants(b, args.oracle_cap))
    return rep


def _kk_fields(rep: Report, kk: classify.KKInvariants):
    rep.add("ranks", {f"p={p} k={k}": r for (p, k), r in sorted(kk.ranks.items())})
    rep.add("sigma", {f"k={k}": ("inf" if s is None else s) for k, s in sorted(kk.sigma.items())})
    rep.add("c nonzero", {f"k={k}": c for k, c in sorted(kk.char_nonzero.items())})
    rep.add("odd discriminants",
            {f"p={p} k={k}": d for (p, k), d in sorted(kk.odd_discriminants.items())})


def cmd_lform_kk(args) -> Report:
    b = _load(args.file, parse_linking_form)
    rep = Report("lform kk")
    _kk_fields(rep, classify.kk_invariants(b, args.oracle_cap))
    return rep


def cmd_lform_isometric(args) -> Report:
    b0 = _load(args.a, parse_linking_form)
    b1 = _load(args.b, parse_linking_form)
    rep = Report("lform isometric")
    rep.verdict = classify.linking_forms_isometric(b0, b1, args.oracle_cap)
    rep.add("isometric", rep.verdict)
    return rep


def cmd_qlf_isometric(args) -> Report:
    q0 = _load(args.a, parse_qlf)
    q1 = _load(args.b, parse_qlf)
    rep = Report("qlf isometric")
    rep.verdict = classify.qlf_isometric(q0, q1, args.oracle_cap)
    rep.add("isometric", rep.verdict)
    return rep


def _element(text: str, group, where: str) -> tuple[int, ...]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DocumentError(where, f"expected comma separated integers, got {text!r}") from None
    if len(vals) != group.ngens:
        raise DocumentError(where, f"expected {group.ngens} coordinates")
    return group.reduce(vals)


def cmd_qlf_translate(args) -> Report:
    q = _load(args.file, parse_qlf)
    a = _element(args.by, q.group, "--by")
    rep = Report("qlf translate")
    rep.add("result", emit_qlf(torsion.translate(q, a)))
    return rep


def cmd_qlf_realize(args) -> Report:
    q = _load(args.file, parse_qlf)
    rep = Report("qlf realize")
    try:
        k = classify.realize(q, None, min(args.entry_bound, 4), args.oracle_cap)
    except classify.NotFoundAtBoundsError as exc:
        rep.verdict = False
        rep.add("found", False)
        rep.add("reason", str(exc))
        return rep
    rep.verdict = True
    rep.add("found", True)
    rep.add("kappa", emit_quadratic_function(k))
    return rep


def cmd_qlf_catalog(args) -> Report:
    try:
        name = classify.GeneratorName.parse(args.name)
    except ValueError as exc:
        raise DocumentError("name", str(exc)) from None
    q = classify.generator_catalog(name)
    if args.refine:
        q = torsion.translate(q, _element(args.refine, q.group, "--refine"))
    rep = Report("qlf catalog")
    rep.add("name", str(name))
    rep.add("qlf", emit_qlf(q))
    return rep


def cmd_manifold_invariants(args) -> Report:
    P = _load(args.file, parse_manifold)
    inv = manifolds.invariants(P)
    rep = Report("manifold invariants")
    rep.add("dim", P.dim)
    fam = inv.family
    rep.add("H^4", _group_str(fam.group.orders, fam.group.free_rank))
    _qlf_fields(rep, fam.q_at_section, args.oracle_cap)
    rep.add("beta", list(fam.beta))
    rep.add("s1", rational_str(inv.s1) if inv.s1 is not None else None)
    rep.add("sbar", rational_str(inv.sbar) if inv.sbar is not None else None)
    return rep


def cmd_manifold_compare(args) -> Report:
    P0 = _load(args.a, parse_manifold)
    P1 = _load(args.b, parse_manifold)
    d0, d1 = manifolds.boundary_data(P0), manifolds.boundary_data(P1)
    pres = manifolds.compare_data(d0, d1, args.level, args.oracle_cap)
    rev = manifolds.compare_data(d0, d1.reversed(), args.level, args.oracle_cap)
    rep = Report("manifold compare")
    rep.verdict = pres or rev
    word = LEVEL_WORDS[args.level]
    rep.add("verdict", word if rep.verdict else f"NOT {word}")
    rep.add("orientation preserving", pres)
    rep.add("orientation reversing", rev)
    return rep


def cmd_manifold_reverse(args) -> Report:
    P = _load(args.file, parse_manifold)
    rep = Report("manifold reverse")
    rep.add("manifold", emit_manifold(manifolds.reverse_orientation(P)))
    return rep


def cmd_bundle_invariants(args) -> Report:
    B = manifolds.SphereBundle(args.m, args.n)
    inv = manifolds.bundle_invariants(B)
    rep = Report("bundle invariants")
    rep.add("bundle", emit_bundle(B))
    rep.add("H^4", _group_str(inv.group.orders, inv.group.free_rank))
    rep.add("q", [rational_str(v) for v in inv.q.values])
    rep.add("b", [[rational_str(x) for x in r] for r in inv.b.gram])
    rep.add("beta", list(inv.beta))
    rep.add("s1", rational_str(inv.s1) if inv.s1 is not None else None)
    rep.add("sbar", rational_str(inv.sbar) if inv.sbar is not None else None)
    pi3 = manifolds.pi3_invariants(manifolds.Pi3SO4Class(args.m, args.n))
    rep.add("euler", pi3.euler)
    rep.add("stable class", pi3.stable)
    rep.add("pi3 SG(4)", list(pi3.sg4))
    return rep


def cmd_bundle_compare(args) -> Report:
    B0 = manifolds.SphereBundle(args.m0, args.n0)
    B1 = manifolds.SphereBundle(args.m1, args.n1)
    v = manifolds.bundle_compare(B0, B1, args.level, args.homotopy_rule)
    rep = Report("bundle compare")
    rep.verdict = v.equivalent
    word = LEVEL_WORDS[args.level]
    rep.add("verdict", word if v.equivalent else f"NOT {word}")
    rep.add("orientation preserving", v.preserving)
    rep.add("orientation reversing", v.reversing)
    return rep


def cmd_bundle_sweep(args) -> Report:
    rows = manifolds.coherence_sweep(args.max_n, cap=args.oracle_cap, homotopy_rule=args.homotopy_rule)
    rep = Report("bundle sweep")
    rep.verdict = all(r["disagreements"] == 0 for r in rows)
    for r in rows:
        rep.add(r["level"], f"{r['pairs']} pairs, {r['disagreements']} disagreements"
                if args.format == "text" else r)
    return rep


def cmd_oracle(args) -> Report:
    rep = Report(f"oracle {args.kind}")
    if args.kind == "lform":
        b0, b1 = _load(args.a, parse_linking_form), _load(args.b, parse_linking_form)
        theta = torsion.brute_linking_isometry(b0, b1, args.oracle_cap)
    elif args.kind == "wilkens":
        q0, q1 = _load(args.a, parse_qlf), _load(args.b, parse_qlf)
        theta = torsion.brute_wilkens_isometry(torsion.wilkens_data(q0), torsion.wilkens_data(q1),
                                               args.oracle_cap)
    else:
        q0, q1 = _load(args.a, parse_qlf), _load(args.b, parse_qlf)
        theta = torsion.brute_isometry(q0, q1, args.oracle_cap)
    rep.verdict = theta is not None
    rep.add("isometric", rep.verdict)
    if theta is not None:
        rep.add("witness", emit_hom(theta))
    return rep


def _random_form(rng: random.Random, rank: int, bound: int, even: bool) -> quadratic.QuadraticFunction:
    rows = [[0] * rank for _ in range(rank)]
    for i in range(rank):
        for j in range(i, rank):
            x = rng.randint(-bound, bound)
            if i == j and even:
                x *= 2
            rows[i][j] = rows[j][i] = x
    g = IntMatrix(rows, rank, rank)
    alpha = tuple(rows[i][i] % 2 + 2 * rng.randint(-3, 3) for i in range(rank))
    return quadratic.QuadraticFunction(g, alpha)


def cmd_selftest(args) -> Report:
    """Seeded property checks: sbar = -K and the Gauss sum phase of even forms."""
    rng = random.Random(args.seed)
    failures = []
    done = 0
    while done < args.count:
        k = _random_form(rng, rng.randint(1, 4), 3, rng.random() < 0.5)
        d = k.gram.determinant()
        if d == 0 or abs(d) > 200:
            continue
        done += 1
        q = torsion.boundary_quadratic(k, "c")
        if torsion.sbar_from_presentation(k) + torsion.kervaire_arf(q, args.oracle_cap) not in (0, 1):
            failures.append(("sbar+K", emit_quadratic_function(k)))
        if quadratic.has_even_gram(k):
            gs, _ = torsion.gauss_invariant(torsion.boundary_quadratic(k, "ev"), args.oracle_cap)
            if abs(gs - cmath.exp(2j * cmath.pi * quadratic.signature(k.gram) / 8)) > 1e-9:
                failures.append(("milgram", emit_quadratic_function(k)))
    rep = Report("selftest")
    rep.verdict = not failures
    rep.add("seed", args.seed)
    rep.add("cases", done)
    rep.add("failures", failures)
    return rep


# ---------------------------------------------------------------------------
# parser

def _common(parser: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--format", choices=("text", "json"), default=d("text"))
    parser.add_argument("--oracle-cap", type=_positive, default=d(torsion.DEFAULT_CAP))
    parser.add_argument("--rank-bound", type=_positive, default=d(8))
    parser.add_argument("--entry-bound", type=_positive, default=d(6))
    parser.add_argument("--strict", action="store_true", default=d(False))
    parser.add_argument("--seed", type=int, default=d(0))


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("value must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tf", description="Quadratic functions, linking forms "
                                     "and highly connected manifolds.")
    _common(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _common(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def leaf(subs, name, handler, help_text, *positionals):
        p = subs.add_parser(name, parents=[common], help=help_text)
        for pos in positionals:
            p.add_argument(pos)
        p.set_defaults(handler=handler)
        return p

    qform = sub.add_parser("qform", help="integral quadratic functions").add_subparsers(
        dest="action", required=True)
    leaf(qform, "invariants", cmd_qform_invariants, "flavor, signature and boundary data", "file")
    p = leaf(qform, "isometric", cmd_qform_isometric, "bounded isometry search", "a", "b")
    p.add_argument("--mod", type=_positive, default=None,
                   help="require alpha0 = alpha1 o theta modulo this number")
    for subs in (qform, sub):
        p = leaf(subs, "glue", cmd_glue, "glue two functions along a boundary isometry", "a", "b")
        p.add_argument("--theta", help="JSON file with the images of the boundary generators")
    p = leaf(qform, "split", cmd_qform_split, "split along a summand", "file")
    p.add_argument("--basis", required=True, help="JSON list of basis column vectors")
    leaf(qform, "stable", cmd_qform_stable, "stable equivalence", "a", "b")

    lform = sub.add_parser("lform", help="linking forms").add_subparsers(dest="action", required=True)
    leaf(lform, "invariants", cmd_lform_invariants, "rank and phase invariants", "file")
    leaf(lform, "isometric", cmd_lform_isometric, "isometry via invariants", "a", "b")
    leaf(lform, "kk", cmd_lform_kk, "rank, characteristic and phase invariants", "file")

    qlf = sub.add_parser("qlf", help="quadratic linking functions").add_subparsers(
        dest="action", required=True)
    leaf(qlf, "isometric", cmd_qlf_isometric, "isometry via Wilkens pair and K", "a", "b")
    p = leaf(qlf, "translate", cmd_qlf_translate, "translate by a group element", "file")
    p.add_argument("--by", required=True, help="comma separated coordinates")
    leaf(qlf, "realize", cmd_qlf_realize, "find a presenting characteristic function", "file")
    p = leaf(qlf, "catalog", cmd_qlf_catalog, "named generator, e.g. A(2,3,1), E0(1), E1(2)", "name")
    p.add_argument("--refine", help="translate by these comma separated coordinates")

    man = sub.add_parser("manifold", help="highly connected manifolds").add_subparsers(
        dest="action", required=True)
    leaf(man, "invariants", cmd_manifold_invariants, "family, beta, s1 and sbar", "file")
    p = leaf(man, "compare", cmd_manifold_compare, "classify a pair", "a", "b")
    p.add_argument("--level", choices=manifolds.LEVELS, default="almost_diffeo")
    leaf(man, "reverse", cmd_manifold_reverse, "reverse the orientation", "file")

    bun = sub.add_parser("bundle", help="S^3-bundles over S^4").add_subparsers(
        dest="action", required=True)
    p = leaf(bun, "invariants", cmd_bundle_invariants, "tabulated invariants")
    p.add_argument("m", type=int)
    p.add_argument("n", type=int)
    p = leaf(bun, "compare", cmd_bundle_compare, "congruence classifier")
    for name in ("m0", "n0", "m1", "n1"):
        p.add_argument(name, type=int)
    p.add_argument("--level", choices=manifolds.LEVELS, default="diffeo")
    p.add_argument("--homotopy-rule", choices=("printed", "refined"), default="printed",
                   help="congruence used at the homotopy level")
    p = leaf(bun, "sweep", cmd_bundle_sweep, "coherence grid against the generic classifier")
    p.add_argument("--max-n", type=_positive, default=30)
    p.add_argument("--homotopy-rule", choices=("printed", "refined"), default="printed",
                   help="congruence used at the homotopy level")

    p = sub.add_parser("oracle", parents=[common], help="brute-force isometry search")
    p.add_argument("kind", choices=("qlf", "lform", "wilkens"))
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(handler=cmd_oracle)
    p = leaf(sub, "selftest", cmd_selftest, "seeded randomized property checks")
    p.add_argument("--count", type=_positive, default=50)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        rep = args.handler(args)
    except DocumentError as exc:
        print(f"tf: input error: {exc}", file=sys.stderr)
        return 2
    except (BoundExceededError, UndecidedError, manifolds.UnsupportedComparisonError) as exc:
        print(f"tf: undecided: {exc}", file=sys.stderr)
        return 3
    except (ValueError, ArithmeticError) as exc:
        print(f"tf: input error: {exc}", file=sys.stderr)
        return 2
    print(rep.render(args.format))
    if args.strict and rep.verdict is False:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
