"""JSON documents for functions, forms, manifolds and bundles.

Rationals travel as "p/q" strings so that no value ever passes through a float.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .manifolds import ManifoldDescriptor, SphereBundle
from .quadratic import QuadraticFunction
from .torsion import LinkingForm, QuadraticLinkingFunction
from .zmodule import FinAbGroup, GroupHom, IntMatrix


class DocumentError(ValueError):
    """A document does not match its schema; `where` names the offending field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


def rational_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(value, where: str) -> Fraction:
    if isinstance(value, bool):
        raise DocumentError(where, "expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise DocumentError(where, f"expected an exact rational like \"3/8\", got {value!r}")


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(where, f"expected an integer, got {value!r}")
    return value


def _int_list(value, where: str) -> list[int]:
    if not isinstance(value, list):
        raise DocumentError(where, "expected a list of integers")
    return [_int(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _field(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise DocumentError(where, "expected an object")
    if key not in doc:
        raise DocumentError(f"{where}.{key}", "missing field")
    return doc[key]


# ---------------------------------------------------------------------------
# quadratic functions

def emit_quadratic_function(k: QuadraticFunction) -> dict:
    return {"gram": k.gram.tolist(), "alpha": list(k.linear)}


def parse_quadratic_function(doc, where: str = "$") -> QuadraticFunction:
    rows = _field(doc, "gram", where)
    if not isinstance(rows, list):
        raise DocumentError(f"{where}.gram", "expected a list of rows")
    gram = [_int_list(r, f"{where}.gram[{i}]") for i, r in enumerate(rows)]
    n = len(gram)
    if any(len(r) != n for r in gram):
        raise DocumentError(f"{where}.gram", "matrix must be square")
    alpha = _int_list(doc.get("alpha", [0] * n), f"{where}.alpha")
    try:
        return QuadraticFunction(IntMatrix(gram, n, n), tuple(alpha))
    except ValueError as exc:
        raise DocumentError(where, str(exc)) from None


# ---------------------------------------------------------------------------
# linking forms and quadratic linking functions

def emit_linking_form(b: LinkingForm) -> dict:
    return {"orders": list(b.group.orders), "b": [[rational_str(x) for x in r] for r in b.gram]}


def _table(doc, key: str, n: int, where: str) -> list[list[Fraction]]:
    rows = _field(doc, key, where)
    if not isinstance(rows, list) or len(rows) != n:
        raise DocumentError(f"{where}.{key}", f"expected {n} rows")
    out = []
    for i, r in enumerate(rows):
        if not isinstance(r, list) or len(r) != n:
            raise DocumentError(f"{where}.{key}[{i}]", f"expected {n} entries")
        out.append([parse_rational(x, f"{where}.{key}[{i}][{j}]") for j, x in enumerate(r)])
    return out


def _orders(doc, where: str) -> list[int]:
    orders = _int_list(_field(doc, "orders", where), f"{where}.orders")
    if any(o < 1 for o in orders):
        raise DocumentError(f"{where}.orders", "orders must be positive")
    return orders


def _is_primary_sorted(orders) -> bool:
    try:
        return FinAbGroup(tuple(orders)).orders == tuple(orders)
    except ValueError:
        return False


def parse_linking_form(doc, where: str = "$") -> LinkingForm:
    """Orders that are not sorted prime powers are split into primary parts."""
    orders = _orders(doc, where)
    table = _table(doc, "b", len(orders), where)
    try:
        if _is_primary_sorted(orders):
            return LinkingForm(FinAbGroup(tuple(orders)), tuple(tuple(r) for r in table))
        return LinkingForm.from_cyclic(orders, table)
    except ValueError as exc:
        raise DocumentError(where, str(exc)) from None


def emit_qlf(q: QuadraticLinkingFunction) -> dict:
    doc = emit_linking_form(q.base)
    doc["q"] = [rational_str(v) for v in q.values]
    return doc


def parse_qlf(doc, where: str = "$") -> QuadraticLinkingFunction:
    orders = _orders(doc, where)
    table = _table(doc, "b", len(orders), where)
    values = _field(doc, "q", where)
    if not isinstance(values, list) or len(values) != len(orders):
        raise DocumentError(f"{where}.q", f"expected {len(orders)} values")
    vals = [parse_rational(v, f"{where}.q[{i}]") for i, v in enumerate(values)]
    try:
        if _is_primary_sorted(orders):
            base = LinkingForm(FinAbGroup(tuple(orders)), tuple(tuple(r) for r in table))
            return QuadraticLinkingFunction(base, tuple(vals))
        return QuadraticLinkingFunction.from_cyclic(orders, table, vals)
    except ValueError as exc:
        raise DocumentError(where, str(exc)) from None


# ---------------------------------------------------------------------------
# manifolds, bundles, homomorphisms

def emit_manifold(P: ManifoldDescriptor) -> dict:
    return {"dim": P.dim, "presentation": emit_quadratic_function(P.presentation),
            "sigma_p_exotic": P.sigma_p_exotic}


def parse_manifold(doc, where: str = "$") -> ManifoldDescriptor:
    dim = _int(_field(doc, "dim", where), f"{where}.dim")
    k = parse_quadratic_function(_field(doc, "presentation", where), f"{where}.presentation")
    exotic = doc.get("sigma_p_exotic", False)
    if not isinstance(exotic, bool):
        raise DocumentError(f"{where}.sigma_p_exotic", "expected a boolean")
    try:
        return ManifoldDescriptor(dim, k, exotic)
    except ValueError as exc:
        raise DocumentError(where, str(exc)) from None


def emit_bundle(B: SphereBundle) -> dict:
    return {"m": B.m, "n": B.n}


def parse_bundle(doc, where: str = "$") -> SphereBundle:
    return SphereBundle(_int(_field(doc, "m", where), f"{where}.m"),
                        _int(_field(doc, "n", where), f"{where}.n"))


def emit_hom(theta: GroupHom) -> dict:
    return {"source": list(theta.source.orders), "target": list(theta.target.orders),
            "images": [list(c) for c in theta.images()]}


def parse_hom(doc, source: FinAbGroup, target: FinAbGroup, where: str = "$") -> GroupHom:
    """Images of the source generators; declared orders, if present, must match."""
    images = _field(doc, "images", where)
    if not isinstance(images, list) or len(images) != source.ngens:
        raise DocumentError(f"{where}.images", f"expected {source.ngens} images")
    cols = []
    for i, im in enumerate(images):
        v = _int_list(im, f"{where}.images[{i}]")
        if len(v) != target.ngens:
            raise DocumentError(f"{where}.images[{i}]", f"expected {target.ngens} coordinates")
        cols.append(v)
    for key, grp in (("source", source), ("target", target)):
        if key in doc and tuple(_int_list(doc[key], f"{where}.{key}")) != grp.orders:
            raise DocumentError(f"{where}.{key}", f"does not match the group {list(grp.orders)}")
    try:
        return GroupHom.from_images(source, target, cols)
    except ValueError as exc:
        raise DocumentError(where, str(exc)) from None


def emit_matrix_columns(m: IntMatrix) -> list[list[int]]:
    return [list(c) for c in m.columns()]


def parse_columns(doc, rows: int, where: str = "$") -> IntMatrix:
    """A list of column vectors, optionally wrapped as {"basis": [...]}."""
    if isinstance(doc, dict):
        doc = _field(doc, "basis", where)
        where = f"{where}.basis"
    if not isinstance(doc, list):
        raise DocumentError(where, "expected a list of vectors")
    cols = []
    for i, c in enumerate(doc):
        v = _int_list(c, f"{where}[{i}]")
        if len(v) != rows:
            raise DocumentError(f"{where}[{i}]", f"expected {rows} entries")
        cols.append(v)
    return IntMatrix.from_columns(cols, rows) if cols else IntMatrix.zeros(rows, 0)


# ---------------------------------------------------------------------------
# files

def load_json(path: str) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DocumentError(path, f"cannot read file ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
