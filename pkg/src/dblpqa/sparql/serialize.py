"""Canonical text rendering of query ASTs.

The canonical form is what the template base stores and compares, so it
must be a fixpoint: parse(serialize(a)) == a and serialize(parse(s)) is
stable under further round trips.  ``standard=True`` emits the
SPARQL-1.1 spelling instead (parenthesized aggregate projections), for
sending executable queries to real endpoints.
"""

from .ast import (
    Aggregate,
    Bind,
    Comparison,
    Filter,
    FilterNotExists,
    OrderBy,
    QueryAst,
    Term,
    TriplePattern,
    UnionGroup,
)
from .lexer import escape_string_literal, join_token_texts


def term_text(term: Term) -> str:
    if term.kind == "variable":
        return f"?{term.value}"
    if term.kind == "iri":
        return f"<{term.value}>"
    if term.kind == "mention":
        return f"<{term.value}>"
    if term.kind == "placeholder":
        return f"<entity_{term.value}>"
    if term.kind == "string":
        return escape_string_literal(term.value)
    return term.value  # number


def _aggregate_tokens(agg: Aggregate, standard: bool) -> list[str]:
    toks = ["COUNT", "("]
    if agg.distinct:
        toks.append("DISTINCT")
    toks += [term_text(agg.variable), ")"]
    if agg.alias is not None:
        toks += ["AS", term_text(agg.alias)]
    if standard and agg.alias is not None:
        toks = ["(", *toks, ")"]
    return toks


def _expr_tokens(expr) -> list[str]:
    if isinstance(expr, Comparison):
        return [term_text(expr.left), expr.op, term_text(expr.right)]
    return [term_text(expr)]


def _element_tokens(el) -> list[str]:
    if isinstance(el, TriplePattern):
        return [term_text(el.subject), term_text(el.predicate),
                term_text(el.object), "."]
    if isinstance(el, Filter):
        return ["FILTER", "(", *_expr_tokens(el.expr), ")"]
    if isinstance(el, FilterNotExists):
        return ["FILTER", "NOT EXISTS", *_group_tokens(el.group)]
    if isinstance(el, Bind):
        return ["BIND", "(", *_expr_tokens(el.expr), "AS",
                term_text(el.alias), ")"]
    if isinstance(el, UnionGroup):
        return [*_group_tokens(el.left), "UNION", *_group_tokens(el.right)]
    raise TypeError(f"unknown element {el!r}")


def _group_tokens(elements: tuple) -> list[str]:
    toks = ["{"]
    for el in elements:
        toks += _element_tokens(el)
    toks.append("}")
    return toks


def _order_tokens(order: OrderBy, standard: bool) -> list[str]:
    if isinstance(order.expr, Aggregate):
        inner = _aggregate_tokens(order.expr, standard=False)
    else:
        inner = [term_text(order.expr)]
    if order.direction == "desc":
        return ["DESC", "(", *inner, ")"]
    return inner


def to_tokens(q: QueryAst, standard: bool = False) -> list[str]:
    toks: list[str] = []
    if q.form == "ask":
        toks.append("ASK")
        toks += _group_tokens(q.where)
        return toks
    toks.append("SELECT")
    if q.distinct:
        toks.append("DISTINCT")
    for item in q.projection:
        if isinstance(item, Aggregate):
            toks += _aggregate_tokens(item, standard)
        else:
            toks.append(term_text(item))
    toks.append("WHERE")
    toks += _group_tokens(q.where)
    if q.group_by:
        toks.append("GROUP BY")
        toks += [term_text(v) for v in q.group_by]
    if q.order_by is not None:
        toks.append("ORDER BY")
        toks += _order_tokens(q.order_by, standard)
    if q.limit is not None:
        toks += ["LIMIT", str(q.limit)]
    if q.offset is not None:
        toks += ["OFFSET", str(q.offset)]
    return toks


def serialize(q: QueryAst, standard: bool = False) -> str:
    return join_token_texts(to_tokens(q, standard=standard))
