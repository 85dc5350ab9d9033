"""Immutable AST for the supported query subset.

Everything is a frozen dataclass built from tuples, so two ASTs compare
structurally with ``==`` and can be used as dict keys.  The same node
types represent both executable queries (entity slots hold IRIs) and
logical forms (entity slots hold mentions or placeholders).
"""

from dataclasses import dataclass

VARIABLE = "variable"
IRI = "iri"
MENTION = "mention"
PLACEHOLDER = "placeholder"
STRING = "string"
NUMBER = "number"

_TERM_KINDS = frozenset({VARIABLE, IRI, MENTION, PLACEHOLDER, STRING, NUMBER})


@dataclass(frozen=True)
class Term:
    """One RDF term or dialect term.

    ``value`` is the undecorated lexical value: variable name without the
    ``?``, IRI without angle brackets, mention surface text, placeholder
    index as a decimal string, string content unescaped, or the exact
    decimal text of a number.
    """

    kind: str
    value: str

    def __post_init__(self):
        if self.kind not in _TERM_KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}")

    @staticmethod
    def var(name: str) -> "Term":
        return Term(VARIABLE, name)

    @staticmethod
    def iri(value: str) -> "Term":
        return Term(IRI, value)

    @staticmethod
    def mention(surface: str) -> "Term":
        return Term(MENTION, surface)

    @staticmethod
    def placeholder(index: int) -> "Term":
        if index < 1:
            raise ValueError("placeholder index must be >= 1")
        return Term(PLACEHOLDER, str(index))

    @staticmethod
    def string(value: str) -> "Term":
        return Term(STRING, value)

    @staticmethod
    def number(text: str) -> "Term":
        return Term(NUMBER, text)

    @property
    def placeholder_index(self) -> int:
        if self.kind != PLACEHOLDER:
            raise ValueError("not a placeholder term")
        return int(self.value)

    def is_literal(self) -> bool:
        return self.kind in (STRING, NUMBER)


@dataclass(frozen=True)
class TriplePattern:
    subject: Term
    predicate: Term  # always an IRI term
    object: Term


@dataclass(frozen=True)
class Comparison:
    """A binary expression: FILTER comparisons and BIND arithmetic."""

    op: str  # = != < <= > >= + -
    left: Term
    right: Term


@dataclass(frozen=True)
class Filter:
    expr: Comparison


@dataclass(frozen=True)
class FilterNotExists:
    group: tuple


@dataclass(frozen=True)
class Bind:
    expr: "Comparison | Term"
    alias: Term  # variable


@dataclass(frozen=True)
class UnionGroup:
    left: tuple
    right: tuple


@dataclass(frozen=True)
class Aggregate:
    """COUNT over a variable, optionally DISTINCT, optionally aliased."""

    distinct: bool
    variable: Term
    alias: Term | None = None


@dataclass(frozen=True)
class OrderBy:
    expr: "Term | Aggregate"  # variable, or an un-aliased COUNT
    direction: str = "asc"  # asc | desc


@dataclass(frozen=True)
class QueryAst:
    form: str  # select | ask
    projection: tuple = ()  # of Term (variables) and Aggregate
    where: tuple = ()  # of TriplePattern | Filter | FilterNotExists | Bind | UnionGroup
    distinct: bool = False
    group_by: tuple = ()  # of Term (variables)
    order_by: OrderBy | None = None
    limit: int | None = None
    offset: int | None = None

    def has_aggregate(self) -> bool:
        return any(isinstance(p, Aggregate) for p in self.projection)


def iter_triples(elements: tuple):
    """Yield every TriplePattern in document order, descending into groups."""
    for el in elements:
        if isinstance(el, TriplePattern):
            yield el
        elif isinstance(el, UnionGroup):
            yield from iter_triples(el.left)
            yield from iter_triples(el.right)
        elif isinstance(el, FilterNotExists):
            yield from iter_triples(el.group)


def triple_variables(elements: tuple) -> set[str]:
    names = set()
    for t in iter_triples(elements):
        for term in (t.subject, t.predicate, t.object):
            if term.kind == VARIABLE:
                names.add(term.value)
    return names


def map_entity_slots(elements: tuple, fn) -> tuple:
    """Rebuild ``elements`` applying ``fn`` to every triple subject/object."""
    out = []
    for el in elements:
        if isinstance(el, TriplePattern):
            out.append(TriplePattern(fn(el.subject), el.predicate, fn(el.object)))
        elif isinstance(el, UnionGroup):
            out.append(UnionGroup(map_entity_slots(el.left, fn),
                                  map_entity_slots(el.right, fn)))
        elif isinstance(el, FilterNotExists):
            out.append(FilterNotExists(map_entity_slots(el.group, fn)))
        else:
            out.append(el)
    return tuple(out)


def map_all_terms(elements: tuple, fn) -> tuple:
    """Like map_entity_slots but also rewrites filter/bind operands."""

    def expr_map(expr):
        if isinstance(expr, Comparison):
            return Comparison(expr.op, fn(expr.left), fn(expr.right))
        return fn(expr)

    out = []
    for el in elements:
        if isinstance(el, TriplePattern):
            out.append(TriplePattern(fn(el.subject), el.predicate, fn(el.object)))
        elif isinstance(el, UnionGroup):
            out.append(UnionGroup(map_all_terms(el.left, fn),
                                  map_all_terms(el.right, fn)))
        elif isinstance(el, FilterNotExists):
            out.append(FilterNotExists(map_all_terms(el.group, fn)))
        elif isinstance(el, Filter):
            out.append(Filter(expr_map(el.expr)))
        elif isinstance(el, Bind):
            out.append(Bind(expr_map(el.expr), el.alias))
        else:
            out.append(el)
    return tuple(out)
