"""Recursive-descent parser for the supported subset.

Grammar (keywords case-insensitive on input, canonical on output):

    query       := select | ask
    select      := SELECT DISTINCT? item+ WHERE? group modifiers
    item        := var
                 | COUNT '(' DISTINCT? var ')' AS var
                 | '(' COUNT '(' DISTINCT? var ')' AS var ')'
    ask         := ASK WHERE? group
    group       := '{' element* '}'
    element     := triple '.'?
                 | group UNION group '.'?
                 | FILTER '(' operand cmp operand ')' '.'?
                 | FILTER NOT-EXISTS group '.'?
                 | BIND '(' operand (op operand)? AS var ')' '.'?
    triple      := term term term
    modifiers   := (GROUP-BY var+)? (ORDER-BY orderkey)?
                   (LIMIT int | OFFSET int)*
    orderkey    := inner | ASC '(' inner ')' | DESC '(' inner ')'
    inner       := var | COUNT '(' DISTINCT? var ')'

The parenthesized aggregate item is standard SPARQL; the bare form is
the dialect used throughout the pipeline.  Both parse to the same AST.
"""

from . import ast
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
from .errors import QuerySyntaxError, UnsupportedConstruct
from .lexer import COMPARISON_OPS, SparqlToken, tokenize, unescape_string_literal

_TERM_KINDS = ("variable", "iri", "mention", "placeholder",
               "string-literal", "numeric-literal")


class _Parser:
    def __init__(self, tokens: list[SparqlToken]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ------------------------------------------------

    def peek(self) -> SparqlToken | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> SparqlToken:
        tok = self.peek()
        if tok is None:
            raise QuerySyntaxError("unexpected end of input")
        self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return (tok is not None and tok.kind == kind
                and (text is None or tok.text == text))

    def accept(self, kind: str, text: str | None = None) -> SparqlToken | None:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> SparqlToken:
        tok = self.peek()
        if tok is None or tok.kind != kind or (text is not None and tok.text != text):
            raise QuerySyntaxError("unexpected token", token=tok,
                                   expected=(text or kind,))
        return self.next()

    # -- grammar -------------------------------------------------------

    def query(self) -> QueryAst:
        if self.accept("keyword", "SELECT"):
            q = self.select()
        elif self.accept("keyword", "ASK"):
            q = self.ask()
        else:
            raise QuerySyntaxError("query must start with SELECT or ASK",
                                   token=self.peek(), expected=("SELECT", "ASK"))
        if self.peek() is not None:
            raise QuerySyntaxError("trailing input after query", token=self.peek())
        return q

    def select(self) -> QueryAst:
        distinct = self.accept("keyword", "DISTINCT") is not None
        projection = []
        while True:
            if self.at("variable"):
                projection.append(self.term())
            elif self.at("keyword", "COUNT"):
                projection.append(self.aggregate(aliased=True))
            elif self.at("punct", "("):
                self.next()
                agg = self.aggregate(aliased=True)
                self.expect("punct", ")")
                projection.append(agg)
            elif not projection:
                raise QuerySyntaxError("empty SELECT projection",
                                       token=self.peek(),
                                       expected=("variable", "COUNT"))
            else:
                break
        self.accept("keyword", "WHERE")
        where = self.group()
        group_by, order_by, limit, offset = self.modifiers()
        q = QueryAst(form="select", projection=tuple(projection), where=where,
                     distinct=distinct, group_by=group_by, order_by=order_by,
                     limit=limit, offset=offset)
        validate(q)
        return q

    def ask(self) -> QueryAst:
        self.accept("keyword", "WHERE")
        where = self.group()
        q = QueryAst(form="ask", where=where)
        validate(q)
        return q

    def aggregate(self, aliased: bool) -> Aggregate:
        self.expect("keyword", "COUNT")
        self.expect("punct", "(")
        distinct = self.accept("keyword", "DISTINCT") is not None
        if self.at("punct", "*"):
            raise UnsupportedConstruct("COUNT(*)", self.peek().position)
        var = self.variable()
        self.expect("punct", ")")
        alias = None
        if aliased:
            self.expect("keyword", "AS")
            alias = self.variable()
        return Aggregate(distinct=distinct, variable=var, alias=alias)

    def variable(self) -> Term:
        tok = self.expect("variable")
        return Term.var(tok.text[1:])

    def group(self) -> tuple:
        self.expect("punct", "{")
        elements = []
        while not self.at("punct", "}"):
            elements.append(self.element())
            self.accept("punct", ".")
        self.expect("punct", "}")
        return tuple(elements)

    def element(self):
        if self.at("punct", "{"):
            left = self.group()
            if not self.at("keyword", "UNION"):
                raise UnsupportedConstruct("nested group without UNION")
            self.next()
            right = self.group()
            return UnionGroup(left, right)
        if self.accept("keyword", "FILTER"):
            if self.accept("keyword", "NOT EXISTS"):
                return FilterNotExists(self.group())
            self.expect("punct", "(")
            left = self.term()
            op_tok = self.peek()
            if op_tok is None or op_tok.kind != "punct" or op_tok.text not in COMPARISON_OPS:
                if op_tok is not None and op_tok.text == ")":
                    raise UnsupportedConstruct("bare FILTER expression",
                                               op_tok.position)
                raise QuerySyntaxError("expected comparison operator",
                                       token=op_tok,
                                       expected=tuple(sorted(COMPARISON_OPS)))
            self.next()
            right = self.term()
            self.expect("punct", ")")
            return Filter(Comparison(op_tok.text, left, right))
        if self.accept("keyword", "BIND"):
            self.expect("punct", "(")
            left = self.term()
            expr: Comparison | Term = left
            tok = self.peek()
            if tok is not None and tok.kind == "punct" and tok.text in ("+", "-", *COMPARISON_OPS):
                self.next()
                right = self.term()
                expr = Comparison(tok.text, left, right)
            self.expect("keyword", "AS")
            alias = self.variable()
            self.expect("punct", ")")
            return Bind(expr, alias)
        return self.triple()

    def triple(self) -> TriplePattern:
        subject = self.term()
        pred_tok = self.peek()
        predicate = self.term()
        if predicate.kind != ast.IRI:
            if predicate.kind == ast.VARIABLE:
                raise UnsupportedConstruct("variable predicate",
                                           pred_tok.position)
            raise QuerySyntaxError("triple predicate must be an IRI",
                                   token=pred_tok, expected=("iri",))
        obj = self.term()
        return TriplePattern(subject, predicate, obj)

    def term(self) -> Term:
        tok = self.peek()
        if tok is None or tok.kind not in _TERM_KINDS:
            raise QuerySyntaxError("expected a term", token=tok,
                                   expected=_TERM_KINDS)
        self.next()
        if tok.kind == "variable":
            return Term.var(tok.text[1:])
        if tok.kind == "iri":
            return Term.iri(tok.text[1:-1])
        if tok.kind == "mention":
            return Term.mention(tok.text[1:-1])
        if tok.kind == "placeholder":
            return Term.placeholder(int(tok.text[1:-1].split("_")[1]))
        if tok.kind == "string-literal":
            return Term.string(unescape_string_literal(tok.text))
        return Term.number(tok.text)

    def modifiers(self):
        group_by: list[Term] = []
        if self.accept("keyword", "GROUP BY"):
            while self.at("variable"):
                group_by.append(self.variable())
            if not group_by:
                raise QuerySyntaxError("GROUP BY needs at least one variable",
                                       token=self.peek(), expected=("variable",))
        order_by = None
        if self.accept("keyword", "ORDER BY"):
            order_by = self.orderkey()
        limit = offset = None
        while True:
            if limit is None and self.accept("keyword", "LIMIT"):
                limit = self.non_negative_int()
            elif offset is None and self.accept("keyword", "OFFSET"):
                offset = self.non_negative_int()
            else:
                break
        return tuple(group_by), order_by, limit, offset

    def orderkey(self) -> OrderBy:
        if self.accept("keyword", "ASC"):
            self.expect("punct", "(")
            expr = self.order_inner()
            self.expect("punct", ")")
            return OrderBy(expr, "asc")
        if self.accept("keyword", "DESC"):
            self.expect("punct", "(")
            expr = self.order_inner()
            self.expect("punct", ")")
            return OrderBy(expr, "desc")
        return OrderBy(self.order_inner(), "asc")

    def order_inner(self):
        if self.at("keyword", "COUNT"):
            return self.aggregate(aliased=False)
        return self.variable()

    def non_negative_int(self) -> int:
        tok = self.expect("numeric-literal")
        if "." in tok.text:
            raise QuerySyntaxError("expected an integer", token=tok,
                                   expected=("integer",))
        return int(tok.text)


def validate(q: QueryAst) -> None:
    """Enforce the structural invariants shared by queries and logical forms."""
    bound = ast.triple_variables(q.where)
    aliases = {p.alias.value for p in q.projection
               if isinstance(p, Aggregate) and p.alias is not None}
    for el in q.where:
        if isinstance(el, Bind):
            aliases.add(el.alias.value)
    defined = bound | aliases

    def check(term: Term, where: str) -> None:
        if term.kind == ast.VARIABLE and term.value not in defined:
            raise QuerySyntaxError(
                f"variable ?{term.value} in {where} is not bound by any triple pattern")

    if q.form == "ask" and q.projection:
        raise QuerySyntaxError("ASK query cannot project variables")
    for p in q.projection:
        if isinstance(p, Aggregate):
            check(p.variable, "aggregate")
        else:
            check(p, "projection")
    for v in q.group_by:
        check(v, "GROUP BY")
    if q.order_by is not None:
        expr = q.order_by.expr
        if isinstance(expr, Aggregate):
            check(expr.variable, "ORDER BY")
        else:
            check(expr, "ORDER BY")


def parse(text: str) -> QueryAst:
    """Parse ``text`` into a validated :class:`QueryAst`."""
    return _Parser(tokenize(text)).query()
