"""Query execution: remote SPARQL endpoints and a local in-memory graph.

The local evaluator implements the full supported subset with plain
nested-loop joins.  It exists so the whole pipeline can run and be
verified without touching the network; the mock endpoint in
``mock_endpoint.py`` serves it over HTTP for client tests.
"""

import time

import requests

from .sparql import (
    Aggregate,
    Bind,
    Comparison,
    Filter,
    FilterNotExists,
    QueryAst,
    Term,
    TriplePattern,
    UnionGroup,
    UnsupportedConstruct,
)

RESULTS_JSON = "application/sparql-results+json"


class EndpointError(RuntimeError):
    def __init__(self, status: int, body: str):
        super().__init__(f"endpoint returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body[:500]


class EndpointTimeout(RuntimeError):
    pass


class MalformedResults(ValueError):
    pass


class GraphParseError(ValueError):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.line_no = line_no


class ResultSet:
    """Either variable bindings (SELECT) or a truth value (ASK)."""

    def __init__(self, kind: str, variables: list[str] | None = None,
                 rows: list[dict[str, str]] | None = None,
                 truth: bool | None = None):
        self.kind = kind  # bindings | boolean
        self.variables = list(variables or [])
        self.rows = list(rows or [])
        self.truth = truth

    def __eq__(self, other):
        if not isinstance(other, ResultSet):
            return NotImplemented
        return (self.kind, self.variables, self.rows, self.truth) == \
               (other.kind, other.variables, other.rows, other.truth)

    def __repr__(self):
        if self.kind == "boolean":
            return f"ResultSet(boolean {self.truth})"
        return f"ResultSet({len(self.rows)} rows over {self.variables})"

    def value_set(self) -> set[str]:
        """All bound values across rows; the pipeline's answer set."""
        values = set()
        for row in self.rows:
            values.update(row.values())
        return values


class Graph:
    """A deduplicated set of triples with reproducible iteration order.

    Subjects and predicates are IRI strings; objects are Terms (IRI or
    literal).  Insertion order is kept so evaluation results do not
    depend on hash seeds.
    """

    def __init__(self, triples=()):
        self._triples: dict[tuple[str, str, Term], None] = {}
        for t in triples:
            self.add(*t)

    def add(self, subject: str, predicate: str, obj: Term) -> None:
        self._triples.setdefault((subject, predicate, obj), None)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self):
        return iter(self._triples)

    def __contains__(self, triple) -> bool:
        return triple in self._triples


def load_graph(path) -> Graph:
    """Read the line-oriented triple format.

    Each line is ``<s> <p> <o> .``, ``<s> <p> "literal" .`` or
    ``<s> <p> number .``; blank lines and '#' comments are skipped.
    """
    graph = Graph()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                triple = _parse_triple_line(line)
            except ValueError as exc:
                raise GraphParseError(path, line_no, str(exc)) from None
            graph.add(*triple)
    return graph


def _parse_triple_line(line: str) -> tuple[str, str, Term]:
    if not line.endswith("."):
        raise ValueError("line must end with '.'")
    rest = line[:-1].strip()
    subject, rest = _take_iri(rest)
    predicate, rest = _take_iri(rest)
    rest = rest.strip()
    if not rest:
        raise ValueError("missing object")
    if rest.startswith("<"):
        obj_text, rest = _take_iri(rest)
        obj = Term.iri(obj_text)
    elif rest.startswith('"'):
        end = _closing_quote(rest)
        obj = Term.string(rest[1:end].replace('\\"', '"'))
        rest = rest[end + 1:]
    else:
        value = rest.split()[0]
        try:
            float(value)
        except ValueError:
            raise ValueError(f"unrecognized object {value!r}") from None
        obj = Term.number(value)
        rest = rest[len(value):]
    if rest.strip():
        raise ValueError(f"trailing content {rest.strip()!r}")
    return subject, predicate, obj


def _take_iri(text: str) -> tuple[str, str]:
    text = text.strip()
    if not text.startswith("<"):
        raise ValueError(f"expected '<' at {text[:20]!r}")
    end = text.find(">")
    if end < 0:
        raise ValueError("unterminated IRI")
    return text[1:end], text[end + 1:]


def _closing_quote(text: str) -> int:
    i = 1
    while i < len(text):
        if text[i] == "\\":
            i += 2
            continue
        if text[i] == '"':
            return i
        i += 1
    raise ValueError("unterminated literal")


# ---------------------------------------------------------------------------
# Local evaluation


def _value_key(term: Term) -> tuple[str, str]:
    """Comparison key: IRIs are distinct from literals; literal kinds
    (quoted vs bare number) collapse to their text value."""
    if term.kind == "iri":
        return ("iri", term.value)
    if term.kind in ("string", "number"):
        return ("lit", term.value)
    return (term.kind, term.value)


def _match_term(pattern: Term, value: Term,
                binding: dict[str, Term]) -> dict[str, Term] | None:
    if pattern.kind == "variable":
        bound = binding.get(pattern.value)
        if bound is None:
            new = dict(binding)
            new[pattern.value] = value
            return new
        return binding if _value_key(bound) == _value_key(value) else None
    return binding if _value_key(pattern) == _value_key(value) else None


def _solve(elements: tuple, solutions: list[dict[str, Term]],
           graph: Graph) -> list[dict[str, Term]]:
    for el in elements:
        if isinstance(el, TriplePattern):
            if el.subject.kind in ("mention", "placeholder") or \
               el.object.kind in ("mention", "placeholder"):
                raise UnsupportedConstruct(
                    "mention/placeholder term in an executable query")
            next_solutions = []
            for binding in solutions:
                for (s, p, o) in graph:
                    b = _match_term(el.subject, Term.iri(s), binding)
                    if b is None:
                        continue
                    b = _match_term(el.predicate, Term.iri(p), b)
                    if b is None:
                        continue
                    b = _match_term(el.object, o, b)
                    if b is not None:
                        next_solutions.append(b)
            solutions = next_solutions
        elif isinstance(el, Filter):
            solutions = [b for b in solutions if _eval_comparison(el.expr, b)]
        elif isinstance(el, FilterNotExists):
            solutions = [b for b in solutions
                         if not _solve(el.group, [b], graph)]
        elif isinstance(el, UnionGroup):
            solutions = (_solve(el.left, list(solutions), graph)
                         + _solve(el.right, list(solutions), graph))
        elif isinstance(el, Bind):
            next_solutions = []
            for b in solutions:
                value = _eval_expr(el.expr, b)
                if value is None:
                    continue
                new = dict(b)
                new[el.alias.value] = value
                next_solutions.append(new)
            solutions = next_solutions
        else:
            raise UnsupportedConstruct(type(el).__name__)
    return solutions


def _operand_value(term: Term, binding: dict[str, Term]) -> Term | None:
    if term.kind == "variable":
        return binding.get(term.value)
    return term


def _compare_values(a: str, b: str) -> int:
    """Numeric order when both sides are integers, else string order."""
    try:
        ia, ib = int(a), int(b)
    except ValueError:
        return (a > b) - (a < b)
    return (ia > ib) - (ia < ib)


def _eval_comparison(expr: Comparison, binding: dict[str, Term]) -> bool:
    left = _operand_value(expr.left, binding)
    right = _operand_value(expr.right, binding)
    if left is None or right is None:
        return False
    if expr.op in ("=", "!="):
        equal = _value_key(left) == _value_key(right) or (
            left.is_literal() and right.is_literal()
            and _compare_values(left.value, right.value) == 0)
        return equal if expr.op == "=" else not equal
    cmp = _compare_values(left.value, right.value)
    return {"<": cmp < 0, "<=": cmp <= 0, ">": cmp > 0, ">=": cmp >= 0}[expr.op]


def _eval_expr(expr, binding: dict[str, Term]) -> Term | None:
    if isinstance(expr, Term):
        return _operand_value(expr, binding)
    if expr.op in ("+", "-"):
        left = _operand_value(expr.left, binding)
        right = _operand_value(expr.right, binding)
        if left is None or right is None:
            return None
        try:
            la, ra = int(left.value), int(right.value)
        except ValueError:
            return None
        return Term.number(str(la + ra if expr.op == "+" else la - ra))
    return Term.string("true") if _eval_comparison(expr, binding) \
        else Term.string("false")


def _render(term: Term) -> str:
    return term.value


def evaluate_local(ast: QueryAst, graph: Graph) -> ResultSet:
    """Evaluate a query over an in-memory graph.

    Join order follows the pattern order; grouping, aggregation,
    ordering, projection, DISTINCT, and OFFSET/LIMIT apply in that
    sequence, matching what a real endpoint would return for the subset.
    """
    solutions = _solve(ast.where, [{}], graph)
    if ast.form == "ask":
        return ResultSet("boolean", truth=bool(solutions))

    aggregates = [p for p in ast.projection if isinstance(p, Aggregate)]
    plain_vars = [p for p in ast.projection if isinstance(p, Term)]

    if aggregates or ast.group_by:
        if ast.group_by:
            groups: dict[tuple, list[dict[str, Term]]] = {}
            order: list[tuple] = []
            for b in solutions:
                key = tuple(_render(b[v.value]) if v.value in b else None
                            for v in ast.group_by)
                if key not in groups:
                    groups[key] = []
                    order.append(key)
                groups[key].append(b)
            grouped = [(key, groups[key]) for key in order]
        else:
            grouped = [((), solutions)]

        rows = []
        for key, members in grouped:
            row: dict[str, str] = {}
            for v, k in zip(ast.group_by, key):
                if k is not None:
                    row[v.value] = k
            for agg in aggregates:
                row[agg.alias.value] = str(_count(agg, members))
            for v in plain_vars:
                if v.value in row:
                    continue
                values = [b[v.value] for b in members if v.value in b]
                if values:
                    row[v.value] = _render(values[0])
            rows.append((row, members))

        if ast.order_by is not None:
            rows = _order_grouped(rows, ast.order_by)
        out_rows = [row for row, _ in rows]
    else:
        out_rows = []
        for b in solutions:
            row = {v.value: _render(b[v.value]) for v in plain_vars
                   if v.value in b}
            out_rows.append(row)
        if ast.order_by is not None:
            out_rows = _order_plain(out_rows, solutions, ast.order_by)

    if ast.distinct:
        seen = set()
        unique = []
        for row in out_rows:
            key = tuple(sorted(row.items()))
            if key not in seen:
                seen.add(key)
                unique.append(row)
        out_rows = unique

    if ast.offset is not None:
        out_rows = out_rows[ast.offset:]
    if ast.limit is not None:
        out_rows = out_rows[:ast.limit]

    variables = [p.alias.value if isinstance(p, Aggregate) else p.value
                 for p in ast.projection]
    return ResultSet("bindings", variables=variables, rows=out_rows)


def _count(agg: Aggregate, members: list[dict[str, Term]]) -> int:
    values = [b[agg.variable.value] for b in members
              if agg.variable.value in b]
    if agg.distinct:
        return len({_value_key(v) for v in values})
    return len(values)


def _sort_key(value: str | None):
    if value is None:
        return (0, 0, "")
    try:
        return (1, int(value), "")
    except ValueError:
        return (2, 0, value)


def _order_grouped(rows, order):
    def key(item):
        row, members = item
        if isinstance(order.expr, Aggregate):
            return _sort_key(str(_count(order.expr, members)))
        return _sort_key(row.get(order.expr.value))

    return sorted(rows, key=key, reverse=(order.direction == "desc"))


def _order_plain(out_rows, solutions, order):
    if isinstance(order.expr, Aggregate):
        raise UnsupportedConstruct("ORDER BY aggregate without GROUP BY")
    name = order.expr.value
    decorated = []
    for row, b in zip(out_rows, solutions):
        value = _render(b[name]) if name in b else None
        decorated.append((value, row))
    decorated.sort(key=lambda item: _sort_key(item[0]),
                   reverse=(order.direction == "desc"))
    return [row for _, row in decorated]


# ---------------------------------------------------------------------------
# Remote execution


def parse_results_json(payload) -> ResultSet:
    """Parse the standard SPARQL results-JSON document."""
    if not isinstance(payload, dict):
        raise MalformedResults("results document must be a JSON object")
    if "boolean" in payload:
        if not isinstance(payload["boolean"], bool):
            raise MalformedResults("'boolean' must be true or false")
        return ResultSet("boolean", truth=payload["boolean"])
    try:
        variables = list(payload["head"]["vars"])
        bindings = payload["results"]["bindings"]
    except (KeyError, TypeError) as exc:
        raise MalformedResults(f"missing field: {exc}") from None
    rows = []
    for binding in bindings:
        row = {}
        for var, cell in binding.items():
            if not isinstance(cell, dict) or "value" not in cell:
                raise MalformedResults(f"malformed cell for ?{var}")
            row[var] = cell["value"]
        rows.append(row)
    return ResultSet("bindings", variables=variables, rows=rows)


def results_to_json(result: ResultSet) -> dict:
    """Inverse of :func:`parse_results_json`, used by the mock endpoint."""
    if result.kind == "boolean":
        return {"head": {}, "boolean": result.truth}
    bindings = []
    for row in result.rows:
        cell = {}
        for var, value in row.items():
            kind = "uri" if value.startswith("http") else "literal"
            cell[var] = {"type": kind, "value": value}
        bindings.append(cell)
    return {"head": {"vars": result.variables},
            "results": {"bindings": bindings}}


def execute_remote(query: str, endpoint_url: str, timeout: float = 15.0,
                   retries: int = 2, backoff: float = 0.5,
                   session: requests.Session | None = None) -> ResultSet:
    """Run ``query`` against a SPARQL endpoint, with bounded retries.

    Transient failures (connection errors, timeouts, HTTP 5xx) are
    retried with exponential backoff; anything else raises immediately.
    """
    session = session or requests
    last_error: Exception | None = None
    for attempt in range(retries + 1):
        if attempt:
            time.sleep(backoff * (2 ** (attempt - 1)))
        try:
            response = session.get(endpoint_url, params={"query": query},
                                   headers={"Accept": RESULTS_JSON},
                                   timeout=timeout)
        except requests.Timeout as exc:
            last_error = EndpointTimeout(str(exc))
            continue
        except requests.RequestException as exc:
            last_error = EndpointError(0, f"connection failed: {exc}")
            continue
        if response.status_code >= 500:
            last_error = EndpointError(response.status_code, response.text)
            continue
        if response.status_code != 200:
            raise EndpointError(response.status_code, response.text)
        try:
            return parse_results_json(response.json())
        except ValueError as exc:
            raise MalformedResults(str(exc)) from None
    raise last_error
