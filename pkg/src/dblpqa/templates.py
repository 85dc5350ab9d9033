"""Query template base: delexicalization, storage, and similarity retrieval.

Ground-truth queries are generalized by replacing their entity terms
with numbered placeholders; the resulting canonical strings form a
deduplicated base.  At answer time the generated logical form is
delexicalized the same way and the closest templates are retrieved by
normalized edit distance over the canonical text.
"""

import json
from dataclasses import dataclass, field, replace

from .sparql import (
    QueryAst,
    SparqlError,
    Term,
    Vocabulary,
    default_vocabulary,
    map_all_terms,
    map_entity_slots,
    parse,
    serialize,
)


class ArityMismatch(ValueError):
    pass


class EmptyBase(ValueError):
    pass


@dataclass(frozen=True)
class Template:
    canonical_text: str
    placeholder_count: int
    frequency: int = 1
    source_ids: tuple[str, ...] = ()


@dataclass
class TemplateBase:
    """Immutable after build; retrieval is safe from any thread."""

    templates: list[Template] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (id, reason)

    def __len__(self) -> int:
        return len(self.templates)


def _is_entity_term(term: Term, vocab: Vocabulary) -> bool:
    if term.kind == "mention":
        return True
    return term.kind == "iri" and vocab.is_entity_iri(term.value)


def delexicalize(ast: QueryAst, vocab: Vocabulary | None = None
                 ) -> tuple[QueryAst, list[Term]]:
    """Replace entity terms in subject/object slots with ``<entity_k>``.

    Placeholders are numbered by first appearance; repeated occurrences
    of the same term share a number.  Returns the template AST and the
    replaced terms in placeholder order.
    """
    vocab = vocab or default_vocabulary()
    assignment: dict[Term, int] = {}
    bindings: list[Term] = []

    def swap(term: Term) -> Term:
        if not _is_entity_term(term, vocab):
            return term
        if term not in assignment:
            assignment[term] = len(bindings) + 1
            bindings.append(term)
        return Term.placeholder(assignment[term])

    return replace(ast, where=map_entity_slots(ast.where, swap)), bindings


def relexicalize(template_ast: QueryAst, terms: list[Term]) -> QueryAst:
    """Fill each ``<entity_k>`` with ``terms[k-1]``."""
    max_index = 0

    def probe(term: Term) -> Term:
        nonlocal max_index
        if term.kind == "placeholder":
            max_index = max(max_index, term.placeholder_index)
        return term

    map_all_terms(template_ast.where, probe)
    if max_index > len(terms):
        raise ArityMismatch(
            f"template needs {max_index} terms, got {len(terms)}")

    def fill(term: Term) -> Term:
        if term.kind == "placeholder":
            return terms[term.placeholder_index - 1]
        return term

    return replace(template_ast, where=map_all_terms(template_ast.where, fill))


def placeholder_count(ast: QueryAst) -> int:
    count = 0

    def probe(term: Term) -> Term:
        nonlocal count
        if term.kind == "placeholder":
            count = max(count, term.placeholder_index)
        return term

    map_all_terms(ast.where, probe)
    return count


def build_base(training_queries: list[tuple[str, str]],
               vocab: Vocabulary | None = None) -> TemplateBase:
    """Delexicalize and deduplicate training queries into a base.

    Queries that fail to parse are collected in ``base.skipped`` rather
    than aborting the build.  Templates come out sorted by canonical
    text, so identical inputs always produce identical bases.
    """
    vocab = vocab or default_vocabulary()
    acc: dict[str, tuple[int, int, list[str]]] = {}  # text -> (slots, freq, ids)
    skipped: list[tuple[str, str]] = []
    for qid, text in training_queries:
        try:
            template_ast, bindings = delexicalize(parse(text), vocab)
        except SparqlError as exc:
            skipped.append((qid, str(exc)))
            continue
        canonical = serialize(template_ast)
        slots, freq, ids = acc.get(canonical, (len(bindings), 0, []))
        ids.append(qid)
        acc[canonical] = (slots, freq + 1, ids)
    templates = [Template(text, slots, freq, tuple(ids))
                 for text, (slots, freq, ids) in sorted(acc.items())]
    return TemplateBase(templates=templates, skipped=skipped)


def save_base(base: TemplateBase, path) -> None:
    """One JSON record per line, sorted by canonical text; diff-friendly."""
    records = sorted(base.templates, key=lambda t: t.canonical_text)
    with open(path, "w", encoding="utf-8") as fh:
        for t in records:
            fh.write(json.dumps({
                "template": t.canonical_text,
                "placeholders": t.placeholder_count,
                "frequency": t.frequency,
                "source_ids": list(t.source_ids),
            }, ensure_ascii=False) + "\n")


def load_base(path) -> TemplateBase:
    templates = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            templates.append(Template(rec["template"], rec["placeholders"],
                                      rec["frequency"],
                                      tuple(rec["source_ids"])))
    return TemplateBase(templates=templates)


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance, two-row dynamic program."""
    if a == b:
        return 0
    if len(a) < len(b):  # keep the inner row short
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = previous[j - 1] + (ca != cb)
            current.append(min(previous[j] + 1, current[j - 1] + 1, cost))
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> float:
    """Normalized similarity in [0, 1]: 1 - distance / max length."""
    if a == b:
        return 1.0
    longest = max(len(a), len(b))
    return 1.0 - edit_distance(a, b) / longest


def top_k(base: TemplateBase, probe: str, k: int) -> list[Template]:
    """The k most similar templates, deterministically ordered.

    Ties break by frequency (more training evidence first), then by
    canonical text, so retrieval never depends on storage order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not base.templates:
        raise EmptyBase("template base is empty")
    scored = sorted(
        base.templates,
        key=lambda t: (-similarity(probe, t.canonical_text),
                       -t.frequency, t.canonical_text))
    return scored[:k]
