"""Relation vocabulary and the shared special-token list.

The knowledge graph exposes only a small, fixed set of relations, so
they travel as whole tokens through the whole system: the translator
emits them verbatim, the template base treats them as structure rather
than entities, and the model server adds them to its tokenizer.  The
packaged ``data/relations.txt`` holds the default set; deployments may
point at their own file, which then becomes the single source of truth
everywhere.
"""

from dataclasses import dataclass
from importlib import resources

from .errors import EmptyRelationSet

# Syntax tokens in their documented order: the frequent punctuation and
# core clauses first, then the rest of the keyword vocabulary.
SYNTAX_TOKENS: tuple[str, ...] = (
    "SELECT", "COUNT", "ORDER BY", "{", "}", "(", ")", ".",
    "ASK", "WHERE", "DISTINCT", "AS", "FILTER", "UNION", "GROUP BY",
    "ASC", "DESC", "LIMIT", "OFFSET", "BIND", "NOT EXISTS",
)

# IRIs under these prefixes are schema/ontology vocabulary, never
# entities, regardless of position in a triple.
SCHEMA_PREFIXES: tuple[str, ...] = (
    "https://dblp.org/rdf/schema#",
    "http://www.w3.org/",
)


def load_relations(path) -> list[str]:
    """Read one relation IRI per line; '#' starts a comment."""
    relations = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                relations.append(line)
    return relations


def default_relations() -> list[str]:
    ref = resources.files("dblpqa.data").joinpath("relations.txt")
    return [line.strip() for line in ref.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.strip().startswith("#")]


def special_token_vocabulary(relations: list[str]) -> list[str]:
    """The fixed syntax tokens followed by the relation IRIs, deduplicated.

    This list is what a downstream tokenizer registers as unsplittable
    tokens; order is stable so vocabularies are reproducible.
    """
    if not relations:
        raise EmptyRelationSet("relation set must not be empty")
    for iri in relations:
        if not iri.startswith("http"):
            raise ValueError(f"not an IRI: {iri!r}")
    seen = set()
    vocab = []
    for token in (*SYNTAX_TOKENS, *relations):
        if token not in seen:
            seen.add(token)
            vocab.append(token)
    return vocab


@dataclass(frozen=True)
class Vocabulary:
    """Relation IRIs plus the prefixes that mark non-entity IRIs."""

    relations: tuple[str, ...]
    schema_prefixes: tuple[str, ...] = SCHEMA_PREFIXES

    def is_relation(self, iri: str) -> bool:
        return iri in self.relations

    def is_entity_iri(self, iri: str) -> bool:
        if iri in self.relations:
            return False
        return not any(iri.startswith(p) for p in self.schema_prefixes)


def default_vocabulary() -> Vocabulary:
    return Vocabulary(relations=tuple(default_relations()))
