"""Tokenizer, parser, and serializer for the supported query subset."""

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
    iter_triples,
    map_all_terms,
    map_entity_slots,
    triple_variables,
)
from .errors import (
    EmptyRelationSet,
    IllegalCharacter,
    QuerySyntaxError,
    SparqlError,
    TokenizeError,
    UnsupportedConstruct,
    UnterminatedBracket,
    UnterminatedString,
)
from .lexer import SparqlToken, join_token_texts, normalize, tokenize
from .parser import parse, validate
from .serialize import serialize, term_text
from .vocabulary import (
    SYNTAX_TOKENS,
    Vocabulary,
    default_relations,
    default_vocabulary,
    load_relations,
    special_token_vocabulary,
)

__all__ = [
    "Aggregate", "Bind", "Comparison", "Filter", "FilterNotExists",
    "OrderBy", "QueryAst", "Term", "TriplePattern", "UnionGroup",
    "iter_triples", "map_all_terms", "map_entity_slots", "triple_variables",
    "EmptyRelationSet", "IllegalCharacter", "QuerySyntaxError", "SparqlError",
    "TokenizeError", "UnsupportedConstruct", "UnterminatedBracket",
    "UnterminatedString",
    "SparqlToken", "join_token_texts", "normalize", "tokenize",
    "parse", "validate", "serialize", "term_text",
    "SYNTAX_TOKENS", "Vocabulary", "default_relations", "default_vocabulary",
    "load_relations", "special_token_vocabulary",
]
