"""Tokenizer for the supported SPARQL subset and its logical-form dialect.

The dialect extends plain SPARQL terms with two angle-bracketed forms:
entity mentions (``<Ruijie Wang>``) and numbered placeholders
(``<entity_1>``).  Disambiguation is purely lexical: anything bracketed
that starts with ``http`` is an IRI, ``entity_<k>`` with k >= 1 is a
placeholder, and everything else is a mention.

A ``<`` is read as the comparison operator only when followed by
whitespace, ``=``, or end of input; otherwise it opens a bracketed term
that runs greedily to the next ``>``.  The canonical serializer always
surrounds operators with spaces, so canonical text is unambiguous.
"""

import re
from dataclasses import dataclass

from .errors import (
    IllegalCharacter,
    UnsupportedConstruct,
    UnterminatedBracket,
    UnterminatedString,
)

KEYWORDS = frozenset({
    "SELECT", "ASK", "WHERE", "DISTINCT", "COUNT", "AS", "FILTER", "UNION",
    "GROUP BY", "ORDER BY", "ASC", "DESC", "LIMIT", "OFFSET", "BIND",
    "NOT EXISTS",
})

# First word -> required second word for the multi-word keywords.
_MULTIWORD = {"GROUP": "BY", "ORDER": "BY", "NOT": "EXISTS"}

# SPARQL words we recognize but deliberately do not support.  Naming the
# construct beats a generic bad-character error.
_RESERVED_UNSUPPORTED = frozenset({
    "A", "AVG", "BASE", "BOUND", "CONSTRUCT", "CONTAINS", "DELETE",
    "DESCRIBE", "EXISTS", "FROM", "GRAPH", "HAVING", "IF", "IN", "INSERT",
    "LANG", "MAX", "MIN", "MINUS", "NAMED", "OPTIONAL", "PREFIX", "REDUCED",
    "REGEX", "SAMPLE", "SERVICE", "STR", "SUM", "VALUES", "XSD",
})

_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_VARNAME_RE = re.compile(r"[A-Za-z0-9_]+")
_NUMBER_RE = re.compile(r"[0-9]+(?:\.[0-9]+)?")
_PLACEHOLDER_RE = re.compile(r"entity_[1-9][0-9]*")

PUNCT = frozenset({"{", "}", "(", ")", ".", "=", "!=", "<", "<=", ">", ">=",
                   "+", "-", "*", ";", ","})

COMPARISON_OPS = frozenset({"=", "!=", "<", "<=", ">", ">="})
ARITHMETIC_OPS = frozenset({"+", "-"})


@dataclass(frozen=True)
class SparqlToken:
    kind: str  # keyword | variable | iri | mention | placeholder | string-literal | numeric-literal | punct
    text: str
    position: int


def escape_string_literal(value: str) -> str:
    """Render a string value in its canonical double-quoted form."""
    out = value.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


_UNESCAPE = {"\\": "\\", '"': '"', "'": "'", "n": "\n", "t": "\t"}


def unescape_string_literal(text: str) -> str:
    """Inverse of :func:`escape_string_literal`; accepts either quote style."""
    body = text[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_UNESCAPE.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(text: str) -> list[SparqlToken]:
    """Split ``text`` into tokens.

    Raises UnterminatedBracket, UnterminatedString, or IllegalCharacter
    with the offending character offset; recognized out-of-subset SPARQL
    keywords raise UnsupportedConstruct instead so callers see what was
    actually meant.
    """
    tokens: list[SparqlToken] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue

        if ch == "<":
            nxt = text[i + 1] if i + 1 < n else ""
            if nxt == "=":
                tokens.append(SparqlToken("punct", "<=", i))
                i += 2
                continue
            if nxt == "" or nxt.isspace():
                tokens.append(SparqlToken("punct", "<", i))
                i += 1
                continue
            j = text.find(">", i + 1)
            if j < 0:
                raise UnterminatedBracket("no closing '>' for '<'", i)
            inner = text[i + 1:j]
            if not inner.strip():
                raise IllegalCharacter("empty angle-bracketed term", i)
            if inner.startswith("http"):
                kind = "iri"
            elif _PLACEHOLDER_RE.fullmatch(inner):
                kind = "placeholder"
            else:
                kind = "mention"
            tokens.append(SparqlToken(kind, f"<{inner}>", i))
            i = j + 1
            continue

        if ch == ">":
            if i + 1 < n and text[i + 1] == "=":
                tokens.append(SparqlToken("punct", ">=", i))
                i += 2
            else:
                tokens.append(SparqlToken("punct", ">", i))
                i += 1
            continue

        if ch == "!":
            if i + 1 < n and text[i + 1] == "=":
                tokens.append(SparqlToken("punct", "!=", i))
                i += 2
                continue
            raise IllegalCharacter("'!' must be followed by '='", i)

        if ch in "{}()=+-*;,":
            tokens.append(SparqlToken("punct", ch, i))
            i += 1
            continue

        if ch == "?":
            m = _VARNAME_RE.match(text, i + 1)
            if not m:
                raise IllegalCharacter("'?' must start a variable name", i)
            tokens.append(SparqlToken("variable", text[i:m.end()], i))
            i = m.end()
            continue

        if ch in "'\"":
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == ch:
                    break
                j += 1
            if j >= n:
                raise UnterminatedString("no closing quote", i)
            value = unescape_string_literal(text[i:j + 1])
            tokens.append(SparqlToken("string-literal", escape_string_literal(value), i))
            i = j + 1
            continue

        if ch.isdigit():
            # "2015." is the number 2015 followed by a dot punct: the
            # fractional part requires a digit after the decimal point.
            m = _NUMBER_RE.match(text, i)
            tokens.append(SparqlToken("numeric-literal", m.group(), i))
            i = m.end()
            continue

        if ch == ".":
            tokens.append(SparqlToken("punct", ".", i))
            i += 1
            continue

        m = _WORD_RE.match(text, i)
        if m:
            word = m.group()
            upper = word.upper()
            end = m.end()
            if upper in _MULTIWORD:
                k = end
                while k < n and text[k].isspace():
                    k += 1
                m2 = _WORD_RE.match(text, k)
                second = _MULTIWORD[upper]
                if m2 and m2.group().upper() == second:
                    tokens.append(SparqlToken("keyword", f"{upper} {second}", i))
                    i = m2.end()
                    continue
                raise IllegalCharacter(
                    f"expected {second!r} after {word!r}", k if k < n else i)
            if upper in KEYWORDS:
                tokens.append(SparqlToken("keyword", upper, i))
                i = end
                continue
            if upper in _RESERVED_UNSUPPORTED:
                raise UnsupportedConstruct(word, i)
            raise IllegalCharacter(f"unexpected word {word!r}", i)

        raise IllegalCharacter(f"illegal character {ch!r}", i)

    return tokens


# Tokens rendered in function-call style: no space before their "(".
_CALL_STYLE = frozenset({"COUNT", "ASC", "DESC", "FILTER", "BIND"})


def join_token_texts(texts: list[str]) -> str:
    """Join token texts under the canonical whitespace rule.

    Single spaces everywhere, except that parentheses hug their contents
    and the function-style keywords hug their opening parenthesis.
    """
    out: list[str] = []
    prev = None
    for t in texts:
        if prev is None or prev == "(" or t == ")":
            out.append(t)
        elif t == "(" and prev in _CALL_STYLE:
            out.append(t)
        else:
            out.append(" " + t)
        prev = t
    return "".join(out)


def normalize(text: str) -> str:
    """Tokenize and re-join ``text`` under the canonical whitespace rule."""
    return join_token_texts([t.text for t in tokenize(text)])
