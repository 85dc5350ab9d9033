"""The special-token vocabulary and the query text spacing rules.

The query language treats its keywords, punctuation, and the knowledge
graph's relation IRIs as indivisible tokens.  The relations file is
shared with the QA pipeline (one IRI per line, '#' comments); the
syntax-token list below mirrors the pipeline's wire contract.
"""

SYNTAX_TOKENS: tuple[str, ...] = (
    "SELECT", "COUNT", "ORDER BY", "{", "}", "(", ")", ".",
    "ASK", "WHERE", "DISTINCT", "AS", "FILTER", "UNION", "GROUP BY",
    "ASC", "DESC", "LIMIT", "OFFSET", "BIND", "NOT EXISTS",
)


def load_relations(path) -> list[str]:
    relations = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                relations.append(line)
    return relations


def special_tokens(relations: list[str]) -> list[str]:
    if not relations:
        raise ValueError("relation set must not be empty")
    seen = set()
    out = []
    for token in (*SYNTAX_TOKENS, *relations):
        if token not in seen:
            seen.add(token)
            out.append(token)
    return out


# Tokens that hug their opening parenthesis in canonical query text.
_CALL_STYLE = frozenset({"COUNT", "ASC", "DESC", "FILTER", "BIND"})


def spaced_form(text: str) -> str:
    """Insert spaces so every syntax token stands alone.

    Angle-bracketed segments (IRIs, mentions, placeholders) pass through
    verbatim; outside them, braces, parentheses, and trailing dots are
    split from their neighbours.  The model trains on this form, which
    a whitespace tokenizer segments losslessly.
    """
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "<":
            end = text.find(">", i + 1)
            if end < 0:
                out.append(text[i:])
                break
            out.append(text[i:end + 1])
            i = end + 1
        elif ch in "(){}":
            out.append(f" {ch} ")
            i += 1
        elif ch == "." and (i + 1 == len(text) or text[i + 1].isspace()):
            out.append(" . ")
            i += 1
        else:
            out.append(ch)
            i += 1
    return " ".join("".join(out).split())


def unspaced_form(text: str) -> str:
    """Inverse of :func:`spaced_form` for canonical query text: join
    whitespace-separated chunks back under the canonical spacing rule."""
    chunks = text.split()
    out: list[str] = []
    prev = None
    for chunk in chunks:
        if prev is None or prev == "(" or chunk == ")":
            out.append(chunk)
        elif chunk == "(" and prev in _CALL_STYLE:
            out.append(chunk)
        else:
            out.append(" " + chunk)
        prev = chunk
    return "".join(out)
