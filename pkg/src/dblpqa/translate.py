"""Question-to-logical-form translation.

Two interchangeable backends: a retrieval baseline that needs no ML
(nearest training question by string similarity, with heuristic mention
extraction), and an HTTP client for an external neural model behind the
``/translate`` contract.  Downstream stages treat both identically.
"""

import re
from dataclasses import dataclass

import requests

from .sparql import SparqlError, Term, Vocabulary, parse, serialize, term_text
from .templates import (
    ArityMismatch,
    TemplateBase,
    delexicalize,
    relexicalize,
    similarity,
)


class TranslateError(RuntimeError):
    pass


class EmptyQuestion(TranslateError):
    pass


class EmptyIndex(TranslateError):
    pass


class BackendUnavailable(TranslateError):
    pass


class MalformedServerResponse(TranslateError):
    pass


@dataclass(frozen=True)
class TranslationResult:
    logical_form: str
    alternatives: tuple[str, ...] = ()
    backend: str = "baseline"
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class IndexedQuestion:
    """One training question with its template and original entity terms."""

    question: str
    template_text: str
    mentions: tuple[str, ...]  # canonical term texts, placeholder order


def build_index(records, vocab: Vocabulary | None = None
                ) -> list[IndexedQuestion]:
    """Index training records (anything with ``question`` and
    ``gold_query`` attributes) for the baseline translator.  Records
    whose query does not parse are skipped, mirroring the base build."""
    index = []
    for record in records:
        query = getattr(record, "gold_query", None)
        if not query:
            continue
        try:
            template_ast, bindings = delexicalize(parse(query), vocab)
        except SparqlError:
            continue
        index.append(IndexedQuestion(
            question=record.question,
            template_text=serialize(template_ast),
            mentions=tuple(term_text(b) for b in bindings)))
    return index


class Translator:
    def translate(self, question: str) -> TranslationResult:
        raise NotImplementedError


_QUOTED_RE = re.compile(r"'([^']+)'|\"([^\"]+)\"")
_YEAR_RE = re.compile(r"\b[0-9]{4}\b")
_CAP_WORD_RE = re.compile(r"[A-Z][\w.'-]*")

# Sentence-leading words that look like names but are not mentions.
_QUESTION_WORDS = frozenset({
    "a", "an", "and", "are", "by", "can", "could", "did", "do", "does",
    "find", "for", "give", "has", "have", "how", "in", "is", "list", "of",
    "on", "or", "show", "tell", "the", "was", "were", "what", "when",
    "where", "which", "who", "whom", "whose", "why", "with",
})


def extract_spans(question: str) -> list[str]:
    """Candidate mention spans: quoted text, then runs of capitalized
    words, then 4-digit years; each tier in question order, deduplicated."""
    spans: list[str] = []
    seen: set[str] = set()

    def push(span: str) -> None:
        span = span.strip()
        if span and span not in seen:
            seen.add(span)
            spans.append(span)

    quoted_ranges = []
    for m in _QUOTED_RE.finditer(question):
        push(m.group(1) or m.group(2))
        quoted_ranges.append(m.span())

    def in_quotes(start: int, end: int) -> bool:
        return any(qs <= start and end <= qe for qs, qe in quoted_ranges)

    words = [(m.group(), m.start(), m.end())
             for m in re.finditer(r"\S+", question)]
    run: list[str] = []
    run_start = None
    for word, start, end in words + [("", len(question), len(question))]:
        stripped = word.strip(".,;:!?\"'")
        capitalized = (bool(_CAP_WORD_RE.fullmatch(stripped))
                       and stripped.lower() not in _QUESTION_WORDS
                       and not in_quotes(start, end))
        if capitalized:
            if not run:
                run_start = start
            run.append(stripped)
            continue
        if run:
            if not (len(run) == 1 and run_start == 0):  # skip lone leading word
                push(" ".join(run))
            run = []
    for m in _YEAR_RE.finditer(question):
        if not in_quotes(m.start(), m.end()):
            push(m.group())
    return spans


def _term_from_text(text: str) -> Term:
    if text.startswith("<") and text.endswith(">"):
        inner = text[1:-1]
        return Term.iri(inner) if inner.startswith("http") else Term.mention(inner)
    return Term.mention(text)


class BaselineTranslator(Translator):
    """Nearest-neighbour translation over the training set.

    The question most similar to the input supplies the template; slots
    are filled with spans extracted from the input, falling back to the
    neighbour's own entity terms when extraction comes up short.
    """

    backend = "baseline"

    def __init__(self, base: TemplateBase, index: list[IndexedQuestion]):
        if not index:
            raise EmptyIndex("training index must not be empty")
        self.base = base
        self.index = list(index)

    def translate(self, question: str) -> TranslationResult:
        if not question.strip():
            raise EmptyQuestion("question must not be empty")
        best = min(self.index,
                   key=lambda e: (-similarity(question, e.question),
                                  e.question))
        try:
            template_ast = parse(best.template_text)
        except SparqlError:
            return TranslationResult(best.template_text, backend=self.backend,
                                     notes=("template unparsable; passed through",))

        notes: list[str] = []
        spans = extract_spans(question)
        slots = len(best.mentions)
        terms = [Term.mention(s) for s in spans[:slots]]
        if len(terms) < slots:
            for text in best.mentions[len(terms):]:
                terms.append(_term_from_text(text))
            notes.append(f"filled {slots - len(spans[:slots])} slot(s) from "
                         "nearest training question")
        try:
            form = serialize(relexicalize(template_ast, terms))
        except ArityMismatch:
            form = best.template_text
            notes.append("arity mismatch; emitted bare template")
        return TranslationResult(form, backend=self.backend, notes=tuple(notes))


class NeuralTranslator(Translator):
    """Client for the external model server's ``/translate`` endpoint."""

    backend = "neural"

    def __init__(self, server_url: str, num_beams: int = 3,
                 timeout: float = 30.0,
                 session: requests.Session | None = None):
        self.server_url = server_url.rstrip("/")
        self.num_beams = num_beams
        self.timeout = timeout
        self.session = session or requests.Session()

    def translate(self, question: str) -> TranslationResult:
        if not question.strip():
            raise EmptyQuestion("question must not be empty")
        try:
            response = self.session.post(
                f"{self.server_url}/translate",
                json={"question": question, "num_beams": self.num_beams},
                timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"model server unreachable: {exc}") from None
        if response.status_code != 200:
            raise BackendUnavailable(
                f"model server returned HTTP {response.status_code}")
        try:
            payload = response.json()
            logical_form = payload["logical_form"]
            beams = payload.get("beams", [])
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedServerResponse(f"bad /translate response: {exc}") from None
        if not isinstance(logical_form, str) or not logical_form:
            raise MalformedServerResponse("logical_form must be a non-empty string")
        if not isinstance(beams, list) or any(not isinstance(b, str) for b in beams):
            raise MalformedServerResponse("beams must be a list of strings")
        alternatives = []
        for beam in beams:
            if beam != logical_form and beam not in alternatives:
                alternatives.append(beam)
        return TranslationResult(logical_form, tuple(alternatives), self.backend)
