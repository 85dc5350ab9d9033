"""Dataset loading and precision/recall/F1 scoring for both sub-tasks.

Scores are exact rationals internally (so 2/3 is 2/3, not a float) and
macro-averaged over questions.  The empty-vs-empty convention is
explicit: predicting nothing for a question with no gold items is a
perfect score, predicting nothing against a non-empty gold set is zero.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .pipeline import QAResult


class FormatError(ValueError):
    def __init__(self, path, index, reason: str):
        super().__init__(f"{path}: record {index}: {reason}")
        self.path = path
        self.index = index


class IdMismatch(ValueError):
    def __init__(self, unmatched: list[str]):
        preview = ", ".join(unmatched[:5])
        super().__init__(f"{len(unmatched)} prediction id(s) missing from "
                         f"gold: {preview}")
        self.unmatched = unmatched


@dataclass
class GoldRecord:
    id: str
    question: str
    gold_query: str | None = None
    gold_entities: set[str] = field(default_factory=set)
    gold_answers: set[str] | bool | None = None


@dataclass
class Metrics:
    precision: Fraction
    recall: Fraction
    f1: Fraction
    per_question: list[tuple[str, Fraction, Fraction, Fraction]] = \
        field(default_factory=list)


def _strip_brackets(iri: str) -> str:
    iri = iri.strip()
    if iri.startswith("<") and iri.endswith(">"):
        return iri[1:-1]
    return iri


def _answers_from_field(value) -> set[str] | bool | None:
    """Accept the answer shapes that occur in the dataset family:
    results-JSON documents, {"boolean": b}, plain lists, and scalars."""
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, dict):
        if "boolean" in value:
            return bool(value["boolean"])
        bindings = value.get("results", {}).get("bindings", None)
        if bindings is None:
            return None
        answers = set()
        for row in bindings:
            for cell in row.values():
                if isinstance(cell, dict) and "value" in cell:
                    answers.add(str(cell["value"]))
                else:
                    answers.add(str(cell))
        return answers
    if isinstance(value, list):
        return {_strip_brackets(str(v)) for v in value}
    return {_strip_brackets(str(value))}


def _question_text(value) -> str:
    if isinstance(value, dict):
        return str(value.get("string", ""))
    return str(value or "")


def load_dataset(path) -> list[GoldRecord]:
    """Read a dataset file.

    Field mapping: records live in a top-level list or under
    ``questions``; ``id`` (or ``uid``) identifies a record; ``question``
    is a string or ``{"string": ...}`` (``paraphrased_question`` is the
    fallback); ``query`` is a string or ``{"sparql": ...}``;
    ``entities`` is a list of IRIs, angle brackets optional; ``answers``
    (or ``answer``) is a results-JSON document, a ``{"boolean": ...}``
    object, a list, or a scalar.  Unknown fields are ignored.
    Questions-only files simply lack the gold fields.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(path, "-", f"invalid JSON: {exc}") from None
    if isinstance(payload, dict):
        records = payload.get("questions")
        if records is None:
            raise FormatError(path, "-", "no 'questions' array")
    else:
        records = payload
    if not isinstance(records, list):
        raise FormatError(path, "-", "records must form a list")

    out = []
    for index, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise FormatError(path, index, "record is not an object")
        rec_id = rec.get("id", rec.get("uid"))
        if rec_id is None:
            raise FormatError(path, index, "missing id")
        question = _question_text(rec.get("question")) or \
            _question_text(rec.get("paraphrased_question"))
        if not question:
            raise FormatError(path, index, "missing question text")
        query = rec.get("query")
        if isinstance(query, dict):
            query = query.get("sparql")
        entities = {_strip_brackets(str(e)) for e in rec.get("entities", [])}
        answers = _answers_from_field(rec.get("answers", rec.get("answer")))
        out.append(GoldRecord(id=str(rec_id), question=question,
                              gold_query=query, gold_entities=entities,
                              gold_answers=answers))
    return out


def _normalize_set(values) -> set[str]:
    return {str(v).strip() for v in values}


def score_sets(predicted, gold) -> tuple[Fraction, Fraction, Fraction]:
    """Precision, recall, F1 of one predicted set against one gold set."""
    pred = _normalize_set(predicted)
    gold = _normalize_set(gold)
    hits = len(pred & gold)
    if pred:
        precision = Fraction(hits, len(pred))
    else:
        precision = Fraction(1) if not gold else Fraction(0)
    if gold:
        recall = Fraction(hits, len(gold))
    else:
        recall = Fraction(1) if not pred else Fraction(0)
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = Fraction(0)
    return precision, recall, f1


def _answers_as_set(answers) -> set[str]:
    if isinstance(answers, bool):
        return {"true"} if answers else {"false"}
    if answers is None:
        return set()
    return set(answers)


def _macro(per_question) -> Metrics:
    n = len(per_question)
    if n == 0:
        zero = Fraction(0)
        return Metrics(zero, zero, zero, [])
    p = sum((row[1] for row in per_question), Fraction(0)) / n
    r = sum((row[2] for row in per_question), Fraction(0)) / n
    f = sum((row[3] for row in per_question), Fraction(0)) / n
    return Metrics(p, r, f, list(per_question))


def evaluate_predictions(pred_answers: dict[str, list[str]],
                         pred_entities: dict[str, list[str]],
                         gold: list[GoldRecord]) -> tuple[Metrics, Metrics]:
    """Score prediction mappings against gold records.

    Every gold record contributes one row per task; ids present in the
    predictions but absent from gold raise IdMismatch.  A gold id with
    no prediction scores zero.
    """
    gold_ids = {g.id for g in gold}
    unmatched = sorted((set(pred_answers) | set(pred_entities)) - gold_ids)
    if unmatched:
        raise IdMismatch(unmatched)

    el_rows = []
    qa_rows = []
    for record in gold:
        if record.id in pred_entities:
            p, r, f = score_sets(pred_entities[record.id], record.gold_entities)
        else:
            p = r = f = Fraction(0)
        el_rows.append((record.id, p, r, f))
        if record.id in pred_answers:
            p, r, f = score_sets(pred_answers[record.id],
                                 _answers_as_set(record.gold_answers))
        else:
            p = r = f = Fraction(0)
        qa_rows.append((record.id, p, r, f))
    return _macro(el_rows), _macro(qa_rows)


def evaluate_run(results: list[QAResult], gold: list[GoldRecord],
                 prune_unused: bool = False) -> tuple[Metrics, Metrics]:
    """Score pipeline results directly (same math as the file-based path)."""
    pred_answers = {r.question_id: r.answer_list() for r in results}
    pred_entities = {r.question_id: r.entity_report(prune_unused)
                     for r in results}
    return evaluate_predictions(pred_answers, pred_entities, gold)


# Published leaderboard scores shown alongside a run for context.
REFERENCE_ROW = ("challenge reference", 0.7961, 0.8488)


def render_report(el: Metrics, qa: Metrics,
                  include_reference: bool = True) -> str:
    lines = []
    lines.append("Task                P       R       F1")
    lines.append(f"entity linking      {float(el.precision):.4f}  "
                 f"{float(el.recall):.4f}  {float(el.f1):.4f}")
    lines.append(f"question answering  {float(qa.precision):.4f}  "
                 f"{float(qa.recall):.4f}  {float(qa.f1):.4f}")
    lines.append("")
    lines.append("Submission           F1 (Entity Linking)  F1 (Question Answering)")
    lines.append(f"{'this run':<20} {float(el.f1):<20.4f} {float(qa.f1):.4f}")
    if include_reference:
        name, ref_el, ref_qa = REFERENCE_ROW
        lines.append(f"{name:<20} {ref_el:<20.4f} {ref_qa:.4f}")
    return "\n".join(lines) + "\n"


def report_json(el: Metrics, qa: Metrics) -> dict:
    def task(m: Metrics) -> dict:
        return {
            "precision": float(m.precision),
            "recall": float(m.recall),
            "f1": float(m.f1),
            "per_question": [
                {"id": qid, "precision": float(p), "recall": float(r),
                 "f1": float(f)}
                for qid, p, r, f in m.per_question
            ],
        }

    return {"entity_linking": task(el), "question_answering": task(qa)}
