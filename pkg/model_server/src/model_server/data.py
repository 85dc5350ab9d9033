"""Reading question/query pairs from the dataset JSON."""

import json


class DataFormatError(ValueError):
    pass


def _question_text(value) -> str:
    if isinstance(value, dict):
        return str(value.get("string", ""))
    return str(value or "")


def load_pairs(path) -> list[tuple[str, str]]:
    """(question, query) pairs from a dataset file.

    Records live in a top-level list or under ``questions``; a record
    needs a question (string or ``{"string": ...}``) and a query
    (string or ``{"sparql": ...}``).  Records without a query are
    skipped (questions-only files hold nothing to train on).
    """
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc}") from None
    records = payload.get("questions") if isinstance(payload, dict) else payload
    if not isinstance(records, list):
        raise DataFormatError(f"{path}: records must form a list")
    pairs = []
    for index, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise DataFormatError(f"{path}: record {index} is not an object")
        question = _question_text(rec.get("question")) or \
            _question_text(rec.get("paraphrased_question"))
        query = rec.get("query")
        if isinstance(query, dict):
            query = query.get("sparql")
        if not question and query:
            raise DataFormatError(f"{path}: record {index} has a query "
                                  "but no question")
        if question and query:
            pairs.append((question, str(query)))
    return pairs
