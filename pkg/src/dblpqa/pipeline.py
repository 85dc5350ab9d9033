"""Per-question orchestration of the four answering steps.

For each question: translate to a logical form, retrieve the closest
templates for its delexicalized text, link the mentions, then fill and
execute candidate queries in a fixed order, adopting the first one that
returns an answer.  Every attempt is recorded so a failed question
explains itself.
"""

import itertools
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .endpoint import Graph, ResultSet, evaluate_local, execute_remote
from .linking import (
    DblpLinker,
    EntityCandidate,
    LinkingError,
    Mention,
    classify_mention_type,
    extract_mentions,
)
from .sparql import (
    Aggregate,
    QueryAst,
    SparqlError,
    Term,
    Vocabulary,
    default_vocabulary,
    iter_triples,
    parse,
    serialize,
)
from .templates import (
    ArityMismatch,
    Template,
    TemplateBase,
    delexicalize,
    relexicalize,
    top_k,
)
from .translate import TranslateError, Translator

logger = logging.getLogger(__name__)


class NoViableCandidate(RuntimeError):
    pass


class PipelineConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    k_templates: int = 3
    max_combinations_per_template: int = 10
    answer_mode: str = "local"  # local | remote
    endpoint_url: str | None = None
    graph_path: str | None = None
    prune_unused_entities: bool = False
    translator_backend: str = "baseline"  # baseline | neural

    def validate(self) -> None:
        if self.k_templates < 1:
            raise PipelineConfigError("k_templates must be >= 1")
        if self.max_combinations_per_template < 1:
            raise PipelineConfigError("max_combinations_per_template must be >= 1")
        if self.answer_mode == "remote" and not self.endpoint_url:
            raise PipelineConfigError("remote mode requires endpoint_url")
        if self.answer_mode not in ("local", "remote"):
            raise PipelineConfigError(f"unknown answer_mode {self.answer_mode!r}")


@dataclass
class QAResult:
    question_id: str
    question: str
    logical_form: str = ""
    # mention surface (or pre-resolved IRI) -> ranked EntityCandidate list
    linked_entities: dict[str, list[EntityCandidate]] = field(default_factory=dict)
    tried_queries: list[tuple[str, str]] = field(default_factory=list)
    chosen_query: str | None = None
    answers: set[str] | bool | None = None
    status: str = "no_answer"  # answered | no_answer | error
    trace: list[str] = field(default_factory=list)

    def answer_list(self) -> list[str]:
        if isinstance(self.answers, bool):
            return ["true" if self.answers else "false"]
        if self.answers is None:
            return []
        return sorted(self.answers)

    def entity_report(self, prune_unused: bool = False) -> list[str]:
        """IRIs this question links to.

        Default keeps one candidate per mention (the one used by the
        chosen query when there is one, else the top-ranked candidate)
        even when the mention never made it into a working query;
        ``prune_unused`` keeps only IRIs that appear in the chosen query.
        """
        chosen = self.chosen_query or ""
        report: list[str] = []
        for candidates in self.linked_entities.values():
            used = next((c for c in candidates if f"<{c.iri}>" in chosen), None)
            if prune_unused:
                pick = used.iri if used else None
            else:
                pick = used.iri if used else (
                    candidates[0].iri if candidates else None)
            if pick and pick not in report:
                report.append(pick)
        return report


_BRACKETED_RE = re.compile(r"<([^<>]+)>")
_PLACEHOLDER_INNER_RE = re.compile(r"entity_[1-9][0-9]*")


def mention_surfaces_from_text(text: str) -> list[str]:
    """Angle-bracketed mention spans in raw (possibly unparsable) text."""
    seen = set()
    out = []
    for m in _BRACKETED_RE.finditer(text):
        inner = m.group(1)
        if inner.startswith("http") or _PLACEHOLDER_INNER_RE.fullmatch(inner):
            continue
        if inner.strip() and inner not in seen:
            seen.add(inner)
            out.append(inner)
    return out


def delexicalized_probe_text(text: str) -> str:
    """Replace bracketed entity spans with numbered placeholders in raw
    text, so template retrieval still works when parsing fails."""
    assignment: dict[str, int] = {}

    def swap(m: re.Match) -> str:
        inner = m.group(1)
        if inner.startswith("http") or _PLACEHOLDER_INNER_RE.fullmatch(inner):
            return m.group(0)
        if inner not in assignment:
            assignment[inner] = len(assignment) + 1
        return f"<entity_{assignment[inner]}>"

    return _BRACKETED_RE.sub(swap, text)


def enumerate_candidates(templates: list[Template],
                         links: dict[str, list[str]],
                         cfg: PipelineConfig) -> list[str]:
    """Candidate query texts in execution order.

    Templates iterate by rank; within a template, entity combinations
    follow the lexicographic product of per-mention candidate ranks, so
    (1,1) precedes (1,2) precedes (2,1).  Mentions map to placeholders
    in order of first appearance.  Combinations are capped per template;
    templates needing more entities than are linked are skipped, as are
    templates whose required mentions have no candidates.
    """
    if not templates:
        raise NoViableCandidate("no templates to fill")
    ordered_mentions = list(links)
    queries: list[str] = []
    filled_any = False
    for template in templates:
        slots = template.placeholder_count
        if slots > len(ordered_mentions):
            continue
        used = ordered_mentions[:slots]
        if any(not links[m] for m in used):
            continue
        try:
            template_ast = parse(template.canonical_text)
        except SparqlError:
            continue
        filled_any = True
        pools = [links[m] for m in used]
        for combo in itertools.islice(itertools.product(*pools),
                                      cfg.max_combinations_per_template):
            terms = [Term.iri(iri) for iri in combo]
            queries.append(serialize(relexicalize(template_ast, terms)))
    if not filled_any:
        raise NoViableCandidate("every template/combination pair was skipped")
    return queries


def is_answer(result: ResultSet, query_ast: QueryAst) -> bool:
    """Whether an execution result counts as an answer.

    A boolean is always an answer; a COUNT answers only when some count
    is positive; a plain SELECT answers when it has rows.
    """
    if result.kind == "boolean":
        return True
    aggregates = [p for p in query_ast.projection if isinstance(p, Aggregate)]
    if aggregates:
        for row in result.rows:
            for agg in aggregates:
                value = row.get(agg.alias.value)
                try:
                    if value is not None and int(value) > 0:
                        return True
                except ValueError:
                    return True  # non-numeric count cell; treat as answer
        return False
    return bool(result.rows)


def _context_slot(ast: QueryAst, term: Term):
    for pattern in iter_triples(ast.where):
        if pattern.object == term:
            return pattern, "object"
        if pattern.subject == term:
            return pattern, "subject"
    return None, None


class Pipeline:
    def __init__(self, base: TemplateBase, translator: Translator,
                 linker: DblpLinker, config: PipelineConfig,
                 graph: Graph | None = None,
                 vocab: Vocabulary | None = None):
        config.validate()
        if config.answer_mode == "local" and graph is None:
            raise PipelineConfigError("local mode requires a graph")
        self.base = base
        self.translator = translator
        self.linker = linker
        self.config = config
        self.graph = graph
        self.vocab = vocab or default_vocabulary()

    # -- single question -------------------------------------------------

    def answer(self, question: str, question_id: str = "") -> QAResult:
        result = QAResult(question_id=question_id, question=question)
        try:
            translation = self.translator.translate(question)
        except TranslateError as exc:
            result.status = "error"
            result.trace.append(f"step I failed: {exc}")
            return result
        result.logical_form = translation.logical_form
        result.trace.append(f"step I ({translation.backend}): "
                            f"{translation.logical_form}")
        for note in translation.notes:
            result.trace.append(f"step I note: {note}")

        forms = [translation.logical_form, *translation.alternatives]
        for index, form in enumerate(forms):
            if index:
                result.trace.append(f"falling back to alternative form {index}")
            if self._try_form(form, result):
                return result
        return result

    def _try_form(self, form: str, result: QAResult) -> bool:
        probe, slot_keys, links = self._analyze_form(form, result)
        try:
            templates = top_k(self.base, probe, self.config.k_templates)
        except ValueError as exc:
            result.trace.append(f"step III failed: {exc}")
            return False
        result.trace.append("step III: retrieved " + "; ".join(
            t.canonical_text for t in templates))

        result.linked_entities.update(links)
        link_iris = {key: [c.iri for c in links[key]] for key in slot_keys}
        try:
            candidates = enumerate_candidates(list(templates), link_iris,
                                              self.config)
        except NoViableCandidate as exc:
            result.trace.append(f"step IV: {exc}")
            return False
        return self._execute_candidates(candidates, result)

    def _analyze_form(self, form: str, result: QAResult):
        """Break one logical form into a retrieval probe plus slot links.

        Parsable forms delexicalize structurally; their entity terms (in
        placeholder order) become linking work for mentions and fixed
        single candidates for IRIs already resolved by the translator.
        Unparsable forms fall back to regex extraction over the raw
        string, and template retrieval corrects the structure.
        """
        links: dict[str, list[EntityCandidate]] = {}
        try:
            ast = parse(form)
        except SparqlError as exc:
            result.trace.append(f"logical form unparsable ({exc}); "
                                "matching on raw text")
            surfaces = mention_surfaces_from_text(form)
            for surface in surfaces:
                links[surface] = self._link_surface(Mention(surface), result)
            return delexicalized_probe_text(form), surfaces, links

        template_ast, bindings = delexicalize(ast, self.vocab)
        contexts = {m.surface: m for m in extract_mentions(ast)}
        slot_keys: list[str] = []
        for term in bindings:
            slot_keys.append(term.value)
            if term.kind == "mention":
                mention = contexts.get(term.value) or Mention(term.value)
                links[term.value] = self._link_surface(mention, result)
            else:
                pattern, slot = _context_slot(ast, term)
                entity_type = "author"
                if pattern is not None:
                    entity_type = classify_mention_type(
                        Mention(term.value, pattern, slot))
                links[term.value] = [EntityCandidate(
                    iri=term.value, label=term.value, rank=1,
                    entity_type=entity_type)]
                result.trace.append(
                    f"step II: {term.value} already resolved")
        return serialize(template_ast), slot_keys, links

    def _link_surface(self, mention: Mention,
                      result: QAResult) -> list[EntityCandidate]:
        try:
            candidates = self.linker.link(mention)
        except LinkingError as exc:
            result.trace.append(f"step II: {mention.surface!r} -> {exc}")
            return []
        result.trace.append(f"step II: {mention.surface!r} -> " +
                            ", ".join(c.iri for c in candidates))
        return candidates

    def _execute_candidates(self, candidates: list[str],
                            result: QAResult) -> bool:
        fallback: tuple[int, str, ResultSet, QueryAst] | None = None
        for query in candidates:
            try:
                query_ast = parse(query)
                res = self._execute(query, query_ast)
            except Exception as exc:  # noqa: BLE001 - recorded, never fatal
                result.tried_queries.append((query, f"error: {exc}"))
                continue
            if is_answer(res, query_ast):
                result.tried_queries.append((query, "accepted"))
                self._adopt(result, query, res)
                return True
            result.tried_queries.append((query, "rejected: no answer"))
            if fallback is None:
                fallback = (len(result.tried_queries) - 1, query, res, query_ast)
        if fallback is not None:
            # Nothing was acceptable; surface the first executed result so
            # genuinely-zero counts still answer.
            index, query, res, _ = fallback
            result.tried_queries[index] = (query, "accepted")
            result.trace.append("step IV: no candidate accepted; adopting "
                                "first executed result")
            self._adopt(result, query, res)
            return True
        return False

    def _execute(self, query: str, query_ast: QueryAst) -> ResultSet:
        if self.config.answer_mode == "local":
            return evaluate_local(query_ast, self.graph)
        return execute_remote(serialize(query_ast, standard=True),
                              self.config.endpoint_url)

    def _adopt(self, result: QAResult, query: str, res: ResultSet) -> None:
        result.chosen_query = query
        result.status = "answered"
        if res.kind == "boolean":
            result.answers = res.truth
        else:
            result.answers = res.value_set()
        result.trace.append(f"step IV: adopted {query}")

    # -- batch -------------------------------------------------------------

    def run_batch(self, questions: list[tuple[str, str]],
                  jobs: int = 1) -> list[QAResult]:
        """Answer `(id, question)` pairs, preserving order.

        Per-question failures become status entries; they never abort
        the batch.
        """
        def safe_answer(item: tuple[str, str]) -> QAResult:
            qid, question = item
            try:
                return self.answer(question, qid)
            except Exception as exc:  # noqa: BLE001 - isolation per question
                logger.exception("question %s failed", qid)
                failed = QAResult(question_id=qid, question=question,
                                  status="error")
                failed.trace.append(f"internal error: {exc}")
                return failed

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(safe_answer, questions))
        return [safe_answer(item) for item in questions]


def write_reports(results: list[QAResult], answers_path, entities_path,
                  prune_unused: bool = False) -> None:
    """The two submission files: id -> answer list, id -> IRI list."""
    answers = {r.question_id: r.answer_list() for r in results}
    entities = {r.question_id: r.entity_report(prune_unused) for r in results}
    for path, payload in ((answers_path, answers), (entities_path, entities)):
        tmp = str(path) + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, ensure_ascii=False)
            fh.write("\n")
        os.replace(tmp, path)
