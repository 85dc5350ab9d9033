import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dblpqa.evaluation import (
    FormatError,
    GoldRecord,
    IdMismatch,
    Metrics,
    evaluate_predictions,
    evaluate_run,
    load_dataset,
    render_report,
    report_json,
    score_sets,
)
from dblpqa.pipeline import QAResult


class TestLoadDataset:
    def test_corpus_train_file(self, corpus_paths):
        records = load_dataset(corpus_paths.train)
        assert len(records) == 21
        by_id = {r.id: r for r in records}
        tq00 = by_id["TQ00"]
        assert tq00.question.startswith("how many research papers")
        assert tq00.gold_query.startswith("SELECT COUNT")
        assert "https://dblp.org/pid/57/5759-3" in tq00.gold_entities
        assert tq00.gold_answers == {"1"}

    def test_questions_only_records(self, corpus_paths):
        records = load_dataset(corpus_paths.heldout)
        assert len(records) == 20
        assert all(r.gold_query is None for r in records)
        assert all(r.gold_entities == set() for r in records)
        assert all(r.gold_answers is None for r in records)

    def test_boolean_and_results_json_answers(self, corpus_paths):
        by_id = {r.id: r for r in load_dataset(corpus_paths.gold)}
        assert by_id["TQ05"].gold_answers is True
        assert by_id["TQ06"].gold_answers is False
        assert by_id["TQ19"].gold_answers == {"2021"}

    def test_angle_brackets_stripped(self, corpus_paths):
        records = load_dataset(corpus_paths.gold)
        for record in records:
            for iri in record.gold_entities:
                assert not iri.startswith("<")

    def test_truncated_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"questions": [{"id": "x"')
        with pytest.raises(FormatError):
            load_dataset(path)

    def test_record_errors_carry_index(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"questions": [
            {"id": "ok", "question": "fine"}, {"question": "no id"}]}))
        with pytest.raises(FormatError) as exc:
            load_dataset(path)
        assert exc.value.index == 1

    def test_unknown_fields_ignored(self, tmp_path):
        path = tmp_path / "extra.json"
        path.write_text(json.dumps([{
            "id": "q", "question": "text", "temporal": False,
            "query_type": "COUNT", "whatever": [1, 2]}]))
        (record,) = load_dataset(path)
        assert record.id == "q"


class TestScoreSets:
    def test_identity(self):
        assert score_sets({"a", "b"}, {"a", "b"}) == (1, 1, 1)

    def test_partial(self):
        p, r, f1 = score_sets({"a"}, {"a", "b"})
        assert (p, r, f1) == (Fraction(1), Fraction(1, 2), Fraction(2, 3))

    def test_empty_conventions(self):
        assert score_sets(set(), set()) == (1, 1, 1)
        assert score_sets(set(), {"a"}) == (0, 0, 0)
        assert score_sets({"a"}, set()) == (0, 0, 0)

    def test_disjoint(self):
        assert score_sets({"a"}, {"b"}) == (0, 0, 0)

    @given(st.sets(st.text(max_size=5), max_size=8),
           st.sets(st.text(max_size=5), max_size=8))
    def test_symmetry_swaps_p_and_r(self, pred, gold):
        p1, r1, f1 = score_sets(pred, gold)
        p2, r2, f2 = score_sets(gold, pred)
        assert (p1, r1) == (r2, p2)
        assert f1 == f2
        assert 0 <= f1 <= 1
        if p1 + r1 > 0:
            assert f1 == 2 * p1 * r1 / (p1 + r1)


class TestEvaluateRun:
    def _gold(self):
        return [
            GoldRecord("q1", "?", gold_entities={"e1"}, gold_answers={"a1"}),
            GoldRecord("q2", "?", gold_entities={"e2", "e3"},
                       gold_answers=True),
        ]

    def test_perfect_run(self):
        results = [
            QAResult("q1", "?", answers={"a1"}, status="answered"),
            QAResult("q2", "?", answers=True, status="answered"),
        ]
        pred_entities = {"q1": ["e1"], "q2": ["e2", "e3"]}
        pred_answers = {r.question_id: r.answer_list() for r in results}
        el, qa = evaluate_predictions(pred_answers, pred_entities, self._gold())
        assert el.f1 == 1 and qa.f1 == 1

    def test_half_right_macro_average(self):
        gold = [GoldRecord(f"q{i}", "?", gold_answers={"x"}) for i in range(4)]
        pred_answers = {"q0": ["x"], "q1": ["x"], "q2": [], "q3": []}
        pred_entities = {f"q{i}": [] for i in range(4)}
        el, qa = evaluate_predictions(pred_answers, pred_entities, gold)
        assert qa.f1 == Fraction(1, 2)
        assert el.f1 == 1  # empty gold entities, empty predictions

    def test_missing_prediction_scores_zero(self):
        gold = self._gold()
        el, qa = evaluate_predictions({"q1": ["a1"]}, {"q1": ["e1"]}, gold)
        assert qa.per_question[1][3] == 0
        assert qa.f1 == Fraction(1, 2)

    def test_id_mismatch(self):
        with pytest.raises(IdMismatch):
            evaluate_predictions({"ghost": ["a"]}, {}, self._gold())

    def test_boolean_compared_as_singleton(self):
        gold = [GoldRecord("q", "?", gold_answers=False)]
        el, qa = evaluate_predictions({"q": ["false"]}, {"q": []}, gold)
        assert qa.f1 == 1

    def test_evaluate_run_wraps_results(self):
        results = [QAResult("q1", "?", answers={"a1"}, status="answered"),
                   QAResult("q2", "?", answers=True, status="answered")]
        el, qa = evaluate_run(results, self._gold())
        assert qa.f1 == 1

    def test_adding_correct_answer_never_lowers_metrics(self):
        rng = random.Random(77)
        universe = [f"v{i}" for i in range(6)]
        gold = []
        pred_answers = {}
        pred_entities = {}
        for i in range(12):
            g = set(rng.sample(universe, rng.randint(0, 3)))
            p = set(rng.sample(universe, rng.randint(0, 3)))
            gold.append(GoldRecord(f"q{i}", "?", gold_answers=g))
            pred_answers[f"q{i}"] = sorted(p)
            pred_entities[f"q{i}"] = []
        _, before = evaluate_predictions(pred_answers, pred_entities, gold)
        gold.append(GoldRecord("new", "?", gold_answers={"v0"}))
        pred_answers["new"] = ["v0"]
        pred_entities["new"] = []
        _, after = evaluate_predictions(pred_answers, pred_entities, gold)
        assert after.f1 >= before.f1
        assert after.precision >= before.precision
        assert after.recall >= before.recall

    def test_macro_average_within_per_question_bounds(self):
        gold = [GoldRecord(f"q{i}", "?", gold_answers={"x"}) for i in range(3)]
        pred_answers = {"q0": ["x"], "q1": ["x", "y"], "q2": []}
        _, qa = evaluate_predictions(pred_answers,
                                     {f"q{i}": [] for i in range(3)}, gold)
        per = [row[3] for row in qa.per_question]
        assert min(per) <= qa.f1 <= max(per)


class TestRenderReport:
    def _metrics(self, f1: float) -> Metrics:
        value = Fraction(f1).limit_denominator()
        return Metrics(value, value, value, [("q1", value, value, value)])

    def test_perfect_line(self):
        text = render_report(self._metrics(1), self._metrics(1))
        assert "question answering  1.0000  1.0000  1.0000" in text
        assert "entity linking      1.0000  1.0000  1.0000" in text

    def test_reference_row_present(self):
        text = render_report(self._metrics(1), self._metrics(1))
        assert "0.7961" in text and "0.8488" in text
        assert "F1 (Entity Linking)" in text
        assert "F1 (Question Answering)" in text

    def test_json_report_round_trip(self, tmp_path):
        payload = report_json(self._metrics(0.5), self._metrics(0.25))
        path = tmp_path / "report.json"
        path.write_text(json.dumps(payload))
        assert json.loads(path.read_text()) == payload
