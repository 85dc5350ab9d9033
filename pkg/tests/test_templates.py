import random

import pytest
from hypothesis import given, strategies as st

from dblpqa.sparql import Term, parse, serialize
from dblpqa.templates import (
    ArityMismatch,
    EmptyBase,
    build_base,
    delexicalize,
    edit_distance,
    load_base,
    relexicalize,
    save_base,
    similarity,
    top_k,
)
from generators import random_query
from oracles import levenshtein_full_matrix, similarity_oracle

AUTHORED_BY = "https://dblp.org/rdf/schema#authoredBy"

COUNT_QUERY = (
    "SELECT COUNT(DISTINCT ?answer) AS ?count WHERE { "
    f"?answer <{AUTHORED_BY}> <Ruijie Wang> . "
    f"?answer <{AUTHORED_BY}> <Luca Rossetto> . }}"
)
COUNT_TEMPLATE = (
    "SELECT COUNT(DISTINCT ?answer) AS ?count WHERE { "
    f"?answer <{AUTHORED_BY}> <entity_1> . "
    f"?answer <{AUTHORED_BY}> <entity_2> . }}"
)


class TestDelexicalize:
    def test_worked_example(self):
        template, bindings = delexicalize(parse(COUNT_QUERY))
        assert serialize(template) == COUNT_TEMPLATE
        assert bindings == [Term.mention("Ruijie Wang"),
                            Term.mention("Luca Rossetto")]

    def test_nothing_to_replace(self):
        q = parse(f"SELECT ?x WHERE {{ ?x <{AUTHORED_BY}> ?y . }}")
        template, bindings = delexicalize(q)
        assert template == q
        assert bindings == []

    def test_relation_and_schema_iris_kept(self):
        q = parse(
            "SELECT ?x WHERE { "
            f"?x <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> "
            "<https://dblp.org/rdf/schema#Publication> . "
            f"?x <{AUTHORED_BY}> <https://dblp.org/pid/11/1111> . }}")
        template, bindings = delexicalize(q)
        assert bindings == [Term.iri("https://dblp.org/pid/11/1111")]
        assert "<https://dblp.org/rdf/schema#Publication>" in serialize(template)

    def test_repeated_term_shares_placeholder(self):
        q = parse(
            "SELECT ?x ?y WHERE { "
            f"?x <{AUTHORED_BY}> <Jane Doe> . ?y <{AUTHORED_BY}> <Jane Doe> . }}")
        template, bindings = delexicalize(q)
        assert len(bindings) == 1
        assert serialize(template).count("<entity_1>") == 2

    def test_entity_iri_bindings(self):
        final = COUNT_QUERY.replace("<Ruijie Wang>",
                                    "<https://dblp.org/pid/57/5759-3>") \
                           .replace("<Luca Rossetto>",
                                    "<https://dblp.org/pid/156/1623>")
        template, bindings = delexicalize(parse(final))
        assert serialize(template) == COUNT_TEMPLATE
        assert [b.kind for b in bindings] == ["iri", "iri"]

    def test_inverse_on_500_random_queries(self):
        rng = random.Random(7051)
        for i in range(500):
            q = random_query(rng, allow_placeholders=False)
            template, bindings = delexicalize(q)
            assert relexicalize(template, bindings) == q, f"query #{i}"
            indices = sorted(
                int(tok[len("<entity_"):-1])
                for tok in serialize(template).split()
                if tok.startswith("<entity_"))
            assert sorted(set(indices)) == list(range(1, len(bindings) + 1))


class TestRelexicalize:
    def test_fills_final_query(self):
        template = parse(COUNT_TEMPLATE)
        final = relexicalize(template, [
            Term.iri("https://dblp.org/pid/57/5759-3"),
            Term.iri("https://dblp.org/pid/156/1623")])
        assert serialize(final) == (
            "SELECT COUNT(DISTINCT ?answer) AS ?count WHERE { "
            "?answer <https://dblp.org/rdf/schema#authoredBy> "
            "<https://dblp.org/pid/57/5759-3> . "
            "?answer <https://dblp.org/rdf/schema#authoredBy> "
            "<https://dblp.org/pid/156/1623> . }")

    def test_zero_placeholders(self):
        q = parse(f"SELECT ?x WHERE {{ ?x <{AUTHORED_BY}> ?y . }}")
        assert relexicalize(q, []) == q

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatch):
            relexicalize(parse(COUNT_TEMPLATE), [Term.mention("only one")])

    def test_extra_terms_ignored(self):
        template = parse(f"ASK {{ ?p <{AUTHORED_BY}> <entity_1> . }}")
        filled = relexicalize(template, [Term.mention("A"), Term.mention("B")])
        assert filled.where[0].object == Term.mention("A")


class TestBuildBase:
    def test_dedup_by_entity(self):
        q2 = COUNT_QUERY.replace("Ruijie Wang", "Someone Else")
        base = build_base([("q1", COUNT_QUERY), ("q2", q2)])
        assert len(base) == 1
        assert base.templates[0].frequency == 2
        assert base.templates[0].source_ids == ("q1", "q2")

    def test_empty_input(self):
        base = build_base([])
        assert len(base) == 0

    def test_parse_failures_collected(self):
        base = build_base([("good", COUNT_QUERY),
                           ("bad", "SELECT ?x WHERE { ?x }")])
        assert len(base) == 1
        assert base.skipped and base.skipped[0][0] == "bad"

    def test_size_matches_hash_set_oracle(self):
        rng = random.Random(99)
        queries = [(f"q{i}", serialize(random_query(rng, allow_placeholders=False)))
                   for i in range(300)]
        base = build_base(queries)
        distinct = {serialize(delexicalize(parse(text))[0])
                    for _, text in queries}
        assert len(base) == len(distinct)
        assert sum(t.frequency for t in base.templates) == len(queries)

    def test_save_load_round_trip(self, tmp_path):
        base = build_base([("q1", COUNT_QUERY)])
        path = tmp_path / "base.jsonl"
        save_base(base, path)
        again = load_base(path)
        assert again.templates == base.templates

    def test_deterministic_files(self, tmp_path):
        rng = random.Random(4)
        queries = [(f"q{i}", serialize(random_query(rng, allow_placeholders=False)))
                   for i in range(50)]
        save_base(build_base(queries), tmp_path / "a.jsonl")
        save_base(build_base(queries), tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == \
            (tmp_path / "b.jsonl").read_bytes()


class TestSimilarity:
    def test_identity(self):
        for s in ("", "abc", COUNT_QUERY):
            assert similarity(s, s) == 1.0

    def test_hand_value(self):
        assert abs(similarity("abc", "axc") - (1 - 1 / 3)) < 1e-12

    def test_empty_vs_nonempty(self):
        assert similarity("", "abc") == 0.0
        assert similarity("abc", "") == 0.0

    def test_against_oracle(self):
        # the acceptance suite runs the full 1,000-pair comparison
        rng = random.Random(123456)
        alphabet = "ab SELECT{}?<>x."
        for _ in range(300):
            a = "".join(rng.choice(alphabet)
                        for _ in range(rng.randint(0, 200)))
            b = "".join(rng.choice(alphabet)
                        for _ in range(rng.randint(0, 200)))
            assert edit_distance(a, b) == levenshtein_full_matrix(a, b)
            assert abs(similarity(a, b) - similarity_oracle(a, b)) <= 1e-12

    @given(st.text(max_size=60), st.text(max_size=60))
    def test_symmetric_and_bounded(self, a, b):
        s = similarity(a, b)
        assert 0.0 <= s <= 1.0
        assert s == similarity(b, a)
        assert (s == 1.0) == (a == b)


class TestTopK:
    def _base(self, texts_freqs):
        from dblpqa.templates import Template, TemplateBase
        return TemplateBase(templates=[
            Template(text, 0, freq) for text, freq in texts_freqs])

    def test_exact_probe_ranks_first(self):
        base = build_base([("q1", COUNT_QUERY),
                           ("q2", f"SELECT ?x WHERE {{ ?x <{AUTHORED_BY}> ?y . }}")])
        ranked = top_k(base, COUNT_TEMPLATE, 3)
        assert ranked[0].canonical_text == COUNT_TEMPLATE
        assert similarity(COUNT_TEMPLATE, ranked[0].canonical_text) == 1.0

    def test_k_larger_than_base(self):
        base = self._base([("aaa", 1), ("bbb", 2)])
        assert len(top_k(base, "aaa", 10)) == 2

    def test_tie_breaks_frequency_then_text(self):
        base = self._base([("ab", 1), ("ba", 5), ("aa", 5)])
        ranked = top_k(base, "abba", 3)
        sims = [similarity("abba", t.canonical_text) for t in ranked]
        assert sims == sorted(sims, reverse=True)
        equal = [t for t in ranked if similarity("abba", t.canonical_text) == sims[0]]
        freqs = [t.frequency for t in equal]
        assert freqs == sorted(freqs, reverse=True)

    def test_matches_brute_force_oracle(self):
        rng = random.Random(31337)
        texts = {serialize(random_query(rng, allow_placeholders=False))
                 for _ in range(120)}
        texts = sorted(texts)[:50]
        base = self._base([(t, rng.randint(1, 5)) for t in texts])
        probe = serialize(delexicalize(random_query(
            rng, allow_placeholders=False))[0])
        expected = sorted(
            base.templates,
            key=lambda t: (-similarity_oracle(probe, t.canonical_text),
                           -t.frequency, t.canonical_text))
        assert top_k(base, probe, 50) == expected

    def test_retrieval_deterministic_under_storage_order(self):
        rng = random.Random(8)
        texts = sorted({serialize(random_query(rng, allow_placeholders=False))
                        for _ in range(40)})
        base_a = self._base([(t, 1) for t in texts])
        base_b = self._base([(t, 1) for t in reversed(texts)])
        probe = texts[0][:40]
        assert top_k(base_a, probe, 5) == top_k(base_b, probe, 5)

    def test_empty_base(self):
        from dblpqa.templates import TemplateBase
        with pytest.raises(EmptyBase):
            top_k(TemplateBase(), "x", 3)
