import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from dblpqa.sparql import parse
from dblpqa.templates import build_base
from dblpqa.translate import (
    BackendUnavailable,
    BaselineTranslator,
    EmptyIndex,
    EmptyQuestion,
    IndexedQuestion,
    MalformedServerResponse,
    NeuralTranslator,
    extract_spans,
)

AUTHORED_BY = "https://dblp.org/rdf/schema#authoredBy"

COUNT_QUERY = (
    "SELECT COUNT(DISTINCT ?answer) AS ?count WHERE { "
    f"?answer <{AUTHORED_BY}> <https://dblp.org/pid/57/5759-3> . "
    f"?answer <{AUTHORED_BY}> <https://dblp.org/pid/156/1623> . }}"
)
COUNT_TEMPLATE = (
    "SELECT COUNT(DISTINCT ?answer) AS ?count WHERE { "
    f"?answer <{AUTHORED_BY}> <entity_1> . "
    f"?answer <{AUTHORED_BY}> <entity_2> . }}"
)
ASK_TEMPLATE = f"ASK {{ <entity_1> <{AUTHORED_BY}> <entity_2> . }}"

QUESTION = "how many research papers did Ruijie Wang and Luca Rossetto write together"


def _index():
    return [
        IndexedQuestion(QUESTION, COUNT_TEMPLATE,
                        ("<https://dblp.org/pid/57/5759-3>",
                         "<https://dblp.org/pid/156/1623>")),
        IndexedQuestion("did 'Some Paper' get written by 'Jane Doe'",
                        ASK_TEMPLATE, ("<Some Paper>", "<Jane Doe>")),
        IndexedQuestion(
            "list all papers written by Lena Fischer",
            "SELECT DISTINCT ?answer WHERE { ?answer "
            f"<{AUTHORED_BY}> <entity_1> . }}",
            ("<https://dblp.org/pid/55/5555>",)),
    ]


def _translator():
    base = build_base([("q1", COUNT_QUERY)])
    return BaselineTranslator(base, _index())


class TestExtractSpans:
    def test_capitalized_runs(self):
        spans = extract_spans(QUESTION)
        assert spans == ["Ruijie Wang", "Luca Rossetto"]

    def test_quoted_spans_come_first(self):
        spans = extract_spans(
            "did 'Alice Smith' write 'Some Paper' with Bob Jones")
        assert spans == ["Alice Smith", "Some Paper", "Bob Jones"]

    def test_year_tokens_last(self):
        spans = extract_spans("which papers did Lena Fischer publish in 2020")
        assert spans == ["Lena Fischer", "2020"]

    def test_question_words_ignored(self):
        assert extract_spans("How many papers are there") == []

    def test_lone_leading_capital_skipped(self):
        assert extract_spans("Alice wrote papers") == []
        assert extract_spans("Alice Smith wrote papers") == ["Alice Smith"]


class TestBaseline:
    def test_identical_training_question(self):
        result = _translator().translate(QUESTION)
        assert result.backend == "baseline"
        expected = COUNT_TEMPLATE \
            .replace("<entity_1>", "<Ruijie Wang>") \
            .replace("<entity_2>", "<Luca Rossetto>")
        assert result.logical_form == expected
        parse(result.logical_form)

    def test_quoted_two_slot_ask(self):
        result = _translator().translate("did 'Alice Smith' write 'Some Paper'")
        assert result.logical_form == ASK_TEMPLATE \
            .replace("<entity_1>", "<Alice Smith>") \
            .replace("<entity_2>", "<Some Paper>")

    def test_fallback_to_training_mentions(self):
        result = _translator().translate(
            "list all papers written by that same author")
        assert result.logical_form == (
            "SELECT DISTINCT ?answer WHERE { ?answer "
            f"<{AUTHORED_BY}> <https://dblp.org/pid/55/5555> . }}")
        assert any("filled 1 slot" in note for note in result.notes)

    def test_empty_question(self):
        with pytest.raises(EmptyQuestion):
            _translator().translate("   ")

    def test_empty_index(self):
        with pytest.raises(EmptyIndex):
            BaselineTranslator(build_base([("q1", COUNT_QUERY)]), [])

    def test_deterministic(self):
        t = _translator()
        assert t.translate(QUESTION) == t.translate(QUESTION)


class _TranslateHandler(BaseHTTPRequestHandler):
    payload: dict | None = None
    status = 200

    def log_message(self, *args):
        pass

    def do_POST(self):
        if self.path != "/translate":
            self.send_response(404)
            self.end_headers()
            return
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        if self.status != 200:
            self.send_response(self.status)
            self.end_headers()
            return
        body = json.dumps(self.payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture()
def translate_server():
    server = HTTPServer(("127.0.0.1", 0), _TranslateHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _TranslateHandler.status = 200
    yield server
    server.shutdown()
    server.server_close()


def _url(server):
    return f"http://127.0.0.1:{server.server_address[1]}"


class TestNeuralClient:
    def test_maps_logical_form_and_beams(self, translate_server):
        form = COUNT_TEMPLATE.replace("<entity_1>", "<Ruijie Wang>") \
                             .replace("<entity_2>", "<Luca Rossetto>")
        _TranslateHandler.payload = {
            "logical_form": form,
            "beams": [form, form + " LIMIT 1", form + " LIMIT 2"]}
        result = NeuralTranslator(_url(translate_server)).translate(QUESTION)
        assert result.backend == "neural"
        assert result.logical_form == form
        assert len(result.alternatives) == 2
        assert form not in result.alternatives

    def test_server_error(self, translate_server):
        _TranslateHandler.status = 500
        with pytest.raises(BackendUnavailable):
            NeuralTranslator(_url(translate_server)).translate(QUESTION)

    def test_unreachable_server(self):
        client = NeuralTranslator("http://127.0.0.1:1", timeout=0.2)
        with pytest.raises(BackendUnavailable):
            client.translate(QUESTION)

    def test_malformed_response(self, translate_server):
        _TranslateHandler.payload = {"nope": True}
        with pytest.raises(MalformedServerResponse):
            NeuralTranslator(_url(translate_server)).translate(QUESTION)

    def test_empty_question(self, translate_server):
        with pytest.raises(EmptyQuestion):
            NeuralTranslator(_url(translate_server)).translate("")
