import random
import socket

import jsonschema
import pytest
from fastapi.testclient import TestClient

from model_server.server import PortInUse, create_app, serve

RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["logical_form", "beams"],
    "properties": {
        "logical_form": {"type": "string", "minLength": 1},
        "beams": {"type": "array", "items": {"type": "string"}},
    },
}


@pytest.fixture(scope="module")
def client(trained):
    return TestClient(create_app(trained["model"]))


class TestTranslateEndpoint:
    def test_trained_question_round_trips(self, client, pairs):
        question, target = pairs[0]
        response = client.post("/translate", json={"question": question,
                                                   "num_beams": 1})
        assert response.status_code == 200
        payload = response.json()
        assert payload["logical_form"]
        assert payload["logical_form"] == target

    def test_three_beams(self, client, pairs):
        response = client.post("/translate",
                               json={"question": pairs[1][0], "num_beams": 3})
        assert response.status_code == 200
        payload = response.json()
        assert len(payload["beams"]) == 3
        assert payload["logical_form"] == payload["beams"][0]

    def test_malformed_body_is_400(self, client):
        assert client.post("/translate", json={"nope": 1}).status_code == 400
        assert client.post("/translate", json={"question": ""}).status_code == 400
        assert client.post(
            "/translate",
            content=b"not json",
            headers={"Content-Type": "application/json"}).status_code == 400

    def test_schema_on_50_random_requests(self, client, pairs):
        rng = random.Random(50)
        words = [w for q, _ in pairs for w in q.split()]
        for _ in range(50):
            question = " ".join(rng.choice(words)
                                for _ in range(rng.randint(1, 12)))
            num_beams = rng.choice([1, 1, 1, 2, 3])
            response = client.post("/translate",
                                   json={"question": question,
                                         "num_beams": num_beams})
            assert response.status_code == 200
            payload = response.json()
            jsonschema.validate(payload, RESPONSE_SCHEMA)
            assert len(payload["beams"]) == num_beams
            assert payload["logical_form"] == payload["beams"][0]


def test_healthz(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_port_in_use(trained):
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    port = blocker.getsockname()[1]
    try:
        with pytest.raises(PortInUse):
            serve(trained["dir"], port=port)
    finally:
        blocker.close()
