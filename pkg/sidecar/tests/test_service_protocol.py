"""Wire-level behavior: envelopes, validation, budget, health."""

import math

import pytest
from fastapi.testclient import TestClient

from constsum_sidecar.service import ServiceConfig, create_app


@pytest.fixture(scope="module")
def client() -> TestClient:
    return TestClient(create_app(ServiceConfig(token_limit=32)))


def post(client, path, body):
    resp = client.post(path, json=body)
    return resp.status_code, resp.json()


class TestEnvelope:
    def test_result_xor_error_on_a_sweep_of_requests(self, client):
        sweep = [
            ("/v1/embed", {"texts": ["a", "b"]}),
            ("/v1/embed", {"texts": []}),
            ("/v1/embed", {"texts": "a"}),
            ("/v1/embed", {}),
            ("/v1/tokenize", {"text": "No one."}),
            ("/v1/tokenize", {"text": 4}),
            ("/v1/fill_mask", {"tokens": ["a", "b"], "mask_positions": [0]}),
            ("/v1/fill_mask", {"tokens": [], "mask_positions": []}),
            ("/v1/fill_mask", {"tokens": ["a"], "mask_positions": [3]}),
            ("/v1/blanc_tune", {"document": "d.", "summary": "s."}),
            ("/v1/blanc_tune", {"document": "d."}),
            ("/v1/project", {"vectors": [[1.0, 2.0], [0.0, 1.0]]}),
            ("/v1/project", {"vectors": [[1.0], [1.0, 2.0]]}),
        ]
        for path, body in sweep:
            _, payload = post(client, path, body)
            has_result = payload.get("result") is not None
            has_error = bool(payload.get("error"))
            assert has_result != has_error, (path, body, payload)

    def test_error_messages_name_the_field(self, client):
        _, payload = post(client, "/v1/embed", {})
        assert "texts" in payload["error"]

    def test_invalid_json_body(self, client):
        resp = client.post("/v1/tokenize", content=b"not json{",
                           headers={"content-type": "application/json"})
        assert resp.json()["error"] == "body is not valid JSON"

    def test_non_object_body(self, client):
        resp = client.post("/v1/embed", json=["texts"])
        assert "object" in resp.json()["error"]


class TestEmbedEndpoint:
    def test_vectors_are_unit_norm_on_the_wire(self, client):
        _, payload = post(client, "/v1/embed", {"texts": ["right to life", "x y z"]})
        for vec in payload["result"]["vectors"]:
            assert abs(math.sqrt(sum(x * x for x in vec)) - 1.0) < 1e-9

    def test_identical_texts_identical_vectors(self, client):
        _, payload = post(client, "/v1/embed", {"texts": ["same", "same"]})
        first, second = payload["result"]["vectors"]
        assert first == second


class TestFillMaskEndpoint:
    def test_zero_positions_empty_list(self, client):
        _, payload = post(client, "/v1/fill_mask",
                          {"tokens": ["a", "b"], "mask_positions": []})
        assert payload["result"]["predictions"] == []

    def test_one_prediction_per_position(self, client):
        body = {"tokens": ["Everyone", "has", "the", "right", "to", "life", "."],
                "mask_positions": [1, 3, 5], "context": "the right to life"}
        _, payload = post(client, "/v1/fill_mask", body)
        assert len(payload["result"]["predictions"]) == 3

    def test_budget_overrun_mentions_the_budget(self, client):
        body = {"tokens": ["tok"] * 30, "mask_positions": [0],
                "context": "pad " * 10}
        _, payload = post(client, "/v1/fill_mask", body)
        assert "budget" in payload["error"]

    def test_unsorted_positions_rejected(self, client):
        _, payload = post(client, "/v1/fill_mask",
                          {"tokens": ["a", "b", "c"], "mask_positions": [2, 0]})
        assert "increasing" in payload["error"]

    def test_boolean_positions_rejected(self, client):
        _, payload = post(client, "/v1/fill_mask",
                          {"tokens": ["a", "b"], "mask_positions": [True]})
        assert "integers" in payload["error"]


class TestBlancTuneEndpoint:
    def test_score_in_range(self, client):
        _, payload = post(client, "/v1/blanc_tune", {
            "document": "Everyone has the right to education. Taxes are set by law.",
            "summary": "Education is a right; taxes need a law."})
        assert -1.0 <= payload["result"]["score"] <= 1.0

    def test_overrides_accepted(self, client):
        _, payload = post(client, "/v1/blanc_tune", {
            "document": "The death penalty is abolished.",
            "summary": "No death penalty.",
            "overrides": {"mask_every": 2, "min_token_len": 3, "weight": 6}})
        assert "score" in payload["result"]

    def test_unknown_override_rejected(self, client):
        _, payload = post(client, "/v1/blanc_tune", {
            "document": "d.", "summary": "s.", "overrides": {"epochs": 3}})
        assert "epochs" in payload["error"]

    def test_non_positive_override_rejected(self, client):
        _, payload = post(client, "/v1/blanc_tune", {
            "document": "d.", "summary": "s.", "overrides": {"weight": 0}})
        assert "positive" in payload["error"]


class TestProjectEndpoint:
    def test_one_point_per_vector(self, client):
        vectors = [[float(i), 1.0, 0.0] for i in range(5)]
        _, payload = post(client, "/v1/project", {"vectors": vectors})
        coords = payload["result"]["coordinates"]
        assert len(coords) == 5
        assert all(len(point) == 2 for point in coords)

    def test_non_finite_rejected(self, client):
        resp = client.post("/v1/project",
                           content=b'{"vectors": [[1.0], [Infinity]]}',
                           headers={"content-type": "application/json"})
        assert "finite" in resp.json()["error"]


class TestHealth:
    def test_get_and_post(self, client):
        assert client.get("/healthz").json() == {"ok": True}
        assert client.post("/healthz", json={}).json() == {"ok": True}


class TestStartup:
    def test_empty_corpus_refuses_startup(self, tmp_path):
        empty = tmp_path / "corpus.txt"
        empty.write_text("# nothing\n")
        with pytest.raises(Exception, match="no tokens"):
            create_app(ServiceConfig(corpus_path=str(empty)))

    def test_custom_corpus_accepted(self, tmp_path):
        corpus = tmp_path / "corpus.txt"
        corpus.write_text("The law protects the person.\n")
        app = create_app(ServiceConfig(corpus_path=str(corpus)))
        tc = TestClient(app)
        _, payload = post(tc, "/v1/fill_mask",
                          {"tokens": ["The", "law"], "mask_positions": [1]})
        assert payload["result"]["predictions"] == ["law"]

    def test_config_from_env(self):
        env = {"CONSTSUM_SIDECAR_PORT": "9001",
               "CONSTSUM_SIDECAR_DIMENSION": "16",
               "CONSTSUM_SIDECAR_TOKEN_LIMIT": "64"}
        cfg = ServiceConfig.from_env(env)
        assert (cfg.port, cfg.dimension, cfg.token_limit) == (9001, 16, 64)
        assert cfg.host == "127.0.0.1"
        assert cfg.corpus_path is None
