"""The served JSON bodies must match docs/api-schema.json, which the web UI
builds its client against."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from fusionkit.config import ServiceConfig
from fusionkit.engine import Engine
from fusionkit.service import create_app

from test_service import MANIFEST, SEGMENTS, synthetic_adapter  # noqa: F401  (reuses corpus shape)
from test_service import corpus_dir  # noqa: F401

SCHEMA = json.loads((Path(__file__).parent.parent / "docs" / "api-schema.json").read_text())


def validate(instance, schema, path="$"):
    """Minimal validator for the schema subset used in docs/api-schema.json."""
    if "$ref" in schema:
        name = schema["$ref"].rsplit("/", 1)[1]
        return validate(instance, SCHEMA["$defs"][name], path)
    if "enum" in schema:
        assert instance in schema["enum"], f"{path}: {instance!r} not in {schema['enum']}"
        return
    kind = schema.get("type")
    if kind == "object":
        assert isinstance(instance, dict), f"{path}: expected object"
        for key in schema.get("required", []):
            assert key in instance, f"{path}: missing required {key!r}"
        props = schema.get("properties", {})
        if schema.get("additionalProperties") is False:
            extra = set(instance) - set(props)
            assert not extra, f"{path}: unexpected keys {extra}"
        for key, sub in props.items():
            if key in instance:
                validate(instance[key], sub, f"{path}.{key}")
    elif kind == "array":
        assert isinstance(instance, list), f"{path}: expected array"
        if "minItems" in schema:
            assert len(instance) >= schema["minItems"], f"{path}: too few items"
        if "maxItems" in schema:
            assert len(instance) <= schema["maxItems"], f"{path}: too many items"
        for i, item in enumerate(instance):
            validate(item, schema.get("items", {}), f"{path}[{i}]")
    elif kind == "string":
        assert isinstance(instance, str), f"{path}: expected string"
    elif kind == "integer":
        assert isinstance(instance, int) and not isinstance(instance, bool), f"{path}: expected integer"
        if "minimum" in schema:
            assert instance >= schema["minimum"], f"{path}: below minimum"
        if "maximum" in schema:
            assert instance <= schema["maximum"], f"{path}: above maximum"
    elif kind == "number":
        assert isinstance(instance, (int, float)) and not isinstance(instance, bool), f"{path}: expected number"
    elif kind == "boolean":
        assert isinstance(instance, bool), f"{path}: expected boolean"


@pytest.fixture()
def client(corpus_dir):  # noqa: F811
    engine = Engine(ServiceConfig())
    engine.load_corpus(corpus_dir)
    return TestClient(create_app(engine), raise_server_exceptions=False)


def test_search_hits_match_schema(client):
    body = client.post("/search", json={"text": "amber terrier", "k": 5}).json()
    validate(body, {"$ref": "#/$defs/search_hits_response"})


def test_search_groups_match_schema(client):
    body = client.post("/search", json={"text": "amber terrier", "k": 5, "group": True}).json()
    validate(body, {"$ref": "#/$defs/search_groups_response"})


def test_text_search_matches_schema(client):
    body = client.post("/search/text", json={"query": "stop sign"}).json()
    validate(body, {"$ref": "#/$defs/text_search_response"})


def test_questions_match_schema(client):
    body = client.post("/rerank/questions", json={"query": "yellow dog"}).json()
    validate(body, {"$ref": "#/$defs/questions_response"})


def test_rerank_execute_matches_schema(client):
    questions = client.post("/rerank/questions", json={"query": "dog"}).json()["questions"]
    body = client.post(
        "/rerank/execute",
        json={"query": "dog", "questions": questions, "hits": ["v01:00000000", "v02:00000010"]},
    ).json()
    validate(body, {"$ref": "#/$defs/rerank_response"})


def test_qa_matches_schema(client):
    body = client.post("/qa", json={"question": "How many?", "video_id": "v01", "max_frames": 2}).json()
    validate(body, {"$ref": "#/$defs/qa_response"})


def test_keyframes_match_schema(client):
    body = client.get("/videos/v01/keyframes").json()
    validate(body, {"$ref": "#/$defs/keyframes_response"})


def test_health_matches_schema(client):
    validate(client.get("/health").json(), {"$ref": "#/$defs/health_response"})


def test_error_bodies_match_schema(client):
    for response in (
        client.post("/search", json={"text": ""}),
        client.post("/search", json={"text": "x", "alpha": 7}),
        client.post("/qa", json={"question": "x?"}),
        client.get("/videos/ghost/keyframes"),
        client.post("/rerank/execute", json={"query": "x", "questions": ["a?"], "hits": ["kf"]}),
    ):
        assert response.status_code >= 400
        validate(response.json(), {"$ref": "#/$defs/error_body"})
