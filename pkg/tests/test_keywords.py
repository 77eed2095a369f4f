import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from framepick.config import KeywordClientConfig
from framepick.keywords import (
    KeywordExtractionError,
    KeywordParseError,
    extract_keywords_remote,
    parse_keyword_response,
)


class TestParseResponse:
    def test_basic_bracketed_list(self):
        assert parse_keyword_response("[farm, animals, tenacity]") == [
            "farm",
            "animals",
            "tenacity",
        ]

    def test_case_insensitive_dedup_keeps_first(self):
        assert parse_keyword_response("[a, A, b]") == ["a", "b"]

    def test_missing_brackets_is_parse_error_with_raw(self):
        with pytest.raises(KeywordParseError) as exc:
            parse_keyword_response("farm, animals")
        assert exc.value.raw == "farm, animals"

    def test_cap_at_max(self):
        text = "[" + ", ".join(f"k{i}" for i in range(30)) + "]"
        assert len(parse_keyword_response(text, max_keywords=10)) == 10

    def test_quotes_and_whitespace_stripped(self):
        got = parse_keyword_response("keywords: ['golden eagle' ,  \"Alps\"]")
        assert got == ["golden eagle", "Alps"]

    def test_surrounding_prose_tolerated(self):
        got = parse_keyword_response("Sure! Here you go: [farm, animals]. Enjoy.")
        assert got == ["farm", "animals"]


class _StubHandler(BaseHTTPRequestHandler):
    script = []  # list of (status, body-dict or text) consumed per request
    requests = []

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        _StubHandler.requests.append(json.loads(self.rfile.read(length)))
        status, body = (
            _StubHandler.script.pop(0) if _StubHandler.script else (200, {"text": "[x]"})
        )
        payload = json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_endpoint():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.script = []
    _StubHandler.requests = []
    yield f"http://127.0.0.1:{server.server_port}/extract"
    server.shutdown()


def cfg(endpoint, **kw):
    return KeywordClientConfig(endpoint=endpoint, retries=2, timeout_s=2.0, **kw)


class TestRemoteExtraction:
    def test_happy_path_carries_prompt_schema(self, stub_endpoint):
        _StubHandler.script = [(200, {"text": "[farm, animals, tenacity]"})]
        got = extract_keywords_remote("A farm summary.", "Farm", cfg(stub_endpoint))
        assert got == ["farm", "animals", "tenacity"]
        sent = _StubHandler.requests[0]
        assert set(sent) == {"role_prompt", "user_prompt", "max_tokens"}
        assert "Farm" in sent["user_prompt"]
        assert "A farm summary." in sent["user_prompt"]

    def test_retry_then_success(self, stub_endpoint):
        _StubHandler.script = [
            (500, {"error": "boom"}),
            (200, {"text": "[eagle]"}),
        ]
        got = extract_keywords_remote("s", "t", cfg(stub_endpoint))
        assert got == ["eagle"]
        assert len(_StubHandler.requests) == 2

    def test_bounded_retries_then_error(self, stub_endpoint):
        _StubHandler.script = [(500, {})] * 5
        with pytest.raises(KeywordExtractionError):
            extract_keywords_remote("s", "t", cfg(stub_endpoint))
        assert len(_StubHandler.requests) == 3  # initial try + 2 retries

    def test_unparseable_response_not_retried(self, stub_endpoint):
        _StubHandler.script = [(200, {"text": "no brackets here"})]
        with pytest.raises(KeywordParseError):
            extract_keywords_remote("s", "t", cfg(stub_endpoint))
        assert len(_StubHandler.requests) == 1

    def test_no_endpoint_configured(self, monkeypatch):
        monkeypatch.delenv("FRAMEPICK_KEYWORD_ENDPOINT", raising=False)
        with pytest.raises(KeywordExtractionError, match="endpoint"):
            extract_keywords_remote("s", "t", cfg(""))

    def test_endpoint_from_environment(self, stub_endpoint, monkeypatch):
        monkeypatch.setenv("FRAMEPICK_KEYWORD_ENDPOINT", stub_endpoint)
        _StubHandler.script = [(200, {"text": "[env]"})]
        assert extract_keywords_remote("s", "t", cfg("")) == ["env"]

    def test_blank_summary_rejected(self, stub_endpoint):
        with pytest.raises(ValueError):
            extract_keywords_remote("   ", "t", cfg(stub_endpoint))


class TestPipelineFallback:
    def test_extraction_failure_falls_back_to_metadata(self, tmp_path, stub_endpoint, monkeypatch):
        from framepick.bundle import load_bundle
        from framepick.config import PipelineConfig
        from framepick.pipeline import resolve_keywords
        from framepick.synth import SynthSpec, generate_bundle

        root = generate_bundle(
            tmp_path / "b",
            SynthSpec(video_id="fb", frame_count=12, shot_count=2,
                      face_shots=(), keywords=("alpha",), seed=1),
        )
        # blank out manifest keywords so extraction is attempted
        manifest_path = root / "manifest.json"
        data = json.loads(manifest_path.read_text())
        data["keywords"] = []
        manifest_path.write_text(json.dumps(data))

        bundle = load_bundle(root)
        config = PipelineConfig()
        config.keywords.endpoint = stub_endpoint
        config.keywords.retries = 0
        _StubHandler.script = [(500, {})]
        resolve_keywords(bundle, config)
        assert bundle.manifest.keywords == []  # metadata had none; no crash

    def test_extracted_keywords_resolve_against_bundle_embeddings(
        self, tmp_path, stub_endpoint
    ):
        from framepick.bundle import load_bundle
        from framepick.config import PipelineConfig
        from framepick.pipeline import resolve_keywords
        from framepick.synth import SynthSpec, generate_bundle

        root = generate_bundle(
            tmp_path / "b2",
            SynthSpec(video_id="fb2", frame_count=12, shot_count=2,
                      face_shots=(), keywords=("alpha", "beta"), seed=2),
        )
        manifest_path = root / "manifest.json"
        data = json.loads(manifest_path.read_text())
        data["keywords"] = []
        manifest_path.write_text(json.dumps(data))

        bundle = load_bundle(root)
        config = PipelineConfig()
        config.keywords.endpoint = stub_endpoint
        _StubHandler.script = [(200, {"text": "[alpha, unknown-word]"})]
        resolve_keywords(bundle, config)
        assert [k.text for k in bundle.manifest.keywords] == ["alpha"]
        assert bundle.manifest.keywords[0].source == "remote-extraction"
