import json

import httpx
import pytest

from kpsum.corpus import Dataset, DocumentPair
from kpsum.errors import AuthError, RunFailureError, TemplateError, TransportError
from kpsum.metrics import rouge1
from kpsum.prompting import (
    CompletionRequest,
    CompletionResponse,
    HttpCompletionClient,
    LLMEndpointConfig,
    MockKeyphrasesClient,
    MockPrefixClient,
    MockSuffixClient,
    PromptTemplate,
    bundled_template,
    bundled_template_names,
    load_endpoint_config,
    load_template,
    make_client,
    render_prompt,
    run_summarization,
    template_text,
    two_stage_summarize,
)
from kpsum.scoring import OracleScorer

from conftest import write_jsonl


def _doc(source, summary="", doc_id="d"):
    return DocumentPair(doc_id, source, summary)


class TestTemplates:
    def test_text_placeholder_required_exactly_once(self):
        with pytest.raises(TemplateError):
            PromptTemplate("t", "no placeholder")
        with pytest.raises(TemplateError):
            PromptTemplate("t", "<text> and <text>")

    def test_at_most_one_keyphrase_placeholder(self):
        with pytest.raises(TemplateError):
            PromptTemplate("t", "<text> <keywords> <key_phrases>")

    def test_both_spellings_accepted(self):
        assert PromptTemplate("a", "<text> <keywords>").needs_keyphrases
        assert PromptTemplate("b", "<text> <key_phrases>").needs_keyphrases
        assert not PromptTemplate("c", "<text>").needs_keyphrases

    def test_bundled_templates_round_trip(self, tmp_path):
        from importlib import resources

        names = bundled_template_names()
        assert len(names) == 25
        for name in names:
            raw = resources.files("kpsum.templates").joinpath(f"{name}.txt").read_text("utf-8")
            tpl = bundled_template(name)
            assert template_text(tpl) == raw

    def test_load_template_hint_from_filename(self, tmp_path):
        p = tmp_path / "cnn_claude_kp.txt"
        p.write_text("<text> <keywords>", encoding="utf-8")
        tpl = load_template(p)
        assert tpl.name == "cnn_claude_kp"
        assert tpl.target_model_hint == "claude"


class TestRenderPrompt:
    def test_zero_shot_plain(self):
        tpl = PromptTemplate("t", "Summarize:\n<text>\nGo.")
        out = render_prompt(tpl, _doc("the body"))
        assert out == "Summarize:\nthe body\nGo."

    def test_keyphrases_joined_with_comma_space(self):
        tpl = PromptTemplate("t", "<text>\nKeys: <key_phrases>")
        out = render_prompt(tpl, _doc("body"), ["a", "b"])
        assert out.count("a, b") == 1

    def test_samsum_keyphrase_marker_string(self):
        tpl = bundled_template("samsum_claude_kp")
        out = render_prompt(tpl, _doc("Amy: hi"), ["budget vote", "ocean"])
        assert "Consider include the following information: budget vote, ocean" in out

    def test_placeholder_argument_mismatch(self):
        plain = PromptTemplate("p", "<text>")
        kp = PromptTemplate("k", "<text> <keywords>")
        with pytest.raises(TemplateError):
            render_prompt(kp, _doc("x"))
        with pytest.raises(TemplateError):
            render_prompt(plain, _doc("x"), ["a"])

    def test_source_containing_placeholder_not_reexpanded(self):
        tpl = PromptTemplate("t", "<text> END <keywords>")
        out = render_prompt(tpl, _doc("body with <keywords> inside"), ["kp"])
        assert out == "body with <keywords> inside END kp"

    def test_injective_in_document_text(self):
        tpl = PromptTemplate("t", "A <text> B")
        seen = set()
        for i in range(50):
            seen.add(render_prompt(tpl, _doc(f"src {i}")))
        assert len(seen) == 50


class TestHttpClient:
    def _cfg(self, **kw):
        defaults = dict(base_url="https://api.test/v1/complete", model_id="m", retries=2)
        defaults.update(kw)
        return LLMEndpointConfig(**defaults)

    def test_success(self):
        def handler(request):
            payload = json.loads(request.content)
            assert payload["model"] == "m"
            return httpx.Response(200, json={"text": "ok", "usage": {"completion_tokens": 1}})

        client = HttpCompletionClient(self._cfg(), transport=httpx.MockTransport(handler))
        resp = client.complete(CompletionRequest("hello"))
        assert resp.text == "ok"
        assert resp.usage == {"completion_tokens": 1}

    def test_429_twice_then_200(self):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            if calls["n"] <= 2:
                return httpx.Response(429)
            return httpx.Response(200, json={"text": "fine"})

        client = HttpCompletionClient(
            self._cfg(retries=2), transport=httpx.MockTransport(handler), sleep=lambda s: None
        )
        assert client.complete(CompletionRequest("x")).text == "fine"
        assert calls["n"] == 3

    def test_retries_exhausted_carries_attempts(self):
        def handler(request):
            return httpx.Response(503)

        client = HttpCompletionClient(
            self._cfg(retries=1), transport=httpx.MockTransport(handler), sleep=lambda s: None
        )
        with pytest.raises(TransportError) as exc_info:
            client.complete(CompletionRequest("x"))
        assert exc_info.value.attempts == 2

    def test_connect_error_retried_then_raises(self):
        def handler(request):
            raise httpx.ConnectError("nope")

        client = HttpCompletionClient(
            self._cfg(retries=1), transport=httpx.MockTransport(handler), sleep=lambda s: None
        )
        with pytest.raises(TransportError) as exc_info:
            client.complete(CompletionRequest("x"))
        assert exc_info.value.attempts == 2

    def test_auth_rejection(self):
        def handler(request):
            return httpx.Response(401)

        client = HttpCompletionClient(self._cfg(), transport=httpx.MockTransport(handler))
        with pytest.raises(AuthError):
            client.complete(CompletionRequest("x"))

    def test_missing_auth_env(self, monkeypatch):
        monkeypatch.delenv("KPSUM_TEST_KEY", raising=False)
        with pytest.raises(AuthError, match="KPSUM_TEST_KEY"):
            HttpCompletionClient(self._cfg(auth_env_var="KPSUM_TEST_KEY"))

    def test_auth_header_sent(self, monkeypatch):
        monkeypatch.setenv("KPSUM_TEST_KEY", "sekrit")

        def handler(request):
            assert request.headers["Authorization"] == "Bearer sekrit"
            return httpx.Response(200, json={"text": "y"})

        client = HttpCompletionClient(
            self._cfg(auth_env_var="KPSUM_TEST_KEY"), transport=httpx.MockTransport(handler)
        )
        assert client.complete(CompletionRequest("x")).text == "y"

    def test_empty_completion_never_silent(self):
        def handler(request):
            return httpx.Response(200, json={"text": ""})

        client = HttpCompletionClient(self._cfg(), transport=httpx.MockTransport(handler))
        with pytest.raises(TransportError, match="empty"):
            client.complete(CompletionRequest("x"))

    def test_malformed_payload(self):
        def handler(request):
            return httpx.Response(200, content=b"not json")

        client = HttpCompletionClient(self._cfg(), transport=httpx.MockTransport(handler))
        with pytest.raises(TransportError, match="malformed"):
            client.complete(CompletionRequest("x"))


class TestMockClients:
    def test_suffix_echoes_last_ten_words(self):
        client = MockSuffixClient(words=10)
        prompt = " ".join(f"w{i}" for i in range(25))
        resp = client.complete(CompletionRequest(prompt))
        assert resp.text == " ".join(f"w{i}" for i in range(15, 25))

    def test_keyphrases_client_extracts_list(self):
        tpl = bundled_template("samsum_claude_kp")
        prompt = render_prompt(tpl, _doc("Amy: hi"), ["budget vote", "ocean"])
        resp = MockKeyphrasesClient().complete(CompletionRequest(prompt))
        assert resp.text == "budget vote, ocean"

    def test_keyphrases_client_without_marker(self):
        resp = MockKeyphrasesClient().complete(CompletionRequest("plain prompt"))
        assert resp.text == "(nokeypointsfound)"

    def test_make_client_mock_schemes(self):
        assert isinstance(
            make_client(LLMEndpointConfig(base_url="mock://keyphrases")), MockKeyphrasesClient
        )
        prefix = make_client(LLMEndpointConfig(base_url="mock://prefix?words=3"))
        assert isinstance(prefix, MockPrefixClient) and prefix.words == 3
        with pytest.raises(TransportError):
            make_client(LLMEndpointConfig(base_url="mock://unknown"))
        with pytest.raises(TransportError):
            make_client(LLMEndpointConfig(base_url="ftp://x"))

    def test_load_endpoint_config(self, tmp_path):
        p = tmp_path / "ep.json"
        p.write_text(
            json.dumps({
                "base_url": "https://x", "model_id": "m", "auth_env_var": "K",
                "timeout_s": 5, "retries": 1, "max_in_flight": 4,
            }),
            encoding="utf-8",
        )
        cfg = load_endpoint_config(p)
        assert cfg.max_in_flight == 4
        assert cfg.timeout_s == 5.0


class _FailNth:
    """Client that raises TransportError for selected document indices."""

    def __init__(self, fail_on=frozenset()):
        self.fail_on = fail_on
        self.calls = 0

    def complete(self, req):
        self.calls += 1
        if self.calls in self.fail_on:
            raise TransportError("boom", attempts=1)
        return CompletionResponse(text=f"summary {self.calls}")


class TestRunSummarization:
    def _ds(self, n=3):
        return Dataset(
            tuple(
                DocumentPair(f"d{i}", f"The budget vote {i} passed today.", f"budget vote {i}")
                for i in range(n)
            )
        )

    def _plain_tpl(self):
        return PromptTemplate("plain", "Text:\n<text>\nSummary:")

    def test_three_docs_no_failures(self, tmp_path):
        out = tmp_path / "run.jsonl"
        report = run_summarization(
            self._ds(), self._plain_tpl(), None, 5, MockPrefixClient(4), out
        )
        assert (report.n_total, report.n_ok, report.n_failed) == (3, 3, 0)
        lines = [json.loads(x) for x in out.read_text("utf-8").splitlines()]
        assert [r["id"] for r in lines] == ["d0", "d1", "d2"]
        assert all(set(r) == {"id", "prompt", "summary", "keyphrases"} for r in lines)

    def test_keyphrase_template_requires_source(self, tmp_path):
        tpl = PromptTemplate("kp", "<text> <keywords>")
        with pytest.raises(TemplateError):
            run_summarization(self._ds(), tpl, None, 5, MockPrefixClient(), tmp_path / "o")

    def test_keyphrase_records_bounded_by_k(self, tmp_path):
        tpl = bundled_template("samsum_claude_kp")
        out = tmp_path / "run.jsonl"
        run_summarization(
            self._ds(), tpl, OracleScorer(), 15, MockKeyphrasesClient(), out
        )
        for line in out.read_text("utf-8").splitlines():
            assert len(json.loads(line)["keyphrases"]) <= 15

    def test_failure_cap_exceeded(self, tmp_path):
        out = tmp_path / "run.jsonl"
        with pytest.raises(RunFailureError) as exc_info:
            run_summarization(
                self._ds(3), self._plain_tpl(), None, 5,
                _FailNth({1, 2}), out, failure_cap=0.1,
            )
        report = exc_info.value.report
        assert report.n_failed == 2
        # outputs for the successful doc were still written
        assert len(out.read_text("utf-8").splitlines()) == 1

    def test_failures_recorded_and_skipped_under_cap(self, tmp_path):
        out = tmp_path / "run.jsonl"
        report = run_summarization(
            self._ds(3), self._plain_tpl(), None, 5,
            _FailNth({2}), out, failure_cap=0.5,
        )
        assert report.n_failed == 1
        assert report.failures[0][0] == "d1"

    def test_jobs_parallel_output_order_stable(self, tmp_path):
        seq = tmp_path / "seq.jsonl"
        par = tmp_path / "par.jsonl"
        run_summarization(self._ds(8), self._plain_tpl(), None, 5, MockPrefixClient(3), seq)
        run_summarization(
            self._ds(8), self._plain_tpl(), None, 5, MockPrefixClient(3), par, jobs=4
        )
        assert seq.read_bytes() == par.read_bytes()

    def test_mean_summary_words(self, tmp_path):
        report = run_summarization(
            self._ds(2), self._plain_tpl(), None, 5, MockPrefixClient(4), tmp_path / "o"
        )
        assert report.mean_summary_words == 4.0


class _TwoStageMock:
    """Pass 1 returns the first two sentences; pass 2 echoes its input text."""

    def __init__(self, empty_first=False):
        self.calls = 0
        self.empty_first = empty_first

    def complete(self, req):
        self.calls += 1
        body = req.prompt.split("PASS1:\n", 1)
        if len(body) == 2:
            if self.empty_first:
                raise TransportError("empty completion text", attempts=1)
            sentences = body[1].split(". ")
            return CompletionResponse(text=". ".join(sentences[:2]))
        body = req.prompt.split("PASS2:\n", 1)[1]
        return CompletionResponse(text=body)


class TestTwoStage:
    def _tpls(self):
        return (
            PromptTemplate("extract", "PASS1:\n<text>"),
            PromptTemplate("abstract", "PASS2:\n<text>"),
        )

    def test_mock_composition(self, tmp_path):
        ds = Dataset(
            (DocumentPair("d0", "One fact. Two facts. Three facts. Four facts.", "x"),)
        )
        extract, abstract = self._tpls()
        out = tmp_path / "two.jsonl"
        client = _TwoStageMock()
        report = two_stage_summarize(ds, extract, abstract, client, out)
        rec = json.loads(out.read_text("utf-8").splitlines()[0])
        assert rec["extracted"] == "One fact. Two facts"
        assert rec["summary"] == "One fact. Two facts"
        assert report.completion_calls == 2

    def test_two_docs_four_calls(self, tmp_path):
        ds = Dataset(
            tuple(DocumentPair(f"d{i}", "A one. B two. C three.", "x") for i in range(2))
        )
        extract, abstract = self._tpls()
        client = _TwoStageMock()
        report = two_stage_summarize(ds, extract, abstract, client, tmp_path / "o")
        assert client.calls == 4
        assert report.completion_calls == 4

    def test_empty_first_pass_fails_doc_and_skips_pass2(self, tmp_path):
        ds = Dataset((DocumentPair("d0", "A one. B two.", "x"),))
        extract, abstract = self._tpls()
        client = _TwoStageMock(empty_first=True)
        with pytest.raises(RunFailureError) as exc_info:
            two_stage_summarize(ds, extract, abstract, client, tmp_path / "o")
        assert exc_info.value.report.n_failed == 1
        assert client.calls == 1  # pass 2 never ran

    def test_keyphrase_templates_rejected(self, tmp_path):
        ds = Dataset((DocumentPair("d0", "x", "y"),))
        kp = PromptTemplate("kp", "<text> <keywords>")
        plain = PromptTemplate("p", "<text>")
        with pytest.raises(TemplateError):
            two_stage_summarize(ds, kp, plain, _TwoStageMock(), tmp_path / "o")


class TestEndToEndDirectional:
    def test_oracle_keyphrases_beat_zero_shot_recall(self, tmp_path):
        # plumbing check with the echo client, not a claim about real LLMs
        docs = []
        for i in range(10):
            docs.append(
                DocumentPair(
                    f"d{i}",
                    f"The treaty {i} was signed. The glacier budget {i} passed. Filler text runs on.",
                    f"treaty {i}. glacier budget {i}",
                )
            )
        ds = Dataset(tuple(docs))
        kp_tpl = bundled_template("samsum_claude_kp")
        plain_tpl = bundled_template("samsum_claude")
        out_kp = tmp_path / "kp.jsonl"
        out_plain = tmp_path / "plain.jsonl"
        run_summarization(ds, kp_tpl, OracleScorer(), 15, MockKeyphrasesClient(), out_kp)
        run_summarization(ds, plain_tpl, None, 15, MockKeyphrasesClient(), out_plain)

        def mean_recall(path):
            vals = []
            for line in path.read_text("utf-8").splitlines():
                rec = json.loads(line)
                ref = next(d.summary for d in ds if d.id == rec["id"])
                vals.append(rouge1(rec["summary"], ref).recall)
            return sum(vals) / len(vals)

        assert mean_recall(out_kp) > mean_recall(out_plain)
