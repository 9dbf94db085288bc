"""Prompt rendering, completion clients, and summarization runners.

Templates are plain UTF-8 files with a ``<text>`` placeholder (exactly
once) and at most one keyphrase placeholder, written ``<key_phrases>``
or ``<keywords>``; both spellings are accepted and the bundled files
keep whichever they were written with. Rendering never re-scans
substituted content, so document text containing placeholder-like
strings cannot be re-expanded.

The completion client speaks one generic JSON-over-HTTP schema:
POST {base_url} with {"model", "prompt", "max_tokens", "temperature"},
expecting {"text": str, "usage": {...}} back. Endpoint configs whose
base_url uses the mock:// scheme resolve to bundled deterministic
clients, so tests and offline runs never need a network.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence
from urllib.parse import parse_qs, urlsplit

import httpx

from .corpus import Dataset, DocumentPair
from .errors import AuthError, KpsumError, RunFailureError, TemplateError, TransportError
from .matching import MatchConfig
from .phrasing import Granularity, segment
from .scoring import ScoreSource
from .selection import KeyphraseSet, select_keyphrases

log = logging.getLogger(__name__)

TEXT_PLACEHOLDER = "<text>"
KEYPHRASE_PLACEHOLDERS = ("<key_phrases>", "<keywords>")
_PLACEHOLDER_RE = re.compile(r"(<text>|<key_phrases>|<keywords>)")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    target_model_hint: str = ""

    def __post_init__(self):
        n_text = self.body.count(TEXT_PLACEHOLDER)
        if n_text != 1:
            raise TemplateError(
                f"template {self.name!r}: <text> must appear exactly once, found {n_text}"
            )
        n_kp = sum(self.body.count(p) for p in KEYPHRASE_PLACEHOLDERS)
        if n_kp > 1:
            raise TemplateError(
                f"template {self.name!r}: at most one keyphrase placeholder allowed"
            )

    @property
    def needs_keyphrases(self) -> bool:
        return any(p in self.body for p in KEYPHRASE_PLACEHOLDERS)


def _hint_from_name(name: str) -> str:
    parts = name.split("_")
    return parts[1] if len(parts) > 1 else ""


def load_template(path: str | Path) -> PromptTemplate:
    """Read a template file; the body is kept byte-exact for round-trips."""
    path = Path(path)
    body = path.read_text(encoding="utf-8")
    return PromptTemplate(name=path.stem, body=body, target_model_hint=_hint_from_name(path.stem))


def template_text(tpl: PromptTemplate) -> str:
    """Serialize a template back to its file form (the body, verbatim)."""
    return tpl.body


def bundled_template_names() -> list[str]:
    files = resources.files("kpsum.templates")
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".txt"))


def bundled_template(name: str) -> PromptTemplate:
    body = resources.files("kpsum.templates").joinpath(f"{name}.txt").read_text("utf-8")
    return PromptTemplate(name=name, body=body, target_model_hint=_hint_from_name(name))


def render_prompt(
    tpl: PromptTemplate,
    doc: DocumentPair,
    kps: KeyphraseSet | Sequence[str] | None = None,
) -> str:
    """Fill a template: <text> gets the source, the keyphrase placeholder
    gets the ", "-joined phrase texts. Placeholders and arguments must
    agree; mismatch raises TemplateError."""
    if tpl.needs_keyphrases and kps is None:
        raise TemplateError(f"template {tpl.name!r} expects keyphrases but none given")
    if not tpl.needs_keyphrases and kps is not None:
        raise TemplateError(f"template {tpl.name!r} has no keyphrase placeholder")
    if kps is None:
        joined = ""
    elif isinstance(kps, KeyphraseSet):
        joined = ", ".join(kps.texts())
    else:
        joined = ", ".join(kps)
    parts = _PLACEHOLDER_RE.split(tpl.body)
    out = []
    for part in parts:
        if part == TEXT_PLACEHOLDER:
            out.append(doc.source)
        elif part in KEYPHRASE_PLACEHOLDERS:
            out.append(joined)
        else:
            out.append(part)
    return "".join(out)


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = 512
    temperature: float = 0.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    usage: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LLMEndpointConfig:
    base_url: str
    model_id: str = ""
    auth_env_var: str = ""
    timeout_s: float = 60.0
    retries: int = 2
    max_in_flight: int = 1

    def __post_init__(self):
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


def load_endpoint_config(path: str | Path) -> LLMEndpointConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return LLMEndpointConfig(
        base_url=data["base_url"],
        model_id=data.get("model_id", ""),
        auth_env_var=data.get("auth_env_var", ""),
        timeout_s=float(data.get("timeout_s", 60.0)),
        retries=int(data.get("retries", 2)),
        max_in_flight=int(data.get("max_in_flight", 1)),
    )


class CompletionClient:
    """Protocol-ish base: anything with complete(req) -> CompletionResponse."""

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        raise NotImplementedError


_TRANSIENT_STATUSES = {429, 500, 502, 503, 504}


class HttpCompletionClient(CompletionClient):
    """Generic JSON-over-HTTP client with exponential-backoff retries.

    Transient failures (connect/timeout errors and 429/5xx) are retried
    up to cfg.retries additional attempts; auth rejections and malformed
    or empty payloads raise immediately. Responses are never silently
    empty.
    """

    def __init__(
        self,
        cfg: LLMEndpointConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        backoff_base_s: float = 0.5,
    ):
        self.cfg = cfg
        self._sleep = sleep
        self._backoff = backoff_base_s
        headers = {}
        if cfg.auth_env_var:
            token = os.environ.get(cfg.auth_env_var)
            if not token:
                raise AuthError(
                    f"auth environment variable {cfg.auth_env_var!r} is not set"
                )
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(
            timeout=cfg.timeout_s, headers=headers, transport=transport
        )

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        payload = {
            "model": self.cfg.model_id,
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
        }
        attempts = 0
        while True:
            attempts += 1
            try:
                resp = self._client.post(self.cfg.base_url, json=payload)
            except httpx.TransportError as exc:
                if attempts > self.cfg.retries:
                    raise TransportError(
                        f"transport failure after {attempts} attempt(s): {exc}",
                        attempts=attempts,
                    ) from exc
                self._sleep(self._backoff * 2 ** (attempts - 1))
                continue
            if resp.status_code in (401, 403):
                raise AuthError(
                    f"endpoint rejected credentials (HTTP {resp.status_code})",
                    attempts=attempts,
                )
            if resp.status_code in _TRANSIENT_STATUSES:
                if attempts > self.cfg.retries:
                    raise TransportError(
                        f"HTTP {resp.status_code} after {attempts} attempt(s)",
                        attempts=attempts,
                    )
                self._sleep(self._backoff * 2 ** (attempts - 1))
                continue
            if not 200 <= resp.status_code < 300:
                raise TransportError(
                    f"unexpected HTTP {resp.status_code}", attempts=attempts
                )
            try:
                data = resp.json()
                text = data["text"]
            except (ValueError, KeyError, TypeError) as exc:
                raise TransportError(
                    f"malformed completion payload: {exc}", attempts=attempts
                ) from exc
            if not isinstance(text, str) or not text:
                raise TransportError("empty completion text", attempts=attempts)
            usage = data.get("usage", {}) if isinstance(data, dict) else {}
            return CompletionResponse(text=text, usage=usage)


_KP_MARKERS = (
    "Consider include the following information:",
    "Here are a few keyphrases from the article:",
)


class MockKeyphrasesClient(CompletionClient):
    """Echoes the keyphrase list found in the prompt, else a fixed stub.

    Looks for a known keyphrase marker and returns the rest of that line.
    Deterministic; used for offline plumbing checks.
    """

    def __init__(self):
        self.calls = 0

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        self.calls += 1
        for marker in _KP_MARKERS:
            pos = req.prompt.rfind(marker)
            if pos >= 0:
                tail = req.prompt[pos + len(marker):]
                line = tail.split("\n", 1)[0]
                line = line.replace("[/INST]", "").strip().rstrip(".")
                if line:
                    return CompletionResponse(text=line, usage={})
        return CompletionResponse(text="(nokeypointsfound)", usage={})


class MockPrefixClient(CompletionClient):
    """Returns the first n whitespace words of the prompt."""

    def __init__(self, words: int = 10):
        self.words = words
        self.calls = 0

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        self.calls += 1
        text = " ".join(req.prompt.split()[: self.words]) or "(empty)"
        return CompletionResponse(text=text, usage={})


class MockSuffixClient(CompletionClient):
    """Returns the last n whitespace words of the prompt."""

    def __init__(self, words: int = 10):
        self.words = words
        self.calls = 0

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        self.calls += 1
        text = " ".join(req.prompt.split()[-self.words:]) or "(empty)"
        return CompletionResponse(text=text, usage={})


def make_client(cfg: LLMEndpointConfig, transport=None) -> CompletionClient:
    """Build a client for an endpoint config; mock:// URLs map to the
    bundled deterministic clients (mock://keyphrases, mock://prefix,
    mock://suffix, with ?words=N where applicable)."""
    parts = urlsplit(cfg.base_url)
    if parts.scheme == "mock":
        query = parse_qs(parts.query)
        words = int(query.get("words", ["10"])[0])
        if parts.netloc == "keyphrases":
            return MockKeyphrasesClient()
        if parts.netloc == "prefix":
            return MockPrefixClient(words)
        if parts.netloc == "suffix":
            return MockSuffixClient(words)
        raise TransportError(f"unknown mock endpoint {cfg.base_url!r}")
    if parts.scheme in ("http", "https"):
        return HttpCompletionClient(cfg, transport=transport)
    raise TransportError(f"unsupported endpoint scheme {parts.scheme!r}")


@dataclass(frozen=True)
class RunReport:
    n_total: int
    n_ok: int
    n_failed: int
    failures: tuple[tuple[str, str], ...]
    mean_summary_words: float
    completion_calls: int


def _resolve_client(cfg) -> CompletionClient:
    if isinstance(cfg, LLMEndpointConfig):
        return make_client(cfg)
    if hasattr(cfg, "complete"):
        return cfg
    raise TypeError("cfg must be an LLMEndpointConfig or a completion client")


def _finish_run(results, out, failure_cap) -> RunReport:
    ok = [r for r in results if r[1] is not None]
    failures = tuple((doc_id, err) for doc_id, rec, err, _ in results if rec is None)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for _, rec, _, _ in results:
            if rec is not None:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    words = [len(r[1]["summary"].split()) for r in ok]
    calls = sum(r[3] for r in results)
    report = RunReport(
        n_total=len(results),
        n_ok=len(ok),
        n_failed=len(failures),
        failures=failures,
        mean_summary_words=sum(words) / len(words) if words else 0.0,
        completion_calls=calls,
    )
    if results and report.n_failed / report.n_total > failure_cap:
        raise RunFailureError(
            f"{report.n_failed}/{report.n_total} documents failed "
            f"(cap {failure_cap})",
            report=report,
        )
    return report


def _map_documents(worker, ds: Dataset, jobs: int):
    """Apply worker over documents, preserving dataset order in results."""
    if jobs <= 1:
        return [worker(doc) for doc in ds]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, ds.records))


def run_summarization(
    ds: Dataset,
    tpl: PromptTemplate,
    source: ScoreSource | None,
    k: int,
    cfg,
    out: str | Path,
    match: MatchConfig = MatchConfig(),
    granularity: Granularity = Granularity.PHRASE,
    stopwords=None,
    order: str = "score",
    max_completion_tokens: int = 512,
    temperature: float = 0.0,
    failure_cap: float = 0.1,
    jobs: int = 1,
) -> RunReport:
    """Summarize every document, optionally injecting top-k keyphrases.

    Writes {"id", "prompt", "summary", "keyphrases"} JSONL in dataset
    order. Per-document completion failures are recorded and skipped;
    the run errors only when the failure ratio exceeds failure_cap
    (output written first either way).
    """
    if tpl.needs_keyphrases and source is None:
        raise TemplateError(
            f"template {tpl.name!r} expects keyphrases; provide a score source"
        )
    client = _resolve_client(cfg)
    if isinstance(cfg, LLMEndpointConfig):
        jobs = max(1, min(jobs, cfg.max_in_flight))

    def worker(doc: DocumentPair):
        calls = 0
        try:
            kp_texts: list[str] = []
            kps = None
            if tpl.needs_keyphrases:
                spans = segment(doc.source, granularity, stopwords)
                kset = select_keyphrases(spans, source.score(doc), k, match)
                kps = [p.text for p in kset.ordered(order)]
                kp_texts = kps
            prompt = render_prompt(tpl, doc, kps)
            req = CompletionRequest(prompt, max_completion_tokens, temperature)
            calls += 1
            resp = client.complete(req)
            rec = {
                "id": doc.id,
                "prompt": prompt,
                "summary": resp.text,
                "keyphrases": kp_texts,
            }
            return (doc.id, rec, None, calls)
        except KpsumError as exc:
            log.warning("document %s failed: %s", doc.id, exc)
            return (doc.id, None, str(exc), calls)

    results = _map_documents(worker, ds, jobs)
    return _finish_run(results, out, failure_cap)


def two_stage_summarize(
    ds: Dataset,
    extract_tpl: PromptTemplate,
    abstract_tpl: PromptTemplate,
    cfg,
    out: str | Path,
    max_completion_tokens: int = 512,
    temperature: float = 0.0,
    failure_cap: float = 0.1,
    jobs: int = 1,
) -> RunReport:
    """Extract-then-abstract baseline: two sequential completions per doc.

    Pass 1 renders extract_tpl on the source; pass 2 feeds the pass-1
    output into abstract_tpl's <text>. Both texts are persisted as
    {"id", "prompt", "extracted", "summary"}. An empty pass-1 completion
    marks the document failed and skips pass 2.
    """
    for tpl in (extract_tpl, abstract_tpl):
        if tpl.needs_keyphrases:
            raise TemplateError(f"two-stage template {tpl.name!r} must not expect keyphrases")
    client = _resolve_client(cfg)
    if isinstance(cfg, LLMEndpointConfig):
        jobs = max(1, min(jobs, cfg.max_in_flight))

    def worker(doc: DocumentPair):
        calls = 0
        try:
            prompt1 = render_prompt(extract_tpl, doc)
            calls += 1
            resp1 = client.complete(
                CompletionRequest(prompt1, max_completion_tokens, temperature)
            )
            intermediate = replace(doc, source=resp1.text)
            prompt2 = render_prompt(abstract_tpl, intermediate)
            calls += 1
            resp2 = client.complete(
                CompletionRequest(prompt2, max_completion_tokens, temperature)
            )
            rec = {
                "id": doc.id,
                "prompt": prompt2,
                "extracted": resp1.text,
                "summary": resp2.text,
            }
            return (doc.id, rec, None, calls)
        except KpsumError as exc:
            log.warning("document %s failed: %s", doc.id, exc)
            return (doc.id, None, str(exc), calls)

    results = _map_documents(worker, ds, jobs)
    return _finish_run(results, out, failure_cap)
