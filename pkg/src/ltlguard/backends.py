"""Language-model backends: full-text completion, optional step-wise token
distributions, deterministic mocks, and a chat-completions HTTP client.

Mocks are the default test substrate; the HTTP backend reports
step_wise=False, so remote models always go through the generate-then-repair
path rather than strict decoding.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import httpx

from .masking import Vocabulary
from .prompts import SENTINEL, TASK_HEADER

END_OF_OUTPUT = -1  # pseudo token id closing a step-wise generation


@dataclass(frozen=True)
class Prompt:
    system: str
    user: str
    metadata: dict = field(default_factory=dict, compare=False)

    def with_user_suffix(self, suffix: str) -> "Prompt":
        return Prompt(self.system, self.user + "\n\n" + suffix, dict(self.metadata))


@dataclass(frozen=True)
class CompletionParams:
    max_tokens: int = 256
    temperature: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class BackendCapability:
    full_text: bool = True
    step_wise: bool = False
    vocabulary: Vocabulary | None = None

    def __post_init__(self):
        if self.step_wise and self.vocabulary is None:
            raise ValueError("step_wise backends must expose a vocabulary")


class BackendError(Exception):
    def __init__(self, message: str, retries: int = 0):
        super().__init__(message)
        self.retries = retries


class TransportFailure(BackendError):
    pass


class RequestTimeout(BackendError):
    pass


class HttpFailure(BackendError):
    def __init__(self, message: str, status: int, retries: int = 0):
        super().__init__(message, retries)
        self.status = status


class ScriptExhausted(BackendError):
    pass


class UnsupportedCapability(Exception):
    pass


def prompt_digest(prompt: Prompt) -> str:
    h = hashlib.sha256()
    h.update(prompt.system.encode())
    h.update(b"\x1e")
    h.update(prompt.user.encode())
    return h.hexdigest()


class Backend:
    """Base backend; subclasses override complete() and, when step-wise,
    next_token_distribution()."""

    capability = BackendCapability()

    def complete(self, prompt: Prompt, params: CompletionParams | None = None) -> str:
        raise NotImplementedError

    def next_token_distribution(
        self, prompt: Prompt, generated_prefix: bytes
    ) -> list[tuple[int, float]]:
        raise UnsupportedCapability(
            f"{type(self).__name__} does not expose per-step token distributions"
        )


class ScriptedBackend(Backend):
    """Full-text mock driven by a response sequence or a prompt-digest table."""

    def __init__(
        self,
        responses: Sequence[str] | None = None,
        table: Mapping[str, str] | None = None,
    ):
        self._responses = list(responses) if responses is not None else None
        self._table = dict(table) if table is not None else None
        if self._responses is None and self._table is None:
            self._responses = []
        self.calls: list[Prompt] = []

    def complete(self, prompt: Prompt, params: CompletionParams | None = None) -> str:
        self.calls.append(prompt)
        if self._table is not None:
            key = prompt_digest(prompt)
            if key not in self._table:
                raise ScriptExhausted(f"no scripted response for prompt {key[:12]}...")
            return self._table[key]
        if not self._responses:
            raise ScriptExhausted("scripted response list is exhausted")
        return self._responses.pop(0)


class TokenScriptBackend(Backend):
    """Step-wise mock that emits a fixed token sequence, then end-of-output.

    The next scripted token is scored 1.0 and everything else 0.0; if the
    generated prefix has diverged from the script, end-of-output is proposed.
    """

    def __init__(self, vocabulary: Vocabulary, token_ids: Sequence[int]):
        self.capability = BackendCapability(step_wise=True, vocabulary=vocabulary)
        self._vocab = vocabulary
        self._ids = list(token_ids)
        self._bytes = b"".join(vocabulary.tokens[t] for t in self._ids)

    def complete(self, prompt: Prompt, params: CompletionParams | None = None) -> str:
        return self._bytes.decode("utf-8")

    def next_token_distribution(
        self, prompt: Prompt, generated_prefix: bytes
    ) -> list[tuple[int, float]]:
        consumed = 0
        offset = 0
        for tid in self._ids:
            chunk = self._vocab.tokens[tid]
            if generated_prefix[offset : offset + len(chunk)] != chunk:
                break
            offset += len(chunk)
            consumed += 1
        scripted = (
            self._ids[consumed]
            if offset == len(generated_prefix) and consumed < len(self._ids)
            else END_OF_OUTPUT
        )
        dist = [(scripted, 1.0)]
        if scripted != END_OF_OUTPUT:
            dist.append((END_OF_OUTPUT, 0.0))
        dist.extend((tid, 0.0) for tid in self._vocab.ids if tid != scripted)
        return dist


class AdversarialBackend(Backend):
    """Step-wise mock that always ranks a grammar-hostile token first and
    scores the rest pseudo-randomly, deterministic per (seed, prefix)."""

    def __init__(self, vocabulary: Vocabulary, seed: int = 0, favorite: bytes = b"&"):
        self.capability = BackendCapability(step_wise=True, vocabulary=vocabulary)
        self._vocab = vocabulary
        self._seed = seed
        self._favorite = [
            tid for tid in vocabulary.ids if vocabulary.tokens[tid] == favorite
        ]

    def complete(self, prompt: Prompt, params: CompletionParams | None = None) -> str:
        return "&"

    def next_token_distribution(
        self, prompt: Prompt, generated_prefix: bytes
    ) -> list[tuple[int, float]]:
        rng = random.Random(f"{self._seed}|{generated_prefix.hex()}")
        dist = []
        for tid in self._vocab.ids:
            score = 2.0 if tid in self._favorite else rng.random()
            dist.append((tid, score))
        dist.append((END_OF_OUTPUT, rng.random()))
        dist.sort(key=lambda pair: (-pair[1], pair[0]))
        return dist


_STOPWORDS = frozenset(
    """a an the is are was were be been being will shall must may might can
    could would should to of in on at by for with within every each all any
    some no not never it its itself there their them then than that this
    those these and or but if when whenever while once after before until
    eventually always sooner later left right""".split()
)

_NEGATION_CUES = ("not", "never", "no")
_UNIVERSAL_CUES = ("every", "each", "whenever", "all")
_EXISTENTIAL_CUES = ("some", "eventually", "sooner")


class RuleBasedMock(Backend):
    """Deterministic keyword-pattern translator used by the CLI mock backend.

    Not a model: a handful of cue-word rules over the requirement lines found
    after the task header, good enough to exercise the pipeline end to end.
    """

    def __init__(self, seed: int = 0):
        self._seed = seed

    def complete(self, prompt: Prompt, params: CompletionParams | None = None) -> str:
        reqs = _requirements_from_prompt(prompt.user)
        if not reqs:
            return SENTINEL
        return "\n".join(self._translate(r) for r in reqs)

    def _translate(self, requirement: str) -> str:
        words = re.findall(r"[a-z][a-z0-9_]*", requirement.lower())
        if not words:
            return SENTINEL
        content = [w for w in words if w not in _STOPWORDS]
        content = [w[:-1] if w.endswith("s") and len(w) > 3 else w for w in content]
        if not content:
            return SENTINEL
        negated = any(w in _NEGATION_CUES for w in words)
        universal = any(w in _UNIVERSAL_CUES for w in words)
        existential = any(w in _EXISTENTIAL_CUES for w in words)
        if negated:
            return f"G !{content[-1]}"
        if universal and len(content) >= 2:
            return f"G({content[0]} -> F {content[-1]})"
        if existential or len(content) == 1:
            return f"F {content[0]}"
        return f"G({content[0]} -> F {content[-1]})"


def _requirements_from_prompt(user_text: str) -> list[str]:
    lines = user_text.splitlines()
    reqs: list[str] = []
    seen_header = False
    for line in lines:
        if line.strip() == TASK_HEADER:
            seen_header = True
            reqs = []
            continue
        if seen_header and line.startswith("- "):
            reqs.append(line[2:].strip())
        elif seen_header and line.strip() and not line.startswith("- "):
            seen_header = False
    return reqs


def mock_from_script(spec: Mapping) -> Backend:
    """Build a mock backend from a declarative description.

    Keys: ``responses`` (sequential full-text), ``table`` (prompt digest ->
    text), ``tokens`` + ``vocabulary`` (step-wise script), or ``kind`` in
    {"adversarial", "rules"}.
    """
    if "responses" in spec:
        return ScriptedBackend(responses=spec["responses"])
    if "table" in spec:
        return ScriptedBackend(table=spec["table"])
    if "tokens" in spec:
        return TokenScriptBackend(spec["vocabulary"], spec["tokens"])
    kind = spec.get("kind")
    if kind == "adversarial":
        return AdversarialBackend(
            spec["vocabulary"], seed=spec.get("seed", 0),
            favorite=spec.get("favorite", b"&"),
        )
    if kind == "rules":
        return RuleBasedMock(seed=spec.get("seed", 0))
    raise ValueError(f"unrecognized mock script: {sorted(spec)}")


class HttpBackend(Backend):
    """Chat-completions client. Retries transport errors and 5xx twice with
    exponential backoff; 4xx fails immediately."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        *,
        timeout: float = 30.0,
        retries: int = 2,
        backoff: float = 0.25,
        transport: httpx.BaseTransport | None = None,
    ):
        if not endpoint.startswith(("http://", "https://")):
            raise ValueError(f"endpoint must be an http(s) URL: {endpoint!r}")
        if not model:
            raise ValueError("model name must be non-empty")
        self._url = endpoint.rstrip("/") + "/chat/completions"
        self._model = model
        self._retries = retries
        self._backoff = backoff
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            headers=headers, timeout=timeout, transport=transport
        )

    def request_body(self, prompt: Prompt, params: CompletionParams) -> dict:
        return {
            "model": self._model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "seed": params.seed,
        }

    def complete(self, prompt: Prompt, params: CompletionParams | None = None) -> str:
        params = params or CompletionParams()
        body = self.request_body(prompt, params)
        attempt = 0
        while True:
            try:
                response = self._client.post(self._url, json=body)
            except httpx.TimeoutException as e:
                if attempt < self._retries:
                    time.sleep(self._backoff * 2**attempt)
                    attempt += 1
                    continue
                raise RequestTimeout(
                    f"request timed out after {attempt} retries: {e}", attempt
                ) from e
            except httpx.TransportError as e:
                if attempt < self._retries:
                    time.sleep(self._backoff * 2**attempt)
                    attempt += 1
                    continue
                raise TransportFailure(
                    f"transport failure after {attempt} retries: {e}", attempt
                ) from e
            if response.status_code >= 500 and attempt < self._retries:
                time.sleep(self._backoff * 2**attempt)
                attempt += 1
                continue
            if response.status_code >= 400:
                raise HttpFailure(
                    f"HTTP {response.status_code} from {self._url} "
                    f"after {attempt} retries",
                    response.status_code,
                    attempt,
                )
            data = response.json()
            return data["choices"][0]["message"]["content"].strip()


def http_backend(
    endpoint: str, model: str, auth: str | None = None, **kwargs
) -> HttpBackend:
    return HttpBackend(endpoint, model, api_key=auth, **kwargs)


def request_digest(body: dict) -> str:
    return hashlib.sha256(
        json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def recorded_transport(path) -> httpx.MockTransport:
    """Replay transport for recorded exchanges.

    The file is JSON Lines of {"request_hash", "response_body"} where
    request_hash is request_digest() of the POST body and response_body is the
    full chat-completions response object.
    """
    recorded: dict[str, dict] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            recorded[entry["request_hash"]] = entry["response_body"]

    def handler(request: httpx.Request) -> httpx.Response:
        key = request_digest(json.loads(request.content.decode()))
        if key not in recorded:
            return httpx.Response(404, json={"error": "no recorded response"})
        return httpx.Response(200, json=recorded[key])

    return httpx.MockTransport(handler)


# A compact vocabulary for step-wise mocks: LTL lexemes, atom words, lexeme
# fragments that straddle token boundaries, and a few never-valid junk tokens.
_TEST_TOKEN_TEXTS = [
    b"G", b"F", b"X", b"U", b"&", b"|", b"!", b"->", b"<->", b"(", b")",
    b"true", b"false", b" ",
    b"p", b"q", b"r", b"s",
    b"request", b"granted", b"grant", b"safe", b"message", b"delivered",
    b"error", b"logged", b"order", b"shipped", b"task", b"completed",
    b"button", b"press", b"processed", b"made",
    b"gran", b"ted", b"ted)", b"re", b"quest", b"ready",
    b"G(", b"F ", b"(p", b"q)", b" -> ", b" U ", b"))", b"((", b"!(",
    b";", b"?", b"#",
]


def mock_vocabulary() -> Vocabulary:
    """The ~50-token vocabulary shipped for step-wise mock backends."""
    return Vocabulary({i: t for i, t in enumerate(_TEST_TOKEN_TEXTS)})
