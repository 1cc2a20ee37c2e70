"""Retrieval-augmented few-shot prompting: lifted example pairs, embedding
providers, exact top-k cosine retrieval, and prompt assembly.

The builtin provider hashes character trigrams and word unigrams into a
fixed-dimension vector, so retrieval is fully deterministic and needs no
model downloads; the remote provider slot covers sentence-transformer parity
behind the same interface.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
import zlib
from dataclasses import dataclass, field
from typing import Sequence

import httpx
import numpy as np

from .backends import Prompt
from .formulas import atoms
from .prompts import EXAMPLES_HEADER, GRAMMAR_BLOCK, TASK_HEADER
from .syntax import ParseDiagnostic, parse


class CorpusError(Exception):
    pass


class EmptyCorpus(CorpusError):
    pass


@dataclass(frozen=True)
class LiftedPair:
    """An NL/LTL example with atoms abstracted to atom_1, atom_2, ..."""

    nl: str
    ltl: str
    tags: tuple[str, ...] = ()
    source: str = ""
    paraphrase_of: int | None = None


def validate_pair(pair: LiftedPair) -> list[str]:
    """Problems with the pair; empty when it satisfies the lifted-pair rules."""
    problems = []
    parsed = parse(pair.ltl)
    if isinstance(parsed, ParseDiagnostic):
        problems.append(f"ltl does not parse: {parsed.message}")
        return problems
    names = atoms(parsed)
    expected = [f"atom_{i}" for i in range(1, len(names) + 1)]
    if names != expected:
        problems.append(
            f"placeholders must be atom_1..atom_{len(names)} in first-occurrence "
            f"order, got {names}"
        )
    for name in names:
        if name not in pair.nl:
            problems.append(f"placeholder {name} missing from the NL text")
    return problems


def load_corpus(path) -> list[LiftedPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {e}") from e
            try:
                pairs.append(
                    LiftedPair(
                        nl=obj["nl"],
                        ltl=obj["ltl"],
                        tags=tuple(obj.get("tags", ())),
                        source=obj.get("source", ""),
                        paraphrase_of=obj.get("paraphrase_of"),
                    )
                )
            except KeyError as e:
                raise CorpusError(f"{path}:{lineno}: missing field {e}") from e
    return pairs


def corpus_digest(pairs: Sequence[LiftedPair]) -> str:
    h = hashlib.sha256()
    for p in pairs:
        h.update(json.dumps([p.nl, p.ltl, list(p.tags)], sort_keys=True).encode())
        h.update(b"\x00")
    return h.hexdigest()


_WORD = re.compile(r"[a-z0-9_]+")


class BuiltinEmbedding:
    """Hashed character-trigram + word-unigram embedding, L2-normalized.

    Deterministic per text: features are hashed with crc32 (stable across
    processes) into a signed fixed-dimension vector.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.id = f"builtin-trigram-{dim}"

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        normalized = " ".join(_WORD.findall(text.lower()))
        vec = np.zeros(self.dim, dtype=np.float64)
        features = [f"w:{w}" for w in normalized.split()]
        padded = f" {normalized} "
        features.extend(f"t:{padded[i:i + 3]}" for i in range(len(padded) - 2))
        for feat in features:
            h = zlib.crc32(feat.encode())
            sign = 1.0 if (h >> 16) & 1 else -1.0
            vec[h % self.dim] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[0] = 1.0
            norm = 1.0
        return (vec / norm).astype(np.float32)


class RemoteEmbedding:
    """Embeddings endpoint client (POST {endpoint}/embeddings)."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        *,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        if not endpoint.startswith(("http://", "https://")):
            raise ValueError(f"endpoint must be an http(s) URL: {endpoint!r}")
        self._url = endpoint.rstrip("/") + "/embeddings"
        self._model = model
        self.id = f"remote-{model}"
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        response = self._client.post(
            self._url, json={"model": self._model, "input": text}
        )
        response.raise_for_status()
        vec = np.asarray(response.json()["data"][0]["embedding"], dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ValueError("remote embedding has zero norm")
        return (vec / norm).astype(np.float32)


def embed(provider, text: str) -> np.ndarray:
    return provider.embed(text)


@dataclass
class RetrievalIndex:
    pairs: tuple[LiftedPair, ...]
    matrix: np.ndarray  # one unit-normalized row per pair
    provider: object = field(compare=False, repr=False, default=None)
    provider_id: str = ""
    built_at: float = field(compare=False, default=0.0)

    def __eq__(self, other):
        if not isinstance(other, RetrievalIndex):
            return NotImplemented
        return (
            self.pairs == other.pairs
            and self.provider_id == other.provider_id
            and np.array_equal(self.matrix, other.matrix)
        )

    def __len__(self) -> int:
        return len(self.pairs)

    def retrieve(self, query: str, k: int) -> list[tuple[LiftedPair, float]]:
        """Top-k by cosine similarity; ties broken by corpus insertion order.

        Scores are per-row float64 dot products so the ranking is bit-stable
        and matches an exhaustive scan exactly.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.pairs:
            raise ValueError("cannot retrieve from an empty index")
        if self.provider is None:
            raise ValueError("index has no embedding provider attached")
        query_vec = np.asarray(self.provider.embed(query), dtype=np.float64)
        rows = self.matrix.astype(np.float64)
        scores = [float(np.dot(rows[i], query_vec)) for i in range(len(self.pairs))]
        order = sorted(range(len(self.pairs)), key=lambda i: -scores[i])
        return [(self.pairs[i], scores[i]) for i in order[:k]]


def build_index(pairs: Sequence[LiftedPair], provider) -> RetrievalIndex:
    """Validate and embed all pairs. Rejects an empty corpus, duplicate
    (nl, ltl) pairs, and invalid pairs (reported with their index)."""
    if not pairs:
        raise EmptyCorpus("corpus has no pairs")
    problems = []
    seen: dict[tuple[str, str], int] = {}
    for i, pair in enumerate(pairs):
        key = (pair.nl, pair.ltl)
        if key in seen:
            problems.append(f"pair {i} duplicates pair {seen[key]}: {pair.nl!r}")
        else:
            seen[key] = i
        problems.extend(f"pair {i}: {p}" for p in validate_pair(pair))
    if problems:
        raise CorpusError("; ".join(problems))
    matrix = np.stack([provider.embed(p.nl) for p in pairs])
    return RetrievalIndex(
        pairs=tuple(pairs),
        matrix=matrix,
        provider=provider,
        provider_id=provider.id,
        built_at=time.time(),
    )


def retrieve(
    index: RetrievalIndex, query: str, k: int
) -> list[tuple[LiftedPair, float]]:
    return index.retrieve(query, k)


def assemble_prompt(
    system: str,
    examples: Sequence[LiftedPair],
    requirements: Sequence[str],
    include_grammar: bool = False,
) -> Prompt:
    """Deterministic prompt layout: system (plus grammar block when enabled),
    one NL/LTL stanza per retrieved example, then the task block."""
    if not system:
        raise ValueError("system text must be non-empty")
    system_text = system
    if include_grammar:
        system_text = system + "\n\n" + GRAMMAR_BLOCK
    blocks = []
    if examples:
        stanzas = "\n\n".join(f"NL: {p.nl}\nLTL: {p.ltl}" for p in examples)
        blocks.append(f"{EXAMPLES_HEADER}\n\n{stanzas}")
    task_lines = "\n".join(f"- {r}" for r in requirements)
    blocks.append(f"{TASK_HEADER}\n{task_lines}")
    return Prompt(system=system_text, user="\n\n".join(blocks))


_INDEX_MAGIC = b"LTLGIDX1"


def save_index(index: RetrievalIndex, path) -> None:
    header = {
        "version": 1,
        "provider_id": index.provider_id,
        "corpus": corpus_digest(index.pairs),
        "dim": int(index.matrix.shape[1]),
        "pairs": [
            {
                "nl": p.nl,
                "ltl": p.ltl,
                "tags": list(p.tags),
                "source": p.source,
                "paraphrase_of": p.paraphrase_of,
            }
            for p in index.pairs
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_INDEX_MAGIC)
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        fh.write(index.matrix.astype(np.float32).tobytes())


def load_index(path, provider=None) -> RetrievalIndex:
    """Load a cache; when a provider is supplied it must match the one the
    cache was built with (queries need it)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_INDEX_MAGIC))
        if magic != _INDEX_MAGIC:
            raise ValueError("not an index cache file")
        size = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(size).decode())
        raw = fh.read()
    if provider is not None and provider.id != header["provider_id"]:
        raise ValueError(
            f"index cache was built with provider {header['provider_id']!r}, "
            f"got {provider.id!r}"
        )
    pairs = tuple(
        LiftedPair(
            nl=p["nl"],
            ltl=p["ltl"],
            tags=tuple(p["tags"]),
            source=p["source"],
            paraphrase_of=p["paraphrase_of"],
        )
        for p in header["pairs"]
    )
    if corpus_digest(pairs) != header["corpus"]:
        raise ValueError("index cache is internally inconsistent")
    matrix = np.frombuffer(raw, dtype=np.float32).reshape(len(pairs), header["dim"])
    return RetrievalIndex(
        pairs=pairs, matrix=matrix, provider=provider,
        provider_id=header["provider_id"],
    )
