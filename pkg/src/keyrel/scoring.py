"""Token scorers behind a common interface.

A scorer maps (context, target) to one log-probability per target token.
The returned token texts concatenate exactly to the target, so callers can
locate keyword positions by length arithmetic. The built-in scorer is a
deterministic smoothed count model over context tokens; the remote scorer
speaks a small HTTP protocol to an external model server.
"""
from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Protocol

import httpx

from .bpe import Vocabulary, encode
from .errors import ProtocolError, TransportError

DEFAULT_MASK = "<mask>"


@dataclass(frozen=True)
class ScoreResponse:
    """Per-token log-probabilities for one (context, target) pair."""

    tokens: tuple[str, ...]
    logprobs: tuple[float, ...]
    model_id: str


class Scorer(Protocol):
    model_id: str

    def score(self, context: str, target: str) -> ScoreResponse: ...


def validate_response(tokens: object, logprobs: object, model_id: object) -> ScoreResponse:
    """Check protocol invariants and freeze the response."""
    if not isinstance(tokens, (list, tuple)) or not all(isinstance(t, str) for t in tokens):
        raise ProtocolError("tokens must be a list of strings")
    if not isinstance(logprobs, (list, tuple)) or not all(
        isinstance(p, (int, float)) and not isinstance(p, bool) for p in logprobs
    ):
        raise ProtocolError("logprobs must be a list of numbers")
    if len(tokens) != len(logprobs):
        raise ProtocolError(
            f"arity mismatch: {len(tokens)} tokens vs {len(logprobs)} logprobs"
        )
    values = tuple(float(p) for p in logprobs)
    if not all(math.isfinite(p) for p in values):
        raise ProtocolError("logprobs must be finite")
    if not isinstance(model_id, str) or not model_id:
        raise ProtocolError("model_id must be a non-empty string")
    return ScoreResponse(tuple(tokens), values, model_id)


def _char_grouped(texts: list[str]) -> list[str]:
    """Merge pieces so none ends inside a multi-byte character.

    Byte-level tokens can split a character; the wire format is UTF-8, so
    pieces are regrouped to close on character boundaries. Grouping keeps
    the concatenation identical to the input text.
    """
    out: list[str] = []
    buffer = b""
    for text in texts:
        buffer += text.encode("utf-8", errors="surrogateescape")
        try:
            decoded = buffer.decode("utf-8")
        except UnicodeDecodeError:
            continue
        out.append(decoded)
        buffer = b""
    if buffer:
        out.append(buffer.decode("utf-8", errors="surrogateescape"))
    return out


def mask_aware_pieces(vocab: Vocabulary, text: str, mask_token: str) -> list[str]:
    """Tokenize text, treating every occurrence of the mask token as atomic."""
    pieces: list[str] = []
    parts = text.split(mask_token)
    for i, part in enumerate(parts):
        if part:
            pieces.extend(_char_grouped([t.text for t in encode(vocab, part)]))
        if i < len(parts) - 1:
            pieces.append(mask_token)
    return pieces


class BuiltinScorer:
    """Smoothed token-count model over the context.

    logprob(t) = ln((count(t, context) + alpha) / (|context| + alpha * V))
    where V counts the distinct tokens of context and target plus the mask
    token. Scores are position-independent and deterministic, and a token
    seen more often in the context scores strictly higher.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        alpha: float = 1.0,
        mask_token: str = DEFAULT_MASK,
    ):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.vocab = vocab
        self.alpha = alpha
        self.mask_token = mask_token
        self.model_id = f"builtin-count/alpha={alpha:g}"

    def score(self, context: str, target: str) -> ScoreResponse:
        context_tokens = mask_aware_pieces(self.vocab, context, self.mask_token)
        target_tokens = mask_aware_pieces(self.vocab, target, self.mask_token)
        counts = Counter(context_tokens)
        vocabulary = set(context_tokens) | set(target_tokens) | {self.mask_token}
        denominator = len(context_tokens) + self.alpha * len(vocabulary)
        logprobs = tuple(
            math.log((counts[t] + self.alpha) / denominator) for t in target_tokens
        )
        return ScoreResponse(tuple(target_tokens), logprobs, self.model_id)


class UniformScorer:
    """Context-independent scorer: every target token gets the same mass.

    Useful as a null model; any score difference between two contexts is
    zero by construction.
    """

    def __init__(self, vocab: Vocabulary, mask_token: str = DEFAULT_MASK):
        self.vocab = vocab
        self.mask_token = mask_token
        self.model_id = "uniform"

    def score(self, context: str, target: str) -> ScoreResponse:
        target_tokens = mask_aware_pieces(self.vocab, target, self.mask_token)
        size = len(set(target_tokens)) + 1  # one slot reserved for the mask
        logprob = math.log(1.0 / size)
        return ScoreResponse(
            tuple(target_tokens), tuple(logprob for _ in target_tokens), self.model_id
        )


class RemoteScorer:
    """Client for an HTTP scorer endpoint.

    POST {base_url}/score with {"context", "target"} yields {"tokens",
    "logprobs", "model_id"}. Concurrent use is limited by a semaphore so a
    parallel evaluation cannot flood the server.
    """

    def __init__(self, base_url: str, timeout: float = 30.0, max_inflight: int = 8):
        if max_inflight < 1:
            raise ValueError("max_inflight must be at least 1")
        self.base_url = base_url.rstrip("/")
        self.model_id = f"remote:{self.base_url}"
        self._client = httpx.Client(base_url=self.base_url, timeout=timeout)
        self._gate = threading.Semaphore(max_inflight)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RemoteScorer":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def health(self) -> bool:
        try:
            response = self._client.get("/health")
        except httpx.HTTPError:
            return False
        if response.status_code != 200:
            return False
        try:
            return response.json().get("status") == "ok"
        except ValueError:
            return False

    def score(self, context: str, target: str) -> ScoreResponse:
        with self._gate:
            try:
                response = self._client.post(
                    "/score", json={"context": context, "target": target}
                )
            except httpx.TimeoutException as exc:
                raise TransportError(f"scorer timed out: {exc}") from exc
            except httpx.HTTPError as exc:
                raise TransportError(f"scorer unreachable: {exc}") from exc
        if response.status_code != 200:
            raise ProtocolError(f"scorer returned status {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise ProtocolError("scorer response is not valid JSON") from exc
        if not isinstance(payload, dict):
            raise ProtocolError("scorer response must be a JSON object")
        result = validate_response(
            payload.get("tokens"), payload.get("logprobs"), payload.get("model_id")
        )
        self.model_id = result.model_id
        return result
