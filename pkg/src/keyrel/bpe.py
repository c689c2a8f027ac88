"""Byte-level byte pair encoding with GPT-2 compatible vocabulary files.

A vocabulary is defined by two files: a JSON object mapping token strings to
integer ids, and a merges file with one space-separated symbol pair per line
in priority order. Token strings use the reversible byte-to-unicode mapping,
so any byte sequence can be encoded and decoded losslessly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import regex

from .errors import IntegrityError, ParseError

# Pre-tokenization pattern: contraction suffixes, letter runs, digit runs and
# punctuation runs (each with an optional leading space), then whitespace.
# Merges never cross the chunk boundaries this pattern produces.
_PRETOKEN = regex.compile(
    r"""'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"""
)

_CHUNK_CACHE_LIMIT = 65536


def _build_byte_maps() -> tuple[dict[int, str], dict[str, int]]:
    """Map every byte to a printable unicode character, reversibly."""
    visible = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    codepoints = visible[:]
    shift = 0
    for byte in range(256):
        if byte not in visible:
            visible.append(byte)
            codepoints.append(256 + shift)
            shift += 1
    encoder = {b: chr(c) for b, c in zip(visible, codepoints)}
    decoder = {c: b for b, c in encoder.items()}
    return encoder, decoder


BYTE_ENCODER, BYTE_DECODER = _build_byte_maps()


def symbol_to_bytes(symbol: str) -> bytes:
    """Convert a vocabulary symbol back to the bytes it stands for."""
    try:
        return bytes(BYTE_DECODER[ch] for ch in symbol)
    except KeyError as exc:
        raise IntegrityError(f"symbol contains a non-vocabulary character: {symbol!r}") from exc


def text_to_symbol(text: str) -> str:
    """Convert plain text to the byte-mapped symbol form used in vocab files."""
    return "".join(BYTE_ENCODER[b] for b in text.encode("utf-8"))


@dataclass(frozen=True)
class Token:
    """One encoded token with its byte span in the original input."""

    text: str
    raw: str
    id: int
    start: int
    end: int


class TokenSequence:
    """Sequence of tokens whose byte spans partition the encoded input."""

    __slots__ = ("tokens",)

    def __init__(self, tokens: Sequence[Token]):
        self.tokens = list(tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __getitem__(self, index: int) -> Token:
        return self.tokens[index]

    @property
    def ids(self) -> list[int]:
        return [t.id for t in self.tokens]

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]


class Vocabulary:
    """Validated, immutable token table plus ordered merge rules."""

    def __init__(self, token_to_id: dict[str, int], merges: Sequence[tuple[str, str]]):
        ids = list(token_to_id.values())
        if len(set(ids)) != len(ids):
            raise IntegrityError("token ids are not unique")
        missing = [c for c in BYTE_ENCODER.values() if c not in token_to_id]
        if missing:
            raise IntegrityError(
                f"vocabulary lacks {len(missing)} single-byte tokens needed for byte fallback"
            )
        representable = set(BYTE_ENCODER.values())
        ranks: dict[tuple[str, str], int] = {}
        for rank, pair in enumerate(merges):
            left, right = pair
            if pair in ranks:
                raise IntegrityError(f"duplicate merge pair at rank {rank}: {left} {right}")
            if left not in representable or right not in representable:
                raise IntegrityError(
                    f"merge at rank {rank} references unknown symbol: {left} {right}"
                )
            merged = left + right
            if merged not in token_to_id:
                raise IntegrityError(f"merge result missing from vocabulary: {merged!r}")
            representable.add(merged)
            ranks[pair] = rank
        self.token_to_id = dict(token_to_id)
        self.id_to_token = {i: t for t, i in token_to_id.items()}
        self.merges = [tuple(p) for p in merges]
        self._ranks = ranks
        self._cache: dict[bytes, tuple[str, ...]] = {}

    @property
    def size(self) -> int:
        return len(self.token_to_id)

    def _merge_chunk(self, chunk: bytes) -> tuple[str, ...]:
        """Greedily apply merges to one pre-token chunk, lowest rank first."""
        cached = self._cache.get(chunk)
        if cached is not None:
            return cached
        symbols = [BYTE_ENCODER[b] for b in chunk]
        ranks = self._ranks
        while len(symbols) > 1:
            best_rank = None
            best_pair = None
            for pair in zip(symbols, symbols[1:]):
                rank = ranks.get(pair)
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank = rank
                    best_pair = pair
            if best_pair is None:
                break
            merged: list[str] = []
            i = 0
            while i < len(symbols):
                if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best_pair:
                    merged.append(symbols[i] + symbols[i + 1])
                    i += 2
                else:
                    merged.append(symbols[i])
                    i += 1
            symbols = merged
        result = tuple(symbols)
        if len(self._cache) < _CHUNK_CACHE_LIMIT:
            self._cache[chunk] = result
        return result


def load_vocabulary(vocab_path: str | Path, merges_path: str | Path) -> Vocabulary:
    """Load and validate a vocabulary from GPT-2 style files."""
    vocab_path = Path(vocab_path)
    merges_path = Path(merges_path)

    def reject_duplicates(pairs: list[tuple[str, object]]) -> dict[str, object]:
        table: dict[str, object] = {}
        for key, value in pairs:
            if key in table:
                raise IntegrityError(f"{vocab_path}: duplicate token {key!r}")
            table[key] = value
        return table

    try:
        raw = json.loads(vocab_path.read_text(encoding="utf-8"), object_pairs_hook=reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{vocab_path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{vocab_path}: expected a JSON object of token to id")
    token_to_id: dict[str, int] = {}
    for token, value in raw.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise ParseError(f"{vocab_path}: id for token {token!r} is not an integer")
        token_to_id[token] = value

    merges: list[tuple[str, str]] = []
    with merges_path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if lineno == 1 and line.startswith("#"):
                continue  # optional version header
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(
                    f"{merges_path}:{lineno}: expected two space-separated symbols"
                )
            merges.append((parts[0], parts[1]))
    return Vocabulary(token_to_id, merges)


def encode(vocab: Vocabulary, text: str | bytes) -> TokenSequence:
    """Encode text (or raw bytes) into tokens with byte spans."""
    if isinstance(text, bytes):
        working = text.decode("utf-8", errors="surrogateescape")
    elif isinstance(text, str):
        working = text
    else:
        raise TypeError(f"expected str or bytes, got {type(text).__name__}")
    tokens: list[Token] = []
    offset = 0
    for match in _PRETOKEN.finditer(working):
        chunk_bytes = match.group().encode("utf-8", errors="surrogateescape")
        for raw in vocab._merge_chunk(chunk_bytes):
            piece = symbol_to_bytes(raw)
            token_id = vocab.token_to_id.get(raw)
            if token_id is None:
                raise IntegrityError(f"merged symbol missing from vocabulary: {raw!r}")
            end = offset + len(piece)
            tokens.append(
                Token(
                    text=piece.decode("utf-8", errors="surrogateescape"),
                    raw=raw,
                    id=token_id,
                    start=offset,
                    end=end,
                )
            )
            offset = end
    return TokenSequence(tokens)


def decode_bytes(vocab: Vocabulary, encoded: TokenSequence | Iterable[int]) -> bytes:
    """Decode tokens or raw ids back into the original byte string."""
    if isinstance(encoded, TokenSequence):
        ids: Iterable[int] = encoded.ids
    else:
        ids = encoded
    pieces: list[bytes] = []
    for token_id in ids:
        raw = vocab.id_to_token.get(token_id)
        if raw is None:
            raise KeyError(f"unknown token id: {token_id}")
        pieces.append(symbol_to_bytes(raw))
    return b"".join(pieces)


def decode(vocab: Vocabulary, encoded: TokenSequence | Iterable[int]) -> str:
    """Decode tokens or raw ids back into text."""
    return decode_bytes(vocab, encoded).decode("utf-8", errors="surrogateescape")


def first_subtoken(vocab: Vocabulary, word: str, context_prefix: str = "") -> str:
    """Return the text of the first token covering `word` after the prefix.

    The prefix matters: a word is usually encoded with its leading space, so
    the first token of "president" differs between sentence-initial and
    mid-sentence occurrences.
    """
    if not word:
        raise ValueError("word must be non-empty")
    seq = encode(vocab, context_prefix + word)
    target = len(context_prefix.encode("utf-8"))
    for token in seq:
        if token.start <= target < token.end:
            return token.text
    raise IntegrityError("token spans do not cover the word start")
