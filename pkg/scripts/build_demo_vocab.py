"""Build the compact demo vocabulary shipped with the package.

Constructs a merge list, by simulation against the real encoder, such that a
chosen set of pre-token chunks encodes to hand-picked segmentations. Every
other input falls back to shorter merges or single bytes, which is still a
valid encoding. Run from the repository root:

    python scripts/build_demo_vocab.py
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from keyrel.bpe import BYTE_ENCODER, text_to_symbol  # noqa: E402

# Chunk -> token pieces it must encode to. Chunks are what the pre-token
# pattern yields, so mid-sentence words carry their leading space.
TARGETS: dict[str, tuple[str, ...]] = {
    "Biden": ("B", "iden"),
    " is": (" is",),
    " the": (" the",),
    " president": (" president",),
    " of": (" of",),
    " United": (" United",),
    " States": (" States",),
    "Obama": ("Obama",),
    " Obama": (" Obama",),
    " Biden": (" B", "iden"),
    " a": (" a",),
    " b": (" b",),
    " c": (" c",),
    " d": (" d",),
    " e": (" e",),
    " and": (" and",),
    " in": (" in",),
    " on": (" on",),
    " was": (" was",),
    " to": (" to",),
    " died": (" died",),
    " born": (" born",),
    " said": (" said",),
    " with": (" with",),
    " that": (" that",),
    " for": (" for",),
    " from": (" from",),
    " this": (" this",),
    " are": (" are",),
    " were": (" were",),
    " system": (" system",),
    " report": (" report",),
    " city": (" city",),
    " plan": (" plan",),
    " new": (" new",),
    " old": (" old",),
    " her": (" her",),
    " his": (" his",),
    " by": (" by",),
    " at": (" at",),
    "The": ("The",),
    " year": (" year",),
    " day": (" day",),
}


def encode_chunk(symbols: list[str], ranks: dict[tuple[str, str], int]) -> list[str]:
    symbols = list(symbols)
    while len(symbols) > 1:
        best = None
        for pair in zip(symbols, symbols[1:]):
            rank = ranks.get(pair)
            if rank is not None and (best is None or rank < best[0]):
                best = (rank, pair)
        if best is None:
            break
        pair = best[1]
        merged: list[str] = []
        i = 0
        while i < len(symbols):
            if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
                merged.append(symbols[i] + symbols[i + 1])
                i += 2
            else:
                merged.append(symbols[i])
                i += 1
        symbols = merged
    return symbols


def piece_boundaries(pieces: tuple[str, ...]) -> list[int]:
    bounds = [0]
    for piece in pieces:
        bounds.append(bounds[-1] + len(text_to_symbol(piece)))
    return bounds


def is_refinement(symbols: list[str], bounds: list[int]) -> bool:
    """True when every symbol lies inside one target piece."""
    offset = 0
    for sym in symbols:
        end = offset + len(sym)
        if not any(lo <= offset and end <= hi for lo, hi in zip(bounds, bounds[1:])):
            return False
        offset = end
    return True


def main() -> None:
    chunk_syms = {c: [BYTE_ENCODER[b] for b in c.encode("utf-8")] for c in TARGETS}
    target_syms = {c: tuple(text_to_symbol(p) for p in TARGETS[c]) for c in TARGETS}
    bounds = {c: piece_boundaries(TARGETS[c]) for c in TARGETS}

    merges: list[tuple[str, str]] = []
    ranks: dict[tuple[str, str], int] = {}

    def all_safe(candidate: tuple[str, str]) -> bool:
        trial = dict(ranks)
        trial[candidate] = len(merges)
        return all(
            is_refinement(encode_chunk(chunk_syms[c], trial), bounds[c]) for c in TARGETS
        )

    for _ in range(10000):
        done = True
        for chunk in TARGETS:
            current = encode_chunk(chunk_syms[chunk], ranks)
            if tuple(current) == target_syms[chunk]:
                continue
            done = False
            # pick the first adjacent pair fully inside one target piece
            offset = 0
            picked = None
            for a, b in zip(current, current[1:]):
                end = offset + len(a) + len(b)
                inside = any(
                    lo <= offset and end <= hi
                    for lo, hi in zip(bounds[chunk], bounds[chunk][1:])
                )
                pair = (a, b)
                if inside and pair not in ranks and all_safe(pair):
                    picked = pair
                    break
                offset += len(a)
            if picked is None:
                raise SystemExit(f"stuck while building merges for chunk {chunk!r}")
            ranks[picked] = len(merges)
            merges.append(picked)
        if done:
            break
    else:
        raise SystemExit("merge construction did not converge")

    for chunk in TARGETS:
        got = tuple(encode_chunk(chunk_syms[chunk], ranks))
        assert got == target_syms[chunk], (chunk, got, target_syms[chunk])

    token_to_id = {BYTE_ENCODER[b]: b for b in range(256)}
    next_id = 256
    for a, b in merges:
        merged = a + b
        if merged not in token_to_id:
            token_to_id[merged] = next_id
            next_id += 1

    out_dir = Path(__file__).resolve().parents[1] / "src" / "keyrel" / "data"
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab_file = out_dir / "vocab.json"
    merges_file = out_dir / "merges.txt"
    vocab_file.write_text(
        json.dumps(token_to_id, ensure_ascii=False, indent=0), encoding="utf-8"
    )
    merges_file.write_text(
        "#version: demo\n" + "".join(f"{a} {b}\n" for a, b in merges), encoding="utf-8"
    )
    print(f"wrote {vocab_file} ({len(token_to_id)} tokens)")
    print(f"wrote {merges_file} ({len(merges)} merges)")


if __name__ == "__main__":
    main()
