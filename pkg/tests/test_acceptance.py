"""End-to-end acceptance gate.

One test per guaranteed behaviour. Each prints a single [PASS]/[FAIL] line
directly to the terminal (bypassing capture) and enforces its runtime
budget, so a full run doubles as a checklist.
"""
from __future__ import annotations

import itertools
import json
import random
import re
import time
from pathlib import Path
from statistics import mean

import pytest

import test_bpe
import test_openie
import test_rouge
from keyrel.annotate import ONLY_NOUN, Gazetteer
from keyrel.bpe import decode_bytes, encode, load_vocabulary
from keyrel.cli import main
from keyrel.coco import build_masked_document, coco_score, unmask
from keyrel.corpus import Document, emit_jsonl
from keyrel.openie import annotate_document, extract_triples, select_key_relation
from keyrel.prompts import (
    PromptedDocument,
    build_senex_dataset,
    filter_by_length,
    serialize_relation,
)
from keyrel.rouge import display_value, rouge_n, score_pair
from keyrel.scoring import BuiltinScorer, UniformScorer

GOLDEN = Path(__file__).parent / "fixtures" / "golden"


def _report(capsys, name: str, budget: float | None, fn) -> None:
    """Run one criterion, print a single visible verdict line."""
    start = time.perf_counter()
    try:
        detail = fn() or ""
    except BaseException:
        with capsys.disabled():
            print(f"[FAIL] {name}")
        raise
    elapsed = time.perf_counter() - start
    if budget is not None and elapsed >= budget:
        with capsys.disabled():
            print(f"[FAIL] {name}: runtime {elapsed:.1f}s exceeds budget {budget:.0f}s")
        pytest.fail(f"{name} exceeded runtime budget: {elapsed:.1f}s >= {budget:.0f}s")
    with capsys.disabled():
        print(f"[PASS] {name}{detail} ({elapsed:.2f}s)")


def test_tokenizer_fidelity(capsys, vocab):
    def check() -> str:
        vocabularies = [("bundled", vocab)]
        paths = test_bpe._gpt2_paths()
        if paths:
            vocabularies.append(("gpt2", load_vocabulary(*paths)))
        for _, v in vocabularies:
            assert encode(v, test_bpe.REFERENCE_SENTENCE).texts == test_bpe.REFERENCE_TOKENS
        rng = random.Random(20240814)
        for _ in range(1000):
            blob = rng.randbytes(rng.randint(0, 64))
            assert decode_bytes(vocab, encode(vocab, blob)) == blob
        return " [" + "+".join(name for name, _ in vocabularies) + "]"

    _report(capsys, "tokenizer-fidelity", 5.0, check)


def test_rouge_oracle_equivalence(capsys):
    def check() -> str:
        words = ["the", "cat", "sat", "ran", "dog"]
        rng = random.Random(20240815)
        for _ in range(10_000):
            cand = " ".join(rng.choices(words, k=rng.randint(0, 8)))
            ref = " ".join(rng.choices(words, k=rng.randint(0, 8)))
            mine = score_pair(cand, ref)
            cand_t = test_rouge.oracle_tokens(cand)
            ref_t = test_rouge.oracle_tokens(ref)
            for n in (1, 2):
                expected = test_rouge.oracle_scores(
                    *test_rouge.oracle_overlap_n(cand_t, ref_t, n)
                )
                got = mine[f"rouge{n}"]
                assert abs(got.precision - expected[0]) <= 1e-12
                assert abs(got.recall - expected[1]) <= 1e-12
                assert abs(got.f1 - expected[2]) <= 1e-12
            lcs = test_rouge.oracle_lcs(cand_t, ref_t)
            expected = test_rouge.oracle_scores(lcs, len(cand_t), len(ref_t))
            assert abs(mine["rougeL"].f1 - expected[2]) <= 1e-12
        hand = rouge_n("the cat sat", "the cat ran", 1)
        assert abs(hand.f1 * 100 - 66.67) < 0.01
        assert display_value(hand.f1) == "66.67"
        return " [10000 pairs]"

    _report(capsys, "rouge-oracle-equivalence", 60.0, check)


def test_relation_extraction(capsys, lexicon):
    def check() -> str:
        gazetteer = Gazetteer(dict(test_openie.ENTITY_POOL))
        expectations = [
            ("Barack Obama was born in Hawaii.", ("Barack Obama", "was born in", "Hawaii")),
            ("Sally Forrest died on March 15.", ("Sally Forrest", "died on", "March 15")),
        ]
        for text, expected in expectations:
            annotated = test_openie._annotated(text, lexicon, gazetteer)
            triples = extract_triples(annotated)
            assert len(triples) == 1
            t = triples[0]
            assert (t.subject.text, t.relation.text, t.object.text) == expected
            for span, wanted in zip((t.subject, t.relation, t.object), expected):
                assert text[span.start : span.end] == wanted

        rng = random.Random(424242)
        tags = list(test_openie.POOLS)
        for _ in range(200):
            words: list[str] = []
            while len(words) < rng.randint(3, 12):
                if rng.random() < 0.18 and len(words) <= 9:
                    words.extend(rng.choice(list(test_openie.ENTITY_POOL)).split())
                else:
                    words.append(rng.choice(test_openie.POOLS[rng.choice(tags)]))
            text = " ".join(words[:12])
            annotated = test_openie._annotated(text, lexicon, gazetteer)
            got = test_openie._triples_as_word_ranges(annotated, extract_triples(annotated))
            assert got == test_openie.oracle_triples(annotated), text
        return " [2 exact + 200 oracle-checked]"

    _report(capsys, "relation-extraction", None, check)


def test_prompt_serialization(capsys, lexicon, gazetteer):
    def check() -> None:
        # end to end: extract the key relation, then serialize it
        annotated = annotate_document("Sally Forrest died on March 15.", lexicon, gazetteer)
        triples = [t for s in annotated for t in extract_triples(s)]
        best = select_key_relation(triples)
        assert best is not None
        line = serialize_relation(best)
        assert line.encode("utf-8") == (GOLDEN / "prompt_simple.txt").read_bytes()

        quoted = serialize_relation(
            {
                "subject": "Prince Harry",
                "relation": "is in",
                "object": "attendance for England 's crunch match against France",
            }
        )
        assert quoted.encode("utf-8") == (GOLDEN / "prompt_quoted.txt").read_bytes()

    _report(capsys, "prompt-serialization", None, check)


SOURCE = "Biden is the president of the United States."
SWAPPED = "Obama is the president of the United States."

PERSONS = ["Biden", "Obama", "Macron", "Merkel", "Sunak", "Trudeau"]
COUNTRIES = ["France", "England", "Spain", "Italy"]
NOUNS = ["mayor", "tree", "summit", "crowd"]
FILLERS = ["the", "a", "was", "in", "very", "and", "often"]


def _random_sentence(rng: random.Random, noun_count: int) -> str:
    words = rng.choices(FILLERS, k=rng.randint(2, 8))
    for _ in range(noun_count):
        words.insert(rng.randrange(len(words) + 1), rng.choice(NOUNS))
    return " ".join(words) + "."


def test_consistency_score_laws(capsys, vocab, lexicon, gazetteer):
    def check() -> str:
        # context-free scorer: keyword deltas vanish identically
        uniform = UniformScorer(vocab)
        rng = random.Random(20240816)
        for _ in range(100):
            source = _random_sentence(rng, rng.randint(0, 2))
            summary = _random_sentence(rng, rng.randint(1, 3))
            result = coco_score(uniform, source, summary, ONLY_NOUN, lexicon, gazetteer)
            assert result.coco == 0.0

        # grounded summary outranks the entity-swapped one
        scorer = BuiltinScorer(vocab)
        grounded = coco_score(scorer, SOURCE, SOURCE, ONLY_NOUN, lexicon, gazetteer)
        swapped = coco_score(scorer, SOURCE, SWAPPED, ONLY_NOUN, lexicon, gazetteer)
        assert grounded.coco > 0
        assert grounded.coco > swapped.coco

        wins = 0
        for i in range(50):
            person = PERSONS[i % len(PERSONS)]
            other = PERSONS[(i + 1) % len(PERSONS)]
            country = COUNTRIES[i % len(COUNTRIES)]
            summary = f"{person} is the president of {country}."
            source = summary + " " + _random_sentence(rng, 2).capitalize()
            copied_score = coco_score(scorer, source, summary, ONLY_NOUN, lexicon, gazetteer)
            swapped_score = coco_score(
                scorer, source, summary.replace(person, other), ONLY_NOUN, lexicon, gazetteer
            )
            if copied_score.coco > swapped_score.coco:
                wins += 1
        assert wins >= 45

        # reported score is exactly the mean of per-keyword deltas
        for result in (grounded, swapped, copied_score):
            assert result.coco == pytest.approx(
                mean(k.delta for k in result.keywords), abs=1e-9
            )
        return f" [swap wins {wins}/50]"

    _report(capsys, "consistency-score-laws", None, check)


def test_masking_round_trip(capsys, lexicon, gazetteer):
    def check() -> None:
        from keyrel.annotate import annotate, select_keywords, tokenize_words

        for summary, golden in ((SOURCE, "masked_reference.txt"), (SWAPPED, "masked_swapped.txt")):
            keywords = select_keywords(
                annotate(tokenize_words(summary), lexicon, gazetteer), ONLY_NOUN
            )
            masked = build_masked_document(SOURCE, keywords)
            assert masked.text == (GOLDEN / golden).read_text(encoding="utf-8")

        rng = random.Random(20240817)
        pool = ["cat", "dog", "tree", "Sun", "12", "café", ".", ","]
        keyword_pool = ["cat", "dog", "tree", "sun", "12", "café"]
        for _ in range(500):
            parts: list[str] = []
            for _ in range(rng.randint(1, 12)):
                parts.append(rng.choice(["", " ", "  ", "\n"]))
                parts.append(rng.choice(pool))
            source = "".join(parts)
            keywords = rng.sample(keyword_pool, rng.randint(0, 3))
            masked = build_masked_document(source, keywords)
            assert unmask(masked) == source

    _report(capsys, "masking-round-trip", None, check)


def test_probe_dataset_builders(capsys, vocab, tmp_path):
    def check() -> None:
        rng = random.Random(7)
        docs = [
            Document(
                id=f"d{i}",
                source=f"{PERSONS[i % len(PERSONS)]} is the president of "
                f"{COUNTRIES[i % len(COUNTRIES)]}. {_random_sentence(rng, 2).capitalize()}",
            )
            for i in range(20)
        ]
        hinted, report = build_senex_dataset(docs, "senex2", 0, vocab)
        assert report.kept == len(docs)
        for original, out in zip(docs, hinted):
            target_tokens = encode(vocab, out.target).tokens
            expected = "".join(t.text for t in target_tokens[:3])
            assert out.prompt == expected
            assert out.source == expected + "\n" + original.source

        sampled, _ = build_senex_dataset(docs, "senex3", 99, vocab)
        for out in sampled:
            texts = [t.text for t in encode(vocab, out.target).tokens]
            joined = {
                "".join(texts[i] for i in combo)
                for combo in itertools.combinations(range(len(texts)), 3)
            }
            assert out.prompt in joined

        corpus = tmp_path / "probe_in.jsonl"
        emit_jsonl(docs, corpus)
        outputs: list[bytes] = []
        for run in ("one", "two"):
            out_path = tmp_path / f"probe_{run}.jsonl"
            with pytest.raises(SystemExit) as excinfo:
                main(
                    [
                        "senex",
                        "--input", str(corpus),
                        "--output", str(out_path),
                        "--mode", "senex3",
                        "--seed", "11",
                    ]
                )
            assert excinfo.value.code == 0
            outputs.append(out_path.read_bytes())
        assert outputs[0] == outputs[1]

    _report(capsys, "probe-dataset-builders", None, check)


def test_length_filter_boundaries(capsys):
    def check() -> None:
        def doc(words: int) -> Document:
            return Document(
                id=f"n{words}",
                source=" ".join(["w"] * words),
                target=" ".join(["t"] * 100),
            )

        kept, decisions = filter_by_length([doc(700), doc(750)], limit=800)
        assert [d.id for d in kept] == ["n700"]
        assert [(d.length, d.kept) for d in decisions] == [(800, True), (850, False)]

        base = doc(700)
        prompt_line = serialize_relation(
            {"subject": "A", "relation": "met", "object": "B"}
        )
        prompted = PromptedDocument(
            document=base,
            triple={"subject": "A", "relation": "met", "object": "B"},
            prompt=prompt_line,
            modified_source=prompt_line + "\n" + base.source,
        )
        kept_plain, _ = filter_by_length([prompted], limit=800, with_prompt=False)
        assert kept_plain == [prompted]
        kept_counted, decisions = filter_by_length([prompted], limit=800, with_prompt=True)
        assert kept_counted == []
        assert decisions[0].length == 800 + len(prompt_line.split())

    _report(capsys, "length-filter-boundaries", None, check)


def test_evaluation_determinism(capsys, tmp_path):
    def check() -> str:
        rng = random.Random(20240818)
        documents: list[Document] = []
        candidate_lines: list[str] = []
        for i in range(200):
            person = PERSONS[i % len(PERSONS)]
            country = COUNTRIES[i % len(COUNTRIES)]
            first = f"{person} is the president of {country}."
            filler = " ".join(
                _random_sentence(rng, rng.randint(1, 3)).capitalize() for _ in range(3)
            )
            documents.append(
                Document(id=f"doc{i:03d}", source=f"{first} {filler}", target=first)
            )
            if i % 40 == 39:
                continue  # leave a few candidates missing
            if i % 17 == 16:
                summary = "the of was and."  # no keywords selectable
            elif i % 5 == 4:
                other = PERSONS[(i + 1) % len(PERSONS)]
                summary = first.replace(person, other)
            else:
                summary = first
            candidate_lines.append(json.dumps({"id": f"doc{i:03d}", "summary": summary}))

        corpus = tmp_path / "corpus.jsonl"
        emit_jsonl(documents, corpus)
        candidates = tmp_path / "candidates.jsonl"
        candidates.write_text("".join(l + "\n" for l in candidate_lines), encoding="utf-8")

        reports: dict[int, tuple[str, bytes]] = {}
        for workers in (1, 8):
            out_json = tmp_path / f"report_w{workers}.json"
            out_csv = tmp_path / f"report_w{workers}.csv"
            with pytest.raises(SystemExit) as excinfo:
                main(
                    [
                        "eval",
                        "--input", str(corpus),
                        "--candidates", str(candidates),
                        "--out-json", str(out_json),
                        "--out-csv", str(out_csv),
                        "--workers", str(workers),
                    ]
                )
            assert excinfo.value.code == 0
            normalized = re.sub(
                r'"created_at": "[^"]*"',
                '"created_at": "<time>"',
                out_json.read_text(encoding="utf-8"),
            )
            reports[workers] = (normalized, out_csv.read_bytes())

        assert reports[1][0] == reports[8][0]
        assert reports[1][1] == reports[8][1]
        return " [200 docs, workers 1 vs 8]"

    _report(capsys, "evaluation-determinism", 120.0, check)
