"""Scorer behaviour: closed-form values, distribution laws, protocol checks."""
from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keyrel.errors import ProtocolError, TransportError
from keyrel.scoring import (
    BuiltinScorer,
    RemoteScorer,
    UniformScorer,
    mask_aware_pieces,
    validate_response,
)

# --- independent recomputation of the builtin formula -----------------------


def naive_pieces(vocab, text: str, mask: str) -> list[str]:
    from keyrel.bpe import encode

    pieces: list[str] = []
    segments = text.split(mask)
    for i, segment in enumerate(segments):
        pieces.extend(t.text for t in encode(vocab, segment))
        if i < len(segments) - 1:
            pieces.append(mask)
    return pieces


def expected_logprob(context: list[str], target: list[str], token: str, alpha: float, mask: str) -> float:
    universe = set(context) | set(target) | {mask}
    count = sum(1 for t in context if t == token)
    return math.log((count + alpha) / (len(context) + alpha * len(universe)))


class TestBuiltinScorer:
    def test_closed_form_hand_computed(self, vocab):
        scorer = BuiltinScorer(vocab)
        response = scorer.score("a b c", "a")
        assert response.tokens == ("a",)
        # context tokens {a, _b, _c}; universe adds the mask: V = 4
        assert response.logprobs[0] == pytest.approx(math.log(2 / 7), abs=1e-12)

    def test_closed_form_masked_context(self, vocab):
        scorer = BuiltinScorer(vocab)
        response = scorer.score("<mask> b c", "a")
        assert response.logprobs[0] == pytest.approx(math.log(1 / 7), abs=1e-12)

    def test_mask_token_is_atomic(self, vocab):
        pieces = mask_aware_pieces(vocab, "x <mask> y", "<mask>")
        assert "<mask>" in pieces
        assert pieces.count("<mask>") == 1
        assert "".join(pieces) == "x <mask> y"

    def test_pieces_close_on_character_boundaries(self, vocab):
        # byte-level tokens split e and i diacritics; pieces must not
        text = "The café served naïve patrons."
        pieces = mask_aware_pieces(vocab, text, "<mask>")
        assert "".join(pieces) == text
        for piece in pieces:
            piece.encode("utf-8")

    def test_non_ascii_score_is_utf8_clean(self, vocab):
        response = BuiltinScorer(vocab).score("", "naïve café")
        assert "".join(response.tokens) == "naïve café"
        for token in response.tokens:
            token.encode("utf-8")

    def test_tokens_concatenate_to_target(self, vocab):
        response = BuiltinScorer(vocab).score("context", "Biden is here")
        assert "".join(response.tokens) == "Biden is here"

    def test_probabilities_form_subdistribution(self, vocab):
        scorer = BuiltinScorer(vocab)
        context = "the president met the press"
        target = "president talks"
        ctx = naive_pieces(vocab, context, "<mask>")
        tgt = naive_pieces(vocab, target, "<mask>")
        universe = sorted(set(ctx) | set(tgt) | {"<mask>"})
        total = sum(
            math.exp(expected_logprob(ctx, tgt, token, 1.0, "<mask>"))
            for token in universe
        )
        assert total == pytest.approx(1.0, abs=1e-9)
        # and the scorer reproduces the same per-token values
        response = scorer.score(context, target)
        for token, logprob in zip(response.tokens, response.logprobs):
            assert logprob == pytest.approx(
                expected_logprob(ctx, tgt, token, 1.0, "<mask>"), abs=1e-12
            )

    def test_scores_are_context_monotone(self, vocab):
        # one extra occurrence of the keyword token " b" in the context
        scorer = BuiltinScorer(vocab)

        def logprob_b(context: str) -> float:
            response = scorer.score(context, "a b")
            return response.logprobs[response.tokens.index(" b")]

        assert logprob_b("c b b") > logprob_b("c b")

    def test_position_independent(self, vocab):
        scorer = BuiltinScorer(vocab)
        response = scorer.score("a b c", "b and b")
        first = response.tokens.index(" b") if " b" in response.tokens else 0
        values = [
            lp for t, lp in zip(response.tokens, response.logprobs) if t == response.tokens[first]
        ]
        assert len(set(values)) == 1

    def test_deterministic(self, vocab):
        scorer = BuiltinScorer(vocab)
        one = scorer.score("some context here", "a target")
        two = scorer.score("some context here", "a target")
        assert one == two

    def test_empty_context_and_target(self, vocab):
        scorer = BuiltinScorer(vocab)
        response = scorer.score("", "")
        assert response.tokens == ()
        response = scorer.score("", "a")
        assert response.logprobs[0] < 0

    def test_alpha_must_be_positive(self, vocab):
        with pytest.raises(ValueError):
            BuiltinScorer(vocab, alpha=0)

    @given(st.integers(0, 5), st.integers(0, 5))
    @settings(max_examples=40, deadline=None)
    def test_monotone_in_occurrences(self, low_count, extra):
        # repeated " b" keeps the same token form as the target's " b"
        vocab = _vocab()
        scorer = BuiltinScorer(vocab)
        base = "c" + " b" * low_count
        more = "c" + " b" * (low_count + extra)

        def logprob_b(context: str) -> float:
            response = scorer.score(context, "a b")
            return response.logprobs[response.tokens.index(" b")]

        assert logprob_b(more) >= logprob_b(base) - 1e-12


_CACHE: list = []


def _vocab():
    if not _CACHE:
        from keyrel.bpe import load_vocabulary
        from keyrel.resources import DEFAULT_MERGES, DEFAULT_VOCAB, default_path

        _CACHE.append(load_vocabulary(default_path(DEFAULT_VOCAB), default_path(DEFAULT_MERGES)))
    return _CACHE[0]


class TestUniformScorer:
    def test_context_has_no_effect(self, vocab):
        scorer = UniformScorer(vocab)
        one = scorer.score("context alpha", "the target")
        two = scorer.score("totally different words", "the target")
        assert one.logprobs == two.logprobs

    def test_logprobs_negative(self, vocab):
        response = UniformScorer(vocab).score("", "a b")
        assert all(lp < 0 for lp in response.logprobs)


class TestValidateResponse:
    def test_accepts_valid(self):
        response = validate_response(["a", "b"], [-1.0, -2.0], "m")
        assert response.tokens == ("a", "b")

    def test_arity_mismatch(self):
        with pytest.raises(ProtocolError, match="arity"):
            validate_response(["a"], [-1.0, -2.0], "m")

    def test_non_finite_rejected(self):
        with pytest.raises(ProtocolError, match="finite"):
            validate_response(["a"], [float("nan")], "m")
        with pytest.raises(ProtocolError, match="finite"):
            validate_response(["a"], [float("-inf")], "m")

    def test_bad_types_rejected(self):
        with pytest.raises(ProtocolError):
            validate_response("tokens", [-1.0], "m")
        with pytest.raises(ProtocolError):
            validate_response(["a"], [-1.0], "")


class TestRemoteScorer:
    def test_unreachable_endpoint_is_transport_error(self):
        scorer = RemoteScorer("http://127.0.0.1:1", timeout=0.2)
        with pytest.raises(TransportError):
            scorer.score("c", "t")
        scorer.close()

    def test_health_false_when_unreachable(self):
        with RemoteScorer("http://127.0.0.1:1", timeout=0.2) as scorer:
            assert scorer.health() is False

    def test_invalid_inflight_rejected(self):
        with pytest.raises(ValueError):
            RemoteScorer("http://x", max_inflight=0)
