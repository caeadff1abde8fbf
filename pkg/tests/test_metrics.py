import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longform_forge.errors import EmptyCorpus, EmptyReference, LengthMismatch
from longform_forge.metrics import corpus_bleu, corpus_wer, normalize_text, tokenize_13a, word_error_rate

from oracles import edit_distance


@pytest.mark.parametrize(
    "raw, norm",
    [
        ("Ich zeige dir, wo Bartli den Most holt.", "ich zeige dir wo bartli den most holt"),
        ("", ""),
        ("ÄÖÜ!? — ja", "äöü ja"),
        ("  «Grüezi»\t mitenand…\n", "grüezi mitenand"),
    ],
)
def test_normalize_examples(raw, norm):
    assert normalize_text(raw) == norm


@settings(max_examples=200, deadline=None)
@given(st.text())
def test_normalize_idempotent(s):
    once = normalize_text(s)
    assert normalize_text(once) == once


def test_wer_examples():
    assert word_error_rate("ich zeige dir", "ich zeige dir").wer == 0.0
    w = word_error_rate("a b c d", "b c d e")
    assert (w.substitutions, w.deletions, w.insertions, w.wer) == (0, 1, 1, 0.5)
    w = word_error_rate("a b c", "")
    assert (w.deletions, w.wer) == (3, 1.0)
    with pytest.raises(EmptyReference):
        word_error_rate("", "a")


def test_wer_tie_prefers_substitution():
    w = word_error_rate("a b", "a c")
    assert (w.substitutions, w.deletions, w.insertions) == (1, 0, 0)


def test_wer_matches_brute_force():
    r = np.random.default_rng(0)
    vocab = list("abcde")
    for _ in range(1000):
        ref = list(r.choice(vocab, int(r.integers(1, 9))))
        hyp = list(r.choice(vocab, int(r.integers(0, 9))))
        w = word_error_rate(" ".join(ref), " ".join(hyp))
        assert w.errors == edit_distance(ref, hyp)
        assert w.substitutions + w.deletions <= len(ref)
        assert len(ref) - w.deletions + w.insertions == len(hyp)


def test_corpus_wer_pools():
    total = corpus_wer(["a b c d", "x y"], ["b c d e", "x y"])
    assert total.wer == pytest.approx(2 / 6)
    with pytest.raises(LengthMismatch):
        corpus_wer(["a"], [])


def test_bleu_identity():
    refs = ["ich zeige dir wo bartli den most holt", "es regnet"]
    r = corpus_bleu(refs, refs)
    assert r.score == pytest.approx(100.0, abs=1e-9)
    assert r.brevity_penalty == 1.0


def test_bleu_zero_fourgram():
    assert corpus_bleu(["a b c e"], ["a b c d"]).score == 0.0


def test_bleu_hand_example():
    r = corpus_bleu(["a b c d e", "f g h i"], ["a b c d e", "f g h x"])
    expected = (8 / 9, 6 / 7, 4 / 5, 2 / 3)
    assert all(abs(p - q) <= 1e-9 for p, q in zip(r.precisions, expected))
    assert r.brevity_penalty == 1.0
    assert r.score == pytest.approx(100 * math.exp(sum(math.log(p) for p in expected) / 4), abs=1e-9)


def test_bleu_brevity_penalty():
    r = corpus_bleu(["a b c d e f"], ["a b c d e"])
    assert r.brevity_penalty == pytest.approx(math.exp(1 - 6 / 5))


def test_bleu_permutation_invariant():
    r = np.random.default_rng(1)
    vocab = "der die das und ist nicht ein eine".split()
    refs = [" ".join(r.choice(vocab, int(r.integers(4, 12)))) for _ in range(30)]
    hyps = [" ".join(r.choice(vocab, int(r.integers(4, 12)))) for _ in range(30)]
    perm = r.permutation(30)
    a = corpus_bleu(refs, hyps, smooth="exp")
    b = corpus_bleu([refs[i] for i in perm], [hyps[i] for i in perm], smooth="exp")
    assert a.score == b.score


def test_bleu_errors():
    with pytest.raises(LengthMismatch):
        corpus_bleu(["a"], ["a", "b"])
    with pytest.raises(EmptyCorpus):
        corpus_bleu([], [])


def test_tokenize_13a():
    assert tokenize_13a("Hallo, Welt! 3.5 km") == ["Hallo", ",", "Welt", "!", "3.5", "km"]


def test_bleu_against_sacrebleu():
    sacrebleu = pytest.importorskip("sacrebleu")
    r = np.random.default_rng(2)
    vocab = "Hallo, welt . ist das ein test ? ja nein 3.5 km-lang".split()
    for smooth in ("none", "exp"):
        for _ in range(20):
            n = int(r.integers(1, 6))
            refs = [" ".join(r.choice(vocab, int(r.integers(1, 15)))) for _ in range(n)]
            hyps = [" ".join(r.choice(vocab, int(r.integers(1, 15)))) for _ in range(n)]
            ours = corpus_bleu(refs, hyps, smooth=smooth)
            theirs = sacrebleu.corpus_bleu(hyps, [refs], smooth_method=smooth)
            assert ours.score == pytest.approx(theirs.score, abs=1e-9)
            assert list(ours.matches) == list(theirs.counts)
