import numpy as np
import pytest

from longform_forge.errors import EmptyDocument, EmptyDocumentWarning, EmptyReference, MalformedTimestamp, NonMonotonicBlocks
from longform_forge.metrics import SubtitleBlock, SubtitleDoc, format_srt, parse_srt, suber
from longform_forge.metrics.srt import looks_like_srt

from oracles import linear_words, plain_ter_edits, random_doc

VOCAB = "hallo welt ich zeige dir wo bartli den most holt".split()


def doc(*blocks):
    return SubtitleDoc(SubtitleBlock(i + 1, s, e, (t,)) for i, (s, e, t) in enumerate(blocks))


def test_parse_single_block():
    d = parse_srt("1\n00:00:01,000 --> 00:00:02,500\nhallo welt")
    (b,) = d.blocks
    assert (b.index, b.start_ms, b.end_ms, b.lines) == (1, 1000, 2500, ("hallo welt",))


def test_parse_bom_crlf_multiline():
    text = "﻿3\r\n00:00:01,000 --> 00:00:02,000\r\nzeile eins\r\nzeile zwei\r\n\r\n7\r\n01:02:03,004 --> 01:02:04,000\r\nx"
    d = parse_srt(text)
    assert d.blocks[0].lines == ("zeile eins", "zeile zwei")
    assert d.blocks[1].start_ms == 3_723_004


def test_malformed_timestamp_names_block():
    with pytest.raises(MalformedTimestamp) as ei:
        parse_srt("1\n00:00:2,5 --> 00:00:03,000\nx\n")
    assert ei.value.block == 1
    with pytest.raises(MalformedTimestamp) as ei:
        parse_srt("1\n00:00:01,000 --> 00:00:02,000\na\n\n2\n00:00:03,000 --> 00:00:02,000\nb\n")
    assert ei.value.block == 2


def test_non_monotonic_and_empty():
    with pytest.raises(NonMonotonicBlocks):
        parse_srt("2\n00:00:01,000 --> 00:00:02,000\na\n\n1\n00:00:03,000 --> 00:00:04,000\nb\n")
    with pytest.raises(EmptyDocument):
        parse_srt("\n\n")


def test_format_example():
    assert format_srt(doc((1000, 2500, "hallo welt"))) == "1\n00:00:01,000 --> 00:00:02,500\nhallo welt\n"


def test_format_empty_warns():
    with pytest.warns(EmptyDocumentWarning):
        assert format_srt(SubtitleDoc(())) == ""


def _messy(d, rng):
    """Render ``d`` with random indices, CRLF, BOM, extra blank lines and spacing."""
    parts = []
    idx = int(rng.integers(0, 5))
    for b in d.blocks:
        idx += int(rng.integers(1, 4))
        ts = f"{b.start_ms // 3_600_000:02d}:{b.start_ms // 60_000 % 60:02d}:{b.start_ms // 1000 % 60:02d},{b.start_ms % 1000:03d}"
        te = f"{b.end_ms // 3_600_000:02d}:{b.end_ms // 60_000 % 60:02d}:{b.end_ms // 1000 % 60:02d},{b.end_ms % 1000:03d}"
        arrow = rng.choice(["-->", " --> ", "  -->  "])
        parts.append(f"{idx}\n{ts}{arrow}{te}\n" + "\n".join(b.lines))
    sep = "\n" + "\n" * int(rng.integers(1, 3))
    text = sep.join(parts) + ("\n" if rng.random() < 0.5 else "")
    if rng.random() < 0.5:
        text = text.replace("\n", "\r\n")
    if rng.random() < 0.3:
        text = "﻿" + text
    return text


def test_round_trip_corpus():
    r = np.random.default_rng(5)
    for _ in range(50):
        d = random_doc(r, VOCAB, int(r.integers(1, 12)), 6)
        canonical = format_srt(d)
        parsed = parse_srt(_messy(d, r))
        assert format_srt(parsed) == canonical
        assert parse_srt(canonical) == d
        assert format_srt(parse_srt(canonical)) == canonical


def test_looks_like_srt():
    assert looks_like_srt("\n1\n00:00:01,000 --> 00:00:02,000\nx")
    assert not looks_like_srt("a b c d\n")


def test_suber_identity():
    ref = doc((0, 2000, "hallo welt"), (2500, 4000, "ich zeige dir"))
    r = suber(ref, ref)
    assert r.score == 0.0 and r.ref_token_count == 7


def test_suber_disjoint_time():
    r = suber(doc((0, 2000, "hallo welt")), doc((10_000, 12_000, "hallo welt")))
    assert r.score == 2.0
    assert (r.deletions, r.insertions, r.substitutions) == (3, 3, 0)


def test_suber_substitution():
    r = suber(doc((0, 2000, "hallo welt")), doc((0, 2000, "hallo wald")))
    assert abs(r.score - 1 / 3) <= 1e-9
    assert r.substitutions == 1 and r.break_edits == 0


def test_suber_resegmentation_costs_breaks():
    ref = doc((0, 2000, "a b"), (2000, 4000, "c d"))
    hyp = doc((0, 4000, "a b c d"))
    r = suber(ref, hyp)
    assert r.total_edits == 1 and r.break_edits == 1


def test_suber_shift():
    ref = doc((0, 5000, "a b c d e f"))
    hyp = doc((0, 5000, "d e f a b c"))
    r = suber(ref, hyp)
    assert r.shifts == 1 and r.total_edits == 1
    assert suber(ref, hyp, shifts=False).total_edits == 6


def test_suber_empty_reference():
    with pytest.raises(EmptyReference):
        suber(SubtitleDoc(()), doc((0, 1, "x")))


def test_suber_shift_never_worse():
    r = np.random.default_rng(7)
    for _ in range(200):
        ref = random_doc(r, VOCAB[:5], int(r.integers(1, 5)), 4)
        hyp = random_doc(r, VOCAB[:5], int(r.integers(0, 5)), 4)
        with_shift = suber(ref, hyp)
        assert 0 <= with_shift.score <= suber(ref, hyp, shifts=False).score


def test_suber_equals_plain_ter_when_times_agree():
    r = np.random.default_rng(8)
    for _ in range(60):
        ref = random_doc(r, VOCAB[:4], int(r.integers(1, 3)), 3, span=(0, 10_000))
        hyp = random_doc(r, VOCAB[:4], int(r.integers(1, 3)), 3, span=(0, 10_000))
        assert suber(ref, hyp).total_edits == plain_ter_edits(linear_words(ref), linear_words(hyp))
