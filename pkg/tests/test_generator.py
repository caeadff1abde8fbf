import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from longform_forge import LongFormGenerator
from longform_forge.builder import GenConfig, load_dataset_manifest
from longform_forge.corpus import load_manifest
from longform_forge.vad import SpeechSpan


def test_params_and_clone():
    g = LongFormGenerator(mode="concat", seed=42, pad_to_window=True)
    g2 = clone(g)
    assert g2.get_params() == g.get_params()
    assert g2.get_config() == GenConfig(mode="concat", seed=42, pad_to_window=True)
    assert LongFormGenerator.from_config(GenConfig(seed=9)).seed == 9


def test_transform_requires_fit():
    with pytest.raises(NotFittedError):
        next(LongFormGenerator().transform())


def test_fit_detects_bounds(small_corpus):
    path, truth = small_corpus
    g = LongFormGenerator(seed=1).fit(load_manifest(path))
    assert not g.skipped_
    for cid, (s, e) in truth.items():
        b = g.bounds_[cid]
        assert abs(b.speech_start_ms - s) <= 30
        assert abs(b.speech_end_ms - e) <= 30


def test_sidecar_precedence(small_corpus):
    path, _ = small_corpus
    table = load_manifest(path)
    first = table.clips[0]
    g = LongFormGenerator(sidecar={first.clip_id: [SpeechSpan(10, 50)]}).fit(table)
    assert (g.bounds_[first.clip_id].speech_start_ms, g.bounds_[first.clip_id].speech_end_ms) == (10, 50)


def test_transform_matches_generate(small_corpus, tmp_path):
    path, _ = small_corpus
    g = LongFormGenerator(seed=5, shard_size=3).fit(load_manifest(path))
    samples = list(g.transform())
    assert len(samples) == len(g.plans_)
    m = g.generate(tmp_path)
    rows = load_dataset_manifest(m.manifest_path).rows
    for s, r in zip(samples, rows):
        assert r["sample_id"] == s.sample_id
        assert r["duration_ms"] == s.duration_ms
        assert (r["emit_timestamps"], r["emit_prompt"]) == (s.emit_timestamps, s.emit_prompt)
        assert len(s.audio) == s.duration_ms * 16
        assert s.duration_ms <= 30_000


def test_silent_clip_policy(tmp_path):
    from longform_forge.audio import AudioBuffer, write_audio
    from longform_forge.corpus import CorpusTable, SentenceClip

    (tmp_path / "w").mkdir()
    write_audio(AudioBuffer.silence(16_000), tmp_path / "w" / "z.wav")
    write_audio(AudioBuffer(0.3 * np.sin(np.arange(16_000) * 0.2), 16_000), tmp_path / "w" / "t.wav")
    t = CorpusTable(
        [SentenceClip("z", "w/z.wav", "leer", 1000), SentenceClip("t", "w/t.wav", "ton", 1000)],
        source_path=tmp_path / "m.tsv",
    )
    g = LongFormGenerator(mode="concat").fit(t)
    assert g.skipped_ == ["z"]
    g = LongFormGenerator(mode="concat", no_speech_policy="assume-full-speech").fit(t)
    assert g.skipped_ == [] and g.bounds_["z"].speech_ms == 1000
