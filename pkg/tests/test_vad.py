import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from longform_forge.audio import AudioBuffer
from longform_forge.errors import ConfigError, MalformedRow, NoSpeechDetected
from longform_forge.vad import (
    EnergyVAD,
    SpeechBounds,
    SpeechSpan,
    VadConfig,
    detect_speech_spans,
    load_sidecar,
    speech_bounds,
)

SR = 16_000


def tone(ms, amp=0.5, f=440.0):
    n = ms * SR // 1000
    return amp * np.sin(2 * np.pi * f * np.arange(n) / SR)


def silence_tone_silence(lead=500, speech=1000, trail=500):
    return np.concatenate([np.zeros(lead * SR // 1000), tone(speech), np.zeros(trail * SR // 1000)])


def test_synthetic_span():
    spans = detect_speech_spans(AudioBuffer(silence_tone_silence(), SR))
    assert len(spans) == 1
    assert abs(spans[0].start_ms - 500) <= 30
    assert abs(spans[0].end_ms - 1500) <= 30


def test_all_zero_is_empty():
    assert detect_speech_spans(AudioBuffer.silence(SR)) == []


def test_full_tone():
    assert detect_speech_spans(AudioBuffer(tone(1000), SR)) == [SpeechSpan(0, 1000)]


def test_bounds_synthetic():
    b = speech_bounds(AudioBuffer(silence_tone_silence(), SR))
    assert abs(b.lead_silence_ms - 500) <= 30
    assert abs(b.trail_silence_ms - 500) <= 30
    assert b.duration_ms == 2000


def test_sidecar_overrides_detection(rng):
    a = AudioBuffer(rng.uniform(-0.5, 0.5, 3 * SR), SR)
    b = speech_bounds(a, sidecar=[SpeechSpan(200, 900)])
    assert (b.lead_silence_ms, b.trail_silence_ms, b.speech_start_ms, b.speech_end_ms) == (200, 3000 - 900, 200, 900)


def test_zero_buffer_raises():
    with pytest.raises(NoSpeechDetected):
        speech_bounds(AudioBuffer.silence(SR))


def test_two_bursts_merge_into_bounds():
    x = np.concatenate([np.zeros(3200), tone(400), np.zeros(8000), tone(300), np.zeros(4800)])
    a = AudioBuffer(x, SR)
    spans = detect_speech_spans(a)
    assert len(spans) == 2
    b = speech_bounds(a)
    assert b.speech_start_ms == spans[0].start_ms
    assert b.speech_end_ms == spans[-1].end_ms


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_bursts=st.integers(0, 6))
def test_spans_ordered_disjoint(seed, n_bursts):
    r = np.random.default_rng(seed)
    x = r.uniform(-1, 1, int(r.integers(800, 40_000))) * 10 ** (r.uniform(-90, -50) / 20)
    for _ in range(n_bursts):
        n = int(r.integers(100, 8000))
        at = int(r.integers(0, max(1, len(x) - n)))
        x[at : at + n] += r.uniform(-0.5, 0.5, min(n, len(x) - at))
    a = AudioBuffer(np.clip(x, -1, 1), SR)
    spans = detect_speech_spans(a)
    dur = round(len(a) * 1000 / SR)
    for s in spans:
        assert 0 <= s.start_ms < s.end_ms <= dur
        assert s.end_ms - s.start_ms >= 60
    for p, q in zip(spans, spans[1:]):
        assert q.start_ms - p.end_ms >= 10


def test_noise_robustness(rng):
    clean = detect_speech_spans(AudioBuffer(silence_tone_silence(), SR))
    x = silence_tone_silence() + rng.uniform(-1, 1, 2 * SR) * 10 ** (-60 / 20)
    noisy = detect_speech_spans(AudioBuffer(x, SR))
    assert len(noisy) == 1
    assert abs(noisy[0].start_ms - clean[0].start_ms) <= 50
    assert abs(noisy[0].end_ms - clean[0].end_ms) <= 50


@pytest.mark.parametrize("k", [0, 10, 37, 250, 1000])
def test_time_shift(k):
    base = silence_tone_silence(lead=300, speech=700, trail=400)
    ref = detect_speech_spans(AudioBuffer(base, SR))
    shifted = detect_speech_spans(AudioBuffer(np.concatenate([np.zeros(k * SR // 1000), base]), SR))
    assert len(ref) == len(shifted)
    for s, t in zip(ref, shifted):
        assert abs(t.start_ms - s.start_ms - k) <= 10
        assert abs(t.end_ms - s.end_ms - k) <= 10


def test_short_blip_discarded():
    x = np.concatenate([np.zeros(8000), tone(20), np.zeros(8000)])
    assert detect_speech_spans(AudioBuffer(x, SR)) == []


def test_config_validation():
    with pytest.raises(ConfigError):
        VadConfig(frame_ms=5, hop_ms=10)
    with pytest.raises(ConfigError):
        VadConfig(hop_ms=0)
    with pytest.raises(ConfigError):
        VadConfig.from_dict({"frame_ms": 30, "bogus": 1})
    assert VadConfig.from_dict(VadConfig().to_dict()) == VadConfig()


def test_bounds_invariants():
    b = SpeechBounds.from_interval(120, 800, 1000)
    assert (b.lead_silence_ms, b.trail_silence_ms, b.speech_ms) == (120, 200, 680)
    with pytest.raises(ValueError):
        SpeechBounds(10, 0, 20, 30)
    with pytest.raises(ValueError):
        SpeechSpan(5, 5)


def test_load_sidecar(tmp_path):
    p = tmp_path / "spans.tsv"
    p.write_text("clip_id\tstart_ms\tend_ms\na\t100\t400\na\t600\t900\nb\t0\t50\n")
    spans = load_sidecar(p)
    assert spans["a"] == [SpeechSpan(100, 400), SpeechSpan(600, 900)]
    assert spans["b"] == [SpeechSpan(0, 50)]
    p.write_text("clip_id\tstart_ms\tend_ms\na\t600\t900\na\t100\t400\n")
    with pytest.raises(MalformedRow):
        load_sidecar(p)


def test_energy_vad_estimator():
    est = EnergyVAD(hangover_frames=3)
    assert clone(est).get_params()["hangover_frames"] == 3
    clips = [AudioBuffer(silence_tone_silence(), SR), AudioBuffer.silence(SR)]
    est.fit(clips)
    spans = est.predict(clips)
    assert len(spans[0]) == 1 and spans[1] == []
    bounds = est.transform(clips)
    assert bounds[1] is None
    full = EnergyVAD(no_speech_policy="assume-full-speech").fit().transform(clips)
    assert full[1] == SpeechBounds(0, 0, 0, 1000)
    with pytest.raises(ConfigError):
        EnergyVAD(no_speech_policy="nope").fit()
