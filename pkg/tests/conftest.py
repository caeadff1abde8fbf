import numpy as np
import pytest

from longform_forge.audio import AudioBuffer, write_audio
from longform_forge.corpus import SentenceClip, write_manifest

SR = 16_000

WORDS = "ich zeige dir wo bartli den most holt und es regnet heute nicht mehr so stark".split()


def speechlike(n, rng, sr=SR, amp=0.3):
    """Harmonic tone with a syllable-rate envelope; never drops to silence."""
    t = np.arange(n) / sr
    f0 = rng.uniform(110, 220)
    x = sum(np.sin(2 * np.pi * f0 * k * t + rng.uniform(0, 6.28)) / k for k in (1, 2, 3))
    env = 0.6 + 0.4 * np.sin(2 * np.pi * rng.uniform(3, 6) * t)
    return amp * env * x / 1.84


def make_clip_audio(lead_ms, speech_ms, trail_ms, rng, sr=SR, noise_db=-70.0):
    n_lead, n_speech, n_trail = (ms * sr // 1000 for ms in (lead_ms, speech_ms, trail_ms))
    x = np.concatenate([np.zeros(n_lead), speechlike(n_speech, rng, sr), np.zeros(n_trail)])
    x += rng.uniform(-1, 1, x.shape[0]) * 10 ** (noise_db / 20)
    return AudioBuffer(np.clip(x, -1, 1), sr)


def make_corpus(root, n_clips, seed=0, n_speakers=20, speech_ms=(800, 3500), silence_ms=(80, 600),
                name="corpus", unknown_speaker_every=0):
    """Write ``n_clips`` synthetic WAV clips plus a TSV manifest; returns (manifest path, truth)."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    (root / "wav").mkdir(exist_ok=True)
    clips = []
    truth = {}
    for i in range(n_clips):
        lead = int(rng.integers(*silence_ms))
        trail = int(rng.integers(*silence_ms))
        speech = int(rng.integers(*speech_ms))
        a = make_clip_audio(lead, speech, trail, rng)
        cid = f"{name}-{i:05d}"
        write_audio(a, root / "wav" / f"{cid}.wav")
        n_words = int(rng.integers(3, 9))
        text = " ".join(rng.choice(WORDS, n_words))
        spk = None if unknown_speaker_every and i % unknown_speaker_every == 0 else f"spk{rng.integers(n_speakers):03d}"
        clips.append(
            SentenceClip(cid, f"wav/{cid}.wav", text, lead + speech + trail, spk, None, "train", name)
        )
        truth[cid] = (lead, lead + speech)
    path = root / f"{name}.tsv"
    write_manifest(clips, path)
    return path, truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("small")
    return make_corpus(root, 40, seed=3, n_speakers=4)


# acceptance results, printed as one line per criterion at the end of the run
ACCEPTANCE = {}


def record(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion:>2}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
