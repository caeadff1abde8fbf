"""Energy-based voice activity detection and speech-boundary extraction.

Frames are scored by RMS energy in dB and compared against an adaptive noise
floor (a low percentile of the clip's own frame energies).  A sidecar TSV of
externally computed spans can replace detection entirely.
"""

import csv
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator

from ._validation import check_choice, check_int
from .errors import ConfigError, MalformedRow, MissingColumn, NoSpeechDetected

NO_SPEECH_POLICIES = ("skip-clip", "assume-full-speech")

_EPS = 1e-10


@dataclass(frozen=True)
class SpeechSpan:
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if not 0 <= self.start_ms < self.end_ms:
            raise ValueError(f"invalid span [{self.start_ms}, {self.end_ms}]")


@dataclass(frozen=True)
class SpeechBounds:
    """Leading/trailing silence and speech interval of one clip, in ms."""

    lead_silence_ms: int
    trail_silence_ms: int
    speech_start_ms: int
    speech_end_ms: int

    def __post_init__(self):
        if min(self.lead_silence_ms, self.trail_silence_ms) < 0:
            raise ValueError("silences must be nonnegative")
        if self.speech_start_ms != self.lead_silence_ms:
            raise ValueError("speech_start_ms must equal lead_silence_ms")
        if not self.speech_start_ms < self.speech_end_ms:
            raise ValueError(f"empty speech interval [{self.speech_start_ms}, {self.speech_end_ms}]")

    @property
    def duration_ms(self):
        return self.speech_end_ms + self.trail_silence_ms

    @property
    def speech_ms(self):
        return self.speech_end_ms - self.speech_start_ms

    @classmethod
    def from_interval(cls, start_ms, end_ms, duration_ms):
        start_ms, end_ms = int(start_ms), int(end_ms)
        end_ms = min(end_ms, int(duration_ms))
        return cls(start_ms, int(duration_ms) - end_ms, start_ms, end_ms)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class VadConfig:
    frame_ms: int = 30
    hop_ms: int = 10
    energy_threshold_db_above_floor: float = 12.0
    hangover_frames: int = 5
    min_span_ms: int = 60
    floor_percentile: float = 5.0
    # the adaptive floor never sits above this level, so clips without any
    # silence (a full-length tone) still register as speech
    absolute_floor_db: float = -70.0

    def __post_init__(self):
        check_int(self.hop_ms, "hop_ms", 0, strict=True)
        check_int(self.frame_ms, "frame_ms", self.hop_ms)
        check_int(self.hangover_frames, "hangover_frames", 0)
        check_int(self.min_span_ms, "min_span_ms", self.hop_ms)
        if not 0.0 <= self.floor_percentile <= 100.0:
            raise ConfigError("floor_percentile must lie in [0, 100]")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown VAD config keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


def frame_energies_db(samples, sample_rate_hz, frame_ms, hop_ms):
    frame = max(1, frame_ms * sample_rate_hz // 1000)
    hop = max(1, hop_ms * sample_rate_hz // 1000)
    x = np.asarray(samples, dtype=np.float64)
    if x.shape[0] < frame:
        x = np.pad(x, (0, frame - x.shape[0]))
    windows = sliding_window_view(x, frame)[::hop]
    rms = np.sqrt(np.mean(windows * windows, axis=1))
    return 20.0 * np.log10(rms + _EPS)


def _active_runs(active):
    """Return (first, last) frame index pairs for each run of True."""
    padded = np.concatenate(([False], active, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[0::2], edges[1::2] - 1))


def detect_speech_spans(a, cfg=None):
    """Detect speech spans in ``a``; returns a list of :class:`SpeechSpan`."""
    cfg = cfg or VadConfig()
    if len(a) == 0:
        raise ValueError("cannot run VAD on an empty buffer")
    sr = a.sample_rate_hz
    duration_ms = round(len(a) * 1000 / sr)
    energy = frame_energies_db(a.samples, sr, cfg.frame_ms, cfg.hop_ms)
    floor = min(float(np.percentile(energy, cfg.floor_percentile)), cfg.absolute_floor_db)
    active = energy > floor + cfg.energy_threshold_db_above_floor
    runs = _active_runs(active)
    if not runs:
        return []

    # hangover keeps a span open across short dips; it bridges gaps of at most
    # hangover_frames inactive frames instead of padding every span end
    merged = [list(runs[0])]
    for first, last in runs[1:]:
        if first - merged[-1][1] - 1 <= cfg.hangover_frames:
            merged[-1][1] = last
        else:
            merged.append([first, last])

    n_frames = energy.shape[0]
    hop, frame = cfg.hop_ms, cfg.frame_ms
    centre = frame / 2.0
    spans = []
    for first, last in merged:
        start = 0 if first == 0 else int(round(first * hop + centre - hop / 2.0))
        end = duration_ms if last == n_frames - 1 else int(round(last * hop + centre + hop / 2.0))
        start = max(0, min(start, duration_ms))
        end = max(0, min(end, duration_ms))
        if end - start < cfg.min_span_ms or start >= end:
            continue
        if spans and start - spans[-1].end_ms < hop:
            spans[-1] = SpeechSpan(spans[-1].start_ms, end)
        else:
            spans.append(SpeechSpan(start, end))
    return spans


def load_sidecar(path):
    """Read a ``clip_id\\tstart_ms\\tend_ms`` TSV into ``{clip_id: [SpeechSpan, ...]}``."""
    spans = defaultdict(list)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            return {}
        cols = [h.strip() for h in header]
        for col in ("clip_id", "start_ms", "end_ms"):
            if col not in cols:
                raise MissingColumn(col, path)
        idx = [cols.index(c) for c in ("clip_id", "start_ms", "end_ms")]
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                cid, s, e = (row[i] for i in idx)
                span = SpeechSpan(int(s), int(e))
            except (IndexError, ValueError) as exc:
                raise MalformedRow(rowno, str(exc)) from exc
            prev = spans[cid]
            if prev and span.start_ms < prev[-1].end_ms:
                raise MalformedRow(rowno, f"spans for {cid!r} not sorted/disjoint")
            prev.append(span)
    return dict(spans)


def speech_bounds(a, cfg=None, sidecar=None, duration_ms=None):
    """Lead/trail silence of ``a`` from detection, or from ``sidecar`` spans when given.

    ``duration_ms`` overrides the buffer-derived duration (used when the
    manifest duration is authoritative).
    """
    if duration_ms is None:
        duration_ms = round(len(a) * 1000 / a.sample_rate_hz) if a is not None else None
    if sidecar:
        spans = sorted(sidecar, key=lambda s: s.start_ms)
    else:
        if a is None:
            raise ValueError("audio is required when no sidecar spans are supplied")
        spans = detect_speech_spans(a, cfg)
    if not spans:
        raise NoSpeechDetected("no speech span found")
    if duration_ms is None:
        duration_ms = spans[-1].end_ms
    start = spans[0].start_ms
    end = min(spans[-1].end_ms, duration_ms)
    if start >= end:
        raise NoSpeechDetected(f"speech interval [{start}, {end}] empty after clamping")
    return SpeechBounds.from_interval(start, end, duration_ms)


class EnergyVAD(BaseEstimator):
    """Scikit-learn style wrapper around :func:`detect_speech_spans`.

    The detector is stateless; ``fit`` only validates parameters.  ``predict``
    maps a sequence of :class:`~longform_forge.audio.AudioBuffer` to span lists
    and ``transform`` to :class:`SpeechBounds` (``None`` for silent clips when
    ``no_speech_policy='skip-clip'``).
    """

    def __init__(
        self,
        frame_ms=30,
        hop_ms=10,
        energy_threshold_db_above_floor=12.0,
        hangover_frames=5,
        min_span_ms=60,
        no_speech_policy="skip-clip",
    ):
        self.frame_ms = frame_ms
        self.hop_ms = hop_ms
        self.energy_threshold_db_above_floor = energy_threshold_db_above_floor
        self.hangover_frames = hangover_frames
        self.min_span_ms = min_span_ms
        self.no_speech_policy = no_speech_policy

    def _config(self):
        return VadConfig(
            frame_ms=self.frame_ms,
            hop_ms=self.hop_ms,
            energy_threshold_db_above_floor=self.energy_threshold_db_above_floor,
            hangover_frames=self.hangover_frames,
            min_span_ms=self.min_span_ms,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        check_choice(self.no_speech_policy, "no_speech_policy", NO_SPEECH_POLICIES)
        return self

    def predict(self, X):
        cfg = self._config()
        return [detect_speech_spans(a, cfg) for a in X]

    def transform(self, X):
        cfg = self._config()
        check_choice(self.no_speech_policy, "no_speech_policy", NO_SPEECH_POLICIES)
        out = []
        for a in X:
            try:
                out.append(speech_bounds(a, cfg))
            except NoSpeechDetected:
                if self.no_speech_policy == "skip-clip":
                    out.append(None)
                else:
                    dur = round(len(a) * 1000 / a.sample_rate_hz)
                    out.append(SpeechBounds.from_interval(0, dur, dur))
        return out
