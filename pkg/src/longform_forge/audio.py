"""Mono waveform container, WAV I/O, resampling and overlapped joins."""

import errno
import math
import struct
import wave
from dataclasses import dataclass

import numpy as np
from scipy import signal

from ._validation import check_samples
from .errors import (
    CorruptHeader,
    DiskFull,
    IoFailure,
    OverlapTooLarge,
    RateMismatch,
    UnsupportedFormat,
)

CANONICAL_RATE_HZ = 16_000

_FORMAT_PCM = 1
_FORMAT_FLOAT = 3
_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono float32 waveform in [-1, 1] with its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if int(self.sample_rate_hz) <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", check_samples(self.samples))
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.shape[0]

    def __eq__(self, other):
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return self.sample_rate_hz == other.sample_rate_hz and np.array_equal(
            self.samples, other.samples
        )

    @property
    def duration_ms(self):
        return len(self) * 1000 / self.sample_rate_hz

    @classmethod
    def silence(cls, n_samples, sample_rate_hz=CANONICAL_RATE_HZ):
        return cls(np.zeros(n_samples, dtype=np.float32), sample_rate_hz)

    def fit_length(self, n_samples):
        """Truncate or zero-pad to exactly ``n_samples``."""
        if n_samples == len(self):
            return self
        if n_samples < len(self):
            return AudioBuffer(self.samples[:n_samples], self.sample_rate_hz)
        out = np.zeros(n_samples, dtype=np.float32)
        out[: len(self)] = self.samples
        return AudioBuffer(out, self.sample_rate_hz)


def ms_to_samples(ms, sample_rate_hz):
    return int(ms) * int(sample_rate_hz) // 1000


def _iter_chunks(data):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8 : pos + 8 + size]
        yield cid, body, size
        pos += 8 + size + (size & 1)


def read_audio(path):
    """Decode a PCM-16 or float-32 WAV file into a mono :class:`AudioBuffer`.

    Stereo input is downmixed by averaging the two channels.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeader(f"{path}: not a RIFF/WAVE file")

    fmt = None
    pcm = None
    for cid, body, size in _iter_chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise CorruptHeader(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
            if fmt[0] == _FORMAT_EXTENSIBLE:
                if len(body) < 26:
                    raise CorruptHeader(f"{path}: truncated extensible fmt chunk")
                # first two bytes of the subformat GUID carry the real format code
                sub = struct.unpack_from("<H", body, 24)[0]
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            pcm = body
            break
    if fmt is None or pcm is None:
        raise CorruptHeader(f"{path}: missing fmt or data chunk")

    code, channels, rate, _, block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedFormat(f"{path}: {channels} channels (expected 1 or 2)")
    if rate <= 0:
        raise CorruptHeader(f"{path}: sample rate {rate}")
    if code == _FORMAT_PCM and bits == 16:
        dtype = np.dtype("<i2")
    elif code == _FORMAT_FLOAT and bits == 32:
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedFormat(f"{path}: format code {code} with {bits} bits")

    frame_bytes = dtype.itemsize * channels
    usable = len(pcm) - len(pcm) % frame_bytes
    raw = np.frombuffer(pcm[:usable], dtype=dtype).reshape(-1, channels)
    if code == _FORMAT_PCM:
        samples = raw.astype(np.float32) / 32768.0
    else:
        samples = raw.astype(np.float32)
        if not np.isfinite(samples).all():
            raise CorruptHeader(f"{path}: non-finite float samples")
        np.clip(samples, -1.0, 1.0, out=samples)
    mono = samples[:, 0] if channels == 1 else samples.mean(axis=1, dtype=np.float32)
    return AudioBuffer(mono, rate)


def write_audio(a, path):
    """Write ``a`` as a 16-bit PCM mono WAV."""
    q = np.clip(np.round(a.samples.astype(np.float64) * 32768.0), -32768, 32767).astype("<i2")
    try:
        with open(path, "wb") as fh, wave.open(fh, "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(a.sample_rate_hz)
            wf.writeframes(q.tobytes())
    except OSError as exc:
        if exc.errno == errno.ENOSPC:
            raise DiskFull(f"disk full while writing {path}") from exc
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def resample(a, target_rate_hz):
    """Band-limited polyphase resampling to ``target_rate_hz``.

    The output length is ``round(len(a) * target / source)``.
    """
    target_rate_hz = int(target_rate_hz)
    if target_rate_hz <= 0:
        raise ValueError(f"target_rate_hz must be positive, got {target_rate_hz}")
    src = a.sample_rate_hz
    if src == target_rate_hz:
        return a
    n = len(a)
    n_out = (2 * n * target_rate_hz + src) // (2 * src)
    if n == 0:
        return AudioBuffer(np.zeros(0, dtype=np.float32), target_rate_hz)
    g = math.gcd(src, target_rate_hz)
    up, down = target_rate_hz // g, src // g
    y = signal.resample_poly(a.samples.astype(np.float64), up, down, padtype="line")
    if y.shape[0] >= n_out:
        y = y[:n_out]
    else:
        y = np.pad(y, (0, n_out - y.shape[0]), mode="edge")
    np.clip(y, -1.0, 1.0, out=y)
    return AudioBuffer(y.astype(np.float32), target_rate_hz)


def join_with_overlap(a, b, overlap_ms):
    """Append ``b`` to ``a`` with the last ``overlap_ms`` of ``a`` mixed into the head of ``b``.

    Overlapped samples are summed and hard-clamped to [-1, 1].
    """
    if a.sample_rate_hz != b.sample_rate_hz:
        raise RateMismatch(f"{a.sample_rate_hz} Hz vs {b.sample_rate_hz} Hz")
    if overlap_ms < 0:
        raise ValueError(f"overlap_ms must be nonnegative, got {overlap_ms}")
    k = ms_to_samples(overlap_ms, a.sample_rate_hz)
    if k > min(len(a), len(b)):
        raise OverlapTooLarge(
            f"overlap of {k} samples exceeds min length {min(len(a), len(b))}"
        )
    out = np.empty(len(a) + len(b) - k, dtype=np.float32)
    out[: len(a)] = a.samples
    if k:
        mixed = out[len(a) - k : len(a)] + b.samples[:k]
        np.clip(mixed, -1.0, 1.0, out=mixed)
        out[len(a) - k : len(a)] = mixed
    out[len(a) :] = b.samples[k:]
    return AudioBuffer(out, a.sample_rate_hz)
