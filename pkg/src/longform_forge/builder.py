"""Long-form sample synthesis from sentence-level clips.

Planning is sequential and owns the no-reuse state.  Every window then gets
its own random streams derived from ``(seed, window_index)``, so rendering can
run in any order or in parallel and still produce identical output.
"""

import dataclasses
import hashlib
import json
import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_choice, check_int, check_probability, check_seed
from .audio import CANONICAL_RATE_HZ, AudioBuffer, join_with_overlap, read_audio, resample, write_audio
from .corpus import MS_PER_HOUR
from .errors import ConfigError, DiskFull, EmptyCorpus, InfeasiblePlan, IoFailure, NoPlanPossible

log = logging.getLogger(__name__)

MODES = ("sentence_level", "concat", "speaker_ret", "overlap", "neg_overlap", "all")
JOIN_KINDS = ("concat", "pause_overlap", "negative_overlap")

_PLAN_STREAM = 0x504C414E
_JOIN_STREAM = 1
_FLAG_STREAM = 2


@dataclass(frozen=True)
class GenConfig:
    mode: str = "all"
    target_window_ms: int = 30_000
    p_speaker_retention: float = 0.5
    p_overlap: float = 0.5
    max_pause_overlap_ms: int = 200
    p_negative_overlap: float = 0.1
    negative_overlap_ms: int = 200
    p_timestamps: float = 0.5
    p_prompt: float = 0.5
    seed: int = 0
    pad_to_window: bool = False
    timestamp_quantum_ms: int = 20

    def __post_init__(self):
        check_choice(self.mode, "mode", MODES)
        check_int(self.target_window_ms, "target_window_ms", 0, strict=True)
        check_int(self.max_pause_overlap_ms, "max_pause_overlap_ms", 0)
        check_int(self.negative_overlap_ms, "negative_overlap_ms", 0)
        check_int(self.timestamp_quantum_ms, "timestamp_quantum_ms", 0, strict=True)
        for name in ("p_speaker_retention", "p_overlap", "p_negative_overlap", "p_timestamps", "p_prompt"):
            check_probability(getattr(self, name), name)
        check_seed(self.seed)
        if not isinstance(self.pad_to_window, bool):
            raise ConfigError("pad_to_window must be a boolean")

    @property
    def retention_enabled(self):
        return self.mode in ("speaker_ret", "all")

    @property
    def overlap_enabled(self):
        return self.mode in ("overlap", "neg_overlap", "all")

    @property
    def negative_enabled(self):
        return self.mode in ("neg_overlap", "all")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"unknown generation config keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class JoinSpec:
    kind: str
    overlap_ms: int = 0
    # set when a negative overlap was drawn but the clips could not host it
    demoted: bool = False

    def __post_init__(self):
        check_choice(self.kind, "kind", JOIN_KINDS)
        if self.overlap_ms < 0:
            raise ValueError("overlap_ms must be nonnegative")
        if self.kind == "concat" and self.overlap_ms:
            raise ValueError("concat joins have no overlap")

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class WindowPlan:
    index: int
    clip_ids: tuple
    joins: tuple
    planned_duration_ms: int
    # per join: whether a same-speaker/other-speaker choice was actually possible
    retention_feasible: tuple = ()

    def __post_init__(self):
        if len(self.joins) != max(0, len(self.clip_ids) - 1):
            raise ValueError("a plan needs exactly one join between consecutive clips")


@dataclass(frozen=True)
class SegmentAnnotation:
    start_ms: int
    end_ms: int
    text: str
    speaker_id: str | None = None

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class LongFormSample:
    sample_id: str
    audio: AudioBuffer | None
    segments: tuple
    duration_ms: int
    joins: tuple = ()
    window_index: int = 0
    emit_timestamps: bool = False
    emit_prompt: bool = False
    prompt_text: str | None = None

    @property
    def text(self):
        return " ".join(s.text for s in self.segments)


def _stream(seed, index, purpose):
    return np.random.default_rng(np.random.SeedSequence([check_seed(seed), index, purpose]))


def window_rng(seed, window_index, purpose="join"):
    """Random stream for one window; depends only on ``(seed, window_index)``."""
    return _stream(seed, window_index, _JOIN_STREAM if purpose == "join" else _FLAG_STREAM)


# ---------------------------------------------------------------- planning


class _ClipPool:
    """Remaining clips, indexed globally and per speaker, with O(1) removal."""

    def __init__(self, clip_ids, speakers):
        self.items = list(clip_ids)
        self.pos = {c: i for i, c in enumerate(self.items)}
        self.speaker = dict(zip(clip_ids, speakers))
        self.by_spk = {}
        self.spk_pos = {}
        for c, s in zip(clip_ids, speakers):
            if s is None:
                continue
            lst = self.by_spk.setdefault(s, [])
            self.spk_pos[c] = len(lst)
            lst.append(c)

    def __len__(self):
        return len(self.items)

    @staticmethod
    def _swap_remove(lst, pos, c):
        i = pos.pop(c)
        last = lst.pop()
        if last != c:
            lst[i] = last
            pos[last] = i

    def remove(self, c):
        self._swap_remove(self.items, self.pos, c)
        s = self.speaker[c]
        if s is not None:
            self._swap_remove(self.by_spk[s], self.spk_pos, c)

    def n_speaker(self, s):
        return len(self.by_spk.get(s, ())) if s is not None else 0

    def draw_any(self, rng):
        return self.items[int(rng.integers(len(self.items)))]

    def draw_speaker(self, s, rng):
        lst = self.by_spk[s]
        return lst[int(rng.integers(len(lst)))]

    def draw_other(self, s, rng):
        for _ in range(32):
            c = self.draw_any(rng)
            if self.speaker[c] != s:
                return c
        others = [c for c in self.items if self.speaker[c] != s]
        return others[int(rng.integers(len(others)))]


def _next_clip(pool, prev_speaker, cfg, rng):
    """Draw the next clip; returns ``(clip_id, retention_feasible)``."""
    if not cfg.retention_enabled or prev_speaker is None:
        return pool.draw_any(rng), False
    same = pool.n_speaker(prev_speaker)
    other = len(pool) - same
    if same and other:
        if rng.random() < cfg.p_speaker_retention:
            return pool.draw_speaker(prev_speaker, rng), True
        return pool.draw_other(prev_speaker, rng), True
    return pool.draw_any(rng), False


def draw_join(prev_bounds, next_bounds, cfg, rng):
    """Draw the junction between two clips given their speech bounds.

    A negative overlap that the clips cannot host (too little audio or speech
    to overlap speech by ``negative_overlap_ms``) is demoted to a pause overlap.
    """
    if not cfg.overlap_enabled or rng.random() >= cfg.p_overlap:
        return JoinSpec("concat", 0)
    gap = prev_bounds.trail_silence_ms + next_bounds.lead_silence_ms
    cap = min(prev_bounds.duration_ms, next_bounds.duration_ms)
    demoted = False
    if cfg.negative_enabled and rng.random() < cfg.p_negative_overlap:
        neg = cfg.negative_overlap_ms
        total = gap + neg
        if (
            total <= cap
            and prev_bounds.speech_ms >= neg
            and next_bounds.speech_ms >= neg
        ):
            return JoinSpec("negative_overlap", total)
        demoted = True
    hi = min(cfg.max_pause_overlap_ms, gap, cap)
    return JoinSpec("pause_overlap", int(rng.integers(0, hi + 1)), demoted)


def plan_windows(table, cfg, bounds):
    """Pack clips into windows of at most ``cfg.target_window_ms``.

    Clips are drawn without replacement.  A drawn clip joins the open window
    when it fits even without any overlap; otherwise it opens the next window,
    so no clip is ever dropped.  Clips missing from ``bounds`` (no speech) or
    longer than the window are left out.
    """
    clips = [c for c in table.clips if bounds.get(c.clip_id) is not None]
    if not table.clips:
        raise EmptyCorpus("corpus is empty")
    fitting = [c for c in clips if c.duration_ms <= cfg.target_window_ms]
    if not fitting:
        raise NoPlanPossible(
            f"no clip fits the {cfg.target_window_ms} ms window ({len(clips)} usable clips)"
        )
    if len(fitting) < len(clips):
        log.warning("skipping %d clips longer than the window", len(clips) - len(fitting))

    dur = {c.clip_id: c.duration_ms for c in fitting}
    rng = _stream(cfg.seed, 0, _PLAN_STREAM)

    if cfg.mode == "sentence_level":
        order = rng.permutation(len(fitting))
        return [
            WindowPlan(i, (fitting[j].clip_id,), (), fitting[j].duration_ms)
            for i, j in enumerate(order)
        ]

    pool = _ClipPool([c.clip_id for c in fitting], [c.speaker_id for c in fitting])
    speaker = pool.speaker
    plans = []
    cur = None
    prev = None
    while len(pool):
        cid, feasible = _next_clip(pool, speaker[prev] if prev else None, cfg, rng)
        pool.remove(cid)
        d = dur[cid]
        if cur is not None and cur["duration"] + d <= cfg.target_window_ms:
            join = draw_join(bounds[prev], bounds[cid], cfg, cur["rng"])
            cur["ids"].append(cid)
            cur["joins"].append(join)
            cur["feasible"].append(feasible)
            cur["duration"] += d - join.overlap_ms
        else:
            if cur is not None:
                plans.append(_close(cur))
            idx = len(plans)
            cur = {
                "index": idx,
                "ids": [cid],
                "joins": [],
                "feasible": [],
                "duration": d,
                "rng": window_rng(cfg.seed, idx, "join"),
            }
        prev = cid
    plans.append(_close(cur))
    return plans


def _close(cur):
    return WindowPlan(
        cur["index"], tuple(cur["ids"]), tuple(cur["joins"]), cur["duration"], tuple(cur["feasible"])
    )


# ---------------------------------------------------------------- timestamps


def _floor(x, q):
    return x // q * q


def _ceil(x, q):
    return -(-x // q) * q


def clip_offsets(plan, durations):
    """Start offset of every clip in the stitched timeline and the total duration."""
    offsets = []
    total = 0
    for k, cid in enumerate(plan.clip_ids):
        d = durations[cid]
        if k == 0:
            off = 0
        else:
            ov = plan.joins[k - 1].overlap_ms
            prev_d = durations[plan.clip_ids[k - 1]]
            if ov > d or ov > prev_d:
                raise InfeasiblePlan(
                    f"window {plan.index}: overlap {ov} ms exceeds clip length at join {k}"
                )
            off = total - ov
        offsets.append(off)
        total = off + d
    return offsets, total


def annotate_window(plan, clips, bounds, cfg):
    """Segment annotations for ``plan`` on the stitched timeline.

    Each clip contributes its detected speech interval shifted by the clip's
    offset; starts are rounded down and ends up to the timestamp grid.  Outside
    negative-overlap joins a segment never starts before its predecessor ends.
    Returns ``(segments, duration_ms)``.
    """
    q = cfg.timestamp_quantum_ms
    durations = {cid: clips[cid].duration_ms for cid in plan.clip_ids}
    offsets, total = clip_offsets(plan, durations)
    window_end = cfg.target_window_ms if cfg.pad_to_window else total
    grid_end = _floor(window_end, q)
    segs = []
    prev_end = None
    for k, cid in enumerate(plan.clip_ids):
        b = bounds[cid]
        s = _floor(offsets[k] + b.speech_start_ms, q)
        e = min(_ceil(offsets[k] + b.speech_end_ms, q), grid_end)
        if k and plan.joins[k - 1].kind != "negative_overlap":
            s = max(s, prev_end)
        if s >= e:
            if s + q <= grid_end:
                e = s + q
            else:
                s = e - q
        clip = clips[cid]
        segs.append(SegmentAnnotation(s, e, clip.transcript, clip.speaker_id))
        prev_end = e
    return tuple(segs), total


# ---------------------------------------------------------------- rendering


def load_clip_audio(path, duration_ms, sample_rate_hz=CANONICAL_RATE_HZ):
    """Read a clip, resample to the canonical rate and fit it to ``duration_ms``."""
    a = read_audio(path)
    a = resample(a, sample_rate_hz)
    n = duration_ms * sample_rate_hz // 1000
    if abs(len(a) - n) * 1000 > 50 * sample_rate_hz:
        log.warning("%s: audio is %d ms, manifest says %d ms", path, len(a) * 1000 // sample_rate_hz, duration_ms)
    return a.fit_length(n)


def render_window(plan, cfg, audio_store, bounds, clips):
    """Stitch the plan's clips and annotate the result.

    ``audio_store`` maps a clip id to its :class:`AudioBuffer` at the canonical
    rate, already fitted to the clip's manifest duration.
    """
    segments, total = annotate_window(plan, clips, bounds, cfg)
    audio = None
    for k, cid in enumerate(plan.clip_ids):
        a = audio_store(cid)
        if audio is None:
            audio = a
        else:
            audio = join_with_overlap(audio, a, plan.joins[k - 1].overlap_ms)
    sr = audio.sample_rate_hz
    expected = total * sr // 1000
    if len(audio) != expected:
        raise InfeasiblePlan(
            f"window {plan.index}: rendered {len(audio)} samples, expected {expected}"
        )
    duration = total
    if cfg.pad_to_window:
        audio = audio.fit_length(cfg.target_window_ms * sr // 1000)
        duration = cfg.target_window_ms
    return LongFormSample(
        sample_id=sample_id(plan.index),
        audio=audio,
        segments=segments,
        duration_ms=duration,
        joins=plan.joins,
        window_index=plan.index,
    )


def sample_id(window_index):
    return f"lf{window_index:07d}"


def assign_flags(sample, prior_text, cfg, rng):
    """Draw the timestamp and prompt flags independently.

    A prompt needs context: without ``prior_text`` the prompt flag is forced
    off and no prompt text is attached.
    """
    ts = bool(rng.random() < cfg.p_timestamps)
    prompt = bool(rng.random() < cfg.p_prompt) and bool(prior_text)
    return dataclasses.replace(
        sample,
        emit_timestamps=ts,
        emit_prompt=prompt,
        prompt_text=prior_text if prompt else None,
    )


def prior_texts(plans, clips, shard_size):
    """Prompt context per window: the previous window's transcript within the same shard."""
    out = []
    for i, plan in enumerate(plans):
        if i == 0 or i // shard_size != (i - 1) // shard_size:
            out.append(None)
        else:
            out.append(" ".join(clips[c].transcript for c in plans[i - 1].clip_ids))
    return out


# ---------------------------------------------------------------- emission


@dataclass
class DatasetManifest:
    out_dir: Path
    rows: list
    shard_paths: list = field(default_factory=list)

    @property
    def manifest_path(self):
        return Path(self.out_dir) / "manifest.jsonl"

    def summary(self):
        kinds = Counter(j["kind"] for r in self.rows for j in r.get("joins", ()))
        total_ms = sum(r["duration_ms"] for r in self.rows)
        return {
            "windows": len(self.rows),
            "hours": total_ms / MS_PER_HOUR,
            "segments": sum(len(r["segments"]) for r in self.rows),
            "joins": {k: kinds.get(k, 0) for k in JOIN_KINDS},
        }


def sample_row(sample, cfg, audio_path):
    return {
        "sample_id": sample.sample_id,
        "audio_path": audio_path,
        "duration_ms": sample.duration_ms,
        "segments": [s.to_dict() for s in sample.segments],
        "joins": [j.to_dict() for j in sample.joins],
        "emit_timestamps": sample.emit_timestamps,
        "emit_prompt": sample.emit_prompt,
        "prompt_text": sample.prompt_text,
        "config_digest": cfg.digest(),
        "seed": cfg.seed,
    }


def write_sample_audio(sample, out_dir):
    """Write the sample's WAV under ``out_dir/audio``; returns the path relative to ``out_dir``."""
    rel = f"audio/{sample.sample_id}.wav"
    write_audio(sample.audio, Path(out_dir) / rel)
    return rel


def _write_text_atomic(path, text):
    tmp = Path(f"{path}.tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        if getattr(exc, "errno", None) == 28:
            raise DiskFull(f"disk full while writing {path}") from exc
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _dumps(row):
    return json.dumps(row, ensure_ascii=False, separators=(", ", ": "))


def write_manifests(rows, out_dir, shard_size, cfg=None):
    """Write shard manifests, the combined manifest and the config document."""
    check_int(shard_size, "shard_size", 0, strict=True)
    out_dir = Path(out_dir)
    shard_dir = out_dir / "shards"
    shard_dir.mkdir(parents=True, exist_ok=True)
    shard_paths = []
    for start in range(0, len(rows), shard_size):
        p = shard_dir / f"shard-{start // shard_size:05d}.jsonl"
        _write_text_atomic(p, "".join(_dumps(r) + "\n" for r in rows[start : start + shard_size]))
        shard_paths.append(p)
    if cfg is not None:
        _write_text_atomic(out_dir / "config.json", json.dumps(cfg.to_dict(), indent=2) + "\n")
    manifest = DatasetManifest(out_dir, list(rows), shard_paths)
    # combined manifest goes last: its presence marks a complete run
    _write_text_atomic(manifest.manifest_path, "".join(_dumps(r) + "\n" for r in rows))
    return manifest


def emit_dataset(samples, out_dir, shard_size, cfg=None):
    """Write one WAV per sample plus JSONL manifests (rows in generation order)."""
    cfg = cfg or GenConfig()
    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    rows = []
    for s in samples:
        rel = write_sample_audio(s, out_dir)
        rows.append(sample_row(s, cfg, rel))
    return write_manifests(rows, out_dir, shard_size, cfg)


def load_dataset_manifest(path):
    """Read a manifest written by :func:`emit_dataset` (file or output directory)."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.jsonl"
    with open(path, encoding="utf-8") as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    return DatasetManifest(path.parent, rows)


def segments_from_row(row):
    return tuple(SegmentAnnotation(**s) for s in row["segments"])


# ---------------------------------------------------------------- worker


def _render_task(task):
    plan, cfg, clips, bounds, paths, prior, out_dir = task
    store = {cid: load_clip_audio(paths[cid], clips[cid].duration_ms) for cid in plan.clip_ids}
    sample = render_window(plan, cfg, store.__getitem__, bounds, clips)
    sample = assign_flags(sample, prior, cfg, window_rng(cfg.seed, plan.index, "flags"))
    rel = write_sample_audio(sample, out_dir)
    return sample_row(sample, cfg, rel)


def _bounds_task(task):
    from .vad import NoSpeechDetected, SpeechBounds, speech_bounds

    cid, path, duration_ms, vad_cfg, policy = task
    a = load_clip_audio(path, duration_ms)
    try:
        return cid, speech_bounds(a, vad_cfg, duration_ms=duration_ms)
    except NoSpeechDetected:
        if policy == "assume-full-speech":
            return cid, SpeechBounds.from_interval(0, duration_ms, duration_ms)
        return cid, None


def _map(fn, tasks, n_jobs, chunksize=4):
    if n_jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(fn, tasks, chunksize=chunksize))


def run_pipeline(table, cfg, out_dir, bounds, shard_size=1000, n_jobs=1, plans=None):
    """Plan (unless ``plans`` given), render in parallel, and emit in window order."""
    plans = plans if plans is not None else plan_windows(table, cfg, bounds)
    clips = {c.clip_id: c for c in table.clips}
    priors = prior_texts(plans, clips, shard_size)
    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    tasks = []
    for plan, prior in zip(plans, priors):
        sub_clips = {c: clips[c] for c in plan.clip_ids}
        tasks.append(
            (
                plan,
                cfg,
                sub_clips,
                {c: bounds[c] for c in plan.clip_ids},
                {c: str(table.resolve_audio(clips[c])) for c in plan.clip_ids},
                prior,
                str(out_dir),
            )
        )
    rows = _map(_render_task, tasks, n_jobs)
    return write_manifests(rows, out_dir, shard_size, cfg)
