"""Sentence-level corpus manifests: loading, writing, statistics and curation."""

import csv
import json
import math
import os
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateClipId,
    EmptyCorpus,
    InsufficientData,
    MalformedRow,
    MissingColumn,
)

REQUIRED_COLUMNS = ("clip_id", "audio_ref", "transcript", "duration_ms")
OPTIONAL_COLUMNS = ("speaker_id", "dialect", "split", "source_corpus")
COLUMNS = REQUIRED_COLUMNS + OPTIONAL_COLUMNS
SPLITS = ("train", "val", "test")
MS_PER_HOUR = 3_600_000


@dataclass(frozen=True)
class SentenceClip:
    clip_id: str
    audio_ref: str
    transcript: str
    duration_ms: int
    speaker_id: str | None = None
    dialect: str | None = None
    split: str = "train"
    source_corpus: str = ""

    def to_dict(self):
        return asdict(self)


@dataclass
class CorpusTable:
    clips: list
    source_path: str | None = None
    format: str | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.clips = list(self.clips)
        index = {}
        for c in self.clips:
            if c.clip_id in index:
                raise DuplicateClipId(c.clip_id)
            index[c.clip_id] = c
        self._index = index

    def __len__(self):
        return len(self.clips)

    def __iter__(self):
        return iter(self.clips)

    def __getitem__(self, clip_id):
        return self._index[clip_id]

    def __contains__(self, clip_id):
        return clip_id in self._index

    @property
    def base_dir(self):
        return Path(self.source_path).parent if self.source_path else Path(".")

    def resolve_audio(self, clip):
        p = Path(clip.audio_ref)
        return p if p.is_absolute() else self.base_dir / p

    @classmethod
    def concat(cls, tables):
        tables = list(tables)
        if len(tables) == 1:
            return tables[0]
        # refs are made absolute so they stay resolvable without a common base dir
        clips = [
            SentenceClip(**{**c.to_dict(), "audio_ref": str(t.resolve_audio(c).resolve())})
            for t in tables
            for c in t.clips
        ]
        return cls(clips)


def _parse_duration(value, rowno):
    if isinstance(value, bool):
        raise MalformedRow(rowno, "duration_ms must be an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise MalformedRow(rowno, f"duration_ms {value!r} is not integral")
        value = int(value)
    if isinstance(value, str):
        try:
            value = int(value.strip())
        except ValueError:
            raise MalformedRow(rowno, f"duration_ms {value!r} is not an integer") from None
    if not isinstance(value, int):
        raise MalformedRow(rowno, f"duration_ms {value!r} is not an integer")
    if value <= 0:
        raise MalformedRow(rowno, f"duration_ms must be positive, got {value}")
    return value


def _make_clip(rec, rowno, default_corpus):
    for col in ("clip_id", "audio_ref"):
        if not isinstance(rec[col], str) or not rec[col]:
            raise MalformedRow(rowno, f"{col} must be a nonempty string")
    if not isinstance(rec["transcript"], str):
        raise MalformedRow(rowno, "transcript must be a string")
    opt = {}
    for col in OPTIONAL_COLUMNS:
        v = rec.get(col)
        if v is None or v == "":
            continue
        if not isinstance(v, str):
            raise MalformedRow(rowno, f"{col} must be a string")
        opt[col] = v
    split = opt.pop("split", "train")
    if split not in SPLITS:
        raise MalformedRow(rowno, f"split {split!r} not in {SPLITS}")
    return SentenceClip(
        clip_id=rec["clip_id"],
        audio_ref=rec["audio_ref"],
        transcript=rec["transcript"],
        duration_ms=_parse_duration(rec["duration_ms"], rowno),
        split=split,
        source_corpus=opt.pop("source_corpus", default_corpus),
        **opt,
    )


def _read_tsv(path):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            raise MissingColumn(REQUIRED_COLUMNS[0], path)
        header = [h.strip() for h in header]
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise MissingColumn(col, path)
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(rowno, f"expected {len(header)} fields, got {len(row)}")
            yield rowno, dict(zip(header, row))


def _read_jsonl(path):
    with open(path, encoding="utf-8-sig") as fh:
        for rowno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRow(rowno, str(exc)) from None
            if not isinstance(rec, dict):
                raise MalformedRow(rowno, "expected a JSON object")
            for col in REQUIRED_COLUMNS:
                if col not in rec:
                    raise MissingColumn(col, path)
            yield rowno, rec


def infer_format(path):
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json", ".ndjson"):
        return "jsonl"
    return "tsv"


def load_manifest(path, format=None):
    """Load a TSV or JSONL sentence manifest into a :class:`CorpusTable`.

    Rows keep file order.  Empty optional fields are treated as absent;
    ``source_corpus`` defaults to the manifest's file stem.
    """
    format = format or infer_format(path)
    if format not in ("tsv", "jsonl"):
        raise ValueError(f"unknown manifest format {format!r}")
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    reader = _read_tsv if format == "tsv" else _read_jsonl
    default_corpus = Path(path).stem
    clips = []
    seen = set()
    for rowno, rec in reader(path):
        clip = _make_clip(rec, rowno, default_corpus)
        if clip.clip_id in seen:
            raise DuplicateClipId(clip.clip_id)
        seen.add(clip.clip_id)
        clips.append(clip)
    return CorpusTable(clips, source_path=str(path), format=format)


def write_manifest(table, path, format=None):
    """Write clips back out in ``format``; load_manifest reads the result field-exactly."""
    format = format or infer_format(path)
    clips = table.clips if isinstance(table, CorpusTable) else list(table)
    if format == "jsonl":
        lines = [
            json.dumps({k: v for k, v in c.to_dict().items() if v is not None}, ensure_ascii=False)
            for c in clips
        ]
    else:
        lines = ["\t".join(COLUMNS)]
        for c in clips:
            vals = ["" if v is None else str(v) for v in (getattr(c, k) for k in COLUMNS)]
            if any(ch in v for v in vals for ch in "\t\r\n"):
                raise MalformedRow(c.clip_id, "field contains tab or newline; use JSONL")
            lines.append("\t".join(vals))
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n" if lines else "")
    os.replace(tmp, path)


@dataclass(frozen=True)
class StatsRow:
    source_corpus: str
    split: str
    total_ms: int
    clip_count: int
    speaker_count: int | None
    speakers_lower_bound: bool = False

    @property
    def total_hours(self):
        return self.total_ms / MS_PER_HOUR


@dataclass(frozen=True)
class StatsReport:
    rows: list
    totals: dict  # split -> StatsRow with source_corpus "Total"

    def to_dict(self):
        def row(r):
            return {
                "name": r.source_corpus,
                "split": r.split,
                "total_hours": r.total_hours,
                "clip_count": r.clip_count,
                "speaker_count": r.speaker_count,
                "speakers_lower_bound": r.speakers_lower_bound,
            }

        return {
            "rows": [row(r) for r in self.rows],
            "totals": {s: row(t) for s, t in self.totals.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def format_table(self):
        header = ("Name", "Split", "Hours", "#Speakers", "#Clips")
        lines = []
        body = []
        for split in SPLITS:
            rows = [r for r in self.rows if r.split == split]
            if not rows:
                continue
            for r in rows:
                body.append(_fmt_row(r))
            body.append(None)
            body.append(_fmt_row(self.totals[split], total=True))
            body.append(None)
        cells = [header] + [b for b in body if b is not None]
        widths = [max(len(c[i]) for c in cells) for i in range(len(header))]

        def fmt(c):
            return "  ".join(
                c[i].ljust(widths[i]) if i < 2 else c[i].rjust(widths[i]) for i in range(len(c))
            ).rstrip()

        rule = "-" * len(fmt(header))
        lines.append(fmt(header))
        lines.append(rule)
        for b in body:
            lines.append(rule if b is None else fmt(b))
        return "\n".join(lines)


def _fmt_row(r, total=False):
    if r.speaker_count is None:
        spk = "--"
    elif total and r.speakers_lower_bound:
        spk = f"> {r.speaker_count:,}"
    else:
        spk = f"{r.speaker_count:,}"
    return (r.source_corpus, r.split.capitalize(), f"{r.total_hours:.2f}", spk, f"{r.clip_count:,}")


def corpus_stats(table):
    """Per (corpus, split) hours/clip/speaker counts plus per-split totals."""
    clips = table.clips if isinstance(table, CorpusTable) else list(table)
    if not clips:
        raise EmptyCorpus("cannot compute statistics of an empty corpus")
    groups = OrderedDict()
    for c in clips:
        g = groups.setdefault((c.source_corpus, c.split), {"ms": 0, "n": 0, "spk": set()})
        g["ms"] += c.duration_ms
        g["n"] += 1
        if c.speaker_id:
            g["spk"].add(c.speaker_id)
    rows = [
        StatsRow(corpus, split, g["ms"], g["n"], len(g["spk"]) if g["spk"] else None)
        for (corpus, split), g in groups.items()
    ]
    rows.sort(key=lambda r: SPLITS.index(r.split))
    totals = {}
    for split in SPLITS:
        members = [(k, g) for k, g in groups.items() if k[1] == split]
        if not members:
            continue
        speakers = set().union(*(g["spk"] for _, g in members))
        totals[split] = StatsRow(
            "Total",
            split,
            sum(g["ms"] for _, g in members),
            sum(g["n"] for _, g in members),
            len(speakers) if speakers else None,
            speakers_lower_bound=any(not g["spk"] for _, g in members),
        )
    return StatsReport(rows, totals)


def curate_subset(table, clip_count=None, hours=None, seed=0):
    """Uniformly sample clips without replacement.

    Exactly one of ``clip_count`` / ``hours`` must be given.  For an hours
    target, clips are taken in sampled order until the cumulative duration
    first reaches the target.
    """
    if (clip_count is None) == (hours is None):
        raise ValueError("give exactly one of clip_count or hours")
    clips = table.clips
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    if clip_count is not None:
        if clip_count > len(clips):
            raise InsufficientData(len(clips), clip_count)
        idx = rng.choice(len(clips), size=int(clip_count), replace=False)
    else:
        target_ms = math.ceil(hours * MS_PER_HOUR - 1e-6)
        available_ms = sum(c.duration_ms for c in clips)
        if available_ms < target_ms:
            raise InsufficientData(available_ms / MS_PER_HOUR, hours, unit="hours")
        order = rng.permutation(len(clips))
        cum = np.cumsum([clips[i].duration_ms for i in order])
        stop = int(np.searchsorted(cum, target_ms, side="left"))
        idx = order[: stop + 1]
    return CorpusTable(
        [clips[i] for i in idx], source_path=table.source_path, format=table.format
    )


def verify_durations(table, tolerance_ms=50):
    """Re-read every clip's audio; return ``(clip_id, manifest_ms, actual_ms)`` for mismatches."""
    from .audio import read_audio

    bad = []
    for c in table.clips:
        a = read_audio(table.resolve_audio(c))
        actual = round(len(a) * 1000 / a.sample_rate_hz)
        if abs(actual - c.duration_ms) > tolerance_ms:
            bad.append((c.clip_id, c.duration_ms, actual))
    return bad
