"""SRT subtitle parsing and canonical formatting."""

import re
import warnings
from dataclasses import dataclass

from ..errors import (
    EmptyDocument,
    EmptyDocumentWarning,
    MalformedBlock,
    MalformedTimestamp,
    NonMonotonicBlocks,
)

_TS = r"(\d{2,}):(\d{2}):(\d{2}),(\d{3})"
_TIMING = re.compile(rf"^\s*{_TS}\s*-->\s*{_TS}\s*$")
_BLANK = re.compile(r"\n[ \t]*\n")


@dataclass(frozen=True)
class SubtitleBlock:
    index: int
    start_ms: int
    end_ms: int
    lines: tuple

    @property
    def text(self):
        return " ".join(self.lines)


@dataclass(frozen=True)
class SubtitleDoc:
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def map_lines(self, fn):
        """Return a copy with ``fn`` applied to every text line."""
        return SubtitleDoc(
            SubtitleBlock(b.index, b.start_ms, b.end_ms, tuple(fn(l) for l in b.lines))
            for b in self.blocks
        )


def _ms(h, m, s, ms):
    return ((int(h) * 60 + int(m)) * 60 + int(s)) * 1000 + int(ms)


def format_timestamp(ms):
    h, rest = divmod(int(ms), 3_600_000)
    m, rest = divmod(rest, 60_000)
    s, ms = divmod(rest, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{ms:03d}"


def parse_srt(text):
    """Parse SRT text into a :class:`SubtitleDoc`.

    Accepts a UTF-8 BOM, CRLF line endings and a missing final newline.
    Errors name the 1-based block position.
    """
    text = text.lstrip("﻿").replace("\r\n", "\n").replace("\r", "\n")
    chunks = [c for c in _BLANK.split(text.strip("\n")) if c.strip()]
    if not chunks:
        raise EmptyDocument("no subtitle blocks found")
    blocks = []
    for pos, chunk in enumerate(chunks, start=1):
        lines = [l.rstrip() for l in chunk.strip("\n").split("\n")]
        if len(lines) < 2:
            raise MalformedBlock(pos, "expected index and timing lines")
        try:
            index = int(lines[0].strip())
        except ValueError:
            raise MalformedBlock(pos, f"bad index line {lines[0]!r}") from None
        m = _TIMING.match(lines[1])
        if not m:
            raise MalformedTimestamp(pos, repr(lines[1]))
        start, end = _ms(*m.groups()[:4]), _ms(*m.groups()[4:])
        if int(m.group(2)) > 59 or int(m.group(3)) > 59 or int(m.group(6)) > 59 or int(m.group(7)) > 59:
            raise MalformedTimestamp(pos, "minutes/seconds out of range")
        if start >= end:
            raise MalformedTimestamp(pos, f"start {start} ms not before end {end} ms")
        if blocks:
            if index <= blocks[-1].index:
                raise NonMonotonicBlocks(f"block {pos}: index {index} after {blocks[-1].index}")
            if start < blocks[-1].start_ms:
                raise NonMonotonicBlocks(f"block {pos}: starts before block {pos - 1}")
        blocks.append(SubtitleBlock(index, start, end, tuple(lines[2:])))
    return SubtitleDoc(blocks)


def format_srt(doc):
    """Canonical SRT: 1-based indices, LF endings, one blank line between blocks."""
    if not doc.blocks:
        warnings.warn("formatting an empty subtitle document", EmptyDocumentWarning, stacklevel=2)
        return ""
    out = []
    for i, b in enumerate(doc.blocks, start=1):
        body = "\n".join(b.lines)
        head = f"{i}\n{format_timestamp(b.start_ms)} --> {format_timestamp(b.end_ms)}\n"
        out.append(head + (body + "\n" if b.lines else ""))
    return "\n".join(out)


def read_srt(path):
    with open(path, encoding="utf-8-sig") as fh:
        return parse_srt(fh.read())


def looks_like_srt(text):
    """Cheap sniff: first non-blank line is an integer and the next one a timing line."""
    lines = [l for l in text.lstrip("﻿").replace("\r\n", "\n").split("\n")]
    while lines and not lines[0].strip():
        lines.pop(0)
    return (
        len(lines) >= 2
        and lines[0].strip().isdigit()
        and bool(_TIMING.match(lines[1]))
    )
