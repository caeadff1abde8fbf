"""Subtitle edit rate: TER over words plus end-of-block tokens, with a time constraint.

Both documents are linearized into tokens that remember the time interval of
the block they came from.  A reference and a hypothesis token may only be
matched or substituted when those intervals overlap; otherwise they have to be
deleted and inserted.  Phrase shifts are searched greedily as in TER.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyReference

BREAK = "<eob>"
MAX_SHIFT_DISTANCE = 10
MAX_PHRASE_LENGTH = 5


@dataclass(frozen=True)
class Token:
    word: str
    start_ms: int
    end_ms: int

    @property
    def is_break(self):
        return self.word == BREAK


@dataclass(frozen=True)
class SuberReport:
    substitutions: int
    deletions: int
    insertions: int
    shifts: int
    break_edits: int
    ref_token_count: int
    max_shift_distance: int = MAX_SHIFT_DISTANCE
    max_phrase_length: int = MAX_PHRASE_LENGTH

    @property
    def total_edits(self):
        return self.substitutions + self.deletions + self.insertions + self.shifts

    @property
    def score(self):
        return self.total_edits / self.ref_token_count

    def to_dict(self):
        return {
            "score": self.score,
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "shifts": self.shifts,
            "break_edits": self.break_edits,
            "ref_token_count": self.ref_token_count,
            "max_shift_distance": self.max_shift_distance,
            "max_phrase_length": self.max_phrase_length,
        }


def linearize(doc):
    """Words of every block followed by one end-of-block token, all carrying the block interval."""
    out = []
    for b in sorted(doc.blocks, key=lambda b: (b.start_ms, b.end_ms)):
        for w in b.text.split():
            out.append(Token(w, b.start_ms, b.end_ms))
        out.append(Token(BREAK, b.start_ms, b.end_ms))
    return out


def _split_parts(ref, hyp):
    """Cut both token streams at instants that no block of either side spans.

    Tokens on different sides of such an instant can never be matched, so the
    edit computation decomposes exactly over the parts.
    """
    events = sorted(
        [(t.start_ms, t.end_ms, 0, i) for i, t in enumerate(ref) if t.is_break]
        + [(t.start_ms, t.end_ms, 1, i) for i, t in enumerate(hyp) if t.is_break]
    )
    parts = []
    r0 = h0 = 0
    reach = None
    r_end = h_end = 0
    for start, end, side, idx in events:
        if reach is not None and start >= reach:
            parts.append((ref[r0:r_end], hyp[h0:h_end]))
            r0, h0 = r_end, h_end
        reach = end if reach is None or start >= reach else max(reach, end)
        if side == 0:
            r_end = idx + 1
        else:
            h_end = idx + 1
    parts.append((ref[r0:], hyp[h0:]))
    return parts


class _Part:
    """Edit-distance machinery for one ref/hyp part with a fixed token vocabulary."""

    def __init__(self, ref, hyp):
        self.ref = ref
        self.hyp = list(hyp)
        self.m = len(ref)
        rs = np.array([t.start_ms for t in ref], dtype=np.int64)
        re_ = np.array([t.end_ms for t in ref], dtype=np.int64)
        rw = [t.word for t in ref]
        self._row_cost = {}
        for t in set(self.hyp):
            ok = (rs < t.end_ms) & (t.start_ms < re_)
            cost = np.where(ok, np.array([w != t.word for w in rw], dtype=np.float64), np.inf)
            self._row_cost[t] = cost
        self._cols = np.arange(self.m + 1, dtype=np.float64)

    def _rows(self, hyp, first_row=None, start=0):
        """DP rows for ``hyp`` (hyp tokens outer, ref tokens inner).

        Row i holds the cost of aligning hyp[:i] with every ref prefix.  When
        ``first_row`` is given it is row ``start`` and computation resumes there.
        """
        m = self.m
        cols = self._cols
        prev = cols.copy() if first_row is None else first_row
        rows = [prev]
        for i in range(start, len(hyp)):
            cost = self._row_cost[hyp[i]]
            base = np.empty(m + 1)
            base[0] = prev[0] + 1
            if m:
                base[1:] = np.minimum(prev[:-1] + cost, prev[1:] + 1)
            cur = np.minimum.accumulate(base - cols) + cols
            rows.append(cur)
            prev = cur
        return rows

    def distance(self, hyp, cache=None, start=0):
        if cache is None or start == 0:
            return self._rows(hyp)[-1][-1]
        return self._rows(hyp, cache[start], start)[-1][-1]

    def _phrase_matches(self, hyp, i, length):
        words = [t.word for t in hyp[i : i + length]]
        for j in range(self.m - length + 1):
            if all(
                self.ref[j + k].word == words[k]
                and self.ref[j + k].start_ms < hyp[i + k].end_ms
                and hyp[i + k].start_ms < self.ref[j + k].end_ms
                for k in range(length)
            ):
                return True
        return False

    def best_shift(self, hyp, current):
        """Best (gain, new_hyp) over all admissible shifts, or None when nothing helps."""
        rows = self._rows(hyp)
        best_gain = 0
        best = None
        n = len(hyp)
        for i in range(n):
            for length in range(1, MAX_PHRASE_LENGTH + 1):
                if i + length > n:
                    break
                if not self._phrase_matches(hyp, i, length):
                    continue
                phrase = hyp[i : i + length]
                rest = hyp[:i] + hyp[i + length :]
                lo = max(0, i - MAX_SHIFT_DISTANCE)
                hi = min(len(rest), i + MAX_SHIFT_DISTANCE)
                for k in range(lo, hi + 1):
                    if k == i:
                        continue
                    cand = rest[:k] + phrase + rest[k:]
                    d = self.distance(cand, rows, min(i, k))
                    gain = current - d
                    if gain > best_gain:
                        best_gain = gain
                        best = cand
        return (best_gain, best) if best is not None else None

    def counts(self, hyp):
        """(S, D, I, break_edits) of the minimal alignment; ties prefer S, then I, then D."""
        ref = self.ref
        n, m = len(hyp), self.m
        D = np.vstack(self._rows(hyp))
        s = d = ins = brk = 0
        i, j = n, m
        while i or j:
            here = D[i, j]
            if i and j:
                c = self._row_cost[hyp[i - 1]][j - 1]
                if np.isfinite(c) and here == D[i - 1, j - 1] + c:
                    if c:
                        s += 1
                        brk += hyp[i - 1].is_break or ref[j - 1].is_break
                    i -= 1
                    j -= 1
                    continue
            if i and here == D[i - 1, j] + 1:
                ins += 1
                brk += hyp[i - 1].is_break
                i -= 1
            else:
                d += 1
                brk += ref[j - 1].is_break
                j -= 1
        return s, d, ins, brk


def _score_part(ref, hyp, shifts=True):
    part = _Part(ref, hyp)
    current = part.distance(hyp)
    n_shifts = 0
    if shifts:
        while current > 0:
            found = part.best_shift(hyp, current)
            if found is None:
                break
            gain, hyp = found
            current -= gain
            n_shifts += 1
    return part.counts(hyp) + (n_shifts,)


def suber(ref, hyp, shifts=True):
    """Subtitle edit rate of ``hyp`` against ``ref`` (both :class:`SubtitleDoc`).

    Lines should already be normalized.  ``shifts=False`` disables the shift
    search, leaving a time-constrained Levenshtein rate.
    """
    ref_tokens = linearize(ref)
    if not ref_tokens:
        raise EmptyReference("reference subtitle document is empty")
    hyp_tokens = linearize(hyp)
    s = d = i = brk = sh = 0
    for r, h in _split_parts(ref_tokens, hyp_tokens):
        ps, pd, pi, pb, psh = _score_part(r, h, shifts)
        s, d, i, brk, sh = s + ps, d + pd, i + pi, brk + pb, sh + psh
    return SuberReport(s, d, i, sh, brk, len(ref_tokens))
