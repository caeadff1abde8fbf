"""Word error rate via Levenshtein alignment over whitespace tokens."""

from dataclasses import dataclass

from ..errors import EmptyReference, LengthMismatch


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def errors(self):
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self):
        return self.errors / self.ref_len if self.ref_len else float("inf")

    def __add__(self, other):
        return WerBreakdown(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_len + other.ref_len,
        )

    def to_dict(self):
        return {
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "ref_len": self.ref_len,
            "wer": self.wer,
        }


def align_counts(ref, hyp):
    """Minimal-edit (S, D, I) for token lists ``ref`` and ``hyp``.

    On cost ties the backtrace prefers a substitution/match, then an
    insertion, then a deletion, so the breakdown is canonical.
    """
    n, m = len(ref), len(hyp)
    prev = list(range(m + 1))
    rows = [prev]
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        r = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (r != hyp[j - 1])
            ins = cur[j - 1] + 1
            dele = prev[j] + 1
            cur[j] = min(diag, ins, dele)
        rows.append(cur)
        prev = cur

    s = d = ins_n = 0
    i, j = n, m
    while i or j:
        here = rows[i][j]
        if i and j and here == rows[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            s += ref[i - 1] != hyp[j - 1]
            i -= 1
            j -= 1
        elif j and here == rows[i][j - 1] + 1:
            ins_n += 1
            j -= 1
        else:
            d += 1
            i -= 1
    return s, d, ins_n


def word_error_rate(ref, hyp):
    """WER breakdown of ``hyp`` against ``ref`` (both already normalized)."""
    r, h = ref.split(), hyp.split()
    if not r:
        raise EmptyReference("reference has no words")
    return WerBreakdown(*align_counts(r, h), len(r))


def corpus_wer(refs, hyps):
    """Pooled breakdown over sentence pairs (total edits / total reference words)."""
    refs, hyps = list(refs), list(hyps)
    if len(refs) != len(hyps):
        raise LengthMismatch(f"{len(refs)} references vs {len(hyps)} hypotheses")
    total = WerBreakdown(0, 0, 0, 0)
    for r, h in zip(refs, hyps):
        rt, ht = r.split(), h.split()
        total = total + WerBreakdown(*align_counts(rt, ht), len(rt))
    if total.ref_len == 0:
        raise EmptyReference("references contain no words")
    return total
