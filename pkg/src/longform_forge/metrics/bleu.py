"""Corpus BLEU with 13a tokenization, mirroring sacreBLEU's defaults."""

import math
import re
from collections import Counter
from dataclasses import dataclass

from ..errors import EmptyCorpus, LengthMismatch

MAX_ORDER = 4

_13A_RULES = [
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
]


def tokenize_13a(line):
    """mteval-v13a tokenization: split punctuation and symbols off words."""
    line = line.replace("<skipped>", "").replace("-\n", "").replace("\n", " ")
    if "&" in line:
        line = (
            line.replace("&quot;", '"')
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">")
        )
    line = f" {line} "
    for pattern, repl in _13A_RULES:
        line = pattern.sub(repl, line)
    return line.split()


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class BleuReport:
    precisions: tuple
    brevity_penalty: float
    score: float
    matches: tuple
    totals: tuple
    hyp_len: int
    ref_len: int

    def to_dict(self):
        return {
            "score": self.score,
            "precisions": list(self.precisions),
            "brevity_penalty": self.brevity_penalty,
            "matches": list(self.matches),
            "totals": list(self.totals),
            "hyp_len": self.hyp_len,
            "ref_len": self.ref_len,
        }


def corpus_bleu(refs, hyps, smooth="none"):
    """Single-reference corpus BLEU on a 0-100 scale.

    ``smooth="none"`` (default) scores 0 as soon as any n-gram precision is 0;
    ``smooth="exp"`` applies sacreBLEU's exponential-decay smoothing.
    """
    refs, hyps = list(refs), list(hyps)
    if len(refs) != len(hyps):
        raise LengthMismatch(f"{len(refs)} references vs {len(hyps)} hypotheses")
    if not refs:
        raise EmptyCorpus("BLEU needs at least one sentence pair")
    if smooth not in ("none", "exp"):
        raise ValueError(f"unknown smoothing {smooth!r}")

    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = ref_len = 0
    for ref, hyp in zip(refs, hyps):
        rt, ht = tokenize_13a(ref), tokenize_13a(hyp)
        hyp_len += len(ht)
        ref_len += len(rt)
        for n in range(1, MAX_ORDER + 1):
            hc = _ngrams(ht, n)
            rc = _ngrams(rt, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(0, len(ht) - n + 1)

    precisions = tuple(m / t if t else 0.0 for m, t in zip(matches, totals))
    if hyp_len == 0:
        bp = 0.0
    elif hyp_len < ref_len:
        bp = math.exp(1.0 - ref_len / hyp_len)
    else:
        bp = 1.0

    if smooth == "exp":
        factor = 1.0
        smoothed = []
        for m, t in zip(matches, totals):
            if t == 0:
                smoothed.append(0.0)
            elif m == 0:
                factor *= 2
                smoothed.append(1.0 / (factor * t))
            else:
                smoothed.append(m / t)
        used = smoothed
    else:
        used = precisions

    if bp == 0.0 or min(used) <= 0.0:
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in used) / MAX_ORDER)
    return BleuReport(precisions, bp, score, tuple(matches), tuple(totals), hyp_len, ref_len)
