"""Evaluation metrics: text normalization, WER, corpus BLEU, SRT handling and SubER."""

from .bleu import BleuReport, corpus_bleu, tokenize_13a
from .normalize import normalize_text
from .srt import SubtitleBlock, SubtitleDoc, format_srt, parse_srt, read_srt
from .suber import SuberReport, suber
from .wer import WerBreakdown, corpus_wer, word_error_rate

__all__ = [
    "BleuReport",
    "SubtitleBlock",
    "SubtitleDoc",
    "SuberReport",
    "WerBreakdown",
    "corpus_bleu",
    "corpus_wer",
    "format_srt",
    "normalize_text",
    "parse_srt",
    "read_srt",
    "suber",
    "tokenize_13a",
    "word_error_rate",
]
