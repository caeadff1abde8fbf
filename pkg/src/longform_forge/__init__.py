"""Long-form ASR training data from sentence-level corpora, plus WER/BLEU/SubER scoring."""

from .audio import AudioBuffer, join_with_overlap, read_audio, resample, write_audio
from .builder import (
    GenConfig,
    JoinSpec,
    LongFormSample,
    SegmentAnnotation,
    WindowPlan,
    annotate_window,
    assign_flags,
    draw_join,
    emit_dataset,
    load_dataset_manifest,
    plan_windows,
    render_window,
)
from .corpus import (
    CorpusTable,
    SentenceClip,
    StatsReport,
    corpus_stats,
    curate_subset,
    load_manifest,
    write_manifest,
)
from .generator import LongFormGenerator
from .vad import EnergyVAD, SpeechBounds, SpeechSpan, VadConfig, detect_speech_spans, speech_bounds

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "CorpusTable",
    "EnergyVAD",
    "GenConfig",
    "JoinSpec",
    "LongFormGenerator",
    "LongFormSample",
    "SegmentAnnotation",
    "SentenceClip",
    "SpeechBounds",
    "SpeechSpan",
    "StatsReport",
    "VadConfig",
    "WindowPlan",
    "annotate_window",
    "assign_flags",
    "corpus_stats",
    "curate_subset",
    "detect_speech_spans",
    "draw_join",
    "emit_dataset",
    "join_with_overlap",
    "load_dataset_manifest",
    "load_manifest",
    "plan_windows",
    "read_audio",
    "render_window",
    "resample",
    "speech_bounds",
    "write_audio",
    "write_manifest",
]
