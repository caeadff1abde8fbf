"""Scikit-learn style front end for long-form corpus generation."""

import logging

from sklearn.base import BaseEstimator

from ._validation import check_choice, check_int, check_is_fitted
from .builder import (
    GenConfig,
    assign_flags,
    load_clip_audio,
    plan_windows,
    prior_texts,
    render_window,
    run_pipeline,
    window_rng,
    _bounds_task,
    _map,
)
from .corpus import CorpusTable
from .errors import ConfigError
from .vad import NO_SPEECH_POLICIES, SpeechBounds, VadConfig, load_sidecar

log = logging.getLogger(__name__)


class LongFormGenerator(BaseEstimator):
    """Turn a sentence-level :class:`~longform_forge.corpus.CorpusTable` into long-form samples.

    ``fit`` finds the speech bounds of every clip (energy VAD or sidecar spans)
    and plans the windows; ``transform`` renders them one by one and
    ``generate`` renders them to disk, optionally in parallel.

    Parameters
    ----------
    mode : {"sentence_level", "concat", "speaker_ret", "overlap", "neg_overlap", "all"}
        Which junction techniques are active.
    target_window_ms : int, default=30000
        Upper bound on the duration of a generated sample.
    p_speaker_retention, p_overlap, p_negative_overlap : float
        Probability of keeping the speaker at a junction, of overlapping two
        clips, and of an overlap becoming a speech overlap.
    max_pause_overlap_ms, negative_overlap_ms : int, default=200
        Largest silence overlap and the exact speech overlap.
    p_timestamps, p_prompt : float, default=0.5
        Probabilities of the per-sample training flags.
    seed : int
        Single source of all randomness.
    pad_to_window : bool, default=False
        Zero-pad every sample to ``target_window_ms``.
    timestamp_quantum_ms : int, default=20
        Grid that segment boundaries are snapped to.
    vad : VadConfig or dict, optional
        Energy VAD settings.
    sidecar : str or dict, optional
        Path of a ``clip_id/start_ms/end_ms`` TSV, or an already loaded mapping;
        clips listed there skip detection.
    no_speech_policy : {"skip-clip", "assume-full-speech"}
    shard_size : int, default=1000
        Samples per manifest shard; prompts never cross a shard boundary.
    n_jobs : int, default=1
        Worker processes for VAD and rendering.

    Attributes
    ----------
    config_ : GenConfig
    bounds_ : dict
        clip_id -> SpeechBounds (None for skipped clips).
    plans_ : list of WindowPlan
    """

    def __init__(
        self,
        mode="all",
        target_window_ms=30_000,
        p_speaker_retention=0.5,
        p_overlap=0.5,
        max_pause_overlap_ms=200,
        p_negative_overlap=0.1,
        negative_overlap_ms=200,
        p_timestamps=0.5,
        p_prompt=0.5,
        seed=0,
        pad_to_window=False,
        timestamp_quantum_ms=20,
        vad=None,
        sidecar=None,
        no_speech_policy="skip-clip",
        shard_size=1000,
        n_jobs=1,
    ):
        self.mode = mode
        self.target_window_ms = target_window_ms
        self.p_speaker_retention = p_speaker_retention
        self.p_overlap = p_overlap
        self.max_pause_overlap_ms = max_pause_overlap_ms
        self.p_negative_overlap = p_negative_overlap
        self.negative_overlap_ms = negative_overlap_ms
        self.p_timestamps = p_timestamps
        self.p_prompt = p_prompt
        self.seed = seed
        self.pad_to_window = pad_to_window
        self.timestamp_quantum_ms = timestamp_quantum_ms
        self.vad = vad
        self.sidecar = sidecar
        self.no_speech_policy = no_speech_policy
        self.shard_size = shard_size
        self.n_jobs = n_jobs

    @classmethod
    def from_config(cls, cfg, **kwargs):
        return cls(**cfg.to_dict(), **kwargs)

    def get_config(self):
        params = self.get_params()
        return GenConfig(**{k: params[k] for k in GenConfig.__dataclass_fields__})

    def _vad_config(self):
        if self.vad is None:
            return VadConfig()
        if isinstance(self.vad, VadConfig):
            return self.vad
        if isinstance(self.vad, dict):
            return VadConfig.from_dict(self.vad)
        raise ConfigError(f"vad must be a VadConfig or dict, got {type(self.vad).__name__}")

    def _sidecar_spans(self):
        if self.sidecar is None:
            return {}
        if isinstance(self.sidecar, dict):
            return self.sidecar
        return load_sidecar(self.sidecar)

    def compute_bounds(self, X):
        """Speech bounds per clip; sidecar spans take precedence over detection."""
        check_choice(self.no_speech_policy, "no_speech_policy", NO_SPEECH_POLICIES)
        n_jobs = check_int(self.n_jobs, "n_jobs", 1)
        vad_cfg = self._vad_config()
        spans = self._sidecar_spans()
        bounds = {}
        tasks = []
        for c in X.clips:
            if c.clip_id in spans and spans[c.clip_id]:
                s = spans[c.clip_id]
                end = min(s[-1].end_ms, c.duration_ms)
                if s[0].start_ms < end:
                    bounds[c.clip_id] = SpeechBounds.from_interval(s[0].start_ms, end, c.duration_ms)
                    continue
            tasks.append(
                (c.clip_id, str(X.resolve_audio(c)), c.duration_ms, vad_cfg, self.no_speech_policy)
            )
        for cid, b in _map(_bounds_task, tasks, n_jobs, chunksize=16):
            bounds[cid] = b
        skipped = [cid for cid, b in bounds.items() if b is None]
        if skipped:
            log.warning("no speech detected in %d clips; skipped", len(skipped))
        return {c.clip_id: bounds[c.clip_id] for c in X.clips}

    def fit(self, X, y=None, bounds=None):
        """Compute speech bounds (unless given) and plan every window.

        Parameters
        ----------
        X : CorpusTable
        y : ignored
        bounds : dict, optional
            Precomputed clip_id -> SpeechBounds; skips all audio access.
        """
        if not isinstance(X, CorpusTable):
            X = CorpusTable(X)
        self.config_ = self.get_config()
        check_int(self.shard_size, "shard_size", 0, strict=True)
        self.bounds_ = dict(bounds) if bounds is not None else self.compute_bounds(X)
        self.table_ = X
        self.plans_ = plan_windows(X, self.config_, self.bounds_)
        self.skipped_ = [c.clip_id for c in X.clips if self.bounds_.get(c.clip_id) is None]
        return self

    def transform(self, X=None):
        """Yield rendered, flagged :class:`LongFormSample` objects in window order.

        ``X`` is accepted for API symmetry; the fitted table is used.
        """
        check_is_fitted(self, ["plans_"])
        table = self.table_
        clips = {c.clip_id: c for c in table.clips}
        priors = prior_texts(self.plans_, clips, self.shard_size)
        for plan, prior in zip(self.plans_, priors):

            def store(cid):
                return load_clip_audio(table.resolve_audio(clips[cid]), clips[cid].duration_ms)

            sample = render_window(plan, self.config_, store, self.bounds_, clips)
            yield assign_flags(
                sample, prior, self.config_, window_rng(self.config_.seed, plan.index, "flags")
            )

    def generate(self, out_dir):
        """Render all planned windows into ``out_dir``; returns the DatasetManifest."""
        check_is_fitted(self, ["plans_"])
        return run_pipeline(
            self.table_,
            self.config_,
            out_dir,
            self.bounds_,
            shard_size=self.shard_size,
            n_jobs=check_int(self.n_jobs, "n_jobs", 1),
            plans=self.plans_,
        )

    def fit_generate(self, X, out_dir, bounds=None):
        return self.fit(X, bounds=bounds).generate(out_dir)
