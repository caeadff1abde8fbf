"""Command line entry point: ``generate``, ``evaluate`` and ``stats``.

Exit codes: 0 success, 2 configuration/usage error, 3 data error.
"""

import argparse
import json
import logging
import os
import secrets
import sys
from pathlib import Path

from .builder import MODES, GenConfig
from .corpus import CorpusTable, corpus_stats, curate_subset, load_manifest, verify_durations
from .errors import ConfigError, DataError, ForgeError
from .generator import LongFormGenerator
from .vad import NO_SPEECH_POLICIES, VadConfig

log = logging.getLogger("longform_forge")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

JOBS_ENV = "LONGFORM_FORGE_JOBS"
METRICS = ("wer", "bleu", "suber")

_RUN_KEYS = {"manifests", "out", "sidecar_vad", "vad", "no_speech_policy", "shard_size", "jobs", "curate"}


class UsageError(Exception):
    pass


def _fail(code, msg):
    print(f"error: {msg}", file=sys.stderr)
    return code


# ---------------------------------------------------------------- generate


def load_run_config(path):
    """Read a generate config file; relative paths resolve against the file's directory."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = set(data) - _RUN_KEYS - set(GenConfig.__dataclass_fields__)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    base = Path(path).parent

    def rel(p):
        return str(p) if Path(p).is_absolute() else str(base / p)

    if "manifests" in data:
        m = data["manifests"]
        data["manifests"] = [rel(p) for p in ([m] if isinstance(m, str) else m)]
    for key in ("out", "sidecar_vad"):
        if data.get(key):
            data[key] = rel(data[key])
    return data


def _resolve_jobs(flag, conf):
    if flag is not None:
        return flag
    if conf.get("jobs") is not None:
        return conf["jobs"]
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{JOBS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def build_generate_settings(args):
    conf = load_run_config(args.config) if args.config else {}
    if args.manifest:
        conf["manifests"] = args.manifest
    for flag, key in (("mode", "mode"), ("seed", "seed"), ("out", "out"), ("sidecar_vad", "sidecar_vad")):
        v = getattr(args, flag)
        if v is not None:
            conf[key] = v
    if args.pad_to_window:
        conf["pad_to_window"] = True
    if args.shard_size is not None:
        conf["shard_size"] = args.shard_size

    if not conf.get("manifests"):
        raise UsageError("no input manifest given (use --manifest or 'manifests' in the config)")
    if not conf.get("out"):
        raise UsageError("no output directory given (use --out or 'out' in the config)")
    for p in conf["manifests"]:
        if not os.path.isfile(p):
            raise UsageError(f"manifest not found: {p}")
    if conf.get("sidecar_vad") and not os.path.isfile(conf["sidecar_vad"]):
        raise UsageError(f"sidecar VAD file not found: {conf['sidecar_vad']}")
    out_parent = Path(conf["out"]).resolve().parent
    if not out_parent.is_dir():
        raise UsageError(f"parent of output directory does not exist: {out_parent}")
    if conf.get("mode", "all") not in MODES:
        raise UsageError(f"invalid mode {conf['mode']!r}; valid modes: {', '.join(MODES)}")
    if conf.get("no_speech_policy", "skip-clip") not in NO_SPEECH_POLICIES:
        raise UsageError(f"no_speech_policy must be one of {', '.join(NO_SPEECH_POLICIES)}")

    if conf.get("seed") is None:
        conf["seed"] = secrets.randbits(63)
        print(f"no seed given; using seed {conf['seed']}", file=sys.stderr)

    gen_kwargs = {k: conf[k] for k in GenConfig.__dataclass_fields__ if k in conf}
    try:
        gen_cfg = GenConfig(**gen_kwargs)
        vad_cfg = VadConfig.from_dict(conf.get("vad", {}))
    except (ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    jobs = _resolve_jobs(args.jobs, conf)
    if not isinstance(jobs, int) or jobs < 1:
        raise UsageError(f"jobs must be a positive integer, got {jobs!r}")
    curate = conf.get("curate")
    if curate is not None:
        if not isinstance(curate, dict) or set(curate) - {"clip_count", "hours", "seed"} or (
            ("clip_count" in curate) == ("hours" in curate)
        ):
            raise UsageError("curate must be {'clip_count': n} or {'hours': h}, optionally with 'seed'")
    return {
        "gen": gen_cfg,
        "vad": vad_cfg,
        "manifests": conf["manifests"],
        "out": conf["out"],
        "sidecar": conf.get("sidecar_vad"),
        "no_speech_policy": conf.get("no_speech_policy", "skip-clip"),
        "shard_size": conf.get("shard_size", 1000),
        "jobs": jobs,
        "curate": curate,
    }


def run_generate(args):
    try:
        s = build_generate_settings(args)
    except UsageError as exc:
        return _fail(EXIT_CONFIG, exc)
    cfg = s["gen"]
    try:
        table = CorpusTable.concat(load_manifest(p) for p in s["manifests"])
        if s["curate"]:
            c = dict(s["curate"])
            table = curate_subset(table, seed=c.pop("seed", cfg.seed), **c)
            log.info("curated %d clips", len(table))
        gen = LongFormGenerator.from_config(
            cfg,
            vad=s["vad"],
            sidecar=s["sidecar"],
            no_speech_policy=s["no_speech_policy"],
            shard_size=s["shard_size"],
            n_jobs=s["jobs"],
        )
        log.info("planning %d clips (mode=%s, seed=%d, jobs=%d)", len(table), cfg.mode, cfg.seed, s["jobs"])
        gen.fit(table)
        log.info("%d windows planned, %d clips skipped", len(gen.plans_), len(gen.skipped_))
        manifest = gen.generate(s["out"])
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except (DataError, OSError) as exc:
        return _fail(EXIT_DATA, exc)
    summary = manifest.summary()
    joins = ", ".join(f"{k}={v}" for k, v in summary["joins"].items())
    print(
        f"windows={summary['windows']} hours={summary['hours']:.3f} "
        f"segments={summary['segments']} joins: {joins}",
        file=sys.stderr,
    )
    print(str(manifest.manifest_path))
    return EXIT_OK


# ---------------------------------------------------------------- evaluate


def _read_text(path):
    try:
        with open(path, encoding="utf-8-sig") as fh:
            return fh.read()
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None


def _sentences(text, doc):
    if doc is not None:
        return [b.text for b in doc.blocks]
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    return lines


def evaluate_files(ref_path, hyp_path, metrics=METRICS, doc_level=False, smooth="none"):
    """Compute the requested metrics on normalized text; returns a JSON-ready dict."""
    from .metrics import corpus_bleu, corpus_wer, normalize_text, parse_srt, suber
    from .metrics.srt import looks_like_srt

    ref_text, hyp_text = _read_text(ref_path), _read_text(hyp_path)
    ref_is_srt = Path(ref_path).suffix.lower() == ".srt" or looks_like_srt(ref_text)
    hyp_is_srt = Path(hyp_path).suffix.lower() == ".srt" or looks_like_srt(hyp_text)
    if "suber" in metrics and not (ref_is_srt and hyp_is_srt):
        raise UsageError("SubER requires timed subtitles (SRT) for both --ref and --hyp")
    ref_doc = parse_srt(ref_text).map_lines(normalize_text) if ref_is_srt else None
    hyp_doc = parse_srt(hyp_text).map_lines(normalize_text) if hyp_is_srt else None

    refs = [normalize_text(s) for s in _sentences(ref_text, ref_doc)]
    hyps = [normalize_text(s) for s in _sentences(hyp_text, hyp_doc)]
    if doc_level:
        refs, hyps = [" ".join(refs)], [" ".join(hyps)]

    report = {"ref": str(ref_path), "hyp": str(hyp_path), "doc_level": doc_level}
    if "wer" in metrics:
        report["wer"] = corpus_wer(refs, hyps).to_dict()
    if "bleu" in metrics:
        report["bleu"] = corpus_bleu(refs, hyps, smooth=smooth).to_dict()
    if "suber" in metrics:
        report["suber"] = suber(ref_doc, hyp_doc).to_dict()
    return report


def format_metric_table(reports):
    header = ("Reference", "Hypothesis", "WER", "BLEU", "SubER")
    rows = [header]
    for r in reports:
        rows.append(
            (
                Path(r["ref"]).name,
                Path(r["hyp"]).name,
                f"{100 * r['wer']['wer']:.2f} %" if "wer" in r else "-",
                f"{r['bleu']['score']:.2f}" if "bleu" in r else "-",
                f"{r['suber']['score']:.3f}" if "suber" in r else "-",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = [
        "  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
        for row in rows
    ]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)


def run_evaluate(args):
    metrics = [m.strip().lower() for m in args.metrics.split(",") if m.strip()]
    bad = [m for m in metrics if m not in METRICS]
    if bad or not metrics:
        return _fail(EXIT_CONFIG, f"unknown metric(s) {', '.join(bad) or '(none)'}; choose from {', '.join(METRICS)}")
    try:
        report = evaluate_files(args.ref, args.hyp, metrics, args.doc_level, args.smooth)
    except UsageError as exc:
        return _fail(EXIT_CONFIG, exc)
    except DataError as exc:
        return _fail(EXIT_DATA, exc)
    if args.json == "-":
        print(json.dumps(report, indent=2, ensure_ascii=False))
    else:
        print(format_metric_table([report]))
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                json.dump(report, fh, indent=2, ensure_ascii=False)
    return EXIT_OK


# ---------------------------------------------------------------- stats


def run_stats(args):
    for p in args.manifest:
        if not os.path.isfile(p):
            return _fail(EXIT_CONFIG, f"manifest not found: {p}")
    try:
        tables = [load_manifest(p) for p in args.manifest]
        report = corpus_stats([c for t in tables for c in t.clips])
        mismatches = []
        if args.verify_durations:
            for t in tables:
                mismatches += verify_durations(t)
    except DataError as exc:
        return _fail(EXIT_DATA, exc)
    if args.json:
        print(report.to_json())
    else:
        print(report.format_table())
    for cid, declared, actual in mismatches:
        print(f"duration mismatch: {cid}: manifest {declared} ms, audio {actual} ms", file=sys.stderr)
    return EXIT_DATA if mismatches else EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="longform-forge",
        description="Forge long-form ASR training data from sentence-level corpora and score transcripts.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a long-form dataset")
    g.add_argument("--config", help="JSON run configuration")
    g.add_argument("--manifest", action="append", help="input manifest (repeatable; overrides config)")
    g.add_argument("--mode", choices=MODES)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output directory")
    g.add_argument("--sidecar-vad", dest="sidecar_vad", help="TSV of externally detected speech spans")
    g.add_argument("--pad-to-window", action="store_true", help="zero-pad every sample to the window")
    g.add_argument("--shard-size", type=int)
    g.add_argument("--jobs", type=int, help=f"worker processes (fallback: ${JOBS_ENV}, then CPU count)")
    g.set_defaults(func=run_generate)

    e = sub.add_parser("evaluate", help="score hypotheses against references")
    e.add_argument("--ref", required=True)
    e.add_argument("--hyp", required=True)
    e.add_argument("--metrics", default="wer,bleu", help="comma list of wer,bleu,suber")
    e.add_argument("--json", nargs="?", const="-", help="emit JSON (to stdout, or to the given path)")
    e.add_argument("--doc-level", action="store_true", help="score the whole file as one segment")
    e.add_argument("--smooth", choices=("none", "exp"), default="none", help="BLEU smoothing")
    e.set_defaults(func=run_evaluate)

    s = sub.add_parser("stats", help="hours/speaker overview of manifests")
    s.add_argument("--manifest", action="append", required=True)
    s.add_argument("--json", action="store_true")
    s.add_argument("--verify-durations", action="store_true", help="re-read audio, flag >50 ms mismatches")
    s.set_defaults(func=run_stats)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ForgeError as exc:
        return _fail(EXIT_DATA, exc)


if __name__ == "__main__":
    sys.exit(main())
