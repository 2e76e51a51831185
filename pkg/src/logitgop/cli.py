"""Command-line pipeline: align -> score -> evaluate -> report, plus
simulate for corpora without mispronunciation annotations.

Stages hand off through files (JSONL alignments, CSV scores, JSON
reports) so the cheap stages can be re-run with different knobs without
repeating alignment. Every output is written to a temporary file and
atomically renamed; a failing stage leaves no partial artifacts.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile

from . import align as alignmod
from . import evalkit, report as reportmod, simerr, tensorio
from .errors import LogitGopError, ManifestError
from .gop import METRICS, GopConfig, ScoredPhoneme, score_utterance

log = logging.getLogger("logitgop")

SCORES_HEADER = [
    "utt_id",
    "position",
    "phoneme",
    "t1",
    "t2",
    "gop_dnn",
    "gop_maxlogit",
    "gop_margin",
    "gop_varlogit",
    "gop_combined",
    "label",
    "human_score",
]


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _bool_flag(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {value!r}")


def _pmap(fn, items, jobs: int):
    """Map preserving input order; processes when jobs > 1."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_corpus(manifest_path: str) -> tensorio.CorpusManifest:
    return tensorio.load_manifest(manifest_path)


# ---------------------------------------------------------------- align


def _align_one(task):
    manifest_path, utt_id, logits_path, targets, blank, stride, expected_v = task
    try:
        pgram = tensorio.read_logits(
            logits_path, expected_v, utt_id=utt_id, frame_stride_ms=stride
        )
        alignment = alignmod.ctc_align(pgram, targets, blank)
    except (LogitGopError, OSError) as err:
        raise LogitGopError(f"utterance '{utt_id}': {err}") from err
    return [
        {
            "utt_id": utt_id,
            "position": seg.position,
            "phoneme": seg.phoneme,
            "t1": seg.t1,
            "t2": seg.t2,
            "span_score": seg.span_score,
        }
        for seg in alignment.segments
    ]


def _alignment_tasks(manifest_path, corpus):
    v = len(corpus.inventory)
    blank = corpus.inventory.blank_index
    return [
        (
            manifest_path,
            u.utt_id,
            tensorio.resolve_logits_path(manifest_path, u),
            u.canonical_phonemes,
            blank,
            u.frame_stride_ms,
            v,
        )
        for u in corpus.utterances
    ]


def cmd_align(args) -> int:
    corpus = _load_corpus(args.manifest)
    tasks = _alignment_tasks(args.manifest, corpus)
    groups = _pmap(_align_one, tasks, args.jobs)
    lines = [json.dumps(rec, sort_keys=True) for group in groups for rec in group]
    _atomic_write(args.out, "\n".join(lines) + ("\n" if lines else ""))
    log.info("aligned %d utterances -> %s", len(corpus), args.out)
    return 0


# ---------------------------------------------------------------- score


def _read_alignment_dump(path) -> dict[str, list[dict]]:
    by_utt: dict[str, list[dict]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as err:
                raise LogitGopError(f"{path}:{line_no}: bad JSONL record: {err}") from err
            by_utt.setdefault(rec["utt_id"], []).append(rec)
    for records in by_utt.values():
        records.sort(key=lambda r: r["position"])
    return by_utt


def _score_one(task):
    (utt_id, logits_path, expected_v, stride, canonical, spoken, human, records,
     cfg, blank) = task
    if len(records) != len(canonical):
        raise LogitGopError(
            f"utterance '{utt_id}': alignment dump has {len(records)} segments, "
            f"manifest expects {len(canonical)}"
        )
    segments = []
    for rec, target in zip(records, canonical):
        if rec["phoneme"] != target:
            raise LogitGopError(
                f"utterance '{utt_id}': alignment dump phoneme {rec['phoneme']} "
                f"does not match canonical {target} at position {rec['position']}"
            )
        segments.append(
            alignmod.AlignedSegment(
                position=rec["position"],
                phoneme=rec["phoneme"],
                t1=rec["t1"],
                t2=rec["t2"],
                span_score=rec["span_score"],
            )
        )
    try:
        pgram = tensorio.read_logits(
            logits_path, expected_v, utt_id=utt_id, frame_stride_ms=stride
        )
        # total path score is not carried by the segment dump
        alignment = alignmod.Alignment(
            utt_id=utt_id, segments=tuple(segments), total_path_logprob=math.nan
        )
        labels = None
        if spoken is not None:
            labels = [s != c for s, c in zip(spoken, canonical)]
        return score_utterance(
            pgram, alignment, cfg, blank=blank, labels=labels, human_scores=human
        )
    except (LogitGopError, OSError) as err:
        raise LogitGopError(f"utterance '{utt_id}': {err}") from err


def _format_opt(value) -> str:
    return "" if value is None else repr(value)


def _scores_to_csv(scored: list[ScoredPhoneme]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCORES_HEADER)
    for s in scored:
        writer.writerow(
            [
                s.utt_id,
                s.position,
                s.phoneme,
                s.t1,
                s.t2,
                repr(s.gop_dnn),
                repr(s.gop_max_logit),
                repr(s.gop_margin),
                repr(s.gop_var_logit),
                repr(s.gop_combined),
                "" if s.label is None else int(s.label),
                _format_opt(s.human_score),
            ]
        )
    return buf.getvalue()


def _gop_config(args) -> GopConfig:
    return GopConfig(
        alpha=args.alpha,
        exclude_blank_from_competitors=args.exclude_blank_competitors,
        exclude_blank_from_softmax=args.exclude_blank_softmax,
    )


def cmd_score(args) -> int:
    corpus = _load_corpus(args.manifest)
    by_utt = _read_alignment_dump(args.alignments)
    cfg = _gop_config(args)
    blank = corpus.inventory.blank_index
    v = len(corpus.inventory)
    tasks = []
    for u in corpus.utterances:
        if u.utt_id not in by_utt:
            raise LogitGopError(
                f"utterance '{u.utt_id}': no records in alignment dump"
            )
        tasks.append(
            (
                u.utt_id,
                tensorio.resolve_logits_path(args.manifest, u),
                v,
                u.frame_stride_ms,
                u.canonical_phonemes,
                u.spoken_phonemes,
                u.human_scores,
                by_utt[u.utt_id],
                cfg,
                blank,
            )
        )
    scored_groups = _pmap(_score_one, tasks, args.jobs)
    scored = [s for group in scored_groups for s in group]
    _atomic_write(args.out, _scores_to_csv(scored))
    log.info("scored %d phonemes -> %s", len(scored), args.out)
    return 0


# ------------------------------------------------------------- evaluate


def _parse_scores_csv(path) -> list[ScoredPhoneme]:
    scored = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCORES_HEADER:
            raise LogitGopError(f"{path}: unexpected scores header {header}")
        for row in reader:
            if not row:
                continue
            scored.append(
                ScoredPhoneme(
                    utt_id=row[0],
                    position=int(row[1]),
                    phoneme=int(row[2]),
                    t1=int(row[3]),
                    t2=int(row[4]),
                    gop_dnn=float(row[5]),
                    gop_max_logit=float(row[6]),
                    gop_margin=float(row[7]),
                    gop_var_logit=float(row[8]),
                    gop_combined=float(row[9]),
                    label=None if row[10] == "" else bool(int(row[10])),
                    human_score=None if row[11] == "" else float(row[11]),
                )
            )
    if not scored:
        raise LogitGopError(f"{path}: no scored phonemes")
    return scored


def _percentile_grid(args):
    if not 1 <= args.percentile_min <= args.percentile_max <= 99:
        raise LogitGopError("percentile bounds must satisfy 1 <= min <= max <= 99")
    return range(args.percentile_min, args.percentile_max + 1)


def _write_report_files(out_dir, scored, labels, decision, symbols):
    rows = reportmod.phoneme_rate_table(scored, labels, decision, symbols=symbols)
    buf = io.StringIO()
    reportmod.write_phoneme_rates_csv(rows, buf)
    _atomic_write(os.path.join(out_dir, "phoneme_rates.csv"), buf.getvalue())

    summaries = {
        m: reportmod.distribution_summary(scored, labels, m) for m in METRICS
    }
    _atomic_write(
        os.path.join(out_dir, "distributions.json"),
        reportmod.dump_json(reportmod.distributions_to_jsonable(summaries)),
    )


def _resolve_symbols(scored, manifest_path):
    """Symbols for the rate table: inventory when given, else index strings."""
    if manifest_path:
        inventory = _load_corpus(manifest_path).inventory
        return list(inventory.symbols)
    size = max(s.phoneme for s in scored) + 1
    return [str(i) for i in range(size)]


def cmd_evaluate(args) -> int:
    scored = _parse_scores_csv(args.scores)
    split_of = None
    if args.manifest:
        corpus = _load_corpus(args.manifest)
        split_of = {u.utt_id: u.split for u in corpus.utterances}
    grid = _percentile_grid(args)
    rpt = evalkit.evaluate_scores(
        scored,
        split_of=split_of,
        human_threshold=args.human_threshold,
        percentiles=grid,
        config_echo={
            "human_threshold": args.human_threshold,
            "percentile_min": args.percentile_min,
            "percentile_max": args.percentile_max,
            "report_metric": args.metric,
        },
    )
    for warning in rpt.warnings:
        log.warning("%s", warning)
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(
        os.path.join(args.out, "eval_report.json"),
        reportmod.dump_json(evalkit.report_to_jsonable(rpt)),
    )
    labels = evalkit.effective_labels(
        [s.label for s in scored],
        [s.human_score for s in scored],
        args.human_threshold,
    )
    decision = rpt.metrics[args.metric].decision
    if all(l is not None for l in labels) and decision is not None:
        symbols = _resolve_symbols(scored, args.manifest)
        _write_report_files(args.out, scored, labels, decision, symbols)
    log.info("evaluation written to %s", args.out)
    return 0


# --------------------------------------------------------------- report


def cmd_report(args) -> int:
    scored = _parse_scores_csv(args.scores)
    with open(args.eval_report, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    row = doc.get("metrics", {}).get(args.metric)
    if not row or "threshold" not in row:
        raise LogitGopError(
            f"{args.eval_report}: no threshold decision for metric '{args.metric}'"
        )
    decision = evalkit.ThresholdDecision(
        metric_name=args.metric,
        threshold=row["threshold"],
        percentile=row["percentile"],
        orientation=row["orientation"],
    )
    labels = evalkit.effective_labels(
        [s.label for s in scored],
        [s.human_score for s in scored],
        args.human_threshold,
    )
    if any(l is None for l in labels):
        raise LogitGopError("report needs a label or human score for every row")
    symbols = _resolve_symbols(scored, args.manifest)
    os.makedirs(args.out, exist_ok=True)
    rows = reportmod.phoneme_rate_table(scored, labels, decision, symbols=symbols)
    buf = io.StringIO()
    reportmod.write_phoneme_rates_csv(rows, buf)
    _atomic_write(os.path.join(args.out, "phoneme_rates.csv"), buf.getvalue())
    summaries = {
        m: reportmod.distribution_summary(scored, labels, m) for m in METRICS
    }
    _atomic_write(
        os.path.join(args.out, "distributions.json"),
        reportmod.dump_json(reportmod.distributions_to_jsonable(summaries)),
    )
    log.info("report files written to %s", args.out)
    return 0


# ------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    corpus = _load_corpus(args.manifest)
    rules = simerr.load_rules(args.rules) if args.rules else simerr.default_rules()
    augmented, sidecar = simerr.augment_manifest(corpus, rules, args.seed)
    _atomic_write(
        args.out, reportmod.dump_json(tensorio.manifest_to_dict(augmented))
    )
    sidecar_path = (
        args.out[: -len(".json")] + ".labels.json"
        if args.out.endswith(".json")
        else args.out + ".labels.json"
    )
    _atomic_write(sidecar_path, reportmod.dump_json(sidecar))
    log.info("augmented manifest -> %s (labels sidecar %s)", args.out, sidecar_path)
    return 0


# ----------------------------------------------------------------- main


def _add_gop_flags(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, default=0.5,
                   help="mixing weight of the combined score (default 0.5)")
    p.add_argument("--exclude-blank-competitors", type=_bool_flag, default=True,
                   metavar="BOOL",
                   help="drop blank from the margin competitor set (default true)")
    p.add_argument("--exclude-blank-softmax", type=_bool_flag, default=False,
                   metavar="BOOL",
                   help="renormalize posteriors without blank (default false)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logitgop",
        description="Pronunciation scoring from CTC logits: alignment, GOP "
        "scores, threshold evaluation and reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="forced-align every utterance of a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="alignment dump (JSONL)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("score", help="compute GOP scores from an alignment dump")
    p.add_argument("--manifest", required=True)
    p.add_argument("--alignments", required=True)
    p.add_argument("--out", required=True, help="scores CSV path")
    p.add_argument("--jobs", type=int, default=1)
    _add_gop_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="thresholds, metrics, regression, reports")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--manifest", help="needed for train/test splits and symbols")
    p.add_argument("--human-threshold", type=float, default=2.0,
                   help="human score below this counts as mispronounced")
    p.add_argument("--percentile-min", type=int, default=1)
    p.add_argument("--percentile-max", type=int, default=99)
    p.add_argument("--metric", default="max_logit", choices=METRICS,
                   help="metric for the phoneme rate table")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="regenerate report files from scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--eval-report", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--manifest", help="inventory for phoneme symbols")
    p.add_argument("--metric", default="max_logit", choices=METRICS)
    p.add_argument("--human-threshold", type=float, default=2.0)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="inject substitution errors into a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="augmented manifest path")
    p.add_argument("--rules", help="JSON rule file (default: built-in rule set)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LogitGopError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
