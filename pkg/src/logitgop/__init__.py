"""Pronunciation assessment from CTC acoustic model logits.

The pipeline has four stages, each usable on its own:

1. :mod:`logitgop.tensorio` loads logit tensors and corpus manifests.
2. :mod:`logitgop.align` forced-aligns canonical phonemes to frames.
3. :mod:`logitgop.gop` turns aligned spans into per-phoneme scores.
4. :mod:`logitgop.evalkit` / :mod:`logitgop.report` evaluate the scores
   against labels and produce report artifacts.

:mod:`logitgop.simerr` injects substitution errors into unlabeled
corpora so the rest of the pipeline can be exercised end to end.
"""

from .align import (
    AlignedSegment,
    Alignment,
    ctc_align,
    kernel_name,
    log_softmax,
    min_feasible_frames,
    slice_segment,
)
from .errors import (
    AlignmentError,
    BadMagicError,
    EvaluationError,
    LogitGopError,
    ManifestError,
    NonFiniteError,
    ScoringError,
    ShapeMismatchError,
    TensorFormatError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .evalkit import (
    ConfusionCounts,
    EvalReport,
    MetricReport,
    RegressionModel,
    ThresholdDecision,
    confusion_metrics,
    effective_labels,
    evaluate_scores,
    fit_poly2,
    pcc_with_ci,
    report_to_jsonable,
    roc_auc,
    sweep_threshold,
)
from .gop import (
    METRICS,
    ORIENTATION,
    GopConfig,
    ScoredPhoneme,
    gop_combined,
    gop_dnn,
    gop_margin,
    gop_max_logit,
    gop_var_logit,
    score_segment,
    score_utterance,
)
from .report import (
    DistributionSummary,
    PhonemeRateRow,
    distribution_summary,
    phoneme_rate_table,
    silverman_bandwidth,
    write_phoneme_rates_csv,
)
from .simerr import (
    SubstitutionRule,
    apply_substitutions,
    augment_manifest,
    default_rules,
    derive_seed,
    load_rules,
)
from .tensorio import (
    CorpusManifest,
    PhonemeInventory,
    Posteriorgram,
    Utterance,
    load_manifest,
    load_utterance_logits,
    manifest_from_dict,
    manifest_to_dict,
    read_logits,
    resolve_logits_path,
    write_logits,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "LogitGopError",
    "TensorFormatError",
    "BadMagicError",
    "VersionMismatchError",
    "TruncatedPayloadError",
    "ShapeMismatchError",
    "NonFiniteError",
    "ManifestError",
    "AlignmentError",
    "ScoringError",
    "EvaluationError",
    # tensorio
    "Posteriorgram",
    "PhonemeInventory",
    "Utterance",
    "CorpusManifest",
    "read_logits",
    "write_logits",
    "load_manifest",
    "manifest_from_dict",
    "manifest_to_dict",
    "resolve_logits_path",
    "load_utterance_logits",
    # align
    "AlignedSegment",
    "Alignment",
    "ctc_align",
    "log_softmax",
    "min_feasible_frames",
    "slice_segment",
    "kernel_name",
    # gop
    "METRICS",
    "ORIENTATION",
    "GopConfig",
    "ScoredPhoneme",
    "gop_dnn",
    "gop_max_logit",
    "gop_margin",
    "gop_var_logit",
    "gop_combined",
    "score_segment",
    "score_utterance",
    # simerr
    "SubstitutionRule",
    "default_rules",
    "load_rules",
    "derive_seed",
    "apply_substitutions",
    "augment_manifest",
    # evalkit
    "ConfusionCounts",
    "ThresholdDecision",
    "RegressionModel",
    "MetricReport",
    "EvalReport",
    "confusion_metrics",
    "sweep_threshold",
    "roc_auc",
    "fit_poly2",
    "pcc_with_ci",
    "effective_labels",
    "evaluate_scores",
    "report_to_jsonable",
    # report
    "PhonemeRateRow",
    "DistributionSummary",
    "silverman_bandwidth",
    "distribution_summary",
    "phoneme_rate_table",
    "write_phoneme_rates_csv",
]
