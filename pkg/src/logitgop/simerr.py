"""Simulated substitution errors for corpora without mispronunciation labels.

Injects 1:1 phoneme substitutions into canonical sequences, producing a
spoken sequence plus boolean labels marking where a rule fired. Only
substitutions are supported; insertions/deletions would break the 1:1
position invariant the manifest relies on.
"""

from __future__ import annotations

import json
import random
import zlib
from dataclasses import dataclass

from .errors import ManifestError
from .tensorio import CorpusManifest, PhonemeInventory, Utterance

# Default substitution set: frequent L1-transfer confusions (dental
# fricatives, ash-lowering, diphthong simplification), fired on every
# eligible position unless a rule says otherwise.
DEFAULT_RULES_SPEC = (
    ("ð", "d", 1.0),
    ("θ", "s", 1.0),
    ("æ", "e", 1.0),
    ("eɪ", "e:", 1.0),
)


@dataclass(frozen=True)
class SubstitutionRule:
    from_symbol: str
    to_symbol: str
    probability: float

    def __post_init__(self):
        if self.from_symbol == self.to_symbol:
            raise ValueError(f"rule maps {self.from_symbol!r} to itself")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"rule probability {self.probability} outside [0, 1]")


def default_rules() -> list[SubstitutionRule]:
    return [SubstitutionRule(f, t, p) for f, t, p in DEFAULT_RULES_SPEC]


def load_rules(path) -> list[SubstitutionRule]:
    """Read a rule file: a JSON list of {from, to, probability} objects."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise ManifestError(f"{path}: rule file must be a JSON list")
    rules = []
    for entry in doc:
        try:
            rules.append(
                SubstitutionRule(
                    from_symbol=entry["from"],
                    to_symbol=entry["to"],
                    probability=float(entry.get("probability", 1.0)),
                )
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ManifestError(f"{path}: bad rule {entry!r}: {err}") from err
    return rules


def rules_to_jsonable(rules) -> list[dict]:
    return [
        {"from": r.from_symbol, "to": r.to_symbol, "probability": r.probability}
        for r in rules
    ]


def derive_seed(seed: int, utt_id: str) -> int:
    """Stable per-utterance seed; crc32 keeps it reproducible across runs."""
    return seed ^ zlib.crc32(utt_id.encode("utf-8"))


def _resolve_rules(rules, inventory: PhonemeInventory) -> dict[int, tuple[int, float]]:
    table = {}
    for r in rules:
        try:
            src = inventory.index_of(r.from_symbol)
            dst = inventory.index_of(r.to_symbol)
        except KeyError as err:
            raise ManifestError(f"substitution rule uses unknown symbol: {err}") from err
        if src == inventory.blank_index or dst == inventory.blank_index:
            raise ManifestError("substitution rules may not involve the blank symbol")
        if src in table:
            raise ManifestError(
                f"multiple rules for source symbol {r.from_symbol!r}"
            )
        table[src] = (dst, r.probability)
    return table


def apply_substitutions(
    canonical, rules, inventory: PhonemeInventory, seed: int
) -> tuple[list[int], list[bool]]:
    """Apply substitution rules to one canonical sequence.

    Deterministic for a fixed seed; positions with no matching rule are
    never altered. Returns (spoken, labels) with labels[i] true exactly
    where a substitution fired.
    """
    table = _resolve_rules(rules, inventory)
    rng = random.Random(seed)
    spoken: list[int] = []
    labels: list[bool] = []
    for idx in canonical:
        idx = int(idx)
        hit = table.get(idx)
        if hit is not None and rng.random() < hit[1]:
            spoken.append(hit[0])
            labels.append(True)
        else:
            spoken.append(idx)
            labels.append(False)
    return spoken, labels


def augment_manifest(
    manifest: CorpusManifest, rules, seed: int
) -> tuple[CorpusManifest, dict[str, list[bool]]]:
    """Inject substitutions into every utterance of a manifest.

    Returns the augmented manifest (spoken_phonemes filled in, the rule
    set and seed recorded in metadata for reproducibility) plus a labels
    sidecar mapping utt_id to its boolean label list.
    """
    _resolve_rules(rules, manifest.inventory)
    new_utts = []
    sidecar: dict[str, list[bool]] = {}
    for u in manifest.utterances:
        spoken, labels = apply_substitutions(
            u.canonical_phonemes, rules, manifest.inventory, derive_seed(seed, u.utt_id)
        )
        sidecar[u.utt_id] = labels
        new_utts.append(
            Utterance(
                utt_id=u.utt_id,
                logits_path=u.logits_path,
                canonical_phonemes=u.canonical_phonemes,
                frame_stride_ms=u.frame_stride_ms,
                split=u.split,
                spoken_phonemes=tuple(spoken),
                human_scores=u.human_scores,
            )
        )
    metadata = dict(manifest.metadata)
    metadata["simulation"] = {"seed": seed, "rules": rules_to_jsonable(rules)}
    return (
        CorpusManifest(
            inventory=manifest.inventory,
            utterances=tuple(new_utts),
            metadata=metadata,
        ),
        sidecar,
    )
