"""Convert phoneme-scored annotation trees into corpus manifests.

Expected dataset layout (the public pronunciation-scoring corpus layout):

    root/resource/scores.json      utt_id -> words -> phones + per-phone
                                   accuracy scores on [0, 2]
    root/train/text                one line per training utterance id
    root/test/text                 one line per test utterance id

Annotation phones are uppercase ARPABET-style symbols, possibly carrying a
stress digit or a trailing '*' distortion marker. An editable JSON data
file maps them into the acoustic model's inventory; utterances containing
unmappable phones are skipped and logged, never silently dropped.
"""

import json
import logging
import os
from importlib import resources

from logitgop import load_manifest, manifest_from_dict

from .errors import ExtractionError
from .extract import _atomic_write_text, load_fragment

log = logging.getLogger("gopl_extractor")

DEFAULT_PHONE_MAP = "arpa_to_ipa.json"


def load_phone_map(path: str | os.PathLike | None = None) -> dict[str, str]:
    """Annotation phone -> model symbol. Underscore keys are comments."""
    if path is None:
        text = (
            resources.files("gopl_extractor.data")
            .joinpath(DEFAULT_PHONE_MAP)
            .read_text(encoding="utf-8")
        )
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as err:
            raise ExtractionError(f"{path}: cannot read phone map: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ExtractionError(f"phone map is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise ExtractionError("phone map must be a non-empty string table")
    table = {k: v for k, v in doc.items() if not k.startswith("_")}
    if not table or not all(
        isinstance(k, str) and isinstance(v, str) and k and v
        for k, v in table.items()
    ):
        raise ExtractionError("phone map must be a non-empty string table")
    return table


def normalize_phone(phone: str) -> str:
    """Canonical annotation form: uppercase, no stress digit, no '*' marker."""
    return phone.rstrip("*").rstrip("0123456789").upper()


def _read_split_ids(root: str, split: str) -> set[str]:
    path = os.path.join(root, split, "text")
    if not os.path.exists(path):
        raise ExtractionError(f"missing split listing {path}")
    ids = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                ids.add(line.split()[0])
    return ids


def _flatten_words(utt_id: str, words) -> tuple[list[str], list[float]]:
    phones: list[str] = []
    scores: list[float] = []
    for word in words:
        p = word.get("phones", [])
        a = word.get("phones-accuracy", [])
        if len(p) != len(a):
            raise ExtractionError(
                f"{utt_id}: {len(p)} phones but {len(a)} accuracy scores"
            )
        phones.extend(p)
        scores.extend(float(s) for s in a)
    if not phones:
        raise ExtractionError(f"{utt_id}: no phones in annotation")
    return phones, scores


def convert_speechocean(
    root: str | os.PathLike,
    fragment_path: str | os.PathLike,
    out_path: str | os.PathLike,
    phone_map_path: str | os.PathLike | None = None,
) -> dict:
    """Join annotations with extracted tensors into a validated manifest.

    Returns conversion statistics; the manifest lands at out_path only
    after passing full validation, and is re-read once from disk so a
    written file is a loadable file.
    """
    root = os.fspath(root)
    scores_path = os.path.join(root, "resource", "scores.json")
    try:
        with open(scores_path, encoding="utf-8") as fh:
            annotations = json.load(fh)
    except OSError as err:
        raise ExtractionError(f"missing annotation file: {err}") from err
    except json.JSONDecodeError as err:
        raise ExtractionError(f"{scores_path}: invalid JSON: {err}") from err

    fragment = load_fragment(fragment_path)
    symbols = list(fragment["inventory"]["symbols"])
    blank = int(fragment["inventory"]["blank_index"])
    index_of = {s: i for i, s in enumerate(symbols)}
    # fragment paths are relative to the fragment; the manifest may land
    # elsewhere, and its paths must resolve relative to itself
    fragment_dir = os.path.dirname(os.path.abspath(os.fspath(fragment_path)))
    manifest_dir = os.path.dirname(os.path.abspath(os.fspath(out_path)))
    tensor_of = {
        u["utt_id"]: u["logits_path"]
        if os.path.isabs(u["logits_path"])
        else os.path.relpath(
            os.path.join(fragment_dir, u["logits_path"]), manifest_dir
        )
        for u in fragment["utterances"]
    }
    stride = float(fragment["frame_stride_ms"])
    phone_map = load_phone_map(phone_map_path)

    split_ids = {
        "train": _read_split_ids(root, "train"),
        "test": _read_split_ids(root, "test"),
    }

    utterances = []
    stats = {
        "utterances_converted": 0,
        "utterances_skipped": 0,
        "phonemes_total": 0,
        "phonemes_below_2": 0,
    }

    def skip(utt_id: str, reason: str):
        stats["utterances_skipped"] += 1
        log.warning("skipping %s: %s", utt_id, reason)

    for utt_id in sorted(annotations):
        entry = annotations[utt_id]
        if utt_id in split_ids["train"]:
            split = "train"
        elif utt_id in split_ids["test"]:
            split = "test"
        else:
            skip(utt_id, "not in the train or test listing")
            continue
        if utt_id not in tensor_of:
            skip(utt_id, "no extracted tensor in the fragment")
            continue
        try:
            phones, human = _flatten_words(utt_id, entry.get("words", []))
        except ExtractionError as err:
            skip(utt_id, str(err))
            continue

        canonical = []
        bad_phone = None
        for phone in phones:
            symbol = phone_map.get(normalize_phone(phone))
            index = index_of.get(symbol) if symbol is not None else None
            if index is None or index == blank:
                bad_phone = phone
                break
            canonical.append(index)
        if bad_phone is not None:
            skip(utt_id, f"unmappable phone {bad_phone!r}")
            continue
        if any(not 0.0 <= s <= 2.0 for s in human):
            skip(utt_id, "accuracy score outside [0, 2]")
            continue

        utterances.append(
            {
                "utt_id": utt_id,
                "logits_path": tensor_of[utt_id],
                "canonical_phonemes": canonical,
                "human_scores": human,
                "frame_stride_ms": stride,
                "split": split,
            }
        )
        stats["utterances_converted"] += 1
        stats["phonemes_total"] += len(human)
        stats["phonemes_below_2"] += sum(1 for s in human if s < 2.0)

    if not utterances:
        raise ExtractionError("no utterance survived conversion")

    doc = {
        "inventory": {"symbols": symbols, "blank_index": blank},
        "utterances": utterances,
        "metadata": {"source": "speechocean-annotations", "stats": dict(stats)},
    }
    manifest_from_dict(doc)  # full schema validation before anything lands
    _atomic_write_text(
        os.fspath(out_path),
        json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
    )
    load_manifest(out_path)
    log.info(
        "converted %d utterances (%d skipped); %d of %d phonemes scored "
        "below 2",
        stats["utterances_converted"],
        stats["utterances_skipped"],
        stats["phonemes_below_2"],
        stats["phonemes_total"],
    )
    return stats
