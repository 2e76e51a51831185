"""Batch inference: wav files in, .gopl tensors plus a manifest fragment out.

The fragment records the inventory, stride, and one entry per utterance; an
annotation converter later joins it with transcripts and human scores to
form a full corpus manifest. Raw pre-softmax logits are serialized; no
normalization is ever applied to the stored values.
"""

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
from logitgop import Posteriorgram, read_logits, write_logits

from .audio import load_audio
from .errors import ExtractionError
from .model import LoadedModel, invert_vocab, load_model

log = logging.getLogger("gopl_extractor")

FRAGMENT_NAME = "extraction.json"


@dataclass(frozen=True)
class ExtractionJob:
    audio_paths: tuple[str, ...]
    model_identifier: str
    output_dir: str
    # optional override: model-output index -> symbol; defaults to the
    # checkpoint's own tokenizer vocabulary
    inventory_map: dict[int, str] | None = field(default=None)

    def __post_init__(self):
        if not self.audio_paths:
            raise ExtractionError("no audio files to process")
        missing = [p for p in self.audio_paths if not os.path.isfile(p)]
        if missing:
            raise ExtractionError(f"audio files not readable: {missing[:5]}")
        stems = [_utt_id(p) for p in self.audio_paths]
        if len(set(stems)) != len(stems):
            dupes = sorted({s for s in stems if stems.count(s) > 1})
            raise ExtractionError(f"duplicate utterance ids: {dupes[:5]}")


def _utt_id(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _atomic_write_text(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_tensor(p: Posteriorgram, path: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".gopl")
    os.close(fd)
    try:
        write_logits(p, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _infer(loaded: LoadedModel, waveform: np.ndarray) -> np.ndarray:
    import torch

    if loaded.feature_extractor is not None:
        batch = loaded.feature_extractor(
            waveform, sampling_rate=16_000, return_tensors="pt"
        )
        inputs = batch.input_values
    else:
        inputs = torch.from_numpy(waveform[np.newaxis, :])
    with torch.no_grad():
        logits = loaded.model(inputs).logits
    return logits.squeeze(0).cpu().numpy().astype(np.float64)


def extract_logits(job: ExtractionJob, loaded: LoadedModel | None = None) -> str:
    """Run the model over every clip; write tensors and the fragment.

    Returns the fragment path. Every emitted tensor is read back through
    the container validator before the fragment is written, so a fragment
    on disk implies all its tensors are loadable.
    """
    if loaded is None:
        loaded = load_model(job.model_identifier)
    symbols = loaded.symbols
    if job.inventory_map is not None:
        vocab = {sym: idx for idx, sym in job.inventory_map.items()}
        if len(vocab) != len(job.inventory_map):
            raise ExtractionError("inventory_map has duplicate symbols")
        symbols = invert_vocab(vocab, len(loaded))

    os.makedirs(job.output_dir, exist_ok=True)
    entries = []
    for path in job.audio_paths:
        utt_id = _utt_id(path)
        waveform = load_audio(path)
        logits = _infer(loaded, waveform)
        if logits.ndim != 2 or logits.shape[1] != len(symbols):
            raise ExtractionError(
                f"{utt_id}: model emitted shape {logits.shape}, expected "
                f"(*, {len(symbols)})"
            )
        t = logits.shape[0]
        expected = round(len(waveform) / loaded.stride_samples)
        if abs(t - expected) > 2:
            raise ExtractionError(
                f"{utt_id}: {t} frames but duration/stride arithmetic "
                f"gives {expected}; stride derivation is wrong"
            )
        out_path = os.path.join(job.output_dir, f"{utt_id}.gopl")
        _atomic_write_tensor(
            Posteriorgram(
                utt_id=utt_id,
                logits=logits,
                frame_stride_ms=loaded.frame_stride_ms,
            ),
            out_path,
        )
        read_logits(out_path, expected_v=len(symbols), utt_id=utt_id)
        entries.append(
            {
                "utt_id": utt_id,
                "logits_path": f"{utt_id}.gopl",
                "num_frames": int(t),
                "num_samples": int(len(waveform)),
            }
        )
        log.info("extracted %s: %d frames", utt_id, t)

    fragment = {
        "model": job.model_identifier,
        "frame_stride_ms": loaded.frame_stride_ms,
        "inventory": {
            "symbols": list(symbols),
            "blank_index": loaded.blank_index,
        },
        "utterances": entries,
    }
    fragment_path = os.path.join(job.output_dir, FRAGMENT_NAME)
    _atomic_write_text(
        fragment_path,
        json.dumps(fragment, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
    )
    return fragment_path


def load_fragment(path: str | os.PathLike) -> dict:
    """Parse and shape-check an extraction fragment."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ExtractionError(f"{path}: unreadable fragment: {err}") from err
    for key in ("inventory", "frame_stride_ms", "utterances"):
        if key not in doc:
            raise ExtractionError(f"{path}: fragment missing {key!r}")
    inv = doc["inventory"]
    if "symbols" not in inv or "blank_index" not in inv:
        raise ExtractionError(f"{path}: fragment inventory incomplete")
    for entry in doc["utterances"]:
        if "utt_id" not in entry or "logits_path" not in entry:
            raise ExtractionError(f"{path}: fragment utterance incomplete")
    return doc
