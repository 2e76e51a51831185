"""Acoustic model loading and output-layer bookkeeping.

The model is any Wav2Vec2-style CTC checkpoint (local directory or hub id).
Its output layer defines the phoneme inventory; the CTC blank is the
checkpoint's pad token. The frame stride falls out of the feature encoder's
convolution strides, so it is derived, never configured.
"""

import json
import math
import os
from dataclasses import dataclass

from .audio import TARGET_SR
from .errors import ExtractionError


@dataclass(frozen=True)
class LoadedModel:
    model: object
    feature_extractor: object | None
    symbols: tuple[str, ...]
    blank_index: int
    stride_samples: int

    @property
    def frame_stride_ms(self) -> float:
        return 1000.0 * self.stride_samples / TARGET_SR

    def __len__(self) -> int:
        return len(self.symbols)


def _load_vocab(model_identifier: str, vocab_size: int) -> dict[str, int]:
    """symbol -> output index, from the checkpoint's tokenizer vocabulary.

    A local checkpoint's vocab.json is authoritative. The tokenizer route
    (hub identifiers) may append special tokens past the output layer;
    those cannot correspond to model outputs and are dropped.
    """
    vocab_path = os.path.join(os.fspath(model_identifier), "vocab.json")
    if os.path.exists(vocab_path):
        with open(vocab_path, encoding="utf-8") as fh:
            return json.load(fh)
    try:
        from transformers import Wav2Vec2CTCTokenizer

        tok = Wav2Vec2CTCTokenizer.from_pretrained(model_identifier)
        return {s: i for s, i in tok.get_vocab().items() if i < vocab_size}
    except Exception:
        raise ExtractionError(
            f"{model_identifier}: no tokenizer and no vocab.json; "
            "cannot recover the phoneme inventory"
        ) from None


def invert_vocab(vocab: dict[str, int], vocab_size: int) -> tuple[str, ...]:
    """Index -> symbol table; must be a bijection onto 0..vocab_size-1."""
    by_index: dict[int, str] = {}
    for symbol, index in vocab.items():
        if not isinstance(index, int) or not 0 <= index < vocab_size:
            raise ExtractionError(
                f"vocabulary entry {symbol!r} -> {index!r} outside the "
                f"model's {vocab_size} outputs"
            )
        if index in by_index:
            raise ExtractionError(
                f"vocabulary maps both {by_index[index]!r} and {symbol!r} "
                f"to output {index}"
            )
        by_index[index] = symbol
    if len(by_index) != vocab_size:
        missing = sorted(set(range(vocab_size)) - set(by_index))
        raise ExtractionError(
            f"vocabulary covers {len(by_index)} of {vocab_size} model "
            f"outputs; missing indices {missing[:8]}"
        )
    return tuple(by_index[i] for i in range(vocab_size))


def load_model(model_identifier: str) -> LoadedModel:
    """Load a CTC checkpoint in inference mode with its inventory and stride."""
    try:
        import torch
        from transformers import Wav2Vec2ForCTC
    except ImportError as err:
        raise ExtractionError(f"inference backend unavailable: {err}") from err

    try:
        model = Wav2Vec2ForCTC.from_pretrained(model_identifier)
    except Exception as err:
        raise ExtractionError(
            f"cannot load model {model_identifier!r}: {err}"
        ) from err
    model.eval()
    torch.set_num_threads(max(1, torch.get_num_threads()))

    cfg = model.config
    symbols = invert_vocab(_load_vocab(model_identifier, cfg.vocab_size),
                           cfg.vocab_size)

    blank = cfg.pad_token_id if cfg.pad_token_id is not None else 0
    if not 0 <= blank < len(symbols):
        raise ExtractionError(
            f"blank (pad) index {blank} outside inventory of {len(symbols)}"
        )

    stride = math.prod(cfg.conv_stride)
    if stride < 1:
        raise ExtractionError(f"degenerate feature-encoder stride {stride}")

    feature_extractor = None
    try:
        from transformers import Wav2Vec2FeatureExtractor

        feature_extractor = Wav2Vec2FeatureExtractor.from_pretrained(
            model_identifier
        )
    except Exception:
        pass  # raw waveform input; normalization is a checkpoint convention

    return LoadedModel(
        model=model,
        feature_extractor=feature_extractor,
        symbols=symbols,
        blank_index=int(blank),
        stride_samples=int(stride),
    )
