"""Batch acoustic-model inference and dataset conversion.

Runs a pretrained CTC phoneme recognizer over wav files, serializes the raw
pre-softmax logits as .gopl tensors, and converts phoneme-level human score
annotations into the corpus manifest schema those tensors plug into.
"""

from .audio import TARGET_SR, load_audio
from .errors import ExtractionError
from .extract import ExtractionJob, extract_logits, load_fragment
from .model import LoadedModel, load_model
from .speechocean import convert_speechocean, load_phone_map

__version__ = "0.1.0"

__all__ = [
    "TARGET_SR",
    "ExtractionError",
    "ExtractionJob",
    "LoadedModel",
    "convert_speechocean",
    "extract_logits",
    "load_audio",
    "load_fragment",
    "load_model",
    "load_phone_map",
]
