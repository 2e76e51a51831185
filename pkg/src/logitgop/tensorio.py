"""Binary logit-tensor files (.gopl) and the JSON corpus manifest.

A .gopl file stores one utterance's raw CTC logits:

    bytes 0-3    magic ASCII "GOPL"
    bytes 4-7    format version, uint32 little-endian (currently 1)
    bytes 8-11   T (frames), uint32 little-endian
    bytes 12-15  V (vocabulary size), uint32 little-endian
    then T*V float32 little-endian values, row-major (frame-major)

Storage is 32-bit to keep files half the size of float64; everything is
widened to float64 in memory for computation. The container carries only
the tensor -- utt_id and frame timing travel in the corpus manifest.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    ManifestError,
    NonFiniteError,
    ShapeMismatchError,
    TruncatedPayloadError,
    VersionMismatchError,
)

MAGIC = b"GOPL"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIII")

VALID_SPLITS = ("train", "test")


def _readonly_f64(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Posteriorgram:
    """Raw frame logits for one utterance: a T x V matrix plus timing."""

    utt_id: str
    logits: np.ndarray
    frame_stride_ms: float

    def __post_init__(self):
        arr = _readonly_f64(self.logits)
        if arr.ndim != 2:
            raise ValueError(f"logits must be 2-D, got shape {arr.shape}")
        t, v = arr.shape
        if t < 1:
            raise ValueError("posteriorgram needs at least one frame")
        if v < 2:
            raise ValueError("vocabulary must hold blank plus at least one phoneme")
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"utterance '{self.utt_id}': logits contain NaN/Inf")
        if not (self.frame_stride_ms > 0 and math.isfinite(self.frame_stride_ms)):
            raise ValueError("frame_stride_ms must be a positive finite value")
        object.__setattr__(self, "logits", arr)

    @property
    def num_frames(self) -> int:
        return self.logits.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.logits.shape[1]


@dataclass(frozen=True)
class PhonemeInventory:
    """Ordered phoneme vocabulary; index i is the model's output column i."""

    symbols: tuple[str, ...]
    blank_index: int

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise ValueError("inventory needs blank plus at least one phoneme")
        if any(not s for s in symbols):
            raise ValueError("inventory symbols must be non-empty")
        if len(set(symbols)) != len(symbols):
            raise ValueError("inventory symbols must be unique")
        if not 0 <= self.blank_index < len(symbols):
            raise ValueError(f"blank_index {self.blank_index} out of range")

    def __len__(self) -> int:
        return len(self.symbols)

    def index_of(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise KeyError(f"symbol {symbol!r} not in inventory") from None


@dataclass(frozen=True)
class Utterance:
    """One manifest entry; phoneme sequences are inventory indices."""

    utt_id: str
    logits_path: str
    canonical_phonemes: tuple[int, ...]
    frame_stride_ms: float
    split: str
    spoken_phonemes: tuple[int, ...] | None = None
    human_scores: tuple[float, ...] | None = None


@dataclass(frozen=True)
class CorpusManifest:
    """A corpus: one inventory plus per-utterance entries."""

    inventory: PhonemeInventory
    utterances: tuple[Utterance, ...]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.utterances)

    def split(self, name: str) -> tuple[Utterance, ...]:
        return tuple(u for u in self.utterances if u.split == name)


def write_logits(p: Posteriorgram, path: str | os.PathLike) -> None:
    """Serialize a posteriorgram's tensor to a .gopl file.

    Values are stored as float32; entries whose magnitude exceeds the
    float32 range would come back non-finite and are rejected.
    """
    t, v = p.logits.shape
    with np.errstate(over="ignore"):
        payload = p.logits.astype("<f4")
    if not np.isfinite(payload).all():
        raise NonFiniteError(
            f"utterance '{p.utt_id}': values overflow float32 storage"
        )
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, FORMAT_VERSION, t, v))
        fh.write(payload.tobytes(order="C"))


def read_logits(
    path: str | os.PathLike,
    expected_v: int,
    utt_id: str | None = None,
    frame_stride_ms: float = 10.0,
) -> Posteriorgram:
    """Read a .gopl file and validate it against the expected vocabulary size.

    The container stores only the tensor, so utt_id (default: file stem)
    and frame_stride_ms are supplied by the caller -- normally from the
    corpus manifest entry that references the file.
    """
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) < HEADER.size:
            raise TruncatedPayloadError(f"{path}: file shorter than header")
        magic, version, t, v = HEADER.unpack(head)
        if magic != MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise VersionMismatchError(
                f"{path}: unsupported format version {version}"
            )
        if t < 1 or v < 2:
            raise TruncatedPayloadError(f"{path}: degenerate header T={t}, V={v}")
        if v != expected_v:
            raise ShapeMismatchError(
                f"{path}: tensor has V={v}, inventory expects V={expected_v}"
            )
        payload = fh.read()
    if len(payload) != 4 * t * v:
        raise TruncatedPayloadError(
            f"{path}: expected exactly {t * v} floats, payload holds "
            f"{len(payload)} bytes"
        )
    raw = np.frombuffer(payload, dtype="<f4").reshape(t, v)
    if not np.isfinite(raw).all():
        raise NonFiniteError(f"{path}: tensor contains NaN/Inf entries")
    if utt_id is None:
        utt_id = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return Posteriorgram(
        utt_id=utt_id,
        logits=raw.astype(np.float64),
        frame_stride_ms=frame_stride_ms,
    )


def _require(cond: bool, msg: str):
    if not cond:
        raise ManifestError(msg)


def _validate_indices(seq, inventory: PhonemeInventory, utt_id: str, what: str):
    n = len(inventory)
    for idx in seq:
        _require(
            isinstance(idx, (int, np.integer))
            and not isinstance(idx, bool)
            and 0 <= idx < n,
            f"utterance '{utt_id}': {what} index {idx!r} out of range for "
            f"inventory of size {n}",
        )
        _require(
            idx != inventory.blank_index,
            f"utterance '{utt_id}': {what} contains the blank index {idx}",
        )


def manifest_from_dict(doc: dict) -> CorpusManifest:
    """Build and fully validate a manifest from a parsed JSON document."""
    _require(isinstance(doc, dict), "manifest root must be a JSON object")
    _require("inventory" in doc, "manifest missing 'inventory'")
    _require("utterances" in doc, "manifest missing 'utterances'")
    inv_doc = doc["inventory"]
    try:
        inventory = PhonemeInventory(
            symbols=tuple(inv_doc["symbols"]),
            blank_index=int(inv_doc["blank_index"]),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ManifestError(f"bad inventory: {err}") from err

    utts = []
    for entry in doc["utterances"]:
        _require(isinstance(entry, dict), "utterance entries must be objects")
        utt_id = entry.get("utt_id")
        _require(
            isinstance(utt_id, str) and utt_id != "",
            f"utterance entry missing utt_id: {entry}",
        )
        for key in ("logits_path", "canonical_phonemes", "frame_stride_ms", "split"):
            _require(key in entry, f"utterance '{utt_id}': missing '{key}'")
        split = entry["split"]
        _require(
            split in VALID_SPLITS,
            f"utterance '{utt_id}': split must be one of {VALID_SPLITS}, "
            f"got {split!r}",
        )
        canonical = tuple(entry["canonical_phonemes"])
        _require(
            len(canonical) >= 1,
            f"utterance '{utt_id}': canonical_phonemes is empty",
        )
        _validate_indices(canonical, inventory, utt_id, "canonical_phonemes")
        canonical = tuple(int(i) for i in canonical)

        spoken = entry.get("spoken_phonemes")
        if spoken is not None:
            spoken = tuple(spoken)
            _require(
                len(spoken) == len(canonical),
                f"utterance '{utt_id}': spoken_phonemes length {len(spoken)} != "
                f"canonical length {len(canonical)}",
            )
            _validate_indices(spoken, inventory, utt_id, "spoken_phonemes")
            spoken = tuple(int(i) for i in spoken)

        scores = entry.get("human_scores")
        if scores is not None:
            scores = tuple(float(s) for s in scores)
            _require(
                len(scores) == len(canonical),
                f"utterance '{utt_id}': human_scores length {len(scores)} != "
                f"canonical length {len(canonical)}",
            )
            for s in scores:
                _require(
                    0.0 <= s <= 2.0 and math.isfinite(s),
                    f"utterance '{utt_id}': human score {s} outside [0, 2]",
                )

        stride = float(entry["frame_stride_ms"])
        _require(
            stride > 0 and math.isfinite(stride),
            f"utterance '{utt_id}': frame_stride_ms must be positive",
        )
        utts.append(
            Utterance(
                utt_id=utt_id,
                logits_path=str(entry["logits_path"]),
                canonical_phonemes=canonical,
                frame_stride_ms=stride,
                split=split,
                spoken_phonemes=spoken,
                human_scores=scores,
            )
        )
    metadata = doc.get("metadata", {})
    return CorpusManifest(
        inventory=inventory, utterances=tuple(utts), metadata=dict(metadata)
    )


def load_manifest(path: str | os.PathLike) -> CorpusManifest:
    """Load and validate a corpus manifest JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ManifestError(f"{path}: not valid JSON: {err}") from err
    return manifest_from_dict(doc)


def manifest_to_dict(m: CorpusManifest) -> dict:
    """Inverse of manifest_from_dict, for writing manifests back to disk."""
    utterances = []
    for u in m.utterances:
        entry = {
            "utt_id": u.utt_id,
            "logits_path": u.logits_path,
            "canonical_phonemes": list(u.canonical_phonemes),
            "frame_stride_ms": u.frame_stride_ms,
            "split": u.split,
        }
        if u.spoken_phonemes is not None:
            entry["spoken_phonemes"] = list(u.spoken_phonemes)
        if u.human_scores is not None:
            entry["human_scores"] = list(u.human_scores)
        utterances.append(entry)
    doc = {
        "inventory": {
            "symbols": list(m.inventory.symbols),
            "blank_index": m.inventory.blank_index,
        },
        "utterances": utterances,
    }
    if m.metadata:
        doc["metadata"] = m.metadata
    return doc


def resolve_logits_path(manifest_path: str | os.PathLike, u: Utterance) -> str:
    """Resolve an utterance's logits_path relative to the manifest file."""
    if os.path.isabs(u.logits_path):
        return u.logits_path
    return os.path.join(os.path.dirname(os.path.abspath(manifest_path)), u.logits_path)


def load_utterance_logits(manifest_path, m: CorpusManifest, u: Utterance) -> Posteriorgram:
    """Read the .gopl tensor referenced by a manifest entry."""
    return read_logits(
        resolve_logits_path(manifest_path, u),
        expected_v=len(m.inventory),
        utt_id=u.utt_id,
        frame_stride_ms=u.frame_stride_ms,
    )
