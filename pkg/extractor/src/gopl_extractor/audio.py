"""Wav loading: decode, downmix to mono, resample to the model rate."""

import math
import os

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import ExtractionError

TARGET_SR = 16_000

# peak magnitudes for integer PCM encodings
_INT_SCALE = {
    np.dtype(np.int16): 2.0**15,
    np.dtype(np.int32): 2.0**31,
}


def load_audio(path: str | os.PathLike, target_sr: int = TARGET_SR) -> np.ndarray:
    """Decode a wav file to float32 mono at target_sr, values in [-1, 1]."""
    try:
        sr, data = wavfile.read(os.fspath(path))
    except (ValueError, OSError) as err:
        raise ExtractionError(f"{path}: cannot decode wav: {err}") from err
    if data.size == 0:
        raise ExtractionError(f"{path}: empty audio stream")

    if data.dtype in _INT_SCALE:
        x = data.astype(np.float64) / _INT_SCALE[data.dtype]
    elif data.dtype == np.uint8:  # 8-bit wav is unsigned with midpoint 128
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise ExtractionError(f"{path}: unsupported sample dtype {data.dtype}")

    if x.ndim == 2:
        x = x.mean(axis=1)
    elif x.ndim != 1:
        raise ExtractionError(f"{path}: unsupported channel layout {x.shape}")

    if sr != target_sr:
        g = math.gcd(target_sr, sr)
        x = resample_poly(x, target_sr // g, sr // g)

    if not np.isfinite(x).all():
        raise ExtractionError(f"{path}: non-finite samples after decode")
    return np.clip(x, -1.0, 1.0).astype(np.float32)
