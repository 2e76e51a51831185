"""Audio decoding: dtype normalization, downmixing, resampling."""

import math

import numpy as np
import pytest
from scipy.io import wavfile

from gopl_extractor import ExtractionError, load_audio

from conftest import sine


def test_int16_mono_passthrough(tmp_path):
    x = sine(1.0)
    p = tmp_path / "a.wav"
    wavfile.write(p, 16_000, (x * 32767).astype(np.int16))
    y = load_audio(p)
    assert y.dtype == np.float32
    assert y.shape == (16_000,)
    assert np.abs(y).max() <= 1.0
    assert np.allclose(y, x, atol=2e-4)  # one quantization step


def test_int32_and_uint8_scaling(tmp_path):
    x = sine(0.25)
    p32 = tmp_path / "a32.wav"
    wavfile.write(p32, 16_000, (x * (2**31 - 1)).astype(np.int32))
    y32 = load_audio(p32)
    assert np.allclose(y32, x, atol=1e-6)

    p8 = tmp_path / "a8.wav"
    wavfile.write(p8, 16_000, ((x * 127) + 128).astype(np.uint8))
    y8 = load_audio(p8)
    assert np.abs(y8).max() <= 1.0
    assert np.allclose(y8, x, atol=2e-2)  # 8-bit quantization is coarse


def test_stereo_downmix(tmp_path):
    left = sine(0.5, hz=440.0)
    right = sine(0.5, hz=660.0)
    p = tmp_path / "st.wav"
    wavfile.write(p, 16_000, np.stack([left, right], axis=1).astype(np.float32))
    y = load_audio(p)
    assert y.ndim == 1
    assert np.allclose(y, (left + right) / 2, atol=1e-6)


def test_resample_8k_doubles_length(tmp_path):
    x = sine(1.5, sr=8000)
    p = tmp_path / "lo.wav"
    wavfile.write(p, 8000, (x * 32767).astype(np.int16))
    y = load_audio(p)
    assert y.shape == (24_000,)


def test_resample_44k_length_arithmetic(tmp_path):
    n = 44_100
    p = tmp_path / "hi.wav"
    wavfile.write(p, 44_100, sine(1.0, sr=44_100).astype(np.float32))
    y = load_audio(p)
    # polyphase output length: ceil(n * up / down) with up/down reduced
    assert y.shape == (math.ceil(n * 160 / 441),)


def test_resample_preserves_tone(tmp_path):
    p = tmp_path / "tone.wav"
    wavfile.write(p, 48_000, sine(1.0, sr=48_000, hz=440.0).astype(np.float32))
    y = load_audio(p).astype(np.float64)
    spectrum = np.abs(np.fft.rfft(y * np.hanning(len(y))))
    peak_hz = np.argmax(spectrum) * 16_000 / len(y)
    assert abs(peak_hz - 440.0) < 5.0


def test_rejects_garbage_and_missing(tmp_path):
    bad = tmp_path / "not.wav"
    bad.write_bytes(b"this is not audio")
    with pytest.raises(ExtractionError, match="cannot decode"):
        load_audio(bad)
    with pytest.raises(ExtractionError):
        load_audio(tmp_path / "absent.wav")


def test_rejects_empty_stream(tmp_path):
    p = tmp_path / "empty.wav"
    wavfile.write(p, 16_000, np.zeros(0, dtype=np.int16))
    with pytest.raises(ExtractionError, match="empty"):
        load_audio(p)
