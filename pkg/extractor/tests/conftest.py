"""Shared fixtures: a tiny randomly initialized checkpoint and sample audio.

The model is real Wav2Vec2 plumbing at toy width, built offline with a
fixed seed. Tests pin format, stride, and determinism contracts; acoustic
quality is out of scope for a random-weight model.
"""

import json

import numpy as np
import pytest
from scipy.io import wavfile

VOCAB = {"<pad>": 0, "a": 1, "e": 2, "d": 3, "s": 4, "m": 5, "k": 6}

# utterance ids double as wav stems and annotation keys
UTTS = ("000010011", "000020022", "000030033", "000040044")


def sine(seconds, sr=16_000, hz=440.0, amp=0.5):
    t = np.arange(int(seconds * sr)) / sr
    return amp * np.sin(2 * np.pi * hz * t)


def write_wav_int16(path, x, sr=16_000):
    wavfile.write(path, sr, (np.asarray(x) * 32767).astype(np.int16))


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    torch = pytest.importorskip("torch")
    from transformers import (
        Wav2Vec2Config,
        Wav2Vec2FeatureExtractor,
        Wav2Vec2ForCTC,
    )

    d = tmp_path_factory.mktemp("model")
    cfg = Wav2Vec2Config(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=48,
        conv_dim=[16] * 7,
        num_conv_pos_embeddings=16,
        num_conv_pos_embedding_groups=4,
        pad_token_id=0,
    )
    torch.manual_seed(0)
    Wav2Vec2ForCTC(cfg).save_pretrained(d)
    (d / "vocab.json").write_text(json.dumps(VOCAB), encoding="utf-8")
    Wav2Vec2FeatureExtractor(
        feature_size=1,
        sampling_rate=16_000,
        padding_value=0.0,
        do_normalize=True,
        return_attention_mask=False,
    ).save_pretrained(d)
    return str(d)


@pytest.fixture(scope="session")
def loaded(tiny_model_dir):
    from gopl_extractor import load_model

    return load_model(tiny_model_dir)


@pytest.fixture(scope="session")
def corpus_audio(tmp_path_factory):
    d = tmp_path_factory.mktemp("audio")
    rng = np.random.default_rng(7)
    write_wav_int16(d / f"{UTTS[0]}.wav", sine(1.0))
    write_wav_int16(d / f"{UTTS[1]}.wav", rng.normal(0, 0.1, 8000))
    write_wav_int16(d / f"{UTTS[2]}.wav", np.zeros(16_000))
    write_wav_int16(d / f"{UTTS[3]}.wav", sine(1.5, sr=8000), sr=8000)
    return d


@pytest.fixture(scope="session")
def extraction(tmp_path_factory, corpus_audio, tiny_model_dir, loaded):
    from gopl_extractor import ExtractionJob, extract_logits

    out = tmp_path_factory.mktemp("tensors")
    job = ExtractionJob(
        audio_paths=tuple(
            str(corpus_audio / f"{u}.wav") for u in UTTS
        ),
        model_identifier=tiny_model_dir,
        output_dir=str(out),
    )
    fragment_path = extract_logits(job, loaded=loaded)
    return {"dir": out, "fragment": fragment_path, "job": job}
