"""Deployment pipeline: audio -> VAD -> features -> BLSTM -> unit embedding."""

from dataclasses import dataclass

import numpy as np

from .dsp import SAMPLE_RATE, WINDOW_LEN, AudioSegment, feature_extract, vad_filter
from .errors import TooShortError, ZeroEmbeddingError
from .net import EmbeddingNet, blstm_forward

ZERO_NORM_EPS = 1e-12


@dataclass
class Embedding:
    """Unit-L2-norm speaker vector plus the audio length that produced it."""

    values: np.ndarray
    source_len_s: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)


def embed_audio(net: EmbeddingNet, seg: AudioSegment, crop_len_s: float = 0.5) -> Embedding:
    """Embed the leading crop_len_s seconds of voice-active audio."""
    active = vad_filter(seg)
    crop = int(round(crop_len_s * SAMPLE_RATE))
    needed = max(crop, WINDOW_LEN)
    if len(active.samples) < needed:
        raise TooShortError(
            f"{len(active.samples)} voice-active samples, need {needed}"
        )
    cropped = AudioSegment(active.samples[:crop])
    raw = blstm_forward(net, feature_extract(cropped, net.feature_kind))
    norm = float(np.linalg.norm(raw))
    if norm < ZERO_NORM_EPS:
        raise ZeroEmbeddingError("raw embedding is numerically zero")
    return Embedding(raw / norm, crop / SAMPLE_RATE)


def similarity(a: Embedding, b: Embedding) -> float:
    """Inner product of two unit embeddings, clamped to [-1, 1]."""
    s = float(np.dot(a.values, b.values))
    return max(-1.0, min(1.0, s))


def verify(a: Embedding, b: Embedding, threshold: float = 0.0):
    """Same-speaker decision; the boundary score == threshold counts as same."""
    score = similarity(a, b)
    return ("same" if score >= threshold else "different"), score
