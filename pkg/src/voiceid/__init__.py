"""Lightweight BLSTM speaker embeddings with online voting identification."""

from .dsp import AudioSegment, FeatureKind, FeatureMatrix, feature_extract, load_wav, vad_filter
from .embed import Embedding, embed_audio, similarity, verify
from .identify import SpeakerDb, enroll, identify, load_db, save_db
from .net import EmbeddingNet, TrainConfig, load_weights, save_weights, train

__all__ = [
    "AudioSegment",
    "FeatureKind",
    "FeatureMatrix",
    "feature_extract",
    "load_wav",
    "vad_filter",
    "Embedding",
    "embed_audio",
    "similarity",
    "verify",
    "SpeakerDb",
    "enroll",
    "identify",
    "load_db",
    "save_db",
    "EmbeddingNet",
    "TrainConfig",
    "load_weights",
    "save_weights",
    "train",
]
