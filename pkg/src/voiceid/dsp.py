"""Audio ingestion, energy VAD and the six spectral feature extractors.

All processing assumes 16 kHz mono audio. Framing is fixed at 32 ms
windows (512 samples) with a 16 ms hop (256 samples), so a signal of N
samples yields floor((N - 512) / 256) + 1 frames.
"""

import enum
import io
import wave
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllSilentError,
    NotWavError,
    TooShortError,
    UnsupportedFormatError,
)

SAMPLE_RATE = 16000
WINDOW_LEN = 512
HOP = 256

DB_FLOOR = 1e-10
DEFAULT_VAD_THRESHOLD_DB = 20.0
DEFAULT_PRE_EMPHASIS = 0.97

N_FFT_BINS = WINDOW_LEN // 2 + 1  # 257
N_MEL_FILTERS = 40


@dataclass
class AudioSegment:
    """Mono waveform at 16 kHz with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_rate_hz != SAMPLE_RATE:
            raise UnsupportedFormatError(
                f"expected {SAMPLE_RATE} Hz, got {self.sample_rate_hz}"
            )

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


class FeatureKind(enum.Enum):
    """The six input feature types, with their on-disk codes."""

    SpecMag = 0
    SpecdB = 1
    Spec = 2
    EmphSpec = 3
    EmphSpecdB = 4
    MFCC = 5

    @property
    def dim(self) -> int:
        return N_MEL_FILTERS if self is FeatureKind.MFCC else N_FFT_BINS

    @property
    def window(self) -> str:
        # Hann for the two plain magnitude features, Hamming otherwise.
        if self in (FeatureKind.SpecMag, FeatureKind.SpecdB):
            return "hann"
        return "hamming"


@dataclass
class FeatureMatrix:
    """T x D matrix of frame features of one kind."""

    frames: np.ndarray
    kind: FeatureKind

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


def load_wav(path_or_file) -> AudioSegment:
    """Load a PCM 16-bit mono 16 kHz WAV file.

    Accepts a filesystem path or a binary file-like object. Any other
    sample rate, channel count or sample width is rejected; no resampling
    is ever performed.
    """
    if isinstance(path_or_file, (bytes, bytearray)):
        path_or_file = io.BytesIO(path_or_file)
    try:
        with wave.open(path_or_file, "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            comptype = wf.getcomptype()
            if comptype != "NONE":
                raise UnsupportedFormatError(f"compressed WAV ({comptype})")
            if rate != SAMPLE_RATE or n_channels != 1 or sampwidth != 2:
                raise UnsupportedFormatError(
                    f"need mono 16-bit {SAMPLE_RATE} Hz, got "
                    f"{n_channels} ch, {8 * sampwidth} bit, {rate} Hz"
                )
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise NotWavError(str(exc)) from exc
    except EOFError as exc:
        raise NotWavError("truncated WAV header") from exc
    pcm = np.frombuffer(raw, dtype="<i2")
    return AudioSegment(pcm.astype(np.float64) / 32768.0)


def save_wav(seg: AudioSegment, path_or_file) -> None:
    """Write an AudioSegment as PCM 16-bit mono 16 kHz WAV."""
    pcm = np.clip(np.round(seg.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(path_or_file, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(SAMPLE_RATE)
        wf.writeframes(pcm.tobytes())


def frame_count(n_samples: int) -> int:
    if n_samples < WINDOW_LEN:
        raise TooShortError(f"need >= {WINDOW_LEN} samples, got {n_samples}")
    return (n_samples - WINDOW_LEN) // HOP + 1


def frame_signal(samples: np.ndarray) -> np.ndarray:
    """Slice a signal into overlapping (T, 512) frames."""
    t = frame_count(len(samples))
    idx = np.arange(WINDOW_LEN)[None, :] + HOP * np.arange(t)[:, None]
    return samples[idx]


def vad_filter(
    seg: AudioSegment, threshold_db: float = DEFAULT_VAD_THRESHOLD_DB
) -> AudioSegment:
    """Drop frames more than threshold_db below the loudest frame.

    Per-frame RMS energy is compared in dB against the maximum frame of
    the segment. Surviving frames are re-concatenated in order; each
    kept frame contributes its first 16 ms, and the last kept frame also
    contributes its tail.
    """
    frames = frame_signal(seg.samples)
    rms = np.sqrt(np.mean(frames**2, axis=1))
    if not np.any(rms > 0):
        raise AllSilentError("every frame has zero energy")
    with np.errstate(divide="ignore"):
        energy_db = 20.0 * np.log10(rms)
    keep = np.flatnonzero(energy_db >= energy_db.max() - threshold_db)
    parts = [frames[k, :HOP] for k in keep]
    parts.append(frames[keep[-1], HOP:])
    return AudioSegment(np.concatenate(parts))


def pre_emphasis(
    seg: AudioSegment, alpha: float = DEFAULT_PRE_EMPHASIS
) -> AudioSegment:
    """First-order high-pass: y[0] = x[0], y[n] = x[n] - alpha * x[n-1]."""
    x = seg.samples
    if len(x) == 0:
        raise TooShortError("empty input")
    return AudioSegment(np.concatenate(([x[0]], x[1:] - alpha * x[:-1])))


def _window(name: str) -> np.ndarray:
    if name == "hann":
        return np.hanning(WINDOW_LEN)
    if name == "hamming":
        return np.hamming(WINDOW_LEN)
    raise ValueError(f"unknown window {name!r}")


def stft_magnitude(samples: np.ndarray, window: str) -> np.ndarray:
    """Magnitude spectrogram: (T, 257) from 512-point DFTs of each frame."""
    frames = frame_signal(np.asarray(samples, dtype=np.float64))
    return np.abs(np.fft.rfft(frames * _window(window), axis=1))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_filters: int = N_MEL_FILTERS,
    n_bins: int = N_FFT_BINS,
    fmin_hz: float = 0.0,
    fmax_hz: float = SAMPLE_RATE / 2.0,
) -> np.ndarray:
    """Triangular filters with mel-spaced centers, evaluated at FFT bins."""
    centers_hz = mel_to_hz(
        np.linspace(hz_to_mel(fmin_hz), hz_to_mel(fmax_hz), n_filters + 2)
    )
    bin_hz = np.arange(n_bins) * SAMPLE_RATE / WINDOW_LEN
    bank = np.zeros((n_filters, n_bins))
    for j in range(n_filters):
        left, center, right = centers_hz[j], centers_hz[j + 1], centers_hz[j + 2]
        up = (bin_hz - left) / (center - left)
        down = (right - bin_hz) / (right - center)
        bank[j] = np.maximum(0.0, np.minimum(up, down))
    return bank


def _dct_matrix(n: int) -> np.ndarray:
    # Orthonormal DCT-II: C @ C.T == I.
    k = np.arange(n)[:, None]
    c = np.cos(np.pi * k * (2 * np.arange(n)[None, :] + 1) / (2 * n))
    c *= np.sqrt(2.0 / n)
    c[0] *= np.sqrt(0.5)
    return c


_DCT40 = _dct_matrix(N_MEL_FILTERS)
_MELBANK = mel_filterbank()


def feature_extract(seg: AudioSegment, kind: FeatureKind) -> FeatureMatrix:
    """Compute one of the six feature matrices from a (post-VAD) segment."""
    if kind is FeatureKind.SpecMag:
        out = stft_magnitude(seg.samples, "hann")
    elif kind is FeatureKind.SpecdB:
        out = 20.0 * np.log10(stft_magnitude(seg.samples, "hann") + DB_FLOOR)
    elif kind is FeatureKind.Spec:
        out = stft_magnitude(seg.samples, "hamming") ** 2
    elif kind is FeatureKind.EmphSpec:
        out = stft_magnitude(pre_emphasis(seg).samples, "hamming")
    elif kind is FeatureKind.EmphSpecdB:
        mag = stft_magnitude(pre_emphasis(seg).samples, "hamming")
        out = 20.0 * np.log10(mag + DB_FLOOR)
    elif kind is FeatureKind.MFCC:
        mag = stft_magnitude(seg.samples, "hamming")
        energy = mag @ _MELBANK.T
        out = np.log(energy + DB_FLOOR) @ _DCT40.T
    else:
        raise ValueError(f"unknown feature kind {kind!r}")
    return FeatureMatrix(out.astype(np.float32), kind)


def export_features(fm: FeatureMatrix, path) -> None:
    """Debug dump: header `kind T D`, then one space-separated row per frame."""
    with open(path, "w") as fh:
        fh.write(f"{fm.kind.name} {fm.n_frames} {fm.dim}\n")
        for row in fm.frames:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
