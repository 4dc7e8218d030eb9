import numpy as np
import pytest

from voiceid import evalkit
from voiceid import net as N
from voiceid.dsp import SAMPLE_RATE, AudioSegment


def sine(freq_hz, duration_s, amplitude=0.9):
    t = np.arange(int(duration_s * SAMPLE_RATE)) / SAMPLE_RATE
    return AudioSegment(amplitude * np.sin(2 * np.pi * freq_hz * t))


@pytest.fixture(scope="session")
def small_corpus():
    return evalkit.synth_corpus(5, 8, seed=11)


@pytest.fixture(scope="session")
def tiny_trained(small_corpus):
    """A quickly trained small network over the session corpus."""
    cfg = N.TrainConfig(
        learning_rate=0.002, batch_size=10, epochs=12, segment_len_s=0.5, rng_seed=5
    )
    net, head, log = N.train(small_corpus.speakers, cfg, hidden=32, n_layers=2)
    return net, head, log
