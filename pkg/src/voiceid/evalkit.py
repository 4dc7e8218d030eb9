"""Evaluation harness: trial lists, EER, ablations, memory report,
identification heatmaps and the synthetic desk-scale corpus generator."""

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .dsp import SAMPLE_RATE, AudioSegment, FeatureKind, feature_extract, load_wav, save_wav
from .embed import embed_audio, similarity
from .errors import MalformedLineError, OneClassOnlyError, VoiceIdError
from .identify import SpeakerDb, enroll, identify
from .net import EmbeddingNet, init_net, memory_bytes, param_count

SAME = 1
DIFFERENT = 0


@dataclass
class Trial:
    label: int  # 1 = same speaker
    path_a: str
    path_b: str


@dataclass
class TrialList:
    trials: list

    def __len__(self):
        return len(self.trials)

    @property
    def n_same(self):
        return sum(1 for t in self.trials if t.label == SAME)

    @property
    def n_different(self):
        return len(self.trials) - self.n_same


def load_trials(path) -> TrialList:
    """Parse a `label path_a path_b` trial list (label 1 = same speaker)."""
    trials = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0] not in ("0", "1"):
                raise MalformedLineError(line_no, line.rstrip("\n"))
            trials.append(Trial(int(parts[0]), parts[1], parts[2]))
    if not trials:
        raise MalformedLineError(0, "(empty trial list)")
    return TrialList(trials)


def save_trials(trials: TrialList, path) -> None:
    with open(path, "w") as fh:
        for t in trials.trials:
            fh.write(f"{t.label} {t.path_a} {t.path_b}\n")


def make_balanced_trials(paths_by_speaker: dict, n_pairs: int, seed: int) -> TrialList:
    """Sample n_pairs trials, exactly half same-speaker and half different."""
    rng = np.random.default_rng(seed)
    names = list(paths_by_speaker)
    trials = []
    for _ in range(n_pairs // 2):
        name = names[rng.integers(len(names))]
        ia, ib = rng.choice(len(paths_by_speaker[name]), size=2, replace=False)
        trials.append(Trial(SAME, paths_by_speaker[name][ia], paths_by_speaker[name][ib]))
    for _ in range(n_pairs - n_pairs // 2):
        na, nb = rng.choice(len(names), size=2, replace=False)
        pa = paths_by_speaker[names[na]]
        pb = paths_by_speaker[names[nb]]
        trials.append(
            Trial(DIFFERENT, pa[rng.integers(len(pa))], pb[rng.integers(len(pb))])
        )
    return TrialList(trials)


# -- EER -------------------------------------------------------------------

def compute_eer(scores, labels):
    """Equal error rate and its threshold.

    Sweeps every distinct score; FAR(t) is the fraction of
    different-speaker trials with score >= t, FRR(t) the fraction of
    same-speaker trials with score < t. The crossing is linearly
    interpolated between adjacent sweep points.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    same = scores[labels == SAME]
    diff = scores[labels == DIFFERENT]
    if len(same) == 0 or len(diff) == 0:
        raise OneClassOnlyError("need at least one same and one different trial")
    uniq = np.unique(scores)
    thresholds = np.concatenate(([uniq[0] - 1.0], uniq, [uniq[-1] + 1.0]))
    far = (diff[None, :] >= thresholds[:, None]).mean(axis=1)
    frr = (same[None, :] < thresholds[:, None]).mean(axis=1)
    gap = far - frr  # nonincreasing, starts at 1, ends at -1
    k = int(np.argmax(gap <= 0))
    if gap[k] == 0.0:
        return float(far[k]), float(thresholds[k])
    alpha = gap[k - 1] / (gap[k - 1] - gap[k])
    eer = far[k - 1] + alpha * (far[k] - far[k - 1])
    threshold = thresholds[k - 1] + alpha * (thresholds[k] - thresholds[k - 1])
    return float(eer), float(threshold)


def run_verification(net: EmbeddingNet, trials: TrialList, crop_len_s: float = 0.5) -> dict:
    """Embed each side of every trial and score with the inner product."""
    cache = {}

    def embed_path(path):
        if path not in cache:
            cache[path] = embed_audio(net, load_wav(path), crop_len_s)
        return cache[path]

    scores = []
    labels = []
    for idx, trial in enumerate(trials.trials):
        try:
            score = similarity(embed_path(trial.path_a), embed_path(trial.path_b))
        except VoiceIdError as exc:
            raise type(exc)(f"trial {idx}: {exc}") from exc
        scores.append(score)
        labels.append(trial.label)
    eer, threshold = compute_eer(scores, labels)
    scores_arr = np.array(scores)
    labels_arr = np.array(labels)
    decisions = scores_arr >= 0.0
    accuracy_at_zero = float(np.mean(decisions == (labels_arr == SAME)))
    return {
        "scores": scores,
        "labels": labels,
        "eer": eer,
        "threshold": threshold,
        "accuracy_at_zero": accuracy_at_zero,
    }


def eer_vs_length(net: EmbeddingNet, trials: TrialList, lengths) -> list:
    """One verification run per input length; returns [(length, eer), ...]."""
    return [(float(l), run_verification(net, trials, l)["eer"]) for l in lengths]


# -- memory report -----------------------------------------------------------

def truncate_mb(n_bytes: int) -> str:
    """Bytes -> MB string, truncated (not rounded) to two decimals."""
    return f"{math.floor(n_bytes / 1e6 * 100) / 100:.2f}"


def memory_report(feature_kinds=None) -> list:
    """Rows of (kind name, param count, bytes, MB string) per feature kind."""
    if feature_kinds is None:
        feature_kinds = list(FeatureKind)
    nets = {}
    rows = []
    for kind in feature_kinds:
        if kind.dim not in nets:
            nets[kind.dim] = init_net(kind)
        net = nets[kind.dim]
        count = param_count(net)
        rows.append((kind.name, count, 4 * count, truncate_mb(4 * count)))
    return rows


# -- identification heatmap ---------------------------------------------------

@dataclass
class HeatmapGrid:
    speakers_axis: list
    entries_axis: list
    accuracy: np.ndarray  # |speakers_axis| x |entries_axis|

    def to_csv(self) -> str:
        lines = ["speakers\\entries," + ",".join(str(m) for m in self.entries_axis)]
        for n, row in zip(self.speakers_axis, self.accuracy):
            lines.append(str(n) + "," + ",".join(f"{v:.6f}" for v in row))
        return "\n".join(lines) + "\n"


@dataclass
class SynthCorpus:
    speakers: list  # (name, [AudioSegment, ...])
    seed: int


def identification_heatmap(
    net: EmbeddingNet,
    corpus: SynthCorpus,
    speakers_axis,
    entries_axis,
    queries_per_cell: int,
    seed: int,
    crop_len_s: float = 0.5,
) -> HeatmapGrid:
    """Top-1 identification accuracy per (enrolled speakers, entries) cell."""
    speakers_axis = list(speakers_axis)
    entries_axis = list(entries_axis)
    need = max(entries_axis) + queries_per_cell
    for name, utts in corpus.speakers:
        if len(utts) < need:
            raise VoiceIdError(
                f"speaker {name!r} has {len(utts)} utterances, cell needs {need}"
            )
    if len(corpus.speakers) < max(speakers_axis):
        raise VoiceIdError("corpus has fewer speakers than the axis maximum")

    emb_cache = {}

    def embedding(si, ui):
        if (si, ui) not in emb_cache:
            emb_cache[(si, ui)] = embed_audio(net, corpus.speakers[si][1][ui], crop_len_s)
        return emb_cache[(si, ui)]

    rng = np.random.default_rng(seed)
    grid = np.zeros((len(speakers_axis), len(entries_axis)))
    for i, n_speakers in enumerate(speakers_axis):
        for j, n_entries in enumerate(entries_axis):
            chosen = rng.choice(len(corpus.speakers), size=n_speakers, replace=False)
            db = SpeakerDb()
            query_pool = []
            for si in chosen:
                name = corpus.speakers[si][0]
                utt_ids = rng.choice(
                    len(corpus.speakers[si][1]),
                    size=n_entries + queries_per_cell,
                    replace=False,
                )
                for ui in utt_ids[:n_entries]:
                    enroll(db, name, embedding(si, int(ui)), created_at="t0")
                query_pool.extend((name, si, int(ui)) for ui in utt_ids[n_entries:])
            picks = rng.choice(len(query_pool), size=queries_per_cell, replace=False)
            correct = 0
            for p in picks:
                name, si, ui = query_pool[int(p)]
                result = identify(embedding(si, ui), db)
                correct += int(result.decision == "known" and result.speaker == name)
            grid[i, j] = correct / queries_per_cell
    return HeatmapGrid(speakers_axis, entries_axis, grid)


# -- synthetic corpus ---------------------------------------------------------

def _resonator(excitation, center_hz, bandwidth_hz):
    r = math.exp(-math.pi * bandwidth_hz / SAMPLE_RATE)
    theta = 2.0 * math.pi * center_hz / SAMPLE_RATE
    return lfilter([1.0], [1.0, -2.0 * r * math.cos(theta), r * r], excitation)


def synth_corpus(
    n_speakers: int,
    utts_per_speaker: int,
    seed: int,
    duration_s: float = 3.0,
) -> SynthCorpus:
    """Deterministic synthetic speakers: three fixed resonant filters per
    speaker applied to a pulse train + noise excitation with per-utterance
    pitch and gain jitter."""
    if n_speakers < 2:
        raise VoiceIdError("need at least 2 speakers")
    rng = np.random.default_rng(seed)
    n_samples = int(round(max(duration_s, 2.5) * SAMPLE_RATE))
    speakers = []
    for s in range(n_speakers):
        centers = [
            rng.uniform(300.0, 900.0),
            rng.uniform(1000.0, 2300.0),
            rng.uniform(2500.0, 3800.0),
        ]
        bandwidths = [rng.uniform(60.0, 160.0) for _ in range(3)]
        base_pitch = rng.uniform(80.0, 240.0)
        utts = []
        for _ in range(utts_per_speaker):
            pitch = base_pitch * (1.0 + rng.uniform(-0.08, 0.08))
            gain = rng.uniform(0.6, 1.0)
            period = max(2, int(round(SAMPLE_RATE / pitch)))
            excitation = rng.normal(0.0, 0.02, size=n_samples)
            excitation[::period] += 1.0
            voiced = sum(
                _resonator(excitation, c, b) for c, b in zip(centers, bandwidths)
            )
            peak = np.max(np.abs(voiced))
            utts.append(AudioSegment(0.95 * gain * voiced / peak))
        speakers.append((f"spk{s:02d}", utts))
    return SynthCorpus(speakers, seed)


def write_corpus_wavs(corpus: SynthCorpus, directory) -> dict:
    """Dump every utterance as a WAV; returns speaker -> list of paths."""
    paths = {}
    for name, utts in corpus.speakers:
        spk_dir = os.path.join(directory, name)
        os.makedirs(spk_dir, exist_ok=True)
        paths[name] = []
        for k, utt in enumerate(utts):
            path = os.path.join(spk_dir, f"{name}_{k:03d}.wav")
            save_wav(utt, path)
            paths[name].append(path)
    return paths


def load_corpus_dir(directory) -> list:
    """Read a corpus from speaker-named subdirectories of WAV files."""
    speakers = []
    for name in sorted(os.listdir(directory)):
        spk_dir = os.path.join(directory, name)
        if not os.path.isdir(spk_dir):
            continue
        utts = [
            load_wav(os.path.join(spk_dir, f))
            for f in sorted(os.listdir(spk_dir))
            if f.lower().endswith(".wav")
        ]
        if utts:
            speakers.append((name, utts))
    return speakers
