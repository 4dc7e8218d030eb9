"""Acceptance gate.

One test per acceptance criterion; each prints a single PASS/FAIL line
(run pytest with -s to see them). Tolerances are pinned in the asserts.
The desk-scale learning criterion trains a full-size network and takes
several minutes; everything else is fast.
"""

import io
import json
import os

import numpy as np
import pytest
from fastapi.testclient import TestClient
from scipy.interpolate import interp1d
from scipy.optimize import brentq

from voiceid import cli, evalkit
from voiceid import net as N
from voiceid.dsp import AudioSegment, FeatureKind, SAMPLE_RATE, save_wav
from voiceid.embed import Embedding, embed_audio
from voiceid.evalkit import compute_eer, make_balanced_trials, run_verification
from voiceid.identify import SpeakerDb, enroll, identify, save_db
from voiceid.net import TrainConfig, train
from voiceid.service import ServiceConfig, ServiceState, create_app


def report(name, ok, detail=""):
    print(f"\n{'PASS' if ok else 'FAIL'}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_memory_figures():
    code, out, _ = run_cli(["info"])
    spectral = all(
        f"{kind} 4202496 16809984 16.80\n" in out
        for kind in ("SpecMag", "SpecdB", "Spec", "EmphSpec", "EmphSpecdB")
    )
    mfcc = "MFCC 3758080 15032320 15.03\n" in out
    report(
        "memory figures (4,202,496/16.80 MB spectral; 3,758,080/15.03 MB MFCC)",
        code == 0 and spectral and mfcc,
        out.strip().replace("\n", "; "),
    )


def test_embedding_contract():
    net = N.init_net(FeatureKind.SpecdB, rng=np.random.default_rng(0))
    rng = np.random.default_rng(1)
    seg = AudioSegment(rng.normal(0, 0.2, 3 * SAMPLE_RATE).astype(np.float64))
    worst = 0.0
    ok = True
    for crop in (0.25, 0.5, 1.0, 1.5, 2.0):
        emb = embed_audio(net, seg, crop)
        ok = ok and emb.values.shape == (512,)
        worst = max(worst, abs(float(np.linalg.norm(emb.values)) - 1.0))
    report(
        "embedding contract: 512-d unit-norm for crops 0.25-2.0 s",
        ok and worst <= 1e-5,
        f"max norm deviation {worst:.2e}",
    )


def test_gradient_correctness():
    eps = 1e-5
    worst_max = 0.0
    worst_frac = 1.0
    for trial in range(20):
        rng = np.random.default_rng(100 + trial)
        net = N.init_net(
            FeatureKind.SpecdB, hidden=3, n_layers=1, input_dim=2,
            rng=rng, dtype=np.float64,
        )
        head = N.init_head(2, net.embed_dim, rng=rng, dtype=np.float64)
        x = rng.normal(size=(1, 4, 2))
        label = [int(rng.integers(0, 2))]
        _, grads = N.batch_backward(net, head, x, label)
        params = N.params_dict(net, head)
        rels = []
        for key, p in params.items():
            g = grads[key]
            flat = p.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                lp, _ = N.batch_backward(net, head, x, label)
                flat[i] = orig - eps
                lm, _ = N.batch_backward(net, head, x, label)
                flat[i] = orig
                fd = (lp - lm) / (2 * eps)
                an = g.reshape(-1)[i]
                denom = max(abs(fd), abs(an), 1e-8)
                rels.append(abs(fd - an) / denom)
        rels = np.array(rels)
        worst_max = max(worst_max, float(rels.max()))
        worst_frac = min(worst_frac, float((rels <= 1e-4).mean()))
    report(
        "gradient correctness: BPTT vs central differences on 20 tiny nets",
        worst_frac >= 0.99 and worst_max <= 1e-3,
        f"min fraction within 1e-4: {worst_frac:.4f}; max rel err {worst_max:.2e}",
    )


def brute_force_eer(scores, labels):
    """Independent oracle: explicit counting sweep + piecewise-linear root."""
    scores = [float(s) for s in scores]
    same = [s for s, l in zip(scores, labels) if l == 1]
    diff = [s for s, l in zip(scores, labels) if l == 0]
    ts = sorted(set(scores))
    ts = [ts[0] - 1.0] + ts + [ts[-1] + 1.0]
    far = [sum(1 for s in diff if s >= t) / len(diff) for t in ts]
    frr = [sum(1 for s in same if s < t) / len(same) for t in ts]
    gap = interp1d(ts, np.array(far) - np.array(frr))
    root = brentq(gap, ts[0], ts[-1], xtol=1e-13)
    return float(interp1d(ts, far)(root))


def test_eer_oracle_equivalence():
    eer_hand, _ = compute_eer([0.8, 0.2, 0.7, 0.1], [1, 1, 0, 0])
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(4, 201))
        labels = rng.integers(0, 2, size=n)
        labels[:2] = [0, 1]
        scores = np.where(
            labels == 1, rng.normal(0.3, 0.5, n), rng.normal(-0.3, 0.5, n)
        )
        eer, _ = compute_eer(scores, labels)
        worst = max(worst, abs(eer - brute_force_eer(scores, labels)))
    report(
        "EER oracle equivalence: 100 random sets + hand-derived 0.5 case",
        eer_hand == 0.5 and worst <= 1e-9,
        f"hand case {eer_hand}; max |diff| {worst:.2e}",
    )


def test_voting_law():
    def unit(rng, dim=8):
        v = rng.normal(size=dim).astype(np.float32)
        return Embedding(v / np.linalg.norm(v), 0.5)

    rng = np.random.default_rng(3)
    law_ok = True
    for _ in range(1000):
        q = unit(rng)
        db = SpeakerDb()
        for k in range(int(rng.integers(1, 6))):
            for _ in range(int(rng.integers(1, 4))):
                enroll(db, f"s{k}", unit(rng), created_at="t")
        res = identify(q, db)
        r = res.scores
        if max(r.values()) < 0:
            law_ok = law_ok and res.decision == "unknown" and res.speaker is None
        else:
            law_ok = law_ok and res.decision == "known"
            law_ok = law_ok and r[res.speaker] == max(r.values())

    perm_ok = True
    for _ in range(50):
        q = unit(rng)
        entries = [unit(rng) for _ in range(5)]
        db1, db2 = SpeakerDb(), SpeakerDb()
        for e in entries:
            enroll(db1, "x", e, created_at="t")
        for e in reversed(entries):
            enroll(db2, "x", e, created_at="t")
        perm_ok = perm_ok and abs(
            identify(q, db1).scores["x"] - identify(q, db2).scores["x"]
        ) <= 1e-7

    q = Embedding(np.array([1.0, 0.0], dtype=np.float32), 0.5)
    db = SpeakerDb()
    enroll(db, "ortho", Embedding(np.array([0.0, 1.0], dtype=np.float32), 0.5),
           created_at="t")
    boundary = identify(q, db)
    boundary_ok = boundary.decision == "known" and boundary.scores["ortho"] == 0.0

    report(
        "voting law: unknown iff all scores < 0, argmax otherwise, "
        "permutation-invariant, boundary 0 is known",
        law_ok and perm_ok and boundary_ok,
    )


def test_desk_scale_learning(tmp_path):
    corpus = evalkit.synth_corpus(8, 26, seed=17)
    train_split = [(name, utts[:20]) for name, utts in corpus.speakers]
    cfg = TrainConfig(
        learning_rate=0.001, batch_size=16, epochs=50,
        segment_len_s=0.5, rng_seed=17,
    )
    net, _, log = train(train_split, cfg, feature_kind=FeatureKind.SpecdB)
    steps = log[-1]["steps"]

    paths = {}
    for name, utts in corpus.speakers:
        sub = evalkit.SynthCorpus([(name, utts[20:])], seed=0)
        paths.update(evalkit.write_corpus_wavs(sub, str(tmp_path / name)))
    trials = make_balanced_trials(paths, 200, seed=17)
    result = run_verification(net, trials, 0.5)

    grid = evalkit.identification_heatmap(
        net, corpus, [5], [1, 2, 3, 4, 5], 10, seed=17
    )
    m1 = float(grid.accuracy[:, 0].mean())
    m5 = float(grid.accuracy[:, 4].mean())

    report(
        "desk-scale learning: >=500 steps, held-out EER < 0.25, "
        "heatmap m=5 mean >= m=1 mean",
        steps >= 500 and result["eer"] < 0.25 and m5 >= m1,
        f"steps {steps}; EER {result['eer']:.4f}; m=1 {m1:.3f} m=5 {m5:.3f}",
    )


def test_reproducibility(tmp_path):
    weights = str(tmp_path / "w.bin")
    train_argv = [
        "train", "--synth", "2", "--synth-utts", "3", "--epochs", "2",
        "--batch-size", "4", "--lr", "0.002", "--hidden", "8",
        "--layers", "1", "--seed", "13", "--out", weights,
    ]
    _, t1, _ = run_cli(train_argv)
    b1 = open(weights, "rb").read()
    _, t2, _ = run_cli(train_argv)
    b2 = open(weights, "rb").read()
    train_ok = t1 == t2 and b1 == b2

    paths = evalkit.write_corpus_wavs(
        evalkit.synth_corpus(3, 3, seed=5), str(tmp_path / "wavs")
    )
    trials_path = str(tmp_path / "trials.txt")
    evalkit.save_trials(make_balanced_trials(paths, 20, seed=5), trials_path)
    eer_argv = ["eval-eer", trials_path, "--weights", weights,
                "--lengths", "0.25,0.5"]
    _, e1, _ = run_cli(eer_argv)
    _, e2, _ = run_cli(eer_argv)

    hm_argv = ["heatmap", "--synth", "3", "--synth-utts", "5",
               "--speakers", "2,3", "--entries", "1,2", "--queries", "3",
               "--seed", "9", "--weights", weights]
    _, h1, _ = run_cli(hm_argv)
    _, h2, _ = run_cli(hm_argv)

    report(
        "reproducibility: train/eval-eer/heatmap byte-identical with fixed seed",
        train_ok and e1 == e2 and h1 == h2,
    )


def test_engine_parity(tmp_path, small_corpus, tiny_trained):
    net, head, _ = tiny_trained
    weights = str(tmp_path / "w.bin")
    N.save_weights(net, weights, head)

    utts = dict(small_corpus.speakers)
    db = SpeakerDb()
    enroll(db, "alice", embed_audio(net, utts["spk00"][0], 0.5), created_at="t")
    enroll(db, "bob", embed_audio(net, utts["spk01"][0], 0.5), created_at="t")
    db_path = str(tmp_path / "db.json")
    save_db(db, db_path)
    query = utts["spk00"][1]
    wav_path = str(tmp_path / "q.wav")
    save_wav(query, wav_path)

    code, out, _ = run_cli(
        ["identify", wav_path, "--weights", weights, "--db", db_path]
    )
    assert code == 0
    lines = out.splitlines()
    cli_decision = lines[0].split()[0]
    cli_speaker = lines[0].split()[1] if cli_decision == "known" else None
    cli_scores = {ln.split()[0]: float(ln.split()[1]) for ln in lines[1:]}

    state = ServiceState(net=net, db=db, cfg=ServiceConfig(), db_path=db_path)
    client = TestClient(create_app(state))
    buf = io.BytesIO()
    save_wav(query, buf)
    doc = client.post("/api/identify", content=buf.getvalue()).json()

    scores_ok = set(doc["scores"]) == set(cli_scores) and all(
        abs(doc["scores"][k] - cli_scores[k]) <= 1e-6 for k in cli_scores
    )
    report(
        "engine parity: CLI identify == POST /api/identify",
        doc["decision"] == cli_decision
        and doc.get("speaker") == cli_speaker
        and scores_ok,
        f"decision {cli_decision}",
    )
