"""Command-line interface for the full pipeline."""

import argparse
import sys

import numpy as np

from . import evalkit, net as netmod
from .dsp import FeatureKind, load_wav
from .embed import embed_audio, similarity, verify
from .errors import VoiceIdError
from .identify import SpeakerDb, enroll, identify, load_db, save_db


def _add_common(p, weights=False, db=False, crop=True):
    if weights:
        p.add_argument("--weights", required=True, help="weight file path")
    if db:
        p.add_argument("--db", required=True, help="speaker database path")
    if crop:
        p.add_argument(
            "--crop", type=float, default=0.5, help="crop length in seconds"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voiceid",
        description="BLSTM speaker embeddings with online voting identification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the embedding network")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus", help="directory of per-speaker WAV subdirectories")
    src.add_argument("--synth", type=int, help="train on N synthetic speakers")
    p.add_argument("--synth-utts", type=int, default=20)
    p.add_argument("--feature", default="SpecdB", choices=[k.name for k in FeatureKind])
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.0001)
    p.add_argument("--segment-len", type=float, default=0.5)
    p.add_argument("--hidden", type=int, default=netmod.HIDDEN)
    p.add_argument("--layers", type=int, default=netmod.N_LAYERS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output weight file")

    p = sub.add_parser("embed", help="print the embedding of a WAV file")
    p.add_argument("wav")
    _add_common(p, weights=True)

    p = sub.add_parser("verify", help="same/different decision for two WAV files")
    p.add_argument("wav_a")
    p.add_argument("wav_b")
    p.add_argument("--threshold", type=float, default=0.0)
    _add_common(p, weights=True)

    p = sub.add_parser("identify", help="identify the speaker of a WAV file")
    p.add_argument("wav")
    _add_common(p, weights=True, db=True)

    p = sub.add_parser("enroll", help="enroll a WAV file under a speaker name")
    p.add_argument("wav")
    p.add_argument("--name", required=True)
    _add_common(p, weights=True, db=True)

    p = sub.add_parser("eval-eer", help="EER over a trial list")
    p.add_argument("trials")
    p.add_argument("--lengths", default="0.5", help="comma-separated crop lengths")
    _add_common(p, weights=True, crop=False)

    p = sub.add_parser("heatmap", help="identification accuracy heatmap")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus", help="directory of per-speaker WAV subdirectories")
    src.add_argument("--synth", type=int, help="use N synthetic speakers")
    p.add_argument("--synth-utts", type=int, default=12)
    p.add_argument("--speakers", default="2,3,4,5", help="comma-separated axis")
    p.add_argument("--entries", default="1,2,3,4,5", help="comma-separated axis")
    p.add_argument("--queries", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p, weights=True)

    p = sub.add_parser("info", help="parameter/memory report per feature kind")

    p = sub.add_parser("serve", help="run the HTTP identification service")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--auto-update", action="store_true")
    p.add_argument("--pending-ttl", type=float, default=300.0)
    _add_common(p, weights=True, db=True)

    return parser


def _load_db_or_empty(path):
    import os

    if os.path.exists(path):
        return load_db(path)
    return SpeakerDb()


def _cmd_train(args, out):
    if args.synth is not None:
        corpus = evalkit.synth_corpus(args.synth, args.synth_utts, args.seed).speakers
    else:
        corpus = evalkit.load_corpus_dir(args.corpus)
    cfg = netmod.TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        segment_len_s=args.segment_len,
        rng_seed=args.seed,
    )
    kind = FeatureKind[args.feature]
    network, head, log = netmod.train(
        corpus, cfg, feature_kind=kind, hidden=args.hidden, n_layers=args.layers
    )
    for row in log:
        out.write(
            f"epoch={row['epoch']} loss={row['mean_loss']:.6f} "
            f"val_acc={row['val_accuracy']:.4f} steps={row['steps']}\n"
        )
    netmod.save_weights(network, args.out, head)
    out.write(f"saved {args.out}\n")
    return 0


def _cmd_heatmap(args, out):
    network, _ = netmod.load_weights(args.weights)
    if args.synth is not None:
        corpus = evalkit.synth_corpus(args.synth, args.synth_utts, args.seed)
    else:
        corpus = evalkit.SynthCorpus(evalkit.load_corpus_dir(args.corpus), args.seed)
    grid = evalkit.identification_heatmap(
        network,
        corpus,
        [int(v) for v in args.speakers.split(",")],
        [int(v) for v in args.entries.split(",")],
        args.queries,
        args.seed,
        crop_len_s=args.crop,
    )
    out.write(grid.to_csv())
    return 0


def run(argv, out=None, err=None) -> int:
    """Execute one CLI invocation; returns the process exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "train":
            return _cmd_train(args, out)

        if args.command == "embed":
            network, _ = netmod.load_weights(args.weights)
            emb = embed_audio(network, load_wav(args.wav), args.crop)
            out.write(" ".join(f"{v:.8e}" for v in emb.values) + "\n")
            return 0

        if args.command == "verify":
            network, _ = netmod.load_weights(args.weights)
            a = embed_audio(network, load_wav(args.wav_a), args.crop)
            b = embed_audio(network, load_wav(args.wav_b), args.crop)
            decision, score = verify(a, b, args.threshold)
            out.write(f"{score:.6f} {decision}\n")
            return 0

        if args.command == "identify":
            network, _ = netmod.load_weights(args.weights)
            db = load_db(args.db)
            emb = embed_audio(network, load_wav(args.wav), args.crop)
            result = identify(emb, db)
            if result.decision == "known":
                out.write(f"known {result.speaker}\n")
            else:
                out.write("unknown\n")
            for name, score in result.scores.items():
                out.write(f"{name} {score:.6f}\n")
            return 0

        if args.command == "enroll":
            network, _ = netmod.load_weights(args.weights)
            db = _load_db_or_empty(args.db)
            emb = embed_audio(network, load_wav(args.wav), args.crop)
            enroll(db, args.name, emb)
            save_db(db, args.db)
            out.write(f"{args.name} {db.entry_count(args.name)}\n")
            return 0

        if args.command == "eval-eer":
            network, _ = netmod.load_weights(args.weights)
            trials = evalkit.load_trials(args.trials)
            lengths = [float(v) for v in args.lengths.split(",")]
            out.write("length,eer\n")
            for length, eer in evalkit.eer_vs_length(network, trials, lengths):
                out.write(f"{length:.2f},{eer:.6f}\n")
            return 0

        if args.command == "heatmap":
            return _cmd_heatmap(args, out)

        if args.command == "info":
            out.write("kind params bytes mb\n")
            for kind, count, n_bytes, mb in evalkit.memory_report():
                out.write(f"{kind} {count} {n_bytes} {mb}\n")
            return 0

        if args.command == "serve":
            import uvicorn

            from .service import ServiceConfig, ServiceState, create_app

            network, _ = netmod.load_weights(args.weights)
            db = _load_db_or_empty(args.db)
            state = ServiceState(
                net=network,
                db=db,
                cfg=ServiceConfig(
                    crop_len_s=args.crop,
                    auto_update=args.auto_update,
                    pending_ttl_s=args.pending_ttl,
                ),
                db_path=args.db,
            )
            uvicorn.run(create_app(state), host=args.host, port=args.port)
            return 0
    except VoiceIdError as exc:
        err.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 1
    return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
