"""Compare the Cython and numpy LSTM recurrence kernels.

Runs the forward and backward sequence kernels on identical inputs and
reports wall-clock throughput for both backends, plus a parity check.

Usage: python3 benchmarks/bench_lstm.py [--batch 20] [--time 30] [--hidden 256]
"""

import argparse
import time

import numpy as np

from voiceid.kernels import _lstm_np

try:
    from voiceid.kernels import _lstm_cy
except ImportError:
    _lstm_cy = None


def bench(mod, a_in, u, repeats):
    h, c, gates = mod.lstm_sequence_forward(a_in, u)
    dh_out = np.ones_like(h)

    t0 = time.perf_counter()
    for _ in range(repeats):
        h, c, gates = mod.lstm_sequence_forward(a_in, u)
    t_fwd = (time.perf_counter() - t0) / repeats

    t0 = time.perf_counter()
    for _ in range(repeats):
        mod.lstm_sequence_backward(dh_out, gates, c, u)
    t_bwd = (time.perf_counter() - t0) / repeats
    return t_fwd, t_bwd, h


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=20)
    ap.add_argument("--time", type=int, default=30, help="sequence length T")
    ap.add_argument("--hidden", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    dt = np.dtype(args.dtype)
    a_in = rng.normal(size=(args.batch, args.time, 4 * args.hidden)).astype(dt)
    u = (rng.normal(size=(4 * args.hidden, args.hidden)) * 0.05).astype(dt)

    print(f"batch={args.batch} T={args.time} hidden={args.hidden} dtype={args.dtype}")
    np_fwd, np_bwd, h_np = bench(_lstm_np, a_in, u, args.repeats)
    print(f"numpy  forward {np_fwd * 1e3:8.2f} ms   backward {np_bwd * 1e3:8.2f} ms")

    if _lstm_cy is None:
        print("cython backend not built; skipping")
        return

    cy_fwd, cy_bwd, h_cy = bench(_lstm_cy, a_in, u, args.repeats)
    print(f"cython forward {cy_fwd * 1e3:8.2f} ms   backward {cy_bwd * 1e3:8.2f} ms")
    print(f"speedup        {np_fwd / cy_fwd:8.2f} x            {np_bwd / cy_bwd:8.2f} x")
    err = float(np.max(np.abs(h_np - h_cy)))
    print(f"max |h_numpy - h_cython| = {err:.3e}")


if __name__ == "__main__":
    main()
