"""Benchmark the compiled (numba) kernels against the pure-numpy fallback.

Runs each hot kernel on identical random inputs with both backends, checks
that the outputs agree to near machine precision, and reports per-call wall
time plus the speedup. JIT compilation happens in an untimed warm-up pass.

Usage: python3 benchmarks/bench_kernels.py [--t 40] [--k 9] [--hidden 64]
"""

import argparse
import time

import numpy as np

from seqtag.kernels import numpy_backend

try:
    from seqtag.kernels import numba_backend
except ImportError:
    numba_backend = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def max_diff(a, b):
    if isinstance(a, (tuple, list)):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)).max())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t", type=int, default=40, help="sequence length")
    ap.add_argument("--k", type=int, default=9, help="tag count")
    ap.add_argument("--hidden", type=int, default=64, help="LSTM width")
    ap.add_argument("--dim", type=int, default=100, help="input width")
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    if numba_backend is None:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    T, K, h, d = args.t, args.k, args.hidden, args.dim
    P = rng.normal(size=(T, K))
    A = rng.normal(size=(K + 2, K + 2))
    x = rng.normal(size=(T, d))
    w_ih = rng.normal(size=(4 * h, d)) * 0.1
    w_hh = rng.normal(size=(4 * h, h)) * 0.1
    b = rng.normal(size=4 * h) * 0.1
    h_seq, c_seq, gates = numpy_backend.lstm_forward(x, w_ih, w_hh, b)
    grad_h = rng.normal(size=(T, h))

    cases = {
        "crf_forward": lambda be: be.crf_forward(P, A),
        "crf_forward_backward": lambda be: be.crf_forward_backward(P, A),
        "viterbi": lambda be: be.viterbi(P, A),
        "lstm_forward": lambda be: be.lstm_forward(x, w_ih, w_hh, b),
        "lstm_backward": lambda be: be.lstm_backward(
            x, w_ih, w_hh, h_seq, c_seq, gates, grad_h),
    }

    print(f"T={T} K={K} hidden={h} dim={d}  (best of {args.repeat} calls)")
    print(f"{'kernel':<22}{'numpy':>12}{'numba':>12}{'speedup':>9}{'max diff':>12}")
    for name, call in cases.items():
        call(numba_backend)  # warm up / JIT compile, untimed
        out_np = call(numpy_backend)
        out_nb = call(numba_backend)
        diff = max_diff(out_np, out_nb)
        t_np = timeit(lambda: call(numpy_backend), args.repeat)
        t_nb = timeit(lambda: call(numba_backend), args.repeat)
        print(f"{name:<22}{t_np * 1e6:>10.1f}us{t_nb * 1e6:>10.1f}us"
              f"{t_np / t_nb:>8.1f}x{diff:>12.2e}")
        assert diff < 1e-9, f"{name}: backends disagree ({diff})"


if __name__ == "__main__":
    main()
