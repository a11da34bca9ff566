"""Compare the compiled and numpy Viterbi kernels on noisy BPSK frames.

Usage: ``python3 benchmarks/bench_viterbi.py [--bits N] [--repeats R] [--ebn0 DB]``

Both backends decode the same received values; the script checks that their
outputs are identical and reports the best-of-``R`` wall time for each.
"""
import argparse
import time

import numpy as np

from semcomm.baselines import BACKEND, conv_encode, viterbi_decode
from semcomm.baselines.convcode import OUTPUTS, RATE_INV


def noisy_frame(num_bits: int, ebn0_db: float, seed: int = 0):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, num_bits).astype(np.uint8)
    coded = conv_encode(bits)
    sigma = np.sqrt(1.0 / (2 * (1.0 / RATE_INV) * 10 ** (ebn0_db / 10)))
    received = (1.0 - 2.0 * coded) + sigma * rng.standard_normal(coded.size)
    return bits, received.reshape(-1, RATE_INV)


def best_time(fn, repeats: int) -> tuple[float, np.ndarray]:
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--bits", type=int, default=100_000)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--ebn0", type=float, default=4.0)
    args = p.parse_args(argv)

    bits, rx = noisy_frame(args.bits, args.ebn0)
    results = {}
    backends = ["numpy"] + (["cython"] if BACKEND == "cython" else [])
    for name in backends:
        t, out = best_time(lambda: viterbi_decode(rx, OUTPUTS, backend=name), args.repeats)
        ber = float(np.mean(out[: args.bits] != bits))
        results[name] = (t, out)
        print(f"{name:>7}: {t * 1e3:9.1f} ms  ({args.bits / t / 1e6:6.2f} Mbit/s)  BER {ber:.2e}")
    if "cython" in results:
        same = np.array_equal(results["numpy"][1], results["cython"][1])
        print(f"speedup: {results['numpy'][0] / results['cython'][0]:.1f}x, outputs identical: {same}")
        return 0 if same else 1
    print("compiled kernel not built; only the numpy fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
