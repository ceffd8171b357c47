#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run from the repo root: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from remixsep import kernels


def _time(fn, *args, repeats=200):
    fn(*args)  # warm-up (and JIT compile for the numba path)
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def main():
    rng = np.random.default_rng(0)
    stereo = rng.standard_normal((2, 480_000))  # 30 s stereo @ 16 kHz
    stereo_b = rng.standard_normal((2, 480_000))
    mono = np.ascontiguousarray(stereo[0])
    mono_b = np.ascontiguousarray(stereo_b[0])
    frames = rng.standard_normal((937, 1024))
    window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(1024) / 1024)

    cases = [
        ("blend", (stereo, stereo_b, 0.3), "blend_arrays"),
        ("mean_sq", (stereo,), "mean_sq"),
        ("mean_sq_diff", (stereo, stereo_b), "mean_sq_diff"),
        ("energy_pair", (stereo, stereo_b), "energy_pair"),
        ("sisnr_stats", (mono, mono_b), "sisnr_stats"),
        ("overlap_add", (frames, window, 512), "overlap_add"),
    ]

    if not kernels.HAS_NUMBA:
        print("numba unavailable (or disabled via REMIXSEP_NO_NUMBA); nothing to compare")
        return

    print(f"{'kernel':<14} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, args, attr in cases:
        np_fn = getattr(kernels, f"_np_{attr.replace('blend_arrays', 'blend')}")
        nb_fn = getattr(kernels, f"_nb_{attr.replace('blend_arrays', 'blend')}")
        t_np = _time(np_fn, *args)
        t_nb = _time(nb_fn, *args)
        print(f"{name:<14} {t_np * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us {t_np / t_nb:>8.2f}x")


if __name__ == "__main__":
    main()
