#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on a phantom-like volume under both backends,
checks bit-identical outputs, and prints a timing table.

    python3 benchmarks/bench_kernels.py [--slices N] [--size PX] [--repeats R]
"""
import argparse
import time

import numpy as np

from ctstd.kernels import _numba_impl, _numpy_impl
from ctstd.phantom import PhantomSpec, generate_phantom


def make_volume(n_slices, size):
    phase = (np.arange(n_slices) + 0.5) / n_slices
    profile = 0.05 + 0.28 * np.sin(np.pi * phase) ** 2
    spec = PhantomSpec(
        n_slices=n_slices,
        width=size,
        height=size,
        lung_profile=tuple(profile.tolist()),
        noise_sigma=5.0,
        background_level=30,
        lung_level=210,
        seed=0,
    )
    volume, _ = generate_phantom(spec)
    return volume.pixels


def timed(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--slices", type=int, default=300)
    parser.add_argument("--size", type=int, default=512)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    print(f"workload: {args.slices} slices of {args.size}x{args.size}, "
          f"best of {args.repeats}")
    vol = make_volume(args.slices, args.size)
    masks = vol >= 120

    # trigger JIT compilation outside the timed region
    tiny = vol[:1, :32, :32].copy()
    _numba_impl.mean_filter(tiny, 1)
    _numba_impl.binary_opening(tiny >= 120)
    _numba_impl.remove_small_components(tiny >= 120, 4.0)

    cases = [
        ("mean_filter k=1", "mean_filter", (vol, 1)),
        ("mean_filter k=3", "mean_filter", (vol, 3)),
        ("binary_opening", "binary_opening", (masks,)),
        ("remove_small_components", "remove_small_components", (masks, 4.0)),
    ]

    print(f"{'kernel':<26} {'numpy':>9} {'numba':>9} {'speedup':>8}  identical")
    for label, name, call_args in cases:
        np_out, np_time = timed(getattr(_numpy_impl, name), *call_args,
                                repeats=args.repeats)
        nb_out, nb_time = timed(getattr(_numba_impl, name), *call_args,
                                repeats=args.repeats)
        same = np.array_equal(np_out, nb_out)
        print(f"{label:<26} {np_time:>8.3f}s {nb_time:>8.3f}s "
              f"{np_time / nb_time:>7.2f}x  {same}")
        if not same:
            raise SystemExit(f"backend outputs differ for {label}")


if __name__ == "__main__":
    main()
