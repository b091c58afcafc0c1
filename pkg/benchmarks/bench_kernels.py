#!/usr/bin/env python3
"""Benchmark the numba kernel backend against the pure-numpy fallback.

Times the hot image kernels on a synthetic field of configurable size,
prints median wall-clock per call and speedup, and verifies both backends
agree bit for bit on every operation.

Usage:
    python benchmarks/bench_kernels.py [--rows 6] [--plants 9] [--iters 5]
"""

import argparse
import statistics
import time

import numpy as np

from phenoscale._kernels import _numpy
from phenoscale.detector import binarize, excess_green
from phenoscale.resample import gaussian_kernel, motion_blur_kernel
from phenoscale.synthfield import SynthFieldParams, generate_field

try:
    from phenoscale._kernels import _numba
except ImportError:
    _numba = None


def time_call(fn, args, iters):
    samples = []
    for _ in range(iters):
        t0 = time.perf_counter()
        result = fn(*args)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples), result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=6)
    parser.add_argument("--plants", type=int, default=9)
    parser.add_argument("--iters", type=int, default=5)
    args = parser.parse_args()

    img, _, _ = generate_field(
        SynthFieldParams(rows=args.rows, plants_per_row=args.plants, seed=0)
    )
    h, w = img.shape[:2]
    print(f"field: {w}x{h} px, {args.iters} iterations per kernel\n")

    mask = binarize(excess_green(img), None)
    cases = [
        ("convolve gaussian 9x9", "convolve2d_u8", (img, gaussian_kernel(0.63, 9))),
        ("convolve motion 3x3", "convolve2d_u8", (img, motion_blur_kernel(3, 45))),
        ("bicubic upsample x2", "resize_cubic_u8", (img, h * 2, w * 2)),
        ("bicubic downsample x0.5", "resize_cubic_u8", (img, h // 2, w // 2)),
        ("label components", "label_components", (mask,)),
        ("binary erode r=2", "binary_erode", (mask, 2)),
        ("binary dilate r=2", "binary_dilate", (mask, 2)),
    ]

    if _numba is not None:
        print("warming up numba JIT...", end=" ", flush=True)
        t0 = time.perf_counter()
        for _, name, call_args in cases:
            getattr(_numba, name)(*call_args)
        print(f"done ({time.perf_counter() - t0:.1f}s)\n")

    header = f"{'kernel':<26} {'numpy (ms)':>11} {'numba (ms)':>11} {'speedup':>8}  agree"
    print(header)
    print("-" * len(header))
    for label, name, call_args in cases:
        np_time, np_result = time_call(getattr(_numpy, name), call_args, args.iters)
        if _numba is None:
            print(f"{label:<26} {np_time * 1e3:>11.2f} {'n/a':>11} {'n/a':>8}")
            continue
        nb_time, nb_result = time_call(getattr(_numba, name), call_args, args.iters)
        agree = np.array_equal(np_result, nb_result)
        print(
            f"{label:<26} {np_time * 1e3:>11.2f} {nb_time * 1e3:>11.2f} "
            f"{np_time / nb_time:>7.1f}x  {'yes' if agree else 'NO'}"
        )
        if not agree:
            raise SystemExit(f"backend mismatch in {label}")


if __name__ == "__main__":
    main()
