"""Helpers shared by the numba and numpy kernel backends.

Both backends must produce bit-identical outputs, so anything that decides
tap positions, weights, orderings or footprints lives here and is computed
once, the same way, for either path.
"""

import numpy as np


def cubic_taps(in_size: int, out_size: int):
    """Tap indices and weights for separable cubic-convolution resampling.

    Kernel parameter a = -0.5 (Catmull-Rom), interpolating: k(0)=1, k(+-1)=0.
    Source positions follow the center-aligned convention
    src = (dst + 0.5) * in/out - 0.5; out-of-range taps are clamped to the
    edge (replicate). Returns (idx, w) with shapes (out_size, 4); weights are
    float64 and are not renormalized.
    """
    dst = np.arange(out_size, dtype=np.float64)
    src = (dst + 0.5) * (in_size / out_size) - 0.5
    base = np.floor(src)
    frac = src - base

    # distances from src to the four taps base-1 .. base+2
    d0 = frac + 1.0
    d3 = 2.0 - frac
    w = np.empty((out_size, 4), dtype=np.float64)
    w[:, 0] = ((-0.5 * d0 + 2.5) * d0 - 4.0) * d0 + 2.0
    w[:, 1] = (1.5 * frac - 2.5) * frac * frac + 1.0
    d2 = 1.0 - frac
    w[:, 2] = (1.5 * d2 - 2.5) * d2 * d2 + 1.0
    w[:, 3] = ((-0.5 * d3 + 2.5) * d3 - 4.0) * d3 + 2.0

    idx = base.astype(np.int64)[:, None] + np.arange(-1, 3, dtype=np.int64)[None, :]
    np.clip(idx, 0, in_size - 1, out=idx)
    return idx, w


def disc_offsets(radius: int):
    """(dy, dx) offsets of a disc footprint: dx^2 + dy^2 <= radius^2."""
    r = int(radius)
    dys, dxs = [], []
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy * dy + dx * dx <= r * r:
                dys.append(dy)
                dxs.append(dx)
    return np.asarray(dys, dtype=np.int64), np.asarray(dxs, dtype=np.int64)


def round_half_away(values: np.ndarray) -> np.ndarray:
    """Round half away from zero, elementwise, keeping float dtype."""
    return np.where(values >= 0.0, np.floor(values + 0.5), np.ceil(values - 0.5))


def components_from_labels(labels: np.ndarray, n_labels: int):
    """Summarize a labeled mask into (pixel_count, y0, x0, y1, x1) rows.

    Box coordinates are half-open pixel extents (y1/x1 exclusive). Rows are
    ordered by box (y0, x0), ties broken by the component's first pixel in
    scan order, which is unique, so the order is total.
    """
    if n_labels == 0:
        return np.zeros((0, 5), dtype=np.int64)
    flat = labels.ravel()
    h, w = labels.shape
    counts = np.bincount(flat, minlength=n_labels + 1)[1:]
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs] - 1
    y0 = np.full(n_labels, h, dtype=np.int64)
    x0 = np.full(n_labels, w, dtype=np.int64)
    y1 = np.zeros(n_labels, dtype=np.int64)
    x1 = np.zeros(n_labels, dtype=np.int64)
    np.minimum.at(y0, lab, ys)
    np.minimum.at(x0, lab, xs)
    np.maximum.at(y1, lab, ys)
    np.maximum.at(x1, lab, xs)
    nz = np.flatnonzero(flat)
    first = np.zeros(n_labels, dtype=np.int64)
    # reversed so the smallest flat index per label wins
    first[flat[nz[::-1]] - 1] = nz[::-1]
    order = np.lexsort((first, x0, y0))
    out = np.empty((n_labels, 5), dtype=np.int64)
    out[:, 0] = counts[order]
    out[:, 1] = y0[order]
    out[:, 2] = x0[order]
    out[:, 3] = y1[order] + 1
    out[:, 4] = x1[order] + 1
    return out
