"""Numba-jitted kernel implementations (default path).

Each function matches the numpy backend's arithmetic term for term; the
pair is checked for bit-identical agreement in tests and in the kernel
benchmark.
"""

import numpy as np
from numba import njit

from ._common import components_from_labels, cubic_taps, disc_offsets


@njit(cache=True)
def _convolve2d_core(padded, flipped, out):
    h, w, _ = out.shape
    kh, kw = flipped.shape
    for y in range(h):
        for x in range(w):
            for c in range(3):
                acc = 0.0
                for i in range(kh):
                    for j in range(kw):
                        acc += flipped[i, j] * padded[y + i, x + j, c]
                if acc >= 0.0:
                    acc = np.floor(acc + 0.5)
                else:
                    acc = np.ceil(acc - 0.5)
                if acc < 0.0:
                    acc = 0.0
                elif acc > 255.0:
                    acc = 255.0
                out[y, x, c] = np.uint8(acc)


def convolve2d_u8(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    flipped = np.ascontiguousarray(kernel[::-1, ::-1], dtype=np.float64)
    padded = np.pad(img, ((ph, ph), (pw, pw), (0, 0)), mode="edge").astype(np.float64)
    out = np.empty(img.shape, dtype=np.uint8)
    _convolve2d_core(padded, flipped, out)
    return out


@njit(cache=True)
def _resize_core(src, xi, xw, yi, yw, out):
    in_h = src.shape[0]
    out_h, out_w, _ = out.shape
    tmp = np.zeros((in_h, out_w, 3), dtype=np.float64)
    for y in range(in_h):
        for x in range(out_w):
            for c in range(3):
                acc = 0.0
                for t in range(4):
                    acc += xw[x, t] * src[y, xi[x, t], c]
                tmp[y, x, c] = acc
    for y in range(out_h):
        for x in range(out_w):
            for c in range(3):
                acc = 0.0
                for t in range(4):
                    acc += yw[y, t] * tmp[yi[y, t], x, c]
                if acc < 0.0:
                    acc = 0.0
                elif acc > 255.0:
                    acc = 255.0
                out[y, x, c] = np.uint8(np.floor(acc + 0.5))


def resize_cubic_u8(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    in_h, in_w = img.shape[:2]
    xi, xw = cubic_taps(in_w, out_w)
    yi, yw = cubic_taps(in_h, out_h)
    out = np.empty((out_h, out_w, 3), dtype=np.uint8)
    _resize_core(img.astype(np.float64), xi, xw, yi, yw, out)
    return out


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def _label8_core(mask):
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    parent = np.zeros(h * w + 1, dtype=np.int32)
    next_label = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x] == 0:
                continue
            best = 0
            # scanned neighbors: NW, N, NE, W
            for k in range(4):
                if k < 3:
                    ny = y - 1
                    nx = x - 1 + k
                else:
                    ny = y
                    nx = x - 1
                if ny < 0 or nx < 0 or nx >= w:
                    continue
                lab = labels[ny, nx]
                if lab == 0:
                    continue
                r = _find(parent, lab)
                if best == 0:
                    best = r
                elif r < best:
                    parent[best] = r
                    best = r
                elif r > best:
                    parent[r] = best
            if best == 0:
                next_label += 1
                parent[next_label] = next_label
                best = next_label
            labels[y, x] = best
    # second pass: renumber roots in first-encounter scan order
    remap = np.zeros(next_label + 1, dtype=np.int32)
    n = 0
    for y in range(h):
        for x in range(w):
            if labels[y, x] != 0:
                r = _find(parent, labels[y, x])
                if remap[r] == 0:
                    n += 1
                    remap[r] = n
                labels[y, x] = remap[r]
    return labels, n


def label_components(mask: np.ndarray):
    labels, n = _label8_core(np.ascontiguousarray(mask, dtype=np.uint8))
    return components_from_labels(labels, int(n))


@njit(cache=True)
def _erode_core(mask, dys, dxs, out):
    h, w = mask.shape
    k = dys.shape[0]
    for y in range(h):
        for x in range(w):
            keep = True
            for i in range(k):
                ny = y + dys[i]
                nx = x + dxs[i]
                if ny < 0 or ny >= h or nx < 0 or nx >= w or mask[ny, nx] == 0:
                    keep = False
                    break
            out[y, x] = 1 if keep else 0


@njit(cache=True)
def _dilate_core(mask, dys, dxs, out):
    h, w = mask.shape
    k = dys.shape[0]
    for y in range(h):
        for x in range(w):
            hit = False
            for i in range(k):
                ny = y + dys[i]
                nx = x + dxs[i]
                if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] != 0:
                    hit = True
                    break
            out[y, x] = 1 if hit else 0


def binary_erode(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0:
        return mask.copy()
    dys, dxs = disc_offsets(radius)
    m = np.ascontiguousarray(mask, dtype=np.uint8)
    out = np.empty_like(m)
    _erode_core(m, dys, dxs, out)
    return out.astype(mask.dtype)


def binary_dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0:
        return mask.copy()
    dys, dxs = disc_offsets(radius)
    m = np.ascontiguousarray(mask, dtype=np.uint8)
    out = np.empty_like(m)
    _dilate_core(m, dys, dxs, out)
    return out.astype(mask.dtype)
