"""Pure-numpy kernel implementations (fallback path).

Accumulation orders mirror the numba backend exactly: convolution adds
kernel taps in row-major order, resampling adds the four cubic taps in
ascending order, so both backends agree bit for bit.
"""

import numpy as np
from scipy import ndimage

from ._common import components_from_labels, cubic_taps, disc_offsets, round_half_away

_EIGHT = np.ones((3, 3), dtype=np.uint8)


def convolve2d_u8(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2D convolution of an (H, W, 3) uint8 image with replicate padding."""
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    flipped = kernel[::-1, ::-1]
    padded = np.pad(img, ((ph, ph), (pw, pw), (0, 0)), mode="edge").astype(np.float64)
    h, w = img.shape[:2]
    acc = np.zeros((h, w, 3), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            acc += flipped[i, j] * padded[i : i + h, j : j + w]
    out = round_half_away(acc)
    return np.clip(out, 0.0, 255.0).astype(np.uint8)


def resize_cubic_u8(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable cubic-convolution resize of an (H, W, 3) uint8 image."""
    in_h, in_w = img.shape[:2]
    xi, xw = cubic_taps(in_w, out_w)
    yi, yw = cubic_taps(in_h, out_h)
    src = img.astype(np.float64)

    tmp = np.zeros((in_h, out_w, 3), dtype=np.float64)
    for t in range(4):
        tmp += xw[:, t][None, :, None] * src[:, xi[:, t], :]
    out = np.zeros((out_h, out_w, 3), dtype=np.float64)
    for t in range(4):
        out += yw[:, t][:, None, None] * tmp[yi[:, t], :, :]

    np.clip(out, 0.0, 255.0, out=out)
    return np.floor(out + 0.5).astype(np.uint8)


def label_components(mask: np.ndarray):
    """8-connected components of a boolean mask.

    Returns an (n, 5) int64 array of (pixel_count, y0, x0, y1, x1) rows in
    the shared deterministic order.
    """
    labels, n = ndimage.label(mask, structure=_EIGHT)
    return components_from_labels(labels.astype(np.int32), int(n))


def _shift_and(acc, mask, dy, dx):
    h, w = mask.shape
    ys0, ys1 = max(0, -dy), min(h, h - dy)
    xs0, xs1 = max(0, -dx), min(w, w - dx)
    shifted = np.zeros_like(mask)
    if ys0 < ys1 and xs0 < xs1:
        shifted[ys0:ys1, xs0:xs1] = mask[ys0 + dy : ys1 + dy, xs0 + dx : xs1 + dx]
    return acc & shifted if acc is not None else shifted


def binary_erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """Erosion by a disc; pixels whose footprint leaves the image erode."""
    if radius <= 0:
        return mask.copy()
    dys, dxs = disc_offsets(radius)
    acc = None
    for dy, dx in zip(dys, dxs):
        acc = _shift_and(acc, mask, int(dy), int(dx))
    return acc


def binary_dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilation by a disc; contributions from outside the image are empty."""
    if radius <= 0:
        return mask.copy()
    dys, dxs = disc_offsets(radius)
    acc = np.zeros_like(mask)
    for dy, dx in zip(dys, dxs):
        acc |= _shift_and(None, mask, int(dy), int(dx))
    return acc
