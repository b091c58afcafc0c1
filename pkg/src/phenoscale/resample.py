"""Image degradation and resampling transforms.

A raster is an (H, W, 3) uint8 numpy array, RGB, row-major. The
high-to-low-resolution transform blurs at native resolution (gaussian, then
motion blur) and only then decimates, the standard anti-aliased ordering.
Cubic resampling uses the interpolating a = -0.5 kernel with replicate edge
handling so results are reproducible bit for bit across backends.
"""

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import _kernels
from .annotations import Annotation, BBox
from .errors import DataError


@dataclass(frozen=True)
class DegradeParams:
    gaussian_sigma: float = 0.63
    gaussian_window: int = 9
    motion_kernel: int = 3
    motion_angle_deg: float = 45.0
    decimation_factor: int = 2

    def __post_init__(self):
        if not self.gaussian_sigma > 0:
            raise DataError("gaussian_sigma must be > 0")
        for name, value in (
            ("gaussian_window", self.gaussian_window),
            ("motion_kernel", self.motion_kernel),
        ):
            if value < 1 or value % 2 == 0:
                raise DataError(f"{name} must be an odd integer >= 1, got {value}")
        if self.decimation_factor < 1:
            raise DataError("decimation_factor must be >= 1")


def check_raster(img: np.ndarray) -> np.ndarray:
    if not (
        isinstance(img, np.ndarray)
        and img.ndim == 3
        and img.shape[2] == 3
        and img.dtype == np.uint8
        and img.shape[0] >= 1
        and img.shape[1] >= 1
    ):
        raise DataError("raster must be an (H, W, 3) uint8 array")
    return img


def gaussian_kernel(sigma: float, window: int) -> np.ndarray:
    """Normalized 2D gaussian weights on a window x window grid."""
    if window < 1 or window % 2 == 0:
        raise DataError(f"window must be odd, got {window}")
    if not sigma > 0:
        raise DataError("sigma must be > 0")
    half = window // 2
    d = np.arange(-half, half + 1, dtype=np.float64)
    sq = d[:, None] ** 2 + d[None, :] ** 2
    kernel = np.exp(-sq / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def motion_blur_kernel(size: int, angle_deg: float) -> np.ndarray:
    """Equal weights on the line segment through the kernel center.

    The angle is measured counter-clockwise from the +x axis (y up); the
    segment is rasterized one cell per step along its dominant axis,
    symmetrically about the center.
    """
    if size < 1 or size % 2 == 0:
        raise DataError(f"size must be odd, got {size}")
    half = size // 2
    kernel = np.zeros((size, size), dtype=np.float64)
    theta = math.radians(angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) >= abs(s):
        for dx in range(-half, half + 1):
            dy = _round_half_away(dx * s / c) if c != 0.0 else 0
            if abs(dy) <= half:
                kernel[half - dy, half + dx] = 1.0
    else:
        for dy in range(-half, half + 1):
            dx = _round_half_away(dy * c / s)
            if abs(dx) <= half:
                kernel[half - dy, half + dx] = 1.0
    return kernel / kernel.sum()


def convolve(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Per-channel 2D convolution with replicate padding.

    Accumulates in float64 and rounds half away from zero back to 8 bit.
    """
    check_raster(img)
    kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise DataError("kernel must be odd-sized")
    return _kernels.convolve2d_u8(img, np.asarray(kernel, dtype=np.float64))


def scale_boxes(annotation: Annotation, factor: float) -> Annotation:
    if not factor > 0:
        raise DataError("scale factor must be > 0")
    return Annotation(
        image_id=annotation.image_id,
        boxes=[
            BBox(
                b.x_min * factor, b.y_min * factor, b.x_max * factor, b.y_max * factor
            )
            for b in annotation.boxes
        ],
    )


def degrade(
    img: np.ndarray, boxes: Annotation, params: DegradeParams = DegradeParams()
):
    """High-to-low-resolution transform: gaussian blur, motion blur, then
    decimation by the integer factor. Returns the transformed raster and the
    annotation scaled into its coordinates; the ground sampling distance
    grows by the factor (callers update metadata)."""
    check_raster(img)
    f = params.decimation_factor
    h, w = img.shape[:2]
    if h < f or w < f:
        raise DataError(f"image {w}x{h} smaller than decimation factor {f}")
    blurred = convolve(
        img, gaussian_kernel(params.gaussian_sigma, params.gaussian_window)
    )
    blurred = convolve(
        blurred, motion_blur_kernel(params.motion_kernel, params.motion_angle_deg)
    )
    out_h, out_w = h // f, w // f
    decimated = np.ascontiguousarray(blurred[: out_h * f : f, : out_w * f : f])
    return decimated, scale_boxes(boxes, 1.0 / f)


def bicubic_resize(img: np.ndarray, factor: float) -> np.ndarray:
    """Cubic-convolution resize; output dims are round(input dims * factor)."""
    check_raster(img)
    if not factor > 0:
        raise DataError("factor must be > 0")
    h, w = img.shape[:2]
    out_h = int(math.floor(h * factor + 0.5))
    out_w = int(math.floor(w * factor + 0.5))
    if out_h < 1 or out_w < 1:
        raise DataError(f"factor {factor} degenerates {w}x{h} to {out_w}x{out_h}")
    return _kernels.resize_cubic_u8(img, out_h, out_w)


def image_variance(img: np.ndarray) -> np.ndarray:
    """Per-channel population variance of the 8-bit intensities."""
    check_raster(img)
    flat = img.reshape(-1, 3).astype(np.float64)
    return flat.var(axis=0)


def read_raster(path) -> np.ndarray:
    """Read a PNG or JPEG file as an RGB raster."""
    with Image.open(path) as handle:
        img = np.asarray(handle.convert("RGB"), dtype=np.uint8)
    return check_raster(img)


def write_raster(path, img: np.ndarray) -> None:
    """Write a raster as PNG (lossless, so transform outputs are stable)."""
    check_raster(img)
    if not str(path).lower().endswith(".png"):
        raise DataError(f"rasters are written as PNG only, got {path}")
    Image.fromarray(img, mode="RGB").save(path, format="PNG")
