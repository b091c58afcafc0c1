"""Classical baseline plant detector: binarize greenness, group, size-filter.

The excess-green index (2G - R - B) is integer-exact on 8-bit input, so the
Otsu threshold search runs over the full 1021-bin histogram of possible
values. The size filter is the point of the module: a configuration tuned to
one resolution collapses when plant pixel areas shrink by the square of the
resolution ratio.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .annotations import Annotation, BBox, Prediction
from .errors import DataError
from .resample import check_raster

EXG_MIN = -510
EXG_MAX = 510


@dataclass(frozen=True)
class DetectorConfig:
    min_area_px: float
    max_area_px: float
    exg_threshold: float | None = None  # None selects Otsu
    morph_open_radius: int = 1

    def __post_init__(self):
        if not 0 < self.min_area_px < self.max_area_px:
            raise DataError("need 0 < min_area_px < max_area_px")
        if self.morph_open_radius < 0:
            raise DataError("morph_open_radius must be >= 0")


def excess_green(img: np.ndarray) -> np.ndarray:
    """Per-pixel 2G - R - B as int16, range [-510, 510]."""
    check_raster(img)
    wide = img.astype(np.int16)
    return 2 * wide[:, :, 1] - wide[:, :, 0] - wide[:, :, 2]


def otsu_threshold(exg: np.ndarray) -> int:
    """Threshold maximizing between-class variance of the ExG histogram.

    Returns the integer t such that the classes are {v <= t} and {v > t};
    ties resolve to the smallest t.
    """
    flat = exg.ravel().astype(np.int64)
    hist = np.bincount(flat - EXG_MIN, minlength=EXG_MAX - EXG_MIN + 1).astype(
        np.float64
    )
    values = np.arange(EXG_MIN, EXG_MAX + 1, dtype=np.float64)
    total = hist.sum()
    w0 = np.cumsum(hist)
    sum0 = np.cumsum(hist * values)
    w1 = total - w0
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        raise DataError("degenerate histogram: all values identical")
    mu0 = np.where(w0 > 0, sum0 / np.maximum(w0, 1), 0.0)
    mu1 = np.where(w1 > 0, (sum0[-1] - sum0) / np.maximum(w1, 1), 0.0)
    between = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    return int(np.argmax(between)) + EXG_MIN


def binarize(exg: np.ndarray, threshold: float | None = None) -> np.ndarray:
    """True where ExG exceeds the threshold; Otsu-selected when None."""
    if threshold is None:
        threshold = otsu_threshold(exg)
    return exg > threshold


def connected_components(mask: np.ndarray) -> list:
    """8-connected components as (pixel_count, BBox), ordered by (y_min, x_min)."""
    rows = _kernels.label_components(np.asarray(mask, dtype=bool))
    return [
        (
            int(count),
            BBox(x_min=float(x0), y_min=float(y0), x_max=float(x1), y_max=float(y1)),
        )
        for count, y0, x0, y1, x1 in rows
    ]


def detect_plants(img: np.ndarray, cfg: DetectorConfig, image_id: str = "") -> list:
    """Run the full baseline pipeline on one image.

    Scores are greenness normalized against the image's ExG range: the mean
    ExG inside the predicted box, rescaled so the image minimum maps to 0
    and the maximum to 1.
    """
    exg = excess_green(img)
    mask = binarize(exg, cfg.exg_threshold)
    if cfg.morph_open_radius > 0:
        mask = _kernels.binary_dilate(
            _kernels.binary_erode(mask, cfg.morph_open_radius), cfg.morph_open_radius
        )
    components = connected_components(mask)

    lo = int(exg.min())
    span = max(int(exg.max()) - lo, 1)
    integral = np.zeros((exg.shape[0] + 1, exg.shape[1] + 1), dtype=np.float64)
    integral[1:, 1:] = np.cumsum(np.cumsum(exg, axis=0, dtype=np.float64), axis=1)

    predictions = []
    for pixel_count, box in components:
        if not cfg.min_area_px <= pixel_count <= cfg.max_area_px:
            continue
        y0, x0 = int(box.y_min), int(box.x_min)
        y1, x1 = int(box.y_max), int(box.x_max)
        total = (
            integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]
        )
        mean = total / ((y1 - y0) * (x1 - x0))
        score = min(max((mean - lo) / span, 0.0), 1.0)
        predictions.append(Prediction(image_id=image_id, box=box, score=score))
    return predictions


def tile_patches(
    img: np.ndarray, annotation: Annotation, patch_size: int, n: int, seed: int
) -> list:
    """Extract n random square patches with their clipped annotations.

    Offsets are uniform over valid top-left corners, deterministic from the
    seed. A ground-truth box survives clipping only if at least half of its
    area lies inside the patch; survivors are translated to patch
    coordinates.
    """
    check_raster(img)
    height, width = img.shape[:2]
    if height < patch_size or width < patch_size:
        raise DataError(
            f"image {width}x{height} smaller than patch size {patch_size}"
        )
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    xs = rng.integers(0, width - patch_size + 1, size=n)
    ys = rng.integers(0, height - patch_size + 1, size=n)

    patches = []
    for index in range(n):
        x_off, y_off = int(xs[index]), int(ys[index])
        view = img[y_off : y_off + patch_size, x_off : x_off + patch_size].copy()
        kept = []
        for box in annotation.boxes:
            cx0 = max(box.x_min, x_off)
            cy0 = max(box.y_min, y_off)
            cx1 = min(box.x_max, x_off + patch_size)
            cy1 = min(box.y_max, y_off + patch_size)
            if cx0 >= cx1 or cy0 >= cy1:
                continue
            inside = (cx1 - cx0) * (cy1 - cy0)
            full = (box.x_max - box.x_min) * (box.y_max - box.y_min)
            if inside >= 0.5 * full:
                kept.append(
                    BBox(cx0 - x_off, cy0 - y_off, cx1 - x_off, cy1 - y_off)
                )
        patches.append(
            (
                view,
                Annotation(
                    image_id=f"{annotation.image_id}_p{index:02d}", boxes=kept
                ),
            )
        )
    return patches
