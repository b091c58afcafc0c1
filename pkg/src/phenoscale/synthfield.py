"""Deterministic synthetic maize-microplot generator.

Fields are rendered as textured soil plus row-grid plants, each plant a
rosette of 3 to 5 elongated green leaves around a small core, with optional
ground shadows. Ground truth is the tight box around each plant's own
rendered pixels. All randomness comes from a counter-based generator keyed
by the seed, so output is identical across runs, platforms and worker
counts. Plant pixel size scales with the ground sampling distance relative
to the 0.3 cm/px reference.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .annotations import Annotation, BBox, DatasetDescriptor, ImageMeta, Role
from .errors import DataError

REFERENCE_GSD_CM = 0.3
SITE_NAMES = ("east_field", "west_field")

_SOIL_BASE = np.array([130.0, 98.0, 80.0])
_SHADOW_FACTOR = 0.55


@dataclass(frozen=True)
class SynthFieldParams:
    rows: int = 4
    plants_per_row: int = 6
    row_spacing_cm: float = 40.0
    plant_spacing_cm: float = 30.0
    gsd_cm: float = 0.3
    mean_plant_diameter_px: float = 40.0
    jitter_frac: float = 0.15
    soil_texture_scale: float = 6.0
    shadow: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.plants_per_row < 1:
            raise DataError("rows and plants_per_row must be >= 1")
        if min(self.row_spacing_cm, self.plant_spacing_cm, self.gsd_cm) <= 0:
            raise DataError("spacings and gsd_cm must be > 0")
        if self.mean_plant_diameter_px <= 0 or self.soil_texture_scale <= 0:
            raise DataError("plant diameter and soil texture scale must be > 0")
        if not 0.0 <= self.jitter_frac < 0.5:
            raise DataError("jitter_frac must be in [0, 0.5)")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _value_noise(rng, height, width, scale):
    """Band-limited soil texture: bilinear interpolation of a coarse grid."""
    gh = int(math.ceil(height / scale)) + 2
    gw = int(math.ceil(width / scale)) + 2
    grid = rng.uniform(-1.0, 1.0, size=(gh, gw))
    ys = np.arange(height) / scale
    xs = np.arange(width) / scale
    y0 = np.minimum(ys.astype(np.int64), gh - 2)
    x0 = np.minimum(xs.astype(np.int64), gw - 2)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g00 = grid[np.ix_(y0, x0)]
    g01 = grid[np.ix_(y0, x0 + 1)]
    g10 = grid[np.ix_(y0 + 1, x0)]
    g11 = grid[np.ix_(y0 + 1, x0 + 1)]
    return (1 - fy) * ((1 - fx) * g00 + fx * g01) + fy * ((1 - fx) * g10 + fx * g11)


def _ellipse_mask(ys, xs, center_y, center_x, axis_u, axis_v, semi_u, semi_v):
    dy = ys - center_y
    dx = xs - center_x
    u = dx * axis_u[0] + dy * axis_u[1]
    v = dx * axis_v[0] + dy * axis_v[1]
    return (u / semi_u) ** 2 + (v / semi_v) ** 2 <= 1.0


def generate_field(params: SynthFieldParams):
    """Render one microplot. Returns (raster, annotation, image_meta)."""
    px_per_cm = 1.0 / params.gsd_cm
    row_px = params.row_spacing_cm * px_per_cm
    plant_px = params.plant_spacing_cm * px_per_cm
    height = int(round(params.rows * row_px))
    width = int(round(params.plants_per_row * plant_px))
    if max(height, width) > 8192:
        raise DataError(f"field {width}x{height} exceeds the 8192 px limit")
    diameter = params.mean_plant_diameter_px * (REFERENCE_GSD_CM / params.gsd_cm)

    rng = _rng(params.seed)

    # soil: tinted value noise plus per-pixel grain
    noise = _value_noise(rng, height, width, params.soil_texture_scale)
    canvas = _SOIL_BASE[None, None, :] * (1.0 + 0.18 * noise[:, :, None])
    canvas += rng.normal(0.0, 4.0, size=(height, width, 3))

    # plant centers on the row grid, jittered
    centers = []
    for r in range(params.rows):
        for c in range(params.plants_per_row):
            jy = rng.uniform(-params.jitter_frac, params.jitter_frac) * row_px
            jx = rng.uniform(-params.jitter_frac, params.jitter_frac) * plant_px
            cy = (r + 0.5) * row_px + jy
            cx = (c + 0.5) * plant_px + jx
            if not (0.0 <= cy < height and 0.0 <= cx < width):
                raise DataError(
                    f"plant center ({cx:.1f}, {cy:.1f}) falls outside the "
                    f"{width}x{height} canvas"
                )
            centers.append((cy, cx))

    margin = int(math.ceil(0.9 * diameter))

    def window(cy, cx):
        y0 = max(0, int(math.floor(cy)) - margin)
        y1 = min(height, int(math.ceil(cy)) + margin + 1)
        x0 = max(0, int(math.floor(cx)) - margin)
        x1 = min(width, int(math.ceil(cx)) + margin + 1)
        ys, xs = np.meshgrid(
            np.arange(y0, y1, dtype=np.float64) + 0.5,
            np.arange(x0, x1, dtype=np.float64) + 0.5,
            indexing="ij",
        )
        return y0, x0, ys, xs

    if params.shadow:
        for cy, cx in centers:
            y0, x0, ys, xs = window(cy, cx)
            mask = _ellipse_mask(
                ys,
                xs,
                cy + 0.30 * diameter,
                cx + 0.35 * diameter,
                (1.0, 0.0),
                (0.0, 1.0),
                0.45 * diameter,
                0.30 * diameter,
            )
            region = canvas[y0 : y0 + ys.shape[0], x0 : x0 + ys.shape[1]]
            region[mask] *= _SHADOW_FACTOR

    boxes = []
    for cy, cx in centers:
        y0, x0, ys, xs = window(cy, cx)
        core = 0.10 * diameter
        plant_mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= core * core
        n_leaves = int(rng.integers(3, 6))
        base_angle = rng.uniform(0.0, 2.0 * math.pi)
        region = canvas[y0 : y0 + ys.shape[0], x0 : x0 + ys.shape[1]]
        for leaf in range(n_leaves):
            angle = base_angle + 2.0 * math.pi * leaf / n_leaves
            angle += rng.uniform(-0.2, 0.2)
            semi_u = diameter * rng.uniform(0.30, 0.38)
            semi_v = diameter * rng.uniform(0.20, 0.26)
            color = np.array(
                [
                    rng.uniform(48.0, 58.0),
                    rng.uniform(165.0, 175.0),
                    rng.uniform(38.0, 48.0),
                ]
            )
            # image y grows downward, so the y component flips sign
            direction = (math.cos(angle), -math.sin(angle))
            normal = (-direction[1], direction[0])
            leaf_cy = cy + 0.35 * semi_u * direction[1]
            leaf_cx = cx + 0.35 * semi_u * direction[0]
            mask = _ellipse_mask(
                ys, xs, leaf_cy, leaf_cx, direction, normal, semi_u, semi_v
            )
            region[mask] = color
            plant_mask |= mask
        if plant_mask.any():
            rows_hit = np.flatnonzero(plant_mask.any(axis=1))
            cols_hit = np.flatnonzero(plant_mask.any(axis=0))
            # core disc color, drawn after leaves so the center stays green
            core_mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= core * core
            region[core_mask] = (55.0, 170.0, 45.0)
            boxes.append(
                BBox(
                    x_min=float(x0 + cols_hit[0]),
                    y_min=float(y0 + rows_hit[0]),
                    x_max=float(x0 + cols_hit[-1] + 1),
                    y_max=float(y0 + rows_hit[-1] + 1),
                )
            )

    raster = np.clip(np.floor(canvas + 0.5), 0.0, 255.0).astype(np.uint8)
    annotation = Annotation(image_id=f"plot{params.seed:08d}", boxes=boxes)
    meta = ImageMeta(
        image_id=annotation.image_id,
        path=f"{annotation.image_id}.png",
        width=width,
        height=height,
        gsd_cm=params.gsd_cm,
        site=SITE_NAMES[0],
    )
    return raster, annotation, meta


def iter_fields(params: SynthFieldParams, n_plots: int, role: Role):
    """Yield (raster, annotation, meta) for each plot of a synthetic dataset.

    Plot i uses seed params.seed + i; sites alternate between two synthetic
    names so per-site reporting has something to break down.
    """
    if n_plots < 1:
        raise DataError("n_plots must be >= 1")
    for index in range(n_plots):
        plot_params = dataclasses.replace(params, seed=params.seed + index)
        raster, annotation, meta = generate_field(plot_params)
        image_id = f"{role.value}_plot{index:03d}"
        yield (
            raster,
            Annotation(image_id=image_id, boxes=annotation.boxes),
            ImageMeta(
                image_id=image_id,
                path=f"images/{image_id}.png",
                width=meta.width,
                height=meta.height,
                gsd_cm=meta.gsd_cm,
                site=SITE_NAMES[index % 2],
            ),
        )


def generate_dataset(
    params: SynthFieldParams, n_plots: int, role: Role
) -> DatasetDescriptor:
    """n_plots independent fields with per-plot seeds (seed + plot index)."""
    images = []
    annotations = {}
    for _, annotation, meta in iter_fields(params, n_plots, role):
        images.append(meta)
        annotations[meta.image_id] = annotation
    return DatasetDescriptor(
        name=f"synth_{role.value}",
        role=role,
        images=images,
        annotations=annotations,
    )
