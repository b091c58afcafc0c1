"""Experiment orchestration: dataset I/O, resolution variants, report matrix.

A run applies one detector configuration (or one external prediction file
per dataset) to a list of validation roles; every (run label, role) cell is
scored independently and the full matrix is written as CSV plus per-cell
curve and over-detection profiles. Cells may be evaluated in parallel but
results are assembled in declaration order, so reports are byte-identical
for any worker count.
"""

import dataclasses
import hashlib
import json
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .annotations import (
    Annotation,
    DatasetDescriptor,
    ImageMeta,
    Role,
    parse_manifest,
    parse_predictions,
    serialize_annotation,
    serialize_manifest,
)
from .detector import DetectorConfig, detect_plants
from .errors import ConfigError, DataError, PhenoscaleError
from .metrics import EvalConfig, evaluate, overdetection_profile, pr_curve_csv
from .resample import (
    DegradeParams,
    bicubic_resize,
    degrade,
    image_variance,
    read_raster,
    scale_boxes,
    write_raster,
)

DEFAULT_AREA_BINS = [0.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0, 16000.0]


@dataclass(frozen=True)
class TransformSpec:
    source: Role
    target: Role
    kind: str  # degrade | bicubic | external
    degrade_params: DegradeParams | None = None
    factor: float = 2.0
    directory: str | None = None

    def gsd_ratio(self) -> float:
        """variant gsd / source gsd implied by this transform."""
        if self.kind == "degrade":
            return float(self.degrade_params.decimation_factor)
        return 1.0 / self.factor


@dataclass(frozen=True)
class DetectorRun:
    label: str
    roles: tuple
    detector: DetectorConfig | None = None
    predictions: dict | None = None  # role -> predictions path

    def __post_init__(self):
        if (self.detector is None) == (self.predictions is None):
            raise ConfigError(
                f"run {self.label!r}: give exactly one of detector/predictions"
            )


@dataclass
class ExperimentConfig:
    name: str
    datasets: list  # (manifest path, Role)
    transforms: list = field(default_factory=list)
    detector_runs: list = field(default_factory=list)
    eval: EvalConfig = EvalConfig()
    output_dir: Path = Path("out")
    area_bins: list = field(default_factory=lambda: list(DEFAULT_AREA_BINS))
    workers: int = 1
    raw_bytes: bytes = b""

    def __post_init__(self):
        targets = [t.target for t in self.transforms]
        if len(set(targets)) != len(targets):
            raise ConfigError("transform target roles must be unique")
        declared = {role for _, role in self.datasets} | set(targets)
        for run in self.detector_runs:
            for role in run.roles:
                if role not in declared:
                    raise ConfigError(
                        f"run {run.label!r} references undeclared role {role.value}"
                    )


@dataclass
class ExperimentReport:
    cells: dict  # (label, role_value) -> MetricsReport
    provenance: dict


def _detector_config_from_dict(doc: dict) -> DetectorConfig:
    try:
        return DetectorConfig(
            min_area_px=float(doc["min_area_px"]),
            max_area_px=float(doc["max_area_px"]),
            exg_threshold=(
                None if doc.get("exg_threshold") is None else float(doc["exg_threshold"])
            ),
            morph_open_radius=int(doc.get("morph_open_radius", 1)),
        )
    except KeyError as exc:
        raise ConfigError(f"detector config missing key {exc}") from exc


def _degrade_params_from_dict(doc: dict) -> DegradeParams:
    defaults = DegradeParams()
    return DegradeParams(
        gaussian_sigma=float(doc.get("gaussian_sigma", defaults.gaussian_sigma)),
        gaussian_window=int(doc.get("gaussian_window", defaults.gaussian_window)),
        motion_kernel=int(doc.get("motion_kernel", defaults.motion_kernel)),
        motion_angle_deg=float(doc.get("motion_angle_deg", defaults.motion_angle_deg)),
        decimation_factor=int(doc.get("decimation_factor", defaults.decimation_factor)),
    )


def load_experiment_config(path) -> ExperimentConfig:
    """Read an experiment config JSON; relative paths resolve against it."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    base = path.parent

    datasets = []
    for entry in doc.get("datasets", []):
        datasets.append(
            (base / entry["manifest"], Role.from_string(str(entry["role"])))
        )

    transforms = []
    for entry in doc.get("transforms", []):
        kind = entry.get("kind")
        if kind not in ("degrade", "bicubic", "external"):
            raise ConfigError(f"unknown transform kind {kind!r}")
        transforms.append(
            TransformSpec(
                source=Role.from_string(str(entry["source"])),
                target=Role.from_string(str(entry["target"])),
                kind=kind,
                degrade_params=(
                    _degrade_params_from_dict(entry.get("params", {}))
                    if kind == "degrade"
                    else None
                ),
                factor=float(entry.get("factor", 2.0)),
                directory=(
                    str(base / entry["dir"]) if kind == "external" else None
                ),
            )
        )

    runs = []
    for entry in doc.get("detector_runs", []):
        preds = entry.get("predictions")
        roles = entry.get("eval_roles")
        if roles is None and preds is not None:
            roles = sorted(preds)
        if roles is None:
            raise ConfigError(f"run {entry.get('label')!r} lists no eval_roles")
        runs.append(
            DetectorRun(
                label=str(entry["label"]),
                roles=tuple(Role.from_string(str(r)) for r in roles),
                detector=(
                    _detector_config_from_dict(entry["detector"])
                    if "detector" in entry
                    else None
                ),
                predictions=(
                    {
                        Role.from_string(str(r)): base / p
                        for r, p in preds.items()
                    }
                    if preds is not None
                    else None
                ),
            )
        )

    eval_doc = doc.get("eval", {})
    defaults = EvalConfig()
    eval_cfg = EvalConfig(
        iou_threshold=float(eval_doc.get("iou_threshold", defaults.iou_threshold)),
        confidence_threshold=float(
            eval_doc.get("confidence_threshold", defaults.confidence_threshold)
        ),
        recall_points=int(eval_doc.get("recall_points", defaults.recall_points)),
    )

    return ExperimentConfig(
        name=str(doc.get("name", path.stem)),
        datasets=datasets,
        transforms=transforms,
        detector_runs=runs,
        eval=eval_cfg,
        output_dir=base / doc.get("output_dir", "out"),
        area_bins=[float(x) for x in doc.get("area_bins", DEFAULT_AREA_BINS)],
        raw_bytes=raw,
    )


def load_dataset(manifest_path, role: Role | None = None) -> DatasetDescriptor:
    """Read a manifest and its annotation XMLs; image paths become absolute."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent

    def loader(rel_path: str) -> bytes:
        return (base / rel_path).read_bytes()

    dataset = parse_manifest(manifest_path.read_bytes(), annotation_loader=loader)
    images = [
        dataclasses.replace(meta, path=str((base / meta.path).resolve()))
        for meta in dataset.images
    ]
    return DatasetDescriptor(
        name=dataset.name,
        role=role if role is not None else dataset.role,
        images=images,
        annotations=dataset.annotations,
    )


def write_dataset(out_dir, dataset: DatasetDescriptor, rasters) -> Path:
    """Materialize a dataset: images/*.png, annotations/*.xml, manifest.json.

    ``rasters`` maps image_id to the raster to write (or to an existing
    source file path to copy). Returns the manifest path.
    """
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "annotations").mkdir(parents=True, exist_ok=True)

    images = []
    annotation_paths = {}
    for meta in dataset.images:
        rel_img = f"images/{meta.image_id}.png"
        source = rasters[meta.image_id]
        if isinstance(source, (str, Path)):
            shutil.copyfile(source, out_dir / rel_img)
        else:
            write_raster(out_dir / rel_img, source)
        images.append(dataclasses.replace(meta, path=rel_img))
        annotation = dataset.annotations.get(meta.image_id)
        if annotation is not None:
            rel_xml = f"annotations/{meta.image_id}.xml"
            (out_dir / rel_xml).write_bytes(
                serialize_annotation(annotation, width=meta.width, height=meta.height)
            )
            annotation_paths[meta.image_id] = rel_xml

    on_disk = DatasetDescriptor(
        name=dataset.name,
        role=dataset.role,
        images=images,
        annotations=dataset.annotations,
    )
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_bytes(serialize_manifest(on_disk, annotation_paths))
    return manifest_path


def _apply_transform(spec: TransformSpec, source: DatasetDescriptor, out_dir: Path):
    """Materialize one variant dataset and return its loaded descriptor."""
    images = []
    annotations = {}
    rasters = {}
    for meta in source.images:
        annotation = source.annotations.get(
            meta.image_id, Annotation(image_id=meta.image_id, boxes=[])
        )
        if spec.kind == "degrade":
            raster, scaled = degrade(
                read_raster(meta.path), annotation, spec.degrade_params
            )
            new_gsd = meta.gsd_cm * spec.degrade_params.decimation_factor
        elif spec.kind == "bicubic":
            raster = bicubic_resize(read_raster(meta.path), spec.factor)
            scaled = scale_boxes(annotation, spec.factor)
            new_gsd = meta.gsd_cm / spec.factor
        else:  # external
            candidate = Path(spec.directory) / f"{meta.image_id}.png"
            if not candidate.exists():
                raise DataError(
                    f"external transform {spec.target.value}: no image for "
                    f"{meta.image_id!r} in {spec.directory}"
                )
            raster = read_raster(candidate)
            scaled = scale_boxes(annotation, spec.factor)
            new_gsd = meta.gsd_cm / spec.factor
        rasters[meta.image_id] = raster
        images.append(
            ImageMeta(
                image_id=meta.image_id,
                path=f"images/{meta.image_id}.png",
                width=raster.shape[1],
                height=raster.shape[0],
                gsd_cm=new_gsd,
                site=meta.site,
            )
        )
        annotations[meta.image_id] = scaled

    variant = DatasetDescriptor(
        name=f"{source.name}_{spec.target.value}",
        role=spec.target,
        images=images,
        annotations=annotations,
    )
    manifest = write_dataset(out_dir, variant, rasters)
    return load_dataset(manifest, role=spec.target)


def build_variants(cfg: ExperimentConfig) -> dict:
    """Load declared datasets and materialize every transform target.

    Returns role -> DatasetDescriptor covering declared and derived roles.
    """
    datasets = {}
    for manifest_path, role in cfg.datasets:
        datasets[role] = load_dataset(manifest_path, role=role)
    for spec in cfg.transforms:
        if spec.source not in datasets:
            raise ConfigError(
                f"transform {spec.target.value} needs undeclared source "
                f"{spec.source.value}"
            )
        out_dir = Path(cfg.output_dir) / "datasets" / spec.target.value
        datasets[spec.target] = _apply_transform(spec, datasets[spec.source], out_dir)
    return datasets


def _cell_predictions(run: DetectorRun, role: Role, dataset: DatasetDescriptor):
    if run.detector is not None:
        preds = []
        for meta in dataset.images:
            preds.extend(
                detect_plants(
                    read_raster(meta.path), run.detector, image_id=meta.image_id
                )
            )
        return preds
    if role not in run.predictions:
        raise ConfigError(
            f"run {run.label!r} has no predictions file for role {role.value}"
        )
    return parse_predictions(Path(run.predictions[role]).read_bytes())


def _overdetection_csv(dataset, preds, eval_cfg, area_bins) -> str:
    kept = [p for p in preds if p.score > eval_cfg.confidence_threshold]
    by_image = {}
    for p in kept:
        by_image.setdefault(p.image_id, []).append(p)
    sums = None
    for meta in dataset.images:
        annotation = dataset.annotations.get(meta.image_id)
        boxes = annotation.boxes if annotation else []
        bins = overdetection_profile(
            boxes, by_image.get(meta.image_id, []), area_bins
        )
        if sums is None:
            sums = [[b.area_lo, b.area_hi, 0, 0.0] for b in bins]
        for row, b in zip(sums, bins):
            row[2] += b.n_gt
            row[3] += b.mean_intersecting * b.n_gt
    lines = ["area_lo,area_hi,n_gt,mean_intersecting"]
    for lo, hi, n_gt, total in sums:
        mean = total / n_gt if n_gt else 0.0
        lines.append(f"{lo:.9g},{hi:.9g},{n_gt},{mean:.6f}")
    return "\n".join(lines) + "\n"


def _cell_name(run: DetectorRun, role: Role) -> str:
    return f"{run.label}__{role.value}"


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Execute the full matrix and write report CSVs under output_dir."""
    datasets = build_variants(cfg)
    cells_plan = [(run, role) for run in cfg.detector_runs for role in run.roles]

    def run_cell(item):
        run, role = item
        dataset = datasets[role]
        try:
            preds = _cell_predictions(run, role, dataset)
            report = evaluate(dataset, preds, cfg.eval)
        except PhenoscaleError as exc:
            # fail fast, naming the cell; no partial silent reports
            raise type(exc)(f"cell {_cell_name(run, role)}: {exc}") from exc
        except OSError as exc:
            raise DataError(f"cell {_cell_name(run, role)}: {exc}") from exc
        return report, preds

    workers = max(1, cfg.workers)
    if workers == 1:
        results = [run_cell(item) for item in cells_plan]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells_plan))

    out_dir = Path(cfg.output_dir)
    (out_dir / "curves").mkdir(parents=True, exist_ok=True)
    (out_dir / "overdetection").mkdir(parents=True, exist_ok=True)

    cells = {}
    report_lines = [
        "run_label,dataset_role,n_images,n_gt,ap,accuracy,rrmse,tp,fp,fn"
    ]
    for (run, role), (report, preds) in zip(cells_plan, results):
        dataset = datasets[role]
        cells[(run.label, role.value)] = report
        n_gt = sum(len(a.boxes) for a in dataset.annotations.values())
        t = report.totals
        report_lines.append(
            f"{run.label},{role.value},{len(dataset.images)},{n_gt},"
            f"{report.ap:.6f},{report.accuracy:.6f},{report.rrmse:.6f},"
            f"{t.tp},{t.fp},{t.fn}"
        )
        name = _cell_name(run, role)
        (out_dir / "curves" / f"{name}.csv").write_text(pr_curve_csv(report.curve))
        (out_dir / "overdetection" / f"{name}.csv").write_text(
            _overdetection_csv(dataset, preds, cfg.eval, cfg.area_bins)
        )

    (out_dir / "report.csv").write_text("\n".join(report_lines) + "\n")

    provenance = {
        "experiment": cfg.name,
        "config_sha256": hashlib.sha256(cfg.raw_bytes).hexdigest(),
        "tool_version": __version__,
        "image_counts": {
            role.value: len(ds.images) for role, ds in sorted(
                datasets.items(), key=lambda kv: kv[0].value
            )
        },
        "annotation_transfer": "labels always derived by scaling source annotations",
    }
    (out_dir / "provenance.json").write_text(
        json.dumps(provenance, indent=2, sort_keys=True) + "\n"
    )
    return ExperimentReport(cells=cells, provenance=provenance)


@dataclass(frozen=True)
class RankedVariance:
    name: str
    mean_variance: tuple  # per channel
    distance: float


def dataset_mean_variance(dataset: DatasetDescriptor) -> np.ndarray:
    """Mean per-channel image variance over the dataset's images."""
    values = [image_variance(read_raster(m.path)) for m in dataset.images]
    return np.mean(values, axis=0)


def compare_variance(native: DatasetDescriptor, candidates: list) -> list:
    """Rank candidate datasets by closeness of mean variance to the native.

    Every candidate must cover exactly the native image_ids. Distance is the
    mean absolute per-channel difference of the dataset-level variances.
    """
    native_ids = {m.image_id for m in native.images}
    for candidate in candidates:
        ids = {m.image_id for m in candidate.images}
        if ids != native_ids:
            raise DataError(
                f"candidate {candidate.name!r} image_ids do not match native"
            )
    reference = dataset_mean_variance(native)
    ranked = []
    for candidate in candidates:
        mean = dataset_mean_variance(candidate)
        ranked.append(
            RankedVariance(
                name=candidate.name,
                mean_variance=tuple(float(v) for v in mean),
                distance=float(np.mean(np.abs(mean - reference))),
            )
        )
    ranked.sort(key=lambda r: (r.distance, r.name))
    return ranked
