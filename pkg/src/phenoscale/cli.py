"""Command-line interface.

Subcommands: synth, transform, detect, patches, evaluate, report, variance.
Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .annotations import (
    DatasetDescriptor,
    Role,
    parse_predictions,
    serialize_annotation,
    serialize_predictions,
)
from .detector import DetectorConfig, detect_plants, tile_patches
from .errors import ConfigError, DataError
from .harness import (
    TransformSpec,
    _apply_transform,
    _detector_config_from_dict,
    compare_variance,
    load_dataset,
    load_experiment_config,
    run_experiment,
    write_dataset,
)
from .metrics import EvalConfig, evaluate, pr_curve_csv, report_csv_row
from .resample import DegradeParams, read_raster, write_raster
from .synthfield import SynthFieldParams, iter_fields


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2
    # for data errors, so remap to 1 via UsageError.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _synth_params_from_args(args):
    overrides = {}
    if args.config:
        overrides.update(json.loads(Path(args.config).read_text()))
    for key in (
        "rows",
        "plants_per_row",
        "row_spacing_cm",
        "plant_spacing_cm",
        "gsd_cm",
        "mean_plant_diameter_px",
        "jitter_frac",
    ):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    overrides["seed"] = args.seed
    n_plots = int(overrides.pop("n_plots", 1))
    role = str(overrides.pop("role", "V_h"))
    if args.plots is not None:
        n_plots = args.plots
    if args.role is not None:
        role = args.role
    known = set(SynthFieldParams.__dataclass_fields__)
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown synth parameters: {sorted(unknown)}")
    return SynthFieldParams(**overrides), n_plots, Role.from_string(role)


def _cmd_synth(args):
    params, n_plots, role = _synth_params_from_args(args)
    out = Path(args.out)
    images = []
    annotations = {}
    rasters = {}
    for raster, annotation, meta in iter_fields(params, n_plots, role):
        images.append(meta)
        annotations[meta.image_id] = annotation
        rasters[meta.image_id] = raster
    dataset = DatasetDescriptor(
        name=f"synth_{role.value}", role=role, images=images, annotations=annotations
    )
    manifest = write_dataset(out, dataset, rasters)
    print(f"wrote {n_plots} plots to {manifest}")
    return 0


def _cmd_transform(args):
    dataset = load_dataset(args.manifest)
    if args.mode == "degrade":
        params = DegradeParams(
            gaussian_sigma=args.sigma,
            gaussian_window=args.window,
            motion_kernel=args.motion_kernel,
            motion_angle_deg=args.motion_angle,
            decimation_factor=int(args.factor),
        )
        spec = TransformSpec(
            source=dataset.role,
            target=Role.from_string(args.target_role),
            kind="degrade",
            degrade_params=params,
        )
    elif args.mode == "bicubic":
        spec = TransformSpec(
            source=dataset.role,
            target=Role.from_string(args.target_role),
            kind="bicubic",
            factor=args.factor,
        )
    else:
        if not args.external_dir:
            raise ConfigError("--external-dir is required for mode external")
        spec = TransformSpec(
            source=dataset.role,
            target=Role.from_string(args.target_role),
            kind="external",
            factor=args.factor,
            directory=args.external_dir,
        )
    variant = _apply_transform(spec, dataset, Path(args.out))
    print(f"wrote {len(variant.images)} images to {args.out}")
    return 0


def _load_detector_config(args) -> DetectorConfig:
    if args.config:
        return _detector_config_from_dict(json.loads(Path(args.config).read_text()))
    return DetectorConfig(
        min_area_px=args.min_area,
        max_area_px=args.max_area,
        exg_threshold=args.exg_threshold,
        morph_open_radius=args.open_radius,
    )


def _cmd_detect(args):
    dataset = load_dataset(args.manifest)
    cfg = _load_detector_config(args)
    predictions = []
    for meta in dataset.images:
        predictions.extend(
            detect_plants(read_raster(meta.path), cfg, image_id=meta.image_id)
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(serialize_predictions(predictions))
    print(f"wrote {len(predictions)} predictions to {out}")
    return 0


def _cmd_patches(args):
    dataset = load_dataset(args.manifest)
    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "annotations").mkdir(parents=True, exist_ok=True)
    total = 0
    for index, meta in enumerate(dataset.images):
        annotation = dataset.annotations.get(meta.image_id)
        if annotation is None:
            continue
        pairs = tile_patches(
            read_raster(meta.path),
            annotation,
            patch_size=args.size,
            n=args.count,
            seed=args.seed + index,
        )
        for raster, patch_annotation in pairs:
            write_raster(out / "images" / f"{patch_annotation.image_id}.png", raster)
            (out / "annotations" / f"{patch_annotation.image_id}.xml").write_bytes(
                serialize_annotation(
                    patch_annotation, width=args.size, height=args.size
                )
            )
            total += 1
    print(f"wrote {total} patches to {out}")
    return 0


def _cmd_evaluate(args):
    dataset = load_dataset(args.manifest)
    preds = parse_predictions(Path(args.predictions).read_bytes())
    cfg = EvalConfig(
        iou_threshold=args.iou, confidence_threshold=args.confidence
    )
    report = evaluate(dataset, preds, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = "dataset,role,ap,accuracy,rrmse,tp,fp,fn"
    row = report_csv_row(dataset.name, dataset.role.value, report)
    (out / "metrics.csv").write_text(f"{header}\n{row}\n")
    (out / "pr_curve.csv").write_text(pr_curve_csv(report.curve))
    print(row)
    return 0


def _cmd_report(args):
    cfg = load_experiment_config(args.config)
    if args.out:
        cfg.output_dir = Path(args.out)
    cfg.workers = args.workers
    report = run_experiment(cfg)
    print(f"wrote {len(report.cells)} cells to {cfg.output_dir}")
    return 0


def _cmd_variance(args):
    native = load_dataset(args.native)
    candidates = [load_dataset(path) for path in args.candidate]
    ranking = compare_variance(native, candidates)
    lines = ["rank,dataset,distance,var_r,var_g,var_b"]
    for rank, item in enumerate(ranking, start=1):
        r, g, b = item.mean_variance
        lines.append(
            f"{rank},{item.name},{item.distance:.6f},{r:.6f},{g:.6f},{b:.6f}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phenoscale", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON file of generator parameters")
    p.add_argument("--plots", type=int, default=None)
    p.add_argument("--role", default=None)
    p.add_argument("--rows", type=int)
    p.add_argument("--plants-per-row", dest="plants_per_row", type=int)
    p.add_argument("--row-spacing-cm", dest="row_spacing_cm", type=float)
    p.add_argument("--plant-spacing-cm", dest="plant_spacing_cm", type=float)
    p.add_argument("--gsd-cm", dest="gsd_cm", type=float)
    p.add_argument(
        "--plant-diameter-px", dest="mean_plant_diameter_px", type=float
    )
    p.add_argument("--jitter-frac", dest="jitter_frac", type=float)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("transform", help="build a resolution variant")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("degrade", "bicubic", "external"), required=True)
    p.add_argument("--target-role", default="custom")
    p.add_argument("--factor", type=float, default=2.0)
    p.add_argument("--sigma", type=float, default=0.63)
    p.add_argument("--window", type=int, default=9)
    p.add_argument("--motion-kernel", type=int, default=3)
    p.add_argument("--motion-angle", type=float, default=45.0)
    p.add_argument("--external-dir")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("detect", help="run the baseline detector")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="predictions file to write")
    p.add_argument("--config", help="JSON detector configuration")
    p.add_argument("--min-area", type=float, default=300.0)
    p.add_argument("--max-area", type=float, default=3000.0)
    p.add_argument(
        "--exg-threshold",
        type=float,
        default=None,
        help="fixed ExG threshold (default: Otsu)",
    )
    p.add_argument("--open-radius", type=int, default=1)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("patches", help="extract random training patches")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_patches)

    p = sub.add_parser("evaluate", help="score a predictions file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iou", type=float, default=0.25)
    p.add_argument("--confidence", type=float, default=0.5)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="run a full experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the config output_dir")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("variance", help="rank datasets by variance closeness")
    p.add_argument("--native", required=True)
    p.add_argument("--candidate", action="append", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_variance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
