import json

import numpy as np
import pytest

from phenoscale.annotations import Role, parse_predictions, serialize_predictions, Prediction
from phenoscale.cli import main
from phenoscale.errors import ConfigError, DataError
from phenoscale.harness import (
    compare_variance,
    load_dataset,
    load_experiment_config,
    run_experiment,
)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth") / "vh"
    code = main(
        [
            "synth",
            "--out", str(out),
            "--seed", "17",
            "--plots", "3",
            "--rows", "2",
            "--plants-per-row", "3",
            "--role", "V_h",
        ]
    )
    assert code == 0
    return out


def _experiment_config(tmp_path, synth_dir, with_oracle=True):
    dataset = load_dataset(synth_dir / "manifest.json")
    oracle_path = tmp_path / "oracle_vh.jsonl"
    preds = [
        Prediction(meta.image_id, box, 1.0)
        for meta in dataset.images
        for box in dataset.annotations[meta.image_id].boxes
    ]
    oracle_path.write_bytes(serialize_predictions(preds))

    runs = [
        {
            "label": "hr",
            "detector": {
                "min_area_px": 400,
                "max_area_px": 4000,
                "morph_open_radius": 1,
            },
            "eval_roles": ["V_h", "V_gm_h2l"],
        }
    ]
    if with_oracle:
        runs.append({"label": "oracle", "predictions": {"V_h": str(oracle_path)}})
    doc = {
        "name": "mini",
        "datasets": [{"manifest": str(synth_dir / "manifest.json"), "role": "V_h"}],
        "transforms": [
            {"source": "V_h", "target": "V_gm_h2l", "kind": "degrade", "params": {}}
        ],
        "detector_runs": runs,
        "output_dir": str(tmp_path / "out"),
    }
    cfg_path = tmp_path / "experiment.json"
    cfg_path.write_text(json.dumps(doc, indent=2))
    return cfg_path


def test_synth_output_layout(synth_dir):
    assert (synth_dir / "manifest.json").exists()
    dataset = load_dataset(synth_dir / "manifest.json")
    assert dataset.role is Role.V_H
    assert len(dataset.images) == 3
    for meta in dataset.images:
        assert meta.image_id in dataset.annotations
        assert len(dataset.annotations[meta.image_id].boxes) == 6
        assert meta.path.endswith(".png")


def test_build_variants_degrade(tmp_path, synth_dir):
    cfg = load_experiment_config(_experiment_config(tmp_path, synth_dir))
    from phenoscale.harness import build_variants

    datasets = build_variants(cfg)
    source = datasets[Role.V_H]
    variant = datasets[Role.V_GM_H2L]
    assert len(variant.images) == len(source.images)
    by_id = {m.image_id: m for m in source.images}
    for meta in variant.images:
        src = by_id[meta.image_id]
        assert meta.width == src.width // 2
        assert meta.height == src.height // 2
        assert meta.gsd_cm / src.gsd_cm == pytest.approx(2.0, abs=1e-9)
        assert meta.site == src.site
        # annotated boxes scaled into the new frame
        for got, want in zip(
            variant.annotations[meta.image_id].boxes,
            source.annotations[meta.image_id].boxes,
        ):
            assert got.x_min == pytest.approx(want.x_min / 2, abs=1e-6)
            assert got.y_max == pytest.approx(want.y_max / 2, abs=1e-6)


def test_transform_cli_bicubic(tmp_path, synth_dir):
    out = tmp_path / "bc"
    code = main(
        [
            "transform",
            "--manifest", str(synth_dir / "manifest.json"),
            "--out", str(out),
            "--mode", "bicubic",
            "--factor", "2.0",
            "--target-role", "V_bc_l2h",
        ]
    )
    assert code == 0
    variant = load_dataset(out / "manifest.json")
    source = load_dataset(synth_dir / "manifest.json")
    assert variant.role is Role.V_BC_L2H
    for got, src in zip(variant.images, source.images):
        assert got.width == src.width * 2
        assert got.height == src.height * 2
        assert got.gsd_cm == pytest.approx(src.gsd_cm / 2, abs=1e-12)


def test_external_transform_missing_image(tmp_path, synth_dir):
    empty = tmp_path / "external_empty"
    empty.mkdir()
    code = main(
        [
            "transform",
            "--manifest", str(synth_dir / "manifest.json"),
            "--out", str(tmp_path / "ext_out"),
            "--mode", "external",
            "--external-dir", str(empty),
            "--target-role", "V_sr_l2h",
        ]
    )
    assert code == 2


def test_external_transform_passthrough(tmp_path, synth_dir):
    source = load_dataset(synth_dir / "manifest.json")
    ext = tmp_path / "external_imgs"
    ext.mkdir()
    rng = np.random.Generator(np.random.Philox(key=1))
    from phenoscale.resample import write_raster

    for meta in source.images:
        fake = rng.integers(0, 256, size=(meta.height * 2, meta.width * 2, 3))
        write_raster(ext / f"{meta.image_id}.png", fake.astype(np.uint8))
    out = tmp_path / "ext_out"
    code = main(
        [
            "transform",
            "--manifest", str(synth_dir / "manifest.json"),
            "--out", str(out),
            "--mode", "external",
            "--external-dir", str(ext),
            "--factor", "2.0",
            "--target-role", "V_sr_l2h",
        ]
    )
    assert code == 0
    variant = load_dataset(out / "manifest.json")
    assert variant.role is Role.V_SR_L2H
    for got, src in zip(variant.images, source.images):
        assert got.width == src.width * 2
        scaled = variant.annotations[got.image_id].boxes
        original = source.annotations[src.image_id].boxes
        assert len(scaled) == len(original)
        assert scaled[0].x_max == pytest.approx(original[0].x_max * 2, abs=1e-6)


def test_run_experiment_cells_and_oracle(tmp_path, synth_dir):
    cfg = load_experiment_config(_experiment_config(tmp_path, synth_dir))
    report = run_experiment(cfg)
    assert set(report.cells) == {
        ("hr", "V_h"),
        ("hr", "V_gm_h2l"),
        ("oracle", "V_h"),
    }
    oracle_cell = report.cells[("oracle", "V_h")]
    assert oracle_cell.ap == 1.0
    assert oracle_cell.accuracy == 1.0
    assert oracle_cell.rrmse == 0.0
    # HR-tuned detector collapses on the degraded variant
    assert report.cells[("hr", "V_h")].accuracy > report.cells[("hr", "V_gm_h2l")].accuracy
    out = cfg.output_dir
    assert (out / "report.csv").exists()
    assert (out / "curves" / "hr__V_h.csv").exists()
    assert (out / "overdetection" / "oracle__V_h.csv").exists()
    header = (out / "report.csv").read_text().splitlines()[0]
    assert header == "run_label,dataset_role,n_images,n_gt,ap,accuracy,rrmse,tp,fp,fn"
    assert "config_sha256" in json.loads((out / "provenance.json").read_text())


def test_report_cli_deterministic_across_workers(tmp_path, synth_dir):
    cfg_path = _experiment_config(tmp_path, synth_dir)
    outputs = []
    for workers, name in ((1, "w1"), (8, "w8")):
        out = tmp_path / name
        code = main(
            [
                "report",
                "--config", str(cfg_path),
                "--out", str(out),
                "--workers", str(workers),
            ]
        )
        assert code == 0
        outputs.append(out)
    a, b = outputs
    assert (a / "report.csv").read_bytes() == (b / "report.csv").read_bytes()
    for curve in sorted((a / "curves").iterdir()):
        assert curve.read_bytes() == (b / "curves" / curve.name).read_bytes()
    for prof in sorted((a / "overdetection").iterdir()):
        assert prof.read_bytes() == (b / "overdetection" / prof.name).read_bytes()


def test_failed_cell_names_cell(tmp_path, synth_dir):
    bad_preds = tmp_path / "bad.jsonl"
    bad_preds.write_bytes(
        serialize_predictions(
            [Prediction("ghost", __import__("phenoscale").BBox(0, 0, 5, 5), 0.9)]
        )
    )
    doc = {
        "name": "bad",
        "datasets": [{"manifest": str(synth_dir / "manifest.json"), "role": "V_h"}],
        "detector_runs": [
            {"label": "ext", "predictions": {"V_h": str(bad_preds)}}
        ],
        "output_dir": str(tmp_path / "out_bad"),
    }
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps(doc))
    with pytest.raises(DataError, match="cell ext__V_h"):
        run_experiment(load_experiment_config(cfg_path))
    assert not (tmp_path / "out_bad" / "report.csv").exists()


def test_config_validation_errors(tmp_path, synth_dir):
    doc = {
        "name": "dup",
        "datasets": [{"manifest": str(synth_dir / "manifest.json"), "role": "V_h"}],
        "transforms": [
            {"source": "V_h", "target": "V_gm_h2l", "kind": "degrade"},
            {"source": "V_h", "target": "V_gm_h2l", "kind": "bicubic"},
        ],
        "detector_runs": [],
    }
    cfg_path = tmp_path / "dup.json"
    cfg_path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError):
        load_experiment_config(cfg_path)

    doc = {
        "name": "undeclared",
        "datasets": [],
        "detector_runs": [
            {"label": "x", "detector": {"min_area_px": 1, "max_area_px": 2},
             "eval_roles": ["V_h"]}
        ],
    }
    cfg_path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError):
        load_experiment_config(cfg_path)


def test_detect_and_evaluate_cli_round_trip(tmp_path, synth_dir):
    preds_path = tmp_path / "preds.jsonl"
    code = main(
        [
            "detect",
            "--manifest", str(synth_dir / "manifest.json"),
            "--out", str(preds_path),
            "--min-area", "400",
            "--max-area", "4000",
        ]
    )
    assert code == 0
    preds = parse_predictions(preds_path.read_bytes())
    assert len(preds) == 18  # 6 plants x 3 plots

    eval_out = tmp_path / "eval"
    code = main(
        [
            "evaluate",
            "--manifest", str(synth_dir / "manifest.json"),
            "--predictions", str(preds_path),
            "--out", str(eval_out),
        ]
    )
    assert code == 0
    row = (eval_out / "metrics.csv").read_text().splitlines()[1].split(",")
    assert row[1] == "V_h"
    assert float(row[2]) == 1.0  # ap
    assert (eval_out / "pr_curve.csv").read_text().startswith("recall,precision")


def test_patches_cli(tmp_path, synth_dir):
    out = tmp_path / "patches"
    code = main(
        [
            "patches",
            "--manifest", str(synth_dir / "manifest.json"),
            "--out", str(out),
            "--size", "128",
            "--count", "4",
            "--seed", "3",
        ]
    )
    assert code == 0
    images = list((out / "images").glob("*.png"))
    xmls = list((out / "annotations").glob("*.xml"))
    assert len(images) == 12 and len(xmls) == 12


def test_variance_cli_and_ranking(tmp_path, synth_dir):
    degraded_dir = tmp_path / "gm"
    assert main(
        [
            "transform",
            "--manifest", str(synth_dir / "manifest.json"),
            "--out", str(degraded_dir),
            "--mode", "degrade",
            "--target-role", "V_gm_h2l",
        ]
    ) == 0
    degraded_manifest = degraded_dir / "manifest.json"
    out_csv = tmp_path / "variance.csv"
    code = main(
        [
            "variance",
            "--native", str(synth_dir / "manifest.json"),
            "--candidate", str(degraded_manifest),
            "--candidate", str(synth_dir / "manifest.json"),
            "--out", str(out_csv),
        ]
    )
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "rank,dataset,distance,var_r,var_g,var_b"
    first = lines[1].split(",")
    # the native dataset compared to itself ranks first at distance zero
    assert first[1] == "synth_V_h"
    assert float(first[2]) == 0.0


def test_compare_variance_identity_and_mismatch(synth_dir):
    native = load_dataset(synth_dir / "manifest.json")
    ranked = compare_variance(native, [native])
    assert len(ranked) == 1 and ranked[0].distance == 0.0

    trimmed = load_dataset(synth_dir / "manifest.json")
    trimmed.images = trimmed.images[:1]
    trimmed.annotations = {
        trimmed.images[0].image_id: trimmed.annotations[trimmed.images[0].image_id]
    }
    with pytest.raises(DataError):
        compare_variance(native, [trimmed])


def test_cli_exit_codes(tmp_path):
    # usage error: unknown subcommand
    assert main(["frobnicate"]) == 1
    # config error: bad backend-style config (unknown transform kind)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x", "transforms": [{"kind": "warp",
                    "source": "V_h", "target": "V_l"}]}))
    assert main(["report", "--config", str(bad)]) == 1
    # data error: missing manifest file
    assert main(["detect", "--manifest", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "p.jsonl")]) == 2