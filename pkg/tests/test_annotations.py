import json

import pytest

from phenoscale.annotations import (
    Annotation,
    BBox,
    Role,
    parse_manifest,
    parse_predictions,
    parse_voc_xml,
    serialize_annotation,
    serialize_predictions,
)
from phenoscale.errors import DataError, ParseError

from conftest import philox

TWO_OBJECT_XML = b"""<annotation>
  <filename>plot_17.png</filename>
  <size><width>300</width><height>200</height><depth>3</depth></size>
  <object><name>plant</name>
    <bndbox><xmin>10</xmin><ymin>20</ymin><xmax>50</xmax><ymax>80</ymax></bndbox>
  </object>
  <object><name>plant</name>
    <bndbox><xmin>100</xmin><ymin>40</ymin><xmax>140</xmax><ymax>110</ymax></bndbox>
  </object>
</annotation>
"""


def test_parse_voc_two_objects():
    ann = parse_voc_xml(TWO_OBJECT_XML)
    assert ann.image_id == "plot_17"
    assert len(ann.boxes) == 2
    # 1-based integer corners become 0-based continuous edges
    assert ann.boxes[0] == BBox(9, 19, 50, 80)
    assert ann.boxes[1] == BBox(99, 39, 140, 110)


def test_parse_voc_no_objects():
    xml = b"<annotation><filename>empty.jpg</filename></annotation>"
    ann = parse_voc_xml(xml)
    assert ann.image_id == "empty"
    assert ann.boxes == []


def test_parse_voc_degenerate_box_names_object_index():
    xml = b"""<annotation><filename>bad.png</filename>
    <object><bndbox><xmin>50</xmin><ymin>10</ymin><xmax>50</xmax><ymax>30</ymax></bndbox></object>
    </annotation>"""
    with pytest.raises(ParseError, match="object 0"):
        parse_voc_xml(xml)


def test_parse_voc_malformed_xml_reports_line():
    bad = b"<annotation>\n<filename>x</filename>\n<object>\n"
    with pytest.raises(ParseError) as excinfo:
        parse_voc_xml(bad)
    assert excinfo.value.line is not None


def test_parse_voc_missing_filename():
    with pytest.raises(ParseError, match="filename"):
        parse_voc_xml(b"<annotation><object/></annotation>")


def test_parse_voc_accepts_foreign_name_and_extra_fields():
    xml = b"""<annotation><filename>a.png</filename>
    <object><name>weed</name><difficult>1</difficult>
    <bndbox><xmin>1</xmin><ymin>1</ymin><xmax>4</xmax><ymax>5</ymax></bndbox></object>
    </annotation>"""
    ann = parse_voc_xml(xml)
    assert len(ann.boxes) == 1


def test_serialize_round_trip_basic():
    ann = Annotation("plot", [BBox(9, 19, 50, 80), BBox(0, 0, 3, 4), BBox(1, 2, 7, 9)])
    again = parse_voc_xml(serialize_annotation(ann, width=100, height=100))
    assert again.image_id == "plot"
    assert again.boxes == ann.boxes


def test_serialize_round_trip_empty():
    ann = Annotation("none", [])
    assert parse_voc_xml(serialize_annotation(ann)).boxes == []


def test_serialize_round_trip_fractional():
    ann = Annotation("frac", [BBox(1.25, 2.5, 10.125, 20.0625)])
    got = parse_voc_xml(serialize_annotation(ann)).boxes[0]
    for a, b in zip(
        (got.x_min, got.y_min, got.x_max, got.y_max),
        (1.25, 2.5, 10.125, 20.0625),
    ):
        assert abs(a - b) <= 1e-6


def test_round_trip_random_annotations():
    rng = philox(77)
    for _ in range(500):
        n = int(rng.integers(0, 9))
        boxes = []
        for _ in range(n):
            x0 = rng.uniform(0, 400)
            y0 = rng.uniform(0, 400)
            boxes.append(
                BBox(x0, y0, x0 + rng.uniform(1.01, 90), y0 + rng.uniform(1.01, 90))
            )
        ann = Annotation("rt", boxes)
        again = parse_voc_xml(serialize_annotation(ann))
        assert len(again.boxes) == n
        for got, want in zip(again.boxes, boxes):
            assert abs(got.x_min - want.x_min) <= 1e-6
            assert abs(got.y_min - want.y_min) <= 1e-6
            assert abs(got.x_max - want.x_max) <= 1e-6
            assert abs(got.y_max - want.y_max) <= 1e-6


def test_serialize_rejects_subpixel_boxes():
    # a box one pixel wide or narrower has no 1-based corner representation
    with pytest.raises(DataError, match="not representable"):
        serialize_annotation(Annotation("a", [BBox(5.0, 5.0, 6.0, 9.0)]))


def test_bbox_invariants():
    with pytest.raises(DataError):
        BBox(5, 5, 5, 10)
    with pytest.raises(DataError):
        BBox(-1, 0, 4, 4)
    with pytest.raises(DataError):
        BBox(0, 0, float("inf"), 4)


def _pred_line(image_id="a", x0=1.0, y0=2.0, x1=5.0, y1=6.0, score=0.7):
    return json.dumps(
        {"image_id": image_id, "x_min": x0, "y_min": y0, "x_max": x1, "y_max": y1,
         "score": score}
    )


def test_parse_predictions_order_and_fields():
    content = (_pred_line(score=0.9) + "\n" + _pred_line(score=0.2) + "\n").encode()
    preds = parse_predictions(content)
    assert [p.score for p in preds] == [0.9, 0.2]
    assert preds[0].box == BBox(1, 2, 5, 6)


def test_parse_predictions_empty():
    assert parse_predictions(b"") == []


def test_parse_predictions_score_range():
    content = (_pred_line() + "\n" + _pred_line(score=-0.1) + "\n").encode()
    with pytest.raises(ParseError, match="line 2"):
        parse_predictions(content)
    with pytest.raises(ParseError, match="line 1"):
        parse_predictions((_pred_line(score=1.5) + "\n").encode())


def test_parse_predictions_bad_line_number():
    content = (_pred_line() + "\nnot json\n").encode()
    with pytest.raises(ParseError, match="line 2"):
        parse_predictions(content)


def test_parse_predictions_wrong_keys():
    line = json.dumps({"image_id": "a", "score": 0.5})
    with pytest.raises(ParseError, match="line 1"):
        parse_predictions((line + "\n").encode())


def test_predictions_round_trip():
    preds = parse_predictions(
        (_pred_line(score=0.25) + "\n" + _pred_line("b", 0.5, 1.5, 9.25, 11.0, 1.0)
         + "\n").encode()
    )
    assert parse_predictions(serialize_predictions(preds)) == preds


def _manifest(role="V_h", images=None, annotations=None):
    doc = {
        "name": "demo",
        "role": role,
        "images": images
        if images is not None
        else [
            {"id": "a", "path": "images/a.png", "gsd_cm": 0.32, "site": "tartas",
             "width": 100, "height": 80},
            {"id": "b", "path": "images/b.png", "gsd_cm": 0.32, "site": "tartas",
             "width": 100, "height": 80},
        ],
        "annotations": annotations or [],
    }
    return json.dumps(doc).encode()


def test_parse_manifest_role_and_images():
    ds = parse_manifest(_manifest())
    assert ds.role is Role.V_H
    assert len(ds.images) == 2
    assert ds.images[0].gsd_cm == 0.32


def test_parse_manifest_unknown_role_is_custom():
    assert parse_manifest(_manifest(role="made_up_role")).role is Role.CUSTOM


def test_parse_manifest_dangling_annotation():
    with pytest.raises(DataError, match="zz"):
        parse_manifest(
            _manifest(annotations=[{"image_id": "zz", "path": "zz.xml"}])
        )


def test_parse_manifest_duplicate_ids():
    images = [
        {"id": "a", "path": "x.png", "gsd_cm": 0.3, "site": "s"},
        {"id": "a", "path": "y.png", "gsd_cm": 0.3, "site": "s"},
    ]
    with pytest.raises(DataError, match="duplicate"):
        parse_manifest(_manifest(images=images))


def test_parse_manifest_loads_annotations_via_loader():
    xml = serialize_annotation(Annotation("whatever", [BBox(0, 0, 4, 4)]))
    ds = parse_manifest(
        _manifest(annotations=[{"image_id": "a", "path": "a.xml"}]),
        annotation_loader=lambda path: xml,
    )
    assert set(ds.annotations) == {"a"}
    assert ds.annotations["a"].image_id == "a"
    assert len(ds.annotations["a"].boxes) == 1
