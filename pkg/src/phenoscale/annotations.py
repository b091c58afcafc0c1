"""Domain types and interchange formats.

Parsers are pure functions on byte strings. Box coordinates are continuous,
origin at the top-left corner, x to the right and y down. Labeling-tool XML
stores 1-based integer pixel corners; on parse these become 0-based
continuous edges (xmin-1 -> x_min, xmax -> x_max) so that an integer box of
width ``xmax - xmin + 1`` pixels covers exactly that many unit cells.
"""

import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from xml.etree.ElementTree import ParseError as XmlParseError

from .errors import DataError, ParseError


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise DataError(f"box coordinates must be finite, got {coords}")
        if min(coords) < 0:
            raise DataError(f"box coordinates must be >= 0, got {coords}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DataError(f"box must have positive area, got {coords}")


@dataclass
class Annotation:
    image_id: str
    boxes: list  # list[BBox]

    def __post_init__(self):
        if not self.image_id:
            raise DataError("annotation image_id must be non-empty")


@dataclass(frozen=True)
class Prediction:
    image_id: str
    box: BBox
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise DataError(f"score must be in [0, 1], got {self.score}")


class Role(Enum):
    T_H = "T_h"
    T_GM_H2L = "T_gm_h2l"
    T_MIXED = "T_mixed"
    V_H = "V_h"
    V_L = "V_l"
    V_BC_L2H = "V_bc_l2h"
    V_SR_L2H = "V_sr_l2h"
    V_GM_H2L = "V_gm_h2l"
    CUSTOM = "custom"

    @classmethod
    def from_string(cls, value: str) -> "Role":
        """Map a manifest role string; unknown strings fall back to CUSTOM."""
        for member in cls:
            if member.value == value:
                return member
        return cls.CUSTOM


@dataclass
class ImageMeta:
    image_id: str
    path: str
    width: int
    height: int
    gsd_cm: float
    site: str

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DataError(
                f"image {self.image_id!r}: dimensions must be >= 1, "
                f"got {self.width}x{self.height}"
            )
        if not self.gsd_cm > 0:
            raise DataError(f"image {self.image_id!r}: gsd_cm must be > 0")


@dataclass
class DatasetDescriptor:
    name: str
    role: Role
    images: list  # list[ImageMeta]
    annotations: dict = field(default_factory=dict)  # image_id -> Annotation

    def __post_init__(self):
        ids = [m.image_id for m in self.images]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate image ids in dataset {self.name!r}: {dupes}")
        known = set(ids)
        for image_id in self.annotations:
            if image_id not in known:
                raise DataError(
                    f"annotation references unknown image {image_id!r} "
                    f"in dataset {self.name!r}"
                )


def _strip_extension(filename: str) -> str:
    dot = filename.rfind(".")
    return filename[:dot] if dot > 0 else filename


def parse_voc_xml(content: bytes) -> Annotation:
    """Parse one labeling-tool XML document into an Annotation.

    Expects the usual layout: root ``annotation`` with a ``filename`` child
    and repeated ``object`` elements holding ``bndbox`` corners. Corner
    values may be integers (the tool's native output) or decimals (our own
    round-trip output).
    """
    try:
        root = ET.fromstring(content)
    except XmlParseError as exc:
        line, _col = exc.position
        raise ParseError(f"malformed XML: {exc}", line=line) from exc

    filename = root.findtext("filename")
    if filename is None or not filename.strip():
        raise ParseError("missing filename element")
    image_id = _strip_extension(filename.strip())

    boxes = []
    for index, obj in enumerate(root.iter("object")):
        bndbox = obj.find("bndbox")
        if bndbox is None:
            raise ParseError(f"object {index}: missing bndbox element")
        corner = {}
        for key in ("xmin", "ymin", "xmax", "ymax"):
            text = bndbox.findtext(key)
            if text is None:
                raise ParseError(f"object {index}: missing {key}")
            try:
                corner[key] = float(text)
            except ValueError as exc:
                raise ParseError(f"object {index}: bad {key} value {text!r}") from exc
        if corner["xmin"] >= corner["xmax"] or corner["ymin"] >= corner["ymax"]:
            raise ParseError(
                f"object {index}: invalid box, needs xmin < xmax and ymin < ymax"
            )
        try:
            boxes.append(
                BBox(
                    x_min=corner["xmin"] - 1.0,
                    y_min=corner["ymin"] - 1.0,
                    x_max=corner["xmax"],
                    y_max=corner["ymax"],
                )
            )
        except DataError as exc:
            raise ParseError(f"object {index}: invalid box: {exc}") from exc
    return Annotation(image_id=image_id, boxes=boxes)


def _format_coord(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def serialize_annotation(
    annotation: Annotation, width: int = 0, height: int = 0
) -> bytes:
    """Render an Annotation back to labeling-tool XML.

    Integer-valued coordinates are written as integers, matching the tool's
    native files; fractional ones are written as decimal literals so the
    serialize/parse round trip is exact. Boxes narrower or shorter than one
    pixel have no representation in the tool's 1-based corner schema and are
    rejected.
    """
    for index, box in enumerate(annotation.boxes):
        if box.x_max - box.x_min <= 1.0 or box.y_max - box.y_min <= 1.0:
            raise DataError(
                f"object {index}: boxes with extent <= 1 px are not "
                f"representable in the annotation XML schema"
            )
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = f"{annotation.image_id}.png"
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(width)
    ET.SubElement(size, "height").text = str(height)
    ET.SubElement(size, "depth").text = "3"
    for box in annotation.boxes:
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = "plant"
        bndbox = ET.SubElement(obj, "bndbox")
        ET.SubElement(bndbox, "xmin").text = _format_coord(box.x_min + 1.0)
        ET.SubElement(bndbox, "ymin").text = _format_coord(box.y_min + 1.0)
        ET.SubElement(bndbox, "xmax").text = _format_coord(box.x_max)
        ET.SubElement(bndbox, "ymax").text = _format_coord(box.y_max)
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


_PREDICTION_KEYS = {"image_id", "x_min", "y_min", "x_max", "y_max", "score"}


def parse_predictions(content: bytes) -> list:
    """Parse a line-delimited prediction file (one JSON object per line)."""
    predictions = []
    for lineno, raw in enumerate(content.decode("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", line=lineno) from exc
        if not isinstance(record, dict) or set(record) != _PREDICTION_KEYS:
            raise ParseError(
                f"expected keys {sorted(_PREDICTION_KEYS)}", line=lineno
            )
        try:
            box = BBox(
                float(record["x_min"]),
                float(record["y_min"]),
                float(record["x_max"]),
                float(record["y_max"]),
            )
            predictions.append(
                Prediction(
                    image_id=str(record["image_id"]),
                    box=box,
                    score=float(record["score"]),
                )
            )
        except DataError as exc:
            raise ParseError(str(exc), line=lineno) from exc
    return predictions


def serialize_predictions(predictions: list) -> bytes:
    lines = []
    for p in predictions:
        lines.append(
            json.dumps(
                {
                    "image_id": p.image_id,
                    "x_min": p.box.x_min,
                    "y_min": p.box.y_min,
                    "x_max": p.box.x_max,
                    "y_max": p.box.y_max,
                    "score": p.score,
                }
            )
        )
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def parse_manifest(content: bytes, annotation_loader=None) -> DatasetDescriptor:
    """Parse a dataset manifest (JSON) into a DatasetDescriptor.

    The manifest lists ``name``, ``role``, ``images`` and ``annotations``
    entries; annotation entries bind an image_id to an XML file path. If
    ``annotation_loader`` is given it is called with each path and must
    return the file's bytes; otherwise binding paths are validated but not
    loaded and the descriptor's annotation map is left empty. Use
    :func:`phenoscale.harness.load_dataset` to read a manifest from disk
    with annotations resolved.
    """
    try:
        doc = json.loads(content.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("manifest root must be an object")
    for key in ("name", "role", "images"):
        if key not in doc:
            raise ParseError(f"manifest missing key {key!r}")

    images = []
    for entry in doc["images"]:
        try:
            images.append(
                ImageMeta(
                    image_id=str(entry["id"]),
                    path=str(entry["path"]),
                    width=int(entry.get("width", 1)),
                    height=int(entry.get("height", 1)),
                    gsd_cm=float(entry["gsd_cm"]),
                    site=str(entry.get("site", "")),
                )
            )
        except KeyError as exc:
            raise ParseError(f"image entry missing key {exc}") from exc

    known = {m.image_id for m in images}
    annotations = {}
    for entry in doc.get("annotations", []):
        image_id = str(entry.get("image_id", ""))
        if image_id not in known:
            raise DataError(
                f"manifest annotation references unknown image {image_id!r}"
            )
        if annotation_loader is not None:
            annotation = parse_voc_xml(annotation_loader(str(entry["path"])))
            annotations[image_id] = Annotation(image_id=image_id, boxes=annotation.boxes)

    return DatasetDescriptor(
        name=str(doc["name"]),
        role=Role.from_string(str(doc["role"])),
        images=images,
        annotations=annotations,
    )


def serialize_manifest(dataset: DatasetDescriptor, annotation_paths: dict) -> bytes:
    """Render a DatasetDescriptor to manifest JSON.

    ``annotation_paths`` maps image_id to the annotation XML path recorded
    for that image; images without an entry are listed unannotated.
    """
    doc = {
        "name": dataset.name,
        "role": dataset.role.value,
        "images": [
            {
                "id": m.image_id,
                "path": m.path,
                "width": m.width,
                "height": m.height,
                "gsd_cm": m.gsd_cm,
                "site": m.site,
            }
            for m in dataset.images
        ],
        "annotations": [
            {"image_id": image_id, "path": annotation_paths[image_id]}
            for m in dataset.images
            if (image_id := m.image_id) in annotation_paths
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
