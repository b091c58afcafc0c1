"""Evaluation metrics for plant detection and counting.

Average precision runs a global score sweep with no confidence floor and
101-point interpolated precision; accuracy and the per-image count records
behind the relative counting error apply the confidence floor. That split
mirrors how detection quality and counting quality are scored separately.
"""

from dataclasses import dataclass, field

import numpy as np

from .annotations import Annotation, DatasetDescriptor
from .errors import DataError
from .geometry import ConfusionCounts, counts, intersection_area, iou, match_detections


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = 0.25
    confidence_threshold: float = 0.5
    recall_points: int = 101


@dataclass
class PRCurve:
    iou_threshold: float
    points: list  # (recall, precision), recall non-decreasing


@dataclass(frozen=True)
class CountRecord:
    image_id: str
    labeled: int
    predicted: int

    def __post_init__(self):
        if self.labeled < 0 or self.predicted < 0:
            raise DataError("counts must be non-negative")


@dataclass
class MetricsReport:
    ap: float
    accuracy: float
    rrmse: float
    per_site: dict  # site -> ConfusionCounts
    curve: PRCurve
    totals: ConfusionCounts
    count_records: list = field(default_factory=list)


def precision_recall(c: ConfusionCounts):
    """Precision and recall, scoring the vacuous cases as perfect."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 1.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 1.0
    return precision, recall


def accuracy(c: ConfusionCounts) -> float:
    total = c.tp + c.fp + c.fn
    return c.tp / total if total else 1.0


def rrmse(records: list) -> float:
    """Root mean squared count error relative to the mean labeled count."""
    if not records:
        raise DataError("rrmse needs at least one count record")
    labeled = np.array([r.labeled for r in records], dtype=np.float64)
    predicted = np.array([r.predicted for r in records], dtype=np.float64)
    mean_labeled = labeled.mean()
    if mean_labeled == 0.0:
        raise DataError("rrmse undefined: all labeled counts are zero")
    return float(np.sqrt(np.mean((labeled - predicted) ** 2)) / mean_labeled)


def _score_sweep(gt: dict, preds: list, iou_threshold: float):
    """Cumulative (recall, precision) after each prediction of the global
    descending-score sweep, with per-image greedy matching and no
    confidence floor. Returns (points, total_gt)."""
    for p in preds:
        if p.image_id not in gt:
            raise DataError(f"prediction references unknown image {p.image_id!r}")
    total_gt = sum(len(a.boxes) for a in gt.values())
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].score, i))
    matched = {image_id: [False] * len(a.boxes) for image_id, a in gt.items()}
    points = []
    tp = 0
    for rank, index in enumerate(order, start=1):
        p = preds[index]
        boxes = gt[p.image_id].boxes
        flags = matched[p.image_id]
        best, best_iou = -1, 0.0
        for j, g in enumerate(boxes):
            if flags[j]:
                continue
            overlap = iou(g, p.box)
            if overlap > best_iou:
                best_iou = overlap
                best = j
        if best >= 0 and best_iou >= iou_threshold:
            flags[best] = True
            tp += 1
        recall = tp / total_gt if total_gt else 1.0
        points.append((recall, tp / rank))
    return points, total_gt


def interpolated_ap(points: list, recall_points: int = 101) -> float:
    """Average of the precision envelope over an even recall grid.

    The envelope is p(r) = max precision among sweep points with recall >= r,
    zero where no such point exists.
    """
    if not points:
        return 0.0
    recalls = np.array([r for r, _ in points])
    precisions = np.array([p for _, p in points])
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    grid = np.arange(recall_points, dtype=np.float64) / (recall_points - 1)
    idx = np.searchsorted(recalls, grid, side="left")
    values = np.where(idx < len(points), envelope[np.minimum(idx, len(points) - 1)], 0.0)
    return float(values.mean())


def average_precision(
    gt: dict, preds: list, iou_threshold: float, recall_points: int = 101
) -> float:
    """Area under the interpolated precision-recall curve at one IoU level."""
    points, total_gt = _score_sweep(gt, preds, iou_threshold)
    if total_gt == 0:
        return 1.0 if not preds else 0.0
    return interpolated_ap(points, recall_points)


def pr_curve(gt: dict, preds: list, iou_threshold: float) -> PRCurve:
    """The raw cumulative sweep points, before interpolation."""
    points, _ = _score_sweep(gt, preds, iou_threshold)
    return PRCurve(iou_threshold=iou_threshold, points=points)


@dataclass(frozen=True)
class OverdetectionBin:
    area_lo: float
    area_hi: float
    n_gt: int
    mean_intersecting: float


def overdetection_profile(gt: list, preds: list, area_bin_edges: list) -> list:
    """Mean count of predictions intersecting each ground-truth box, by size.

    Bins are half-open [lo, hi) intervals between consecutive edges; boxes
    with area outside the edge range are ignored. Callers filter predictions
    by confidence beforehand.
    """
    edges = list(area_bin_edges)
    if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
        raise DataError("area_bin_edges must be strictly increasing")
    sums = [0.0] * (len(edges) - 1)
    hits = [0] * (len(edges) - 1)
    for g in gt:
        box_area = (g.x_max - g.x_min) * (g.y_max - g.y_min)
        for b in range(len(edges) - 1):
            if edges[b] <= box_area < edges[b + 1]:
                n = sum(1 for p in preds if intersection_area(g, p.box) > 0.0)
                sums[b] += n
                hits[b] += 1
                break
    return [
        OverdetectionBin(
            area_lo=edges[b],
            area_hi=edges[b + 1],
            n_gt=hits[b],
            mean_intersecting=sums[b] / hits[b] if hits[b] else 0.0,
        )
        for b in range(len(edges) - 1)
    ]


def evaluate(
    dataset: DatasetDescriptor, preds: list, config: EvalConfig = EvalConfig()
) -> MetricsReport:
    """Score one prediction set against one dataset."""
    known = {m.image_id for m in dataset.images}
    for p in preds:
        if p.image_id not in known:
            raise DataError(
                f"prediction references image {p.image_id!r} not in dataset "
                f"{dataset.name!r}"
            )

    gt = {
        m.image_id: dataset.annotations.get(
            m.image_id, Annotation(image_id=m.image_id, boxes=[])
        )
        for m in dataset.images
    }
    by_image = {m.image_id: [] for m in dataset.images}
    for p in preds:
        by_image[p.image_id].append(p)

    ap = average_precision(gt, preds, config.iou_threshold, config.recall_points)
    curve = pr_curve(gt, preds, config.iou_threshold)

    per_site = {}
    totals = ConfusionCounts(0, 0, 0)
    records = []
    for meta in dataset.images:
        image_preds = by_image[meta.image_id]
        match = match_detections(
            gt[meta.image_id].boxes,
            image_preds,
            config.iou_threshold,
            config.confidence_threshold,
        )
        c = counts(match)
        totals = totals + c
        site = meta.site or "unknown"
        per_site[site] = per_site.get(site, ConfusionCounts(0, 0, 0)) + c
        records.append(
            CountRecord(
                image_id=meta.image_id,
                labeled=len(gt[meta.image_id].boxes),
                predicted=sum(
                    1 for p in image_preds if p.score > config.confidence_threshold
                ),
            )
        )

    return MetricsReport(
        ap=ap,
        accuracy=accuracy(totals),
        rrmse=rrmse(records),
        per_site=per_site,
        curve=curve,
        totals=totals,
        count_records=records,
    )


def report_csv_row(dataset_name: str, role: str, report: MetricsReport) -> str:
    """One CSV row: dataset, role, ap, accuracy, rrmse, tp, fp, fn."""
    t = report.totals
    return (
        f"{dataset_name},{role},{report.ap:.6f},{report.accuracy:.6f},"
        f"{report.rrmse:.6f},{t.tp},{t.fp},{t.fn}"
    )


def pr_curve_csv(curve: PRCurve) -> str:
    lines = ["recall,precision"]
    for recall, precision in curve.points:
        lines.append(f"{recall:.9g},{precision:.9g}")
    return "\n".join(lines) + "\n"
