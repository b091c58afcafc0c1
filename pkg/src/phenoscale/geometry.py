"""Box arithmetic and ground-truth/prediction matching.

Matching follows the greedy convention of the standard detection-evaluation
protocol: predictions are visited in descending score order (ties broken by
ascending index) and each one claims the unmatched ground-truth box with the
highest overlap. A claimed box is consumed only by a true positive, so a
duplicate detection of an already-matched plant counts as a false positive.
"""

from dataclasses import dataclass

from .annotations import BBox


@dataclass
class MatchResult:
    tp_pairs: list  # (gt_index, pred_index, iou)
    fp_indices: list  # pred_index
    fn_indices: list  # gt_index


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn
        )


def area(box: BBox) -> float:
    return (box.x_max - box.x_min) * (box.y_max - box.y_min)


def intersection_area(a: BBox, b: BBox) -> float:
    width = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    height = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if width <= 0.0 or height <= 0.0:
        return 0.0
    return width * height


def iou(a: BBox, b: BBox) -> float:
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (area(a) + area(b) - inter)


def match_detections(
    gt: list,
    preds: list,
    iou_threshold: float,
    confidence_threshold: float,
) -> MatchResult:
    """Greedy assignment of predictions to ground-truth boxes for one image.

    Predictions with score <= confidence_threshold are discarded outright
    (the confidence comparison is strict). The IoU comparison against
    iou_threshold is non-strict.
    """
    kept = [
        (index, p) for index, p in enumerate(preds) if p.score > confidence_threshold
    ]
    kept.sort(key=lambda item: (-item[1].score, item[0]))

    matched_gt = [False] * len(gt)
    tp_pairs = []
    fp_indices = []
    for pred_index, pred in kept:
        best_gt = -1
        best_iou = 0.0
        for gt_index, gt_box in enumerate(gt):
            if matched_gt[gt_index]:
                continue
            overlap = iou(gt_box, pred.box)
            if overlap > best_iou:
                best_iou = overlap
                best_gt = gt_index
        if best_gt >= 0 and best_iou >= iou_threshold:
            matched_gt[best_gt] = True
            tp_pairs.append((best_gt, pred_index, best_iou))
        else:
            fp_indices.append(pred_index)
    fn_indices = [i for i, used in enumerate(matched_gt) if not used]
    return MatchResult(tp_pairs=tp_pairs, fp_indices=fp_indices, fn_indices=fn_indices)


def counts(match: MatchResult) -> ConfusionCounts:
    return ConfusionCounts(
        tp=len(match.tp_pairs),
        fp=len(match.fp_indices),
        fn=len(match.fn_indices),
    )
