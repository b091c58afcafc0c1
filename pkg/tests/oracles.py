"""Independent reference implementations used to pin expected values.

These deliberately avoid the library's computational paths: IoU by counting
pixel memberships on an explicit grid, average precision by re-deriving the
confusion from scratch at every distinct score threshold, Otsu by an
exhaustive exact-rational scan.
"""

import numpy as np

from phenoscale.geometry import iou


def pixel_iou(a, b, grid=64):
    """IoU of integer-cornered boxes by exhaustive pixel membership."""
    ga = np.zeros((grid, grid), dtype=bool)
    gb = np.zeros((grid, grid), dtype=bool)
    ga[int(a.y_min) : int(a.y_max), int(a.x_min) : int(a.x_max)] = True
    gb[int(b.y_min) : int(b.y_max), int(b.x_min) : int(b.x_max)] = True
    inter = np.count_nonzero(ga & gb)
    union = np.count_nonzero(ga | gb)
    return inter / union if union else 0.0


def brute_force_ap(gt, preds, iou_threshold, recall_points=101):
    """AP by enumerating every distinct score threshold.

    At each threshold the kept predictions are matched greedily from
    scratch, giving one (recall, precision) point; the precision envelope is
    then averaged over the same recall grid as the implementation under
    test.
    """
    total_gt = sum(len(a.boxes) for a in gt.values())
    if total_gt == 0:
        return 1.0 if not preds else 0.0
    if not preds:
        return 0.0
    points = []
    for tau in sorted({p.score for p in preds}, reverse=True):
        kept = [(i, p) for i, p in enumerate(preds) if p.score >= tau]
        kept.sort(key=lambda item: (-item[1].score, item[0]))
        matched = {image_id: [False] * len(a.boxes) for image_id, a in gt.items()}
        tp = 0
        for _, p in kept:
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
        points.append((tp / total_gt, tp / len(kept)))
    total = 0.0
    for k in range(recall_points):
        r = k / (recall_points - 1)
        best = 0.0
        for recall, precision in points:
            if recall >= r and precision > best:
                best = precision
        total += best
    return total / recall_points


def exhaustive_otsu(exg):
    """Exact-rational argmax of the between-class variance over thresholds."""
    flat = [int(v) for v in np.asarray(exg).ravel()]
    total_count = len(flat)
    total_sum = sum(flat)
    counts = {}
    for v in flat:
        counts[v] = counts.get(v, 0) + 1
    best_t = None
    best_num, best_den = -1, 1  # score as exact fraction num/den
    w0 = s0 = 0
    for t in range(-510, 511):
        if t in counts:
            w0 += counts[t]
            s0 += t * counts[t]
        w1 = total_count - w0
        s1 = total_sum - s0
        if w0 == 0 or w1 == 0:
            continue
        # w0*w1*(s0/w0 - s1/w1)^2 == (s0*w1 - s1*w0)^2 / (w0*w1)
        num = (s0 * w1 - s1 * w0) ** 2
        den = w0 * w1
        if num * best_den > best_num * den:
            best_num, best_den, best_t = num, den, t
    if best_t is None:
        raise ValueError("degenerate histogram")
    return best_t
