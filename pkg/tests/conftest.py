import numpy as np
import pytest

from phenoscale.annotations import Annotation, BBox, Prediction


def philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def random_box(rng, span=50.0, min_side=2.0, max_side=14.0) -> BBox:
    x0 = rng.uniform(0, span)
    y0 = rng.uniform(0, span)
    return BBox(x0, y0, x0 + rng.uniform(min_side, max_side),
                y0 + rng.uniform(min_side, max_side))


def random_instance(rng, max_images=5, max_gt=10, max_preds=10):
    """Random multi-image gt/prediction pair with distinct scores."""
    n_images = int(rng.integers(1, max_images + 1))
    gt = {}
    preds = []
    scores = (rng.permutation(100003)[: max_images * max_preds] + 0.5) / 100004.0
    cursor = 0
    for i in range(n_images):
        image_id = f"img{i}"
        gt[image_id] = Annotation(
            image_id, [random_box(rng) for _ in range(int(rng.integers(0, max_gt + 1)))]
        )
        for _ in range(int(rng.integers(0, max_preds + 1))):
            boxes = gt[image_id].boxes
            if boxes and rng.uniform() < 0.6:
                src = boxes[int(rng.integers(0, len(boxes)))]
                dx, dy = rng.uniform(-4.0, 4.0, size=2)
                x0 = max(0.0, src.x_min + dx)
                y0 = max(0.0, src.y_min + dy)
                box = BBox(x0, y0, max(x0 + 1.0, src.x_max + dx),
                           max(y0 + 1.0, src.y_max + dy))
            else:
                box = random_box(rng)
            preds.append(Prediction(image_id, box, float(scores[cursor])))
            cursor += 1
    return gt, preds


@pytest.fixture(scope="session")
def small_field():
    from phenoscale.synthfield import SynthFieldParams, generate_field

    return generate_field(SynthFieldParams(rows=2, plants_per_row=3, seed=11))
