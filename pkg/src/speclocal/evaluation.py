"""CorLoc evaluation: IoU, per-image verdicts, per-class and overall rates."""
from collections import OrderedDict
from dataclasses import dataclass, field
import re

from .boxes import BBox, BoxError

CORLOC_THRESHOLD = 0.5


class GroundTruthError(ValueError):
    pass


def iou(a, b):
    """Intersection over union with continuous areas ``w * h``."""
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def image_correct(pred, gts):
    """``(correct, best_iou)``: correct when any ground truth overlaps with IoU > 0.5."""
    if not gts:
        raise GroundTruthError("image has no ground-truth boxes")
    best = max(iou(pred, g) for g in gts)
    return best > CORLOC_THRESHOLD, best


@dataclass
class ClassStats:
    images: int = 0
    correct: int = 0

    @property
    def corloc(self):
        return 100.0 * self.correct / self.images if self.images else 0.0


@dataclass
class ImageVerdict:
    image_id: str
    correct: bool
    best_iou: float


@dataclass
class CorLocReport:
    per_class: dict
    verdicts: list
    skipped: list = field(default_factory=list)

    @property
    def class_mean(self):
        """Unweighted mean of the per-class percentages."""
        if not self.per_class:
            return 0.0
        return sum(c.corloc for c in self.per_class.values()) / len(self.per_class)

    @property
    def image_level(self):
        if not self.verdicts:
            return 0.0
        return 100.0 * sum(v.correct for v in self.verdicts) / len(self.verdicts)

    def as_dict(self):
        return {
            "per_class": {
                name: {"images": c.images, "correct": c.correct, "corloc": c.corloc}
                for name, c in self.per_class.items()
            },
            "class_mean_corloc": self.class_mean,
            "image_level_corloc": self.image_level,
            "images": len(self.verdicts),
            "skipped": list(self.skipped),
            "verdicts": [
                {"image_id": v.image_id, "correct": v.correct, "best_iou": v.best_iou}
                for v in self.verdicts
            ],
        }

    def format_table(self):
        names = list(self.per_class)
        head = ["Class"] + names + ["Average (%)"]
        row = ["CorLoc"] + [f"{self.per_class[n].corloc:.2f}" for n in names] + [f"{self.class_mean:.2f}"]
        widths = [max(len(h), len(r)) for h, r in zip(head, row)]
        lines = [
            " | ".join(h.ljust(w) for h, w in zip(head, widths)),
            "-+-".join("-" * w for w in widths),
            " | ".join(r.ljust(w) for r, w in zip(row, widths)),
            f"image-level CorLoc: {self.image_level:.2f}% over {len(self.verdicts)} images",
        ]
        if self.skipped:
            lines.append(f"skipped (no result): {len(self.skipped)} images")
        return "\n".join(lines)


def corloc_dataset(results, gt):
    """Aggregate verdicts over ``results`` (image id -> predicted BBox or None).

    ``gt`` maps image id to a list of ``(class_label, BBox)``.  An image counts
    toward every class it holds an instance of, and is correct for that class
    when its prediction beats the threshold on one of that class's boxes.
    A ``None`` prediction (a failure record) counts as a miss.  Ground-truth
    ids without a result are listed as skipped.
    """
    missing = sorted(set(results) - set(gt))
    if missing:
        raise GroundTruthError(f"no ground truth for: {', '.join(missing)}")
    per_class = OrderedDict()
    for name in sorted({label for items in gt.values() for label, _ in items}):
        per_class[name] = ClassStats()
    verdicts = []
    for image_id in sorted(results):
        pred = results[image_id]
        instances = gt[image_id]
        if pred is None:
            ok, best = False, 0.0
        else:
            ok, best = image_correct(pred, [b for _, b in instances])
        verdicts.append(ImageVerdict(image_id, ok, best))
        for label in sorted({label for label, _ in instances}):
            cls_ok = pred is not None and image_correct(
                pred, [b for lab, b in instances if lab == label]
            )[0]
            per_class[label].images += 1
            per_class[label].correct += int(cls_ok)
    per_class = OrderedDict((k, v) for k, v in per_class.items() if v.images)
    skipped = sorted(set(gt) - set(results))
    return CorLocReport(per_class, verdicts, skipped)


_SPLIT = re.compile(r"[,\s]+")


def load_ground_truth(path):
    """Parse ``image_id class x y w h`` records into ``{image_id: [(class, BBox), ...]}``."""
    index = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise GroundTruthError(f"{path}: cannot read ground truth ({exc})") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in _SPLIT.split(line) if f]
        if len(fields) != 6:
            raise GroundTruthError(f"{path}:{lineno}: expected 'image_id class x y w h'")
        try:
            box = BBox(*(float(v) for v in fields[2:]))
        except (ValueError, BoxError) as exc:
            raise GroundTruthError(f"{path}:{lineno}: {exc}") from None
        index.setdefault(fields[0], []).append((fields[1], box))
    if not index:
        raise GroundTruthError(f"{path}: no ground-truth records")
    return index
