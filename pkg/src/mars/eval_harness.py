"""Episode-level IoU bookkeeping and the per-class mIoU protocol.

Intersections and unions accumulate per class across episodes first;
each class's IoU is the ratio of those sums, and the final figure is the
unweighted mean over classes.  This aggregate differs from averaging
per-episode IoUs and the distinction is pinned by tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidValue, ShapeMismatch


@dataclass(frozen=True)
class EpisodeResult:
    """Raw overlap counts for one episode, tagged by class and fold."""

    intersection: int
    union: int
    class_id: str
    fold: str = ""

    def __post_init__(self) -> None:
        if self.intersection > self.union:
            raise InvalidValue(
                f"intersection {self.intersection} exceeds union {self.union}"
            )
        if self.intersection < 0:
            raise InvalidValue("negative intersection")


def iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """Intersection over union; 1.0 for two empty masks, 0.0 when one is empty."""
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"pred is {pred.shape}, gt is {gt.shape}")
    p = pred.astype(bool)
    g = gt.astype(bool)
    union = int((p | g).sum())
    if union == 0:
        return 1.0
    return float(int((p & g).sum())) / union


def episode_result(
    pred: np.ndarray, gt: np.ndarray, class_id: str, fold: str = ""
) -> EpisodeResult:
    """Count raw overlaps for later aggregation."""
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"pred is {pred.shape}, gt is {gt.shape}")
    p = pred.astype(bool)
    g = gt.astype(bool)
    return EpisodeResult(
        intersection=int((p & g).sum()),
        union=int((p | g).sum()),
        class_id=class_id,
        fold=fold,
    )


def per_class_iou(episodes: list[EpisodeResult]) -> dict[str, float]:
    """Aggregate IoU per class: sum of intersections over sum of unions.

    A class whose episodes are all empty/empty has union 0 and counts as
    perfectly predicted (IoU 1.0).
    """
    if not episodes:
        raise EmptyInput("no episodes to aggregate")
    inter: dict[str, int] = {}
    union: dict[str, int] = {}
    for ep in episodes:
        inter[ep.class_id] = inter.get(ep.class_id, 0) + ep.intersection
        union[ep.class_id] = union.get(ep.class_id, 0) + ep.union
    return {
        cls: (inter[cls] / union[cls]) if union[cls] > 0 else 1.0 for cls in inter
    }


def miou(episodes: list[EpisodeResult]) -> float:
    """Unweighted mean of the per-class aggregate IoUs."""
    by_class = per_class_iou(episodes)
    return sum(by_class.values()) / len(by_class)


def format_report(episodes: list[EpisodeResult]) -> str:
    """Human-readable per-class report followed by a key=value block."""
    by_class = per_class_iou(episodes)
    folds = sorted({ep.fold for ep in episodes if ep.fold})
    lines = []
    width = max(len(cls) for cls in by_class)
    for cls in sorted(by_class):
        count = sum(1 for ep in episodes if ep.class_id == cls)
        lines.append(f"class {cls:<{width}}  iou {by_class[cls]:.6f}  episodes {count}")
    for fold in folds:
        members = [ep for ep in episodes if ep.fold == fold]
        lines.append(f"fold {fold}  miou {miou(members):.6f}  episodes {len(members)}")
    overall = miou(episodes)
    lines.append(f"miou {overall:.6f}")
    lines.append("")
    for cls in sorted(by_class):
        lines.append(f"iou.{cls}={by_class[cls]:.6f}")
    for fold in folds:
        members = [ep for ep in episodes if ep.fold == fold]
        lines.append(f"miou.fold.{fold}={miou(members):.6f}")
    lines.append(f"miou={overall:.6f}")
    return "\n".join(lines) + "\n"
