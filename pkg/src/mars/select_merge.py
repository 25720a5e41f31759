"""Two-stage threshold filtering and logical-OR merging of scored proposals.

The static stage keeps every proposal at or above a fixed score.  Only
when that leaves nothing does the dynamic stage run, keeping proposals
within a fixed ratio of the best score, so the argmax always survives
and the result is never empty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle_io import MaskProposal
from .errors import EmptyInput, InvalidValue, ShapeMismatch
from .scoring import ScoreCard

TH_STATIC = 0.55
TH_DYNAMIC = 0.95


@dataclass
class FilterConfig:
    th_static: float = TH_STATIC
    th_dynamic: float = TH_DYNAMIC

    def validate(self) -> None:
        for name in ("th_static", "th_dynamic"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise InvalidValue(f"{name} = {value} outside (0, 1]")


def static_stage(cards: list[ScoreCard], th_static: float) -> set[int]:
    """Ids scoring at or above the fixed threshold; ties are kept."""
    return {card.proposal_id for card in cards if card.mars >= th_static}


def dynamic_stage(cards: list[ScoreCard], th_dynamic: float) -> set[int]:
    """Ids within th_dynamic of the best score; never empty."""
    best = max(card.mars for card in cards)
    return {card.proposal_id for card in cards if card.mars >= th_dynamic * best}


def filter_proposals(cards: list[ScoreCard], cfg: FilterConfig) -> set[int]:
    """Static stage first; dynamic fallback only when it selects nothing."""
    cfg.validate()
    if not cards:
        raise EmptyInput("no score cards to filter")
    selected = static_stage(cards, cfg.th_static)
    if not selected:
        selected = dynamic_stage(cards, cfg.th_dynamic)
    return selected


def merge(proposals: list[MaskProposal]) -> np.ndarray:
    """Pixelwise OR of the full-resolution masks."""
    if not proposals:
        raise EmptyInput("no proposals to merge")
    shape = proposals[0].mask_full.shape
    merged = np.zeros(shape, dtype=np.uint8)
    for p in proposals:
        if p.mask_full.shape != shape:
            raise ShapeMismatch(
                f"proposal {p.id}: mask is {p.mask_full.shape}, expected {shape}"
            )
        merged |= p.mask_full.astype(np.uint8)
    return merged
