"""The four per-proposal scores and their fusion.

Each proposal earns a local conceptual, global conceptual, local visual,
and global visual score, all in [0, 1].  The final rank score is the
arithmetic mean over whichever components are enabled; disabled ones are
still recorded on the card so ablation tables keep full information.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle_io import MaskProposal, max_pool_mask
from .errors import (
    DimMismatch,
    EmptyPatchMask,
    EmptyUnion,
    NoComponents,
    ZeroEmbedding,
)
from .saliency import SaliencyMap
from .transport import masked_distributions, solve_emd
from .visual import CostMatrix

ALPHA = 0.85

LC = "lc"
GC = "gc"
LV = "lv"
GV = "gv"
ALL_COMPONENTS = (LC, GC, LV, GV)


@dataclass(frozen=True)
class ScoreCard:
    """All four scores for one proposal plus their fused mean."""

    proposal_id: int
    lc: float
    gc: float
    lv: float
    gv: float
    mars: float
    components_enabled: frozenset[str]

    def score(self, component: str) -> float:
        return {LC: self.lc, GC: self.gc, LV: self.lv, GV: self.gv}[component]


@dataclass
class CoverageContext:
    """Shared denominator for coverage: the OR of all proposals' patch areas."""

    union_area_patch: int
    alpha: float = ALPHA


def coverage(m: MaskProposal, ctx: CoverageContext) -> float:
    """Patch-grid area of the proposal over the area of the union."""
    if ctx.union_area_patch < 1:
        raise EmptyUnion("union of proposal patch masks covers no cell")
    if m.mask_patch is None:
        raise EmptyPatchMask(f"proposal {m.id}: no patch-grid mask attached")
    return float(m.mask_patch.sum()) / float(ctx.union_area_patch)


def local_score(m: MaskProposal, sal: SaliencyMap, ctx: CoverageContext) -> float:
    """alpha * mean saliency over the proposal's cells + (1 - alpha) * coverage.

    The saliency mean is taken on the map's own grid; when the attached
    patch mask lives on a different grid (text alignment maps may use a
    coarser one), the full mask is pooled onto the map's grid just for
    the mean.  Coverage always uses the canonical patch grid.
    """
    if not sal.normalized:
        raise ValueError("local_score expects a min-max normalized saliency map")
    if m.mask_patch is None:
        raise EmptyPatchMask(f"proposal {m.id}: no patch-grid mask attached")
    if m.mask_patch.shape == sal.grid.shape:
        cells = m.mask_patch.astype(bool)
    else:
        cells = max_pool_mask(m.mask_full, sal.grid.shape).astype(bool)
    count = int(cells.sum())
    if count == 0:
        raise EmptyPatchMask(f"proposal {m.id}: mask is empty on the map grid")
    mean_sal = float(sal.grid[cells].sum()) / count
    return ctx.alpha * mean_sal + (1.0 - ctx.alpha) * coverage(m, ctx)


def global_conceptual(e_img: np.ndarray, e_txt: np.ndarray) -> float:
    """Cosine of the two embeddings mapped affinely onto [0, 1]."""
    if e_img.shape != e_txt.shape:
        raise DimMismatch(f"embedding shapes differ: {e_img.shape} vs {e_txt.shape}")
    lhs = np.linalg.norm(e_img)
    rhs = np.linalg.norm(e_txt)
    if lhs == 0 or rhs == 0:
        raise ZeroEmbedding("cannot take the cosine of a zero embedding")
    cos = float(np.dot(e_img.astype(np.float64), e_txt.astype(np.float64)) / (lhs * rhs))
    return min(max((cos + 1.0) / 2.0, 0.0), 1.0)


def global_visual(
    cost: CostMatrix, support_masks_patch: list[np.ndarray], m: MaskProposal
) -> float:
    """One minus the exact transport cost between support FG and the proposal."""
    if m.mask_patch is None:
        raise EmptyPatchMask(f"proposal {m.id}: no patch-grid mask attached")
    problem = masked_distributions(cost, support_masks_patch, m.mask_patch)
    value, _ = solve_emd(problem)
    return min(max(1.0 - value, 0.0), 1.0)


def fuse(
    proposal_id: int,
    scores: dict[str, float],
    components_enabled: frozenset[str],
) -> ScoreCard:
    """Average the enabled components; the rest ride along for reporting."""
    unknown = components_enabled - set(ALL_COMPONENTS)
    if unknown:
        raise NoComponents(f"unknown components {sorted(unknown)}")
    if not components_enabled:
        raise NoComponents("every component is disabled")
    mars = sum(scores[c] for c in components_enabled) / len(components_enabled)
    return ScoreCard(
        proposal_id=proposal_id,
        lc=scores[LC],
        gc=scores[GC],
        lv=scores[LV],
        gv=scores[GV],
        mars=mars,
        components_enabled=components_enabled,
    )
