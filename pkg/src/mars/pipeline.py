"""End-to-end ranking: score every proposal, filter, merge.

This is the orchestration the CLI drives.  All knobs live in RankConfig
with their stock defaults; per-proposal scoring may run on a thread pool
but results are collected in input order, so the outcome is identical
for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bundle_io import FeatureBundle, MaskProposal
from .errors import EmptyInput, InvalidValue, NoComponents, ShapeMismatch
from .saliency import (
    CLIP_PIR_LAYERS,
    CLIP_PIR_THRESHOLD,
    DINO_PIR_THRESHOLD,
    AttentionStack,
    SaliencyMap,
    last_layers,
    refine_text_alignment,
)
from .scoring import (
    ALL_COMPONENTS,
    ALPHA,
    CoverageContext,
    GC,
    GV,
    LC,
    LV,
    ScoreCard,
    fuse,
    global_conceptual,
    global_visual,
    local_score,
)
from .select_merge import TH_DYNAMIC, TH_STATIC, FilterConfig, filter_proposals, merge
from .visual import build_cost, build_rva, build_similarity


@dataclass
class RankConfig:
    """Every tunable of the ranking pipeline, stock values preloaded."""

    alpha: float = ALPHA
    th_static: float = TH_STATIC
    th_dynamic: float = TH_DYNAMIC
    clip_pir_threshold: float = CLIP_PIR_THRESHOLD
    dino_pir_threshold: float = DINO_PIR_THRESHOLD
    clip_pir_layers: int = CLIP_PIR_LAYERS  # last N layers; 0 means all
    dino_pir_layers: int = 0                # last N layers; 0 means all
    components: frozenset[str] = field(default_factory=lambda: frozenset(ALL_COMPONENTS))
    jobs: int = 0                           # worker threads; 0 means auto

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidValue(f"alpha = {self.alpha} outside [0, 1]")
        for name in ("clip_pir_threshold", "dino_pir_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidValue(f"{name} = {value} outside [0, 1]")
        FilterConfig(self.th_static, self.th_dynamic).validate()
        if not self.components:
            raise NoComponents("every component is disabled")
        unknown = self.components - set(ALL_COMPONENTS)
        if unknown:
            raise NoComponents(f"unknown components {sorted(unknown)}")
        if self.jobs < 0:
            raise InvalidValue(f"jobs = {self.jobs} is negative")
        if self.clip_pir_layers < 0 or self.dino_pir_layers < 0:
            raise InvalidValue("layer counts must be non-negative")


@dataclass
class RankResult:
    cards: list[ScoreCard]
    selected: set[int]
    dropped: list[int]
    prediction: np.ndarray


def _selection(total: int, last_n: int) -> tuple[int, ...]:
    return last_layers(total, last_n) if last_n > 0 else ()


def rank_proposals(
    bundle: FeatureBundle,
    proposals: list[MaskProposal],
    config: RankConfig | None = None,
) -> RankResult:
    """Score, filter, and merge one episode's proposals.

    Proposals whose pooled patch mask is empty are dropped before scoring
    and reported by id; they can never be selected.
    """
    config = config or RankConfig()
    config.validate()
    if not proposals:
        raise EmptyInput("no proposals to rank")
    if len(bundle.mask_image_embeddings) != len(proposals):
        raise ShapeMismatch(
            f"bundle has {len(bundle.mask_image_embeddings)} mask embeddings "
            f"for {len(proposals)} proposals"
        )

    grid = bundle.patch_grid
    kept: list[MaskProposal] = []
    embeddings: list[np.ndarray] = []
    dropped: list[int] = []
    for proposal, emb in zip(proposals, bundle.mask_image_embeddings):
        pooled = proposal.with_patch_grid(grid)
        if pooled.mask_patch.any():
            kept.append(pooled)
            embeddings.append(emb)
        else:
            dropped.append(proposal.id)
    if not kept:
        raise EmptyInput("every proposal pools to an empty patch mask")

    union = np.zeros(grid, dtype=np.uint8)
    for p in kept:
        union |= p.mask_patch
    ctx = CoverageContext(union_area_patch=int(union.sum()), alpha=config.alpha)

    clip_depth = bundle.clip_attention.shape[0]
    dino_depth = bundle.dino_attention.shape[0]
    rta = refine_text_alignment(
        SaliencyMap(bundle.clip_text_alignment),
        AttentionStack(bundle.clip_attention, _selection(clip_depth, config.clip_pir_layers)),
        pir_threshold=config.clip_pir_threshold,
    )
    split = build_similarity(bundle)
    rva = build_rva(
        split,
        AttentionStack(bundle.dino_attention, _selection(dino_depth, config.dino_pir_layers)),
        pir_threshold=config.dino_pir_threshold,
    )
    cost = build_cost(split)

    def score_one(pair: tuple[MaskProposal, np.ndarray]) -> ScoreCard:
        proposal, emb = pair
        scores = {
            LC: local_score(proposal, rta, ctx),
            GC: global_conceptual(emb, bundle.text_embedding),
            LV: local_score(proposal, rva, ctx),
            GV: global_visual(cost, bundle.support_masks_patch, proposal),
        }
        return fuse(proposal.id, scores, config.components)

    jobs = config.jobs or os.cpu_count() or 1
    pairs = list(zip(kept, embeddings))
    if jobs == 1 or len(pairs) == 1:
        cards = [score_one(pair) for pair in pairs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cards = list(pool.map(score_one, pairs))

    selected = filter_proposals(cards, FilterConfig(config.th_static, config.th_dynamic))
    prediction = merge([p for p in kept if p.id in selected])
    return RankResult(cards=cards, selected=selected, dropped=dropped, prediction=prediction)
