"""Plug-and-play ranking of segmentation mask proposals.

Given a bundle of frozen-backbone features for one few-shot episode and a
set of candidate masks, the engine scores each candidate on four axes
(local/global x conceptual/visual), filters by a two-stage threshold, and
merges the survivors into the final prediction.
"""

from .bundle_io import (
    FeatureBundle,
    MaskProposal,
    decode_rle,
    encode_rle,
    max_pool_mask,
    read_bundle,
    read_prediction,
    read_proposals,
    read_tensor,
    write_bundle,
    write_prediction,
    write_proposals,
    write_tensor,
)
from .errors import MarsError
from .eval_harness import EpisodeResult, episode_result, iou, miou, per_class_iou
from .pipeline import RankConfig, RankResult, rank_proposals
from .saliency import AttentionStack, SaliencyMap, minmax_normalize, pir, refine_text_alignment
from .scoring import (
    ALL_COMPONENTS,
    CoverageContext,
    ScoreCard,
    coverage,
    fuse,
    global_conceptual,
    global_visual,
    local_score,
)
from .select_merge import FilterConfig, filter_proposals, merge
from .transport import TransportProblem, emd_oracle, masked_distributions, solve_emd
from .visual import CostMatrix, SimilaritySplit, build_cost, build_rva, build_similarity

__all__ = [
    "ALL_COMPONENTS",
    "AttentionStack",
    "CostMatrix",
    "CoverageContext",
    "EpisodeResult",
    "FeatureBundle",
    "FilterConfig",
    "MarsError",
    "MaskProposal",
    "RankConfig",
    "RankResult",
    "SaliencyMap",
    "ScoreCard",
    "SimilaritySplit",
    "TransportProblem",
    "build_cost",
    "build_rva",
    "build_similarity",
    "coverage",
    "decode_rle",
    "emd_oracle",
    "encode_rle",
    "episode_result",
    "filter_proposals",
    "fuse",
    "global_conceptual",
    "global_visual",
    "iou",
    "local_score",
    "masked_distributions",
    "max_pool_mask",
    "merge",
    "minmax_normalize",
    "miou",
    "per_class_iou",
    "pir",
    "rank_proposals",
    "read_bundle",
    "read_prediction",
    "read_proposals",
    "read_tensor",
    "refine_text_alignment",
    "solve_emd",
    "write_bundle",
    "write_prediction",
    "write_proposals",
    "write_tensor",
]
