"""Support-to-query patch similarity and the structures derived from it.

Patch features are L2-normalized and compared by dot product, giving
cosine similarities in [-1, 1].  Rows are routed by the support masks
into foreground and background blocks; the foreground block also yields
the transport cost matrix (1 - s) / 2 in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle_io import FeatureBundle
from .errors import DimMismatch, EmptyForeground, ZeroNormPatch
from .saliency import DINO_PIR_THRESHOLD, AttentionStack, SaliencyMap, minmax_normalize, pir


@dataclass
class SimilaritySplit:
    """Cosine similarities of support patches against every query patch.

    Rows of ``s_fg`` are support foreground patches (stacked shot-major,
    then row-major within the shot); ``s_bg`` holds the rest.  Columns
    run over the query patch grid in row-major order.
    """

    s_fg: np.ndarray                          # (n_fg, h_d*w_d)
    s_bg: np.ndarray                          # (n_bg, h_d*w_d)
    fg_row_origin: list[tuple[int, int]]      # (shot, flat patch index) per s_fg row
    query_grid: tuple[int, int]


@dataclass
class CostMatrix:
    """Transport ground costs, (1 - s_fg) / 2 elementwise."""

    c: np.ndarray                             # (n_fg, h_d*w_d) in [0, 1]


def _unit_rows(flat: np.ndarray, field: str) -> np.ndarray:
    norms = np.linalg.norm(flat, axis=1)
    if (norms == 0).any():
        patch = int(np.flatnonzero(norms == 0)[0])
        raise ZeroNormPatch(f"{field}: patch {patch} has zero norm")
    return flat / norms[:, None]


def build_similarity(bundle: FeatureBundle) -> SimilaritySplit:
    """Compare every support patch with every query patch.

    Support rows whose pooled mask cell is 1 land in ``s_fg``, the rest
    in ``s_bg``.  Stacking is shot-major so multi-shot episodes
    concatenate their foreground patches along the row axis.
    """
    h, w = bundle.patch_grid
    d = bundle.query_patch_features.shape[2]
    query = _unit_rows(
        bundle.query_patch_features.reshape(h * w, d).astype(np.float64), "query_patch_features"
    )
    fg_rows: list[np.ndarray] = []
    bg_rows: list[np.ndarray] = []
    fg_origin: list[tuple[int, int]] = []
    for shot, (feats, mask) in enumerate(
        zip(bundle.support_patch_features, bundle.support_masks_patch)
    ):
        support = _unit_rows(
            feats.reshape(h * w, d).astype(np.float64), f"support_patch_features_{shot}"
        )
        sims = np.clip(support @ query.T, -1.0, 1.0)
        flags = mask.ravel().astype(bool)
        for idx in range(h * w):
            if flags[idx]:
                fg_rows.append(sims[idx])
                fg_origin.append((shot, idx))
            else:
                bg_rows.append(sims[idx])
    if not fg_rows:
        raise EmptyForeground("support masks contain no foreground patch in any shot")
    s_fg = np.stack(fg_rows)
    s_bg = np.stack(bg_rows) if bg_rows else np.zeros((0, h * w))
    return SimilaritySplit(s_fg=s_fg, s_bg=s_bg, fg_row_origin=fg_origin, query_grid=(h, w))


def _mixed_map(rows: np.ndarray, columns: int) -> np.ndarray:
    """Columnwise max times columnwise mean; zero map when no rows exist."""
    if rows.shape[0] == 0:
        return np.zeros(columns)
    return rows.max(axis=0) * rows.mean(axis=0)


def build_rva(
    split: SimilaritySplit,
    attn: AttentionStack,
    pir_threshold: float = DINO_PIR_THRESHOLD,
) -> SaliencyMap:
    """Background-suppressed visual activation of the query grid.

    Foreground and background mixed maps (columnwise max times mean) are
    subtracted, min-max normalized, diffused through the attention stack,
    and normalized again.
    """
    h, w = split.query_grid
    cells = h * w
    if split.s_fg.shape[1] != cells:
        raise DimMismatch(f"s_fg has {split.s_fg.shape[1]} columns for a {h} x {w} grid")
    if attn.tokens != cells:
        raise DimMismatch(f"attention covers {attn.tokens} tokens for a {h} x {w} grid")
    raw = _mixed_map(split.s_fg, cells) - _mixed_map(split.s_bg, cells)
    norm = minmax_normalize(SaliencyMap(raw.reshape(h, w)))
    return pir(norm, attn, pir_threshold)


def build_cost(split: SimilaritySplit) -> CostMatrix:
    """Map similarities to transport costs, identical rows to identical costs."""
    return CostMatrix(c=np.clip((1.0 - split.s_fg) / 2.0, 0.0, 1.0))
