"""Saliency maps and their refinement through self-attention diffusion.

A raw alignment or activation map tends to be patchy: strong on a few
cells of the object, weak elsewhere.  Diffusing it through the backbone's
own self-attention spreads mass between patches the encoder already
considers related, which fills the object interior and suppresses
isolated false activations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, EmptyLayerSelection, InvalidValue

CLIP_PIR_THRESHOLD = 0.4
CLIP_PIR_LAYERS = 8
DINO_PIR_THRESHOLD = 0.85
BOX_THRESHOLD = 0.4


@dataclass
class SaliencyMap:
    """A 2-D per-patch scalar field, flagged once min-max normalized."""

    grid: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=np.float64)
        if self.grid.ndim != 2:
            raise DimMismatch(f"saliency grid has rank {self.grid.ndim}, expected 2")


@dataclass
class AttentionStack:
    """Per-layer token-to-token attention with an aggregation layer choice.

    ``layers`` is (L, T, T), or (L, H, T, T) when per-head maps are kept.
    ``layer_selection`` names the layers averaged by ``pir``; empty means
    all of them.
    """

    layers: np.ndarray
    layer_selection: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        self.layers = np.asarray(self.layers, dtype=np.float64)
        if self.layers.ndim not in (3, 4):
            raise DimMismatch(f"attention stack has rank {self.layers.ndim}, expected 3 or 4")
        if self.layers.shape[-1] != self.layers.shape[-2]:
            raise DimMismatch(f"attention maps are {self.layers.shape[-2:]}, expected square")
        depth = self.layers.shape[0]
        for i in self.layer_selection:
            if not 0 <= i < depth:
                raise EmptyLayerSelection(f"layer {i} outside stack of depth {depth}")

    @property
    def tokens(self) -> int:
        return self.layers.shape[-1]

    def aggregated(self) -> np.ndarray:
        """Mean over the selected layers (and heads, if present)."""
        idx = self.layer_selection or tuple(range(self.layers.shape[0]))
        if not idx:
            raise EmptyLayerSelection("attention stack has no layers")
        chosen = self.layers[list(idx)]
        axes = tuple(range(chosen.ndim - 2))
        return chosen.mean(axis=axes)


def last_layers(depth: int, count: int) -> tuple[int, ...]:
    """Indices of the last ``count`` layers, or all when the stack is shallower."""
    return tuple(range(max(0, depth - count), depth))


def minmax_normalize(sal: SaliencyMap) -> SaliencyMap:
    """Rescale to [0, 1] via (v - min) / (max - min); constant maps go to zero."""
    grid = sal.grid
    lo = grid.min()
    hi = grid.max()
    if hi == lo:
        return SaliencyMap(np.zeros_like(grid), normalized=True)
    return SaliencyMap((grid - lo) / (hi - lo), normalized=True)


def _propagation_matrix(attn: AttentionStack, pir_threshold: float) -> np.ndarray:
    mat = attn.aggregated()
    row_max = mat.max(axis=1, keepdims=True)
    mat = np.where(mat < pir_threshold * row_max, 0.0, mat)
    sums = mat.sum(axis=1, keepdims=True)
    tokens = mat.shape[1]
    uniform = np.full_like(mat, 1.0 / tokens)
    with np.errstate(invalid="ignore", divide="ignore"):
        mat = np.where(sums > 0, mat / np.where(sums == 0, 1.0, sums), uniform)
    return mat


def pir(sal: SaliencyMap, attn: AttentionStack, pir_threshold: float) -> SaliencyMap:
    """Propagate a normalized map through thresholded, row-stochastic attention.

    The aggregated attention has each row's entries below
    ``pir_threshold * row_max`` zeroed, is renormalized to row sums of one
    (all-zero rows become uniform), then acts as a linear operator on the
    flattened map.  The result is min-max normalized, so identity attention
    reproduces a normalized input exactly.
    """
    if not sal.normalized:
        raise ValueError("pir input map must be min-max normalized first")
    if not 0.0 <= pir_threshold <= 1.0:
        raise ValueError(f"pir_threshold {pir_threshold} outside [0, 1]")
    cells = sal.grid.size
    if attn.tokens != cells:
        raise DimMismatch(f"map has {cells} cells but attention covers {attn.tokens} tokens")
    mat = _propagation_matrix(attn, pir_threshold)
    flat = mat @ sal.grid.ravel()
    return minmax_normalize(SaliencyMap(flat.reshape(sal.grid.shape)))


def _box_gate(norm_grid: np.ndarray, box_threshold: float) -> np.ndarray:
    """Binary mask of the tight bounding rectangle of cells >= threshold."""
    rows, cols = np.nonzero(norm_grid >= box_threshold)
    gate = np.zeros_like(norm_grid)
    if rows.size:
        gate[rows.min() : rows.max() + 1, cols.min() : cols.max() + 1] = 1.0
    return gate


def refine_text_alignment(
    ta_raw: SaliencyMap,
    attn: AttentionStack,
    box_threshold: float = BOX_THRESHOLD,
    pir_threshold: float = CLIP_PIR_THRESHOLD,
) -> SaliencyMap:
    """Refine a raw text-alignment map into a box-gated, diffused one.

    The raw map is min-max normalized, then thresholded at
    ``box_threshold``; the tight bounding box of the surviving cells
    becomes a binary gate.  The normalized map is attention-diffused,
    multiplied cellwise by the gate, and normalized once more, so every
    cell outside the box is exactly zero.
    """
    if (ta_raw.grid < 0).any():
        raise InvalidValue("raw text alignment has negative entries")
    norm = minmax_normalize(ta_raw)
    gate = _box_gate(norm.grid, box_threshold)
    diffused = pir(norm, attn, pir_threshold)
    return minmax_normalize(SaliencyMap(gate * diffused.grid))
