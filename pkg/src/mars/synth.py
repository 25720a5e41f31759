"""Synthetic episode generators for tests and the synth CLI command.

Two flavors: a fully random valid bundle for property tests, and a
planted-target fixture whose construction makes one proposal dominate
every score while the distractors lose every score, so the engine's
selection on it is known in advance.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .bundle_io import FeatureBundle, write_bundle, write_prediction, write_proposals
from .errors import InvalidValue


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _identity_attention(layers: int, tokens: int) -> np.ndarray:
    return np.tile(np.eye(tokens, dtype=np.float32), (layers, 1, 1))


def planted_fixture(
    seed: int,
    shots: int = 1,
    grid: tuple[int, int] = (8, 8),
    n_proposals: int = 6,
    pixel_scale: int = 4,
    feat_dim: int = 16,
    embed_dim: int = 8,
) -> tuple[FeatureBundle, list[np.ndarray], np.ndarray]:
    """Episode with one target proposal (id 0) and antipodal distractors.

    The target region copies the support foreground feature, carries all
    the text alignment mass, and reuses the text embedding, so it wins
    LC, GC, LV, and GV at once.  Distractor regions get the negated
    feature and embedding, losing all four.  Returns the bundle, the
    full-resolution proposal masks (target first), and the ground truth
    (the target's mask).
    """
    if shots < 1 or n_proposals < 2 or pixel_scale < 1:
        raise InvalidValue("need at least 1 shot, 2 proposals, positive pixel scale")
    h, w = grid
    blocks_h, blocks_w = h // 2, w // 2
    if blocks_h * blocks_w < n_proposals:
        raise InvalidValue(
            f"grid {grid} fits {blocks_h * blocks_w} regions, need {n_proposals}"
        )
    rng = np.random.default_rng(seed)
    u = _unit(rng, feat_dim)
    ortho = rng.standard_normal(feat_dim)
    ortho -= np.dot(ortho, u) * u
    ortho /= np.linalg.norm(ortho)
    e_txt = _unit(rng, embed_dim).astype(np.float32)

    blocks = rng.choice(blocks_h * blocks_w, size=n_proposals, replace=False)

    def block_mask(index: int) -> np.ndarray:
        mask = np.zeros((h, w), dtype=np.uint8)
        r, c = 2 * (index // blocks_w), 2 * (index % blocks_w)
        mask[r : r + 2, c : c + 2] = 1
        return mask

    patch_masks = [block_mask(int(b)) for b in blocks]
    target_patch = patch_masks[0]

    # Query features: target region copies the support FG feature, each
    # distractor region negates it, everything else is orthogonal to it.
    query = np.tile(ortho, (h, w, 1))
    query[target_patch.astype(bool)] = u
    for distractor in patch_masks[1:]:
        query[distractor.astype(bool)] = -u

    # Support: FG cells carry u; BG cells alternate -u and ortho so that
    # the background mixed map stays high on distractor columns (their
    # max over -u rows is 1) and exactly zero on target columns.
    support_mask = block_mask(int(blocks[0]))
    support = np.empty((h, w, feat_dim))
    toggle = 0
    for idx in range(h * w):
        r, c = divmod(idx, w)
        if support_mask[r, c]:
            support[r, c] = u
        else:
            support[r, c] = -u if toggle % 2 == 0 else ortho
            toggle += 1

    ta = np.zeros((h, w), dtype=np.float32)
    ta[target_patch.astype(bool)] = 1.0

    embeddings = [e_txt.copy()] + [(-e_txt).copy() for _ in patch_masks[1:]]
    bundle = FeatureBundle(
        query_patch_features=query.astype(np.float32),
        support_patch_features=[support.astype(np.float32) for _ in range(shots)],
        support_masks_patch=[support_mask.copy() for _ in range(shots)],
        dino_attention=_identity_attention(2, h * w),
        clip_text_alignment=ta,
        clip_attention=_identity_attention(2, h * w),
        text_embedding=e_txt.copy(),
        mask_image_embeddings=embeddings,
        class_name="planted-target",
        class_description="a synthetic planted region among antipodal distractors",
    )
    scale = np.ones((pixel_scale, pixel_scale), dtype=np.uint8)
    full_masks = [np.kron(mask, scale) for mask in patch_masks]
    return bundle, full_masks, full_masks[0].copy()


def random_bundle(
    rng: np.random.Generator,
) -> tuple[FeatureBundle, list[np.ndarray], np.ndarray]:
    """Random valid episode: arbitrary scores, occasionally empty proposals."""
    h = int(rng.integers(2, 6))
    w = int(rng.integers(2, 6))
    hc = int(rng.integers(2, 6))
    wc = int(rng.integers(2, 6))
    d = int(rng.integers(3, 9))
    d_a = int(rng.integers(3, 9))
    shots = int(rng.integers(1, 3))
    n_props = int(rng.integers(2, 5))
    scale_h = int(rng.integers(1, 4))
    scale_w = int(rng.integers(1, 4))
    big_h, big_w = h * scale_h, w * scale_w

    def features() -> np.ndarray:
        return rng.standard_normal((h, w, d)).astype(np.float32)

    def support_mask() -> np.ndarray:
        mask = (rng.random((h, w)) < 0.5).astype(np.uint8)
        if not mask.any():
            mask[rng.integers(0, h), rng.integers(0, w)] = 1
        return mask

    full_masks = []
    for k in range(n_props):
        if k == 0:
            mask = np.zeros((big_h, big_w), dtype=np.uint8)
            r = int(rng.integers(0, big_h))
            c = int(rng.integers(0, big_w))
            mask[r :, c :] = 1
        else:
            mask = (rng.random((big_h, big_w)) < rng.uniform(0.0, 0.6)).astype(np.uint8)
        full_masks.append(mask)

    bundle = FeatureBundle(
        query_patch_features=features(),
        support_patch_features=[features() for _ in range(shots)],
        support_masks_patch=[support_mask() for _ in range(shots)],
        dino_attention=np.abs(
            rng.standard_normal((int(rng.integers(1, 3)), h * w, h * w))
        ).astype(np.float32),
        clip_text_alignment=np.abs(rng.standard_normal((hc, wc))).astype(np.float32),
        clip_attention=np.abs(
            rng.standard_normal((int(rng.integers(1, 3)), hc * wc, hc * wc))
        ).astype(np.float32),
        text_embedding=rng.standard_normal(d_a).astype(np.float32),
        mask_image_embeddings=[
            rng.standard_normal(d_a).astype(np.float32) for _ in range(n_props)
        ],
        class_name="random-episode",
        class_description="a randomly generated synthetic episode",
    )
    gt = full_masks[0].copy()
    return bundle, full_masks, gt


def write_fixture(
    out_dir: Path | str,
    bundle: FeatureBundle,
    full_masks: list[np.ndarray],
    gt: np.ndarray,
) -> None:
    """Lay out one episode on disk: bundle/, proposals.rle, gt.rle."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_bundle(bundle, out / "bundle")
    write_proposals(full_masks, out / "proposals.rle")
    write_prediction(gt, out / "gt.rle")
