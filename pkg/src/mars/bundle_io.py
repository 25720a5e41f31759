"""Episode bundle serialization.

A bundle is a directory holding one ``manifest.txt`` plus one tensor file
per array field.  The manifest is flat UTF-8 ``key=value`` text; sequence
fields use indexed keys (``support_patch_features_0``, ...).  Tensor files
carry an 8-byte magic ``MARSTEN1``, a u8 dtype code (0 = f32, 1 = u8), a
u8 rank, ``ndim`` u32 little-endian extents, then the row-major payload in
little-endian byte order.  Loading validates everything and never repairs
silently: each violation raises a distinct error naming the offending
file and field.

Binary masks travel as run-length text: first line ``H W``, second line
space-separated run lengths over the row-major flattening, alternating
starting with background (a mask whose first pixel is foreground gets a
leading zero run).  Runs must sum to exactly H*W.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    InvalidValue,
    IoFailure,
    MagicMismatch,
    MissingTensor,
    NonFiniteValue,
    RleOverrun,
    ShapeMismatch,
)

TENSOR_MAGIC = b"MARSTEN1"

DTYPE_F32 = 0
DTYPE_U8 = 1

_CODE_TO_DTYPE = {DTYPE_F32: np.dtype("<f4"), DTYPE_U8: np.dtype("u1")}
_DTYPE_TO_CODE = {np.dtype(np.float32): DTYPE_F32, np.dtype(np.uint8): DTYPE_U8}

_INDEXED_FIELDS = ("support_patch_features", "support_masks_patch", "mask_image_embeddings")
_SCALAR_TENSOR_FIELDS = (
    "query_patch_features",
    "dino_attention",
    "clip_text_alignment",
    "clip_attention",
    "text_embedding",
)
_TEXT_FIELDS = ("class_name", "class_description")
_INDEXED_RE = re.compile(r"^(" + "|".join(_INDEXED_FIELDS) + r")_(\d+)$")


# -- tensor files ------------------------------------------------------------

def write_tensor(path: Path | str, array: np.ndarray) -> None:
    """Serialize a float32 or uint8 array, preserving payload bytes exactly."""
    array = np.ascontiguousarray(array)
    code = _DTYPE_TO_CODE.get(array.dtype)
    if code is None:
        raise ShapeMismatch(f"{path}: dtype {array.dtype} is not serializable (want float32 or uint8)")
    if array.ndim < 1:
        raise ShapeMismatch(f"{path}: rank-0 tensors are not serializable")
    header = struct.pack("<8sBB", TENSOR_MAGIC, code, array.ndim)
    extents = struct.pack(f"<{array.ndim}I", *array.shape)
    payload = array.astype(array.dtype.newbyteorder("<"), copy=False).tobytes(order="C")
    try:
        Path(path).write_bytes(header + extents + payload)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def read_tensor(path: Path | str, field: str = "tensor") -> np.ndarray:
    """Load one tensor file, checking magic, header, payload size, finiteness."""
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise MissingTensor(f"{field}: tensor file {path} is absent") from exc
    except OSError as exc:
        raise IoFailure(f"{field}: cannot read {path}: {exc}") from exc
    if len(raw) < 10:
        raise BadHeader(f"{field}: {path} is too short for a tensor header")
    magic, code, ndim = struct.unpack_from("<8sBB", raw)
    if magic != TENSOR_MAGIC:
        raise MagicMismatch(f"{field}: {path} starts with {magic!r}, expected {TENSOR_MAGIC!r}")
    dtype = _CODE_TO_DTYPE.get(code)
    if dtype is None:
        raise BadHeader(f"{field}: {path} declares unknown dtype code {code}")
    if ndim < 1:
        raise BadHeader(f"{field}: {path} declares rank 0")
    if len(raw) < 10 + 4 * ndim:
        raise BadHeader(f"{field}: {path} is truncated inside the extent list")
    shape = struct.unpack_from(f"<{ndim}I", raw, 10)
    if any(n == 0 for n in shape):
        raise BadHeader(f"{field}: {path} declares a zero extent {shape}")
    count = int(np.prod(shape, dtype=np.int64))
    expected = 10 + 4 * ndim + count * dtype.itemsize
    if len(raw) != expected:
        raise ShapeMismatch(
            f"{field}: {path} payload is {len(raw) - 10 - 4 * ndim} bytes, "
            f"shape {shape} needs {count * dtype.itemsize}"
        )
    array = np.frombuffer(raw, dtype=dtype, count=count, offset=10 + 4 * ndim).reshape(shape)
    if dtype.kind == "f" and not np.isfinite(array).all():
        raise NonFiniteValue(f"{field}: {path} contains NaN or Inf")
    return array.copy()


# -- feature bundle ----------------------------------------------------------

@dataclass
class FeatureBundle:
    """All per-episode arrays the scorer consumes, already on patch grids."""

    query_patch_features: np.ndarray          # (h_d, w_d, d_d) f32
    support_patch_features: list[np.ndarray]  # K x (h_d, w_d, d_d) f32
    support_masks_patch: list[np.ndarray]     # K x (h_d, w_d) u8, binary
    dino_attention: np.ndarray                # (L_d, h_d*w_d, h_d*w_d) f32
    clip_text_alignment: np.ndarray           # (h_c, w_c) f32, non-negative
    clip_attention: np.ndarray                # (L_c, h_c*w_c, h_c*w_c) f32
    text_embedding: np.ndarray                # (d_a,) f32
    mask_image_embeddings: list[np.ndarray]   # N x (d_a,) f32, one per proposal
    class_name: str
    class_description: str

    @property
    def patch_grid(self) -> tuple[int, int]:
        return self.query_patch_features.shape[0], self.query_patch_features.shape[1]

    @property
    def clip_grid(self) -> tuple[int, int]:
        return self.clip_text_alignment.shape[0], self.clip_text_alignment.shape[1]

    def validate(self) -> None:
        q = self.query_patch_features
        if q.ndim != 3:
            raise ShapeMismatch(f"query_patch_features: rank {q.ndim}, expected 3")
        h, w, d = q.shape
        if not self.support_patch_features:
            raise MissingTensor("support_patch_features: bundle has no support shots")
        if len(self.support_patch_features) != len(self.support_masks_patch):
            raise ShapeMismatch(
                f"support_masks_patch: {len(self.support_masks_patch)} masks for "
                f"{len(self.support_patch_features)} support shots"
            )
        for i, feats in enumerate(self.support_patch_features):
            if feats.shape != (h, w, d):
                raise ShapeMismatch(
                    f"support_patch_features_{i}: shape {feats.shape}, expected {(h, w, d)}"
                )
        for i, mask in enumerate(self.support_masks_patch):
            if mask.shape != (h, w):
                raise ShapeMismatch(f"support_masks_patch_{i}: shape {mask.shape}, expected {(h, w)}")
            _require_binary(mask, f"support_masks_patch_{i}")
            if not mask.any():
                raise InvalidValue(f"support_masks_patch_{i}: no foreground patch")
        _require_attention(self.dino_attention, h * w, "dino_attention")
        ta = self.clip_text_alignment
        if ta.ndim != 2:
            raise ShapeMismatch(f"clip_text_alignment: rank {ta.ndim}, expected 2")
        if (ta < 0).any():
            raise InvalidValue("clip_text_alignment: raw map has negative entries")
        _require_attention(self.clip_attention, ta.shape[0] * ta.shape[1], "clip_attention")
        e = self.text_embedding
        if e.ndim != 1:
            raise ShapeMismatch(f"text_embedding: rank {e.ndim}, expected 1")
        for i, emb in enumerate(self.mask_image_embeddings):
            if emb.shape != e.shape:
                raise ShapeMismatch(
                    f"mask_image_embeddings_{i}: shape {emb.shape}, expected {e.shape}"
                )


def _require_binary(mask: np.ndarray, field: str) -> None:
    if not np.isin(mask, (0, 1)).all():
        raise InvalidValue(f"{field}: mask entries outside {{0, 1}}")


def _require_attention(att: np.ndarray, tokens: int, field: str) -> None:
    if att.ndim != 3:
        raise ShapeMismatch(f"{field}: rank {att.ndim}, expected 3")
    if att.shape[1] != tokens or att.shape[2] != tokens:
        raise ShapeMismatch(f"{field}: shape {att.shape}, expected (*, {tokens}, {tokens})")
    if (att < 0).any():
        raise InvalidValue(f"{field}: attention rows must be non-negative")


def _expect_dtype(array: np.ndarray, dtype: type, field: str) -> np.ndarray:
    if array.dtype != np.dtype(dtype):
        raise ShapeMismatch(f"{field}: dtype {array.dtype}, expected {np.dtype(dtype)}")
    return array


def read_bundle(path: Path | str) -> FeatureBundle:
    """Load and fully validate a bundle directory."""
    root = Path(path)
    manifest_path = root / "manifest.txt"
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise IoFailure(f"manifest: {manifest_path} not found") from exc
    except OSError as exc:
        raise IoFailure(f"manifest: cannot read {manifest_path}: {exc}") from exc

    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise BadHeader(f"manifest: line {lineno} is not key=value: {line!r}")
        key, value = line.split("=", 1)
        if key in entries:
            raise BadHeader(f"manifest: duplicate key {key!r}")
        entries[key] = value

    known = set(_SCALAR_TENSOR_FIELDS) | set(_TEXT_FIELDS)
    for key in entries:
        if key not in known and not _INDEXED_RE.match(key):
            raise BadHeader(f"manifest: unknown key {key!r}")
    for field in _TEXT_FIELDS:
        if field not in entries:
            raise BadHeader(f"manifest: missing {field}")
    for field in _SCALAR_TENSOR_FIELDS:
        if field not in entries:
            raise MissingTensor(f"{field}: not listed in manifest")

    def load(field: str, dtype: type) -> np.ndarray:
        rel = entries[field]
        if not rel or rel.startswith(("/", "\\")) or ".." in Path(rel).parts:
            raise BadHeader(f"manifest: {field} has unusable path {rel!r}")
        return _expect_dtype(read_tensor(root / rel, field), dtype, field)

    def load_indexed(prefix: str, dtype: type, required: bool) -> list[np.ndarray]:
        indices = sorted(
            int(m.group(2)) for k in entries if (m := _INDEXED_RE.match(k)) and m.group(1) == prefix
        )
        if indices != list(range(len(indices))):
            raise BadHeader(f"manifest: {prefix} indices {indices} are not contiguous from 0")
        if required and not indices:
            raise MissingTensor(f"{prefix}_0: not listed in manifest")
        return [load(f"{prefix}_{i}", dtype) for i in indices]

    bundle = FeatureBundle(
        query_patch_features=load("query_patch_features", np.float32),
        support_patch_features=load_indexed("support_patch_features", np.float32, required=True),
        support_masks_patch=load_indexed("support_masks_patch", np.uint8, required=True),
        dino_attention=load("dino_attention", np.float32),
        clip_text_alignment=load("clip_text_alignment", np.float32),
        clip_attention=load("clip_attention", np.float32),
        text_embedding=load("text_embedding", np.float32),
        mask_image_embeddings=load_indexed("mask_image_embeddings", np.float32, required=False),
        class_name=entries["class_name"],
        class_description=entries["class_description"],
    )
    bundle.validate()
    return bundle


def write_bundle(bundle: FeatureBundle, path: Path | str) -> None:
    """Write a validated bundle as manifest plus one tensor file per field."""
    bundle.validate()
    for field in _TEXT_FIELDS:
        value = getattr(bundle, field)
        if "\n" in value or "\r" in value:
            raise InvalidValue(f"{field}: newlines are not representable in the manifest")
    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"bundle: cannot create {root}: {exc}") from exc

    lines = [f"class_name={bundle.class_name}", f"class_description={bundle.class_description}"]
    tensors: list[tuple[str, np.ndarray]] = [(f, getattr(bundle, f)) for f in _SCALAR_TENSOR_FIELDS]
    for prefix in _INDEXED_FIELDS:
        for i, array in enumerate(getattr(bundle, prefix)):
            tensors.append((f"{prefix}_{i}", array))
    for field, array in tensors:
        filename = f"{field}.mten"
        lines.append(f"{field}={filename}")
        write_tensor(root / filename, array)
    try:
        (root / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"manifest: cannot write {root / 'manifest.txt'}: {exc}") from exc


# -- mask proposals and run-length text --------------------------------------

@dataclass
class MaskProposal:
    """One candidate mask at full resolution, optionally pooled to a patch grid."""

    id: int
    mask_full: np.ndarray               # (H, W) u8, binary
    mask_patch: np.ndarray | None = None  # (h, w) u8, binary

    def with_patch_grid(self, grid: tuple[int, int]) -> "MaskProposal":
        """Return a copy carrying the max-pool of mask_full onto ``grid``.

        When a patch mask is already attached it must equal the pooled one;
        a disagreement means the two resolutions describe different masks.
        """
        pooled = max_pool_mask(self.mask_full, grid)
        if self.mask_patch is not None and not np.array_equal(self.mask_patch, pooled):
            raise InvalidValue(f"proposal {self.id}: mask_patch is not the max-pool of mask_full")
        return replace(self, mask_patch=pooled)


def max_pool_mask(mask_full: np.ndarray, grid: tuple[int, int]) -> np.ndarray:
    """Max-pool a binary pixel mask onto an h x w patch grid.

    Window edges follow the adaptive rule [floor(i*H/h), ceil((i+1)*H/h)),
    which partitions exactly when H is divisible by h and otherwise lets
    neighboring windows share a row or column so none is ever empty.
    """
    if mask_full.ndim != 2:
        raise ShapeMismatch(f"mask_full: rank {mask_full.ndim}, expected 2")
    _require_binary(mask_full, "mask_full")
    big_h, big_w = mask_full.shape
    h, w = grid
    if h < 1 or w < 1:
        raise ShapeMismatch(f"patch grid {grid} must be at least 1 x 1")
    row_starts = [(i * big_h) // h for i in range(h)]
    row_ends = [-(-((i + 1) * big_h) // h) for i in range(h)]
    col_starts = [(j * big_w) // w for j in range(w)]
    col_ends = [-(-((j + 1) * big_w) // w) for j in range(w)]
    out = np.zeros((h, w), dtype=np.uint8)
    for i in range(h):
        band = mask_full[row_starts[i] : row_ends[i]]
        for j in range(w):
            out[i, j] = 1 if band[:, col_starts[j] : col_ends[j]].any() else 0
    return out


def encode_rle(mask: np.ndarray) -> str:
    """Encode a binary mask as two lines: ``H W`` then the run lengths."""
    if mask.ndim != 2:
        raise ShapeMismatch(f"mask: rank {mask.ndim}, expected 2")
    _require_binary(mask, "mask")
    flat = mask.ravel().astype(np.int64)
    boundaries = np.flatnonzero(np.diff(flat))
    edges = np.concatenate(([0], boundaries + 1, [flat.size]))
    runs = np.diff(edges).tolist()
    if flat[0] == 1:
        runs.insert(0, 0)
    h, w = mask.shape
    return f"{h} {w}\n{' '.join(str(r) for r in runs)}\n"


def decode_rle(text: str) -> np.ndarray:
    """Decode one two-line run-length record back into a binary mask."""
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) != 2:
        raise BadHeader(f"rle: expected 2 lines (header, runs), got {len(lines)}")
    return _decode_record(lines[0], lines[1])


def _decode_record(header: str, runs_line: str) -> np.ndarray:
    parts = header.split()
    if len(parts) != 2:
        raise BadHeader(f"rle: header {header!r} is not 'H W'")
    try:
        h, w = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise BadHeader(f"rle: header {header!r} is not 'H W'") from exc
    if h < 1 or w < 1:
        raise BadHeader(f"rle: mask extent {h} x {w} is not positive")
    try:
        runs = [int(tok) for tok in runs_line.split()]
    except ValueError as exc:
        raise BadHeader(f"rle: runs line contains a non-integer token") from exc
    if not runs:
        raise BadHeader("rle: runs line is empty")
    if any(r < 0 for r in runs):
        raise BadHeader("rle: negative run length")
    if any(r == 0 for r in runs[1:]):
        raise BadHeader("rle: zero-length run after the first")
    total = sum(runs)
    if total != h * w:
        raise RleOverrun(f"rle: runs sum to {total} for a {h} x {w} mask ({h * w} pixels)")
    values = (np.arange(len(runs)) % 2).astype(np.uint8)
    return np.repeat(values, runs).reshape(h, w)


def _parse_records(text: str, path: Path | str) -> list[np.ndarray]:
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) % 2 != 0:
        raise BadHeader(f"{path}: odd line count {len(lines)}, records are header + runs pairs")
    return [_decode_record(lines[i], lines[i + 1]) for i in range(0, len(lines), 2)]


def read_proposals(path: Path | str) -> list[MaskProposal]:
    """Read a concatenated run-length file into proposals, ids by position."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"proposals: cannot read {path}: {exc}") from exc
    masks = _parse_records(text, path)
    for i, mask in enumerate(masks[1:], start=1):
        if mask.shape != masks[0].shape:
            raise ShapeMismatch(
                f"proposals: record {i} is {mask.shape}, record 0 is {masks[0].shape}"
            )
    return [MaskProposal(id=i, mask_full=mask) for i, mask in enumerate(masks)]


def write_proposals(masks: list[np.ndarray], path: Path | str) -> None:
    """Write masks as consecutive run-length records."""
    text = "".join(encode_rle(mask) for mask in masks)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"proposals: cannot write {path}: {exc}") from exc


def write_prediction(mask: np.ndarray, path: Path | str) -> None:
    """Write one mask as a single run-length record."""
    try:
        Path(path).write_text(encode_rle(mask), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"prediction: cannot write {path}: {exc}") from exc


def read_prediction(path: Path | str) -> np.ndarray:
    """Read a file holding exactly one run-length record."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"prediction: cannot read {path}: {exc}") from exc
    masks = _parse_records(text, path)
    if len(masks) != 1:
        raise BadHeader(f"{path}: expected exactly one mask record, found {len(masks)}")
    return masks[0]
