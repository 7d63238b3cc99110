"""Frozen multi-scale vector quantizer over image patches.

Each scale has an independent k-means codebook over flattened patches.
Encoding assigns every patch the index of its nearest codebook vector
(ties to the lowest index); decoding pastes the finest scale's vectors
back into place, so coarser scales act purely as context tokens for the
autoregressive model.

Codebook file layout (little-endian, see docs/formats.md):
    magic b"VQCB", u32 version, u32 n_scales,
    per scale: u32 grid_h, grid_w, patch_px, K, dim,
    then per scale K*dim float32 vectors.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, InsufficientData

MAGIC = b"VQCB"
VERSION = 1

DEFAULT_K = 64
DEFAULT_ITERS = 25


@dataclass(frozen=True)
class ScaleSpec:
    grid_h: int
    grid_w: int
    patch_px: int

    @property
    def dim(self) -> int:
        return self.patch_px * self.patch_px * 3

    @property
    def tokens(self) -> int:
        return self.grid_h * self.grid_w


def default_scales(canvas: tuple[int, int] = (32, 32)) -> tuple[ScaleSpec, ...]:
    """Coarse-to-fine scale ladder for the given (width, height) canvas."""
    width, height = canvas
    return (
        ScaleSpec(grid_h=height // 8, grid_w=width // 8, patch_px=8),
        ScaleSpec(grid_h=height // 4, grid_w=width // 4, patch_px=4),
    )


@dataclass(frozen=True)
class Codebook:
    scales: tuple[ScaleSpec, ...]
    vectors: tuple[np.ndarray, ...]  # per scale (K, dim) float32, read-only

    @property
    def k(self) -> int:
        return self.vectors[0].shape[0]

    @property
    def total_tokens(self) -> int:
        return sum(s.tokens for s in self.scales)

    def sha256(self) -> str:
        return hashlib.sha256(serialize_codebook(self)).hexdigest()


@dataclass(frozen=True)
class TokenGrid:
    grids: tuple[np.ndarray, ...]  # per scale (grid_h, grid_w) int32

    def flat(self) -> np.ndarray:
        """Coarse-first, raster-order flattening; length = total token count."""
        return np.concatenate([g.reshape(-1) for g in self.grids])

    @classmethod
    def from_flat(cls, flat: np.ndarray, scales: tuple[ScaleSpec, ...]) -> "TokenGrid":
        grids = []
        offset = 0
        for scale in scales:
            n = scale.tokens
            grids.append(np.asarray(flat[offset:offset + n], dtype=np.int32)
                         .reshape(scale.grid_h, scale.grid_w))
            offset += n
        if offset != len(flat):
            raise DimensionMismatch(f"flat length {len(flat)} != expected {offset}")
        return cls(grids=tuple(grids))


def extract_patches(image: np.ndarray, scale: ScaleSpec) -> np.ndarray:
    """(grid_h*grid_w, dim) array of flattened patches in raster order."""
    h, w, c = image.shape
    if h != scale.grid_h * scale.patch_px or w != scale.grid_w * scale.patch_px or c != 3:
        raise DimensionMismatch(
            f"image {image.shape} incompatible with scale {scale}")
    p = scale.patch_px
    patches = image.reshape(scale.grid_h, p, scale.grid_w, p, 3)
    patches = patches.transpose(0, 2, 1, 3, 4)
    return patches.reshape(scale.tokens, scale.dim)


# --- k-means ------------------------------------------------------------------

def _assign(points: np.ndarray, centroids: np.ndarray, chunk: int = 4096):
    """Nearest-centroid assignment; returns (indices, squared distances)."""
    n = points.shape[0]
    idx = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    c_sq = (centroids.astype(np.float64) ** 2).sum(axis=1)
    cT = centroids.astype(np.float64).T
    for start in range(0, n, chunk):
        block = points[start:start + chunk].astype(np.float64)
        d = (block ** 2).sum(axis=1)[:, None] - 2.0 * (block @ cT) + c_sq[None, :]
        np.maximum(d, 0.0, out=d)
        idx[start:start + chunk] = np.argmin(d, axis=1)
        dist[start:start + chunk] = d[np.arange(d.shape[0]), idx[start:start + chunk]]
    return idx, dist


def kmeans(points: np.ndarray, k: int, iters: int, seed: int):
    """Lloyd's algorithm with distinct-sample init and farthest-point reseeding.

    Returns (centroids (k, dim) float32, per-iteration mean squared error).
    The error sequence is non-increasing: assignment and centroid updates
    both lower the objective, and reseeding an empty cluster onto the
    farthest patch can only shorten assignments.
    """
    points = np.ascontiguousarray(points, dtype=np.float32)
    distinct = np.unique(points, axis=0)
    if distinct.shape[0] < k:
        raise InsufficientData(
            f"need >= {k} distinct patches, have {distinct.shape[0]}")
    rng = np.random.default_rng(seed)
    pick = rng.choice(distinct.shape[0], size=k, replace=False)
    centroids = distinct[np.sort(pick)].astype(np.float64)

    errors: list[float] = []
    for _ in range(iters):
        idx, dist = _assign(points, centroids)
        errors.append(float(dist.mean()))
        new_centroids = centroids.copy()
        counts = np.bincount(idx, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, idx, points.astype(np.float64))
        nonempty = counts > 0
        new_centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        if empty.size:
            farthest = np.argsort(-dist)
            for slot, point_i in zip(empty, farthest[: empty.size]):
                new_centroids[slot] = points[point_i].astype(np.float64)
        centroids = new_centroids
    return centroids.astype(np.float32), errors


def fit_codebook(images: list[np.ndarray], k: int = DEFAULT_K,
                 iters: int = DEFAULT_ITERS, seed: int = 0,
                 scales: tuple[ScaleSpec, ...] | None = None) -> Codebook:
    """Fit one k-means codebook per scale over patches from all images."""
    if scales is None:
        h, w, _ = images[0].shape
        scales = default_scales((w, h))
    vectors = []
    for s_i, scale in enumerate(scales):
        patches = np.concatenate([extract_patches(img, scale) for img in images])
        centroids, _ = kmeans(patches, k, iters, seed + s_i)
        centroids = np.clip(centroids, 0.0, 1.0)
        centroids.setflags(write=False)
        vectors.append(centroids)
    return Codebook(scales=tuple(scales), vectors=tuple(vectors))


# --- encode / decode -------------------------------------------------------------

def _nearest_codes(image: np.ndarray, scale: ScaleSpec, vectors: np.ndarray) -> np.ndarray:
    patches = extract_patches(image, scale).astype(np.float64)
    vecs = vectors.astype(np.float64)
    d = ((patches[:, None, :] - vecs[None, :, :]) ** 2).sum(axis=-1)
    return np.argmin(d, axis=1).astype(np.int32).reshape(scale.grid_h, scale.grid_w)


def encode(image: np.ndarray, codebook: Codebook) -> TokenGrid:
    """Nearest-codebook-index per patch at every scale; ties to lowest index.

    The finest scale quantizes the raw image; coarser (context) scales
    quantize the finest scale's reconstruction. Since decoding also uses
    only the finest scale, encode(decode(encode(x))) == encode(x) exactly:
    a reconstructed patch matches its own code vector bitwise.
    """
    fine = _nearest_codes(image, codebook.scales[-1], codebook.vectors[-1])
    grids = []
    if len(codebook.scales) > 1:
        recon = decode(TokenGrid(grids=(fine,)), _fine_only(codebook))
        for scale, vectors in zip(codebook.scales[:-1], codebook.vectors[:-1]):
            grids.append(_nearest_codes(recon, scale, vectors))
    grids.append(fine)
    return TokenGrid(grids=tuple(grids))


def _fine_only(codebook: Codebook) -> Codebook:
    return Codebook(scales=(codebook.scales[-1],), vectors=(codebook.vectors[-1],))


def decode(tokens: TokenGrid, codebook: Codebook) -> np.ndarray:
    """Paste finest-scale codebook vectors into place; clamp to [0, 1]."""
    scale = codebook.scales[-1]
    vectors = codebook.vectors[-1]
    grid = tokens.grids[-1]
    if grid.shape != (scale.grid_h, scale.grid_w):
        raise DimensionMismatch(f"grid {grid.shape} != {(scale.grid_h, scale.grid_w)}")
    if grid.min() < 0 or grid.max() >= vectors.shape[0]:
        raise IndexOutOfRange(f"token index out of [0, {vectors.shape[0]})")
    p = scale.patch_px
    patches = vectors[grid.reshape(-1)].reshape(scale.grid_h, scale.grid_w, p, p, 3)
    image = patches.transpose(0, 2, 1, 3, 4).reshape(scale.grid_h * p, scale.grid_w * p, 3)
    return np.clip(image, 0.0, 1.0).astype(np.float32)


# --- persistence --------------------------------------------------------------------

def serialize_codebook(codebook: Codebook) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(codebook.scales))]
    for scale, vectors in zip(codebook.scales, codebook.vectors):
        k, dim = vectors.shape
        parts.append(struct.pack("<IIIII", scale.grid_h, scale.grid_w,
                                 scale.patch_px, k, dim))
    for vectors in codebook.vectors:
        parts.append(np.ascontiguousarray(vectors, dtype="<f4").tobytes())
    return b"".join(parts)


def save_codebook(codebook: Codebook, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_codebook(codebook))


def load_codebook(path) -> Codebook:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise DimensionMismatch("not a codebook file (bad magic)")
    version, n_scales = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise DimensionMismatch(f"unsupported codebook version {version}")
    offset = 12
    scales, shapes = [], []
    for _ in range(n_scales):
        gh, gw, pp, k, dim = struct.unpack_from("<IIIII", blob, offset)
        offset += 20
        scales.append(ScaleSpec(grid_h=gh, grid_w=gw, patch_px=pp))
        shapes.append((k, dim))
    vectors = []
    for k, dim in shapes:
        count = k * dim
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(k, dim)
        offset += count * 4
        arr = arr.copy()
        arr.setflags(write=False)
        vectors.append(arr)
    return Codebook(scales=tuple(scales), vectors=tuple(vectors))
