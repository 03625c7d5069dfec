"""Multi-scale patch pyramid scoring of RGB observations against attribute embeddings.

Level k partitions the image into a 2^(k-1) x 2^(k-1) grid (4^(k-1) patches);
every pixel's score per attribute channel is the per-level patch similarity
accumulated over levels and averaged (or max-aggregated for the ablation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np


class ScoringError(Exception):
    pass


class IndivisibleImage(ScoringError):
    pass


class ZeroVector(ScoringError):
    pass


class ProviderFailure(ScoringError):
    def __init__(self, message, patch=None):
        super().__init__(message)
        self.patch = patch


class EmbeddingProvider(Protocol):
    """Contract for image/text embedding backends.

    Both methods return unit-norm float vectors, one row per input, with a
    constant dimension, and must be deterministic for identical inputs.
    `input_size` is the side length patches should be resized to before
    embedding, or None if the provider takes patches at any size.
    """

    dim: int
    input_size: int | None

    def embed_images(self, images: Sequence[np.ndarray]) -> np.ndarray: ...

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray: ...


@dataclass(frozen=True)
class Patch:
    level: int
    h: int  # 1-based row index within the level grid
    w: int  # 1-based col index
    row0: int
    row1: int
    col0: int
    col1: int
    pixels: np.ndarray

    @property
    def key(self):
        return (self.level, self.h, self.w)


@dataclass
class PatchPyramid:
    height: int
    width: int
    levels: int
    patches: list[Patch]

    def level_patches(self, k: int) -> list[Patch]:
        return [p for p in self.patches if p.level == k]


def _resize_bilinear(image: np.ndarray, size: int) -> np.ndarray:
    from PIL import Image

    img = Image.fromarray(np.asarray(image, dtype=np.uint8))
    return np.asarray(img.resize((size, size), Image.BILINEAR))


def partition(image: np.ndarray, levels: int, input_size: int | None = None) -> PatchPyramid:
    """Split an image into the multi-level patch pyramid.

    Height and width must be divisible by 2^(levels-1) so every level tiles
    the image exactly.
    """
    if levels < 1:
        raise ScoringError(f"levels must be >= 1, got {levels}")
    h, w = image.shape[:2]
    div = 2 ** (levels - 1)
    if h % div or w % div:
        raise IndivisibleImage(f"{h}x{w} image not divisible by 2^(L-1)={div}")
    patches = []
    for k in range(1, levels + 1):
        n = 2 ** (k - 1)
        ph, pw = h // n, w // n
        for i in range(n):
            for j in range(n):
                tile = image[i * ph:(i + 1) * ph, j * pw:(j + 1) * pw]
                if input_size is not None and (ph, pw) != (input_size, input_size):
                    tile = _resize_bilinear(tile, input_size)
                patches.append(Patch(level=k, h=i + 1, w=j + 1,
                                     row0=i * ph, row1=(i + 1) * ph,
                                     col0=j * pw, col1=(j + 1) * pw,
                                     pixels=tile))
    return PatchPyramid(height=h, width=w, levels=levels, patches=patches)


def patch_index(p: int, q: int, k: int, height: int, width: int) -> tuple[int, int]:
    """1-based (h, w) patch indices containing pixel (p, q) at level k."""
    if not (0 <= p < height and 0 <= q < width):
        raise ScoringError(f"pixel ({p}, {q}) outside {height}x{width}")
    n = 2 ** (k - 1)
    return p * n // height + 1, q * n // width + 1


def similarity(v: np.ndarray, e: np.ndarray) -> float:
    """Cosine similarity between a visual and a text embedding."""
    v = np.asarray(v, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    nv, ne = np.linalg.norm(v), np.linalg.norm(e)
    if nv == 0 or ne == 0:
        raise ZeroVector("cosine similarity undefined for zero vectors")
    return float(np.dot(v, e) / (nv * ne))


def score_observation(image: np.ndarray, attrs, provider, levels: int,
                      aggregate: str = "mean", batch_size: int = 64) -> np.ndarray:
    """Per-pixel, per-channel accumulated similarity score image (H, W, C).

    aggregate "mean" averages levels (the default); "max" takes the per-pixel
    maximum across levels (kept for the aggregation ablation).
    """
    if aggregate not in ("mean", "max"):
        raise ScoringError(f"unknown aggregate {aggregate!r}")
    pyramid = partition(image, levels, input_size=provider.input_size)
    h, w = pyramid.height, pyramid.width
    c = attrs.vectors.shape[0]
    acc = None
    for k in range(1, levels + 1):
        level = pyramid.level_patches(k)
        sims = np.empty((len(level), c), dtype=np.float64)
        for start in range(0, len(level), batch_size):
            chunk = level[start:start + batch_size]
            try:
                emb = np.asarray(provider.embed_images([p.pixels for p in chunk]),
                                 dtype=np.float64)
            except Exception as exc:
                raise ProviderFailure(f"embedding failed at level {k}: {exc}",
                                      patch=chunk[0].key) from exc
            sims[start:start + len(chunk)] = emb @ attrs.vectors.T
        n = 2 ** (k - 1)
        grid = sims.reshape(n, n, c)
        level_img = np.repeat(np.repeat(grid, h // n, axis=0), w // n, axis=1)
        if acc is None:
            acc = level_img.copy()
        elif aggregate == "mean":
            acc += level_img
        else:
            np.maximum(acc, level_img, out=acc)
    if aggregate == "mean":
        acc /= levels
    return acc
