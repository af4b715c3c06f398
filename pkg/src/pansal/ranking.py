"""Dual manifold-ranking region growing over the region affinity graph.

Seeds split into strong (full confidence) and weak (half confidence) tiers
by comparing scores against twice their mean. Relevance to the seeds
diffuses through the graph as the solution of (D - alpha * W) g = y, where
D is the degree matrix; with alpha < 1 and every region connected the
system is strictly diagonally dominant, which is asserted before solving.

The foreground pass ranks relevance to object evidence. The background
pass ranks relevance to the image border and is complemented, so both
passes agree on what is salient; their product forms the first pathway.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NoSeedsError
from .raster import SaliencyMap, normalize
from .superpixel import RegionGraph, Segmentation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeedSet:
    """Strong and weak seed region indices (disjoint, ascending)."""

    strong: np.ndarray
    weak: np.ndarray

    def __post_init__(self) -> None:
        strong = np.asarray(self.strong, dtype=np.int64)
        weak = np.asarray(self.weak, dtype=np.int64)
        object.__setattr__(self, "strong", strong)
        object.__setattr__(self, "weak", weak)
        if np.intersect1d(strong, weak).size:
            raise ValueError("strong and weak seed sets must be disjoint")

    def indicator(self, num_regions: int) -> np.ndarray:
        """The ranking query vector: 1 on strong seeds, 0.5 on weak, else 0."""
        y = np.zeros(num_regions)
        y[self.strong] = 1.0
        y[self.weak] = 0.5
        return y


def foreground_seeds(scores: np.ndarray) -> SeedSet:
    """Tier regions into seeds by their proposal-restricted contrast scores.

    Strong seeds score at least twice the mean; weak seeds reach the mean.
    All-zero scores carry no object evidence at all and raise
    :class:`NoSeedsError` rather than seeding every region.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError(f"scores must be a non-empty vector, got shape {scores.shape}")
    if scores.min() < 0:
        raise ValueError("scores must be non-negative")
    if scores.max() == 0.0:
        raise NoSeedsError("all region scores are zero")
    mean = scores.mean()
    strong = scores >= 2.0 * mean
    weak = (scores >= mean) & ~strong
    return SeedSet(np.nonzero(strong)[0], np.nonzero(weak)[0])


def background_seeds(graph: RegionGraph) -> SeedSet:
    """Seed border regions by their color distance to the mean border color.

    Border regions unlike the typical border are strong seeds (score at
    least twice the mean distance); the rest of the border that reaches
    the mean is weak. When every border region matches the mean exactly
    (one border region, or identical colors) there is no tiering signal;
    the whole border becomes weak seeds and a warning is logged.
    """
    border_idx = np.nonzero(graph.border)[0]
    if border_idx.size == 0:
        raise NoSeedsError("graph has no border regions")
    feats = graph.features[border_idx]
    center = feats.mean(axis=0)
    dist = np.sqrt(((feats - center) ** 2).sum(axis=1))
    mean = dist.mean()
    if mean == 0.0:
        log.warning("border regions are indistinguishable: seeding all of them weakly")
        return SeedSet(np.empty(0, dtype=np.int64), border_idx)
    strong = dist >= 2.0 * mean
    weak = (dist >= mean) & ~strong
    return SeedSet(border_idx[strong], border_idx[weak])


def rank(graph: RegionGraph, y: np.ndarray, alpha: float = 0.99) -> np.ndarray:
    """Solve (D - alpha * W) g = y for the relevance ranking g.

    Requires 0 < alpha < 1 and positive degrees so the system matrix is
    strictly diagonally dominant (hence nonsingular); this is checked
    before solving and violated only by graphs with isolated regions.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    w = graph.weights
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (w.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({w.shape[0]},)")
    degrees = w.sum(axis=1)
    slack = degrees - alpha * np.abs(w).sum(axis=1)
    if not (slack > 0.0).all():
        raise ValueError("system is not strictly diagonally dominant (isolated region?)")
    a = np.diag(degrees) - alpha * w
    return np.linalg.solve(a, y)


def _normalize_vector(v: np.ndarray) -> np.ndarray:
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.clip(v, 0.0, 1.0)
    return (v - lo) / (hi - lo)


def grow_foreground(graph: RegionGraph, seeds: SeedSet, alpha: float = 0.99) -> np.ndarray:
    """Per-region foreground relevance in [0, 1], grown from object seeds."""
    g = rank(graph, seeds.indicator(graph.num_regions), alpha)
    return _normalize_vector(g)


def grow_background(graph: RegionGraph, seeds: SeedSet, alpha: float = 0.99) -> np.ndarray:
    """Per-region saliency in [0, 1] as the complement of border relevance."""
    g = rank(graph, seeds.indicator(graph.num_regions), alpha)
    return 1.0 - _normalize_vector(g)


def combine_pathway1(fg: np.ndarray, bg: np.ndarray, seg: Segmentation) -> SaliencyMap:
    """Fuse the two growth passes multiplicatively and paint per pixel.

    The product keeps only regions that both passes consider salient; the
    painted map is rescaled to [0, 1].
    """
    fg = np.asarray(fg, dtype=np.float64)
    bg = np.asarray(bg, dtype=np.float64)
    if fg.shape != (seg.num_regions,) or bg.shape != (seg.num_regions,):
        raise ValueError("fg and bg must be per-region vectors")
    painted = (fg * bg)[seg.labels]
    return normalize(SaliencyMap(painted))


__all__ = [
    "SeedSet",
    "foreground_seeds",
    "background_seeds",
    "rank",
    "grow_foreground",
    "grow_background",
    "combine_pathway1",
]
