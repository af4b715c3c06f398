"""Pathway fusion: maxima normalization, summation, geodesic refinement.

Maxima normalization rescales a map by how far its strongest peak stands
above the average local peak, so a map with one dominant response
contributes more to the sum than one with many competing responses. The
fused map is then smoothed along the region adjacency structure: regions
close in geodesic (accumulated score difference) distance exchange
saliency, which evens out the interior of objects without leaking across
strong boundaries.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass

import numpy as np

from .raster import SaliencyMap, normalize
from .superpixel import Segmentation, region_means

log = logging.getLogger(__name__)

_SIGMA_FLOOR = 1e-6

_OFFSETS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
# The 4-neighborhood variant reads the reference offsets literally: the
# four diagonal corners only.
_OFFSETS_4 = ((-1, -1), (-1, 1), (1, -1), (1, 1))


@dataclass(frozen=True)
class GeodesicField:
    """All-pairs geodesic distances over regions and the blend weights."""

    distances: np.ndarray  # (J, J) symmetric, zero diagonal
    weights: np.ndarray  # (J, J) rows sum to 1
    sigma_c: float


def local_maxima(m: SaliencyMap, thresh: float, neighborhood: int = 8) -> np.ndarray:
    """Boolean mask of pixels above ``thresh`` that strictly exceed all
    their in-bounds neighbors (border pixels compare only inside the map)."""
    if thresh < 0:
        raise ValueError(f"thresh must be non-negative, got {thresh}")
    if neighborhood == 8:
        offsets = _OFFSETS_8
    elif neighborhood == 4:
        offsets = _OFFSETS_4
    else:
        raise ValueError(f"neighborhood must be 4 or 8, got {neighborhood}")
    v = m.values
    h, w = v.shape
    padded = np.full((h + 2, w + 2), -np.inf)
    padded[1:-1, 1:-1] = v
    is_max = v > thresh
    for dy, dx in offsets:
        is_max &= v > padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
    return is_max


def maxima_normalize(
    m: SaliencyMap,
    thresh: float = 0.1,
    neighborhood: int = 8,
    exclude_global: bool = False,
) -> SaliencyMap:
    """Rescale a map by the squared gap between its global and average peak.

    With global maximum G and mean local-maximum value V, the map is
    multiplied by (G - V)^2 / G. A map whose only peak is the global one
    gets V == G and is zeroed; ``exclude_global`` drops peaks equal to G
    from the average first (an empty remainder averages to 0), which keeps
    single-peak maps alive. No peaks above ``thresh`` leaves the map
    unchanged with a warning.
    """
    peaks = local_maxima(m, thresh, neighborhood)
    n_m = int(peaks.sum())
    if n_m == 0:
        log.warning("no local maxima above %g: map left unchanged", thresh)
        return m
    v = m.values
    g_m = v.max()
    peak_vals = v[peaks]
    if exclude_global:
        peak_vals = peak_vals[peak_vals < g_m]
    avg = peak_vals.mean() if peak_vals.size else 0.0
    scale = (g_m - avg) ** 2 / g_m
    return SaliencyMap(v * scale)


def combine_pathways(
    p1: SaliencyMap,
    p2: SaliencyMap,
    thresh: float = 0.1,
    neighborhood: int = 8,
    exclude_global: bool = False,
) -> SaliencyMap:
    """Maxima-normalize both pathway maps, sum them, rescale to [0, 1].

    If both maps are zeroed (each dominated by a single peak in the
    literal mode) the sum is constant; it is returned clamped with a
    warning rather than stretched.
    """
    if p1.values.shape != p2.values.shape:
        raise ValueError("pathway maps must share a shape")
    a = maxima_normalize(p1, thresh, neighborhood, exclude_global)
    b = maxima_normalize(p2, thresh, neighborhood, exclude_global)
    total = a.values + b.values
    if total.max() == total.min():
        log.warning("combined pathways are constant")
    return normalize(SaliencyMap(total))


def all_pairs_geodesic(adjacent: np.ndarray, edge_costs: np.ndarray) -> np.ndarray:
    """Shortest accumulated cost between every pair of graph nodes.

    ``adjacent`` is a symmetric boolean matrix; ``edge_costs`` supplies the
    non-negative cost where adjacent is true. Unreachable pairs get inf.
    Runs Dijkstra from every source.
    """
    j = adjacent.shape[0]
    if adjacent.shape != (j, j) or edge_costs.shape != (j, j):
        raise ValueError("adjacent and edge_costs must be square and matching")
    neighbors: list[list[tuple[int, float]]] = []
    for i in range(j):
        idx = np.nonzero(adjacent[i])[0]
        costs = edge_costs[i, idx]
        if (costs < 0).any():
            raise ValueError("edge costs must be non-negative")
        neighbors.append(list(zip(idx.tolist(), costs.tolist())))

    dist = np.full((j, j), np.inf)
    for src in range(j):
        row = dist[src]
        row[src] = 0.0
        heap = [(0.0, src)]
        done = np.zeros(j, dtype=bool)
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v, c in neighbors[u]:
                nd = d + c
                if nd < row[v]:
                    row[v] = nd
                    heapq.heappush(heap, (nd, v))
    return dist


def geodesic_field(adjacent: np.ndarray, scores: np.ndarray) -> GeodesicField:
    """Blend weights from geodesic distances over score differences.

    Edge cost between adjacent regions is the absolute score difference.
    The Gaussian bandwidth is the population standard deviation of the
    edge costs, floored at 1e-6 so identical scores still define weights.
    """
    scores = np.asarray(scores, dtype=np.float64)
    costs = np.abs(scores[:, None] - scores[None, :])
    dist = all_pairs_geodesic(adjacent, costs)
    iu, ju = np.nonzero(np.triu(adjacent, k=1))
    edge_vals = costs[iu, ju]
    sigma = max(float(edge_vals.std()), _SIGMA_FLOOR) if edge_vals.size else _SIGMA_FLOOR
    with np.errstate(over="ignore"):
        weights = np.exp(-(dist**2) / (2.0 * sigma * sigma))
    weights /= weights.sum(axis=1, keepdims=True)
    return GeodesicField(distances=dist, weights=weights, sigma_c=sigma)


def geodesic_refine(m: SaliencyMap, seg: Segmentation) -> SaliencyMap:
    """Propagate region scores along geodesic proximity and repaint.

    Region scores are per-region means of the map; each refined score is a
    convex combination of all region scores, so refined values stay inside
    the original score range. A single-region segmentation has no
    structure to propagate over and returns the map unchanged with a
    warning.
    """
    if m.values.shape != seg.labels.shape:
        raise ValueError("map and segmentation shapes differ")
    j = seg.num_regions
    if j < 2:
        log.warning("single-region segmentation: geodesic refinement skipped")
        return m
    labels = seg.labels
    adjacent = np.zeros((j, j), dtype=bool)
    for a, b in ((labels[:, :-1], labels[:, 1:]), (labels[:-1, :], labels[1:, :])):
        diff = a != b
        adjacent[a[diff], b[diff]] = True
    adjacent |= adjacent.T

    scores = region_means(labels, m.values, j)
    field = geodesic_field(adjacent, scores)
    refined = field.weights @ scores
    return normalize(SaliencyMap(np.maximum(refined[labels], 0.0)))


__all__ = [
    "GeodesicField",
    "local_maxima",
    "maxima_normalize",
    "combine_pathways",
    "all_pairs_geodesic",
    "geodesic_field",
    "geodesic_refine",
]
