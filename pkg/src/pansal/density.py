"""Density pathway: local intensity-mass exponents and region contrast.

The local density exponent d(x) is the log-log slope of the intensity mass
mu(x, r) accumulated over clipped disks of growing radius r. Flat
neighborhoods behave like area (d near 2) regardless of their brightness;
abrupt structure bends the growth law, so d separates texture and object
boundaries from smooth background without responding to absolute level.

Regions for the contrast stage come from a greedy merge over pixel
features (L, a, b, d); contrast between regions compares their density
histograms, weighted by region area.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpaceError
from .raster import ColorSpace, Raster, SaliencyMap, normalize
from .superpixel import Segmentation

log = logging.getLogger(__name__)

EPSILON = 1e-4
DEFAULT_RADII = (1, 2, 3, 5, 7, 10, 14)


@dataclass(frozen=True)
class DensityMap:
    """Per-pixel density exponents and the radii they were fitted over."""

    values: np.ndarray
    radii: tuple[int, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise ValueError(f"density map must be 2-D, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")


@dataclass(frozen=True)
class RegionContrast:
    """Area-weighted histogram contrast of each region against all others."""

    region_values: np.ndarray  # (J,) raw contrast per region
    histograms: np.ndarray  # (J, B) density histograms, rows sum to 1
    weights: np.ndarray  # (J,) region area fractions
    map: SaliencyMap  # contrast painted per pixel, normalized to [0, 1]


def _validate_radii(radii: tuple[int, ...]) -> tuple[int, ...]:
    radii = tuple(int(r) for r in radii)
    if len(radii) < 2:
        raise ValueError(f"need at least 2 radii for a slope fit, got {len(radii)}")
    if any(r < 1 for r in radii):
        raise ValueError(f"radii must be positive integers, got {radii}")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must be strictly increasing, got {radii}")
    return radii


def density_map(raster: Raster, radii: tuple[int, ...] = DEFAULT_RADII) -> DensityMap:
    """Fit the growth exponent of disk-summed intensity mass at every pixel.

    mu(x, r) sums the epsilon-shifted intensities over the disk of radius r
    centered at x, clipped to the image; d(x) is the least-squares slope of
    log mu against log r. The epsilon shift (1e-4) keeps the logs defined
    on black regions. Disks are clipped, so exponents near the border dip
    below the interior value.
    """
    if raster.space is not ColorSpace.GRAY:
        raise InvalidSpaceError(f"density_map expects gray input, got {raster.space.value}")
    radii = _validate_radii(radii)
    h, w = raster.height, raster.width

    shifted = raster.data + EPSILON
    row_cum = np.zeros((h, w + 1))
    np.cumsum(shifted, axis=1, out=row_cum[:, 1:])
    cols = np.arange(w)

    log_mu = np.empty((len(radii), h, w))
    for ri, r in enumerate(radii):
        mu = np.zeros((h, w))
        for dy in range(r + 1):
            dx = math.isqrt(r * r - dy * dy)
            lo = np.maximum(cols - dx, 0)
            hi = np.minimum(cols + dx + 1, w)
            span = row_cum[:, hi] - row_cum[:, lo]
            if dy == 0:
                mu += span
            else:
                mu[dy:, :] += span[: h - dy, :]
                mu[: h - dy, :] += span[dy:, :]
        log_mu[ri] = np.log(mu)

    lr = np.log(np.asarray(radii, dtype=np.float64))
    wts = lr - lr.mean()
    wts /= (wts**2).sum()
    # Weighted sum over radii is the least-squares slope; the weights sum
    # to zero, so the intercept term vanishes.
    d = np.tensordot(wts, log_mu, axes=1)
    return DensityMap(values=d, radii=radii)


def segment_regions(raster: Raster, dmap: DensityMap, k_regions: int = 8) -> Segmentation:
    """Partition the image into ``k_regions`` by greedy lowest-cost merging.

    Each pixel starts as its own region. The 4-neighbor edges are sorted by
    Euclidean distance in the feature (L/100, (a+128)/255, (b+128)/255,
    d rescaled to [0, 1]) and merged cheapest-first until ``k_regions``
    components remain. Cost ties resolve by edge enumeration order: pixels
    row-major, the rightward edge before the downward one.
    """
    if raster.space is not ColorSpace.LAB:
        raise InvalidSpaceError(f"segment_regions expects lab input, got {raster.space.value}")
    if raster.data.shape[:2] != dmap.values.shape:
        raise ValueError("raster and density map shapes differ")
    h, w = raster.height, raster.width
    n = h * w
    if not (1 <= k_regions <= n):
        raise ValueError(f"k_regions must be in [1, {n}], got {k_regions}")

    d = dmap.values
    dlo, dhi = d.min(), d.max()
    dnorm = (d - dlo) / (dhi - dlo) if dhi > dlo else np.zeros_like(d)
    feats = np.stack(
        [
            raster.data[..., 0] / 100.0,
            (raster.data[..., 1] + 128.0) / 255.0,
            (raster.data[..., 2] + 128.0) / 255.0,
            dnorm,
        ],
        axis=2,
    )

    pix = np.arange(n).reshape(h, w)
    right_cost = np.sqrt(((feats[:, :-1] - feats[:, 1:]) ** 2).sum(axis=2))
    down_cost = np.sqrt(((feats[:-1, :] - feats[1:, :]) ** 2).sum(axis=2))
    src = np.concatenate([pix[:, :-1].ravel(), pix[:-1, :].ravel()])
    dst = np.concatenate([pix[:, 1:].ravel(), pix[1:, :].ravel()])
    cost = np.concatenate([right_cost.ravel(), down_cost.ravel()])
    # Edge id 2p for pixel p's rightward edge, 2p+1 for its downward edge:
    # ties then break exactly in row-major right-then-down order.
    edge_id = np.concatenate([2 * pix[:, :-1].ravel(), 2 * pix[:-1, :].ravel() + 1])
    order = np.lexsort((edge_id, cost))

    parent = list(range(n))
    count = n
    src_l = src[order].tolist()
    dst_l = dst[order].tolist()
    if count > k_regions:
        for a, b in zip(src_l, dst_l):
            ra = a
            while parent[ra] != ra:
                parent[ra] = parent[parent[ra]]
                ra = parent[ra]
            rb = b
            while parent[rb] != rb:
                parent[rb] = parent[parent[rb]]
                rb = parent[rb]
            if ra != rb:
                parent[rb] = ra
                count -= 1
                if count == k_regions:
                    break

    roots = np.asarray(parent)
    while True:
        hop = roots[roots]
        if np.array_equal(hop, roots):
            break
        roots = hop
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    remap = np.empty(first.size, dtype=np.int64)
    remap[np.argsort(first, kind="stable")] = np.arange(first.size)
    labels = remap[inverse].reshape(h, w)
    return Segmentation(labels.astype(np.int32), int(first.size))


def region_contrast(partition: Segmentation, dmap: DensityMap, bins: int = 16) -> RegionContrast:
    """Score each region by density-histogram distance to the rest of the image.

    Histograms use ``bins`` equal-width bins spanning [min d, max d] of the
    image. The distance between two regions is the expected absolute
    difference of bin centers under their histogram pair, and each region's
    score sums that distance to every other region weighted by the other's
    area fraction. A constant density map yields all-zero contrast.
    """
    if partition.labels.shape != dmap.values.shape:
        raise ValueError("partition and density map shapes differ")
    if bins < 1:
        raise ValueError(f"bins must be positive, got {bins}")
    labels = partition.labels
    j = partition.num_regions
    d = dmap.values
    n = d.size

    dlo, dhi = d.min(), d.max()
    if dhi > dlo:
        idx = np.clip(((d - dlo) / (dhi - dlo) * bins).astype(np.int64), 0, bins - 1)
        width = (dhi - dlo) / bins
    else:
        idx = np.zeros(d.shape, dtype=np.int64)
        width = 0.0
    centers = dlo + (np.arange(bins) + 0.5) * width

    flat = labels.ravel().astype(np.int64) * bins + idx.ravel()
    hist = np.bincount(flat, minlength=j * bins).reshape(j, bins).astype(np.float64)
    sizes = hist.sum(axis=1)
    hist /= np.maximum(sizes, 1.0)[:, None]

    m = np.abs(centers[:, None] - centers[None, :])
    pair = hist @ m @ hist.T
    weights = sizes / n
    scores = pair @ weights - weights * np.diag(pair)

    painted = scores[labels]
    return RegionContrast(
        region_values=scores,
        histograms=hist,
        weights=weights,
        map=normalize(SaliencyMap(np.maximum(painted, 0.0))),
    )


def binarize_proposals(contrast: SaliencyMap) -> np.ndarray:
    """Threshold a contrast map into a boolean proposal mask via Otsu's rule.

    The map is quantized to 256 levels and split at the level maximizing
    between-class variance (ties take the lowest threshold). A constant map
    has no split to find; it yields an all-true mask and a warning, which
    keeps downstream stages defined on degenerate inputs.
    """
    v = contrast.values
    if v.max() > 1.0:
        raise ValueError("binarize_proposals expects values in [0, 1]")
    q = np.rint(v * 255.0).astype(np.int64)
    hist = np.bincount(q.ravel(), minlength=256).astype(np.float64)
    total = q.size

    cum = np.cumsum(hist)[:-1]
    cum_lvl = np.cumsum(hist * np.arange(256))[:-1]
    w0 = cum
    w1 = total - cum
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        log.warning("constant contrast map: proposal mask covers the whole image")
        return np.ones(v.shape, dtype=bool)
    mu0 = np.divide(cum_lvl, w0, out=np.zeros_like(cum_lvl), where=w0 > 0)
    mu1 = np.divide(cum_lvl[-1] + hist[-1] * 255 - cum_lvl, w1, out=np.zeros_like(cum_lvl), where=w1 > 0)
    sigma_b = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    threshold = int(np.argmax(sigma_b))
    return q > threshold


__all__ = [
    "DensityMap",
    "RegionContrast",
    "DEFAULT_RADII",
    "EPSILON",
    "density_map",
    "segment_regions",
    "region_contrast",
    "binarize_proposals",
]
