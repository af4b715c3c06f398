"""Fixation prediction from the sign of the image's DCT spectrum.

Reconstructing from only the signs of the 2-D DCT coefficients suppresses
spectrally dense background and concentrates energy on spatially sparse
foreground; squaring and smoothing the reconstruction gives a fixation
map. Pooling that map over proposal regions turns it into region-level
evidence for the second pathway.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, idct
from scipy.ndimage import gaussian_filter

from .errors import InvalidSpaceError
from .raster import ColorSpace, Raster, SaliencyMap, normalize, resize_bilinear
from .superpixel import Segmentation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralPlane:
    """A 2-D field of orthonormal DCT-II coefficients."""

    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coefs = np.asarray(self.coefficients, dtype=np.float64)
        object.__setattr__(self, "coefficients", coefs)
        if coefs.ndim != 2 or coefs.size == 0:
            raise ValueError(f"coefficients must be 2-D non-empty, got {coefs.shape}")
        if not np.all(np.isfinite(coefs)):
            raise ValueError("coefficients must be finite")


def dct2(plane: np.ndarray) -> SpectralPlane:
    """Orthonormal 2-D DCT-II of a real plane (rows then columns)."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2 or plane.size == 0:
        raise ValueError(f"dct2 expects a 2-D non-empty plane, got {plane.shape}")
    if not np.all(np.isfinite(plane)):
        raise ValueError("plane values must be finite")
    return SpectralPlane(dct(dct(plane, axis=0, norm="ortho"), axis=1, norm="ortho"))


def idct2(spectrum: SpectralPlane) -> np.ndarray:
    """Inverse of :func:`dct2`; round-trips to the input within 1e-10."""
    c = spectrum.coefficients
    return idct(idct(c, axis=1, norm="ortho"), axis=0, norm="ortho")


def signature_saliency(
    raster: Raster, resize: int = 64, sigma_frac: float = 0.045
) -> SaliencyMap:
    """Predict fixations from the per-channel sign spectrum.

    The image is resampled so its longer side equals ``resize``; each
    channel is reconstructed from sign(DCT(channel)), the squared
    reconstructions are summed, smoothed with a Gaussian of sigma equal to
    ``sigma_frac`` times the resampled width (reflect boundary, which
    conserves mass), resampled back, and rescaled to [0, 1].

    Invariant under positive scaling of the input: signs do not change.
    sign(0) is 0, so a constant image keeps only its DC term and maps to a
    constant (clamped) fixation map.
    """
    if raster.space is ColorSpace.LAB:
        raise InvalidSpaceError("signature_saliency expects gray or rgb input")
    if resize < 1:
        raise ValueError(f"resize must be positive, got {resize}")
    if sigma_frac <= 0:
        raise ValueError(f"sigma_frac must be positive, got {sigma_frac}")
    h, w = raster.height, raster.width
    scale = resize / max(h, w)
    small_w = max(1, round(w * scale))
    small_h = max(1, round(h * scale))
    small = resize_bilinear(raster.data, small_w, small_h)
    if small.ndim == 2:
        small = small[:, :, None]

    energy = np.zeros((small_h, small_w))
    for ch in range(small.shape[2]):
        spectrum = dct2(small[:, :, ch])
        recon = idct2(SpectralPlane(np.sign(spectrum.coefficients)))
        energy += recon**2

    smooth = gaussian_filter(energy, sigma_frac * small_w, mode="reflect")
    full = resize_bilinear(smooth, w, h)
    return normalize(SaliencyMap(np.maximum(full, 0.0)))


def region_pool(
    m: SaliencyMap,
    partition: Segmentation,
    mask: np.ndarray,
    keep_background: bool = False,
) -> SaliencyMap:
    """Replace map values with their per-region mean inside the proposal mask.

    Each region of ``partition`` that intersects ``mask`` is painted with
    the mean of ``m`` over that intersection. Pixels outside the mask drop
    to 0 by default; with ``keep_background`` they keep their raw values
    instead. Pooling is idempotent. An empty mask pools to all zeros and
    logs a warning.
    """
    mask = np.asarray(mask, dtype=bool)
    if m.values.shape != partition.labels.shape or mask.shape != m.values.shape:
        raise ValueError("map, partition and mask shapes differ")
    if not mask.any():
        log.warning("empty proposal mask: pooled map is all zeros")
        return SaliencyMap(np.zeros_like(m.values))

    labels = partition.labels
    j = partition.num_regions
    flat = labels[mask]
    counts = np.bincount(flat, minlength=j)
    sums = np.bincount(flat, weights=m.values[mask], minlength=j)
    means = sums / np.maximum(counts, 1)

    out = m.values.copy() if keep_background else np.zeros_like(m.values)
    pooled = means[labels]
    out[mask] = pooled[mask]
    return SaliencyMap(out)


__all__ = [
    "SpectralPlane",
    "dct2",
    "idct2",
    "signature_saliency",
    "region_pool",
]
