"""Core raster types, color conversions, resizing and image file I/O.

All pixel data is carried as float64. Gray and RGB rasters live in [0, 1];
CIELAB rasters use the conventional L in [0, 100] and a, b roughly in
[-128, 127]. Saliency maps are single-channel float64 with finite,
non-negative values. Ground-truth masks are strictly binary uint8.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidGroundTruthError, InvalidSpaceError


class ColorSpace(Enum):
    GRAY = "gray"
    RGB = "rgb"
    LAB = "lab"


@dataclass(frozen=True)
class Raster:
    """A single- or three-channel image plus the color space of its values.

    ``data`` has shape (H, W) for gray rasters and (H, W, 3) otherwise.
    Values must be finite; gray/RGB additionally must lie in [0, 1].
    """

    data: np.ndarray
    space: ColorSpace

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        expected_ndim = 2 if self.space is ColorSpace.GRAY else 3
        if data.ndim != expected_ndim:
            raise ValueError(
                f"{self.space.value} raster must have {expected_ndim} dims, "
                f"got shape {data.shape}"
            )
        if data.ndim == 3 and data.shape[2] != 3:
            raise ValueError(f"expected 3 channels, got {data.shape[2]}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"raster must be non-empty, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("raster values must be finite")
        if self.space in (ColorSpace.GRAY, ColorSpace.RGB):
            if data.min() < 0.0 or data.max() > 1.0:
                raise ValueError(
                    f"{self.space.value} raster values must lie in [0, 1], "
                    f"got [{data.min():g}, {data.max():g}]"
                )

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SaliencyMap:
    """A dense per-pixel saliency field. Finite, non-negative float64."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"saliency map must be 2-D non-empty, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("saliency values must be finite")
        if values.min() < 0.0:
            raise ValueError("saliency values must be non-negative")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GroundTruthMask:
    """A binary annotation mask with values in {0, 1}."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if values.ndim != 2 or values.size == 0:
            raise InvalidGroundTruthError(f"mask must be 2-D non-empty, got {values.shape}")
        if not np.isin(values, (0, 1)).all():
            raise InvalidGroundTruthError("mask values must be 0 or 1")
        object.__setattr__(self, "values", values.astype(np.uint8))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


# Rec. 601 luma weights.
_GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])

# sRGB (D65) to XYZ, and its inverse for the return trip.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])


def to_gray(raster: Raster) -> Raster:
    """Collapse an RGB raster to single-channel luma (Rec. 601 weights).

    Gray input is returned unchanged. LAB input is rejected: luma weights
    are defined on RGB primaries, not on opponent axes.
    """
    if raster.space is ColorSpace.GRAY:
        return raster
    if raster.space is not ColorSpace.RGB:
        raise InvalidSpaceError(f"to_gray expects rgb or gray, got {raster.space.value}")
    gray = raster.data @ _GRAY_WEIGHTS
    return Raster(np.clip(gray, 0.0, 1.0), ColorSpace.GRAY)


def rgb_to_lab(raster: Raster) -> Raster:
    """Convert sRGB in [0, 1] to CIELAB under the D65 white point."""
    if raster.space is not ColorSpace.RGB:
        raise InvalidSpaceError(f"rgb_to_lab expects rgb, got {raster.space.value}")
    rgb = raster.data
    lin = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB_TO_XYZ.T
    t = xyz / _D65_WHITE
    d = 6.0 / 29.0
    f = np.where(t > d**3, np.cbrt(t), t / (3.0 * d * d) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return Raster(lab, ColorSpace.LAB)


def lab_to_rgb(raster: Raster) -> Raster:
    """Invert :func:`rgb_to_lab`. Out-of-gamut results are clipped to [0, 1]."""
    if raster.space is not ColorSpace.LAB:
        raise InvalidSpaceError(f"lab_to_rgb expects lab, got {raster.space.value}")
    lab = raster.data
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    f = np.stack([fx, fy, fz], axis=-1)
    d = 6.0 / 29.0
    t = np.where(f > d, f**3, 3.0 * d * d * (f - 4.0 / 29.0))
    xyz = t * _D65_WHITE
    lin = xyz @ _XYZ_TO_RGB.T
    rgb = np.where(lin <= 0.0031308, 12.92 * lin, 1.055 * np.maximum(lin, 0.0) ** (1.0 / 2.4) - 0.055)
    return Raster(np.clip(rgb, 0.0, 1.0), ColorSpace.RGB)


def normalize(m: SaliencyMap) -> SaliencyMap:
    """Affinely rescale a map to span [0, 1].

    A constant map carries no ordering information to stretch, so it is
    returned with its value clamped into [0, 1] instead. The operation is
    idempotent in both branches.
    """
    v = m.values
    lo = v.min()
    hi = v.max()
    if hi == lo:
        return SaliencyMap(np.clip(v, 0.0, 1.0))
    return SaliencyMap((v - lo) / (hi - lo))


def resize_bilinear(values: np.ndarray, width: int, height: int) -> np.ndarray:
    """Resample a 2-D plane (or H x W x C stack) with corner-aligned bilinear.

    Output sample i along an axis of new length n maps to source coordinate
    i * (src - 1) / (n - 1); a single-sample output axis maps to coordinate 0.
    Output values never leave the input range.
    """
    if width < 1 or height < 1:
        raise ValueError(f"target size must be positive, got {width}x{height}")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or 3-D array, got shape {values.shape}")
    src_h, src_w = values.shape[:2]
    if (src_h, src_w) == (height, width):
        return values.copy()

    def _coords(n_out: int, n_src: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if n_out == 1 or n_src == 1:
            pos = np.zeros(n_out)
        else:
            pos = np.arange(n_out) * ((n_src - 1) / (n_out - 1))
        lo = np.minimum(pos.astype(np.int64), n_src - 1)
        hi = np.minimum(lo + 1, n_src - 1)
        frac = pos - lo
        return lo, hi, frac

    y0, y1, fy = _coords(height, src_h)
    x0, x1, fx = _coords(width, src_w)
    if values.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]
    top = values[y0][:, x0] * (1.0 - fx) + values[y0][:, x1] * fx
    bot = values[y1][:, x0] * (1.0 - fx) + values[y1][:, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    # Convex combinations can drift past the input range by rounding only;
    # pin the invariant exactly.
    return np.clip(out, values.min(), values.max())


def resize_raster(raster: Raster, width: int, height: int) -> Raster:
    return Raster(resize_bilinear(raster.data, width, height), raster.space)


def resize_map(m: SaliencyMap, width: int, height: int) -> SaliencyMap:
    return SaliencyMap(resize_bilinear(m.values, width, height))


# ---------------------------------------------------------------------------
# File I/O


def load_image(path: str | Path) -> Raster:
    """Read PNG/JPEG (via Pillow) or binary PGM/PPM into an RGB or gray raster."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".ppm", ".pnm"):
        return _load_pnm(path)
    try:
        with Image.open(path) as img:
            if img.mode in ("L", "I;16", "I"):
                arr = np.asarray(img.convert("I")).astype(np.float64)
                peak = 65535.0 if img.mode == "I;16" else float(max(arr.max(), 1.0))
                if img.mode == "L":
                    peak = 255.0
                return Raster(np.clip(arr / peak, 0.0, 1.0), ColorSpace.GRAY)
            arr = np.asarray(img.convert("RGB")).astype(np.float64) / 255.0
    except OSError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    return Raster(arr, ColorSpace.RGB)


def save_png(path: str | Path, values: np.ndarray | SaliencyMap | Raster) -> None:
    """Write an 8-bit PNG; float inputs in [0, 1] are quantized as round(v * 255)."""
    if isinstance(values, SaliencyMap):
        arr = values.values
    elif isinstance(values, Raster):
        if values.space is ColorSpace.LAB:
            raise InvalidSpaceError("save_png expects gray or rgb data")
        arr = values.data
    else:
        arr = np.asarray(values, dtype=np.float64)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("save_png expects values in [0, 1]")
    q = np.rint(arr * 255.0).astype(np.uint8)
    Image.fromarray(q).save(Path(path), format="PNG")


def save_pgm(path: str | Path, values: np.ndarray, maxval: int = 255) -> None:
    """Write a binary (P5) PGM of integer values; maxval > 255 uses 16-bit words."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError(f"PGM wants a 2-D array, got {values.shape}")
    if not (1 <= maxval <= 65535):
        raise ValueError(f"maxval must be in [1, 65535], got {maxval}")
    if values.min() < 0 or values.max() > maxval:
        raise ValueError("values exceed maxval")
    h, w = values.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    if maxval > 255:
        body = values.astype(">u2").tobytes()
    else:
        body = values.astype(np.uint8).tobytes()
    Path(path).write_bytes(header + body)


def save_ppm(path: str | Path, raster: Raster) -> None:
    """Write a binary (P6) PPM from an RGB raster in [0, 1]."""
    if raster.space is not ColorSpace.RGB:
        raise InvalidSpaceError(f"save_ppm expects rgb, got {raster.space.value}")
    q = np.rint(raster.data * 255.0).astype(np.uint8)
    h, w = q.shape[:2]
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + q.tobytes())


def _read_pnm_header(blob: bytes, path: Path) -> tuple[bytes, list[int], int]:
    magic = blob[:2]
    if magic not in (b"P5", b"P6"):
        raise OSError(f"{path}: unsupported PNM magic {magic!r}")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(blob):
            raise OSError(f"{path}: truncated PNM header")
        ch = blob[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            pos = blob.index(b"\n", pos) + 1
        else:
            end = pos
            while end < len(blob) and not blob[end : end + 1].isspace():
                end += 1
            fields.append(int(blob[pos:end]))
            pos = end
    return magic, fields, pos + 1  # single whitespace after maxval


def _load_pnm(path: Path) -> Raster:
    blob = path.read_bytes()
    magic, (w, h, maxval), offset = _read_pnm_header(blob, path)
    channels = 1 if magic == b"P5" else 3
    count = w * h * channels
    if maxval > 255:
        raw = np.frombuffer(blob, dtype=">u2", count=count, offset=offset)
    else:
        raw = np.frombuffer(blob, dtype=np.uint8, count=count, offset=offset)
    if raw.size < count:
        raise OSError(f"{path}: truncated PNM body")
    arr = raw.astype(np.float64) / float(maxval)
    if channels == 1:
        return Raster(arr.reshape(h, w), ColorSpace.GRAY)
    return Raster(arr.reshape(h, w, 3), ColorSpace.RGB)


def load_mask(path: str | Path) -> GroundTruthMask:
    """Read a ground-truth annotation; 8-bit gray levels >= 128 count as foreground."""
    try:
        raster = load_image(path)
    except OSError as exc:
        raise InvalidGroundTruthError(str(exc)) from exc
    gray = to_gray(raster).data
    return GroundTruthMask((np.rint(gray * 255.0) >= 128).astype(np.uint8))


__all__ = [
    "ColorSpace",
    "Raster",
    "SaliencyMap",
    "GroundTruthMask",
    "to_gray",
    "rgb_to_lab",
    "lab_to_rgb",
    "normalize",
    "resize_bilinear",
    "resize_raster",
    "resize_map",
    "load_image",
    "save_png",
    "save_pgm",
    "save_ppm",
    "load_mask",
]
