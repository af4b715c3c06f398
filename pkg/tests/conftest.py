"""Shared helpers and the synthetic fixture corpus."""

from __future__ import annotations

import numpy as np
import pytest

from pansal.raster import ColorSpace, Raster


class UnionFind:
    """Independent union-find used by tests to check connectivity claims."""

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def components(self) -> int:
        return len({self.find(i) for i in range(len(self.parent))})


def lab_raster(l_plane: np.ndarray, a_plane: np.ndarray | None = None,
               b_plane: np.ndarray | None = None) -> Raster:
    """Convenience constructor for CIELAB rasters in tests."""
    l_plane = np.asarray(l_plane, dtype=np.float64)
    zeros = np.zeros_like(l_plane)
    a_plane = zeros if a_plane is None else np.asarray(a_plane, dtype=np.float64)
    b_plane = zeros if b_plane is None else np.asarray(b_plane, dtype=np.float64)
    return Raster(np.stack([l_plane, a_plane, b_plane], axis=2), ColorSpace.LAB)


def region_is_connected(labels: np.ndarray, region: int) -> bool:
    """4-connectivity check for one region via breadth-first search."""
    ys, xs = np.nonzero(labels == region)
    if ys.size == 0:
        return False
    member = set(zip(ys.tolist(), xs.tolist()))
    seen = {(ys[0], xs[0])}
    queue = [(int(ys[0]), int(xs[0]))]
    while queue:
        y, x = queue.pop()
        for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if (ny, nx) in member and (ny, nx) not in seen:
                seen.add((ny, nx))
                queue.append((ny, nx))
    return len(seen) == len(member)


def _grain(rng: np.random.Generator, shape: tuple[int, int], density: float,
           amplitude: float) -> np.ndarray:
    """Faint dense grain: random pixels nudged up or down by amplitude."""
    field = np.zeros(shape)
    hits = rng.random(shape) < density
    field[hits] = rng.choice([-amplitude, amplitude], size=int(hits.sum()))
    return field


def make_fixture(seed: int, width: int = 1024, height: int = 512):
    """One synthetic scene: textured background, solid object(s), exact mask.

    Background texture is deliberately low-contrast (blotches, waves,
    grain) so no single texel outweighs an object boundary. Returns
    (rgb array in [0, 1], binary mask array).
    """
    from pansal.raster import resize_bilinear

    rng = np.random.default_rng(seed)
    base = np.array([0.16, 0.18, 0.22]) + rng.uniform(-0.04, 0.04, size=3)
    img = np.empty((height, width, 3))
    img[:] = base
    yy, xx = np.mgrid[0:height, 0:width]
    blotch = resize_bilinear(rng.normal(0.0, 1.0, size=(8, 16)), width, height)
    img += 0.03 * blotch[..., None]
    img += 0.012 * np.sin(2 * np.pi * xx / rng.integers(40, 90))[..., None]
    img += 0.008 * np.sin(2 * np.pi * yy / rng.integers(30, 70))[..., None]
    img += rng.normal(0.0, 0.01, size=(height, width, 1))
    img += _grain(rng, (height, width), density=0.04, amplitude=0.05)[..., None]

    mask = np.zeros((height, width), dtype=bool)
    palette = [
        np.array([0.82, 0.33, 0.21]),
        np.array([0.25, 0.62, 0.81]),
        np.array([0.78, 0.68, 0.22]),
        np.array([0.62, 0.28, 0.66]),
    ]
    # One color per scene: objects with unequal background isolation rank
    # unevenly, which is a property of the method, not of a fixture.
    color = palette[seed % len(palette)]
    n_objects = 1 if seed % 3 else 2
    for i in range(n_objects):
        cy = int(height * rng.uniform(0.3, 0.7))
        cx = int(width * rng.uniform(0.25, 0.75) / n_objects + i * width * 0.45)
        cx = min(max(cx, 90), width - 90)
        shape_kind = (seed + i) % 3
        if shape_kind == 0:
            r = int(rng.uniform(0.14, 0.2) * height)
            obj = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        elif shape_kind == 1:
            hw = int(rng.uniform(0.12, 0.17) * height)
            hh = int(rng.uniform(0.16, 0.22) * height)
            obj = (np.abs(yy - cy) <= hh) & (np.abs(xx - cx) <= hw)
        else:
            ry = int(rng.uniform(0.13, 0.18) * height)
            rx = int(rng.uniform(0.18, 0.26) * height)
            obj = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        img[obj] = color + rng.normal(0.0, 0.008, size=(int(obj.sum()), 3))
        mask |= obj

    return np.clip(img, 0.0, 1.0), mask


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    """Ten synthetic scenes written to disk as images/ and masks/ PNG pairs."""
    from pansal.raster import save_png

    root = tmp_path_factory.mktemp("corpus")
    img_dir = root / "images"
    mask_dir = root / "masks"
    img_dir.mkdir()
    mask_dir.mkdir()
    names = []
    for seed in range(10):
        rgb, mask = make_fixture(seed)
        name = f"scene{seed:02d}"
        save_png(img_dir / f"{name}.png", rgb)
        save_png(mask_dir / f"{name}.png", mask.astype(np.float64))
        names.append(name)
    return {"root": root, "images": img_dir, "masks": mask_dir, "names": names}
