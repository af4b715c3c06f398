"""End-to-end detection: both pathways, fusion, refinement, file outputs.

Stage maps are produced in a fixed order and, when stage dumping is on,
written under ``<stem>_stages/`` with fixed names (see STAGE_FILENAMES)
plus the superpixel label map (PGM), the region affinity edge list, and
the proposal mask as a PGM. All file writes go through a temp-and-rename
step so interrupted runs never leave partial outputs, and identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import io as _io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
from PIL import Image

from . import density as density_mod
from . import fixation as fixation_mod
from . import fusion as fusion_mod
from . import ranking as ranking_mod
from .config import PipelineConfig, default_config
from .errors import NoSeedsError
from .raster import (
    ColorSpace,
    Raster,
    SaliencyMap,
    load_image,
    normalize,
    resize_map,
    resize_raster,
    rgb_to_lab,
    save_pgm,
    to_gray,
)
from .superpixel import (
    RegionGraph,
    Segmentation,
    build_graph,
    region_means,
    save_graph_edges,
    save_labels_pgm,
    slic,
)

log = logging.getLogger(__name__)

STAGE_FILENAMES = (
    "01_density.png",
    "02_proposal_mask.png",
    "03_fg.png",
    "04_bg.png",
    "05_pathway1.png",
    "06_fixation.png",
    "07_pooled.png",
    "08_mn1.png",
    "09_mn2.png",
    "10_combined.png",
    "11_final.png",
)


@dataclass(frozen=True)
class StageBundle:
    """The eleven stage maps in pipeline order (field order matches
    STAGE_FILENAMES)."""

    density: SaliencyMap | None = None
    proposal_mask: SaliencyMap | None = None
    fg: SaliencyMap | None = None
    bg: SaliencyMap | None = None
    pathway1: SaliencyMap | None = None
    fixation: SaliencyMap | None = None
    pooled: SaliencyMap | None = None
    mn1: SaliencyMap | None = None
    mn2: SaliencyMap | None = None
    combined: SaliencyMap | None = None
    final: SaliencyMap | None = None

    def items(self) -> list[tuple[str, SaliencyMap | None]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


@dataclass(frozen=True)
class PipelineResult:
    final: SaliencyMap
    stages: StageBundle
    segmentation: Segmentation
    partition: Segmentation
    graph: RegionGraph


def _ensure_rgb(raster: Raster) -> Raster:
    if raster.space is ColorSpace.RGB:
        return raster
    if raster.space is ColorSpace.GRAY:
        return Raster(np.repeat(raster.data[:, :, None], 3, axis=2), ColorSpace.RGB)
    raise ValueError("pipeline input must be rgb or gray")


def run_pipeline(raster: Raster, config: PipelineConfig | None = None) -> PipelineResult:
    """Run detection on an in-memory raster and keep every stage map.

    The density pathway proposes object regions and grows them by dual
    manifold ranking; the fixation pathway pools the sign-spectrum map
    over the same proposal regions. The pathways are fused by maxima
    normalization and summation, then geodesically refined.
    """
    config = config or default_config()
    rgb = _ensure_rgb(raster)
    lab = rgb_to_lab(rgb)
    gray = to_gray(rgb)

    dmap = density_mod.density_map(gray, config.density.radii)
    partition = density_mod.segment_regions(lab, dmap, config.density.regions)
    contrast = density_mod.region_contrast(partition, dmap, config.density.bins)
    mask = density_mod.binarize_proposals(contrast.map)

    seg = slic(lab, config.slic.k, config.slic.compactness)
    graph = build_graph(seg, lab, config.ranking.sigma2)

    fixmap = fixation_mod.signature_saliency(
        rgb, config.fixation.resize, config.fixation.sigma_frac
    )
    pooled = fixation_mod.region_pool(
        fixmap, partition, mask, config.fixation.pool_keep_background
    )

    if config.ranking.seeds_from_fixation:
        seed_source = pooled.values
    else:
        seed_source = contrast.map.values * mask
    scores = region_means(seg.labels, seed_source, seg.num_regions)
    try:
        fseeds = ranking_mod.foreground_seeds(scores)
        fg = ranking_mod.grow_foreground(graph, fseeds, config.ranking.alpha)
    except NoSeedsError:
        log.warning("no foreground seeds: falling back to the proposal mask")
        fg = region_means(seg.labels, mask.astype(np.float64), seg.num_regions)
    bseeds = ranking_mod.background_seeds(graph)
    bg = ranking_mod.grow_background(graph, bseeds, config.ranking.alpha)
    pathway1 = ranking_mod.combine_pathway1(fg, bg, seg)

    mn_args = (
        config.fusion.mn_thresh,
        config.fusion.mn_neighborhood,
        config.fusion.mn_exclude_global,
    )
    mn1 = fusion_mod.maxima_normalize(pathway1, *mn_args)
    mn2 = fusion_mod.maxima_normalize(pooled, *mn_args)
    combined = fusion_mod.combine_pathways(pathway1, pooled, *mn_args)
    final = fusion_mod.geodesic_refine(combined, seg)

    d = dmap.values
    stages = StageBundle(
        density=normalize(SaliencyMap(d - d.min())),
        proposal_mask=SaliencyMap(mask.astype(np.float64)),
        fg=SaliencyMap(fg[seg.labels]),
        bg=SaliencyMap(bg[seg.labels]),
        pathway1=pathway1,
        fixation=fixmap,
        pooled=pooled,
        mn1=mn1,
        mn2=mn2,
        combined=combined,
        final=final,
    )
    return PipelineResult(
        final=final, stages=stages, segmentation=seg, partition=partition, graph=graph
    )


def detect(image_path: str | Path, config: PipelineConfig | None = None) -> PipelineResult:
    """Load an image file, optionally cap its size, and run the pipeline.

    With ``io.max_dim`` set, oversized inputs are processed at reduced
    resolution and only the final map is resampled back to native size;
    stage maps stay at processing resolution.
    """
    config = config or default_config()
    raster = load_image(image_path)
    native_w, native_h = raster.width, raster.height
    max_dim = config.io.max_dim
    if max_dim > 0 and max(native_w, native_h) > max_dim:
        scale = max_dim / max(native_w, native_h)
        raster = resize_raster(
            raster, max(1, round(native_w * scale)), max(1, round(native_h * scale))
        )
    result = run_pipeline(raster, config)
    if result.final.values.shape != (native_h, native_w):
        final = resize_map(result.final, native_w, native_h)
        result = PipelineResult(
            final=final,
            stages=result.stages,
            segmentation=result.segmentation,
            partition=result.partition,
            graph=result.graph,
        )
    return result


def atomic_write_bytes(path: Path, blob: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def _png_bytes(m: SaliencyMap) -> bytes:
    q = np.rint(np.clip(m.values, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = _io.BytesIO()
    Image.fromarray(q).save(buf, format="PNG")
    return buf.getvalue()


def process_image(image_path: str | Path, out_dir: str | Path, config: PipelineConfig) -> Path:
    """Detect one image and write its outputs; returns the final map path."""
    image_path = Path(image_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = detect(image_path, config)
    final_path = out_dir / f"{image_path.stem}.png"
    atomic_write_bytes(final_path, _png_bytes(result.final))

    if config.io.dump_stages:
        stage_dir = out_dir / f"{image_path.stem}_stages"
        stage_dir.mkdir(parents=True, exist_ok=True)
        for (_, m), filename in zip(result.stages.items(), STAGE_FILENAMES):
            if m is None:
                continue
            atomic_write_bytes(stage_dir / filename, _png_bytes(m))
        save_labels_pgm(stage_dir / "superpixels.pgm", result.segmentation)
        save_graph_edges(stage_dir / "graph_edges.txt", result.graph)
        mask = result.stages.proposal_mask
        if mask is not None:
            save_pgm(stage_dir / "02_proposal_mask.pgm", mask.values.astype(np.uint8), maxval=1)
    return final_path


def _worker(args: tuple[str, str, PipelineConfig]) -> tuple[str, str | None]:
    image_path, out_dir, config = args
    try:
        process_image(image_path, out_dir, config)
    except Exception as exc:  # collected and reported by the caller
        return image_path, f"{type(exc).__name__}: {exc}"
    return image_path, None


def batch_detect(
    image_paths: list[str | Path],
    out_dir: str | Path,
    config: PipelineConfig,
    workers: int = 1,
) -> list[tuple[str, str | None]]:
    """Process many images; returns (path, error-or-None) in input order.

    Failures are per image: one unreadable file does not stop the batch.
    """
    jobs = [(str(p), str(out_dir), config) for p in image_paths]
    if workers <= 1 or len(jobs) <= 1:
        return [_worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, jobs))


__all__ = [
    "STAGE_FILENAMES",
    "StageBundle",
    "PipelineResult",
    "run_pipeline",
    "detect",
    "process_image",
    "batch_detect",
    "atomic_write_bytes",
]
