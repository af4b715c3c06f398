"""Salient object detection for panoramic and conventional images.

Two bottom-up pathways: density-driven region growing (local mass
exponents, region contrast, dual manifold ranking) and sign-spectrum
fixation prediction pooled over proposal regions. The pathways fuse by
maxima normalization and summation, then sharpen along region geodesics.
"""

from .config import PipelineConfig, default_config
from .errors import (
    InvalidGroundTruthError,
    InvalidSpaceError,
    NoSeedsError,
    PipelineError,
)
from .metrics import EvalReport, evaluate
from .pipeline import (
    STAGE_FILENAMES,
    PipelineResult,
    StageBundle,
    batch_detect,
    detect,
    run_pipeline,
)
from .raster import (
    ColorSpace,
    GroundTruthMask,
    Raster,
    SaliencyMap,
    load_image,
    load_mask,
    normalize,
)

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig",
    "default_config",
    "PipelineError",
    "InvalidSpaceError",
    "NoSeedsError",
    "InvalidGroundTruthError",
    "EvalReport",
    "evaluate",
    "STAGE_FILENAMES",
    "PipelineResult",
    "StageBundle",
    "detect",
    "run_pipeline",
    "batch_detect",
    "ColorSpace",
    "Raster",
    "SaliencyMap",
    "GroundTruthMask",
    "load_image",
    "load_mask",
    "normalize",
    "__version__",
]
