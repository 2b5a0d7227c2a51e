"""Camera-radar depth fusion.

Radar returns carry no elevation, so each one is expanded into a column of
depth candidates; a LiDAR map labels the candidates that look correct, a small
trained scorer reproduces that judgment from the image alone, and the accepted
candidates form a sparse depth map that image-guided interpolation densifies.
"""

from radarfuse._core import (
    CameraIntrinsics,
    ConfigError,
    ErmBuildResult,
    ErmEntry,
    EstimatedMap,
    FileWriteError,
    FormatError,
    MetricsReport,
    Model,
    PcrmResult,
    RadarReturn,
    RmBuildResult,
    SparseDepthMap,
    binary_auc,
    build_erm,
    build_rm,
    complete_depth,
    compute_expansion_pixels,
    evaluate_depth,
    generate_scene,
    load_pgm,
    load_sdm1,
    load_sdm2,
    save_sdm1,
    save_sdm2,
    select_pcrm,
)

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "ConfigError",
    "ErmBuildResult",
    "ErmEntry",
    "EstimatedMap",
    "FileWriteError",
    "FormatError",
    "MetricsReport",
    "Model",
    "PcrmResult",
    "RadarReturn",
    "RmBuildResult",
    "SparseDepthMap",
    "binary_auc",
    "build_erm",
    "build_rm",
    "complete_depth",
    "compute_expansion_pixels",
    "evaluate_depth",
    "generate_scene",
    "load_pgm",
    "load_sdm1",
    "load_sdm2",
    "save_sdm1",
    "save_sdm2",
    "select_pcrm",
]
