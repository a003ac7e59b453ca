"""Texture-feature similarity search over overlapping image patches.

Pipeline: load an image, slide a square window one pixel at a time to get
every patch, describe each patch with nine texture statistics, min-max
normalize the columns, then answer "which patches look like this one" by
exhaustive cosine scan or an exact Euclidean kd-tree.
"""

from .errors import (
    DecodeError,
    IndexFormatError,
    InvalidParamsError,
    InvalidPatchSizeError,
    OutOfBoundsError,
    PatchSimError,
)
from .features import (
    FEATURE_NAMES,
    N_FEATURES,
    FeatureMatrix,
    FeatureParams,
    GaborParams,
    GlcmParams,
    LbpParams,
    apply_minmax,
    feature_vector,
    gabor_kernel,
    gabor_response,
    glcm,
    glcm_metrics,
    hist_energy,
    hist_entropy,
    lbp_code,
    lbp_map,
    normalize_minmax,
    normalized_histogram,
    params_from_mapping,
)
from .grid_features import build_feature_matrix
from .image import (
    GrayImage,
    GridMeta,
    PatchGrid,
    PatchView,
    annotate,
    decode_image,
    encode_png,
    extract_patches,
    load_image,
    save_png,
    to_grayscale,
)
from .kdtree import KdTree, kd_build, kd_knn
from .nnsearch import (
    BenchReport,
    Neighbor,
    QueryResult,
    benchmark,
    brute_knn,
    cosine_distance,
    euclidean_distance,
    kdtree_knn,
    query,
)
from .store import load_index, save_index

__version__ = "0.1.0"

__all__ = [
    "PatchSimError",
    "DecodeError",
    "InvalidPatchSizeError",
    "OutOfBoundsError",
    "InvalidParamsError",
    "IndexFormatError",
    "GrayImage",
    "GridMeta",
    "PatchGrid",
    "PatchView",
    "to_grayscale",
    "extract_patches",
    "load_image",
    "decode_image",
    "encode_png",
    "save_png",
    "annotate",
    "FEATURE_NAMES",
    "N_FEATURES",
    "LbpParams",
    "GlcmParams",
    "GaborParams",
    "FeatureParams",
    "params_from_mapping",
    "normalized_histogram",
    "hist_energy",
    "hist_entropy",
    "lbp_code",
    "lbp_map",
    "glcm",
    "glcm_metrics",
    "gabor_kernel",
    "gabor_response",
    "feature_vector",
    "FeatureMatrix",
    "normalize_minmax",
    "apply_minmax",
    "build_feature_matrix",
    "KdTree",
    "kd_build",
    "kd_knn",
    "cosine_distance",
    "euclidean_distance",
    "Neighbor",
    "QueryResult",
    "brute_knn",
    "kdtree_knn",
    "query",
    "BenchReport",
    "benchmark",
    "save_index",
    "load_index",
    "__version__",
]
