"""Document photo dewarping via boundary-driven cubic-polynomial grids.

Pipeline: probability-mask refinement (guided filter + Otsu + largest
component) -> contour extraction and corner/side segmentation -> blended
curve families fitted with cubic polynomials -> intersection lattice ->
displacement field -> bicubic remap.  A metrics module covers geometric
fidelity (SSIM/MSE/NRMSE) and text readability (LD/JW/CER).
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .config import PipelineConfig, load_config, save_config
from .contour_geometry import (Contour, CornerQuad, SideSet, convex_hull,
                               detect_corners, extract_contour, segment_sides,
                               simplify_contour, simplify_polyline)
from .grid_builder import (CubicPoly, GridLine, WarpGrid, extrapolate_line,
                           find_intersections, fit_cubic, interpolate_family,
                           resample_side, smooth_line)
from .mask_pipeline import (GuidedFilterParams, OtsuResult, guided_filter,
                            otsu_binarize, select_largest_component)
from .metrics import (GeometryReport, TextReport, cer, evaluate_pair,
                      jaro_winkler, levenshtein, mse, nrmse, ssim)
from .pipeline import DewarpResult, dewarp_arrays, dewarp_batch, dewarp_one
from .remapper import (DisplacementField, UniformGrid, build_displacement_field,
                       make_uniform_grid, remap_image, resize_bicubic)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND", "PipelineConfig", "load_config", "save_config",
    "Contour", "CornerQuad", "SideSet", "convex_hull", "detect_corners",
    "extract_contour", "segment_sides", "simplify_contour", "simplify_polyline",
    "CubicPoly", "GridLine", "WarpGrid", "extrapolate_line", "find_intersections",
    "fit_cubic", "interpolate_family", "resample_side", "smooth_line",
    "GuidedFilterParams", "OtsuResult", "guided_filter", "otsu_binarize",
    "select_largest_component",
    "GeometryReport", "TextReport", "cer", "evaluate_pair", "jaro_winkler",
    "levenshtein", "mse", "nrmse", "ssim",
    "DewarpResult", "dewarp_arrays", "dewarp_batch", "dewarp_one",
    "DisplacementField", "UniformGrid", "build_displacement_field",
    "make_uniform_grid", "remap_image", "resize_bicubic",
    "__version__",
]
