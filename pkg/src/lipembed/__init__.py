"""Bi-Lipschitz embeddings of sampled sets and their tame ambient extensions."""
import os

# LIPEMBED_THREADS caps BLAS/OpenMP threads; it must be set before numpy loads
_threads = os.environ.get("LIPEMBED_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from .errors import (  # noqa: E402
    LipembedError,
    NonInjectiveError,
    NotEquivalentError,
    NumericalDriftError,
    PreconditionError,
    SearchFailure,
)
from .geometry import (  # noqa: E402
    Direction,
    DistortionReport,
    PointCloud,
    SampledMap,
    SecantSet,
    distortion,
    secant_directions,
    sin_angle,
)
from .lipschitz import SampledLipschitzFunction, mcshane_extend  # noqa: E402
from .projection import (  # noqa: E402
    ProjectionStep,
    ReductionResult,
    find_avoiding_direction,
    germ_whitney_reduce,
    whitney_reduce,
)
from .tame import (  # noqa: E402
    ShearMap,
    TameMap,
    UnimodularMap,
    evaluate,
    graph_transfer,
    invert,
    isotopy_eval,
    projection_to_tame,
    sl_decompose,
)
from .extension import (  # noqa: E402
    ExtensionResult,
    SplitCoordinates,
    extend_embedding,
    extend_embedding_local,
    split_coordinates,
)
from .germs import (  # noqa: E402
    GermCurve,
    PiecewiseGermMap,
    PuiseuxBranch,
    ambient_curve_equivalence,
    contact_exponent,
    contact_exponent_numeric,
    eval_branch,
    match_halfbranches,
    stack_graphs,
    straighten_graph,
)
from .verify import GeodesicGraph, certify_extension, hausdorff, lne_ratio  # noqa: E402

__version__ = "0.1.0"
