"""Independent checks: sampled inner/outer metric ratio, Hausdorff distance and
end-to-end certification of an extension."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import PreconditionError
from .geometry import PointCloud, SampledMap, distortion_arrays
from .tame import TameMap, evaluate, invert, isotopy_eval


def default_rho(points: np.ndarray) -> float:
    """Three times the largest nearest-neighbour spacing."""
    d, _ = cKDTree(points).query(points, k=2)
    return 3.0 * float(d[:, 1].max())


@dataclass(frozen=True, eq=False)
class GeodesicGraph:
    nodes: PointCloud
    rho: float
    edges: np.ndarray = field(repr=False, default=None)  # (e, 2), i < j
    weights: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        pts = self.nodes.points
        pairs = cKDTree(pts).query_pairs(self.rho, output_type="ndarray")
        w = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1) if len(pairs) else np.zeros(0)
        object.__setattr__(self, "edges", pairs)
        object.__setattr__(self, "weights", w)
        ncomp, _ = connected_components(self.adjacency(), directed=False)
        if ncomp > 1:
            raise PreconditionError(
                f"geodesic graph has {ncomp} components at rho={self.rho:g}; increase rho"
            )

    def adjacency(self):
        m = len(self.nodes)
        e = self.edges
        return coo_matrix((self.weights, (e[:, 0], e[:, 1])), shape=(m, m)).tocsr()

    def shortest_paths(self) -> np.ndarray:
        return dijkstra(self.adjacency(), directed=False)


def lne_ratio(cloud, rho: float = None) -> float:
    """Max over node pairs of graph distance / Euclidean distance."""
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(np.asarray(cloud, dtype=float))
    if len(cloud) < 2:
        return 1.0
    rho = default_rho(cloud.points) if rho is None else float(rho)
    g = GeodesicGraph(cloud, rho)
    inner = g.shortest_paths()
    outer = squareform(pdist(cloud.points))
    iu = np.triu_indices(len(cloud), 1)
    return float(np.max(inner[iu] / outer[iu]))


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between finite sets (exact)."""
    a = a.points if isinstance(a, PointCloud) else np.atleast_2d(np.asarray(a, dtype=float))
    b = b.points if isinstance(b, PointCloud) else np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise PreconditionError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    d = cdist(a, b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class GridSpec:
    per_axis: int = 20
    lo: float = -10.0
    hi: float = 10.0

    def points(self, n: int) -> np.ndarray:
        axis = np.linspace(self.lo, self.hi, self.per_axis)
        mesh = np.meshgrid(*([axis] * n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def certify_extension(F: TameMap, f: SampledMap, grid_spec: GridSpec = GridSpec(),
                      interp_tol: float = 1e-8, roundtrip_tol: float = 1e-8) -> dict:
    """Interpolation, grid round trip, distortion on X and isotopy endpoints in one report."""
    X = f.source.points
    Y = f.images
    n = X.shape[1]
    if F.dim != n:
        raise PreconditionError(f"map dimension {F.dim} != sample dimension {n}")
    FX = evaluate(F, X)
    errs = np.linalg.norm(FX - Y, axis=1)
    worst = int(np.argmax(errs))
    scale = 1.0 + float(np.max(np.linalg.norm(Y, axis=1)))
    grid = grid_spec.points(n)
    Fg = evaluate(F, grid)
    rt = float(np.max(np.linalg.norm(invert(F, Fg) - grid, axis=1)))
    checks = {
        "interpolation": {
            "value": float(errs[worst]), "threshold": interp_tol * scale,
            "worst_index": worst, "passed": bool(errs[worst] <= interp_tol * scale),
        },
        "roundtrip": {"value": rt, "threshold": roundtrip_tol, "grid_points": len(grid),
                      "passed": rt <= roundtrip_tol},
    }
    if len(X) >= 2:
        got = distortion_arrays(X, FX)
        want = distortion_arrays(X, Y)
        rel = max(abs(got.lower - want.lower) / want.lower, abs(got.upper - want.upper) / want.upper)
        checks["distortion"] = {"value": rel, "threshold": 1e-6, "report": got.to_dict(),
                                "passed": rel <= 1e-6}
    if F.is_shear_only:
        iso0 = bool(np.array_equal(isotopy_eval(F, 0.0, grid), grid))
        iso1 = bool(np.array_equal(isotopy_eval(F, 1.0, grid), Fg))
        checks["isotopy"] = {"start_identity": iso0, "end_equals_map": iso1, "passed": iso0 and iso1}
    else:
        checks["isotopy"] = {"passed": False, "reason": "map has non-shear factors"}
    return {"passed": all(c["passed"] for c in checks.values()), "checks": checks}
