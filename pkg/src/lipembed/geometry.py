"""Point clouds, secant directions and sampled distortion.

Everything here works on finite samples: a set X is a ``PointCloud`` and its
secant set is the finite collection of directions [x - y].
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySecantError, NonInjectiveError, PreconditionError

ZERO_TOL = 1e-12
DEDUP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    intrinsic_dim: int = 0
    label: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise PreconditionError("a point cloud needs at least one point given as a 2-d array")
        if not np.all(np.isfinite(pts)):
            raise PreconditionError("point cloud contains non-finite coordinates")
        if not 0 <= self.intrinsic_dim <= pts.shape[1]:
            raise PreconditionError(
                f"intrinsic_dim {self.intrinsic_dim} outside [0, {pts.shape[1]}]"
            )
        uniq = np.unique(pts, axis=0)
        if uniq.shape[0] != pts.shape[0]:
            raise PreconditionError(f"point cloud '{self.label}' has coincident points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, idx, label=None) -> "PointCloud":
        return PointCloud(self.points[np.asarray(idx)], self.intrinsic_dim, label or self.label)


def canonicalize(v) -> np.ndarray:
    """Unit vector(s) with first nonzero coordinate positive (a point of RP^{n-1})."""
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    v = np.atleast_2d(v)
    norms = np.linalg.norm(v, axis=1)
    if np.any(norms == 0):
        raise PreconditionError("zero vector has no direction")
    u = v / norms[:, None]
    nz = np.abs(u) > ZERO_TOL
    first = np.argmax(nz, axis=1)
    signs = np.sign(u[np.arange(len(u)), first])
    signs[signs == 0] = 1.0
    u = u * signs[:, None]
    return u[0] if single else u


@dataclass(frozen=True, eq=False)
class Direction:
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", canonicalize(self.vector))

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True, eq=False)
class SecantSet:
    directions: np.ndarray  # (s, n), canonical, deduplicated
    source: str = ""
    ambient_dim: int = field(default=0)

    def __len__(self) -> int:
        return self.directions.shape[0]


def pair_indices(m: int):
    """Row/column index arrays in the order used by scipy's condensed distances."""
    return np.triu_indices(m, 1)


def pairwise_differences(points: np.ndarray) -> np.ndarray:
    i, j = pair_indices(points.shape[0])
    return points[i] - points[j]


def dedup_directions(dirs: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Greedy deduplication in index order; a direction is dropped when an
    already kept one lies within ``tol`` in chordal distance."""
    if len(dirs) <= 1:
        return dirs
    order = np.lexsort(dirs.T[::-1])
    dirs = dirs[order]
    tree = cKDTree(dirs)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return dirs
    neighbours: dict[int, list[int]] = {}
    for a, b in pairs:
        lo, hi = (a, b) if a < b else (b, a)
        neighbours.setdefault(hi, []).append(lo)
    keep = np.ones(len(dirs), dtype=bool)
    for i in range(len(dirs)):
        for j in neighbours.get(i, ()):
            if keep[j]:
                keep[i] = False
                break
    return dirs[keep]


def secant_directions(cloud: PointCloud, dedup: bool = True) -> SecantSet:
    if len(cloud) < 2:
        raise EmptySecantError("a single-point cloud has no secants")
    dirs = canonicalize(pairwise_differences(cloud.points))
    if dedup:
        dirs = dedup_directions(dirs)
    return SecantSet(dirs, cloud.label, cloud.ambient_dim)


def _as_vector(p) -> np.ndarray:
    return np.asarray(p.vector if isinstance(p, Direction) else p, dtype=float)


def sin_angle(p, s) -> float:
    """Sine of the angle between two lines through the origin."""
    p = _as_vector(p)
    s = _as_vector(s)
    if p.shape != s.shape:
        raise PreconditionError(f"dimension mismatch: {p.shape} vs {s.shape}")
    return float(sin_angles(p, s[None, :])[0])


def sin_angles(p: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Vectorised sine of the angle between line ``p`` and each row of ``dirs``.

    Uses the norm of the orthogonal residual rather than sqrt(1 - cos^2) so that
    identical lines give exactly (not approximately) zero.
    """
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    dirs = np.asarray(dirs, dtype=float)
    norms = np.linalg.norm(dirs, axis=1)
    u = dirs / norms[:, None]
    resid = u - np.outer(u @ p, p)
    return np.clip(np.linalg.norm(resid, axis=1), 0.0, 1.0)


def sin_angle_formula(p, s) -> float:
    """The textbook expression sqrt(1 - <p,s>^2 / (|p|^2 |s|^2)); kept as a cross-check."""
    p = _as_vector(p)
    s = _as_vector(s)
    c2 = float(np.dot(p, s)) ** 2 / (float(np.dot(p, p)) * float(np.dot(s, s)))
    return float(np.sqrt(max(0.0, 1.0 - c2)))


@dataclass(frozen=True, eq=False)
class SampledMap:
    source: PointCloud
    target: PointCloud
    pairing: np.ndarray = None  # source i -> target pairing[i]

    def __post_init__(self):
        m = len(self.source)
        if len(self.target) != m:
            raise PreconditionError(
                f"source has {m} points but target has {len(self.target)}"
            )
        pairing = np.arange(m) if self.pairing is None else np.asarray(self.pairing, dtype=int)
        if pairing.shape != (m,) or not np.array_equal(np.sort(pairing), np.arange(m)):
            raise PreconditionError("pairing is not a bijection of sample indices")
        object.__setattr__(self, "pairing", pairing)

    @property
    def images(self) -> np.ndarray:
        """Target points ordered like the source points."""
        return self.target.points[self.pairing]

    @classmethod
    def from_arrays(cls, src, dst, k: int = 0, labels=("X", "Y")) -> "SampledMap":
        src = np.asarray(src, dtype=float)
        dst = np.asarray(dst, dtype=float)
        return cls(PointCloud(src, min(k, src.shape[1]), labels[0]),
                   PointCloud(dst, min(k, dst.shape[1]), labels[1]))


@dataclass(frozen=True)
class DistortionReport:
    lower: float
    upper: float
    witness_lower: tuple
    witness_upper: tuple
    injective: bool = True

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "witness_lower": list(self.witness_lower),
            "witness_upper": list(self.witness_upper),
            "injective": self.injective,
        }


def distortion_arrays(src: np.ndarray, dst: np.ndarray) -> DistortionReport:
    """Exhaustive scan of ||f(x)-f(y)|| / ||x-y|| over all sample pairs."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    m = src.shape[0]
    if m < 2:
        raise PreconditionError("distortion needs at least two points")
    if dst.shape[0] != m:
        raise PreconditionError("source and target sizes differ")
    i, j = pair_indices(m)
    lower = np.inf
    upper = -np.inf
    wl = wu = (0, 1)
    # chunked to keep memory flat for large samples
    chunk = 1 << 20
    for start in range(0, len(i), chunk):
        a, b = i[start:start + chunk], j[start:start + chunk]
        d_src = np.linalg.norm(src[a] - src[b], axis=1)
        d_dst = np.linalg.norm(dst[a] - dst[b], axis=1) if dst.shape[1] else np.zeros(len(a))
        ratio = d_dst / d_src
        kmin = int(np.argmin(ratio))
        kmax = int(np.argmax(ratio))
        if ratio[kmin] < lower:
            lower, wl = float(ratio[kmin]), (int(a[kmin]), int(b[kmin]))
        if ratio[kmax] > upper:
            upper, wu = float(ratio[kmax]), (int(a[kmax]), int(b[kmax]))
    return DistortionReport(lower, upper, wl, wu, injective=lower > 0)


def distortion(fmap: SampledMap) -> DistortionReport:
    return distortion_arrays(fmap.source.points, fmap.images)


def min_pairwise_distance(points: np.ndarray):
    """Smallest pairwise distance and the pair attaining it (kd-tree, O(m log m))."""
    points = np.asarray(points, dtype=float)
    m = points.shape[0]
    if m < 2:
        return np.inf, None
    if points.shape[1] == 0:
        return 0.0, (0, 1)
    tree = cKDTree(points)
    d, idx = tree.query(points, k=2)
    k = int(np.argmin(d[:, 1]))
    pair = tuple(sorted((k, int(idx[k, 1]))))
    return float(d[k, 1]), pair


def check_injective(points: np.ndarray, tol: float = ZERO_TOL, what: str = "map"):
    d, pair = min_pairwise_distance(points)
    if d < tol:
        raise NonInjectiveError(f"{what} collapses sample points {pair} (distance {d:.3e})", pair)
