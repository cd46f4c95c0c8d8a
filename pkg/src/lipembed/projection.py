"""Generic-direction search and iterated secant-avoiding projections."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import PreconditionError, SearchFailure
from .geometry import (
    Direction,
    PointCloud,
    SampledMap,
    SecantSet,
    canonicalize,
    check_injective,
    distortion_arrays,
    pairwise_differences,
    secant_directions,
    sin_angles,
)

log = logging.getLogger(__name__)

EPSILON_MIN = 1e-6
DEFAULT_TRIALS = 64
_REFINE = 2


@dataclass(frozen=True, eq=False)
class ProjectionStep:
    direction: Direction
    epsilon: float
    resulting_dim: int
    frame: np.ndarray  # (n-1, n), orthonormal rows spanning direction^perp

    def to_dict(self) -> dict:
        return {
            "direction": self.direction.vector.tolist(),
            "epsilon": self.epsilon,
            "resulting_dim": self.resulting_dim,
            "frame": self.frame.tolist(),
        }


@dataclass(frozen=True, eq=False)
class ReductionResult:
    steps: list
    final_cloud: PointCloud
    composite_lower: float
    composite_upper: float = 1.0
    kept_indices: np.ndarray = None  # sample indices surviving radius restriction
    final_radius: Optional[float] = None
    radius_history: list = field(default_factory=list)

    @property
    def matrix(self) -> np.ndarray:
        """Composite linear map R^n -> R^target (product of the step frames)."""
        n = self.final_cloud.ambient_dim + len(self.steps)
        M = np.eye(n)
        for st in self.steps:
            M = st.frame @ M
        return M

    @property
    def epsilon_product(self) -> float:
        return float(np.prod([s.epsilon for s in self.steps])) if self.steps else 1.0

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "final_cloud": {
                "label": self.final_cloud.label,
                "ambient_dim": self.final_cloud.ambient_dim,
                "intrinsic_dim": self.final_cloud.intrinsic_dim,
                "points": self.final_cloud.points.tolist(),
            },
            "composite_lower": self.composite_lower,
            "composite_upper": self.composite_upper,
            "epsilon_product": self.epsilon_product,
            "kept_indices": None if self.kept_indices is None else self.kept_indices.tolist(),
            "final_radius": self.final_radius,
        }


def _min_sin(p: np.ndarray, dirs: np.ndarray) -> float:
    if len(dirs) == 0:
        return 1.0
    return float(np.min(sin_angles(p, dirs)))


def _refine(units: np.ndarray, start: np.ndarray, n: int, active_size: int = 1024,
            rounds: int = 4) -> np.ndarray:
    """Nelder-Mead on max |cos| restricted to the currently most dangerous
    secants; the active set grows until it contains the binding secant."""
    v = start
    active = np.zeros(len(units), dtype=bool)
    for _ in range(rounds):
        cos = np.abs(units @ v)
        top = np.argsort(-cos, kind="stable")[:active_size]
        if active[top[0]] and active.any():
            break
        active[top] = True
        sub = units[active]

        def objective(w, sub=sub):
            nw = np.linalg.norm(w)
            if nw < 1e-12:
                return 1.0
            return float(np.max(np.abs(sub @ w))) / nw

        res = minimize(objective, v, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 100 * n})
        v = canonicalize(res.x)
    return v


def find_avoiding_direction(secants, trials: int = DEFAULT_TRIALS, seed: int = 0,
                            threshold: float = EPSILON_MIN, dim: Optional[int] = None):
    """Direction maximising the minimum sine to all secant directions.

    Multi-start from ``trials`` uniform random unit vectors, then Nelder-Mead
    refinement of the best few.  Returns ``(Direction, epsilon)``.
    """
    dirs = secants.directions if isinstance(secants, SecantSet) else np.asarray(secants, dtype=float)
    n = dim if dim is not None else (secants.ambient_dim if isinstance(secants, SecantSet) else dirs.shape[1])
    if len(dirs) and dirs.shape[1] != n:
        n = dirs.shape[1]
    if n < 1:
        raise PreconditionError("no direction exists in R^0")
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    if len(dirs) == 0:
        e = np.zeros(n)
        e[-1] = 1.0
        return Direction(e), 1.0
    if n == 1:
        eps = _min_sin(np.ones(1), dirs)
        if eps < threshold:
            raise SearchFailure("R^1 has a single direction and it is a secant",
                                best=(Direction(np.ones(1)), eps))
        return Direction(np.ones(1)), eps

    rng = np.random.default_rng(seed)
    units = dirs / np.linalg.norm(dirs, axis=1)[:, None]

    cands = canonicalize(rng.standard_normal((trials, n)))
    scores = np.sqrt(np.clip(1.0 - np.max(np.abs(units @ cands.T), axis=0) ** 2, 0.0, None))
    # stable sort: ties keep the lowest candidate index
    order = np.argsort(-scores, kind="stable")[:_REFINE]

    best_vec = cands[order[0]]
    best_eps = _min_sin(best_vec, dirs)
    for k in order:
        v = _refine(units, cands[k], n)
        eps = _min_sin(v, dirs)
        if eps > best_eps:
            best_vec, best_eps = v, eps
    best = Direction(best_vec)
    if best_eps < threshold:
        raise SearchFailure(
            f"best avoiding direction reaches only epsilon={best_eps:.3e} < {threshold:g}",
            best=(best, best_eps),
        )
    return best, float(best_eps)


def orthonormal_frame(direction) -> np.ndarray:
    """Rows: orthonormal basis of the hyperplane orthogonal to ``direction``.

    Gram-Schmidt over the standard basis in index order, skipping the basis
    vector on which the direction has its largest component (lowest index on
    ties), so the result is deterministic and well conditioned.
    """
    d = direction.vector if isinstance(direction, Direction) else canonicalize(direction)
    n = d.shape[0]
    skip = int(np.argmax(np.abs(d)))
    basis = [d]
    rows = []
    for i in range(n):
        if i == skip:
            continue
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):
            for b in basis:
                v = v - np.dot(v, b) * b
        v /= np.linalg.norm(v)
        basis.append(v)
        rows.append(v)
    return np.array(rows).reshape(n - 1, n)


def project_cloud(cloud: PointCloud, direction, tol: float = 1e-12):
    """Orthogonal projection along ``direction`` in the frame of its complement."""
    d = direction if isinstance(direction, Direction) else Direction(direction)
    if d.dim != cloud.ambient_dim:
        raise PreconditionError(f"direction in R^{d.dim}, cloud in R^{cloud.ambient_dim}")
    frame = orthonormal_frame(d)
    pts = cloud.points @ frame.T
    check_injective(pts, tol, what=f"projection along {np.round(d.vector, 6).tolist()}")
    out = PointCloud(pts, min(cloud.intrinsic_dim, pts.shape[1]), cloud.label)
    return out, SampledMap(cloud, out)


def _pair_epsilon(points: np.ndarray, direction: Direction) -> float:
    """Exact min sine between ``direction`` and every pair difference of the sample."""
    if len(points) < 2:
        return 1.0
    return _min_sin(direction.vector, pairwise_differences(points))


def _step_seeds(seed: int, count: int):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(max(count, 1))]


def whitney_reduce(cloud: PointCloud, target_dim: int, seed: int = 0,
                   trials: int = DEFAULT_TRIALS) -> ReductionResult:
    """Project one codimension at a time, each time along a direction avoiding all secants."""
    k = cloud.intrinsic_dim
    n = cloud.ambient_dim
    if target_dim < 2 * k + 1:
        raise PreconditionError(
            f"target dimension {target_dim} below 2k+1 = {2 * k + 1}; no global guarantee"
        )
    if target_dim > n:
        raise PreconditionError(f"target dimension {target_dim} exceeds ambient {n}")
    steps = []
    current = cloud
    for step_seed in _step_seeds(seed, n - target_dim)[: n - target_dim]:
        if len(current) >= 2:
            direction, _ = find_avoiding_direction(secant_directions(current), trials, step_seed)
        else:
            direction, _ = find_avoiding_direction(np.empty((0, current.ambient_dim)), trials,
                                                   step_seed, dim=current.ambient_dim)
        eps = _pair_epsilon(current.points, direction)
        if eps < EPSILON_MIN:
            raise SearchFailure(f"projection epsilon {eps:.3e} below {EPSILON_MIN:g}",
                                best=(direction, eps))
        projected, _ = project_cloud(current, direction)
        steps.append(ProjectionStep(direction, eps, projected.ambient_dim,
                                    orthonormal_frame(direction)))
        current = projected
    return _finish(cloud, current, steps)


def _finish(cloud, current, steps, kept=None, radius=None, history=None) -> ReductionResult:
    if len(cloud if kept is None else kept) >= 2 and steps:
        src = cloud.points if kept is None else cloud.points[kept]
        rep = distortion_arrays(src, current.points)
        lower, upper = rep.lower, rep.upper
        prod = float(np.prod([s.epsilon for s in steps]))
        if lower < prod * (1 - 1e-9):
            raise AssertionError(f"composite lower {lower} below product of epsilons {prod}")
        if upper > 1 + 1e-9:
            raise AssertionError(f"composite upper {upper} exceeds 1")
    else:
        lower = upper = 1.0
    return ReductionResult(steps, current, lower, upper,
                           None if kept is None else np.asarray(kept),
                           radius, history or [])


def default_radius_schedule(cloud: PointCloud, levels: int = 20) -> list:
    r0 = float(np.max(np.linalg.norm(cloud.points, axis=1)))
    if r0 == 0:
        return [1.0]
    return [r0 * 2.0 ** (-j) for j in range(levels + 1)]


@dataclass(frozen=True, eq=False)
class GermSecantData:
    radius_schedule: list
    limit_directions: SecantSet
    full_directions: SecantSet


def germ_secant_data(cloud: PointCloud, radius_schedule, min_points: int = 3,
                     norms=None) -> GermSecantData:
    """Secants of the smallest scheduled ball holding ``min_points`` samples
    (stand-in for the limit directions at the origin) and of the whole sample."""
    radii = list(radius_schedule)
    if norms is None:
        norms = np.linalg.norm(cloud.points, axis=1)
    need = min(min_points, len(cloud))
    inner = radii[0]
    for r in radii:
        if np.count_nonzero(norms <= r) >= need:
            inner = r
    inside = cloud.points[norms <= inner]
    n = cloud.ambient_dim
    if len(inside) >= 2:
        limit = secant_directions(PointCloud(inside, cloud.intrinsic_dim, cloud.label))
    else:
        limit = SecantSet(np.empty((0, n)), cloud.label, n)
    full = secant_directions(cloud) if len(cloud) >= 2 else SecantSet(np.empty((0, n)), cloud.label, n)
    return GermSecantData(radii, limit, full)


def _check_schedule(radii):
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise PreconditionError("radius schedule must be non-empty and positive")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise PreconditionError("radius schedule must be strictly decreasing")
    return radii


def germ_whitney_reduce(cloud: PointCloud, origin_included: bool = True, target_dim: int = None,
                        radius_schedule: Sequence[float] = None, seed: int = 0,
                        trials: int = DEFAULT_TRIALS) -> ReductionResult:
    """Local reduction to R^{2k}: avoid limit secants at the origin, then shrink
    the working ball until the chosen direction also avoids every secant in it.

    A direction counts as avoiding the secants in a ball when its minimum sine
    to them is at least half the minimum sine it achieves on the limit
    directions (and at least ``EPSILON_MIN``).
    """
    k = cloud.intrinsic_dim
    n = cloud.ambient_dim
    if target_dim is None:
        target_dim = 2 * k
    if target_dim < 2 * k:
        raise PreconditionError(f"target dimension {target_dim} below 2k = {2 * k}")
    if target_dim > n:
        raise PreconditionError(f"target dimension {target_dim} exceeds ambient {n}")
    norms = np.linalg.norm(cloud.points, axis=1)
    has_origin = bool(np.any(norms == 0))
    if origin_included and not has_origin:
        raise PreconditionError("germ sample must contain the origin")
    if not has_origin:
        cloud = PointCloud(np.vstack([np.zeros(n), cloud.points]), k, cloud.label)
        norms = np.linalg.norm(cloud.points, axis=1)
    radii = _check_schedule(radius_schedule if radius_schedule is not None
                            else default_radius_schedule(cloud))
    kept = np.flatnonzero(norms <= radii[0])
    pts = cloud.points[kept]
    steps = []
    history = []
    j = 0
    for step_seed in _step_seeds(seed, n - target_dim)[: n - target_dim]:
        current = PointCloud(pts, min(k, pts.shape[1]), cloud.label)
        data = germ_secant_data(current, radii[j:], norms=norms[kept])
        dim = current.ambient_dim
        if dim == 1:
            direction, eps_limit = Direction(np.ones(1)), _min_sin(np.ones(1), data.limit_directions.directions)
        else:
            try:
                direction, eps_limit = find_avoiding_direction(
                    data.limit_directions, trials, step_seed, threshold=0.0, dim=dim)
            except SearchFailure as exc:  # pragma: no cover - threshold 0 never fails
                direction, eps_limit = exc.best
        need = max(0.5 * eps_limit, EPSILON_MIN)
        cur_norms = norms[kept]  # radii measured in the original ambient space
        while True:
            if j >= len(radii):
                raise SearchFailure(
                    f"radius schedule exhausted before the direction avoided nearby secants "
                    f"(limit epsilon {eps_limit:.3e})", best=(direction, eps_limit), stage="germ")
            inside = cur_norms <= radii[j]
            eps = _pair_epsilon(pts[inside], direction)
            history.append((radii[j], eps))
            if eps >= need:
                break
            j += 1
        pts = pts[inside]
        kept = kept[inside]
        cur = PointCloud(pts, min(k, pts.shape[1]), cloud.label)
        projected, _ = project_cloud(cur, direction)
        steps.append(ProjectionStep(direction, eps, projected.ambient_dim,
                                    orthonormal_frame(direction)))
        pts = projected.points
    final = PointCloud(pts, min(k, pts.shape[1]), cloud.label)
    return _finish(cloud, final, steps, kept=kept, radius=radii[min(j, len(radii) - 1)],
                   history=history)
