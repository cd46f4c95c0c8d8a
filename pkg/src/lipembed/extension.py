"""Extension of a sampled bi-Lipschitz embedding to a tame homeomorphism.

Pipeline: flatten X into R^{d} x 0 and f(X) into 0 x R^{d} x 0 (d = 2k+1, or
2k locally), choose coordinates in which every mixed projection q_r of the
graph is bi-Lipschitz, then swap the x-coordinates for the y-coordinates one
at a time with alternating shears P_{r-1} (install y_r) and Q_{r-1} (remove x_r).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalDriftError, PreconditionError, SearchFailure
from .geometry import (
    DistortionReport,
    PointCloud,
    SampledMap,
    distortion,
    distortion_arrays,
)
from .lipschitz import SampledLipschitzFunction
from .projection import (
    EPSILON_MIN,
    default_radius_schedule,
    germ_whitney_reduce,
    whitney_reduce,
    _check_schedule,
    _step_seeds,
)
from .tame import (
    ShearMap,
    TameMap,
    UnimodularMap,
    coordinate_projection,
    evaluate,
    linear_tame,
    transvection,
)

log = logging.getLogger(__name__)

STAGE_DRIFT = 1e-6
INTERP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SplitCoordinates:
    S: UnimodularMap
    T: UnimodularMap
    q_distortions: list

    @property
    def min_lower(self) -> float:
        return min((q.lower for q in self.q_distortions), default=1.0)


@dataclass(frozen=True, eq=False)
class ExtensionResult:
    F: TameMap
    isotopy_ready: bool
    interpolation_error: float
    report: Optional[DistortionReport]
    split: Optional[SplitCoordinates] = None
    stage_errors: list = field(default_factory=list)
    kept_indices: Optional[np.ndarray] = None
    final_radius: Optional[float] = None
    tolerance: float = 0.0

    def summary(self) -> dict:
        return {
            "factors": len(self.F.factors),
            "isotopy_ready": self.isotopy_ready,
            "interpolation_error": self.interpolation_error,
            "tolerance": self.tolerance,
            "distortion": None if self.report is None else self.report.to_dict(),
            "split_min_lower": None if self.split is None else self.split.min_lower,
            "max_stage_error": max(self.stage_errors, default=0.0),
            "final_radius": self.final_radius,
            "kept_indices": None if self.kept_indices is None else self.kept_indices.tolist(),
        }


def mixed_projection(z: np.ndarray, w: np.ndarray, r: int) -> np.ndarray:
    """q_r = (z_1..z_r, w_{r+1}..w_n)."""
    return np.hstack([z[:, :r], w[:, r:]])


def random_unimodular(n: int, rng: np.random.Generator, sweeps: int = 2) -> np.ndarray:
    """Product of random transvections, coefficients uniform in [-1, 1]."""
    M = np.eye(n)
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for _ in range(sweeps):
        for idx in rng.permutation(len(pairs)):
            i, j = pairs[idx]
            M[i] += rng.uniform(-1.0, 1.0) * M[j]
    return M


def split_coordinates(graph_cloud, seed: int = 0, trials: int = 64,
                      threshold: float = EPSILON_MIN) -> SplitCoordinates:
    """Find det-1 S, T making every q_r of the graph bi-Lipschitz on samples.

    The identity is tried first, then ``trials - 1`` random transvection
    products; the candidate with the largest minimum lower distortion wins.
    """
    pts = graph_cloud.points if isinstance(graph_cloud, PointCloud) else np.asarray(graph_cloud, float)
    if pts.shape[1] % 2:
        raise PreconditionError("graph cloud must live in an even-dimensional space")
    h = pts.shape[1] // 2
    x, y = pts[:, :h], pts[:, h:]
    eye = UnimodularMap(np.eye(h))
    if len(pts) < 2:
        return SplitCoordinates(eye, eye, [])
    for name, block in (("first", x), ("second", y)):
        rep = distortion_arrays(pts, block)
        if rep.lower < threshold:
            raise PreconditionError(
                f"{name} coordinate block of the graph is not bi-Lipschitz on samples "
                f"(lower {rep.lower:.3e}, witness {rep.witness_lower})"
            )
    rng = np.random.default_rng(seed)
    best = None
    for trial in range(max(trials, 1)):
        if trial == 0 or h <= 1:
            S = T = np.eye(h)
        else:
            S = random_unimodular(h, rng)
            T = random_unimodular(h, rng)
        z, w = x @ S.T, y @ T.T
        reps = [distortion_arrays(pts, mixed_projection(z, w, r)) for r in range(h + 1)]
        score = min(rep.lower for rep in reps)
        if best is None or score > best[0]:
            best = (score, S, T, reps)
        if h <= 1:
            break
    score, S, T, reps = best
    if score < threshold:
        bad = int(np.argmin([rep.lower for rep in reps]))
        raise SearchFailure(
            f"no split found: best minimum lower distortion {score:.3e} at r={bad}",
            best=(S, T, bad), stage="split",
        )
    return SplitCoordinates(UnimodularMap(S), UnimodularMap(T), reps)


def _complete_rotation(W: np.ndarray, n: int, positions: Sequence[int]) -> np.ndarray:
    """Orthogonal det-1 matrix whose rows at ``positions`` are the rows of ``W``."""
    d = W.shape[0]
    R = np.zeros((n, n))
    if d:
        Q, _ = np.linalg.qr(W.T, mode="complete")
        comp = Q[:, d:].T
    else:
        comp = np.eye(n)
    others = [i for i in range(n) if i not in set(positions)]
    for row, pos in enumerate(positions):
        R[pos] = W[row]
    for row, pos in enumerate(others):
        R[pos] = comp[row]
    if np.linalg.det(R) < 0:
        R[others[0]] *= -1.0
    return R


def flatten(points: np.ndarray, W: np.ndarray, positions: Sequence[int]) -> TameMap:
    """Tame A with A(x_i) = W x_i placed at ``positions`` and zeros elsewhere."""
    n = points.shape[1]
    rot = linear_tame(_complete_rotation(W, n, positions))
    rotated = evaluate(rot, points)
    return rot.then(coordinate_projection(rotated, positions))


def _block_linear(n: int, M: np.ndarray, offset: int) -> TameMap:
    full = np.eye(n)
    h = M.shape[0]
    full[offset:offset + h, offset:offset + h] = M
    return linear_tame(full)


def _other(N: int, axis: int) -> tuple:
    return tuple(c for c in range(N) if c != axis)


def swap_core(u: np.ndarray, v: np.ndarray, n: int, split: SplitCoordinates,
              start: np.ndarray):
    """Shears moving (u, 0) to (0, v) in the first N = d+1 coordinates.

    ``start`` holds the actual sample state (u_i, ~0, ...) in R^n.  Returns the
    tame map and the per-stage maximum deviation from the expected state.
    """
    d = u.shape[1]
    N = d + 1
    S, T = split.S.matrix, split.T.matrix
    T1 = _block_linear(n, S, 0)
    state = evaluate(T1, start)
    z = u @ S.T
    w = v @ T.T
    factors = list(T1.factors)
    stage_errors = []
    for r in range(d, 0, -1):
        # A_{r-1}: coordinate r receives w_r as a function of everything else
        dom = state[:, list(_other(N, r))]
        P = SampledLipschitzFunction(dom, w[:, r - 1] - state[:, r])
        a = ShearMap(r, P, 1, n, _other(N, r))
        state = a.apply(state)
        # B_{r-1}: coordinate r-1 (holding z_r) is cleared
        dom = state[:, list(_other(N, r - 1))]
        Q = SampledLipschitzFunction(dom, state[:, r - 1])
        b = ShearMap(r - 1, Q, -1, n, _other(N, r - 1))
        state = b.apply(state)
        factors += [a, b]
        expected = np.hstack([z[:, :r - 1], np.zeros((len(z), 1)), w[:, r - 1:]])
        err = float(np.max(np.abs(state[:, :N] - expected), initial=0.0))
        stage_errors.append(err)
        if err > STAGE_DRIFT * (1.0 + float(np.max(np.abs(expected), initial=0.0))):
            raise NumericalDriftError(f"stage r={r} drifted by {err:.3e}")
    Tinv = _block_linear(n, np.linalg.inv(T), 1)
    factors += list(Tinv.factors)
    return TameMap(n, tuple(factors)), stage_errors


def _assemble(X, Y, WX, WY, d, seed, split_trials, graph_split=None):
    n = X.shape[1]
    N = d + 1
    A = flatten(X, WX, range(d))
    B = flatten(Y, WY, range(1, d + 1))
    AX = evaluate(A, X)
    BY = evaluate(B, Y)
    u, v = AX[:, :d], BY[:, 1:N]
    split = graph_split if graph_split is not None else split_coordinates(
        np.hstack([u, v]), seed=seed, trials=split_trials)
    core, stages = swap_core(u, v, n, split, AX)
    F = A.then(core).then(B.inverse())
    return F, split, stages


def _finalize(F, X, Y, split, stages, kept=None, radius=None, tol=INTERP_TOL) -> ExtensionResult:
    FX = evaluate(F, X)
    err = float(np.max(np.linalg.norm(FX - Y, axis=1))) if len(X) else 0.0
    tol = tol * (1.0 + float(np.max(np.linalg.norm(Y, axis=1), initial=0.0)))
    if err > tol:
        raise NumericalDriftError(f"interpolation error {err:.3e} exceeds {tol:.3e}")
    report = distortion_arrays(X, FX) if len(X) >= 2 else None
    return ExtensionResult(F, F.is_shear_only, err, report, split, stages, kept, radius, tol)


def _check_map(f: SampledMap, k: int):
    X = f.source.points
    Y = f.images
    if X.shape[1] != Y.shape[1]:
        raise PreconditionError("source and target must share the ambient space")
    if k < 0 or k > X.shape[1]:
        raise PreconditionError(f"invalid intrinsic dimension {k}")
    if len(X) >= 2 and distortion_arrays(X, Y).lower < EPSILON_MIN:
        raise PreconditionError("sampled map is not bi-Lipschitz (lower distortion below threshold)")
    return X, Y


def extend_embedding(f: SampledMap, k: int, mode: str = "sa", seed: int = 0,
                     trials: int = 64, split_trials: int = 64, tol: float = INTERP_TOL) -> ExtensionResult:
    """Tame F of R^n with F = f on every sample.

    ``mode="sa"`` requires n >= 2k+2, ``mode="plain"`` n >= 4k+2; both run the
    same construction.
    """
    X, Y = _check_map(f, k)
    n = X.shape[1]
    need = {"sa": 2 * k + 2, "plain": 4 * k + 2}.get(mode)
    if need is None:
        raise PreconditionError(f"unknown mode {mode!r}")
    if n < need:
        raise PreconditionError(f"ambient dimension {n} < {need} required in {mode} mode")
    d = 2 * k + 1
    sx, sy, ss = _step_seeds(seed, 3)
    try:
        rx = whitney_reduce(PointCloud(X, k, "X"), d, sx, trials)
    except SearchFailure as exc:
        exc.stage = "reduce-source"
        raise
    try:
        ry = whitney_reduce(PointCloud(Y, k, "Y"), d, sy, trials)
    except SearchFailure as exc:
        exc.stage = "reduce-target"
        raise
    F, split, stages = _assemble(X, Y, rx.matrix, ry.matrix, d, ss, split_trials)
    return _finalize(F, X, Y, split, stages, tol=tol)


def _origin_index(points: np.ndarray, what: str) -> int:
    hits = np.flatnonzero(np.all(points == 0.0, axis=1))
    if len(hits) != 1:
        raise PreconditionError(f"{what} must contain the origin exactly once")
    return int(hits[0])


def extend_embedding_local(f: SampledMap, k: int, radius_schedule: Sequence[float] = None,
                           seed: int = 0, trials: int = 64, split_trials: int = 64,
                           tol: float = INTERP_TOL) -> ExtensionResult:
    """Germ version: n >= 2k+1, f(0) = 0; samples outside the final working
    ball are discarded and the radius is reported."""
    X, Y = _check_map(f, k)
    n = X.shape[1]
    if n < 2 * k + 1:
        raise PreconditionError(f"ambient dimension {n} < 2k+1 = {2 * k + 1}")
    ix = _origin_index(X, "source")
    if not np.all(Y[ix] == 0.0):
        raise PreconditionError("f must send the origin to the origin")
    norms_x = np.linalg.norm(X, axis=1)
    radii = _check_schedule(radius_schedule if radius_schedule is not None
                            else default_radius_schedule(PointCloud(X, k)))
    d = 2 * k
    sx, sy, ss = _step_seeds(seed, 3)
    idx = np.flatnonzero(norms_x <= radii[0])
    rx = germ_whitney_reduce(PointCloud(X[idx], k, "X"), True, d, radii, sx, trials)
    idx = idx[rx.kept_indices]
    y_cloud = PointCloud(Y[idx], k, "Y")
    ry = germ_whitney_reduce(y_cloud, True, d, default_radius_schedule(y_cloud), sy, trials)
    idx = idx[ry.kept_indices]
    radius = rx.final_radius
    level = radii.index(radius)
    while True:
        Xs, Ys = X[idx], Y[idx]
        try:
            F, split, stages = _assemble(Xs, Ys, rx.matrix, ry.matrix, d, ss, split_trials)
            break
        except SearchFailure:
            level += 1
            if level >= len(radii):
                raise SearchFailure("radius schedule exhausted while splitting coordinates",
                                    stage="local-split")
            radius = radii[level]
            idx = idx[norms_x[idx] <= radius]
            log.info("split failed, shrinking working radius to %g", radius)
    return _finalize(F, Xs, Ys, split, stages, kept=idx, radius=radius, tol=tol)
