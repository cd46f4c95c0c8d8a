"""Tame homeomorphisms: compositions of triangular shears and det-1 linear maps.

A shear changes one coordinate ``axis`` by ``sign * p(x[inputs])`` and leaves the
rest alone, so it is inverted exactly by flipping ``sign``.  ``TameMap`` applies
its factors in list order (factor 0 first).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import NonInjectiveError, PreconditionError
from .geometry import PointCloud, SampledMap, distortion_arrays
from .lipschitz import SampledLipschitzFunction

DET_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearOffset:
    """p(u) = coeffs . u; used for the transvections produced by ``sl_decompose``."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float).ravel())

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def constant(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, u):
        return np.asarray(u, dtype=float) @ self.coeffs


Offset = Union[SampledLipschitzFunction, LinearOffset]


@dataclass(frozen=True, eq=False)
class ShearMap:
    axis: int
    offset: Offset
    sign: int
    dim: int
    inputs: tuple = None

    def __post_init__(self):
        if not 0 <= self.axis < self.dim:
            raise PreconditionError(f"axis {self.axis} outside [0, {self.dim})")
        if self.sign not in (1, -1):
            raise PreconditionError("sign must be +1 or -1")
        inputs = self.inputs
        if inputs is None:
            inputs = tuple(i for i in range(self.dim) if i != self.axis)
        inputs = tuple(int(i) for i in inputs)
        if self.axis in inputs:
            raise PreconditionError("a shear offset cannot depend on its own axis")
        if len(inputs) != self.offset.dim:
            raise PreconditionError(
                f"offset expects {self.offset.dim} inputs, shear supplies {len(inputs)}"
            )
        object.__setattr__(self, "inputs", inputs)

    def offset_values(self, pts: np.ndarray) -> np.ndarray:
        return self.offset(pts[:, list(self.inputs)])

    def apply(self, pts: np.ndarray, t: float = 1.0) -> np.ndarray:
        out = np.array(pts, dtype=float, copy=True)
        out[:, self.axis] = out[:, self.axis] + (self.sign * t) * self.offset_values(pts)
        return out

    def inverse(self) -> "ShearMap":
        return ShearMap(self.axis, self.offset, -self.sign, self.dim, self.inputs)

    @property
    def lipschitz_upper(self) -> float:
        """Lipschitz bound of the shear itself: 1 + L(offset)."""
        return 1.0 + self.offset.constant

    def matrix(self) -> np.ndarray:
        """Matrix of a linear shear (transvection)."""
        if not isinstance(self.offset, LinearOffset):
            raise TypeError("only linear shears have a matrix")
        M = np.eye(self.dim)
        M[self.axis, list(self.inputs)] += self.sign * self.offset.coeffs
        return M


@dataclass(frozen=True, eq=False)
class UnimodularMap:
    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise PreconditionError("unimodular map needs a square matrix")
        det = np.linalg.det(M) if M.size else 1.0
        if abs(det - 1.0) > DET_TOL:
            raise PreconditionError(f"determinant {det!r} differs from 1")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, pts: np.ndarray, t: float = 1.0) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.matrix.T

    def inverse(self) -> "UnimodularMap":
        inv = np.linalg.inv(self.matrix)
        # renormalise the determinant drift of the numerical inverse
        return UnimodularMap(inv / np.linalg.det(inv) ** (1.0 / self.dim))

    @property
    def lipschitz_upper(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


Factor = Union[ShearMap, UnimodularMap]


def _as_points(point, dim: int):
    arr = np.asarray(point, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise PreconditionError(f"point dimension {arr.shape[1]} != map dimension {dim}")
    return arr, single


@dataclass(frozen=True, eq=False)
class TameMap:
    dim: int
    factors: tuple = ()

    def __post_init__(self):
        factors = tuple(self.factors)
        for fac in factors:
            if fac.dim != self.dim:
                raise PreconditionError(f"factor of dimension {fac.dim} in a {self.dim}-map")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def identity(cls, dim: int) -> "TameMap":
        return cls(dim, ())

    def then(self, other: "TameMap") -> "TameMap":
        """The map ``other o self``."""
        if other.dim != self.dim:
            raise PreconditionError("dimension mismatch in composition")
        return TameMap(self.dim, self.factors + other.factors)

    def inverse(self) -> "TameMap":
        return TameMap(self.dim, tuple(f.inverse() for f in reversed(self.factors)))

    def __call__(self, point):
        return evaluate(self, point)

    @property
    def is_shear_only(self) -> bool:
        return all(isinstance(f, ShearMap) for f in self.factors)

    def decompose_linear(self) -> "TameMap":
        """Replace every unimodular factor by its transvections."""
        out = []
        for f in self.factors:
            if isinstance(f, UnimodularMap):
                out.extend(reversed(sl_decompose(f)))
            else:
                out.append(f)
        return TameMap(self.dim, tuple(out))

    @property
    def lipschitz_upper(self) -> float:
        return float(np.prod([f.lipschitz_upper for f in self.factors])) if self.factors else 1.0


def evaluate(fmap: TameMap, point):
    pts, single = _as_points(point, fmap.dim)
    for f in fmap.factors:
        pts = f.apply(pts)
    return pts[0] if single else pts


def invert(fmap: TameMap, point):
    pts, single = _as_points(point, fmap.dim)
    for f in reversed(fmap.factors):
        pts = f.inverse().apply(pts)
    return pts[0] if single else pts


def isotopy_eval(fmap: TameMap, t: float, point):
    """Evaluate F_t, the map with every shear offset scaled by ``t``.

    F_0 is the identity and F_1 coincides bitwise with ``evaluate``.
    """
    if not 0.0 <= t <= 1.0:
        raise PreconditionError(f"isotopy parameter {t} outside [0, 1]")
    if not fmap.is_shear_only:
        raise PreconditionError("isotopy needs unimodular factors decomposed first")
    pts, single = _as_points(point, fmap.dim)
    for f in fmap.factors:
        pts = f.apply(pts, t)
    return pts[0] if single else pts


# --- elementary transvections -------------------------------------------------

def transvection(dim: int, row: int, col: int, c: float) -> ShearMap:
    """The matrix I + c E_{row,col} as a linear shear."""
    inputs = tuple(i for i in range(dim) if i != row)
    coeffs = np.zeros(dim - 1)
    coeffs[inputs.index(col)] = c
    return ShearMap(row, LinearOffset(coeffs), 1, dim, inputs)


def sl_decompose(matrix) -> list:
    """Write a det-1 matrix as a product of transvections.

    Returns shears E_1, ..., E_k with E_1 @ E_2 @ ... @ E_k == matrix, so as a
    ``TameMap`` (which applies factor 0 first) the list must be reversed.
    Row reduction to upper triangular form, back substitution to a diagonal,
    then each diag(a, 1/a) block is split into four transvections.
    At most n^2 + 4n factors.
    """
    M0 = matrix.matrix if isinstance(matrix, UnimodularMap) else np.asarray(matrix, dtype=float)
    n = M0.shape[0]
    if M0.shape != (n, n):
        raise PreconditionError("sl_decompose needs a square matrix")
    if n and abs(np.linalg.det(M0) - 1.0) > DET_TOL:
        raise PreconditionError(f"determinant {np.linalg.det(M0)!r} differs from 1")
    M = M0.copy()
    ops = []  # left-multiplied operations: ops[-1] ... ops[0] @ M0 = I

    def row_op(r, c, coef):
        if coef == 0.0:
            return
        M[r] += coef * M[c]
        ops.append((r, c, coef))

    for c in range(n - 1):
        below = np.abs(M[c + 1:, c])
        if below.size and below.max() > 2.0 * abs(M[c, c]):
            p = c + 1 + int(np.argmax(below))
            s = 1.0 if M[c, c] == 0 else float(np.sign(M[c, c]) * np.sign(M[p, c]))
            row_op(c, p, s)
        for r in range(c + 1, n):
            row_op(r, c, -M[r, c] / M[c, c])
        M[c + 1:, c] = 0.0
    for c in range(n - 1, 0, -1):
        for r in range(c):
            row_op(r, c, -M[r, c] / M[c, c])
        M[:c, c] = 0.0

    # M is now diagonal; write it as prod_i diag(..., a_i, 1/a_i, ...)
    diag = np.diag(M).copy()
    factors = []
    a = 1.0
    for i in range(n - 1):
        a *= diag[i]
        if a == 1.0:
            continue
        # diag(a, 1/a) = L(p) U(q) L(r) U(s) on coordinates (i, i+1)
        p, q, r, s = -(a - 1.0) / a, 1.0, a - 1.0, -1.0 / a
        factors += [(i + 1, i, p), (i, i + 1, q), (i + 1, i, r), (i, i + 1, s)]
    # M0 = ops_1^{-1} ... ops_k^{-1} @ D
    out = [transvection(n, r, c, -coef) for (r, c, coef) in ops]
    out += [transvection(n, r, c, coef) for (r, c, coef) in factors if coef != 0.0]
    return out


def product_matrix(shears: Sequence[ShearMap], dim: int) -> np.ndarray:
    P = np.eye(dim)
    for s in shears:
        P = P @ s.matrix()
    return P


def linear_tame(matrix) -> TameMap:
    """A det-1 linear map as a shear-only ``TameMap``."""
    M = matrix.matrix if isinstance(matrix, UnimodularMap) else np.asarray(matrix, dtype=float)
    return TameMap(M.shape[0], tuple(reversed(sl_decompose(M))))


# --- constructions --------------------------------------------------------------

def coordinate_projection(points: np.ndarray, keep: Sequence[int], sign: int = -1) -> TameMap:
    """Shears killing every coordinate outside ``keep`` as a function of ``keep``.

    On the samples, coordinate s is interpolated by the McShane extension p_s of
    x_s over the kept coordinates and replaced by x_s - p_s = 0.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[1]
    keep = tuple(int(i) for i in keep)
    kept = pts[:, list(keep)]
    if len(pts) > 1:
        rep = distortion_arrays(pts, kept)
        if rep.lower <= 0:
            raise NonInjectiveError(
                f"projection onto coordinates {keep} is not injective on samples "
                f"(witness pair {rep.witness_lower})",
                rep.witness_lower,
            )
    factors = []
    for s in range(n):
        if s in keep:
            continue
        p = SampledLipschitzFunction(kept, pts[:, s])
        factors.append(ShearMap(s, p, sign, n, keep))
    return TameMap(n, tuple(factors))


def projection_to_tame(cloud, split: int) -> TameMap:
    """Tame Pi with Pi(x) = (x_1..x_l, 0..0) on every sample point."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    n = pts.shape[1]
    if not 0 <= split <= n:
        raise PreconditionError(f"split {split} outside [0, {n}]")
    return coordinate_projection(pts, range(split))


def graph_transfer(fmap: SampledMap, source_subspace_dim: int, tol: float = 1e-12) -> TameMap:
    """Tame F with F = f on samples, for X in R^s x 0 and f(X) in 0 x R^{n-s}.

    F = Pi o Psi, where Psi(x, y) = (x, y + f'(x)) adds a McShane extension of
    f and Pi removes x as a Lipschitz function of y along the graph.
    """
    X = fmap.source.points
    Y = fmap.images
    n = X.shape[1]
    s = int(source_subspace_dim)
    if Y.shape[1] != n:
        raise PreconditionError("source and target must share the ambient space")
    if not 0 <= s <= n:
        raise PreconditionError(f"subspace dimension {s} outside [0, {n}]")
    if np.max(np.abs(X[:, s:]), initial=0.0) > tol:
        raise PreconditionError(f"source samples leave R^{s} x 0")
    if np.max(np.abs(Y[:, :s]), initial=0.0) > tol:
        raise PreconditionError(f"target samples leave 0 x R^{n - s}")
    if len(X) > 1 and distortion_arrays(X, Y).lower <= 0:
        raise NonInjectiveError("sampled map is not injective")
    xs = tuple(range(s))
    psi = []
    for j in range(s, n):
        p = SampledLipschitzFunction(X[:, :s], Y[:, j] - X[:, j])
        psi.append(ShearMap(j, p, 1, n, xs))
    Psi = TameMap(n, tuple(psi))
    graph = evaluate(Psi, X) if len(X) else X
    Pi = coordinate_projection(graph, range(s, n))
    return Psi.then(Pi)
