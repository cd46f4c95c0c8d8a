"""Plane curve germs given by Puiseux half-branches.

Contact exponents are computed exactly on rational exponents.  The ambient
equivalence is built per tangent cone: each cone is sent onto the closed first
quadrant Q, where branches become graphs 0 = f_m < ... < f_1 that are
straightened and peeled off one at a time.  Outside the cones the map is the
identity, bitwise.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NotEquivalentError, PreconditionError, SearchFailure

# axis -> (base direction, normal direction); a branch is s*base + g(s)*normal
AXES = {
    "+x": ((1.0, 0.0), (0.0, 1.0)),
    "-x": ((-1.0, 0.0), (0.0, 1.0)),
    "+y": ((0.0, 1.0), (1.0, 0.0)),
    "-y": ((0.0, -1.0), (1.0, 0.0)),
}
ANGLE_TOL = 1e-12
MAX_HALF_ANGLE = math.pi / 16  # half of the pi/8 aperture cap
SAMPLE_X = [2.0 ** -j for j in range(3, 13)]


class UndefinedContactError(PreconditionError):
    pass


def _ccw_sign(axis: str) -> float:
    base, normal = AXES[axis]
    # +1 when the normal is the base rotated by +90 degrees
    return float(np.sign(base[0] * normal[1] - base[1] * normal[0]))


@dataclass(frozen=True)
class PuiseuxBranch:
    """Graph of g(s) = sum c * s^e over s >= 0 along ``axis``; no terms is the axis itself."""

    terms: tuple = ()
    axis: str = "+x"

    def __post_init__(self):
        if self.axis not in AXES:
            raise PreconditionError(f"unknown axis {self.axis!r}")
        norm = []
        for e, c in self.terms:
            e = Fraction(e)
            c = float(c)
            if e < 1:
                raise PreconditionError(f"exponent {e} < 1 is not a Lipschitz graph")
            if c == 0 or not math.isfinite(c):
                raise PreconditionError(f"bad coefficient {c} for exponent {e}")
            norm.append((e, c))
        norm.sort(key=lambda t: t[0])
        if any(a[0] == b[0] for a, b in zip(norm, norm[1:])):
            raise PreconditionError("repeated exponent in branch")
        object.__setattr__(self, "terms", tuple(norm))

    @classmethod
    def from_json(cls, obj) -> "PuiseuxBranch":
        terms = [(Fraction(int(n), int(d)), float(c)) for n, d, c in obj.get("terms", [])]
        return cls(tuple(terms), obj.get("axis", "+x"))

    def to_json(self) -> dict:
        return {"terms": [[e.numerator, e.denominator, c] for e, c in self.terms], "axis": self.axis}

    @property
    def leading_exponent(self) -> Optional[Fraction]:
        return self.terms[0][0] if self.terms else None

    @property
    def slope(self) -> float:
        """Coefficient of the linear term (0 if none)."""
        return self.terms[0][1] if self.terms and self.terms[0][0] == 1 else 0.0

    @property
    def tangent(self) -> np.ndarray:
        base, normal = (np.array(v) for v in AXES[self.axis])
        t = base + self.slope * normal
        return t / np.linalg.norm(t)

    @property
    def tangent_angle(self) -> float:
        t = self.tangent
        return math.atan2(t[1], t[0]) % (2 * math.pi)

    def values(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for e, c in self.terms:
            out = out + c * np.power(s, float(e))
        return out

    def points(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        base, normal = (np.array(v) for v in AXES[self.axis])
        return np.outer(s, base) + np.outer(self.values(s), normal)

    def difference(self, other: "PuiseuxBranch") -> list:
        coeffs = {}
        for e, c in self.terms:
            coeffs[e] = coeffs.get(e, 0.0) + c
        for e, c in other.terms:
            coeffs[e] = coeffs.get(e, 0.0) - c
        return sorted((e, c) for e, c in coeffs.items() if c != 0.0)


def eval_branch(b: PuiseuxBranch, x):
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise PreconditionError("branches are evaluated at x >= 0 only")
    v = b.values(xs)
    return float(v) if np.ndim(x) == 0 else v


def same_tangent(b1: PuiseuxBranch, b2: PuiseuxBranch) -> bool:
    d = abs(b1.tangent_angle - b2.tangent_angle)
    return min(d, 2 * math.pi - d) <= ANGLE_TOL


def contact_exponent(b1: PuiseuxBranch, b2: PuiseuxBranch) -> Fraction:
    """Exact contact; 1 for distinct tangent half-lines."""
    if b1 == b2:
        raise UndefinedContactError("contact of a branch with itself is undefined")
    if not same_tangent(b1, b2):
        return Fraction(1)
    if b1.axis != b2.axis:
        raise PreconditionError(
            f"branches tangent to the same half-line must share an axis ({b1.axis} vs {b2.axis})"
        )
    return b1.difference(b2)[0][0]


def _ccw_compare(b1: PuiseuxBranch, b2: PuiseuxBranch) -> int:
    """Order of two same-tangent branches, counterclockwise positive."""
    diff = b1.difference(b2)
    if not diff:
        return 0
    return 1 if diff[0][1] * _ccw_sign(b1.axis) > 0 else -1


def sphere_point(b: PuiseuxBranch, r: float) -> np.ndarray:
    """The point of b on S(0, r); |b(s)| >= s, so the root lies in (0, r]."""
    if r <= 0:
        raise PreconditionError("radius must be positive")
    grid = np.linspace(0.0, r, 65)
    norms = np.linalg.norm(b.points(grid), axis=1)
    if np.any(np.diff(norms) <= 0):
        raise PreconditionError(f"branch does not meet S(0, {r:g}) exactly once")
    return b.points(_sphere_parameter(b, r))[0]


def _sphere_parameter(b: PuiseuxBranch, r: float) -> float:
    # |b(s)| >= s, so the root lies in (0, r]
    return brentq(lambda t: float(np.hypot(t, b.values(t))) - r, 0.0, r,
                  xtol=r * 1e-15, rtol=8.9e-16, maxiter=500)


def _increment(b: PuiseuxBranch, s: float, ds: float) -> float:
    """g(s + ds) - g(s) without cancellation."""
    return sum(c * s ** float(e) * math.expm1(float(e) * math.log1p(ds / s)) for e, c in b.terms)


def sphere_gap(b1: PuiseuxBranch, b2: PuiseuxBranch, r: float) -> float:
    """dist(b1 ∩ S_r, b2 ∩ S_r).

    For branches over one axis the offsets ds = s1 - s2 and dg = g1(s1) - g2(s2)
    are solved for directly, using the exact difference series, so gaps far
    below r * machine epsilon are still resolved.
    """
    for b in (b1, b2):
        norms = np.linalg.norm(b.points(np.linspace(0.0, r, 65)), axis=1)
        if np.any(np.diff(norms) <= 0):
            raise PreconditionError(f"branch does not meet S(0, {r:g}) exactly once")
    if b1.axis != b2.axis:
        return float(np.linalg.norm(sphere_point(b1, r) - sphere_point(b2, r)))
    s2 = _sphere_parameter(b2, r)
    g2 = float(b2.values(s2))
    diff = sum(c * s2 ** float(e) for e, c in b1.difference(b2))
    ds = 0.0
    for _ in range(200):
        dg = _increment(b1, s2, ds) + diff
        new = -dg * (2.0 * g2 + dg) / (2.0 * s2 + ds)
        if new == ds:
            break
        ds = new
    dg = _increment(b1, s2, ds) + diff
    return float(math.hypot(ds, dg))


def contact_exponent_numeric(b1: PuiseuxBranch, b2: PuiseuxBranch, radii: Sequence[float]) -> float:
    """Least-squares slope of log dist(b1 ∩ S_r, b2 ∩ S_r) against log r."""
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise PreconditionError("need at least two radii")
    if any(b <= 0 or b >= a for a, b in zip(radii, radii[1:])):
        raise PreconditionError("radii must be positive and strictly decreasing")
    d = np.array([sphere_gap(b1, b2, r) for r in radii])
    if np.any(d <= 0):
        raise PreconditionError("branches meet a sampling sphere at the same point")
    slope, _ = np.polyfit(np.log(radii), np.log(d), 1)
    return float(slope)


@dataclass(frozen=True, eq=False)
class GermCurve:
    branches: tuple

    def __post_init__(self):
        bs = tuple(self.branches)
        if not bs:
            raise PreconditionError("a germ needs at least one branch")
        if len(set(bs)) != len(bs):
            raise PreconditionError("branches must be pairwise distinct")
        object.__setattr__(self, "branches", bs)
        # raises on same-tangent branches over different axes
        self.contact_matrix()

    @classmethod
    def from_json(cls, obj) -> "GermCurve":
        return cls(tuple(PuiseuxBranch.from_json(b) for b in obj["branches"]))

    def to_json(self) -> dict:
        return {"branches": [b.to_json() for b in self.branches]}

    def __len__(self) -> int:
        return len(self.branches)

    @functools.cached_property
    def _contacts(self):
        m = len(self.branches)
        C = [[None] * m for _ in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                C[i][j] = C[j][i] = contact_exponent(self.branches[i], self.branches[j])
        return C

    def contact_matrix(self) -> list:
        return [row[:] for row in self._contacts]

    @property
    def tangent_halflines(self) -> list:
        """(angle, branch indices in counterclockwise order), sorted by angle."""
        groups = []
        for i, b in enumerate(self.branches):
            for g in groups:
                if same_tangent(self.branches[g[1][0]], b):
                    g[1].append(i)
                    break
            else:
                groups.append((b.tangent_angle, [i]))
        out = []
        for ang, idx in sorted(groups, key=lambda g: g[0]):
            key = functools.cmp_to_key(lambda a, c: _ccw_compare(self.branches[a], self.branches[c]))
            out.append((ang, tuple(sorted(idx, key=key))))
        return out


def _contact_multiset(C) -> list:
    m = len(C)
    return sorted(C[i][j] for i in range(m) for j in range(i + 1, m))


def match_halfbranches(X: GermCurve, Y: GermCurve) -> Optional[tuple]:
    """Lexicographically first contact-preserving bijection sigma (X_i -> Y_sigma(i)), or None."""
    m = len(X)
    if len(Y) != m:
        return None
    CX, CY = X.contact_matrix(), Y.contact_matrix()
    if _contact_multiset(CX) != _contact_multiset(CY):
        return None
    rows_x = [sorted(c for c in row if c is not None) for row in CX]
    rows_y = [sorted(c for c in row if c is not None) for row in CY]
    sigma = [None] * m
    used = [False] * m

    def extend(i):
        if i == m:
            return True
        for j in range(m):
            if used[j] or rows_x[i] != rows_y[j]:
                continue
            if all(CX[i][p] == CY[j][sigma[p]] for p in range(i)):
                sigma[i], used[j] = j, True
                if extend(i + 1):
                    return True
                used[j] = False
        return False

    return tuple(sigma) if extend(0) else None


# --- graphs over the x-axis of Q ----------------------------------------------

class GraphFunction:
    """y = f(x) for x >= 0, vectorised; f(0) = 0."""

    def __call__(self, x):
        raise NotImplementedError


class ZeroGraph(GraphFunction):
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class BranchGraph(GraphFunction):
    """The branch s -> M (s base + g(s) normal) written as a graph over the first coordinate."""

    branch: PuiseuxBranch
    matrix: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        base, normal = (np.array(v) for v in AXES[self.branch.axis])
        M = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "_u", M @ base)
        object.__setattr__(self, "_v", M @ normal)
        if self._u[0] + self.branch.slope * self._v[0] <= 0:
            raise PreconditionError("branch is not a graph over the positive first axis")

    def _coords(self, s):
        g = self.branch.values(s)
        return s * self._u[0] + g * self._v[0], s * self._u[1] + g * self._v[1]

    def parameter(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._v[0] == 0.0:
            return x / self._u[0]
        lo = np.zeros_like(x)
        hi = 2.0 * x / (self._u[0] + self.branch.slope * self._v[0]) + 1e-300
        for _ in range(64):
            short = self._coords(hi)[0] < x
            if not short.any():
                break
            hi = np.where(short, 2.0 * hi, hi)
        else:
            raise PreconditionError("graph is not defined that far from the origin")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self._coords(mid)[0] < x
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return np.where(x == 0, 0.0, 0.5 * (lo + hi))

    def __call__(self, x):
        return self._coords(self.parameter(x))[1]


@dataclass(frozen=True, eq=False)
class DiffGraph(GraphFunction):
    a: GraphFunction
    b: GraphFunction

    def __call__(self, x):
        return self.a(x) - self.b(x)


# --- plane maps -------------------------------------------------------------------

class PlaneMap:
    def __call__(self, pts):
        raise NotImplementedError

    def inverse(self, pts):
        raise NotImplementedError


class IdentityMap(PlaneMap):
    def __call__(self, pts):
        return np.array(pts, dtype=float)

    inverse = __call__


def _in_q(p):
    return (p[:, 0] >= 0) & (p[:, 1] >= 0)


@dataclass(frozen=True, eq=False)
class StraightenMap(PlaneMap):
    """(x, y/h(x)) below the graph of f = x^alpha h, (x, y + x^alpha - f(x)) above it,
    identity outside Q."""

    f: GraphFunction
    alpha: Fraction
    delta: float = 0.5

    def __post_init__(self):
        xs = np.concatenate([self.delta * 2.0 ** -np.arange(0, 14, 0.25),
                             np.linspace(0, self.delta, 257)[1:]])
        if np.any(self.f(xs) <= 0):
            raise PreconditionError("graph takes non-positive values on the working interval")

    def _power(self, x):
        return np.power(x, float(self.alpha))

    def __call__(self, pts):
        p = np.array(pts, dtype=float)
        q = _in_q(p)
        x, y = p[q, 0], p[q, 1]
        fx = self.f(x)
        xa = self._power(x)
        below = y <= fx
        out = y + xa - fx
        pos = below & (x > 0)
        out[pos] = y[pos] * xa[pos] / fx[pos]
        out[below & (x == 0)] = 0.0
        p[q, 1] = out
        return p

    def inverse(self, pts):
        p = np.array(pts, dtype=float)
        q = _in_q(p)
        x, y = p[q, 0], p[q, 1]
        fx = self.f(x)
        xa = self._power(x)
        below = y <= xa
        out = y - xa + fx
        pos = below & (x > 0)
        out[pos] = y[pos] * fx[pos] / xa[pos]
        out[below & (x == 0)] = 0.0
        p[q, 1] = out
        return p


@dataclass(frozen=True, eq=False)
class ShiftMap(PlaneMap):
    """(x, y - x^alpha) for x >= 0, identity for x < 0."""

    alpha: Fraction

    def _shift(self, pts, sign):
        p = np.array(pts, dtype=float)
        r = p[:, 0] >= 0
        p[r, 1] -= sign * np.power(p[r, 0], float(self.alpha))
        return p

    def __call__(self, pts):
        return self._shift(pts, 1.0)

    def inverse(self, pts):
        return self._shift(pts, -1.0)


@dataclass(frozen=True, eq=False)
class ComposeMap(PlaneMap):
    """maps[0] applied first."""

    maps: tuple

    def __call__(self, pts):
        for m in self.maps:
            pts = m(pts)
        return np.array(pts, dtype=float)

    def inverse(self, pts):
        for m in reversed(self.maps):
            pts = m.inverse(pts)
        return np.array(pts, dtype=float)


@dataclass(frozen=True, eq=False)
class QuadrantOnly(PlaneMap):
    """Restricts ``inner`` to Q; points outside Q are returned untouched."""

    inner: PlaneMap

    def _apply(self, pts, fn):
        p = np.array(pts, dtype=float)
        q = _in_q(p)
        if q.any():
            p[q] = fn(p[q])
        return p

    def __call__(self, pts):
        return self._apply(pts, self.inner)

    def inverse(self, pts):
        return self._apply(pts, self.inner.inverse)


@dataclass(frozen=True)
class Cone:
    """Closed angular sector [lower, lower + aperture]."""

    lower: float
    aperture: float

    def contains(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float)
        ang = np.arctan2(p[:, 1], p[:, 0])
        rel = (ang - self.lower) % (2 * math.pi)
        return rel <= self.aperture

    def to_dict(self) -> dict:
        return {"lower": self.lower, "aperture": self.aperture}


QUADRANT = Cone(0.0, math.pi / 2)


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class ConeMap(PlaneMap):
    """nu^{-1} o inner o nu on the cone, identity elsewhere; nu sends the cone onto Q."""

    cone: Cone
    nu: np.ndarray
    inner: PlaneMap

    def _apply(self, pts, fn):
        p = np.array(pts, dtype=float)
        k = self.cone.contains(p)
        if k.any():
            moved = fn(p[k] @ self.nu.T)
            p[k] = np.linalg.solve(self.nu, moved.T).T
        return p

    def __call__(self, pts):
        return self._apply(pts, self.inner)

    def inverse(self, pts):
        return self._apply(pts, self.inner.inverse)


@dataclass(frozen=True, eq=False)
class AngularMap(PlaneMap):
    """(r, theta) -> (r, phi(theta)) with phi piecewise linear and increasing."""

    knots_in: np.ndarray
    knots_out: np.ndarray

    @staticmethod
    def _warp(pts, src, dst):
        p = np.array(pts, dtype=float)
        r = np.hypot(p[:, 0], p[:, 1])
        ang = np.arctan2(p[:, 1], p[:, 0])
        ang = src[0] + (ang - src[0]) % (2 * math.pi)
        new = np.interp(ang, src, dst)
        nz = r > 0
        p[nz, 0] = r[nz] * np.cos(new[nz])
        p[nz, 1] = r[nz] * np.sin(new[nz])
        return p

    def __call__(self, pts):
        return self._warp(pts, self.knots_in, self.knots_out)

    def inverse(self, pts):
        return self._warp(pts, self.knots_out, self.knots_in)


@dataclass(frozen=True, eq=False)
class PiecewiseGermMap:
    """A germ of plane homeomorphism with declared support cones.

    ``rigid`` is false only when an angular warp moves the tangent lines, in
    which case the map is not the identity outside the cones.
    """

    core: PlaneMap
    cones: tuple
    regions: tuple = ()
    radius: float = 0.125
    sigma: Optional[tuple] = None
    rigid: bool = True

    def __call__(self, pts):
        p = np.asarray(pts, dtype=float)
        single = p.ndim == 1
        out = self.core(np.atleast_2d(p))
        return out[0] if single else out

    def inverse(self, pts):
        p = np.asarray(pts, dtype=float)
        single = p.ndim == 1
        out = self.core.inverse(np.atleast_2d(p))
        return out[0] if single else out

    def in_cones(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        mask = np.zeros(len(p), dtype=bool)
        for c in self.cones:
            mask |= c.contains(p)
        return mask

    def to_dict(self) -> dict:
        return {
            "type": "piecewise-germ",
            "cones": [c.to_dict() for c in self.cones],
            "regions": [r[0] for r in self.regions],
            "radius": self.radius,
            "sigma": None if self.sigma is None else list(self.sigma),
            "rigid": self.rigid,
        }


def straighten_graph(f, delta: float = 0.5) -> PiecewiseGermMap:
    """Piecewise map of Q sending the graph of f onto the graph of x^alpha."""
    if isinstance(f, PuiseuxBranch):
        if f.axis != "+x":
            raise PreconditionError("straightening expects a graph over the positive x-axis")
        if not f.terms or f.terms[0][1] <= 0:
            raise PreconditionError("leading coefficient must be positive")
        alpha = f.leading_exponent
        graph = BranchGraph(f)
    else:
        graph, alpha = f
    m = StraightenMap(graph, Fraction(alpha), delta)
    regions = (
        ("0<=y<=f(x): (x, y/h(x))", None, None),
        ("y>=f(x): (x, y + x^alpha - f(x))", None, None),
        ("outside Q: identity", None, None),
    )
    return PiecewiseGermMap(m, (QUADRANT,), regions)


def _as_graph(b) -> GraphFunction:
    if isinstance(b, GraphFunction):
        return b
    if isinstance(b, PuiseuxBranch):
        if b.axis != "+x":
            raise PreconditionError("stacking expects graphs over the positive x-axis")
        return ZeroGraph() if not b.terms else BranchGraph(b)
    raise PreconditionError(f"cannot use {type(b).__name__} as a graph")


def _symbolic_contacts(branches) -> list:
    m = len(branches)
    C = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            C[i][j] = C[j][i] = contact_exponent(branches[i], branches[j])
    return C


def _stack(xg, yg, cx, cy, delta) -> PlaneMap:
    # lists run bottom-up: xg[0] is the zero graph
    if len(xg) <= 1:
        return IdentityMap()
    alpha = cx[1][0]
    if cy[1][0] != alpha:
        raise NotEquivalentError(f"contact mismatch in stacking: {alpha} vs {cy[1][0]}")
    sf = StraightenMap(xg[1], alpha, delta)
    sg = StraightenMap(yg[1], alpha, delta)
    xt = [ZeroGraph()] + [DiffGraph(g, xg[1]) for g in xg[2:]]
    yt = [ZeroGraph()] + [DiffGraph(g, yg[1]) for g in yg[2:]]
    sub = lambda C: [row[1:] for row in C[1:]]
    inner = _stack(xt, yt, sub(cx), sub(cy), delta)
    shift = ShiftMap(alpha)
    conj = QuadrantOnly(ComposeMap((shift, QuadrantOnly(inner), _Inverse(shift))))
    return ComposeMap((sf, conj, _Inverse(sg)))


@dataclass(frozen=True, eq=False)
class _Inverse(PlaneMap):
    m: PlaneMap

    def __call__(self, pts):
        return self.m.inverse(pts)

    def inverse(self, pts):
        return self.m(pts)


def _bottom_up(graphs, contacts):
    xs = np.array(SAMPLE_X)
    vals = np.array([g(xs) for g in graphs])
    if np.all(vals[-1] == 0) and np.all(np.diff(vals, axis=0) < 0):
        order = list(range(len(graphs)))[::-1]
    elif np.all(vals[0] == 0) and np.all(np.diff(vals, axis=0) > 0):
        order = list(range(len(graphs)))
    else:
        raise PreconditionError("graphs must be strictly ordered with the zero graph at the bottom")
    return [graphs[i] for i in order], [[contacts[i][j] for j in order] for i in order]


def stack_graphs(x_branches, y_branches, x_contacts=None, y_contacts=None,
                 delta: float = 0.5) -> PiecewiseGermMap:
    """Map of Q carrying each X graph onto the paired Y graph.

    Lists are ordered (either direction) with the zero graph at the bottom.
    Contacts default to the symbolic ones when branches are Puiseux series.
    """
    if len(x_branches) != len(y_branches):
        raise NotEquivalentError("different numbers of graphs")
    if x_contacts is None:
        x_contacts = _symbolic_contacts(x_branches)
    if y_contacts is None:
        y_contacts = _symbolic_contacts(y_branches)
    xg, cx = _bottom_up([_as_graph(b) for b in x_branches], x_contacts)
    yg, cy = _bottom_up([_as_graph(b) for b in y_branches], y_contacts)
    core = QuadrantOnly(_stack(xg, yg, cx, cy, delta))
    return PiecewiseGermMap(core, (QUADRANT,), (("Q: stacked straightenings", None, None),
                                                ("outside Q: identity", None, None)))


# --- ambient equivalence ------------------------------------------------------------

def _cyclic_gaps(angles) -> list:
    a = sorted(angles)
    if len(a) == 1:
        return [2 * math.pi]
    return [b - x for x, b in zip(a, a[1:])] + [a[0] + 2 * math.pi - a[-1]]


def _alignment(X: GermCurve, Y: GermCurve):
    """First cyclic shift of tangent groups whose in-order pairing preserves all contacts."""
    gx, gy = X.tangent_halflines, Y.tangent_halflines
    if len(gx) != len(gy):
        return None
    CX, CY = X.contact_matrix(), Y.contact_matrix()
    G = len(gx)
    for rho in range(G):
        pairs = [(gx[k], gy[(k + rho) % G]) for k in range(G)]
        if any(len(a[1]) != len(b[1]) for a, b in pairs):
            continue
        sigma = [None] * len(X)
        for a, b in pairs:
            for i, j in zip(a[1], b[1]):
                sigma[i] = j
        m = len(X)
        if all(CX[i][j] == CY[sigma[i]][sigma[j]] for i in range(m) for j in range(i + 1, m)):
            return rho, tuple(sigma), pairs
    return None


def _fits_cone(b: PuiseuxBranch, rot: np.ndarray, center: float, half: float, radius: float,
               nu: np.ndarray, delta: float) -> bool:
    """Branch stays inside the cone up to ``radius`` and is a graph over [0, delta] after nu."""
    s = radius * 2.0 ** -np.arange(0, 16, 0.125)
    p = b.points(s) @ rot.T
    ang = np.arctan2(p[:, 1], p[:, 0]) - center
    ang = (ang + math.pi) % (2 * math.pi) - math.pi
    if np.any(np.abs(ang) >= half) or np.any(np.diff(np.linalg.norm(p, axis=1)) >= 0):
        return False
    s = np.linspace(0.0, 8.0 * radius, 2049)
    xq = (b.points(s) @ (nu @ rot).T)[:, 0]
    reach = np.flatnonzero(xq >= delta)
    if len(reach) == 0:
        return False
    return bool(np.all(np.diff(xq[:reach[0] + 1]) > 0))


def ambient_curve_equivalence(X: GermCurve, Y: GermCurve, radius: float = 0.125,
                              min_radius: float = 2.0 ** -12) -> PiecewiseGermMap:
    """Germ of plane homeomorphism F with F(X) = Y near 0, identity outside the tangent cones
    when X and Y share tangent lines."""
    sigma = match_halfbranches(X, Y)
    if sigma is None:
        raise NotEquivalentError("no contact-preserving bijection of half-branches")
    found = _alignment(X, Y)
    if found is None:
        raise SearchFailure("contacts match but no orientation-preserving cone alignment exists",
                            best=sigma, stage="alignment")
    rho, sigma, pairs = found
    gaps = _cyclic_gaps([g[0] for g in X.tangent_halflines]) + \
        _cyclic_gaps([g[0] for g in Y.tangent_halflines])
    half = min(min(gaps) / 4.0, MAX_HALF_ANGLE)

    # lift target angles so that they increase with the source angles
    tx = [a[0] for a, _ in pairs]
    ty = [b[0] for _, b in pairs]
    lifted = [ty[0] - 2 * math.pi * round((ty[0] - tx[0]) / (2 * math.pi))]
    for t in ty[1:]:
        t = t + 2 * math.pi * math.ceil((lifted[-1] - t) / (2 * math.pi))
        lifted.append(t)
    rigid = all(abs(a - b) <= ANGLE_TOL for a, b in zip(tx, lifted))
    if rigid:
        warp = None
    else:
        src, dst = [], []
        for a, b in zip(tx, lifted):
            src += [a - half, a + half]
            dst += [b - half, b + half]
        src.append(src[0] + 2 * math.pi)
        dst.append(dst[0] + 2 * math.pi)
        warp = AngularMap(np.array(src), np.array(dst))

    c = math.tan(2 * half)
    N = np.array([[c, -1.0], [0.0, 1.0]])
    nus = [N @ _rotation(-(b - half)) for b in lifted]

    # shrink the working radius until every branch stays in its cone
    r = radius
    while True:
        delta = 2.0 * c * r
        ok = all(
            _fits_cone(X.branches[i], _rotation(b - a), b, half, r, nu, delta)
            for (ga, _), a, b, nu in zip(pairs, tx, lifted, nus) for i in ga[1]
        ) and all(
            _fits_cone(Y.branches[j], np.eye(2), b, half, r, nu, delta)
            for (_, gb), b, nu in zip(pairs, lifted, nus) for j in gb[1]
        )
        if ok:
            break
        r /= 2.0
        if r < min_radius:
            raise SearchFailure("branches leave their cones at every scheduled radius", stage="cones")

    CX, CY = X.contact_matrix(), Y.contact_matrix()
    maps, cones = [], []
    for (ga, gb), a, b, nu in zip(pairs, tx, lifted, nus):
        cone = Cone((b - half) % (2 * math.pi), 2 * half)
        turn = _rotation(b - a)
        xg = [ZeroGraph()] + [BranchGraph(X.branches[i], nu @ turn) for i in ga[1]]
        yg = [ZeroGraph()] + [BranchGraph(Y.branches[j], nu) for j in gb[1]]
        one = Fraction(1)
        cx = [[None if p == q else (one if 0 in (p, q) else CX[ga[1][p - 1]][ga[1][q - 1]])
               for q in range(len(xg))] for p in range(len(xg))]
        cy = [[None if p == q else (one if 0 in (p, q) else CY[gb[1][p - 1]][gb[1][q - 1]])
               for q in range(len(yg))] for p in range(len(yg))]
        if len(xg) > 1:
            maps.append(ConeMap(cone, nu, QuadrantOnly(_stack(xg, yg, cx, cy, delta))))
        cones.append(cone)
    core = ComposeMap(tuple(([warp] if warp is not None else []) + maps))
    regions = tuple((f"cone {k}: stacked graphs", None, None) for k in range(len(cones)))
    regions += (("outside cones: identity" if rigid else "outside cones: angular warp", None, None),)
    return PiecewiseGermMap(core, tuple(cones), regions, r, sigma, rigid)


def sphere_section(curve: GermCurve, r: float) -> np.ndarray:
    """curve ∩ S(0, r), one point per branch."""
    return np.array([sphere_point(b, r) for b in curve.branches])
