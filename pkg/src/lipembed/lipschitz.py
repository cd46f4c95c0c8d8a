"""McShane extension of Lipschitz functions given on finite samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .geometry import PointCloud, pair_indices

_CHUNK = 1 << 22  # max entries of a query x domain distance block


def _domain_array(domain) -> np.ndarray:
    if isinstance(domain, PointCloud):
        return domain.points
    d = np.asarray(domain, dtype=float)
    if d.ndim == 1:
        d = d.reshape(-1, 1)
    return d


def lipschitz_constant(domain, values) -> float:
    """Exact maximum of |f(x)-f(y)| / |x-y| over all sample pairs."""
    pts = _domain_array(domain)
    vals = np.asarray(values, dtype=float).ravel()
    if len(vals) != len(pts):
        raise PreconditionError(f"{len(pts)} points but {len(vals)} values")
    if len(pts) < 2:
        return 0.0
    i, j = pair_indices(len(pts))
    best = 0.0
    step = max(1, _CHUNK // max(1, pts.shape[1]))
    for s in range(0, len(i), step):
        a, b = i[s:s + step], j[s:s + step]
        dist = np.linalg.norm(pts[a] - pts[b], axis=1)
        if np.any(dist == 0):
            raise PreconditionError("coincident domain points")
        best = max(best, float(np.max(np.abs(vals[a] - vals[b]) / dist)))
    return best


@dataclass(frozen=True, eq=False)
class SampledLipschitzFunction:
    """Values on a finite domain together with a Lipschitz constant valid for them."""

    domain: np.ndarray
    values: np.ndarray
    constant: float = None

    def __post_init__(self):
        pts = _domain_array(self.domain)
        vals = np.asarray(self.values, dtype=float).ravel()
        if len(vals) != len(pts):
            raise PreconditionError(f"{len(pts)} domain points but {len(vals)} values")
        exact = lipschitz_constant(pts, vals)
        L = exact if self.constant is None else float(self.constant)
        # the stored constant is recomputed from the same floats, so allow one ulp
        if L < exact * (1 - 1e-12):
            raise PreconditionError(f"constant {L} below sampled ratio {exact}")
        pts = pts.copy()
        vals = vals.copy()
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "domain", pts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "constant", L)

    @property
    def dim(self) -> int:
        return self.domain.shape[1]

    def envelopes(self, query):
        """Lower and upper McShane envelopes at each query point."""
        q = np.asarray(query, dtype=float)
        single = q.ndim == 1
        q = np.atleast_2d(q)
        if q.shape[1] != self.dim:
            raise PreconditionError(f"query dimension {q.shape[1]} != domain dimension {self.dim}")
        lo = np.empty(len(q))
        hi = np.empty(len(q))
        step = max(1, _CHUNK // max(1, len(self.domain)))
        L = self.constant
        for s in range(0, len(q), step):
            block = q[s:s + step]
            if self.dim:
                d = np.sqrt(((block[:, None, :] - self.domain[None, :, :]) ** 2).sum(axis=2))
            else:
                d = np.zeros((len(block), len(self.domain)))
            hi[s:s + step] = np.min(self.values[None, :] + L * d, axis=1)
            lo[s:s + step] = np.max(self.values[None, :] - L * d, axis=1)
        if single:
            return float(lo[0]), float(hi[0])
        return lo, hi

    def __call__(self, query):
        lo, hi = self.envelopes(query)
        return 0.5 * (lo + hi)

    def scaled(self, c: float) -> "SampledLipschitzFunction":
        return SampledLipschitzFunction(self.domain, c * self.values, abs(c) * self.constant)


def mcshane_extend(f: SampledLipschitzFunction, query):
    """Midpoint of the upper and lower McShane envelopes.

    Agrees with ``f`` on its domain and is ``f.constant``-Lipschitz on all of R^d.
    """
    return f(query)
