import itertools

import numpy as np
import pytest

from lipembed.geometry import PointCloud


def brute_distortion(src, dst):
    """Pair-by-pair loop, deliberately independent of the vectorised scan."""
    lo, hi = np.inf, -np.inf
    for i, j in itertools.combinations(range(len(src)), 2):
        r = np.linalg.norm(np.subtract(dst[i], dst[j])) / np.linalg.norm(np.subtract(src[i], src[j]))
        lo, hi = min(lo, r), max(hi, r)
    return lo, hi


def r7_curve(seed, m=300):
    """Monomial curve t -> (t, ..., t^7) pushed through a random invertible matrix."""
    rng = np.random.default_rng(seed)
    t = np.linspace(-1.0, 1.0, m)
    mono = np.stack([t ** p for p in range(1, 8)], axis=1)
    A = rng.normal(size=(7, 7))
    return PointCloud(mono @ A.T, 1, f"r7-{seed}")


@pytest.fixture
def triangle():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    Y = np.array([[5.0, 5.0], [6.0, 7.0], [-1.0, 2.0]])
    return X, Y


@pytest.fixture
def r4_curve_pair():
    t = np.linspace(0.0, 1.0, 40)
    z = np.zeros_like(t)
    return np.c_[t, t ** 2, z, z], np.c_[z, z, t, t ** 3]


def germ(*branches):
    from lipembed.germs import GermCurve, PuiseuxBranch

    return GermCurve(tuple(PuiseuxBranch(tuple(t), a) for t, a in branches))


BLACKS = [((), "+y"), (((2, 0.1),), "-x"), ((), "-y")]


def swap_germs():
    """Three half-branches tangent to +x, two with the same contact swapped
    in Y, plus three fixed branches on the other half-axes."""
    from fractions import Fraction as Fr

    h = Fr(5, 2)
    X = germ((((2, 0.1),), "+x"), (((2, 0.1), (h, 0.1)), "+x"), (((2, 0.1), (h, -0.1)), "+x"), *BLACKS)
    Y = germ((((2, 0.1),), "+x"), (((2, 0.1), (h, 0.05)), "+x"), (((2, 0.1), (h, 0.1)), "+x"), *BLACKS)
    return X, Y


def mismatched_germs():
    from fractions import Fraction as Fr

    X, _ = swap_germs()
    Y = germ((((2, 0.1),), "+x"), (((2, 0.1), (Fr(7, 2), 0.05)), "+x"),
             (((2, 0.1), (Fr(5, 2), 0.1)), "+x"), *BLACKS)
    return X, Y


def polar_grid(m=720, lo=3, hi=12):
    r = 2.0 ** -np.arange(lo, hi + 1, dtype=float)
    th = np.linspace(0, 2 * np.pi, m, endpoint=False)
    R, T = np.meshgrid(r, th, indexing="ij")
    return np.c_[(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()], R.ravel()
