import time
from fractions import Fraction as Fr
from itertools import permutations

import numpy as np
import pytest

from conftest import germ, mismatched_germs, polar_grid, swap_germs
from lipembed.errors import NotEquivalentError, PreconditionError
from lipembed.germs import (
    GermCurve,
    PuiseuxBranch,
    SAMPLE_X,
    ambient_curve_equivalence,
    contact_exponent,
    contact_exponent_numeric,
    eval_branch,
    match_halfbranches,
    sphere_section,
    stack_graphs,
    straighten_graph,
)
from lipembed.verify import hausdorff

RADII = [2.0 ** -j for j in range(4, 17)]
DEEP = [2.0 ** -j for j in range(16, 41, 2)]
xs = np.array(SAMPLE_X)


def B(*terms, axis="+x"):
    return PuiseuxBranch(tuple(terms), axis)


def test_eval_branch_examples():
    assert eval_branch(B((Fr(3, 2), 1.0)), 4.0) == 8.0
    assert eval_branch(B((Fr(3, 2), 1.0), (Fr(7, 4), 2.0)), 0.0) == 0.0
    assert eval_branch(B((Fr(3, 2), 1.0), (Fr(7, 4), 2.0)), 1.0) == 3.0
    with pytest.raises(PreconditionError):
        eval_branch(B((2, 1.0)), -1.0)


def test_branch_validation():
    with pytest.raises(PreconditionError):
        B((Fr(1, 2), 1.0))
    with pytest.raises(PreconditionError):
        B((2, 0.0))
    with pytest.raises(PreconditionError):
        B(axis="+z")


def test_contact_examples():
    a = B((Fr(3, 2), 1.0))
    assert contact_exponent(a, B((Fr(3, 2), 1.0), (Fr(7, 4), 1.0))) == Fr(7, 4)
    assert contact_exponent(B((1, 1.0)), B((1, 2.0))) == 1
    with pytest.raises(PreconditionError):
        contact_exponent(a, a)
    assert contact_exponent(B(), B(axis="-x")) == 1
    assert contact_exponent(B(), B(axis="+y")) == 1


def test_contact_symmetric():
    bs = [B(), B((Fr(3, 2), 1.0)), B((Fr(3, 2), 1.0), (Fr(7, 4), 1.0)), B((1, 0.5)), B(axis="-y")]
    for a in bs:
        for b in bs:
            if a != b:
                assert contact_exponent(a, b) == contact_exponent(b, a)


def test_contact_numeric_examples():
    a = B((Fr(3, 2), 1.0))
    assert contact_exponent_numeric(a, B((Fr(3, 2), 1.0), (Fr(7, 4), 1.0)), RADII) == pytest.approx(1.75, abs=0.05)
    assert contact_exponent_numeric(B(), B(axis="-x"), RADII) == pytest.approx(1.0, abs=0.05)
    assert contact_exponent_numeric(a, B((Fr(3, 2), 1.0), (3, 1.0)), RADII) == pytest.approx(3.0, abs=0.05)


def random_exponent(rng, lo, hi):
    while True:
        q = int(rng.integers(1, 9))
        e = Fr(int(rng.integers(0, 8 * q + 1)), q)
        if lo < e <= hi:
            return e


def random_coeff(rng):
    return float(rng.uniform(0.5, 2.0) * rng.choice([-1, 1]))


def random_contact_pair(rng):
    """b2 = b1 + c x^e (+ a higher term); denominators <= 8, |c| in [0.5, 2]."""
    base = [(random_exponent(rng, Fr(1), Fr(3)), random_coeff(rng))] if rng.random() < 0.7 else []
    e = random_exponent(rng, Fr(1), Fr(7, 2))
    other = dict(base)
    other[e] = other.get(e, 0.0) + random_coeff(rng)
    if rng.random() < 0.5:
        e2 = random_exponent(rng, e + Fr(1, 2), e + 3)
        other[e2] = other.get(e2, 0.0) + random_coeff(rng)
    return B(*base), B(*[(k, v) for k, v in other.items() if v != 0])


@pytest.mark.parametrize("seed", range(40))
def test_contact_symbolic_vs_numeric(seed):
    b1, b2 = random_contact_pair(np.random.default_rng(seed))
    if b1 == b2:
        pytest.skip("degenerate draw")
    assert abs(float(contact_exponent(b1, b2)) - contact_exponent_numeric(b1, b2, DEEP)) <= 0.05


def test_same_tangent_different_axes_rejected():
    with pytest.raises(PreconditionError):
        GermCurve((B((1, 1.0)), B((1, 1.0), axis="+y")))


def test_match_examples():
    one = germ(((), "+x"))
    assert match_halfbranches(one, germ((((2, 1.0),), "+x"))) == (0,)
    X = germ((((Fr(3, 2), 1.0),), "+x"), (((Fr(3, 2), 1.0), (Fr(7, 4), 1.0)), "+x"))
    Y = germ((((Fr(3, 2), 1.0),), "+x"), (((Fr(3, 2), 1.0), (Fr(5, 4), 1.0)), "+x"))
    assert match_halfbranches(X, Y) is None


def three_branch():
    # contacts (0,1) -> 2, (0,2) -> 3/2, (1,2) -> 3/2
    return [(((Fr(3, 2), 1.0),), "+x"), (((Fr(3, 2), 1.0), (2, 1.0)), "+x"), (((Fr(3, 2), 2.0),), "+x")]


def test_match_recovers_relabeling():
    base = three_branch()
    X = germ(*base)
    for perm in permutations(range(3)):
        Y = germ(*[base[p] for p in perm])
        sigma = match_halfbranches(X, Y)
        assert sigma is not None
        CX, CY = X.contact_matrix(), Y.contact_matrix()
        assert all(CX[i][j] == CY[sigma[i]][sigma[j]] for i in range(3) for j in range(3) if i != j)
        assert sigma[2] == perm.index(2)


def test_match_self_is_identity():
    X, _ = swap_germs()
    assert match_halfbranches(X, X) == tuple(range(len(X)))


def test_match_planted_permutation_is_fast():
    rng = np.random.default_rng(0)
    base = [(((2, 1.0),), "+x"), (((2, 1.0), (Fr(5, 2), 1.0)), "+x"),
            (((2, 1.0), (Fr(5, 2), 1.0), (3, 1.0)), "+x"), ((), "+y"),
            (((Fr(3, 2), 1.0),), "-x"), (((Fr(3, 2), 1.0), (Fr(7, 3), 1.0)), "-x")]
    X = germ(*base)
    perm = rng.permutation(6)
    Y = germ(*[base[p] for p in perm])
    t0 = time.perf_counter()
    sigma = match_halfbranches(X, Y)
    assert time.perf_counter() - t0 < 1.0
    # the planted relabeling is one valid answer; any returned sigma must preserve contacts
    CX, CY = X.contact_matrix(), Y.contact_matrix()
    assert sorted(sigma) == list(range(6))
    assert all(CX[i][j] == CY[sigma[i]][sigma[j]] for i in range(6) for j in range(6) if i != j)
    assert all(CY[sigma[i]][sigma[j]] == CX[perm[sigma[i]]][perm[sigma[j]]]
               for i in range(6) for j in range(6) if i != j)


def test_straighten_examples():
    f = B((2, 1.0), (3, 1.0))
    F = straighten_graph(f)
    x = np.linspace(0.01, 0.5, 50)
    out = F(np.c_[x, x ** 2 * (1 + x)])
    assert np.all(np.abs(out[:, 0] - x) <= 1e-9 * x)
    assert np.all(np.abs(out[:, 1] - x ** 2) <= 1e-9 * x ** 2)
    pts = np.c_[-np.linspace(0.01, 1, 20), np.linspace(-1, 1, 20)]
    assert np.array_equal(F(pts), pts)


def test_straighten_pure_power_is_identity():
    F = straighten_graph(B((Fr(5, 3), 1.0)))
    pts, _ = polar_grid(90)
    assert np.allclose(F(pts), pts, rtol=0, atol=1e-15)


def test_stack_two_graphs():
    F = stack_graphs([B(), B((Fr(3, 2), 2.0))], [B(), B((Fr(3, 2), 1.0))])
    out = F(np.c_[xs, 2 * xs ** 1.5])
    assert np.all(np.abs(out[:, 0] - xs) <= 1e-6 * xs)
    assert np.all(np.abs(out[:, 1] - xs ** 1.5) <= 1e-6 * xs)
    assert np.all(np.abs(F(np.c_[xs, 0 * xs])[:, 1]) <= 1e-12)


def test_stack_identical_lists():
    bs = [B(), B((Fr(3, 2), 1.0)), B((Fr(3, 2), 1.0), (Fr(7, 4), 1.0))]
    F = stack_graphs(bs, bs)
    for b in bs:
        pts = b.points(xs)
        assert np.max(np.abs(F(pts) - pts)) <= 1e-9


def test_stack_nested_contacts():
    X = [B(), B((Fr(3, 2), 1.0)), B((Fr(3, 2), 1.0), (Fr(7, 4), 1.0))]
    Y = [B(), B((Fr(3, 2), 2.0)), B((Fr(3, 2), 2.0), (Fr(7, 4), 0.5))]
    F = stack_graphs(X, Y)
    for bx, by in zip(X, Y):
        for x in xs:
            r = float(np.hypot(x, eval_branch(bx, x)))
            assert hausdorff(F(bx.points([x])), by.points([x])) <= 0.05 * r


def test_stack_contact_mismatch():
    with pytest.raises(NotEquivalentError):
        stack_graphs([B(), B((Fr(3, 2), 1.0))], [B(), B((2, 1.0))])


def check_piecewise(F, exact_outside=True):
    pts, r = polar_grid()
    back = F.inverse(F(pts))
    assert np.all(np.linalg.norm(back - pts, axis=1) <= 1e-6 * r)
    if exact_outside:
        out = ~F.in_cones(pts)
        assert np.array_equal(F(pts[out]), pts[out])


def test_piecewise_maps_invertible_and_identity_outside():
    check_piecewise(straighten_graph(B((2, 1.0), (3, 1.0))))
    check_piecewise(stack_graphs([B(), B((Fr(3, 2), 2.0))], [B(), B((Fr(3, 2), 1.0))]))
    X, Y = swap_germs()
    check_piecewise(ambient_curve_equivalence(X, Y))


def test_ambient_identity():
    X, _ = swap_germs()
    F = ambient_curve_equivalence(X, X)
    for j in range(4, 13):
        pts = sphere_section(X, 2.0 ** -j)
        assert np.max(np.abs(F(pts) - pts)) <= 1e-9


def test_ambient_swap():
    X, Y = swap_germs()
    F = ambient_curve_equivalence(X, Y)
    assert F.rigid
    for j in range(4, 13):
        r = 2.0 ** -j
        assert hausdorff(F(sphere_section(X, r)), sphere_section(Y, r)) <= 0.05 * r


def test_ambient_mismatch():
    with pytest.raises(NotEquivalentError):
        ambient_curve_equivalence(*mismatched_germs())


def test_ambient_distinct_tangents_warp():
    X = germ(((), "+x"), ((), "+y"), ((), "-x"))
    Y = germ(((), "+x"), (((1, 1.0),), "+x"), ((), "-y"))
    F = ambient_curve_equivalence(X, Y)
    assert not F.rigid
    check_piecewise(F, exact_outside=False)
    for j in range(4, 13):
        r = 2.0 ** -j
        assert hausdorff(F(sphere_section(X, r)), sphere_section(Y, r)) <= 0.05 * r


def test_germ_json_roundtrip():
    X, _ = swap_germs()
    assert GermCurve.from_json(X.to_json()).branches == X.branches
