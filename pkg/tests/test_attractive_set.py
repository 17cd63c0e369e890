import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attractive.attractive_set import (AttractiveApprox, attractive_halfspace,
                                       build_attractive_approx,
                                       check_projected_attractive_fixed,
                                       check_projection_identity, default_approx,
                                       find_fixed_points, project_attractive)
from attractive.hilbert import WholeSpace, brute_force_project
from attractive.mappings import (CATALOG, PreconditionError, is_fixed_point, make_mapping,
                                 rotation, sample_schedule, square)

from test_mappings import KNOWN_ATTRACTIVE


def circle(n, r=1.0):
    t = 2 * np.pi * np.arange(n) / n
    return r * np.column_stack([np.cos(t), np.sin(t)])


def test_halfspace_examples():
    h = attractive_halfspace(make_mapping("halving"), [2.0])
    np.testing.assert_array_equal(h.normal, [2.0])
    assert h.offset == 3.0
    h = attractive_halfspace(rotation(math.pi / 2), [1.0, 0.0])
    np.testing.assert_allclose(h.normal, [2.0, -2.0], atol=1e-15)
    assert h.offset == pytest.approx(0.0, abs=1e-15)
    assert h.contains([0.0, 0.0])
    assert attractive_halfspace(square(), [1.0]).is_whole_space


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(sorted(CATALOG)), st.integers(0, 2**16), st.floats(-1, 1))
def test_halfspace_boundary_is_the_bisector(id, seed, s):
    T = make_mapping(id)
    x = T.domain.random(np.random.default_rng(seed), 1)[0]
    tx = T(x)
    if np.linalg.norm(x - tx) < 1e-6:
        return
    # midpoint plus a step along the boundary
    d = x - tx
    tangent = np.array([-d[1], d[0]]) if d.size == 2 else np.zeros(1)
    z = 0.5 * (x + tx) + s * tangent
    h = attractive_halfspace(T, x)
    assert abs(h.normal @ z - h.offset) <= 1e-9 * max(1.0, abs(h.offset))
    assert abs(np.linalg.norm(tx - z) - np.linalg.norm(x - z)) <= 1e-9


def test_halving_bound_from_five_samples():
    T = make_mapping("halving")
    approx = build_attractive_approx(T, [[2], [1], [0.5], [0.1], [0.01]])
    assert approx.contains([0.0075])
    assert not approx.contains([0.0076])


def test_quarter_rotation_cross_collapses_to_origin():
    approx = build_attractive_approx(rotation(math.pi / 2), circle(4))
    axis = np.linspace(-1, 1, 41)
    grid = np.stack(np.meshgrid(axis, axis), -1).reshape(-1, 2)
    members = grid[approx.violation(grid) <= 1e-9]
    np.testing.assert_allclose(members, [[0.0, 0.0]], atol=1e-12)


def test_all_fixed_samples_give_whole_space():
    approx = build_attractive_approx(square(), [[1.0]])
    assert approx.whole_space
    assert isinstance(approx.as_set(), WholeSpace)
    np.testing.assert_array_equal(project_attractive(approx, [7.0]).point, [7.0])


def test_project_attractive_examples():
    approx = default_approx(make_mapping("halving"))
    assert abs(project_attractive(approx, [1.0]).point[0]) <= 0.0075
    np.testing.assert_array_equal(project_attractive(approx, [-3.0]).point, [-3.0])


def test_rotation_projection_matches_brute_force_on_a_wedge():
    # bisectors of a rotation all pass through the centre, so two samples give a wedge
    T = make_mapping("rotation")
    wedge = build_attractive_approx(T, circle(8)[:2])
    x = np.array([1.0, 1.0])
    p = project_attractive(wedge, x).point
    box = (np.array([-3.0, -3.0]), np.array([3.0, 3.0]))
    bf = brute_force_project(wedge.halfspaces, x, 0.005, box=box)
    assert np.linalg.norm(p - bf) <= 10 * 0.005


@pytest.mark.parametrize("samples", [circle(8), None])
def test_rotation_projection_reaches_the_centre(samples):
    T = make_mapping("rotation")
    approx = default_approx(T) if samples is None else build_attractive_approx(T, samples)
    assert np.linalg.norm(project_attractive(approx, [1.0, 1.0]).point) <= 0.05


@pytest.mark.parametrize("id", sorted(CATALOG))
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_known_attractive_points_are_members(id, seed):
    T = make_mapping(id)
    approx = default_approx(T, grid_size=16, random_count=32, seed=seed)
    for z in KNOWN_ATTRACTIVE[id]:
        assert approx.contains(z), (id, z)


@pytest.mark.parametrize("id", sorted(CATALOG))
def test_more_samples_never_enlarge_the_approximation(id):
    T = make_mapping(id)
    small = sample_schedule(T.domain, 16, 16, seed=0, refine_levels=10)
    large = np.vstack([small, sample_schedule(T.domain, 64, 64, seed=1)])
    a, b = build_attractive_approx(T, small), build_attractive_approx(T, large)
    rng = np.random.default_rng(0)
    lo, hi = T.domain.probe_lower - 1, T.domain.probe_upper + 1
    pts = rng.uniform(lo, hi, (1000, T.dim))
    in_a, in_b = a.violation(pts) <= a.tol, b.violation(pts) <= b.tol
    assert not np.any(in_b & ~in_a)


def test_table_round_trip_is_exact():
    approx = default_approx(make_mapping("rotation"))
    back = AttractiveApprox.from_table(approx.to_table())
    np.testing.assert_array_equal(back.normals, approx.normals)
    np.testing.assert_array_equal(back.offsets, approx.offsets)
    assert back.tol == approx.tol


def test_find_fixed_points_examples():
    sq = square()
    found = find_fixed_points(sq, np.linspace(0, 1, 101)[:, None])
    np.testing.assert_allclose(np.sort(found.points[:, 0]), [0.0, 1.0], atol=1e-12)
    half = make_mapping("halving")
    assert len(find_fixed_points(half, half.domain.grid(101))) == 0
    rot = make_mapping("rotation")
    axis = np.linspace(-1, 1, 21)
    grid = np.stack(np.meshgrid(axis, axis), -1).reshape(-1, 2)
    np.testing.assert_allclose(find_fixed_points(rot, grid).points, [[0.0, 0.0]], atol=1e-12)


def test_found_points_meet_the_tolerance():
    T = make_mapping("projection")
    found = find_fixed_points(T, T.domain.grid(400))
    assert len(found) > 0
    assert all(is_fixed_point(T, p, found.tol) for p in found.points)


def test_projection_identity_examples():
    sub = square(0.9)
    fixed = find_fixed_points(sub, sub.domain.grid(91))
    assert check_projection_identity(sub, default_approx(sub), fixed, [0.5]) <= 1e-6

    rot = rotation(math.pi / 2)
    approx = default_approx(rot)
    fixed = find_fixed_points(rot, rot.domain.grid(41 ** 2))
    assert check_projection_identity(rot, approx, fixed, [0.3, 0.4]) <= 0.05
    assert check_projection_identity(rot, approx, fixed, [0.0, 0.0]) <= 1e-12


def test_projection_identity_preconditions():
    sq = square()
    approx = default_approx(sq)
    with pytest.raises(PreconditionError):
        check_projection_identity(sq, approx, find_fixed_points(sq, [[0.5]]), [0.5])
    with pytest.raises(PreconditionError):
        check_projection_identity(sq, approx, find_fixed_points(sq, [[0.0]]), [2.0])
    with pytest.raises(PreconditionError):
        # not quasinonexpansive with respect to the fixed point 1
        check_projection_identity(sq, approx, find_fixed_points(sq, [[0.0], [1.0]]), [0.5])


def test_projected_attractive_point_is_fixed():
    sq = square()
    C = sq.domain.closure
    assert check_projected_attractive_fixed(sq, C, [-2.0])
    assert check_projected_attractive_fixed(sq, C, [-0.5])
    rot = make_mapping("rotation")
    assert check_projected_attractive_fixed(rot, rot.domain.closure, [0.0, 0.0])


def test_projected_attractive_point_precondition():
    sq = square()
    with pytest.raises(PreconditionError):
        check_projected_attractive_fixed(sq, sq.domain.closure, [1.0])


@pytest.mark.parametrize("id, per_axis", [("square", 101), ("rotation", 41)])
def test_members_of_c_are_exactly_the_attractive_fixed_points(id, per_axis):
    T = make_mapping(id)
    approx = default_approx(T)
    grid = T.domain.grid(per_axis ** T.dim)
    member = approx.violation(grid) <= approx.tol
    fixed = np.array([is_fixed_point(T, g) for g in grid])
    np.testing.assert_array_equal(member, member & fixed)
    assert member.sum() == 1
