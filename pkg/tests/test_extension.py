from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attractive.attractive_set import (build_attractive_approx, default_approx,
                                       find_fixed_points, project_attractive)
from attractive.extension import (ExtensionError, extend, verify_extension_fixed_set,
                                  verify_extension_quasinonexpansive)
from attractive.mappings import make_mapping, square


def build(id, **params):
    T = make_mapping(id, **params)
    fixed = find_fixed_points(T, T.domain.grid(101 ** T.dim))
    return extend(T, default_approx(T), fixed)


@lru_cache(maxsize=None)
def square_extension():
    return build("square")


@pytest.fixture
def sq_ext():
    return square_extension()


def test_square_extension_examples(sq_ext):
    assert abs(sq_ext([1.0])[0]) <= 1e-6
    np.testing.assert_array_equal(sq_ext([0.5]), [0.25])
    np.testing.assert_array_equal(sq_ext([-3.0]), [-3.0])


def test_whole_space_approximation_cannot_be_extended():
    T = square()
    with pytest.raises(ExtensionError):
        extend(T, build_attractive_approx(T, [[1.0]]), find_fixed_points(T, [[1.0]]))


def test_square_fixed_set_is_the_approximation(sq_ext):
    grid = np.arange(-200, 201)[:, None] / 100
    rep = verify_extension_fixed_set(sq_ext, grid)
    assert rep.passed, str(rep)


def test_boundary_band_is_excluded_from_accounting(sq_ext):
    # |x - x^2| lies in (tol, 10 tol] for x = 5e-9
    grid = np.array([[5e-9], [0.5]])
    rep = verify_extension_fixed_set(sq_ext, grid)
    assert rep.ambiguous == 1
    assert rep.samples_checked == 1


def test_rotation_extension_is_the_rotation():
    ext = build("rotation")
    axis = np.linspace(-1, 1, 21)
    grid = np.stack(np.meshgrid(axis, axis), -1).reshape(-1, 2)
    assert verify_extension_fixed_set(ext, grid).passed
    fixed = [g for g in grid if np.linalg.norm(ext(g) - g) <= ext.tol]
    np.testing.assert_allclose(fixed, [[0.0, 0.0]], atol=1e-12)


def test_halving_extension_projects_off_the_half_line():
    ext = build("halving")
    grid = np.linspace(-1, 2, 301)[:, None]
    assert verify_extension_fixed_set(ext, grid).passed
    fixed = grid[[np.linalg.norm(ext(g) - g) <= ext.tol for g in grid]]
    np.testing.assert_allclose(fixed[:, 0], grid[grid[:, 0] <= 1e-12, 0])


def test_square_extension_is_quasinonexpansive(sq_ext):
    probes = np.random.default_rng(0).uniform(-3, 3, (200, 1))
    rep = verify_extension_quasinonexpansive(sq_ext, [[0.0], [-0.5], [-2.0]], probes)
    assert rep.passed, str(rep)


def test_member_probe_has_zero_residual(sq_ext):
    rep = verify_extension_quasinonexpansive(sq_ext, [[-2.0]], [[-0.5]])
    assert rep.max_violation == 0.0


def test_rotation_extension_keeps_circles():
    ext = build("rotation")
    t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    probes = 1.3 * np.column_stack([np.cos(t), np.sin(t)])
    rep = verify_extension_quasinonexpansive(ext, [[0.0, 0.0]], probes)
    assert abs(rep.max_violation) <= 1e-15


def test_members_must_be_in_the_approximation(sq_ext):
    with pytest.raises(ValueError):
        verify_extension_quasinonexpansive(sq_ext, [[0.5]], [[0.1]])


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1))
def test_moved_points_of_c_use_the_base_branch(x):
    ext = square_extension()
    if abs(x - x * x) > ext.tol:
        np.testing.assert_array_equal(ext([x]), ext.base([x]))


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5))
def test_projection_branch_fixes_exactly_the_members(x):
    approx = square_extension().approx
    p = project_attractive(approx, [x]).point
    np.testing.assert_allclose(project_attractive(approx, p).point, p, atol=1e-12)
    assert approx.contains(p)


def test_attractive_points_are_fixed_by_the_extension(sq_ext):
    members = [project_attractive(sq_ext.approx, [x]).point for x in np.linspace(-3, 3, 61)]
    assert all(np.linalg.norm(sq_ext(z) - z) <= sq_ext.tol for z in members)


def test_fixed_points_of_the_extension_are_attractive(sq_ext):
    grid = np.linspace(-3, 3, 601)[:, None]
    fixed = [g for g in grid if np.linalg.norm(sq_ext(g) - g) <= sq_ext.tol]
    assert fixed
    assert all(sq_ext.approx.contains(g) for g in fixed)
