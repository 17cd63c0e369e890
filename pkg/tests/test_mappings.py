import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attractive.hilbert import Ball
from attractive.mappings import (CATALOG, OPEN_EPS, DomainError, attractive_residual,
                                 is_fixed_point, lambda_hybrid_equiv_residual,
                                 lambda_hybrid_residual, make_mapping, projection,
                                 quasinonexpansive_residual, random_pairs, rotation,
                                 sample_schedule, square)


def test_is_fixed_point_examples():
    sq = make_mapping("square")
    assert is_fixed_point(sq, [1.0], 1e-9)
    assert not is_fixed_point(sq, [0.5], 1e-9)
    assert is_fixed_point(make_mapping("rotation"), [0.0, 0.0])


def test_mapping_rejects_points_outside_domain():
    with pytest.raises(DomainError):
        make_mapping("square")([1.5])
    with pytest.raises(DomainError):
        make_mapping("halving")([0.0])


def test_unknown_catalog_id():
    with pytest.raises(KeyError):
        make_mapping("shear")


def test_open_domain_samples_avoid_the_boundary():
    dom = make_mapping("halving").domain
    pts = sample_schedule(dom)
    assert pts.min() >= OPEN_EPS
    assert all(dom.contains(p) for p in pts)


def test_attractive_residual_examples():
    half = make_mapping("halving")
    assert attractive_residual(half, [0.0], [[0.1], [1], [2], [5]]).max_violation <= 0
    rep = attractive_residual(half, [0.5], [[0.1], [0.5], [2]])
    assert rep.max_violation == pytest.approx(0.25)
    assert not rep.passed
    np.testing.assert_array_equal(rep.argmax_witness[0], [0.5])
    rep = attractive_residual(make_mapping("square"), [1.0], [[0.5]])
    assert rep.max_violation == pytest.approx(0.25)
    assert not rep.passed


def test_attractive_residual_needs_samples():
    with pytest.raises(ValueError):
        attractive_residual(make_mapping("halving"), [0.0], [])


def test_quasinonexpansive_examples():
    rot = rotation(math.pi / 2)
    xs = rot.domain.random(np.random.default_rng(0), 50)
    assert quasinonexpansive_residual(rot, [[0.0, 0.0]], xs).passed
    sq = make_mapping("square")
    assert quasinonexpansive_residual(sq, [[0.0]], np.linspace(0, 1, 101)[:, None]).passed
    rep = quasinonexpansive_residual(sq, [[1.0]], [[0.5]])
    assert rep.max_violation == pytest.approx(0.25)
    assert not rep.passed


def test_quasinonexpansive_witness_is_first_maximum():
    rot = rotation(math.pi / 2)
    # every pair is an exact tie at 0, so the first pair is the witness
    rep = quasinonexpansive_residual(rot, [[0.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 2.0]])
    np.testing.assert_array_equal(rep.argmax_witness[0], [1.0, 0.0])
    assert rep.samples_checked == 4


def test_quasinonexpansive_needs_inputs():
    with pytest.raises(ValueError):
        quasinonexpansive_residual(make_mapping("square"), [], [[0.5]])


@pytest.mark.parametrize("id", ["halving", "rotation"])
def test_nonexpansive_maps_are_1_hybrid(id):
    T = make_mapping(id)
    assert lambda_hybrid_residual(T, 1.0, random_pairs(T, 200, seed=3)).passed


def test_quarter_rotation_is_an_isometry():
    T = rotation(math.pi / 2)
    rep = lambda_hybrid_residual(T, 1.0, random_pairs(T, 200, seed=0))
    assert abs(rep.max_violation) <= 1e-12


def test_projection_is_0_hybrid_but_not_2_hybrid():
    T = projection(Ball([0.0, 0.0], 1.0))
    pairs = random_pairs(T, 200, seed=0)
    assert lambda_hybrid_residual(T, 0.0, pairs).passed
    # both points on a ray outside the ball: |Tx-Ty|^2 = 0 but the hybrid term is -3
    rep = lambda_hybrid_residual(T, 2.0, [([3.0, 0.0], [2.0, 0.0])])
    assert rep.max_violation == pytest.approx(3.0)
    assert not rep.passed


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["halving", "rotation", "square", "projection", "affine-contraction"]),
       st.floats(-2, 3), st.integers(0, 2**16))
def test_hybrid_forms_agree(id, lam, seed):
    T = make_mapping(id)
    pairs = random_pairs(T, 20, seed)
    for p in pairs:
        a = lambda_hybrid_residual(T, lam, [p]).max_violation
        b = lambda_hybrid_equiv_residual(T, lam, [p]).max_violation
        assert a == pytest.approx(b, abs=1e-9)


def test_hybrid_forms_agree_when_y_is_fixed():
    T = make_mapping("square")
    a = lambda_hybrid_residual(T, 0.3, [([0.5], [1.0])]).max_violation
    b = lambda_hybrid_equiv_residual(T, 0.3, [([0.5], [1.0])]).max_violation
    assert a == pytest.approx(b, abs=1e-15)


KNOWN_ATTRACTIVE = {
    "halving": [[0.0], [-1.0], [-3.5]],
    "rotation": [[0.0, 0.0]],
    "square": [[0.0], [-0.5], [-2.0]],
    "projection": [[0.0, 0.0], [0.6, -0.8], [-0.3, 0.2]],
    "affine-contraction": [[0.0, 0.0]],
}


@pytest.mark.parametrize("id", sorted(CATALOG))
def test_maps_are_quasinonexpansive_wrt_attractive_points(id):
    T = make_mapping(id)
    rep = quasinonexpansive_residual(T, KNOWN_ATTRACTIVE[id], sample_schedule(T.domain))
    assert rep.passed, str(rep)


@pytest.mark.parametrize("id", ["rotation", "projection", "affine-contraction", "halving"])
def test_fixed_points_of_hybrid_maps_are_attractive(id):
    T = make_mapping(id)
    samples = sample_schedule(T.domain)
    assert lambda_hybrid_residual(T, T.lam, random_pairs(T, 200)).passed
    fixed = [s for s in samples if is_fixed_point(T, s)]
    for z in fixed:
        assert attractive_residual(T, z, samples).passed


def test_square_one_is_fixed_but_not_attractive():
    sq = square()
    assert is_fixed_point(sq, [1.0])
    assert not attractive_residual(sq, [1.0], sample_schedule(sq.domain)).passed
