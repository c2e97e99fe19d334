import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobius_gg.band_geometry import band_point, distance
from mobius_gg.diagonal_blowup import (
    DEFAULT_EPS,
    FULL_PLANE,
    BlowupPoint,
    blowup_embed,
    blowup_point,
    chart_differential,
    continuity_probe,
    defining_half_plane,
    exp_map,
    extend_action,
    injectivity_radius,
    log_map,
    ray_distance,
    translates_disjoint,
)
from mobius_gg.errors import DomainError
from mobius_gg.isotopy_engine import (
    IdentityIsotopy,
    band_slide,
    catalog_curve,
    compose,
    disk_slide,
    supported_twist,
)

MAPS = [
    band_slide(0.6, 0.1),
    disk_slide(band_point(0.05, -0.05), 0.25, 0.05),
    supported_twist(catalog_curve("c_core_nbhd")),
    supported_twist(catalog_curve("c_two_punctures")),
]


def test_injectivity_radius_value():
    assert injectivity_radius() == 0.5


def test_injectivity_radius_grid_witnesses():
    centers = [(x, y) for x in np.linspace(-0.5, 0.5, 11) for y in np.linspace(-0.5, 0.5, 11)]
    assert all(translates_disjoint(c, 0.49) for c in centers)
    assert not translates_disjoint((0.0, 0.0), 0.51)
    # near the boundary the first translate sits further away
    assert translates_disjoint((0.0, 0.45), 0.51)


def test_exp_map_examples():
    p = band_point(0.0, 0.0)
    assert exp_map(p, (0.0, 0.0)) == p
    q = exp_map(p, (0.3, 0.0))
    assert (q.x, q.y) == pytest.approx((0.3, 0.0))
    r = exp_map(band_point(0.4, 0.1), (0.2, 0.0))
    assert (r.x, r.y) == pytest.approx((-0.4, -0.1))
    with pytest.raises(DomainError):
        exp_map(p, (0.5, 0.0))


def test_half_planes_near_the_boundary():
    assert defining_half_plane(band_point(0.1, 0.0)) is FULL_PLANE
    top = defining_half_plane(band_point(0.1, 0.5))
    assert top.through_origin()
    assert top.contains((0.0, -0.1)) and not top.contains((0.0, 0.1))
    with pytest.raises(DomainError):
        exp_map(band_point(0.1, 0.5), (0.0, 0.1))
    bottom = defining_half_plane(band_point(0.1, -0.3))
    assert bottom.contains((0.0, -0.2)) and not bottom.contains((0.0, -0.25))


@settings(max_examples=200)
@given(st.floats(-0.5, 0.49), st.floats(-0.5, 0.5), st.floats(0, 2 * math.pi), st.floats(0, 0.49))
def test_log_inverts_exp(x, y, ang, r):
    p = band_point(x, y)
    v = (r * math.cos(ang), r * math.sin(ang))
    H = defining_half_plane(p)
    if H is not FULL_PLANE and not H.contains(v, tol=0.0):
        return
    q = exp_map(p, v)
    assert distance(p, q) == pytest.approx(r, abs=1e-9)
    assert np.allclose(log_map(p, q), v, atol=1e-9)


def test_embedding_examples():
    p = band_point(0.1, 0.1)
    assert np.linalg.norm(blowup_embed(blowup_point(p, p, (0.0, 2.0)))) == pytest.approx(1.0)
    eps = 0.2
    q = exp_map(p, (eps, 0.0))
    assert np.linalg.norm(blowup_embed(blowup_point(p, q), eps)) == pytest.approx(math.exp(eps))
    far = exp_map(p, (0.3, 0.0))
    with pytest.raises(DomainError):
        blowup_embed(blowup_point(p, far), eps)


def test_embedding_norm_range():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        p = band_point(rng.uniform(-0.4, 0.4), rng.uniform(-0.25, 0.25))
        v = rng.uniform(-1, 1, 2)
        v *= rng.uniform(0, DEFAULT_EPS) / np.linalg.norm(v)
        pt = blowup_point(p, exp_map(p, v)) if np.linalg.norm(v) > 0 else blowup_point(p, p, (1, 0))
        n = np.linalg.norm(blowup_embed(pt))
        assert 1.0 <= n <= math.exp(DEFAULT_EPS) + 1e-12


def test_diagonal_point_needs_a_ray():
    p = band_point(0.0, 0.0)
    with pytest.raises(DomainError):
        blowup_point(p, p)
    with pytest.raises(DomainError):
        blowup_point(p, p, (0.0, 0.0))


def test_identity_action_fixes_points():
    p = band_point(0.1, -0.2)
    pt = blowup_point(p, p, (0.6, 0.8))
    assert ray_distance(extend_action(IdentityIsotopy(), pt), pt) < 1e-15


def test_shear_differential_on_the_diagonal():
    f = band_slide(0.6, 0.1)
    p = band_point(0.0, 0.22)  # inside the ramp, where the shear is nontrivial
    J = f.jacobian(1.0, p)
    assert J[1, 0] == 0 and J[0, 1] != 0
    out = extend_action(f, blowup_point(p, p, (0.0, 1.0)))
    X, _ = f.lift_map(1.0, np.array([p.x]), np.array([p.y]))
    n = math.floor(X[0] + 0.5)  # deck index of the image lift
    expect = np.diag([1.0, (-1.0) ** n]) @ J @ np.array([0.0, 1.0])
    expect /= np.linalg.norm(expect)
    assert out.ray == pytest.approx(tuple(expect))


def test_chart_differential_conjugates_by_the_deck_flip():
    f = band_slide(0.6, 0.1)
    p = band_point(0.4, 0.0)
    D = chart_differential(f, p)
    J = f.jacobian(1.0, p)
    assert np.allclose(D, np.diag([1.0, -1.0]) @ J)


@pytest.mark.parametrize("f", MAPS, ids=lambda f: f.name)
def test_action_is_continuous_at_the_diagonal(f):
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = band_point(*rng.uniform(-0.4, 0.4, 2))
        a = rng.uniform(0, 2 * math.pi)
        u = np.array([math.cos(a), math.sin(a)])
        probe = continuity_probe(f, p, u)
        errs = probe["errors"]
        # below 1e-8 rounding dominates (plateau and outside the support)
        assert all(b <= a or b < 1e-8 for a, b in zip(errs, errs[1:]))
        assert probe["limit_error"] < 1e-6


@pytest.mark.parametrize("k", range(3))
def test_action_is_functorial(k):
    f, g = MAPS[k], MAPS[k + 1]
    rng = np.random.default_rng(k)
    for _ in range(20):
        p = band_point(*rng.uniform(-0.4, 0.4, 2))
        a = rng.uniform(0, 2 * math.pi)
        pt = blowup_point(p, p, (math.cos(a), math.sin(a)))
        both = extend_action(compose([f, g]), pt)
        step = extend_action(g, extend_action(f, pt))
        assert ray_distance(both, step) < 1e-8


def test_off_diagonal_action_maps_pairs():
    f = MAPS[0]
    p, q = band_point(0.0, 0.1), band_point(0.1, 0.15)
    out = extend_action(f, blowup_point(p, q))
    assert not out.on_diagonal
    assert isinstance(out, BlowupPoint)
    assert distance(out.p, f.eval(1.0, p)) < 1e-12
