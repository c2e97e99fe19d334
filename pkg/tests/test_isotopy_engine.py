import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobius_gg.band_geometry import HALF, band_point, canonicalize
from mobius_gg.errors import ConfigurationError
from mobius_gg.isotopy_engine import (
    CATALOG,
    BaseGeometry,
    band_slide,
    catalog_curve,
    compose,
    contraction_map,
    curve_invariants,
    density_check,
    disk_slide,
    generator_isotopies,
    invert,
    make_bump,
    make_step,
    power,
    supported_twist,
    trajectory,
    trajectory_csv,
)


def catalog_isotopies():
    out = {name: supported_twist(catalog_curve(name)) for name in CATALOG}
    out["band_slide"] = band_slide(0.6, 0.1)
    out["disk_slide"] = disk_slide(band_point(0.1, -0.05), 0.2, 0.03)
    out.update({f"gen_{k}": v for k, v in generator_isotopies().items()})
    return out


def test_step_profile_examples():
    f = make_step(0.4, 0.1)
    assert f(0.0) == 1.0
    assert f(0.4) == 0.0
    assert f(0.3) == 1.0
    assert f(0.35) == 0.0
    grid = np.linspace(0.3, 0.35, 1000)
    vals = f(grid)
    assert np.all(np.diff(vals[1:-1]) < 0)


def test_step_profile_rejects_bad_parameters():
    with pytest.raises(ConfigurationError):
        make_step(0.1, 0.2)
    with pytest.raises(ConfigurationError):
        make_step(0.1, 0.0)


@settings(max_examples=100)
@given(st.floats(-0.4, 0.4))
def test_bump_is_even(v):
    b = make_bump(0.4, 0.1)
    assert b(v) == b(-v)


def test_step_slope_matches_finite_differences():
    f = make_step(0.4, 0.1)
    r = np.linspace(0.29, 0.36, 301)
    _, slope = f.value_and_slope(r)
    h = 1e-7
    fd = (f(r + h) - f(r - h)) / (2 * h)
    assert np.max(np.abs(slope - fd)) < 1e-4


def test_band_slide_examples():
    iso = band_slide(0.6, 0.1)
    p = band_point(0.2, 0.0)
    q = iso.eval(1.0, p)
    assert (q.x, q.y) == pytest.approx((0.2, 0.0), abs=1e-12)
    X, _ = iso.lift_map(1.0, np.array([0.2]), np.array([0.0]))
    assert X[0] == pytest.approx(1.2)
    # outside the support the map is the identity
    edge = band_point(0.1, 0.3 - 0.1 / 4)
    assert iso.eval(0.7, edge) == edge
    assert density_check(iso, 10_000)["max_deviation"] == 0.0


def test_band_slide_rejects_wide_collar():
    with pytest.raises(ConfigurationError):
        band_slide(0.4, 0.2)


def test_disk_slide_examples():
    c = band_point(0.0, 0.0)
    iso = disk_slide(c, 0.3, 0.05)
    p = band_point(0.05, 0.02)
    q = iso.eval(1.0, p)
    assert (q.x, q.y) == pytest.approx((p.x, p.y), abs=1e-12)
    h = iso.eval(0.5, p)
    assert (h.x, h.y) == pytest.approx((-0.05, -0.02), abs=1e-12)
    rim = iso.radius - iso.d / 2
    r = band_point(rim + 1e-9, 0.0)
    assert iso.eval(0.3, r) == r
    assert density_check(iso, 10_000, method="fd")["max_deviation"] <= 1e-6


def test_composite_density_by_finite_differences():
    isos = catalog_isotopies()
    both = compose([isos["c_two_punctures"], isos["c_core_nbhd"]])
    assert density_check(both, 10_000, method="fd")["max_deviation"] <= 1e-5


def test_disk_slide_rejects_large_disk():
    with pytest.raises(ConfigurationError):
        disk_slide(band_point(0.3, 0.0), 0.3, 0.05)


def test_catalog_certificates():
    expected = {"c_boundary": (2, 1), "c_core_nbhd": (2, 2), "c_two_punctures": (0, 2)}
    for name in CATALOG:
        c = catalog_curve(name)
        assert (c.N, c.n_c) == expected[name]
        cert = c.certificate
        assert cert["avoids_base_points"] and cert["two_sided"]
        assert cert["N_matches"] and cert["n_c_matches"], (name, cert)


def test_twist_along_two_punctures_revolves_the_plateau():
    iso = supported_twist(catalog_curve("c_two_punctures"))
    z = BaseGeometry().points
    for p in z:
        q = iso.eval(1.0, p)
        assert (q.x, q.y) == pytest.approx((p.x, p.y), abs=1e-12)
    traj = trajectory(iso, z, np.linspace(0, 1, 401))
    ang = np.unwrap(np.arctan2(traj[:, 0, 1], traj[:, 0, 0]))
    assert (ang[-1] - ang[0]) / (2 * math.pi) == pytest.approx(1.0)


def test_twist_along_boundary_loops_core_points():
    iso = supported_twist(catalog_curve("c_boundary"))
    X, Y = iso.lift_map(np.linspace(0, 1, 11), np.zeros(11), np.zeros(11))
    assert X[-1] == pytest.approx(1.0)
    assert np.all(Y == 0)


@pytest.mark.parametrize("name", CATALOG)
def test_twist_is_identity_outside(name):
    curve = catalog_curve(name)
    iso = supported_twist(curve)
    rng = np.random.default_rng(5)
    x = rng.uniform(-HALF, HALF, 20_000)
    y = rng.uniform(-HALF, HALF, 20_000)
    out = ~iso.support_contains(x, y)
    for t in (0.25, 0.6, 1.0):
        X, Y = iso.lift_map(t, x[out], y[out])
        assert np.array_equal(X, x[out]) and np.array_equal(Y, y[out])


def test_supported_twist_rejects_oversized_collar():
    with pytest.raises(ConfigurationError, match="collar"):
        supported_twist(catalog_curve("c_core_nbhd"), xi=0.01, d=0.05)


@pytest.mark.parametrize("name,iso", sorted(catalog_isotopies().items()))
def test_density_preservation(name, iso):
    closed = density_check(iso, 10_000)
    assert closed["max_deviation"] <= 1e-6
    fd = density_check(iso, 10_000, method="fd")
    assert fd["max_deviation"] <= 1e-5


@pytest.mark.parametrize("name,iso", sorted(catalog_isotopies().items()))
def test_boundary_collar_is_fixed(name, iso):
    x = np.linspace(-HALF, HALF, 501)
    for y0 in (HALF, -HALF, HALF - 1e-3, -HALF + 1e-3):
        y = np.full_like(x, y0)
        for t in (0.3, 1.0):
            X, Y = iso.lift_map(t, x, y)
            assert np.array_equal(X, x) and np.array_equal(Y, y)


def test_closed_jacobian_matches_finite_differences():
    # Richardson-combined central differences, compared relative to |J|
    rng = np.random.default_rng(2)
    for name, iso in catalog_isotopies().items():
        t = rng.uniform(0, 1, 500)
        x = rng.uniform(-0.45, 0.45, 500)
        y = rng.uniform(-0.45, 0.45, 500)
        h = 1e-6
        fd = (4 * iso.fd_jacobian(t, x, y, h / 2) - iso.fd_jacobian(t, x, y, h)) / 3
        J = iso.lift_jacobian(t, x, y)
        scale = 1 + np.abs(J).max(axis=(1, 2))
        assert np.max(np.abs(J - fd).max(axis=(1, 2)) / scale) < 1e-4, name


def test_compose_with_inverse_is_identity():
    iso = supported_twist(catalog_curve("c_core_nbhd"))
    both = compose([iso, invert(iso)])
    rng = np.random.default_rng(4)
    x = rng.uniform(-HALF, HALF, 1000)
    y = rng.uniform(-HALF, HALF, 1000)
    X, Y = both.lift_map(1.0, x, y)
    xc, yc, _ = canonicalize(X, Y)
    assert np.max(np.abs(xc - x)) < 1e-9 and np.max(np.abs(yc - y)) < 1e-9


def test_lift_inverse_undoes_lift_map():
    rng = np.random.default_rng(6)
    x = rng.uniform(-HALF, HALF, 1000)
    y = rng.uniform(-HALF, HALF, 1000)
    for iso in catalog_isotopies().values():
        X, Y = iso.lift_map(0.7, x, y)
        x2, y2 = iso.lift_inverse(0.7, X, Y)
        assert np.max(np.abs(x2 - x)) < 1e-9 and np.max(np.abs(y2 - y)) < 1e-9


def test_power_examples():
    iso = band_slide(0.6, 0.1)
    assert power(iso, 1) is iso
    sq = power(iso, 2)
    t = np.linspace(0, 1, 2001)
    X, _ = sq.lift_map(t, np.zeros_like(t), np.zeros_like(t))
    crossings = np.count_nonzero(np.diff(np.floor(X + HALF)))
    assert crossings == 2


def test_time_zero_is_identity():
    rng = np.random.default_rng(8)
    x = rng.uniform(-HALF, HALF, 500)
    y = rng.uniform(-HALF, HALF, 500)
    for iso in catalog_isotopies().values():
        X, Y = iso.lift_map(0.0, x, y)
        xc, yc, _ = canonicalize(X, Y)
        assert np.allclose(xc, x, atol=1e-12) and np.allclose(yc, y, atol=1e-12)


def test_generator_isotopies_fix_base_at_time_one():
    base = BaseGeometry()
    for name, iso in generator_isotopies(base).items():
        for q in (iso.eval(1.0, p) for p in base.points):
            assert min(math.hypot(q.x - p.x, q.y - p.y) for p in base.points) < 1e-9, name


def test_contraction_map_examples():
    L, phi_x, phi_y = contraction_map(0.5, 0.5, 1 / 16)
    assert phi_x(-HALF) == pytest.approx(-HALF)
    assert phi_y(HALF) == pytest.approx(HALF) and phi_y(-HALF) == pytest.approx(-HALF)
    assert phi_y(0.0) == 0.0
    # the dividing line and its neighbourhood contract by 1/2
    assert phi_x(0.01) == pytest.approx(0.005)
    fine = L.level_decomposition(1)
    assert fine.eps == pytest.approx(1 / 32)
    # V1 of the coarse decomposition maps into V1 of the finer one
    v = L.dec.V1
    rng = np.random.default_rng(0)
    pts = np.stack([rng.uniform(v.x0, v.x1, 500), rng.uniform(v.y0, v.y1, 500)], axis=1)
    img = L.apply_points(pts)
    assert np.all(fine.V1.contains(img[:, 0], img[:, 1]))
    # horizontal leaves go to horizontal leaves
    leaf = np.stack([np.linspace(-0.4, 0.4, 50), np.full(50, 0.47)], axis=1)
    assert np.ptp(L.apply_points(leaf)[:, 1]) == 0


@pytest.mark.parametrize("name", CATALOG)
def test_contraction_preserves_curve_invariants(name):
    L, _, _ = contraction_map(0.5, 0.5, 1 / 16)
    c = catalog_curve(name)
    prev = curve_invariants(c.points, L.dec)
    for i in (1, 2, 3):
        img = L.apply_points(c.points, times=i)
        inv = curve_invariants(img, L.level_decomposition(i))
        assert (inv["N"], inv["n_c"]) == (prev["N"], prev["n_c"])
        prev = inv


def test_trajectory_csv_shape():
    iso = band_slide(0.6, 0.1)
    text = trajectory_csv(iso, BaseGeometry().points, n_times=5)
    lines = text.strip().splitlines()
    assert lines[0] == "t,strand,x,y"
    assert len(lines) == 1 + 5 * 2
