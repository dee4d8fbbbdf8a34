import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ball
from oracles import shoelace_symplectic
from twistedhall import ValidationError
from twistedhall.cocycles import (
    MagneticMultiplier, area_cocycle, area_cocycle_many, flux_theta, kubo_cocycle, omega, period_scale,
    psi_sum, sigma, solve_coboundary_defect, symplectic_form,
)
from twistedhall.groups import OUT
from twistedhall.hypgeom import signed_triangle_area
from twistedhall.signatures import Signature


def random_triples(b, n, seed=0):
    rng = np.random.default_rng(seed)
    r = b.radius // 3
    pool = b.within(r)
    x, y, z = (rng.choice(pool, n) for _ in range(3))
    xy, yz = b.multiply_many(x, y), b.multiply_many(y, z)
    xyz = b.multiply_many(xy, z)
    ok = (xy != OUT) & (yz != OUT) & (xyz != OUT)
    return x[ok], y[ok], z[ok], xy[ok], yz[ok], xyz[ok]


@pytest.mark.parametrize("text,R", [("2;", 4), ("0;2,3,7", 6), ("0;2,2,3,3", 4), ("1;", 6)])
def test_area_cocycle_basic(text, R):
    b = ball(text, R)
    xs = np.arange(len(b))
    assert np.all(area_cocycle_many(b, np.zeros(len(b), int), xs) == 0)
    assert np.allclose(area_cocycle_many(b, xs, b.inverse), 0, atol=1e-12)
    x, y, z, xy, yz, xyz = random_triples(b, 2000)
    c = lambda a, bb, ab: area_cocycle_many(b, a, bb, ab)
    res = c(x, y, xy) + c(xy, z, xyz) - c(x, yz, xyz) - c(y, z, yz)
    assert np.abs(res).max() < 1e-9


def test_area_cocycle_matches_triangle_area():
    b = ball("2;", 3)
    for x, y in [(1, 2), (5, 17), (30, 6)]:
        xy = b.multiply(x, y)
        assert area_cocycle(b, x, y) == pytest.approx(
            signed_triangle_area(0, b.points[x], b.points[xy]), abs=1e-12)


def test_inverse_vertex_form_is_not_a_cocycle():
    # (o, x.o, y^-1.o) is not closed under the coboundary; the (o, x.o, xy.o) form is used instead
    b = ball("2;", 4)
    x, y, z, xy, yz, xyz = random_triples(b, 500)
    c = lambda a, bb: b.geometry.areas_from_origin(b.points[a], b.points[b.inverse[bb]])
    res = c(x, y) + c(xy, z) - c(x, yz) - c(y, z)
    assert np.abs(res).max() > 1e-3


@pytest.mark.parametrize("text,R", [("2;", 4), ("0;2,3,7", 6)])
def test_multiplier_properties(text, R):
    b = ball(text, R)
    mult = MagneticMultiplier(b, 0.37)
    xs = np.arange(len(b))
    assert np.allclose(mult.many(np.zeros_like(xs), xs), 1)
    assert np.allclose(mult.many(xs, np.zeros_like(xs)), 1)
    assert np.allclose(mult.many(xs, b.inverse), 1, atol=1e-12)
    assert sigma(MagneticMultiplier(b, 0.0), 3, 4) == 1
    x, y, z, xy, yz, xyz = random_triples(b, 2000, seed=1)
    s = mult.many
    assert np.allclose(np.abs(s(x, y, xy)), 1, atol=1e-15)
    res = s(x, y, xy) * s(xy, z, xyz) - s(x, yz, xyz) * s(y, z, yz)
    assert np.abs(res).max() < 1e-9


def test_flux_theta_examples():
    assert flux_theta(Signature.parse("2;"), 0) == 1
    assert flux_theta(Signature.parse("2;"), F(1, 4)) == F(1, 2)
    assert flux_theta(Signature.parse("0;2,2,3,3"), F(3, 2)) == F(1, 2)
    assert flux_theta(Signature.parse("1;"), 2 * math.pi / 3) == pytest.approx(1 / 3)
    assert flux_theta(Signature.parse("2;"), 0.25) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        flux_theta(Signature.parse("0;2,3,6"), 1.0)


def test_omega_examples():
    b = ball("2;", 4)
    a1 = b.element((1,))
    assert omega(b, 1, a1) == 1
    assert omega(b, 3, a1) == 0
    with pytest.raises(ValidationError):
        omega(b, 5, a1)
    c = ball("1;2", 3)
    cone = c.element((3,))
    assert omega(c, 1, cone) == 0 and omega(c, 2, cone) == 0
    with pytest.raises(ValidationError):
        omega(ball("0;2,3,7", 2), 1, 0)


def test_omega_homomorphism():
    b = ball("2;", 4)
    pool = b.within(2)
    tab = b.product_table(pool, pool)
    i, j = np.nonzero(tab != OUT)
    assert np.array_equal(b.abelian[tab[i, j]], b.abelian[pool[i]] + b.abelian[pool[j]])


def test_psi_sum_examples():
    b = ball("2;", 3)
    a1, b1 = b.element((1,)), b.element((3,))
    assert psi_sum(b, a1, b1) == 1
    assert psi_sum(b, b1, a1) == -1
    xs = np.arange(len(b))
    assert not np.any(psi_sum(b, xs, xs))
    assert psi_sum(ball("0;2,3,7", 2), 1, 2) == 0


@settings(max_examples=100)
@given(st.lists(st.integers(-5, 5), min_size=4, max_size=4), st.lists(st.integers(-5, 5), min_size=4, max_size=4))
def test_psi_matches_shoelace(u, v):
    assert int(symplectic_form(np.array(u), np.array(v))) == shoelace_symplectic(u, v)


def test_psi_matches_shoelace_on_ball():
    b = ball("2;", 3)
    for x in range(0, len(b), 23):
        for y in range(0, len(b), 31):
            assert psi_sum(b, x, y) == shoelace_symplectic(b.abelian[x].tolist(), b.abelian[y].tolist())


def test_period_scale():
    assert period_scale(ball("2;", 1).realization) == pytest.approx(-math.pi, abs=1e-9)
    assert period_scale(ball("1;", 1).realization) == pytest.approx(0.5)
    assert period_scale(ball("0;2,3,7", 1).realization) == 0


def test_euclidean_kubo_equals_area_and_defect_vanishes():
    b = ball("1;", 6)
    pool = b.within(3)
    x, y = np.repeat(pool, len(pool)), np.tile(pool, len(pool))
    xy = b.multiply_many(x, y)
    ok = xy != OUT
    area = area_cocycle_many(b, x[ok], y[ok], xy[ok])
    pts = b.points
    flat = 0.5 * np.imag(np.conj(pts[x[ok]]) * pts[xy[ok]])
    assert np.abs(area - flat).max() < 1e-12
    assert np.abs(kubo_cocycle(b, x[ok], y[ok]) - area).max() < 1e-12
    fit = solve_coboundary_defect(b)
    assert fit.residual == 0 and not fit.k.any()


def test_coboundary_surface_group():
    fit = solve_coboundary_defect(ball("2;", 4))
    assert fit.residual < 1e-6
    assert fit.defect_rms > 0.1  # D itself is far from zero
    assert fit.k[0] == pytest.approx(0, abs=1e-9)


def test_coboundary_obstruction_triangle_group():
    assert solve_coboundary_defect(ball("0;2,3,7", 4)).residual > 0.05


def test_coboundary_needs_radius_three():
    with pytest.raises(ValidationError):
        solve_coboundary_defect(ball("2;", 2))


def test_sigma_independent_of_representative_word():
    b = ball("0;2,3,7", 6)
    mult = MagneticMultiplier(b, 0.8)
    # C1 C2 = C3^-1: two words for the same element
    w1, w2 = b.element((1, 2)), b.element((-3,))
    assert w1 == w2
    y = b.element((2, 3))
    assert mult(w1, y) == mult(w2, y)
