import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import area_from_origin_closed_form
from twistedhall import NumericalFailure, ValidationError
from twistedhall.hypgeom import (
    Isometry, apply, areas, areas_from_origin, classify, distance, polygon_area, rotation_about,
    rotation_about_origin, segment_frame, signed_triangle_area, to_disk, to_half_plane,
    translation_along_real_axis, vertex_angle,
)

points = st.builds(lambda r, t: r * cmath.exp(1j * t), st.floats(0, 0.9), st.floats(0, 2 * math.pi))
angles = st.floats(-math.pi, math.pi)
isometries = st.builds(lambda p, a, d: rotation_about(p, a) @ translation_along_real_axis(d),
                       points, angles, st.floats(-2, 2))


def triangle_with_angles(a, b, c):
    """Vertices of a geodesic triangle with interior angles a (at 0), b, c."""
    side_ab = math.acosh((math.cos(c) + math.cos(a) * math.cos(b)) / (math.sin(a) * math.sin(b)))
    side_ac = math.acosh((math.cos(b) + math.cos(a) * math.cos(c)) / (math.sin(a) * math.sin(c)))
    return 0j, complex(math.tanh(side_ab / 2)), math.tanh(side_ac / 2) * cmath.exp(1j * a)


def test_identity_and_symmetry():
    assert apply(Isometry.identity(), 0.3 + 0.2j) == pytest.approx(0.3 + 0.2j)
    assert apply(rotation_about(0, math.pi), 0.3) == pytest.approx(-0.3, abs=1e-12)


def test_isometry_normalisation():
    m = Isometry(2, 0, 0, 2)
    assert abs(np.linalg.det(m.matrix) - 1) < 1e-12
    assert Isometry(-1, 0, 0, -1).quadruple() == (1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValidationError):
        Isometry(0, 1, 1, 0)


def test_cayley_roundtrip():
    z = 0.4 - 0.3j
    assert abs(to_disk(to_half_plane(z)) - z) < 1e-14


def test_boundary_guard():
    with pytest.raises(NumericalFailure):
        apply(Isometry.identity(), 1.0)
    with pytest.raises(NumericalFailure):
        apply(Isometry(math.exp(20), 0, 0, math.exp(-20)), 0.0)


@pytest.mark.parametrize("nu", [2, 3, 7])
def test_elliptic_order(nu):
    p = 0.3 + 0.1j
    r = rotation_about(p, 2 * math.pi / nu)
    m = np.eye(2)
    for _ in range(nu):
        m = m @ r.matrix
    assert min(np.abs(m - np.eye(2)).max(), np.abs(m + np.eye(2)).max()) < 1e-10
    assert abs(abs(r.trace()) - 2 * abs(math.cos(math.pi / nu))) < 1e-12
    assert abs(apply(r, p) - p) < 1e-12


def test_distance_examples():
    assert distance(0, 0) == 0
    for r in (0.1, 0.5, 0.9):
        assert distance(0, r) == pytest.approx(math.log((1 + r) / (1 - r)), rel=1e-12)


def test_classify_examples():
    assert classify(Isometry.identity()) == "identity"
    assert classify(rotation_about(0.2j, 2 * math.pi / 3)) == "elliptic"
    t = 0.7
    assert classify(Isometry(math.exp(t / 2), 0, 0, math.exp(-t / 2))) == "hyperbolic"
    assert classify(Isometry(1, 1, 0, 1)) == "parabolic"


def test_rotation_about_origin_agrees():
    assert rotation_about_origin(1.1).close_to(rotation_about(0, 1.1))


def test_segment_frame():
    p, q = 0.2 + 0.3j, -0.4 + 0.1j
    f = segment_frame(p, q)
    assert abs(apply(f, 0) - p) < 1e-12
    assert abs(vertex_angle(p, apply(f, 0.5), q)) < 1e-12


def test_degenerate_areas():
    assert signed_triangle_area(0.3, 0.3, 0.1j) == 0
    assert signed_triangle_area(-0.5, 0, 0.5) == 0  # one geodesic


def test_angle_deficit_triangle():
    a, b, c = math.pi / 2, math.pi / 3, math.pi / 7
    p, q, r = triangle_with_angles(a, b, c)
    assert abs(vertex_angle(p, q, r)) == pytest.approx(a, abs=1e-12)
    assert abs(vertex_angle(q, r, p)) == pytest.approx(b, abs=1e-12)
    # pi minus the angle sum is pi/42
    assert abs(signed_triangle_area(p, q, r)) == pytest.approx(math.pi / 42, abs=1e-12)
    assert signed_triangle_area(p, q, r) == pytest.approx(-signed_triangle_area(q, p, r), abs=1e-15)


@settings(max_examples=200)
@given(points, points)
def test_closed_form_matches_angle_formula(a, b):
    assume(abs(a) > 1e-3 and abs(b) > 1e-3 and abs(a - b) > 1e-3)
    vec = float(areas_from_origin(np.array([a]), np.array([b]))[0])
    assert vec == pytest.approx(signed_triangle_area(0, a, b), abs=1e-9)
    assert vec == pytest.approx(area_from_origin_closed_form(a, b), abs=1e-12)


@settings(max_examples=200)
@given(points, points, points, st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_area_additivity(p, q, r, s1, s2):
    assume(abs(signed_triangle_area(p, q, r)) > 1e-3)
    # s inside the triangle: a point on a geodesic from p to a point of side qr
    f = segment_frame(q, r)
    m = apply(f, math.tanh(s1 * distance(q, r) / 2))
    g = segment_frame(p, m)
    s = apply(g, math.tanh(s2 * distance(p, m) / 2))
    total = signed_triangle_area(p, q, s) + signed_triangle_area(q, r, s) + signed_triangle_area(r, p, s)
    assert total == pytest.approx(signed_triangle_area(p, q, r), abs=1e-9)


@settings(max_examples=200)
@given(isometries, points, points, points)
def test_area_invariance(g, p, q, r):
    try:
        gp, gq, gr = (apply(g, z) for z in (p, q, r))
    except NumericalFailure:
        assume(False)
    assert signed_triangle_area(gp, gq, gr) == pytest.approx(signed_triangle_area(p, q, r), abs=1e-9)
    assert float(areas(np.array([gp]), np.array([gq]), np.array([gr]))[0]) == pytest.approx(
        signed_triangle_area(p, q, r), abs=1e-9)


@settings(max_examples=200)
@given(isometries, isometries, points)
def test_action_composes(g, h, p):
    try:
        lhs = apply(g @ h, p)
        rhs = apply(g, apply(h, p))
    except NumericalFailure:
        assume(False)
    assert abs(lhs - rhs) < 1e-9 * max(1, 1 / (1 - abs(lhs)))


@settings(max_examples=200)
@given(isometries, points, points)
def test_distance_invariance(g, p, q):
    try:
        gp, gq = apply(g, p), apply(g, q)
    except NumericalFailure:
        assume(False)
    assert distance(gp, gq) == pytest.approx(distance(p, q), abs=1e-8)


@given(points, points, points)
def test_triangle_inequality(p, q, r):
    assert distance(p, r) <= distance(p, q) + distance(q, r) + 1e-12


def test_regular_polygon_area():
    # regular octagon with interior angles pi/4: area 6pi - 8(pi/4) = 4pi
    n, alpha = 8, math.pi / 4
    rho = math.sqrt(math.cos(math.pi / n + alpha / 2) / math.cos(math.pi / n - alpha / 2))
    verts = [rho * cmath.exp(2j * math.pi * k / n) for k in range(n)]
    assert polygon_area(verts) == pytest.approx(4 * math.pi, abs=1e-9)
