import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ball, realization
from oracles import triangle_group_mp, word_ball_count_mp
from twistedhall import ValidationError
from twistedhall.groups import (
    OUT, Presentation, cayley_ball, free_reduce, fundamental_class_area, signature_group_realization,
    surface_group_realization, symplectic_class, triangle_rotation_group,
)
from twistedhall.hypgeom import Isometry, classify
from twistedhall.signatures import Signature, phi


def test_presentation():
    p = Presentation(2, (3,))
    assert p.generator_names == ["A1", "A2", "B1", "B2", "C1"]
    assert p.long_relator() == (1, 3, -1, -3, 2, 4, -2, -4, 5)
    assert p.relators()[1] == (5, 5, 5)
    assert p.parse_word("A1.B2^-1.C1^2") == (1, -4, 5, 5)
    assert p.format_word((1, -4)) == "A1.B2^-1"
    assert p.parse_word("e") == () and p.format_word(()) == "e"
    assert p.parse_word("A1.A1^-1") == ()
    with pytest.raises(ValidationError):
        p.parse_word("D1")


def test_free_reduce():
    assert free_reduce((1, 2, -2, -1, 3)) == (3,)


def test_surface_group():
    real = surface_group_realization(2)
    assert real.residual < 1e-9
    assert all(classify(Isometry(m)) == "hyperbolic" for m in real.generators)
    assert real.diagnostics["polygon_area"] == pytest.approx(4 * math.pi, abs=1e-6)
    assert abs(fundamental_class_area(real)) == pytest.approx(4 * math.pi, abs=1e-9)
    with pytest.raises(ValidationError):
        surface_group_realization(1)


def test_triangle_group():
    real = triangle_rotation_group(2, 3, 7)
    assert real.residual < 1e-9
    for m, v in zip(real.generators, (2, 3, 7)):
        assert abs(abs(np.trace(m)) - 2 * abs(math.cos(math.pi / v))) < 1e-9
    assert abs(fundamental_class_area(real)) == pytest.approx(2 * math.pi / 42, abs=1e-9)
    with pytest.raises(ValidationError):
        triangle_rotation_group(2, 3, 6)


def test_polygon_solver_2233():
    real = realization("0;2,2,3,3")
    assert real.residual < 1e-9
    for m, v in zip(real.generators, (2, 2, 3, 3)):
        assert classify(Isometry(m)) == "elliptic"
        assert abs(abs(np.trace(m)) - 2 * abs(math.cos(math.pi / v))) < 1e-9
    assert abs(fundamental_class_area(real)) == pytest.approx(2 * math.pi / 3, abs=1e-9)


@pytest.mark.parametrize("text", ["1;2", "0;2,2,2,3", "2;2", "1;3,3"])
def test_polygon_solver_other_signatures(text):
    sig = Signature.parse(text)
    real = signature_group_realization(sig)
    assert real.residual < 1e-9
    assert abs(fundamental_class_area(real)) == pytest.approx(2 * math.pi * float(phi(sig)), abs=1e-8)


def test_solver_matches_triangle_group_up_to_conjugacy():
    a = cayley_ball(signature_group_realization(Signature.parse("0;2,3,7")), 3)
    b = ball("0;2,3,7", 3)
    ta = np.sort(np.abs(np.trace(a.matrices, axis1=1, axis2=2)))
    tb = np.sort(np.abs(np.trace(b.matrices, axis1=1, axis2=2)))
    assert len(a) == len(b)
    assert np.abs(ta - tb).max() < 1e-8


def test_surface_solver_consistency():
    real = signature_group_realization(Signature.parse("2;"))
    assert real.residual < 1e-9 and surface_group_realization(2).residual < 1e-9


def test_symplectic_class():
    assert symplectic_class(realization("2;")) == 4
    assert symplectic_class(realization("1;")) == 2
    assert symplectic_class(realization("0;2,3,7")) == 0


def test_ball_sizes():
    assert len(ball("2;", 1)) == 9
    assert len(ball("1;", 2)) == 13
    assert [len(ball("1;", r)) for r in range(5)] == [2 * r * r + 2 * r + 1 for r in range(5)]


def test_triangle_ball_counts_against_high_precision_oracle():
    gens = triangle_group_mp(2, 3, 7)
    for R in (2, 3):
        assert len(ball("0;2,3,7", R)) == word_ball_count_mp(gens, R)


def test_generator_set_semantics():
    assert realization("0;2,3,7").symmetric_generators() == [1, 2, -2, 3, -3]
    assert realization("0;2,3,7").symmetric_generators(True) == [1, -1, 2, -2, 3, -3]
    assert len(realization("2;").symmetric_generators()) == 8


@pytest.mark.parametrize("text,R", [("2;", 3), ("0;2,3,7", 5), ("0;2,2,3,3", 3), ("1;", 4)])
def test_ball_structure(text, R):
    b = ball(text, R)
    n = len(b)
    assert b.words[0] == () and b.lengths[0] == 0
    assert np.array_equal(b.lengths, [len(w) for w in b.words])
    assert np.all(np.diff(b.lengths) >= 0)  # BFS order
    # inverse closure at equal length
    assert np.all(b.inverse >= 0) and np.array_equal(b.lengths[b.inverse], b.lengths)
    assert np.array_equal(b.inverse[b.inverse], np.arange(n))
    # identity and inverses
    xs = np.arange(n)
    assert np.array_equal(b.multiply_many(0, xs), xs)
    assert np.array_equal(b.multiply_many(xs, 0), xs)
    assert np.all(b.multiply_many(xs, b.inverse) == 0)
    # each element's word evaluates to it
    for x in range(0, n, max(1, n // 50)):
        assert b.element(b.words[x]) == x
    assert b.audit() > 10 * b.quantization


@pytest.mark.parametrize("text,R", [("2;", 3), ("0;2,3,7", 5), ("0;2,2,3,3", 3)])
def test_associativity_exhaustive(text, R):
    b = ball(text, R)
    small = b.within(1 if len(b.within(1)) > 6 else 2)
    for x in small:
        xy = b.multiply_many(x, small)
        for y, xy_ in zip(small, xy):
            lhs = b.multiply_many(np.full(len(small), xy_), small)
            yz = b.multiply_many(np.full(len(small), y), small)
            rhs = b.multiply_many(np.full(len(small), x), yz)
            ok = (lhs != OUT) & (yz != OUT) & (rhs != OUT) & (xy_ != OUT)
            assert np.array_equal(lhs[ok], rhs[ok])


@pytest.mark.parametrize("text,R", [("2;", 4), ("0;2,2,3,3", 4), ("1;", 6)])
def test_abelianization_is_well_defined(text, R):
    b = ball(text, R)
    pres = b.realization.presentation
    letters = b.letters
    # along every in-ball edge x -> x s the abelianization moves by the image of s
    for j, k in enumerate(letters):
        ok = b.right[:, j] != OUT
        delta = b.abelian[b.right[ok, j]] - b.abelian[ok]
        assert np.all(delta == pres.abelian_image(k))


def test_abelianization_examples():
    b = ball("2;", 4)
    pres = b.realization.presentation
    assert list(b.abelianization(b.element((1,)))) == [1, 0, 0, 0]
    assert not b.abelianization(b.element((1, 3, -1, -3))).any()
    c = ball("0;2,2,3,3", 4)
    assert c.abelian.shape[1] == 0
    assert pres.abelian_image(-3).tolist() == [0, 0, -1, 0]


@pytest.mark.parametrize("text,R", [("2;", 3), ("0;2,3,7", 5), ("0;2,2,3,3", 3)])
def test_relator_closure(text, R):
    b = ball(text, R)
    for rel in b.realization.presentation.relators():
        for start in b.within(R // 2):
            x = start
            for k in rel:
                x = b.multiply(x, b.element((k,))) if x != OUT else OUT
            if x != OUT:
                assert x == start


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from([1, -1, 2, -2, 3, -3, 4, -4]), max_size=8))
def test_word_lookup_matches_matrix_product(word):
    b = ball("2;", 3)
    x = b.element(word)
    w = free_reduce(word)
    if len(w) <= 3:
        assert x != OUT
        assert np.allclose(b.matrices[x], b.realization.word_matrix(word), atol=1e-9) or np.allclose(
            b.matrices[x], -b.realization.word_matrix(word), atol=1e-9)
