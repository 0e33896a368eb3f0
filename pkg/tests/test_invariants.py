import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from relinv.errors import DegenerateConfiguration, FractionalPowerOfNegative, ParseError
from relinv.invariants import (
    InvariantVector,
    closed_form_sign,
    compile_expression,
    fundamental_invariants,
    generator_rank,
    invariant_vector,
    invariantized_jacobian_closed,
    invariantized_jacobian_direct,
    per_point_invariantized_multipliers,
    relative_invariant,
)
from relinv.moving_frame import frame, invariantize_config
from relinv.projective_core import PointConfig, apply_config, delta, jacobian_point, total_jacobian
from relinv.sampling import make_rng, random_config, random_pair

import frozen


def _sub(cfg, n):
    return PointConfig(cfg.pts[:n], exact=cfg.exact)


def test_frozen_exact_values(frozen_config):
    i1, i2 = fundamental_invariants(frozen_config)
    assert tuple(i1) == frozen.I1 and tuple(i2) == frozen.I2
    for n, expected in frozen.JINV.items():
        cfg = _sub(frozen_config, n)
        assert invariantized_jacobian_direct(cfg) == expected
        assert abs(invariantized_jacobian_closed(cfg)) == expected


def test_cross_section_values(exact_cross_section):
    assert invariantized_jacobian_direct(exact_cross_section) == 1
    assert invariantized_jacobian_closed(exact_cross_section) == 1
    d = [delta(exact_cross_section, *t) for t in ((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4))]
    assert d == [-1, 1, 1, -1]
    assert per_point_invariantized_multipliers(exact_cross_section) == [1, 1, 1, 1]
    vec = invariant_vector(exact_cross_section)
    assert vec.i1 == () and vec.i2 == () and vec.jinv == 1


def test_vector_lengths_and_generators():
    cfg = random_config(make_rng(50), 7)
    vec = invariant_vector(cfg)
    assert len(vec.i1) == len(vec.i2) == 3
    assert len(vec.generators()) == 2 * (7 - 4) + 1
    assert InvariantVector.from_text(vec.to_text()) == vec
    with pytest.raises(ValueError):
        InvariantVector(5, (1.0,), (), 1.0)
    with pytest.raises(ParseError):
        InvariantVector.from_text("n: 5\njinv: 2\n")


def test_fundamental_invariance():
    rng = make_rng(51)
    for _ in range(100):
        g, cfg = random_pair(rng, 6)
        a1, a2 = fundamental_invariants(cfg)
        b1, b2 = fundamental_invariants(apply_config(g, cfg))
        for a, b in zip(a1 + a2, b1 + b2):
            assert b == pytest.approx(a, rel=1e-8)


def test_relation_to_normalized_coordinates():
    rng = make_rng(52)
    for _ in range(20):
        cfg = random_config(rng, 6)
        moved = invariantize_config(cfg)
        i1, i2 = fundamental_invariants(cfg)
        for k, i in enumerate(range(4, 6)):
            x, y = moved.pts[i]
            assert 1 / x == pytest.approx(1 + i1[k], rel=1e-9)
            assert x / y == pytest.approx(-i2[k], rel=1e-9)
            assert y == pytest.approx(-(1 / (1 + i1[k])) / i2[k], rel=1e-9)


def test_exchanging_points_permutes_invariants():
    cfg = random_config(make_rng(53), 6)
    i1, i2 = fundamental_invariants(cfg)
    j1, j2 = fundamental_invariants(cfg.permuted([0, 1, 2, 3, 5, 4]))
    assert j1 == pytest.approx(i1[::-1], rel=1e-12) and j2 == pytest.approx(i2[::-1], rel=1e-12)


def test_degenerate_rejected():
    bad = PointConfig([(0, -1), (1, 1), (1, 0), (0, 0), (0, 3)])
    with pytest.raises(DegenerateConfiguration):
        fundamental_invariants(bad)


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_closed_form_matches_direct(n):
    rng = make_rng(54 + n)
    for _ in range(50):
        cfg = random_config(rng, n)
        direct = invariantized_jacobian_direct(cfg)
        closed = invariantized_jacobian_closed(cfg)
        assert abs(closed) == pytest.approx(abs(direct), rel=1e-8)
        assert math.copysign(1, direct) == closed_form_sign(n) * math.copysign(1, closed)


def test_n4_closed_form_is_inverse_delta_product():
    cfg = random_config(make_rng(58), 4)
    p = delta(cfg, 1, 2, 3) * delta(cfg, 1, 2, 4) * delta(cfg, 1, 3, 4) * delta(cfg, 2, 3, 4)
    assert abs(invariantized_jacobian_direct(cfg)) == pytest.approx(1 / abs(p), rel=1e-10)


def test_wrong_exponent_is_not_a_relative_invariant():
    rng = make_rng(59)
    g, cfg = random_pair(rng, 5)
    moved = apply_config(g, cfg)
    ratio = invariantized_jacobian_closed(moved) * total_jacobian(g, cfg) / invariantized_jacobian_closed(cfg)
    assert abs(ratio) == pytest.approx(1, rel=1e-9)
    wrong = invariantized_jacobian_closed(moved, exponent=9) * total_jacobian(g, cfg) \
        / invariantized_jacobian_closed(cfg, exponent=9)
    assert abs(abs(wrong) - 1) > 1e-3


def test_sign_constant_along_orbit():
    rng = make_rng(60)
    cfg = random_config(rng, 5)
    signs = set()
    for _ in range(30):
        g, _ = random_pair(rng, 5)
        try:
            moved = apply_config(g, cfg)
            signs.add(math.copysign(1, invariantized_jacobian_direct(moved) / invariantized_jacobian_closed(moved)))
        except ArithmeticError:
            continue
    assert signs == {-1.0}


def test_per_point_multipliers():
    rng = make_rng(61)
    for _ in range(30):
        cfg = random_config(rng, 6)
        rho = frame(cfg)
        values = per_point_invariantized_multipliers(cfg)
        for value, p in zip(values, cfg.pts):
            assert abs(value) == pytest.approx(abs(jacobian_point(rho, p)), rel=1e-8)
        assert abs(math.prod(values)) == pytest.approx(abs(invariantized_jacobian_closed(cfg)), rel=1e-9)


def test_relative_invariant_examples():
    rng = make_rng(62)
    i1_5 = lambda i1, i2: i1[0]
    one = lambda i1, i2: 1.0
    for _ in range(50):
        g, cfg = random_pair(rng, 5)
        moved = apply_config(g, cfg)
        assert relative_invariant(0, i1_5, moved) == pytest.approx(relative_invariant(0, i1_5, cfg), rel=1e-8)
        assert relative_invariant(-1, one, cfg) == pytest.approx(invariantized_jacobian_direct(cfg), rel=1e-14)
        ratio = relative_invariant(2, one, moved) / relative_invariant(2, one, cfg)
        assert ratio == pytest.approx(total_jacobian(g, cfg) ** 2, rel=1e-7)


def test_fractional_weight_guard():
    cfg = random_config(make_rng(63), 5)
    one = lambda i1, i2: 1.0
    jinv = invariantized_jacobian_direct(cfg)
    if jinv > 0:
        cfg = cfg.permuted([1, 0, 2, 3, 4])
    assert invariantized_jacobian_direct(cfg) < 0
    with pytest.raises(FractionalPowerOfNegative):
        relative_invariant(Fraction(1, 2), one, cfg)
    assert relative_invariant(Fraction(1, 2), one, cfg, jinv=4.0) == pytest.approx(0.5)


@pytest.mark.parametrize("n", [5, 6, 7])
def test_generators_have_full_rank(n):
    rng = make_rng(64 + n)
    for _ in range(5):
        rank, smallest = generator_rank(random_config(rng, n))
        assert rank == 2 * (n - 4) and smallest > 1e-6


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=50)
def test_compiled_expressions(a, b):
    f = compile_expression("I1_5 * 2 - (I2_5 + 1) ** 2 / 4")
    assert f((a,), (b,)) == pytest.approx(a * 2 - (b + 1) ** 2 / 4)


def test_expression_rejects_code():
    for text in ("__import__('os')", "I1_5.real", "I3_5", "1 +"):
        with pytest.raises(ParseError):
            compile_expression(text)((1.0,), (2.0,))
