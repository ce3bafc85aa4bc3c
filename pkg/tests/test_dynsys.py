import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horseshoe.dynsys import (
    THIRD_UP,
    TWO_THIRDS_DOWN,
    AffineHorseshoe,
    AffineMap,
    ExpressionMap,
    ResidualMap,
    TrigExample,
    clamp_extend,
    compose,
    eval_box,
    eval_point,
    map_from_dict,
)
from horseshoe.errors import ConfigError, ConstructionError, DimMismatch, DomainError, StripStraddle
from horseshoe.interval import Box

from .oracles import apply_branch

UNIT = Box.from_bounds([0, 0], [1, 1])
TRIG = TrigExample(0.6, 0.5, 4, 3, 1)
HS = AffineHorseshoe.canonical()


def test_strip_bounds_bracket_thirds():
    assert Fraction(THIRD_UP) >= Fraction(1, 3) > Fraction(math.nextafter(THIRD_UP, 0))
    assert Fraction(TWO_THIRDS_DOWN) <= Fraction(2, 3) < Fraction(math.nextafter(TWO_THIRDS_DOWN, 1))


def test_trig_point_example():
    f, g = eval_point(TRIG, (0.0, 0.5))
    assert f == pytest.approx(1.1, abs=1e-15)
    assert g == pytest.approx(0.5, abs=1e-15)


def test_trig_g_component_over_unit_square():
    g = eval_box(TRIG, UNIT)[1]
    assert g.lo <= 0.0 and g.hi >= 1.0
    assert g.lo >= -1e-15 and g.hi <= 1 + 1e-15


def test_trig_constraints_are_validated():
    with pytest.raises(ConstructionError, match="d <= 1/2 < c"):
        TrigExample(0.4, 0.5, 4, 3, 1)
    with pytest.raises(ConstructionError, match="k >= l"):
        TrigExample(0.6, 0.5, 3, 3, 1)
    with pytest.raises(ConstructionError, match="l > 1/d"):
        TrigExample(0.6, 0.5, 4, 2, 1)
    TrigExample(0.4, 0.5, 4, 3, 1, validate=False)


def test_horseshoe_examples():
    assert eval_point(HS, (0.0, 0.0)) == (0.0, 0.0)
    img = eval_box(HS, HS.strip_box(0))
    assert img[0].lo == 0 and img[0].contains(type(img[0])(0, 1 / 3))
    assert img[0].hi - 1 / 3 < 1e-15
    assert img[1].lo == 0 and img[1].hi >= 1 and img[1].hi - 1 < 1e-15
    with pytest.raises(DomainError):
        eval_point(HS, (0.5, 0.5))
    with pytest.raises(StripStraddle):
        eval_box(HS, UNIT)


def test_horseshoe_permissive_uses_nearest_branch():
    loose = HS.with_strict(False)
    assert loose.eval_point((0.5, 0.4)) == HS.eval_point((0.5, THIRD_UP))[:1] + (3 * (0.4 - 0),)
    b = loose.eval_box(UNIT)
    for _ in range(200):
        p = (random.random(), random.random())
        q = loose.eval_point(p)
        assert b.contains_point(q)


def test_identity_composition():
    ident = compose([AffineMap.identity(2), AffineMap.identity(2)])
    assert eval_point(ident, (0.3, -7.0)) == (0.3, -7.0)
    b = Box.from_bounds([0.1, -3], [0.7, 2])
    assert eval_box(ident, b) == b


def test_single_stage_composition_matches_map():
    rng = random.Random(1)
    c = compose([TRIG])
    for _ in range(100):
        p = (rng.random(), rng.random())
        assert c.eval_point(p) == TRIG.eval_point(p)


def test_composition_with_affine_inverse():
    a = AffineMap([[2.0, 1.0], [1.0, 1.0]], [0.5, -0.25])
    inv = AffineMap([[1.0, -1.0], [-1.0, 2.0]], [-0.75, 1.0])
    rng = random.Random(2)
    loop = compose([a, inv])
    for _ in range(200):
        p = (rng.random(), rng.random())
        q = loop.eval_point(p)
        assert all(abs(x - y) <= 8 * math.ulp(4.0) for x, y in zip(p, q))


def test_branch_composition_matches_hand_evaluation():
    loose = HS.with_strict(False)
    c = compose([loose, loose])
    p = (Fraction(1, 5), Fraction(1, 4))
    mid = apply_branch(0, p)
    assert mid[1] >= Fraction(2, 3)
    expected = apply_branch(1, mid)
    got = c.eval_point(tuple(float(v) for v in p))
    assert all(abs(float(e) - g) < 1e-15 for e, g in zip(expected, got))


def test_composition_dims_must_chain():
    with pytest.raises(DimMismatch):
        compose([AffineMap.identity(2), AffineMap.identity(3)])


def test_clamp_extend_examples():
    c = clamp_extend(AffineMap.identity(2), UNIT, UNIT)
    assert c.eval_point((2.0, -1.0)) == (1.0, 0.0)
    t = clamp_extend(TRIG, UNIT, UNIT)
    f, g = t.eval_point((0.0, 0.5))
    assert f == 1.0 and g == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 3), st.floats(-3, 3), st.floats(0, 3))
def test_clamped_box_stays_in_target(x, w, y, h):
    target = Box.from_bounds([0.2, 0.1], [0.9, 0.6])
    for m in (TRIG, HS.with_strict(False), AffineMap([[3, -1], [2, 5]], [1, 1])):
        img = clamp_extend(m, UNIT, target).eval_box(Box.from_bounds([x, y], [x + w, y + h]))
        assert target.contains(img)


def test_clamped_agrees_where_raw_image_is_inside():
    rng = random.Random(3)
    t = clamp_extend(TRIG, UNIT, UNIT)
    hits = 0
    for _ in range(500):
        p = (rng.random(), rng.random())
        raw = TRIG.eval_point(p)
        if all(0 <= v <= 1 for v in raw):
            hits += 1
            assert t.eval_point(p) == raw
    assert hits > 50


def _sound(m, b, rng, n=20):
    img = m.eval_box(b)
    for _ in range(n):
        p = tuple(c.lo + (c.hi - c.lo) * rng.random() for c in b)
        q = m.eval_point(p)
        assert img.contains_point(q), (m, b, p, q, img)


def _random_box(rng, lo=0.0, hi=1.0):
    comps = []
    for _ in range(2):
        a, c = sorted((rng.uniform(lo, hi), rng.uniform(lo, hi)))
        comps.append((a, c))
    return Box.from_bounds([a for a, _ in comps], [c for _, c in comps])


def test_enclosure_soundness_for_builtin_maps():
    rng = random.Random(4)
    expr = ExpressionMap(["x*y - sin(3*x)", "clamp(x + y, 0, 1) + y^2"], ["x", "y"])
    maps = [TRIG, HS.with_strict(False), AffineMap([[1, 2], [-3, 0.5]], [0.1, 0.2]), expr,
            compose([TRIG, TRIG]), clamp_extend(TRIG, UNIT, UNIT), ResidualMap(TRIG)]
    for m in maps:
        for _ in range(1000 // len(maps) + 1):
            _sound(m, _random_box(rng), rng, n=5)


def test_strict_horseshoe_soundness_on_strips():
    rng = random.Random(5)
    for i in (0, 1):
        s = HS.strip_box(i)
        for _ in range(200):
            a, b = sorted((rng.uniform(s[1].lo, s[1].hi), rng.uniform(s[1].lo, s[1].hi)))
            x0, x1 = sorted((rng.random(), rng.random()))
            _sound(HS, Box.from_bounds([x0, a], [x1, b]), rng, n=5)


def test_map_from_dict():
    m = map_from_dict({"kind": "trig_example", "c": 0.6, "d": 0.5, "k": 4, "l": 3, "m": 1})
    assert m.eval_point((0.0, 0.5)) == TRIG.eval_point((0.0, 0.5))
    with pytest.raises(ConfigError) as info:
        map_from_dict({"kind": "trig_example", "c": 0.6})
    assert info.value.key == "map.d"
    with pytest.raises(ConfigError) as info:
        map_from_dict({"kind": "nope"})
    assert info.value.key == "map.kind"
    with pytest.raises(ConfigError):
        map_from_dict({"kind": "expression", "components": ["x +"], "variables": ["x"]})
