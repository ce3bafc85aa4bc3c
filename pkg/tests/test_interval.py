import math
from decimal import Decimal
from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from horseshoe.errors import ConstructionError, DegenerateBox, DimMismatch
from horseshoe.interval import (
    Box,
    Interval,
    box_in_union,
    box_relate,
    cos,
    cos_turns,
    fmt_hi,
    fmt_lo,
    log,
    sin,
    sin_turns,
)

mpmath.mp.dps = 50

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def intervals(draw, lo=-1e6, hi=1e6):
    a = draw(st.floats(min_value=lo, max_value=hi, allow_nan=False))
    b = draw(st.floats(min_value=lo, max_value=hi, allow_nan=False))
    return Interval(min(a, b), max(a, b))


def points_in(iv: Interval, n: int):
    """Endpoints plus evenly spread interior points."""
    if iv.is_point():
        return [iv.lo]
    return [iv.lo, iv.hi] + [iv.lo + (iv.hi - iv.lo) * (k + 0.5) / n for k in range(n)]


# --- examples -------------------------------------------------------------


def test_add_exact_endpoints():
    # the exact image of [1,2]+[3,4] is [4,6]
    assert Interval(1, 2) + Interval(3, 4) == Interval(4, 6)


def test_mul_sign_cases():
    assert Interval(-1, 2) * Interval(3, 4) == Interval(-4, 8)


def test_clamp_saturates_both_ends():
    r = Interval(-0.5, 1.5).clamp(0, 1)
    assert r == Interval(0, 1)
    assert isinstance(r.lo, float) and isinstance(r.hi, float)


def test_clamp_rejects_reversed_bounds():
    with pytest.raises(ConstructionError):
        Interval(0, 1).clamp(1, 0)


def test_cos_full_period_is_exact():
    assert cos(Interval(0, 2 * math.pi)) == Interval(-1, 1)
    assert cos(Interval(0, 7)) == Interval(-1, 1)
    assert sin(Interval(-10, 10)) == Interval(-1, 1)


def test_sin_quarter_period():
    r = sin(Interval(0, math.pi / 2))
    assert r.lo <= 0 and r.hi >= 1 - 1e-16
    assert r.lo >= -math.ulp(0.0) and r.hi <= math.nextafter(1.0, 2)


def test_cos_pi_third_to_half_against_mpmath():
    a, b = math.pi / 3, math.pi / 2
    r = cos(Interval(a, b))
    lo, hi = mpmath.cos(mpmath.mpf(b)), mpmath.cos(mpmath.mpf(a))
    assert mpmath.mpf(r.lo) <= lo and mpmath.mpf(r.hi) >= hi
    assert hi - mpmath.mpf(r.hi) > -1e-15 and mpmath.mpf(r.lo) - lo > -1e-15


def test_construction_rejects_nan_inf_and_reversed():
    for bad in [(math.nan, 1.0), (0.0, math.inf), (-math.inf, 0.0)]:
        with pytest.raises(ConstructionError):
            Interval(*bad)
    with pytest.raises(ConstructionError):
        Interval(2.0, 1.0)


def test_division_by_scalar_is_exact_when_possible():
    assert Interval(3.0) / 3 == Interval(1.0)
    r = Interval(1.0) / 3
    assert Fraction(r.lo) < Fraction(1, 3) < Fraction(r.hi)
    with pytest.raises(ZeroDivisionError):
        Interval(1.0) / 0


def test_even_power_of_straddling_interval():
    assert Interval(-2, 3) ** 2 == Interval(0, 9)
    assert Interval(-2, -1) ** 3 == Interval(-8, -1)
    assert abs(Interval(-2, 1)) == Interval(0, 2)


def test_enclosing_decimal_is_tight():
    r = Interval.enclosing("0.1")
    assert Fraction(r.lo) < Fraction(1, 10) < Fraction(r.hi)
    assert r.hi == math.nextafter(r.lo, 1)
    assert Interval.enclosing("0.5") == Interval(0.5)


def test_log_against_mpmath():
    r = log(2)
    assert mpmath.mpf(r.lo) <= mpmath.log(2) <= mpmath.mpf(r.hi)
    assert r.width < 1e-15


def test_turn_trig_exact_quarters():
    assert sin_turns(Interval(0.25)) == Interval(1.0)
    assert cos_turns(Interval(0.5)) == Interval(-1.0)
    assert sin_turns(Interval(0.0)) == Interval(0.0)


def test_bisect_widest_axis():
    a, b = Box.from_bounds([0, 0], [1, 4]).bisect()
    assert a == Box.from_bounds([0, 0], [1, 2]) and b == Box.from_bounds([0, 2], [1, 4])


def test_bisect_given_axis():
    a, b = Box.from_bounds([0], [1]).bisect(0)
    assert a == Box.from_bounds([0], [0.5]) and b == Box.from_bounds([0.5], [1])


def test_bisect_tie_breaks_on_lowest_axis():
    a, _ = Box.from_bounds([0, 0], [1, 1]).bisect()
    assert a == Box.from_bounds([0, 0], [0.5, 1])


def test_bisect_point_box_is_degenerate():
    with pytest.raises(DegenerateBox):
        Box.point([2.0]).bisect()


def test_box_relations():
    unit = Box.from_bounds([0, 0], [1, 1])
    assert unit.contains(Box.from_bounds([0.2, 0], [0.3, 1]))
    assert not unit.intersects(Box.from_bounds([2, 0], [3, 1]))
    assert Box.from_bounds([0, 0], [1, 4]).width == 4
    assert Box.from_bounds([0, 0], [1, 4]).midpoint == (0.5, 2.0)
    assert box_relate(unit, Box.from_bounds([2, 0], [3, 1])) == "disjoint"
    assert box_relate(unit, Box.from_bounds([1, 0], [2, 1])) == "touch"
    assert box_relate(unit, unit) == "equal"
    with pytest.raises(DimMismatch):
        unit.contains(Box.from_bounds([0], [1]))


def test_box_in_union_exact():
    pieces = [Box.from_bounds([0, 0], [0.5, 1]), Box.from_bounds([0.5, 0], [1, 1])]
    assert box_in_union(Box.from_bounds([0.2, 0.2], [0.8, 0.8]), pieces)
    assert not box_in_union(Box.from_bounds([0.2, 0.2], [1.2, 0.8]), pieces)


def test_decimal_formatting_is_outward():
    for x in [0.1, -0.1, 1 / 3, 2.0**-1074, 1e300, 0.0, 123456.789]:
        lo, hi = fmt_lo(x), fmt_hi(x)
        assert Decimal(lo) <= Decimal(x) <= Decimal(hi)
    assert fmt_lo(0.0) == "0" and fmt_hi(0.5) == "5.0000000000000000e-1"


# --- properties -----------------------------------------------------------


def _exact_binary(op, x, y):
    fx, fy = Fraction(x), Fraction(y)
    return {"add": fx + fy, "sub": fx - fy, "mul": fx * fy}[op]


@settings(max_examples=150, deadline=None)
@given(a=intervals(), b=intervals(), op=st.sampled_from(["add", "sub", "mul"]))
def test_binary_ops_are_sound(a, b, op):
    r = {"add": a + b, "sub": a - b, "mul": a * b}[op]
    lo, hi = Fraction(r.lo), Fraction(r.hi)
    for x in points_in(a, 30):
        for y in points_in(b, 30):
            assert lo <= _exact_binary(op, x, y) <= hi


@settings(max_examples=150, deadline=None)
@given(a=intervals(), s=finite, n=st.integers(0, 5))
def test_scale_and_power_are_sound(a, s, n):
    r = a * s
    p = a ** n if max(abs(a.lo), abs(a.hi)) < 1e3 else None
    for x in points_in(a, 1000):
        assert Fraction(r.lo) <= Fraction(x) * Fraction(s) <= Fraction(r.hi)
        if p is not None:
            assert Fraction(p.lo) <= Fraction(x) ** n <= Fraction(p.hi)


@settings(max_examples=150, deadline=None)
@given(a=intervals(-50, 50), fn=st.sampled_from(["sin", "cos"]))
def test_trig_is_sound(a, fn):
    r = sin(a) if fn == "sin" else cos(a)
    f = mpmath.sin if fn == "sin" else mpmath.cos
    for x in points_in(a, 200):
        v = f(mpmath.mpf(x))
        assert mpmath.mpf(r.lo) <= v <= mpmath.mpf(r.hi)


@settings(max_examples=100, deadline=None)
@given(a=intervals(-4, 4), fn=st.sampled_from(["sin", "cos"]))
def test_turn_trig_is_sound(a, fn):
    r = sin_turns(a) if fn == "sin" else cos_turns(a)
    f = mpmath.sinpi if fn == "sin" else mpmath.cospi
    for x in points_in(a, 200):
        v = f(2 * mpmath.mpf(x))
        assert mpmath.mpf(r.lo) <= v <= mpmath.mpf(r.hi)


@settings(max_examples=100, deadline=None)
@given(a=intervals(-20, 20), lo=st.floats(-5, 5), w=st.floats(0, 5))
def test_clamp_is_sound(a, lo, w):
    r = a.clamp(lo, lo + w)
    for x in points_in(a, 100):
        assert r.lo <= max(lo, min(x, lo + w)) <= r.hi


@settings(max_examples=100, deadline=None)
@given(a=intervals(-20, 20), t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_unary_ops_are_monotone(a, t1, t2):
    u, v = sorted((t1, t2))
    sub_lo = a.lo + (a.hi - a.lo) * u
    sub_hi = a.lo + (a.hi - a.lo) * v
    assume(a.lo <= sub_lo <= sub_hi <= a.hi)
    inner = Interval(sub_lo, sub_hi)
    for f in (sin, cos, lambda z: z**2, lambda z: z**3, abs, lambda z: -z, lambda z: z.clamp(-1, 1)):
        assert f(a).contains(f(inner))


@settings(max_examples=100, deadline=None)
@given(st.lists(intervals(-100, 100), min_size=1, max_size=4), st.data())
def test_bisection_partitions(comps, data):
    b = Box(comps)
    assume(b.width > 0)
    axis = data.draw(st.sampled_from([i for i, c in enumerate(comps) if c.width > 0]))
    left, right = b.bisect(axis)
    assert left.hull(right) == b
    assert left[axis].hi == right[axis].lo
    for i in range(b.dims):
        if i != axis:
            assert left[i] == b[i] == right[i]
    assert left[axis].width <= b[axis].width and right[axis].width <= b[axis].width
    assert abs(left[axis].width - b[axis].width / 2) <= 2 * math.ulp(b[axis].width)
