from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horseshoe.covering import check_boundary_stretching
from horseshoe.dynsys import AffineHorseshoe, AffineMap
from horseshoe.errors import AlphabetMismatch, EmptyWord, NotDisjoint, Status
from horseshoe.geometry import OrientedRect
from horseshoe.interval import Box
from horseshoe.symbolic import (
    SymbolWord,
    chaos_report,
    enumerate_periodic_words,
    find_periodic_orbit,
    seq_distance,
    shift,
    verify_itinerary,
)

from .oracles import apply_branch, horseshoe_orbit, in_box, necklace_count

HS = AffineHorseshoe.canonical()
SQ = OrientedRect(Box.from_bounds([0, 0], [1, 1]), 1)
K = [HS.strip_box(0), HS.strip_box(1)]


def W(text, m=2):
    return SymbolWord.parse(text, m)


# --- words ----------------------------------------------------------------


def test_shift_examples():
    assert shift(W("011")) == W("110")
    assert shift(W("0")) == W("0")
    w = W("01101")
    s = w
    for _ in range(w.period):
        s = shift(s)
    assert s == w


def test_shift_of_finite_window_moves_origin():
    w = SymbolWord(2, (0, 1, 1), periodic=False, origin=1)
    assert [w.at(i) for i in (-1, 0, 1, 2)] == [0, 1, 1, None]
    assert [shift(w).at(i) for i in (-2, -1, 0, 1)] == [0, 1, 1, None]


def test_word_validation():
    with pytest.raises(EmptyWord):
        W("")
    with pytest.raises(AlphabetMismatch):
        W("012")
    assert str(W("10,11,3", m=12)) == "10,11,3"


def test_distance_identical_words():
    d = seq_distance(W("0110"), W("0110"), 10)
    assert d.lo == 0 and d.hi <= 2 / 2**11 * 1.0000001


def test_distance_all_zeros_vs_all_ones():
    d = seq_distance(W("0"), W("1"), 20)
    assert d.lo <= 1.5 <= d.hi and d.width < 1e-5


def test_distance_single_difference():
    a = SymbolWord(2, (1,) + (0,) * 40, periodic=False, origin=20)
    b = SymbolWord(2, (1,) + (0,) * 40, periodic=False, origin=20)
    assert seq_distance(a, b, 20).lo == 0
    # periodic words of period 64 that differ only at index 0 within the horizon
    x = SymbolWord(2, (1,) + (0,) * 63)
    y = SymbolWord(2, (0,) * 64)
    d = seq_distance(x, y, 30)
    assert Fraction(d.lo) <= Fraction(1, 2) <= Fraction(d.hi) and d.width < 1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=6), st.lists(st.integers(0, 2), min_size=1, max_size=6))
def test_distance_is_symmetric_and_encloses_exact_limit(a, b):
    s1, s2 = SymbolWord(3, tuple(a)), SymbolWord(3, tuple(b))
    d12, d21 = seq_distance(s1, s2, 12), seq_distance(s2, s1, 12)
    assert d12 == d21
    exact = sum(
        Fraction(abs(s1.at(i) - s2.at(i)), 3 ** (abs(i) + 1)) for i in range(-60, 61)
    )
    assert Fraction(d12.lo) <= exact <= Fraction(d12.hi) + Fraction(1, 3**60)


def test_enumerate_examples():
    assert [str(w) for w in enumerate_periodic_words(2, 2)] == ["00", "01", "10", "11"]
    assert [str(w) for w in enumerate_periodic_words(2, 2, up_to_rotation=True)] == ["00", "01", "11"]
    assert [str(w) for w in enumerate_periodic_words(3, 1)] == ["0", "1", "2"]


@pytest.mark.parametrize("m,k", [(2, 1), (2, 4), (2, 6), (3, 3), (3, 4), (4, 2)])
def test_necklace_counts_match_burnside(m, k):
    assert len(enumerate_periodic_words(m, k, up_to_rotation=True)) == necklace_count(m, k)
    assert len(enumerate_periodic_words(m, k)) == m**k


# --- orbits ---------------------------------------------------------------


@pytest.mark.parametrize("word", ["0", "1", "01", "001", "0111"])
def test_orbits_against_affine_oracle(word):
    rec = find_periodic_orbit(HS, K, W(word), tol=1e-10)
    assert rec.certified
    exact = horseshoe_orbit(tuple(int(c) for c in word))
    assert len(rec.enclosures) == len(word)
    for box, p in zip(rec.enclosures, exact):
        assert in_box(box, p)
        assert box.width < 1e-8


def test_orbit_two_cycle_solves_affine_system():
    rec = find_periodic_orbit(HS, K, W("01"))
    p, q = horseshoe_orbit((0, 1))
    assert apply_branch(1, apply_branch(0, p)) == p
    assert in_box(rec.enclosures[0], p) and in_box(rec.enclosures[1], q)


def test_orbit_alphabet_mismatch():
    with pytest.raises(AlphabetMismatch):
        find_periodic_orbit(HS, K, W("012", m=3))


def test_chaos_needs_two_sets():
    with pytest.raises(AlphabetMismatch):
        chaos_report(HS, SQ, K[:1], 2)


def test_chaos_rejects_overlapping_sets():
    with pytest.raises(NotDisjoint):
        chaos_report(HS, SQ, [Box.from_bounds([0, 0], [1, 0.5]), Box.from_bounds([0, 0.4], [1, 1])], 2)


def test_chaos_report_small():
    rep = chaos_report(HS, SQ, K, 4)
    assert rep.status is Status.CERTIFIED
    assert rep.counts == {1: 2, 2: 4, 3: 8, 4: 16}
    assert rep.entropy_bound.lo <= 0.6931471805599453 <= rep.entropy_bound.hi
    assert all(c.certified for c in rep.prerequisites)


# --- itineraries ----------------------------------------------------------


def test_itinerary_from_certified_two_cycle():
    rec = find_periodic_orbit(HS, K, W("01"))
    res = verify_itinerary(HS, rec.enclosures[0], W("01"), K, 12)
    assert res.verdict == "contained"


def test_itinerary_escape_step_matches_direct_iteration():
    # (0.5, 0.5) is not in S0, so the first check already fails
    res = verify_itinerary(HS.with_strict(False), (0.5, 0.5), W("0"), K, 5)
    assert res.verdict == "escaped" and res.step == 0
    # (0, 0.1) -> (0, 0.3) -> (0, 0.9) which leaves S0 at step 2
    p = (Fraction(0), Fraction(1, 10))
    step = 0
    while p[1] <= Fraction(1, 3):
        p = apply_branch(0, p)
        step += 1
    res = verify_itinerary(HS.with_strict(False), (0.0, 0.1), W("0"), K, 5)
    assert res.verdict == "escaped" and res.step == step == 2


def test_itinerary_identity_stays_contained():
    res = verify_itinerary(AffineMap.identity(2), (0.2, 0.1), W("0"), K, 50)
    assert res.verdict == "contained"
    assert all(b == res.enclosures[0] for b in res.enclosures)


def test_rotated_enclosures_follow_the_shift():
    rep = chaos_report(HS, SQ, K, 3)
    for text, rec in rep.records.items():
        nxt = rep.records[str(shift(rec.word))]
        assert rec.enclosures[1 % rec.word.period].intersects(nxt.enclosures[0])
