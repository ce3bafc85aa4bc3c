import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horseshoe.cutting import (
    GridSpace,
    cut_function,
    cuts,
    distance_field,
    format_grid,
    intersect_cutting_sets,
    load_grid,
    parse_grid,
    path_near_continuum,
    random_instance,
    reach_mu,
    side_of,
)
from horseshoe.errors import ConstructionError, EmptySet, PreconditionFailed, SetsIntersect

from .oracles import grid_distance, grid_reachable

FIXTURES = __import__("pathlib").Path(__file__).resolve().parent.parent / "fixtures"


def walls():
    return load_grid(FIXTURES / "walls.grid")


def column(x, j):
    m = np.zeros(x.shape, bool)
    m[:, j] = True
    return x.set(m & x.active)


def is_path(x, path, allowed):
    for cell in path:
        assert x.active[cell] and allowed[cell]
    for p, q in zip(path, path[1:]):
        assert sum(abs(u - v) for u, v in zip(p, q)) == 1


# --- fixtures -------------------------------------------------------------


def test_fixture_round_trip():
    x, sets = walls()
    assert x.shape == (8, 8)
    assert sets["A"] == column(x, 0) and sets["C"] == column(x, 3) and sets["B"] == column(x, 7)
    y, again = parse_grid(format_grid(x, sets))
    assert (y.active == x.active).all() and all(again[k] == sets[k] for k in sets)


def test_fixture_errors():
    with pytest.raises(ConstructionError):
        parse_grid("A..\n")
    with pytest.raises(ConstructionError):
        parse_grid("dims: 2 x 2\nA.\n.")
    with pytest.raises(ConstructionError):
        parse_grid("dims: 1 x 3\n.#.\n")  # two components


# --- cuts -----------------------------------------------------------------


def test_wall_cuts():
    x, s = walls()
    assert cuts(x, s["A"], s["B"], s["C"])


def test_wall_with_gap_does_not_cut():
    x, s = walls()
    c = s["C"] - x.cells([(5, 3)])
    res = cuts(x, s["A"], s["B"], c)
    assert not res
    is_path(x, res.witness, ~c.mask)
    assert s["A"].mask[res.witness[0]] and s["B"].mask[res.witness[-1]]
    assert (5, 3) in res.witness


def test_corridor_fixture():
    x, s = load_grid(FIXTURES / "corridor.grid")
    res = cuts(x, s["A"], s["B"], s["C"])
    assert not res and (3, 3) in res.witness


def test_empty_c_does_not_cut():
    x, s = walls()
    assert not cuts(x, s["A"], s["B"], x.set(np.zeros(x.shape, bool)))


def test_cuts_needs_disjoint_sets():
    x, s = walls()
    with pytest.raises(SetsIntersect):
        cuts(x, s["A"], s["A"] | s["B"], s["C"])
    with pytest.raises(EmptySet):
        cuts(x, x.set(np.zeros(x.shape, bool)), s["B"], s["C"])


# --- rho and mu -----------------------------------------------------------


def test_distance_field_examples():
    x, s = walls()
    rho = distance_field(x, s["C"])
    assert (rho[:, 0] == 3).all()
    assert ((rho == 0) == s["C"].mask).all()
    y = GridSpace.full((4, 4))
    assert distance_field(y, y.cells([(0, 0)]))[3, 3] == 6
    with pytest.raises(EmptySet):
        distance_field(y, y.set(np.zeros((4, 4), bool)))


def test_distance_field_masked_cells():
    x, s = load_grid(FIXTURES / "dumbbell.grid")
    rho = distance_field(x, s["B"])
    assert (rho[~x.active] == -1).all()
    oracle = grid_distance(x.active.tolist(), s["B"].mask.tolist())
    for r, c in zip(*np.nonzero(x.active)):
        assert rho[r, c] == oracle[r][c]


def test_reach_mu_examples():
    x, s = walls()
    mu = reach_mu(x, s["A"], s["C"])
    assert (mu[:, :3] == -1).all() and (mu[:, 3] == 0).all() and (mu[:, 4:] == 1).all()
    empty = x.set(np.zeros(x.shape, bool))
    assert (reach_mu(x, s["A"], empty) == -1).all()
    inside = reach_mu(x, s["A"], s["A"] | s["C"])
    assert set(np.unique(inside)) <= {0, 1}


# --- f = rho * mu ---------------------------------------------------------


def test_cut_function_walls():
    x, s = walls()
    cf = cut_function(x, s["A"], s["B"], s["C"])
    assert cf.valid
    assert cf.values[0].tolist() == [-3, -2, -1, 0, 1, 2, 3, 4]
    assert (cf.zero_set == s["C"].mask).all()


def test_cut_function_corridor_is_invalid():
    x, s = load_grid(FIXTURES / "corridor.grid")
    cf = cut_function(x, s["A"], s["B"], s["C"])
    assert cf.verdict == "Invalid"
    assert any(s["B"].mask[v] and cf.values[v] < 0 for v in cf.violations)


def test_cut_function_a_touching_c():
    x, s = walls()
    a = s["A"] | x.cells([(4, 3)])
    cf = cut_function(x, a, s["B"], s["C"])
    assert cf.values[4, 3] == 0 and cf.valid


def test_cut_function_needs_nonempty_c():
    x, s = walls()
    with pytest.raises(EmptySet):
        cut_function(x, s["A"], s["B"], x.set(np.zeros(x.shape, bool)))


# --- sides ----------------------------------------------------------------


def test_sides_on_open_grid():
    x, s = walls()
    sa, sb = side_of(x, s["A"], s["B"])
    assert sa == s["A"] and sb == s["B"]


POCKET = """
dims: 6 x 8
DDD#####
DDD#####
#A######
AA...C.B
A....C.B
A....C.B
"""


def test_pocket_behind_a_is_on_its_side():
    x, s = parse_grid(POCKET)
    sa, sb = side_of(x, s["A"], s["B"])
    assert (s["D"].mask <= sa.mask).all()
    assert not (sa.mask & sb.mask).any()


def test_dumbbell_left_bulb():
    x, s = load_grid(FIXTURES / "dumbbell.grid")
    sa, _ = side_of(x, s["A"], s["B"])
    bulb = np.zeros(x.shape, bool)
    bulb[:, :3] = True
    assert (bulb <= sa.mask).all()
    hit = grid_reachable(x.active.tolist(), s["B"].mask.tolist(), s["A"].mask.tolist())
    oracle = {(int(r), int(c)) for r, c in zip(*np.nonzero(x.active))} - hit
    assert set(sa.cells()) == oracle


# --- continuum lemma ------------------------------------------------------


def staircase():
    x, s = load_grid(FIXTURES / "staircases.grid")
    return x, s["V"] | s["X"], s["H"] | s["X"]


def test_path_near_staircase():
    x, gamma, _ = staircase()
    a, b = column(x, 0), column(x, 7)
    res = path_near_continuum(x, gamma, a, b, 1)
    assert res.found
    dist = grid_distance(x.active.tolist(), gamma.mask.tolist())
    assert all(dist[r][c] <= 1 for r, c in res.path)
    assert a.mask[res.path[0]] and b.mask[res.path[-1]]
    is_path(x, res.path, x.active)


def test_path_near_reports_cut_witness():
    x, gamma, _ = staircase()
    wall = column(x, 3)
    res = path_near_continuum(x, gamma, column(x, 0), column(x, 7), 1, c=wall)
    assert res.c_cuts
    assert gamma.mask[res.witness] and wall.mask[res.witness]


def test_path_near_needs_connected_gamma():
    x, _, _ = staircase()
    gamma = x.cells([(0, 0), (7, 7)])
    with pytest.raises(PreconditionFailed):
        path_near_continuum(x, gamma, column(x, 0), column(x, 7), 1)
    with pytest.raises(PreconditionFailed):
        path_near_continuum(x, x.cells([(0, 0)]), column(x, 0), column(x, 7), 1)


@pytest.mark.parametrize("seed", range(20))
def test_path_near_always_found_for_radius_one(seed):
    x, a, b, _ = random_instance(np.random.default_rng(seed), max_side=16)
    # gamma: a shortest path joining a to b is connected and meets both
    res = cuts(x, a, b, x.set(np.zeros(x.shape, bool)))
    gamma = x.cells(res.witness)
    assert path_near_continuum(x, gamma, a, b, 1).found


# --- intersections of cutting sets ----------------------------------------


def test_intersect_two_walls():
    x = GridSpace.full((7, 7))
    row = np.zeros(x.shape, bool)
    row[3, :] = True
    col = np.zeros(x.shape, bool)
    col[:, 2] = True
    # sets[0] separates the walls of axis 0 (rows 0 and 6): a full row
    got = intersect_cutting_sets(x, [x.set(row), x.set(col)])
    assert got.cells() == [(3, 2)]


def test_intersect_three_slabs():
    x = GridSpace.full((5, 5, 5))
    slabs = []
    for ax in range(3):
        m = np.zeros(x.shape, bool)
        idx = [slice(None)] * 3
        idx[ax] = slice(2, 3)
        m[tuple(idx)] = True
        slabs.append(x.set(m))
    assert intersect_cutting_sets(x, slabs).cells() == [(2, 2, 2)]


def test_intersect_thick_staircases():
    x, v, h = staircase()
    for i, s in enumerate((v, h)):
        for axis in (0, 1):
            lo, hi = x.wall(axis, 0) - s, x.wall(axis, 1) - s
            if not lo.is_empty() and not hi.is_empty():
                blocked = s.mask.tolist()
                reach = grid_reachable(x.active.tolist(), lo.mask.tolist(), blocked)
                assert not any(hi.mask[p] for p in reach)
    got = intersect_cutting_sets(x, [h, v])
    assert got.cells() == [(3, 3), (3, 4)]


def test_intersect_rejects_non_cutting_set():
    x = GridSpace.full((6, 6))
    m = np.zeros(x.shape, bool)
    m[2, :3] = True
    with pytest.raises(PreconditionFailed):
        intersect_cutting_sets(x, [x.set(m), x.set(m.T)])


# --- randomized properties ------------------------------------------------


def _oracle_cuts(x, a, b, c):
    seen = grid_reachable(x.active.tolist(), a.mask.tolist(), c.mask.tolist())
    return not any(b.mask[p] for p in seen)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_grids(seed):
    x, a, b, c = random_instance(np.random.default_rng(seed), max_side=24)
    verdict = bool(cuts(x, a, b, c))
    assert verdict == _oracle_cuts(x, a, b, c)
    cf = cut_function(x, a, b, c)
    assert verdict == (cf.valid and (cf.zero_set == c.mask).all())
    assert ((cf.values == 0) & x.active == c.mask).all()
    sa, sb = side_of(x, a, b)
    assert not (sa.mask & sb.mask).any()
    assert (a.mask <= sa.mask).all() and (b.mask <= sb.mask).all()
    assert verdict == bool(cuts(x, sa, sb, c))
    rho = distance_field(x, c)
    oracle = grid_distance(x.active.tolist(), c.mask.tolist())
    for r, col in zip(*np.nonzero(x.active)):
        assert rho[r, col] == oracle[r][col]
