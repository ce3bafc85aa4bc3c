"""Discrete cutting-set laboratory on masked N-dimensional grids.

Cells are face-adjacent when their indices differ by one in exactly one
coordinate. A grid space is the set of active cells and must be
connected. Sets are boolean masks contained in the active cells.

Grid fixtures are plain text (see docs/grid_format.md)::

    dims: 4 x 5
    A...B
    A.#.B
    A.C.B
    A...B
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import ConstructionError, DimMismatch, EmptySet, PreconditionFailed, SetsIntersect


def _structure(ndim: int) -> np.ndarray:
    return ndimage.generate_binary_structure(ndim, 1)


def _components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    return ndimage.label(mask, structure=_structure(mask.ndim))


class GridSpace:
    """Connected set of active cells in a rectangular grid."""

    def __init__(self, active: np.ndarray, resolution: Sequence[float] | None = None):
        active = np.array(active, dtype=bool)
        if active.ndim < 1 or active.size == 0:
            raise ConstructionError("grid must have at least one cell")
        if not active.any():
            raise ConstructionError("grid has no active cells")
        _, n = _components(active)
        if n != 1:
            raise ConstructionError(f"active cells form {n} components; a connected grid is required")
        if resolution is None:
            resolution = (1.0,) * active.ndim
        if len(resolution) != active.ndim or any(r <= 0 for r in resolution):
            raise ConstructionError("resolution needs one positive entry per axis")
        self.active = active
        self.active.setflags(write=False)
        self.resolution = tuple(float(r) for r in resolution)

    @classmethod
    def full(cls, shape: Sequence[int]) -> "GridSpace":
        return cls(np.ones(tuple(shape), dtype=bool))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.active.shape

    @property
    def ndim(self) -> int:
        return self.active.ndim

    def set(self, mask) -> "GridSet":
        return GridSet(self, mask)

    def cells(self, cells: Sequence[Sequence[int]]) -> "GridSet":
        m = np.zeros(self.shape, dtype=bool)
        for c in cells:
            m[tuple(c)] = True
        return GridSet(self, m)

    def wall(self, axis: int, side: int) -> "GridSet":
        """Active cells with index 0 (side 0) or n-1 (side 1) along ``axis``."""
        m = np.zeros(self.shape, dtype=bool)
        idx = [slice(None)] * self.ndim
        idx[axis] = 0 if side == 0 else self.shape[axis] - 1
        m[tuple(idx)] = True
        return GridSet(self, m & self.active)

    def everything(self) -> "GridSet":
        return GridSet(self, self.active.copy())


class GridSet:
    """Subset of the active cells of a grid space."""

    def __init__(self, space: GridSpace, mask):
        mask = np.array(mask, dtype=bool)
        if mask.shape != space.shape:
            raise DimMismatch(f"mask shape {mask.shape} does not match grid {space.shape}")
        if (mask & ~space.active).any():
            raise ConstructionError("set contains masked cells")
        self.space = space
        self.mask = mask
        self.mask.setflags(write=False)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def is_empty(self) -> bool:
        return not self.mask.any()

    def cells(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in c) for c in np.argwhere(self.mask)]

    def __and__(self, other: "GridSet") -> "GridSet":
        return GridSet(self.space, self.mask & other.mask)

    def __or__(self, other: "GridSet") -> "GridSet":
        return GridSet(self.space, self.mask | other.mask)

    def __sub__(self, other: "GridSet") -> "GridSet":
        return GridSet(self.space, self.mask & ~other.mask)

    def __eq__(self, other) -> bool:
        if isinstance(other, GridSet):
            return self.mask.shape == other.mask.shape and bool((self.mask == other.mask).all())
        return NotImplemented

    def __repr__(self) -> str:
        return f"GridSet({len(self)} cells of {self.space.shape})"


# ---------------------------------------------------------------------------
# fixtures

_HEADER = re.compile(r"^\s*dims\s*:\s*(.+)$")


def parse_grid(text: str) -> tuple[GridSpace, dict[str, GridSet]]:
    """Read a grid fixture. Returns the space and one set per letter tag."""
    lines = text.splitlines()
    while lines and not lines[0].strip():
        lines.pop(0)
    if not lines:
        raise ConstructionError("empty grid fixture")
    m = _HEADER.match(lines[0])
    if not m:
        raise ConstructionError("grid fixture must start with 'dims: d1 x d2 ...'")
    try:
        dims = tuple(int(v) for v in re.split(r"\s*[x×]\s*", m.group(1).strip()))
    except ValueError:
        raise ConstructionError(f"bad dims line {lines[0]!r}") from None
    if any(d < 1 for d in dims):
        raise ConstructionError("grid dimensions must be positive")
    body = "".join("".join(line.split()) for line in lines[1:])
    size = int(np.prod(dims))
    if len(body) != size:
        raise ConstructionError(f"expected {size} cells, found {len(body)}")
    chars = np.array(list(body)).reshape(dims)
    bad = set(body) - set(".#") - {ch for ch in body if ch.isalpha()}
    if bad:
        raise ConstructionError(f"unknown cell characters {sorted(bad)}")
    space = GridSpace(chars != "#")
    tags = sorted({ch for ch in body if ch.isalpha()})
    return space, {t: GridSet(space, chars == t) for t in tags}


def load_grid(path: str | Path) -> tuple[GridSpace, dict[str, GridSet]]:
    return parse_grid(Path(path).read_text(encoding="utf-8"))


def format_grid(space: GridSpace, sets: dict[str, GridSet] | None = None) -> str:
    """Inverse of parse_grid. Later sets win where tags overlap."""
    chars = np.where(space.active, ".", "#").astype("<U1")
    for tag, s in (sets or {}).items():
        chars[s.mask] = tag
    dims = " x ".join(str(d) for d in space.shape)
    rows = chars.reshape(-1, space.shape[-1])
    return "dims: " + dims + "\n" + "\n".join("".join(r) for r in rows) + "\n"


# ---------------------------------------------------------------------------
# core operations


def _check(x: GridSpace, *sets: GridSet) -> None:
    for s in sets:
        if s.space is not x and s.mask.shape != x.shape:
            raise DimMismatch("set belongs to a different grid")


def reach(x: GridSpace, sources: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    """Cells of ``allowed`` connected to some source cell inside ``allowed``."""
    labels, _ = _components(allowed)
    hit = np.unique(labels[sources & allowed])
    hit = hit[hit != 0]
    return np.isin(labels, hit)


def _neighbours(cell: tuple[int, ...], shape: tuple[int, ...]):
    for d in range(len(shape)):
        for step in (-1, 1):
            v = cell[d] + step
            if 0 <= v < shape[d]:
                yield cell[:d] + (v,) + cell[d + 1 :]


def shortest_path(x: GridSpace, sources: np.ndarray, targets: np.ndarray, allowed: np.ndarray):
    """Breadth-first shortest path from any source to any target inside ``allowed``."""
    shape = x.shape
    prev: dict[tuple[int, ...], tuple[int, ...] | None] = {}
    queue: deque = deque()
    for c in np.argwhere(sources & allowed):
        t = tuple(int(v) for v in c)
        prev[t] = None
        queue.append(t)
    while queue:
        cur = queue.popleft()
        if targets[cur]:
            path = []
            while cur is not None:
                path.append(cur)
                cur = prev[cur]
            return path[::-1]
        for nb in _neighbours(cur, shape):
            if nb not in prev and allowed[nb]:
                prev[nb] = cur
                queue.append(nb)
    return None


@dataclass
class CutResult:
    cuts: bool
    witness: list[tuple[int, ...]] | None = None

    def __bool__(self) -> bool:
        return self.cuts


def _nonempty(*sets: GridSet) -> None:
    for s in sets:
        if s.is_empty():
            raise EmptySet("sets must be nonempty")


def _disjoint(a: GridSet, b: GridSet) -> None:
    if (a.mask & b.mask).any():
        raise SetsIntersect("the two sets must be disjoint")


def cuts(x: GridSpace, a: GridSet, b: GridSet, c: GridSet) -> CutResult:
    """Does c separate a from b? Otherwise return a path avoiding c."""
    _check(x, a, b, c)
    _nonempty(a, b)
    _disjoint(a, b)
    allowed = x.active & ~c.mask
    r = reach(x, a.mask & allowed, allowed)
    if not (r & b.mask).any():
        return CutResult(True)
    return CutResult(False, shortest_path(x, a.mask & allowed, b.mask & allowed, allowed))


def reach_mu(x: GridSpace, a: GridSet, c: GridSet) -> np.ndarray:
    """-1 on cells reachable from a minus c without touching c, 0 on c, +1 elsewhere.

    Masked cells hold 0.
    """
    _check(x, a, c)
    _nonempty(a)
    allowed = x.active & ~c.mask
    r = reach(x, a.mask & allowed, allowed)
    mu = np.where(r, -1, 1).astype(np.int8)
    mu[c.mask] = 0
    mu[~x.active] = 0
    return mu


def distance_field(x: GridSpace, c: GridSet) -> np.ndarray:
    """Graph distance to c through active cells. Masked cells hold -1."""
    _check(x, c)
    if c.is_empty():
        raise EmptySet("distance to an empty set")
    dist = np.full(x.shape, -1, dtype=np.int64)
    frontier = c.mask.copy()
    dist[frontier] = 0
    d = 0
    while frontier.any():
        d += 1
        grown = np.zeros_like(frontier)
        for ax in range(x.ndim):
            n = x.shape[ax]
            if n < 2:
                continue
            lo = [slice(None)] * x.ndim
            hi = [slice(None)] * x.ndim
            lo[ax], hi[ax] = slice(0, n - 1), slice(1, n)
            grown[tuple(hi)] |= frontier[tuple(lo)]
            grown[tuple(lo)] |= frontier[tuple(hi)]
        frontier = grown & x.active & (dist < 0)
        dist[frontier] = d
    return dist


@dataclass
class CutFunction:
    values: np.ndarray
    verdict: str  # "Valid" or "Invalid"
    zero_set: np.ndarray
    violations: list[tuple[int, ...]]

    @property
    def valid(self) -> bool:
        return self.verdict == "Valid"


def cut_function(x: GridSpace, a: GridSet, b: GridSet, c: GridSet) -> CutFunction:
    """f = distance-to-c times reach_mu. Valid when f <= 0 on a and f >= 0 on b.

    c must be nonempty, since the distance to an empty set is undefined.
    """
    _check(x, a, b, c)
    _nonempty(a, b, c)
    _disjoint(a, b)
    rho = distance_field(x, c)
    mu = reach_mu(x, a, c)
    f = rho * mu
    f[~x.active] = 0
    bad = (a.mask & (f > 0)) | (b.mask & (f < 0))
    zero = (f == 0) & x.active
    viol = [tuple(int(v) for v in cc) for cc in np.argwhere(bad)]
    return CutFunction(f, "Invalid" if viol else "Valid", zero, viol)


def side_of(x: GridSpace, a: GridSet, b: GridSet) -> tuple[GridSet, GridSet]:
    """Sides (S_A, S_B): cells from which every path to the other set meets this one."""
    _check(x, a, b)
    _nonempty(a, b)
    _disjoint(a, b)

    def side(own: GridSet, other: GridSet) -> GridSet:
        allowed = x.active & ~own.mask
        r = reach(x, other.mask & allowed, allowed)
        return GridSet(x, x.active & ~r)

    return side(a, b), side(b, a)


@dataclass
class PathNearResult:
    path: list[tuple[int, ...]] | None  # None means not found
    radius: int
    witness: tuple[int, ...] | None = None  # cell of gamma within radius of c
    c_cuts: bool | None = None

    @property
    def found(self) -> bool:
        return self.path is not None


def path_near_continuum(
    x: GridSpace,
    gamma: GridSet,
    a: GridSet,
    b: GridSet,
    radius: int,
    c: GridSet | None = None,
) -> PathNearResult:
    """Path from a to b within graph distance ``radius`` of a connected set gamma.

    Gamma must be connected and meet both a and b. When c is given and
    cuts a from b, the result also names a cell of gamma within
    ``radius`` of c, preferring the nearest one.
    """
    _check(x, gamma, a, b)
    _nonempty(gamma, a, b)
    if radius < 0:
        raise PreconditionFailed("radius must be non-negative")
    _, n = _components(gamma.mask)
    if n != 1:
        raise PreconditionFailed("gamma must be connected")
    if not (gamma.mask & a.mask).any() or not (gamma.mask & b.mask).any():
        raise PreconditionFailed("gamma must meet both a and b")
    dg = distance_field(x, gamma)
    near = (dg >= 0) & (dg <= radius)
    path = shortest_path(x, a.mask & near, b.mask & near, near)
    result = PathNearResult(path, radius)
    if c is not None and not c.is_empty():
        result.c_cuts = bool(cuts(x, a, b, c)) if not (a.mask & b.mask).any() else None
        if result.c_cuts:
            dc = distance_field(x, c)
            dc = np.where(gamma.mask & (dc >= 0) & (dc <= radius), dc, np.iinfo(np.int64).max)
            best = np.unravel_index(int(np.argmin(dc)), dc.shape)
            if dc[best] != np.iinfo(np.int64).max:
                result.witness = tuple(int(v) for v in best)
    return result


def intersect_cutting_sets(x: GridSpace, sets: Sequence[GridSet]) -> GridSet:
    """Intersection of N sets where sets[i] cuts the two walls of axis i."""
    if len(sets) != x.ndim:
        raise DimMismatch(f"need one set per axis ({x.ndim}), got {len(sets)}")
    for i, s in enumerate(sets):
        _check(x, s)
        lo, hi = x.wall(i, 0), x.wall(i, 1)
        if lo.is_empty() or hi.is_empty() or not cuts(x, lo, hi, s):
            raise PreconditionFailed(f"set {i} does not cut the walls of axis {i}")
    m = x.active.copy()
    for s in sets:
        m &= s.mask
    return GridSet(x, m)


# ---------------------------------------------------------------------------
# random instances


def random_instance(rng: np.random.Generator, max_side: int = 64, ndim: int = 2):
    """Random connected masked grid with disjoint nonempty sets a, b and a set c.

    Returns (space, a, b, c). The mask keeps the largest component of a
    random obstacle field. c is a slice, a diamond shell or noise, and may
    touch a or b.
    """
    while True:
        shape = tuple(int(v) for v in rng.integers(4, max_side + 1, size=ndim))
        field_ = rng.random(shape) > rng.uniform(0.0, 0.35)
        labels, n = _components(field_)
        if n == 0:
            continue
        sizes = np.bincount(labels.ravel())[1:]
        active = labels == (int(np.argmax(sizes)) + 1)
        if active.sum() < 8:
            continue
        space = GridSpace(active)
        cells = np.argwhere(active)
        picks = rng.permutation(len(cells))
        na = int(rng.integers(1, 6))
        nb = int(rng.integers(1, 6))
        if na + nb > len(cells):
            continue
        a = np.zeros(shape, bool)
        b = np.zeros(shape, bool)
        a[tuple(cells[picks[:na]].T)] = True
        b[tuple(cells[picks[na : na + nb]].T)] = True
        c = np.zeros(shape, bool)
        mode = rng.integers(0, 3)
        if mode == 0:
            ax = int(rng.integers(0, ndim))
            idx = [slice(None)] * ndim
            idx[ax] = int(rng.integers(0, shape[ax]))
            c[tuple(idx)] = True
        elif mode == 1:
            centre = cells[rng.integers(len(cells))]
            r = int(rng.integers(1, max(2, min(shape) // 2)))
            grids = np.indices(shape)
            dist = sum(np.abs(g - v) for g, v in zip(grids, centre))
            c = (dist <= r) & ~((dist <= r - 1) if rng.random() < 0.5 else np.zeros(shape, bool))
        else:
            c = rng.random(shape) < rng.uniform(0.05, 0.3)
        c &= active
        if rng.random() < 0.7:
            c &= ~a & ~b
        if not c.any():
            continue
        return space, GridSet(space, a), GridSet(space, b), GridSet(space, c)
