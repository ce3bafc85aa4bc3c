"""Poincare-Miranda certification, zero search and zero-branch tracking.

A box is certified to contain a zero of F: R^N -> R^N when, for a
permutation-free pairing of component i with axis i, the enclosure of F_i
on the two faces orthogonal to axis i has opposite signs.

By default the signs may be weak (an enclosure like [0, 0] on a face counts
as both nonnegative and nonpositive), which the theorem permits. Every axis
still needs at least one strictly signed face, so maps that vanish on a
whole face pair are never certified. ``strict=True`` demands strict signs
on every face.

When the raw sign conditions fail, the zero search retries on C*F with C
an approximate inverse of the Jacobian at the box centre. C is checked to
be nonsingular in exact rational arithmetic, so C*F and F share zeros.
"""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

from .dynsys import MapSpec, ResidualMap
from .errors import BudgetExceeded, DegenerateBox, DimMismatch, HypothesisFailed, Status
from .interval import Box, Interval

import numpy as np

NEG_TO_POS = -1  # F_i <= 0 on the lower face and >= 0 on the upper face
POS_TO_NEG = 1


@dataclass(frozen=True)
class FaceEnclosure:
    axis: int
    side: int
    value: Interval


@dataclass
class MirandaCertificate:
    status: Status
    box: Box
    pattern: tuple[int, ...] | None
    faces: list[FaceEnclosure]
    strict: bool
    reason: str = ""
    preconditioner: tuple[tuple[float, ...], ...] | None = None

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED

    def to_dict(self) -> dict:
        pre = self.preconditioner
        return {
            "preconditioner": None if pre is None else [[v.hex() for v in row] for row in pre],
            "status": self.status.value,
            "box": [[c.lo.hex(), c.hi.hex()] for c in self.box],
            "pattern": list(self.pattern) if self.pattern is not None else None,
            "faces": [[f.axis, f.side, f.value.lo.hex(), f.value.hi.hex()] for f in self.faces],
            "strict": self.strict,
            "reason": self.reason,
        }


def _face_enclosure(F: MapSpec, face: Box, comp: int, depth: int) -> Interval:
    """Hull of F_comp over ``face``, refined by bisection while it straddles 0."""
    v = F.eval_box(face)[comp]
    if depth <= 0 or v.lo > 0 or v.hi < 0 or face.width == 0:
        return v
    try:
        a, b = face.bisect()
    except DegenerateBox:
        return v
    va = _face_enclosure(F, a, comp, depth - 1)
    vb = _face_enclosure(F, b, comp, depth - 1)
    h = va.hull(vb)
    lo, hi = max(h.lo, v.lo), min(h.hi, v.hi)
    return Interval(lo, hi)


def _axis_pattern(lo_face: Interval, hi_face: Interval, strict: bool) -> int | None:
    if strict:
        if lo_face.hi < 0 < hi_face.lo:
            return NEG_TO_POS
        if lo_face.lo > 0 > hi_face.hi:
            return POS_TO_NEG
        return None
    if lo_face.hi <= 0 <= hi_face.lo and (lo_face.hi < 0 or hi_face.lo > 0):
        return NEG_TO_POS
    if lo_face.lo >= 0 >= hi_face.hi and (lo_face.lo > 0 or hi_face.hi < 0):
        return POS_TO_NEG
    return None


class Preconditioned(MapSpec):
    """G(x) = C F(x) for a fixed real matrix C."""

    kind = "preconditioned"

    def __init__(self, inner: MapSpec, matrix: Sequence[Sequence[float]]):
        self.inner = inner
        self.matrix = tuple(tuple(float(v) for v in row) for row in matrix)
        self.dims_in = inner.dims_in
        self.dims_out = len(self.matrix)
        if any(len(r) != inner.dims_out for r in self.matrix):
            raise DimMismatch("preconditioner shape does not match the map")

    def eval_point(self, p):
        v = self.inner.eval_point(p)
        return tuple(math.fsum(c * x for c, x in zip(row, v)) for row in self.matrix)

    def eval_box(self, b):
        v = self.inner.eval_box(b)
        out = []
        for row in self.matrix:
            acc = Interval(0.0)
            for c, x in zip(row, v):
                if c != 0.0:
                    acc = acc + x * c
            out.append(acc)
        return Box(out)

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict(), "matrix": [list(r) for r in self.matrix]}


def exactly_nonsingular(matrix: Sequence[Sequence[float]]) -> bool:
    """Exact rational Gaussian elimination on the float entries."""
    m = [[Fraction(v) for v in row] for row in matrix]
    n = len(m)
    if any(len(r) != n for r in m):
        return False
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return False
        m[c], m[piv] = m[piv], m[c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                for k in range(c, n):
                    m[r][k] -= f * m[c][k]
    return True


def approximate_inverse_jacobian(F: MapSpec, b: Box) -> list[list[float]] | None:
    """Inverse of a central-difference Jacobian at the box centre, or None."""
    mid = np.array(b.midpoint, dtype=float)
    n = b.dims
    h = np.array([max(c.width / 4, 1e-8 * max(1.0, abs(m))) for c, m in zip(b, mid)])
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h[j]
        J[:, j] = (np.array(F.eval_point(mid + e)) - np.array(F.eval_point(mid - e))) / (2 * h[j])
    if not np.all(np.isfinite(J)):
        return None
    try:
        C = np.linalg.inv(J)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(C)) or not exactly_nonsingular(C.tolist()):
        return None
    return C.tolist()


def check_miranda(
    F: MapSpec,
    b: Box,
    pattern: Sequence[int] | None = None,
    strict: bool = False,
    face_depth: int = 4,
) -> MirandaCertificate:
    """Certify a zero of F in ``b`` by the Poincare-Miranda sign conditions.

    ``pattern`` fixes the sign orientation per axis (-1: negative on the lower
    face, +1: positive on the lower face). When omitted both orientations
    are tried independently for every axis.
    """
    if F.dims_in != F.dims_out or F.dims_in != b.dims:
        raise DimMismatch("Miranda needs F: R^N -> R^N on an N-box")
    faces: list[FaceEnclosure] = []
    found: list[int] = []
    reason = ""
    for i in range(b.dims):
        if b[i].is_point():
            return MirandaCertificate(Status.INCONCLUSIVE, b, None, faces, strict, f"zero width along axis {i}")
        lo = _face_enclosure(F, b.face(i, 0), i, face_depth)
        hi = _face_enclosure(F, b.face(i, 1), i, face_depth)
        faces += [FaceEnclosure(i, 0, lo), FaceEnclosure(i, 1, hi)]
        got = _axis_pattern(lo, hi, strict)
        if pattern is not None and got is not None and got != pattern[i]:
            got = None
        if got is None and not reason:
            reason = f"sign condition fails on axis {i}"
        found.append(got if got is not None else 0)
    if reason:
        return MirandaCertificate(Status.INCONCLUSIVE, b, None, faces, strict, reason)
    return MirandaCertificate(Status.CERTIFIED, b, tuple(found), faces, strict)


def check_miranda_preconditioned(
    F: MapSpec, b: Box, matrix: Sequence[Sequence[float]], pattern=None, strict: bool = False
) -> MirandaCertificate:
    """Miranda on C*F. Only sound for a nonsingular C, which is verified here."""
    if not exactly_nonsingular(matrix):
        return MirandaCertificate(Status.INCONCLUSIVE, b, None, [], strict, "preconditioner is singular")
    G = Preconditioned(F, matrix)
    cert = check_miranda(G, b, pattern, strict)
    cert.preconditioner = G.matrix
    return cert


def recheck(cert: MirandaCertificate, F: MapSpec) -> MirandaCertificate:
    """Re-run the check on the stored box and settings."""
    if cert.preconditioner is not None:
        return check_miranda_preconditioned(F, cert.box, cert.preconditioner, cert.pattern, cert.strict)
    return check_miranda(F, cert.box, cert.pattern, cert.strict)


def certify_box(F: MapSpec, b: Box, strict: bool = False) -> MirandaCertificate:
    """Plain Miranda first, then the preconditioned variant."""
    cert = check_miranda(F, b, strict=strict)
    if cert.certified or F.dims_in == 1:
        return cert
    C = approximate_inverse_jacobian(F, b)
    if C is None:
        return cert
    pre = check_miranda_preconditioned(F, b, C, strict=strict)
    return pre if pre.certified else cert


@dataclass
class ZeroEnclosure:
    box: Box
    status: str  # "certified" or "candidate"
    certificate: MirandaCertificate | None = None
    non_isolated: bool = False

    def to_dict(self) -> dict:
        return {
            "box": self.box,
            "status": self.status,
            "non_isolated": self.non_isolated,
        }


def _excludes_zero(v: Box) -> bool:
    return any(c.lo > 0 or c.hi < 0 for c in v)


def _clusters(boxes: list[Box]) -> list[list[Box]]:
    """Group boxes whose closures touch (union-find with a sweep on axis 0)."""
    n = len(boxes)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = sorted(range(n), key=lambda i: boxes[i][0].lo)
    active: list[int] = []
    for i in order:
        lo = boxes[i][0].lo
        active = [j for j in active if boxes[j][0].hi >= lo]
        for j in active:
            if boxes[i].intersects(boxes[j]):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
        active.append(i)
    groups: dict[int, list[Box]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(boxes[i])
    return list(groups.values())


def _box_key(b: Box):
    return (b.lo, b.hi)


def find_zeros(
    F: MapSpec,
    search: Box,
    tol: float,
    max_boxes: int = 200000,
    strict: bool = False,
) -> list[ZeroEnclosure]:
    """Branch and prune for zeros of F in ``search``.

    Boxes whose enclosure excludes zero are discarded, the rest bisected on
    the widest axis until their width is at most ``tol``. Touching survivors
    are merged and the hull of each cluster is offered to Miranda.
    Certified hulls come back as ``certified``, the rest as ``candidate``
    boxes. Every zero of F in ``search`` lies in the union of the returned
    boxes. Output is sorted by lower corner.

    Raises BudgetExceeded (with ``partial``) when more than ``max_boxes``
    boxes are alive at once.
    """
    if F.dims_in != F.dims_out or F.dims_in != search.dims:
        raise DimMismatch("zero search needs F: R^N -> R^N on an N-box")
    if not tol > 0:
        raise ValueError("tol must be positive")
    stack = [search]
    leaves: list[Box] = []
    while stack:
        if len(stack) + len(leaves) > max_boxes:
            partial = sorted(
                (ZeroEnclosure(b, "candidate") for b in leaves + stack), key=lambda z: _box_key(z.box)
            )
            raise BudgetExceeded(f"more than {max_boxes} live boxes", partial)
        b = stack.pop()
        if _excludes_zero(F.eval_box(b)):
            continue
        if b.width <= tol:
            leaves.append(b)
            continue
        try:
            lo, hi = b.bisect()
        except DegenerateBox:
            leaves.append(b)
            continue
        stack.append(hi)
        stack.append(lo)
    out: list[ZeroEnclosure] = []
    for group in _clusters(leaves):
        h = group[0]
        for g in group[1:]:
            h = h.hull(g)
        cert = certify_box(F, h, strict)
        big = len(group) > 4**h.dims
        if cert.certified:
            out.append(ZeroEnclosure(h, "certified", cert, non_isolated=big))
        else:
            out.extend(ZeroEnclosure(g, "candidate", non_isolated=big) for g in group)
    out.sort(key=lambda z: _box_key(z.box))
    return out


def find_fixed_points(
    psi: MapSpec, search: Box, tol: float, max_boxes: int = 200000, strict: bool = False
) -> list[ZeroEnclosure]:
    """Zeros of psi(x) - x in ``search``."""
    return find_zeros(ResidualMap(psi), search, tol, max_boxes, strict)


# ---------------------------------------------------------------------------
# zero-branch tracking for F: R^N -> R^(N-1)


@dataclass
class BranchChain:
    """Boxes covering a continuum of zeros from the lambda-low face to the high face.

    Consecutive boxes share part of a facet; ``facets[i]`` records the axis,
    coordinate and overlap box of the contact between boxes i and i+1.
    """

    status: Status
    boxes: list[Box]
    facets: list[tuple[int, float, Box]] = field(default_factory=list)
    lambda_axis: int = 0
    hypotheses: list[tuple[int, int, str]] = field(default_factory=list)
    cells_kept: int = 0
    reason: str = ""

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "lambda_axis": self.lambda_axis,
            "boxes": list(self.boxes),
            "facets": [[a, v] for a, v, _ in self.facets],
            "hypotheses": [list(h) for h in self.hypotheses],
            "cells_kept": self.cells_kept,
            "reason": self.reason,
        }


def _face_sign(F: MapSpec, face: Box, comp: int, min_width: float, depth: int = 0) -> int:
    """+1 / -1 when F_comp is strictly signed on the whole face, else 0."""
    v = F.eval_box(face)[comp]
    if v.lo > 0:
        return 1
    if v.hi < 0:
        return -1
    if face.width <= min_width or depth > 60:
        return 0
    a, b = face.bisect()
    sa = _face_sign(F, a, comp, min_width, depth + 1)
    if sa == 0:
        return 0
    return sa if _face_sign(F, b, comp, min_width, depth + 1) == sa else 0


def _shared_facet(a: Box, b: Box) -> tuple[int, float, Box] | None:
    """Axis and coordinate of an (N-1)-dimensional contact between a and b."""
    meet = a.intersection(b)
    if meet is None:
        return None
    flat = [i for i, c in enumerate(meet) if c.is_point()]
    if len(flat) != 1:
        return None
    return flat[0], meet[flat[0]].lo, meet


def shares_facet(a: Box, b: Box) -> bool:
    return _shared_facet(a, b) is not None


def track_zero_branch(
    F: MapSpec,
    search: Box,
    lambda_axis: int,
    cell: float,
    tol: float | None = None,
    max_cells: int = 2_000_000,
) -> BranchChain:
    """Follow the zero set of F: R^N -> R^(N-1) across ``search`` in lambda.

    Hypotheses: on each non-lambda axis, the matching component of F is
    strictly signed with opposite signs on the two faces (checked by face
    subdivision down to ``cell``). Then the zero set contains a continuum
    joining the lambda-low and lambda-high faces.

    The non-lambda axes are cut into columns of width ``cell``. Inside each
    column the lambda interval is refined by bisection down to ``tol``
    (default cell/16), keeping pieces whose enclosure contains zero. Runs of
    kept pieces are cut at multiples of ``cell`` in lambda, with short
    remnants merged into a neighbour. A breadth-first search over facet
    contacts gives the shortest chain from the low to the high face.
    """
    n = search.dims
    if F.dims_in != n or F.dims_out != n - 1:
        raise DimMismatch("branch tracking needs F: R^N -> R^(N-1) on an N-box")
    if not 0 <= lambda_axis < n:
        raise ValueError("lambda axis out of range")
    if not cell > 0:
        raise ValueError("cell must be positive")
    tol = cell / 16 if tol is None else tol
    axes = [i for i in range(n) if i != lambda_axis]

    hyps = []
    for comp, ax in enumerate(axes):
        s_lo = _face_sign(F, search.face(ax, 0), comp, cell)
        s_hi = _face_sign(F, search.face(ax, 1), comp, cell)
        if s_lo == 0 or s_hi == 0 or s_lo == s_hi:
            raise HypothesisFailed(
                f"component {comp} is not strictly signed with opposite signs on the faces of axis {ax}"
            )
        hyps.append((comp, ax, "neg-to-pos" if s_lo < 0 else "pos-to-neg"))

    lam = search[lambda_axis]

    # columns over the constrained axes
    grids = []
    for ax in axes:
        c = search[ax]
        k = max(1, math.ceil(c.width / cell))
        edges = [c.lo + (c.hi - c.lo) * j / k for j in range(k + 1)]
        edges[0], edges[-1] = c.lo, c.hi
        grids.append([Interval(edges[j], edges[j + 1]) for j in range(k)])
    total = 1
    for g in grids:
        total *= len(g)
    if total > max_cells:
        raise BudgetExceeded(f"{total} columns exceed the budget of {max_cells}", None)

    def column_box(idx, lam_iv):
        comps = [None] * n
        comps[lambda_axis] = lam_iv
        for ax, g, j in zip(axes, grids, idx):
            comps[ax] = g[j]
        return Box(comps)

    nodes: list[Box] = []
    node_col: list[tuple[int, ...]] = []
    by_col: dict[tuple[int, ...], list[int]] = {}
    cells = 0
    n_lam = max(1, math.ceil(lam.width / cell))
    lam_edges = [lam.lo + (lam.hi - lam.lo) * j / n_lam for j in range(n_lam + 1)]
    lam_edges[0], lam_edges[-1] = lam.lo, lam.hi

    def indices(level=0, prefix=()):
        if level == len(grids):
            yield prefix
            return
        for j in range(len(grids[level])):
            yield from indices(level + 1, prefix + (j,))

    for idx in indices():
        kept: list[Interval] = []
        work = [lam]
        while work:
            li = work.pop()
            cells += 1
            if cells > max_cells:
                raise BudgetExceeded("cell budget exhausted while tracking", None)
            if _excludes_zero(F.eval_box(column_box(idx, li))):
                continue
            if li.width <= tol:
                kept.append(li)
                continue
            a, b = li.split()
            work.append(b)
            work.append(a)
        if not kept:
            continue
        kept.sort(key=lambda iv: iv.lo)
        runs = [[kept[0].lo, kept[0].hi]]
        for iv in kept[1:]:
            if iv.lo <= runs[-1][1]:
                runs[-1][1] = max(runs[-1][1], iv.hi)
            else:
                runs.append([iv.lo, iv.hi])
        for r0, r1 in runs:
            cuts = [r0] + [e for e in lam_edges if r0 < e < r1] + [r1]
            pieces = [[cuts[j], cuts[j + 1]] for j in range(len(cuts) - 1)]
            merged: list[list[float]] = []
            for p in pieces:
                if merged and (p[1] - p[0] < cell / 2 or merged[-1][1] - merged[-1][0] < cell / 2):
                    merged[-1][1] = p[1]
                else:
                    merged.append(p)
            if len(merged) > 1 and merged[-1][1] - merged[-1][0] < cell / 2:
                last = merged.pop()
                merged[-1][1] = last[1]
            for p0, p1 in merged:
                by_col.setdefault(idx, []).append(len(nodes))
                nodes.append(column_box(idx, Interval(p0, p1)))
                node_col.append(idx)

    if not nodes:
        return BranchChain(Status.INCONCLUSIVE, [], [], lambda_axis, hyps, 0, "no cell keeps a zero")

    # adjacency: same column consecutive pieces, or neighbouring columns with overlap
    def neighbours(i):
        idx = node_col[i]
        out = []
        for j in by_col.get(idx, []):
            if j != i and shares_facet(nodes[i], nodes[j]):
                out.append(j)
        for d in range(len(idx)):
            for step in (-1, 1):
                nb = idx[:d] + (idx[d] + step,) + idx[d + 1 :]
                for j in by_col.get(nb, []):
                    if shares_facet(nodes[i], nodes[j]):
                        out.append(j)
        return out

    starts = [i for i, b in enumerate(nodes) if b[lambda_axis].lo == lam.lo]
    goal = {i for i, b in enumerate(nodes) if b[lambda_axis].hi == lam.hi}
    prev = {i: -1 for i in starts}
    queue = deque(starts)
    end = -1
    while queue:
        i = queue.popleft()
        if i in goal:
            end = i
            break
        for j in neighbours(i):
            if j not in prev:
                prev[j] = i
                queue.append(j)
    if end < 0:
        return BranchChain(
            Status.INCONCLUSIVE, [], [], lambda_axis, hyps, len(nodes), "no facet-connected chain found"
        )
    chain = []
    while end >= 0:
        chain.append(end)
        end = prev[end]
    chain.reverse()
    boxes = [nodes[i] for i in chain]
    facets = [_shared_facet(a, b) for a, b in zip(boxes, boxes[1:])]
    return BranchChain(Status.CERTIFIED, boxes, facets, lambda_axis, hyps, len(nodes))
