"""Oriented rectangles, affine charts, slab relations and bent tubes.

An oriented rectangle is an axis-aligned box with one distinguished
expansion axis. Its left face sits at the lower end of that axis and its
right face at the upper end, unless ``reversed`` swaps them.

A ``Tube`` is a chain of oriented boxes glued end to end. It models a bent
generalized rectangle such as a U-shaped strip, whose chart straightens it
into a cube. Slab and crossing checks on tubes use only box operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

from .errors import ConstructionError, DegenerateBox, DimMismatch, Status
from .interval import Box, Interval, box_in_union, div_down, div_up


@dataclass(frozen=True)
class OrientedRect:
    body: Box
    expansion_axis: int
    reversed: bool = False

    def __post_init__(self):
        if not isinstance(self.body, Box):
            object.__setattr__(self, "body", Box(self.body))
        if not 0 <= self.expansion_axis < self.body.dims:
            raise ConstructionError(
                f"expansion axis {self.expansion_axis} out of range for a {self.body.dims}-box"
            )
        if self.body[self.expansion_axis].is_point():
            raise DegenerateBox("an oriented rectangle needs positive width along its expansion axis")

    @classmethod
    def from_bounds(cls, lo, hi, axis: int, reversed: bool = False) -> "OrientedRect":
        return cls(Box.from_bounds(lo, hi), axis, reversed)

    @property
    def dims(self) -> int:
        return self.body.dims

    @property
    def expansion(self) -> Interval:
        return self.body[self.expansion_axis]

    @property
    def left(self) -> Box:
        return face_box(self, None, "left")

    @property
    def right(self) -> Box:
        return face_box(self, None, "right")

    def transverse_axes(self) -> list[int]:
        return [i for i in range(self.dims) if i != self.expansion_axis]

    def to_dict(self) -> dict:
        return {
            "lo": list(self.body.lo),
            "hi": list(self.body.hi),
            "axis": self.expansion_axis,
            "reversed": self.reversed,
        }


def face_box(r: "OrientedRect | Box", axis: int | None, side: str) -> Box:
    """Face of ``r`` orthogonal to ``axis`` as a degenerate box.

    ``left`` is the lower face and ``right`` the upper one. With
    ``axis=None`` the expansion axis of an oriented rectangle is used, and
    its ``reversed`` flag swaps the two sides.
    """
    if side not in ("left", "right"):
        raise ConstructionError(f"side must be 'left' or 'right', got {side!r}")
    if isinstance(r, OrientedRect):
        body = r.body
        flip = r.reversed and (axis is None or axis == r.expansion_axis)
        axis = r.expansion_axis if axis is None else axis
    else:
        if axis is None:
            raise ConstructionError("a plain box needs an axis")
        body, flip = r, False
    if not 0 <= axis < body.dims:
        raise DimMismatch(f"axis {axis} out of range for {body.dims} dimensions")
    lower = (side == "left") != flip
    return body.face(axis, 0 if lower else 1)


@dataclass(frozen=True)
class AffineChart:
    """h(x) = offsets + scales * x, mapping the unit cube onto a box."""

    offsets: tuple[float, ...]
    scales: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(float(v) for v in self.offsets))
        object.__setattr__(self, "scales", tuple(float(v) for v in self.scales))
        if len(self.offsets) != len(self.scales):
            raise DimMismatch("offsets and scales differ in length")
        if any(not s > 0 for s in self.scales):
            raise ConstructionError("chart scales must be positive")

    @classmethod
    def for_box(cls, b: Box) -> "AffineChart":
        return cls(b.lo, b.widths)

    @property
    def dims(self) -> int:
        return len(self.offsets)


def chart_map(c: AffineChart, p, direction: str = "forward"):
    """Apply the chart (or its inverse) to a point or a box.

    Points use round-to-nearest; boxes are enclosed with outward rounding.
    """
    if direction not in ("forward", "inverse"):
        raise ConstructionError("direction must be 'forward' or 'inverse'")
    if isinstance(p, Box):
        if p.dims != c.dims:
            raise DimMismatch("chart and box dimensions differ")
        if direction == "forward":
            return Box(x * s + a for x, a, s in zip(p, c.offsets, c.scales))
        return Box(
            Interval(div_down((x - a).lo, s), div_up((x - a).hi, s))
            for x, a, s in zip(p, c.offsets, c.scales)
        )
    if len(p) != c.dims:
        raise DimMismatch("chart and point dimensions differ")
    if direction == "forward":
        return tuple(a + s * x for x, a, s in zip(p, c.offsets, c.scales))
    return tuple((x - a) / s for x, a, s in zip(p, c.offsets, c.scales))


@dataclass(frozen=True)
class SlabCheck:
    """Truthy result of a slab test. ``swapped`` records reversed side pairing."""

    ok: bool
    swapped: bool = False
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _same_dims(m: OrientedRect, n: OrientedRect) -> None:
    if m.dims != n.dims:
        raise DimMismatch(f"rectangles have dimensions {m.dims} and {n.dims}")


def is_vertical_slab(m: OrientedRect, n: OrientedRect) -> SlabCheck:
    """Sufficient test that m is a vertical slab of n.

    Holds when m sits inside n, the expansion axes coincide and m spans n's
    full expansion interval, so m's sides lie in n's sides.
    """
    _same_dims(m, n)
    if not n.body.contains(m.body):
        return SlabCheck(False, reason="not contained")
    if m.expansion_axis != n.expansion_axis:
        return SlabCheck(False, reason="expansion axes differ")
    if m.expansion != n.expansion:
        return SlabCheck(False, reason="does not span the expansion interval")
    return SlabCheck(True, swapped=m.reversed != n.reversed)


def is_horizontal_slab(m: OrientedRect, n: "OrientedRect | Tube") -> SlabCheck:
    """Sufficient test that m is a horizontal slab of n.

    For a plain rectangle: the expansion axes coincide, m is a full
    transverse slice of n and m's expansion interval lies in n's. For a tube,
    m must be such a slice of one segment that separates the segments before
    it from those after it.
    """
    if isinstance(n, Tube):
        return _tube_horizontal_slab(m, n)
    _same_dims(m, n)
    if m.expansion_axis != n.expansion_axis:
        return SlabCheck(False, reason="expansion axes differ")
    for i in m.transverse_axes():
        if m.body[i] != n.body[i]:
            return SlabCheck(False, reason=f"not a full slice along axis {i}")
    if not n.expansion.contains(m.expansion):
        return SlabCheck(False, reason="expansion interval not contained")
    return SlabCheck(True, swapped=m.reversed != n.reversed)


@dataclass(frozen=True)
class Tube:
    """Generalized rectangle made of oriented boxes joined end to end.

    The left side is the left face of the first segment and the right side
    the right face of the last one. Only the union and the end faces matter
    for stretching; slab tests additionally use the segment structure.
    """

    segments: tuple[OrientedRect, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ConstructionError("a tube needs at least one segment")
        d = segs[0].dims
        if any(s.dims != d for s in segs):
            raise DimMismatch("tube segments differ in dimension")
        for a, b in zip(segs, segs[1:]):
            if not a.body.intersects(b.body):
                raise ConstructionError("consecutive tube segments must touch")

    @property
    def dims(self) -> int:
        return self.segments[0].dims

    @property
    def pieces(self) -> list[Box]:
        return [s.body for s in self.segments]

    @property
    def left(self) -> Box:
        return self.segments[0].left

    @property
    def right(self) -> Box:
        return self.segments[-1].right

    def contains_box(self, b: Box) -> bool:
        return box_in_union(b, self.pieces)

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments]}


def as_tube(r: "OrientedRect | Tube") -> Tube:
    return r if isinstance(r, Tube) else Tube((r,))


def _tube_horizontal_slab(m: OrientedRect, t: Tube) -> SlabCheck:
    segs = t.segments
    reasons = []
    for j, seg in enumerate(segs):
        if m.dims != seg.dims:
            raise DimMismatch("rectangle and tube dimensions differ")
        local = is_horizontal_slab(m, seg)
        if not local:
            reasons.append(f"segment {j}: {local.reason}")
            continue
        entry, exit_ = seg.left, seg.right
        ok = True
        for i, other in enumerate(segs):
            if i == j:
                continue
            meet = other.body.intersection(seg.body)
            if meet is None:
                continue
            gate = entry if i < j else exit_
            if not gate.contains(meet):
                ok = False
                break
        if ok:
            for a in segs[:j]:
                for b in segs[j + 1 :]:
                    if a.body.intersects(b.body):
                        ok = False
        if ok:
            return SlabCheck(True, swapped=local.swapped)
        reasons.append(f"segment {j}: does not separate the tube")
    return SlabCheck(False, reason="; ".join(reasons))


@dataclass(frozen=True)
class CrossingCertificate:
    status: Status
    vertical: SlabCheck
    horizontal: SlabCheck
    failing_clause: str = ""
    e: OrientedRect | None = field(default=None, compare=False)

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "vertical": {"ok": self.vertical.ok, "swapped": self.vertical.swapped},
            "horizontal": {"ok": self.horizontal.ok, "swapped": self.horizontal.swapped},
            "failing_clause": self.failing_clause,
            "e": self.e.to_dict() if self.e is not None else None,
        }


def check_crossing(e: OrientedRect, a: OrientedRect, b: "OrientedRect | Tube") -> CrossingCertificate:
    """Certify that e is a crossing of a and b: vertical in a, horizontal in b.

    A failure is reported as falsified together with the clause that
    failed. The slab criteria are sufficient only, so a falsified crossing
    means the axis-aligned criterion does not apply, not that no crossing
    exists in the path-based sense.
    """
    v = is_vertical_slab(e, a)
    h = is_horizontal_slab(e, b)
    if v and h:
        return CrossingCertificate(Status.CERTIFIED, v, h, e=e)
    clause = f"vertical slab of a ({v.reason})" if not v else f"horizontal slab of b ({h.reason})"
    return CrossingCertificate(Status.FALSIFIED, v, h, clause, e=e)


Target = Union[OrientedRect, Tube]


def rects_disjoint(rs: Sequence[Box]) -> bool:
    for i in range(len(rs)):
        for j in range(i + 1, len(rs)):
            if rs[i].intersects(rs[j]):
                return False
    return True
