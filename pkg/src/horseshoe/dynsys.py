"""Maps with rigorous box evaluation.

Every map offers ``eval_point`` (round-to-nearest, for sampling) and
``eval_box`` (an outward-rounded enclosure of the exact image).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from . import expr as _expr
from .errors import ConfigError, ConstructionError, DimMismatch, DomainError, NotPhaseForm, StripStraddle
from .interval import Box, Interval, cos_turns, sin_turns


def _third_up() -> float:
    """Smallest double u with 3*u >= 1 in exact arithmetic."""
    u = 1.0 / 3.0
    while Fraction(u) * 3 < 1:
        u = math.nextafter(u, 1.0)
    return u


def _two_thirds_down() -> float:
    """Largest double v with 3 - 3*v >= 1 in exact arithmetic."""
    v = 2.0 / 3.0
    while 3 - 3 * Fraction(v) < 1:
        v = math.nextafter(v, 0.0)
    return v


THIRD_UP = _third_up()
TWO_THIRDS_DOWN = _two_thirds_down()


@dataclass(frozen=True)
class PhaseForm:
    """A component a0 + amp * trig(2*pi*(coeffs . x + offset))."""

    a0: float
    amp: float
    trig: str
    coeffs: tuple[float, ...]
    offset: float

    def phase(self, b: Box) -> Interval:
        acc = Interval(self.offset)
        for c, x in zip(self.coeffs, b):
            if c != 0:
                acc = acc + x * c
        return acc

    def to_dict(self) -> dict:
        return {
            "a0": self.a0,
            "amp": self.amp,
            "trig": self.trig,
            "coeffs": list(self.coeffs),
            "offset": self.offset,
        }


class MapSpec:
    """Base class. Subclasses set ``kind``, ``dims_in`` and ``dims_out``."""

    kind = "abstract"
    dims_in: int
    dims_out: int

    def eval_point(self, p: Sequence[float]) -> tuple[float, ...]:
        raise NotImplementedError

    def eval_box(self, b: Box) -> Box:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def phase_form(self, component: int) -> PhaseForm:
        raise NotPhaseForm(f"{self.kind} map has no phase-form component {component}")

    def _check_in(self, n: int) -> None:
        if n != self.dims_in:
            raise DimMismatch(f"{self.kind} map expects {self.dims_in} coordinates, got {n}")

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.dims_in}->{self.dims_out}>"


class TrigExample(MapSpec):
    """psi(x, y) = (1/2 + c cos(2 pi (k x + l (y - 1/2))), 1/2 + d sin(2 pi (y + m x)))."""

    kind = "trig_example"
    dims_in = dims_out = 2

    def __init__(self, c: float, d: float, k: int, l: int, m: int, validate: bool = True):
        self.c, self.d = float(c), float(d)
        self.k, self.l, self.m = k, l, m
        if validate:
            problems = []
            if not 0 < self.d <= 0.5 < self.c:
                problems.append("need 0 < d <= 1/2 < c")
            if self.d > 0 and not self.l > 1 / self.d:
                problems.append("need l > 1/d")
            if not k >= l + 1:
                problems.append("need k >= l + 1")
            if not m >= 1:
                problems.append("need m >= 1")
            for name, v in (("k", k), ("l", l), ("m", m)):
                if int(v) != v or v < 1:
                    problems.append(f"{name} must be a positive integer")
            if problems:
                raise ConstructionError("; ".join(problems))

    def eval_point(self, p):
        self._check_in(len(p))
        x, y = p
        f = 0.5 + self.c * math.cos(2 * math.pi * (self.k * x + self.l * (y - 0.5)))
        g = 0.5 + self.d * math.sin(2 * math.pi * (y + self.m * x))
        return (f, g)

    def eval_box(self, b: Box) -> Box:
        self._check_in(b.dims)
        x, y = b.comps
        f = cos_turns(x * self.k + (y - 0.5) * self.l) * self.c + 0.5
        g = sin_turns(y + x * self.m) * self.d + 0.5
        return Box((f, g))

    def phase_form(self, component: int) -> PhaseForm:
        if component == 0:
            return PhaseForm(0.5, self.c, "cos", (float(self.k), float(self.l)), -0.5 * self.l)
        if component == 1:
            return PhaseForm(0.5, self.d, "sin", (float(self.m), 1.0), 0.0)
        raise NotPhaseForm(f"component {component} out of range")

    def to_dict(self):
        return {"kind": self.kind, "c": self.c, "d": self.d, "k": self.k, "l": self.l, "m": self.m}


@dataclass(frozen=True)
class HorseshoeBranch:
    """Strip [lo, hi] along the expansion axis and its affine branch.

    Expansion coordinate: stretch*(y - lo), or stretch*(hi - y) when
    ``flip``. Other coordinates: offset + x/contraction, sign flipped too.
    """

    lo: float
    hi: float
    flip: bool = False
    offset: float = 0.0


def canonical_branches() -> tuple[HorseshoeBranch, HorseshoeBranch]:
    return (
        HorseshoeBranch(0.0, THIRD_UP, False, 0.0),
        HorseshoeBranch(TWO_THIRDS_DOWN, 1.0, True, 1.0),
    )


class AffineHorseshoe(MapSpec):
    """Piecewise-affine horseshoe defined on a union of strips.

    The canonical instance uses strips S0 = [0, 1/3] and S1 = [2/3, 1] along
    the expansion axis, with branches (x/3, 3y) and (1 - x/3, 3 - 3y). The
    strip bounds are the doubles just outside 1/3 and 2/3 so that the faces
    provably reach the unit square's faces.

    In strict mode, points off the strips raise DomainError and boxes that
    meet two strips raise StripStraddle. In permissive mode each point uses
    the branch of the nearest strip.
    """

    kind = "horseshoe"

    def __init__(
        self,
        dims: int = 2,
        expansion_axis: int | None = None,
        branches: Sequence[HorseshoeBranch] | None = None,
        stretch: float = 3.0,
        contraction: float = 3.0,
        strict: bool = True,
    ):
        if dims < 1:
            raise ConstructionError("dims must be positive")
        self.dims_in = self.dims_out = dims
        self.axis = dims - 1 if expansion_axis is None else expansion_axis
        if not 0 <= self.axis < dims:
            raise ConstructionError("expansion axis out of range")
        self.branches = tuple(branches) if branches is not None else canonical_branches()
        if not self.branches:
            raise ConstructionError("at least one branch is required")
        for br in self.branches:
            if not br.lo <= br.hi:
                raise ConstructionError("strip lower bound exceeds upper bound")
        order = sorted(self.branches, key=lambda br: br.lo)
        for a, b in zip(order, order[1:]):
            if not a.hi < b.lo:
                raise ConstructionError("horseshoe strips must be disjoint")
        self.stretch = float(stretch)
        self.contraction = float(contraction)
        self.strict = bool(strict)

    @classmethod
    def canonical(cls, dims: int = 2, strict: bool = True) -> "AffineHorseshoe":
        return cls(dims=dims, strict=strict)

    def with_strict(self, strict: bool) -> "AffineHorseshoe":
        return AffineHorseshoe(self.dims_in, self.axis, self.branches, self.stretch, self.contraction, strict)

    def strip_box(self, i: int, base: Box | None = None) -> Box:
        """Strip i as a box: ``base`` (default unit cube) cut along the axis."""
        if base is None:
            base = Box.from_bounds([0.0] * self.dims_in, [1.0] * self.dims_in)
        br = self.branches[i]
        return base.replace(self.axis, Interval(br.lo, br.hi))

    def _nearest(self, y: float) -> int:
        best, dist = 0, math.inf
        for i, br in enumerate(self.branches):
            d = 0.0 if br.lo <= y <= br.hi else min(abs(y - br.lo), abs(y - br.hi))
            if d < dist:
                best, dist = i, d
        return best

    def branch_of_point(self, p: Sequence[float]) -> int:
        y = p[self.axis]
        for i, br in enumerate(self.branches):
            if br.lo <= y <= br.hi:
                return i
        if self.strict:
            raise DomainError(f"point {tuple(p)} lies on no strip")
        return self._nearest(y)

    def eval_point(self, p):
        self._check_in(len(p))
        br = self.branches[self.branch_of_point(p)]
        out = []
        for i, x in enumerate(p):
            if i == self.axis:
                out.append(self.stretch * (br.hi - x) if br.flip else self.stretch * (x - br.lo))
            else:
                out.append(br.offset - x / self.contraction if br.flip else br.offset + x / self.contraction)
        return tuple(out)

    def _apply(self, br: HorseshoeBranch, b: Box) -> Box:
        out = []
        for i, x in enumerate(b.comps):
            if i == self.axis:
                out.append((br.hi - x) * self.stretch if br.flip else (x - br.lo) * self.stretch)
            else:
                t = x / self.contraction
                out.append(br.offset - t if br.flip else t + br.offset)
        return Box(out)

    def eval_box(self, b: Box) -> Box:
        self._check_in(b.dims)
        y = b[self.axis]
        hits = [i for i, br in enumerate(self.branches) if y.intersects(Interval(br.lo, br.hi))]
        inside = [i for i in hits if br_contains(self.branches[i], y)]
        if inside:
            return self._apply(self.branches[inside[0]], b)
        if self.strict:
            if len(hits) > 1:
                raise StripStraddle(f"box meets strips {hits} along axis {self.axis}")
            raise DomainError(f"box {b!r} is not inside a strip")
        # permissive: split along the Voronoi cells of the strips
        order = sorted(range(len(self.branches)), key=lambda i: self.branches[i].lo)
        cuts = [-math.inf]
        for a, c in zip(order, order[1:]):
            cuts.append(self.branches[a].hi * 0.5 + self.branches[c].lo * 0.5)
        cuts.append(math.inf)
        result = None
        for idx, i in enumerate(order):
            lo, hi = max(y.lo, cuts[idx]), min(y.hi, cuts[idx + 1])
            if lo > hi:
                continue
            img = self._apply(self.branches[i], b.replace(self.axis, Interval(lo, hi)))
            result = img if result is None else result.hull(img)
        return result

    def to_dict(self):
        return {
            "kind": self.kind,
            "dims": self.dims_in,
            "expansion_axis": self.axis,
            "stretch": self.stretch,
            "contraction": self.contraction,
            "strict": self.strict,
            "branches": [
                {"lo": br.lo, "hi": br.hi, "flip": br.flip, "offset": br.offset} for br in self.branches
            ],
        }


def br_contains(br: HorseshoeBranch, y: Interval) -> bool:
    return br.lo <= y.lo and y.hi <= br.hi


class AffineMap(MapSpec):
    """x -> A x + b with float entries."""

    kind = "affine"

    def __init__(self, matrix: Sequence[Sequence[float]], offset: Sequence[float] | None = None):
        self.matrix = tuple(tuple(float(v) for v in row) for row in matrix)
        if not self.matrix:
            raise ConstructionError("empty matrix")
        self.dims_out = len(self.matrix)
        self.dims_in = len(self.matrix[0])
        if any(len(r) != self.dims_in for r in self.matrix):
            raise ConstructionError("ragged matrix")
        self.offset = tuple(float(v) for v in (offset or [0.0] * self.dims_out))
        if len(self.offset) != self.dims_out:
            raise DimMismatch("offset length does not match matrix rows")

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls([[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)])

    def eval_point(self, p):
        self._check_in(len(p))
        return tuple(sum(a * x for a, x in zip(row, p)) + c for row, c in zip(self.matrix, self.offset))

    def eval_box(self, b):
        self._check_in(b.dims)
        out = []
        for row, c in zip(self.matrix, self.offset):
            acc = Interval(c)
            for a, x in zip(row, b.comps):
                if a != 0.0:
                    acc = acc + x * a
            out.append(acc)
        return Box(out)

    def to_dict(self):
        return {"kind": self.kind, "matrix": [list(r) for r in self.matrix], "offset": list(self.offset)}


class ExpressionMap(MapSpec):
    """Map given by one custom expression per output coordinate."""

    kind = "expression"

    def __init__(self, components: Sequence[str], variables: Sequence[str] | None = None):
        self.components = tuple(components)
        if not self.components:
            raise ConstructionError("at least one component is required")
        if variables is None:
            variables = [f"x{i}" for i in range(len(self.components))]
        self.variables = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise ConstructionError("variable names must be distinct")
        self.dims_in = len(self.variables)
        self.dims_out = len(self.components)
        trees = [_expr.parse(c, self.variables) for c in self.components]
        self._point = [_expr.compile_point(t) for t in trees]
        self._box = [_expr.compile_interval(t) for t in trees]

    def __reduce__(self):
        return (ExpressionMap, (self.components, self.variables))

    def eval_point(self, p):
        self._check_in(len(p))
        return tuple(f(p) for f in self._point)

    def eval_box(self, b):
        self._check_in(b.dims)
        cs = b.comps
        return Box([f(cs) for f in self._box])

    def to_dict(self):
        return {"kind": self.kind, "variables": list(self.variables), "components": list(self.components)}


class Composition(MapSpec):
    """stages[-1] o ... o stages[0]."""

    kind = "composition"

    def __init__(self, stages: Sequence[MapSpec]):
        self.stages = tuple(stages)
        if not self.stages:
            raise ConstructionError("composition needs at least one stage")
        for a, b in zip(self.stages, self.stages[1:]):
            if a.dims_out != b.dims_in:
                raise DimMismatch(f"stage output {a.dims_out} does not feed input {b.dims_in}")
        self.dims_in = self.stages[0].dims_in
        self.dims_out = self.stages[-1].dims_out

    def eval_point(self, p):
        for s in self.stages:
            p = s.eval_point(p)
        return tuple(p)

    def eval_box(self, b):
        for s in self.stages:
            b = s.eval_box(b)
        return b

    def to_dict(self):
        return {"kind": self.kind, "stages": [s.to_dict() for s in self.stages]}


class ClampedExtension(MapSpec):
    """P(target) o psi o P(source), with P the componentwise clamp onto a box.

    Extends psi continuously to all of space when psi is continuous on the
    source box.
    """

    kind = "clamped"

    def __init__(self, inner: MapSpec, source: Box, target: Box):
        if source.dims != inner.dims_in or target.dims != inner.dims_out:
            raise DimMismatch("clamp boxes do not match the map dimensions")
        self.inner, self.source, self.target = inner, source, target
        self.dims_in, self.dims_out = inner.dims_in, inner.dims_out

    def eval_point(self, p):
        self._check_in(len(p))
        q = tuple(min(max(x, c.lo), c.hi) for x, c in zip(p, self.source))
        r = self.inner.eval_point(q)
        return tuple(min(max(x, c.lo), c.hi) for x, c in zip(r, self.target))

    def eval_box(self, b):
        self._check_in(b.dims)
        q = Box(x.clamp(c.lo, c.hi) for x, c in zip(b, self.source))
        r = self.inner.eval_box(q)
        return Box(x.clamp(c.lo, c.hi) for x, c in zip(r, self.target))

    def to_dict(self):
        return {
            "kind": self.kind,
            "inner": self.inner.to_dict(),
            "source": {"lo": list(self.source.lo), "hi": list(self.source.hi)},
            "target": {"lo": list(self.target.lo), "hi": list(self.target.hi)},
        }


class ResidualMap(MapSpec):
    """F(x) = psi(x) - x, whose zeros are the fixed points of psi."""

    kind = "residual"

    def __init__(self, inner: MapSpec):
        if inner.dims_in != inner.dims_out:
            raise DimMismatch("fixed points need a map from a space to itself")
        self.inner = inner
        self.dims_in = self.dims_out = inner.dims_in

    def eval_point(self, p):
        return tuple(a - b for a, b in zip(self.inner.eval_point(p), p))

    def eval_box(self, b):
        img = self.inner.eval_box(b)
        return Box(a - x for a, x in zip(img, b))

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict()}


def eval_point(psi: MapSpec, p: Sequence[float]) -> tuple[float, ...]:
    return psi.eval_point(p)


def eval_box(psi: MapSpec, b: Box) -> Box:
    return psi.eval_box(b)


def compose(stages: Sequence[MapSpec]) -> Composition:
    return Composition(stages)


def clamp_extend(psi: MapSpec, source: Box, target: Box) -> ClampedExtension:
    return ClampedExtension(psi, source, target)


def with_strict(psi: MapSpec, strict: bool) -> MapSpec:
    """Copy of psi with every horseshoe stage switched to the given mode."""
    if isinstance(psi, AffineHorseshoe):
        return psi.with_strict(strict)
    if isinstance(psi, Composition):
        return Composition([with_strict(s, strict) for s in psi.stages])
    if isinstance(psi, ClampedExtension):
        return ClampedExtension(with_strict(psi.inner, strict), psi.source, psi.target)
    if isinstance(psi, ResidualMap):
        return ResidualMap(with_strict(psi.inner, strict))
    return psi


# ---------------------------------------------------------------------------
# construction from plain dictionaries (configuration files)


def _req(d: dict, key: str, path: str) -> Any:
    if key not in d:
        raise ConfigError("missing required key", f"{path}.{key}")
    return d[key]


def box_from_dict(d: Any, path: str) -> Box:
    if not isinstance(d, dict):
        raise ConfigError("expected a table with lo and hi", path)
    try:
        return Box.from_bounds(_req(d, "lo", path), _req(d, "hi", path))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), path) from None


def map_from_dict(d: Any, path: str = "map") -> MapSpec:
    """Build a map from its dictionary description (see README)."""
    if not isinstance(d, dict):
        raise ConfigError("expected a table", path)
    kind = _req(d, "kind", path)
    try:
        if kind == "trig_example":
            return TrigExample(
                _req(d, "c", path), _req(d, "d", path), _req(d, "k", path), _req(d, "l", path),
                _req(d, "m", path), validate=d.get("validate", True),
            )
        if kind == "horseshoe":
            branches = None
            if "branches" in d:
                branches = [
                    HorseshoeBranch(
                        float(_req(b, "lo", f"{path}.branches[{i}]")),
                        float(_req(b, "hi", f"{path}.branches[{i}]")),
                        bool(b.get("flip", False)),
                        float(b.get("offset", 0.0)),
                    )
                    for i, b in enumerate(d["branches"])
                ]
            return AffineHorseshoe(
                dims=int(d.get("dims", 2)),
                expansion_axis=d.get("expansion_axis"),
                branches=branches,
                stretch=d.get("stretch", 3.0),
                contraction=d.get("contraction", 3.0),
                strict=d.get("strict", True),
            )
        if kind == "affine":
            return AffineMap(_req(d, "matrix", path), d.get("offset"))
        if kind == "identity":
            return AffineMap.identity(int(_req(d, "dims", path)))
        if kind == "expression":
            return ExpressionMap(_req(d, "components", path), d.get("variables"))
        if kind == "composition":
            stages = _req(d, "stages", path)
            return Composition([map_from_dict(s, f"{path}.stages[{i}]") for i, s in enumerate(stages)])
        if kind == "clamped":
            return ClampedExtension(
                map_from_dict(_req(d, "inner", path), f"{path}.inner"),
                box_from_dict(_req(d, "source", path), f"{path}.source"),
                box_from_dict(_req(d, "target", path), f"{path}.target"),
            )
    except ConfigError:
        raise
    except (ConstructionError, DimMismatch, _expr.ExpressionError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path) from None
    raise ConfigError(f"unknown map kind {kind!r}", f"{path}.kind")
