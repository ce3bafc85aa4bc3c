"""Outward-rounded interval arithmetic and axis-aligned boxes.

Directed rounding is emulated on top of round-to-nearest with error-free
transformations (TwoSum, Dekker's TwoProduct). An endpoint is moved by one
ulp only when the nearest-rounded result is inexact, so exact operations
stay exact. Library functions (sin, cos, log) are trusted to one ulp and
widened by two.
"""

from __future__ import annotations

import math
from decimal import ROUND_CEILING, ROUND_FLOOR, Context, Decimal
from typing import Iterable, Iterator, Sequence

from .errors import ConstructionError, DegenerateBox, DimMismatch

INF = math.inf
_SPLIT = 134217729.0  # 2**27 + 1
_BIG = 2.0**500
_TINY = 2.0**-900

PI_LO = math.pi
PI_HI = math.nextafter(math.pi, INF)


def _down(x: float) -> float:
    return math.nextafter(x, -INF)


def _up(x: float) -> float:
    return math.nextafter(x, INF)


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a: float) -> tuple[float, float]:
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> tuple[float, float] | None:
    """Return (p, e) with a*b == p + e exactly, or None when unsafe."""
    p = a * b
    if p == 0.0:
        return (p, 0.0) if (a == 0.0 or b == 0.0) else None
    if abs(a) > _BIG or abs(b) > _BIG or abs(p) < _TINY or not math.isfinite(p):
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def add_down(a: float, b: float) -> float:
    s, e = _two_sum(a, b)
    return s if not e < 0 else _down(s)


def add_up(a: float, b: float) -> float:
    s, e = _two_sum(a, b)
    return s if not e > 0 else _up(s)


def sub_down(a: float, b: float) -> float:
    return add_down(a, -b)


def sub_up(a: float, b: float) -> float:
    return add_up(a, -b)


def _prod_err(a: float, b: float, p: float) -> float | None:
    """Exact a*b - p for p = fl(a*b), or None when the split is unsafe."""
    if p == 0.0:
        return 0.0 if (a == 0.0 or b == 0.0) else None
    if not (_TINY < abs(p) and abs(a) < _BIG and abs(b) < _BIG and p - p == 0.0):
        return None
    c = _SPLIT * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLIT * b
    bh = c - (c - b)
    bl = b - bh
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def mul_down(a: float, b: float) -> float:
    p = a * b
    e = _prod_err(a, b, p)
    if e is None:
        # an underflow to zero keeps the sign of the exact product
        if p == 0.0 and (a > 0.0) == (b > 0.0):
            return 0.0
        return _down(p)
    return _down(p) if e < 0 else p


def mul_up(a: float, b: float) -> float:
    p = a * b
    e = _prod_err(a, b, p)
    if e is None:
        if p == 0.0 and (a > 0.0) != (b > 0.0):
            return -0.0
        return _up(p)
    return _up(p) if e > 0 else p


def _div_residual_sign(a: float, b: float, q: float) -> int | None:
    """Sign of a/b - q, or None when it cannot be decided cheaply."""
    r = _two_prod(q, b)
    if r is None:
        return None
    p, e = r
    res = (a - p) - e
    if res == 0.0:
        return 0
    return 1 if (res > 0) == (b > 0) else -1


def div_down(a: float, b: float) -> float:
    q = a / b
    s = _div_residual_sign(a, b, q)
    if s is None:
        return _down(q)
    return _down(q) if s < 0 else q


def div_up(a: float, b: float) -> float:
    q = a / b
    s = _div_residual_sign(a, b, q)
    if s is None:
        return _up(q)
    return _up(q) if s > 0 else q


def _finite(x: float) -> bool:
    return x - x == 0.0


class Interval:
    """Closed interval [lo, hi] of finite doubles. Immutable."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float | None = None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if not (_finite(lo) and _finite(hi)):
            raise ConstructionError(f"interval endpoints must be finite, got [{lo}, {hi}]")
        if lo > hi:
            raise ConstructionError(f"interval lower end exceeds upper end: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    def __reduce__(self):
        return (Interval, (self.lo, self.hi))

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def enclosing(cls, value) -> "Interval":
        """Smallest double interval around an exact rational or decimal value."""
        from fractions import Fraction

        q = Fraction(value)
        f = float(q)
        fq = Fraction(f)
        if fq == q:
            return cls(f, f)
        return cls(_down(f), f) if fq > q else cls(f, _up(f))

    # basic properties
    @property
    def width(self) -> float:
        return sub_up(self.hi, self.lo)

    @property
    def mid(self) -> float:
        return self.lo * 0.5 + self.hi * 0.5

    def is_point(self) -> bool:
        return self.lo == self.hi

    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> float:
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def __contains__(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def strictly_contains(self, other: "Interval") -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersection(self, other: "Interval") -> "Interval | None":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return _iv(lo, hi) if lo <= hi else None

    def hull(self, other: "Interval") -> "Interval":
        return _iv(min(self.lo, other.lo), max(self.hi, other.hi))

    def split(self) -> tuple["Interval", "Interval"]:
        m = self.mid
        if not self.lo < m < self.hi:
            raise DegenerateBox(f"cannot split {self!r}")
        return _iv(self.lo, m), _iv(m, self.hi)

    def clamp(self, lo: float, hi: float) -> "Interval":
        """Image under s -> max(lo, min(s, hi))."""
        lo, hi = float(lo), float(hi)
        if not lo <= hi:
            raise ConstructionError(f"clamp bounds [{lo}, {hi}] are reversed")
        return _iv(min(max(self.lo, lo), hi), min(max(self.hi, lo), hi))

    # arithmetic
    def __neg__(self) -> "Interval":
        return _iv(-self.hi, -self.lo)

    def __pos__(self) -> "Interval":
        return self

    def __add__(self, other) -> "Interval":
        if isinstance(other, Interval):
            return _iv(add_down(self.lo, other.lo), add_up(self.hi, other.hi))
        if isinstance(other, (int, float)):
            o = float(other)
            return _iv(add_down(self.lo, o), add_up(self.hi, o))
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        if isinstance(other, Interval):
            return _iv(sub_down(self.lo, other.hi), sub_up(self.hi, other.lo))
        if isinstance(other, (int, float)):
            o = float(other)
            return _iv(sub_down(self.lo, o), sub_up(self.hi, o))
        return NotImplemented

    def __rsub__(self, other) -> "Interval":
        if isinstance(other, (int, float)):
            o = float(other)
            return _iv(sub_down(o, self.hi), sub_up(o, self.lo))
        return NotImplemented

    def __mul__(self, other) -> "Interval":
        if isinstance(other, Interval):
            return _mul(self.lo, self.hi, other.lo, other.hi)
        if isinstance(other, (int, float)):
            s = float(other)
            if s >= 0.0:
                return _iv(mul_down(self.lo, s), mul_up(self.hi, s))
            return _iv(mul_down(self.hi, s), mul_up(self.lo, s))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        """Division by a nonzero scalar only."""
        if isinstance(other, Interval):
            if other.is_point():
                other = other.lo
            else:
                return NotImplemented
        if isinstance(other, (int, float)):
            s = float(other)
            if s == 0.0:
                raise ZeroDivisionError("interval division by zero")
            if s > 0.0:
                return _iv(div_down(self.lo, s), div_up(self.hi, s))
            return _iv(div_down(self.hi, s), div_up(self.lo, s))
        return NotImplemented

    def __pow__(self, n) -> "Interval":
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise ConstructionError("only non-negative integer powers are supported")
        if n == 0:
            return _iv(1.0, 1.0)
        if n == 1:
            return self
        if n % 2 == 0:
            return _iv(_pow_down(self.mig(), n), _pow_up(self.mag(), n))
        lo = _pow_down(self.lo, n) if self.lo >= 0 else -_pow_up(-self.lo, n)
        hi = _pow_up(self.hi, n) if self.hi >= 0 else -_pow_down(-self.hi, n)
        return _iv(lo, hi)

    def __abs__(self) -> "Interval":
        return _iv(self.mig(), self.mag())

    # comparisons and hashing
    def __eq__(self, other) -> bool:
        if isinstance(other, Interval):
            return self.lo == other.lo and self.hi == other.hi
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    def to_list(self) -> list[float]:
        return [self.lo, self.hi]


def _mul(a: float, b: float, c: float, d: float) -> Interval:
    """[a,b]*[c,d] by sign cases, so only the endpoint products are rounded."""
    if a >= 0.0:
        if c >= 0.0:
            return _iv(mul_down(a, c), mul_up(b, d))
        if d <= 0.0:
            return _iv(mul_down(b, c), mul_up(a, d))
        return _iv(mul_down(b, c), mul_up(b, d))
    if b <= 0.0:
        if c >= 0.0:
            return _iv(mul_down(a, d), mul_up(b, c))
        if d <= 0.0:
            return _iv(mul_down(b, d), mul_up(a, c))
        return _iv(mul_down(a, d), mul_up(a, c))
    if c >= 0.0:
        return _iv(mul_down(a, d), mul_up(b, d))
    if d <= 0.0:
        return _iv(mul_down(b, c), mul_up(a, c))
    return _iv(
        min(mul_down(a, d), mul_down(b, c)),
        max(mul_up(a, c), mul_up(b, d)),
    )


def _iv(lo: float, hi: float) -> Interval:
    """Fast constructor for trusted endpoints; still rejects non-finite values."""
    if not (_finite(lo) and _finite(hi)):
        raise ConstructionError(f"overflow producing [{lo}, {hi}]")
    iv = object.__new__(Interval)
    object.__setattr__(iv, "lo", lo)
    object.__setattr__(iv, "hi", hi)
    return iv


def _pow_down(x: float, n: int) -> float:
    r = 1.0
    for _ in range(n):
        r = mul_down(r, x)
    return r


def _pow_up(x: float, n: int) -> float:
    r = 1.0
    for _ in range(n):
        r = mul_up(r, x)
    return r


def as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval(x, x)


def hull(items: Iterable[Interval]) -> Interval:
    it = iter(items)
    acc = next(it)
    for x in it:
        acc = acc.hull(x)
    return acc


def imin(a, b) -> Interval:
    a, b = as_interval(a), as_interval(b)
    return _iv(min(a.lo, b.lo), min(a.hi, b.hi))


def imax(a, b) -> Interval:
    a, b = as_interval(a), as_interval(b)
    return _iv(max(a.lo, b.lo), max(a.hi, b.hi))


# ---------------------------------------------------------------------------
# trigonometric enclosures


def _widen(v: float, steps: int = 2) -> tuple[float, float]:
    lo = hi = v
    for _ in range(steps):
        lo, hi = _down(lo), _up(hi)
    return lo, hi


def _trig_from_turns(tlo: float, thi: float, lo_val, hi_val, phase: int) -> Interval:
    """Combine endpoint enclosures with exact extremum detection.

    ``tlo``/``thi`` bound the argument in turns (units of 2*pi). Quarter-turn
    index j hits a maximum when j % 4 == phase and a minimum when
    j % 4 == (phase + 2) % 4.
    """
    if thi - tlo >= 1.0:
        return _iv(-1.0, 1.0)
    lo = min(lo_val[0], hi_val[0])
    hi = max(lo_val[1], hi_val[1])
    j0 = math.ceil(tlo * 4.0)
    j1 = math.floor(thi * 4.0)
    for j in range(j0, j1 + 1):
        r = j % 4
        if r == phase:
            hi = 1.0
        elif r == (phase + 2) % 4:
            lo = -1.0
    return _iv(max(lo, -1.0), min(hi, 1.0))


def _exact_trig(x: float, fn) -> tuple[float, float]:
    if x == 0.0:
        v = fn(0.0)
        return v, v
    return _widen(fn(x))


def _radians_to_turns(a: Interval) -> tuple[float, float]:
    two_lo, two_hi = 2.0 * PI_LO, 2.0 * PI_HI
    tlo = div_down(a.lo, two_hi) if a.lo >= 0 else div_down(a.lo, two_lo)
    thi = div_up(a.hi, two_lo) if a.hi >= 0 else div_up(a.hi, two_hi)
    return tlo, thi


def sin(a) -> Interval:
    """Enclosure of sin over an interval given in radians."""
    a = as_interval(a)
    tlo, thi = _radians_to_turns(a)
    return _trig_from_turns(tlo, thi, _exact_trig(a.lo, math.sin), _exact_trig(a.hi, math.sin), 1)


def cos(a) -> Interval:
    """Enclosure of cos over an interval given in radians."""
    a = as_interval(a)
    tlo, thi = _radians_to_turns(a)
    return _trig_from_turns(tlo, thi, _exact_trig(a.lo, math.cos), _exact_trig(a.hi, math.cos), 0)


# Error of fl(r * fl(2*pi)) against 2*pi*r for r in [0, 1), plus slack.
_TURN_ARG_ERR = 1.0e-15
_QUARTER_SIN = {0.0: 0.0, 0.25: 1.0, 0.5: 0.0, 0.75: -1.0}
_QUARTER_COS = {0.0: 1.0, 0.25: 0.0, 0.5: -1.0, 0.75: 0.0}


def _turn_value(t: float, fn, table) -> tuple[float, float]:
    r = t - math.floor(t)
    if r in table:
        v = table[r]
        return v, v
    v = fn(r * (2.0 * math.pi))
    lo, hi = _widen(v, 1)
    return sub_down(lo, _TURN_ARG_ERR), add_up(hi, _TURN_ARG_ERR)


def sin_turns(t) -> Interval:
    """Enclosure of sin(2*pi*t) over an interval of turns."""
    t = as_interval(t)
    return _trig_from_turns(
        t.lo, t.hi, _turn_value(t.lo, math.sin, _QUARTER_SIN), _turn_value(t.hi, math.sin, _QUARTER_SIN), 1
    )


def cos_turns(t) -> Interval:
    """Enclosure of cos(2*pi*t) over an interval of turns."""
    t = as_interval(t)
    return _trig_from_turns(
        t.lo, t.hi, _turn_value(t.lo, math.cos, _QUARTER_COS), _turn_value(t.hi, math.cos, _QUARTER_COS), 0
    )


def log(x: float) -> Interval:
    """Enclosure of the natural logarithm of a positive double."""
    if x <= 0:
        raise ConstructionError("log of a non-positive number")
    if x == 1.0:
        return _iv(0.0, 0.0)
    lo, hi = _widen(math.log(x))
    return _iv(lo, hi)


# ---------------------------------------------------------------------------
# decimal serialization

def fmt_lo(x: float) -> str:
    """17 significant digits, rounded toward minus infinity."""
    return _fmt(x, ROUND_FLOOR)


def fmt_hi(x: float) -> str:
    """17 significant digits, rounded toward plus infinity."""
    return _fmt(x, ROUND_CEILING)


def _fmt(x: float, rounding: str) -> str:
    if x == 0.0:
        return "0"
    ctx = Context(prec=17, rounding=rounding)
    d = ctx.plus(Decimal(x))
    return format(d, ".16e")


# ---------------------------------------------------------------------------
# boxes


class Box:
    """Product of closed intervals. Immutable."""

    __slots__ = ("comps",)

    def __init__(self, comps: Iterable[Interval]):
        cs = tuple(as_interval(c) for c in comps)
        if not cs:
            raise ConstructionError("a box needs at least one component")
        object.__setattr__(self, "comps", cs)

    def __setattr__(self, name, value):
        raise AttributeError("Box is immutable")

    def __reduce__(self):
        return (Box, (self.comps,))

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float]) -> "Box":
        if len(lo) != len(hi):
            raise DimMismatch("lower and upper corners differ in length")
        return cls(Interval(a, b) for a, b in zip(lo, hi))

    @classmethod
    def point(cls, p: Sequence[float]) -> "Box":
        return cls(Interval(x, x) for x in p)

    @property
    def dims(self) -> int:
        return len(self.comps)

    def __len__(self) -> int:
        return len(self.comps)

    def __getitem__(self, i: int) -> Interval:
        return self.comps[i]

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.comps)

    @property
    def lo(self) -> tuple[float, ...]:
        return tuple(c.lo for c in self.comps)

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(c.hi for c in self.comps)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(c.width for c in self.comps)

    @property
    def width(self) -> float:
        return max(self.widths)

    @property
    def midpoint(self) -> tuple[float, ...]:
        return tuple(c.mid for c in self.comps)

    def is_point(self) -> bool:
        return all(c.is_point() for c in self.comps)

    def _check(self, other: "Box") -> None:
        if len(other.comps) != len(self.comps):
            raise DimMismatch(f"box dimensions differ: {self.dims} vs {other.dims}")

    def contains(self, other: "Box") -> bool:
        self._check(other)
        return all(a.contains(b) for a, b in zip(self.comps, other.comps))

    def contains_point(self, p: Sequence[float]) -> bool:
        if len(p) != self.dims:
            raise DimMismatch("point and box dimensions differ")
        return all(c.lo <= x <= c.hi for c, x in zip(self.comps, p))

    def __contains__(self, other) -> bool:
        if isinstance(other, Box):
            return self.contains(other)
        return self.contains_point(other)

    def intersects(self, other: "Box") -> bool:
        self._check(other)
        return all(a.intersects(b) for a, b in zip(self.comps, other.comps))

    def intersection(self, other: "Box") -> "Box | None":
        self._check(other)
        out = []
        for a, b in zip(self.comps, other.comps):
            c = a.intersection(b)
            if c is None:
                return None
            out.append(c)
        return _box(tuple(out))

    def hull(self, other: "Box") -> "Box":
        self._check(other)
        return _box(tuple(a.hull(b) for a, b in zip(self.comps, other.comps)))

    def replace(self, axis: int, comp: Interval) -> "Box":
        cs = list(self.comps)
        cs[axis] = as_interval(comp)
        return _box(tuple(cs))

    def face(self, axis: int, side: int) -> "Box":
        """Face at the lower (side 0) or upper (side 1) end of ``axis``."""
        c = self.comps[axis]
        v = c.lo if side == 0 else c.hi
        return self.replace(axis, _iv(v, v))

    def widest_axis(self) -> int:
        ws = self.widths
        best = 0
        for i, w in enumerate(ws):
            if w > ws[best]:
                best = i
        return best

    def bisect(self, axis: int | None = None) -> tuple["Box", "Box"]:
        """Split at the midpoint of ``axis`` (default: widest, lowest index on ties)."""
        if axis is None:
            axis = self.widest_axis()
        c = self.comps[axis]
        if c.is_point():
            raise DegenerateBox(f"box has zero width along axis {axis}")
        a, b = c.split()
        return self.replace(axis, a), self.replace(axis, b)

    def __eq__(self, other) -> bool:
        if isinstance(other, Box):
            return self.comps == other.comps
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.comps)

    def __repr__(self) -> str:
        inner = ", ".join(f"[{c.lo!r}, {c.hi!r}]" for c in self.comps)
        return f"Box({inner})"

    def to_list(self) -> list[list[float]]:
        return [c.to_list() for c in self.comps]


def _box(comps: tuple[Interval, ...]) -> Box:
    b = object.__new__(Box)
    object.__setattr__(b, "comps", comps)
    return b


def box_relate(a: Box, b: Box) -> str:
    """One of 'equal', 'inside', 'contains', 'overlap', 'touch', 'disjoint'.

    'inside' means a is contained in b. 'touch' means the closed boxes meet
    but their interiors do not.
    """
    a._check(b)
    if a == b:
        return "equal"
    if b.contains(a):
        return "inside"
    if a.contains(b):
        return "contains"
    if not a.intersects(b):
        return "disjoint"
    for x, y in zip(a.comps, b.comps):
        if x.hi == y.lo or y.hi == x.lo:
            if not (x.is_point() and y.is_point()):
                return "touch"
    return "overlap"


def box_in_union(box: Box, pieces: Sequence[Box]) -> bool:
    """Exact test that ``box`` lies in the union of axis-aligned ``pieces``.

    The box is cut along every piece face that crosses it; each resulting
    cell must sit inside a single piece.
    """
    cuts = []
    for i, c in enumerate(box.comps):
        pts = {c.lo, c.hi}
        for p in pieces:
            for v in (p.comps[i].lo, p.comps[i].hi):
                if c.lo < v < c.hi:
                    pts.add(v)
        cuts.append(sorted(pts))
    cells: list[list[Interval]] = [[]]
    for i, pts in enumerate(cuts):
        segs = [_iv(pts[k], pts[k + 1]) for k in range(len(pts) - 1)] or [_iv(pts[0], pts[0])]
        cells = [cell + [s] for cell in cells for s in segs]
        if len(cells) > 100000:
            return False
    for cell in cells:
        cb = _box(tuple(cell))
        if not any(p.contains(cb) for p in pieces):
            return False
    return True
