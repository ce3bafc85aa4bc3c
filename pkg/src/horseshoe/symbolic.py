"""Symbolic dynamics: words, the shift, the sequence metric, periodic orbits.

Periodic orbits are located by branch and prune over the first set of the
itinerary and certified by Poincare-Miranda on psi^k(x) - x. The
certificate also checks that every intermediate image of the enclosure
stays inside the prescribed set, which fixes the itinerary.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .covering import StretchCertificate, check_boundary_stretching
from .dynsys import Composition, MapSpec, ResidualMap
from .errors import (
    AlphabetMismatch,
    BudgetExceeded,
    DegenerateBox,
    DimMismatch,
    EmptyWord,
    NotDisjoint,
    PrerequisiteFailed,
    Status,
)
from .geometry import OrientedRect
from .interval import Box, Interval, log
from .miranda import MirandaCertificate, _clusters, certify_box


@dataclass(frozen=True)
class SymbolWord:
    """Word over {0, ..., m-1}.

    A periodic word stands for the bi-infinite repetition of ``letters``
    with letters[0] at index 0. A finite window places letters[j] at index
    j - origin and leaves every other index unknown.
    """

    m: int
    letters: tuple[int, ...]
    periodic: bool = True
    origin: int = 0

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(v) for v in self.letters))
        if self.m < 1:
            raise AlphabetMismatch("alphabet size must be positive")
        if not self.letters:
            raise EmptyWord("a word needs at least one letter")
        if any(not 0 <= v < self.m for v in self.letters):
            raise AlphabetMismatch(f"letters must lie in 0..{self.m - 1}")

    @classmethod
    def parse(cls, text: str, m: int) -> "SymbolWord":
        text = text.strip()
        parts = text.split(",") if "," in text else list(text)
        if not parts or parts == [""]:
            raise EmptyWord("a word needs at least one letter")
        try:
            return cls(m, tuple(int(p) for p in parts))
        except ValueError:
            raise AlphabetMismatch(f"cannot read word {text!r}") from None

    @property
    def period(self) -> int:
        return len(self.letters)

    def at(self, i: int) -> int | None:
        if self.periodic:
            return self.letters[i % len(self.letters)]
        j = i + self.origin
        return self.letters[j] if 0 <= j < len(self.letters) else None

    def rotate(self, r: int) -> "SymbolWord":
        r %= len(self.letters)
        return SymbolWord(self.m, self.letters[r:] + self.letters[:r], self.periodic, self.origin)

    def __str__(self) -> str:
        if self.m <= 10:
            return "".join(str(v) for v in self.letters)
        return ",".join(str(v) for v in self.letters)


def shift(w: SymbolWord) -> SymbolWord:
    """The left shift: (shift w)_i = w_{i+1}."""
    if w.periodic:
        return w.rotate(1)
    return SymbolWord(w.m, w.letters, False, w.origin + 1)


def seq_distance(s1: SymbolWord, s2: SymbolWord, horizon: int) -> Interval:
    """Enclosure of sum over all i of |s1_i - s2_i| / m^(|i|+1).

    Indices with |i| <= horizon are summed exactly; indices beyond, and
    unknown letters of finite windows, contribute at most (m-1)/m^(|i|+1)
    each. The tail beyond the horizon sums to at most 2/m^(horizon+1).
    """
    if s1.m != s2.m:
        raise AlphabetMismatch("words use different alphabets")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    m = s1.m
    lo = Fraction(0)
    slack = Fraction(0)
    for i in range(-horizon, horizon + 1):
        w = Fraction(1, m ** (abs(i) + 1))
        a, b = s1.at(i), s2.at(i)
        if a is None or b is None:
            slack += (m - 1) * w
        else:
            lo += abs(a - b) * w
    if m > 1:
        slack += Fraction(2, m ** (horizon + 1))
    return Interval(Interval.enclosing(lo).lo, Interval.enclosing(lo + slack).hi)


def _is_necklace(t: tuple[int, ...]) -> bool:
    return all(t <= t[r:] + t[:r] for r in range(1, len(t)))


def enumerate_periodic_words(m: int, k: int, up_to_rotation: bool = False, cap: int = 1 << 20) -> list[SymbolWord]:
    """All words of length k in lexicographic order (necklace representatives if asked)."""
    if k < 1:
        raise EmptyWord("period must be at least 1")
    if m**k > cap:
        raise BudgetExceeded(f"{m}^{k} words exceed the cap of {cap}", None)
    out = []
    for t in itertools.product(range(m), repeat=k):
        if up_to_rotation and not _is_necklace(t):
            continue
        out.append(SymbolWord(m, t))
    return out


# ---------------------------------------------------------------------------
# itinerary checks


@dataclass
class ItineraryResult:
    verdict: str  # "contained", "escaped" or "inflated"
    step: int | None
    enclosures: list[Box]


def _as_box(p) -> Box:
    return p if isinstance(p, Box) else Box.point(p)


def _k_boxes(ks) -> list[Box]:
    out = []
    for k in ks:
        if isinstance(k, StretchCertificate):
            out.append(k.K)
        elif isinstance(k, OrientedRect):
            out.append(k.body)
        else:
            out.append(k)
    return out


def verify_itinerary(
    psi: MapSpec,
    p,
    word: SymbolWord,
    ks: Sequence,
    steps: int,
    expansion: float | None = None,
) -> ItineraryResult:
    """Follow the enclosure of p for ``steps`` iterates along ``word``.

    Step j checks that the current enclosure lies in K[word_j]. The run
    stops as ``inflated`` when the width exceeds 10 * w0 * expansion^j,
    where w0 is the starting width (at least 1e-15 times its magnitude),
    and as ``escaped`` when containment fails.
    """
    K = _k_boxes(ks)
    if len(K) != word.m:
        raise AlphabetMismatch(f"word alphabet {word.m} does not match {len(K)} sets")
    cur = _as_box(p)
    if cur.dims != psi.dims_in:
        raise DimMismatch("point and map dimensions differ")
    scale = max([1.0] + [abs(v) for v in cur.lo + cur.hi])
    w0 = max(cur.width, 1e-15 * scale)
    if expansion is None:
        expansion = _estimate_expansion(psi, cur, K[word.at(0)])
    encl = [cur]
    for j in range(steps + 1):
        if cur.width > 10.0 * w0 * expansion**j:
            return ItineraryResult("inflated", j, encl)
        if j == steps:
            break
        target = K[word.at(j)]
        if not target.contains(cur):
            return ItineraryResult("escaped", j, encl)
        cur = psi.eval_box(cur)
        encl.append(cur)
    return ItineraryResult("contained", None, encl)


def _estimate_expansion(psi: MapSpec, start: Box, region: Box) -> float:
    probe = Box(Interval(c.mid - 1e-7, c.mid + 1e-7) for c in start)
    probe = probe.intersection(region) or probe
    try:
        img = psi.eval_box(probe)
    except Exception:
        return 1.0
    w = probe.width
    return max(1.0, img.width / w) if w > 0 else 1.0


# ---------------------------------------------------------------------------
# periodic orbits


@dataclass
class OrbitRecord:
    word: SymbolWord
    status: Status
    enclosures: list[Box] = field(default_factory=list)
    certificate: MirandaCertificate | None = None
    reason: str = ""
    derived_from: str | None = None
    boxes_explored: int = 0

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED

    def to_dict(self) -> dict:
        return {
            "word": str(self.word),
            "status": self.status.value,
            "enclosures": self.enclosures,
            "reason": self.reason,
            "derived_from": self.derived_from,
        }


def _itinerary_width(psi: MapSpec, b: Box, K: list[Box]) -> float | None:
    """Widest forward image along the itinerary, or None when b is pruned."""
    cur = b
    widest = b.width
    k = len(K)
    for j in range(1, k + 1):
        img = psi.eval_box(cur)
        if j < k:
            cur = img.intersection(K[j])
            if cur is None:
                return None
            widest = max(widest, img.width)
        elif not img.intersects(b):
            return None
    return widest


def _certify_cluster(psi: MapSpec, hull: Box, K: list[Box]) -> tuple[MirandaCertificate | None, list[Box], str]:
    encl = [hull]
    cur = hull
    for j in range(1, len(K)):
        cur = psi.eval_box(cur)
        if not K[j].contains(cur):
            return None, [], f"image {j} leaves its set"
        encl.append(cur)
    G = ResidualMap(Composition([psi] * len(K)))
    cert = certify_box(G, hull)
    if not cert.certified:
        return cert, [], cert.reason
    return cert, encl, ""


def find_periodic_orbit(
    psi: MapSpec,
    certs: Sequence,
    word: SymbolWord,
    tol: float = 1e-10,
    max_boxes: int = 100000,
) -> OrbitRecord:
    """Certify a periodic point of psi following ``word`` through the sets K_i.

    ``certs`` are stretch certificates (their K is used) or plain boxes.
    """
    K_all = _k_boxes(certs)
    if len(K_all) != word.m:
        raise AlphabetMismatch(f"word alphabet {word.m} does not match {len(K_all)} sets")
    K = [K_all[s] for s in word.letters]
    stack = [K[0]]
    leaves: list[Box] = []
    explored = 0
    while stack:
        explored += 1
        if len(stack) + len(leaves) > max_boxes:
            return OrbitRecord(word, Status.INCONCLUSIVE, reason="box budget exhausted", boxes_explored=explored)
        b = stack.pop()
        widest = _itinerary_width(psi, b, K)
        if widest is None:
            continue
        # refine until every forward image, not just b, is within tol
        if widest <= tol:
            leaves.append(b)
            continue
        try:
            lo, hi = b.bisect()
        except DegenerateBox:
            leaves.append(b)
            continue
        stack += [hi, lo]
    if not leaves:
        return OrbitRecord(word, Status.FALSIFIED, reason="no point follows the itinerary", boxes_explored=explored)
    reasons = []
    groups = sorted(_clusters(leaves), key=lambda g: min(x.lo for x in g))
    for group in groups:
        h = group[0]
        for g in group[1:]:
            h = h.hull(g)
        cert, encl, why = _certify_cluster(psi, h, K)
        if encl:
            return OrbitRecord(word, Status.CERTIFIED, encl, cert, boxes_explored=explored)
        reasons.append(why)
    return OrbitRecord(
        word, Status.INCONCLUSIVE, reason="; ".join(sorted(set(reasons))), boxes_explored=explored
    )


def _rotated_record(rec: OrbitRecord, r: int) -> OrbitRecord:
    w = rec.word.rotate(r)
    if not rec.certified:
        return OrbitRecord(w, rec.status, reason=rec.reason, derived_from=str(rec.word))
    encl = rec.enclosures[r:] + rec.enclosures[:r]
    return OrbitRecord(w, rec.status, encl, None, derived_from=str(rec.word))


@dataclass
class ChaosReport:
    m: int
    max_period: int
    prerequisites: list[StretchCertificate]
    records: dict[str, OrbitRecord]
    counts: dict[int, int]
    expected: dict[int, int]
    disjoint: bool
    overlaps: list[tuple[str, str]]
    entropy_bound: Interval

    @property
    def status(self) -> Status:
        ok = self.disjoint and all(self.counts[k] == self.expected[k] for k in self.counts)
        return Status.CERTIFIED if ok else Status.INCONCLUSIVE

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "alphabet_size": self.m,
            "max_period": self.max_period,
            "prerequisites": [c.to_dict() for c in self.prerequisites],
            "counts": {str(k): v for k, v in self.counts.items()},
            "expected": {str(k): v for k, v in self.expected.items()},
            "disjoint": self.disjoint,
            "overlaps": [list(p) for p in self.overlaps],
            "entropy_bound": {"expression": f"log({self.m})", "value": self.entropy_bound},
            "orbits": [self.records[w].to_dict() for w in sorted(self.records, key=lambda s: (len(s), s))],
        }


def _orbit_job(args):
    psi, ks, word, tol = args
    return find_periodic_orbit(psi, ks, word, tol)


def chaos_report(
    psi: MapSpec,
    x: OrientedRect,
    ks: Sequence,
    max_period: int,
    tol: float = 1e-10,
    workers: int = 1,
    prerequisites: Sequence[StretchCertificate] | None = None,
) -> ChaosReport:
    """Certify periodic orbits for every word up to ``max_period``.

    Needs at least two pairwise disjoint sets K_i, each stretched across x
    (certified here by the boundary criterion unless ``prerequisites`` are
    given). Necklace representatives are searched; rotations reuse the
    rotated orbit of their representative.
    """
    K = _k_boxes(ks)
    m = len(K)
    if m < 2:
        raise AlphabetMismatch("chaos needs at least two sets")
    for i in range(m):
        for j in range(i + 1, m):
            if K[i].intersects(K[j]):
                raise NotDisjoint(f"sets {i} and {j} intersect")
    if prerequisites is None:
        prerequisites = [check_boundary_stretching(psi, x, x, k) for k in K]
    failed = [i for i, c in enumerate(prerequisites) if not c.certified]
    if failed:
        raise PrerequisiteFailed(f"stretching not certified for sets {failed}")

    records: dict[str, OrbitRecord] = {}
    counts, expected = {}, {}
    overlaps = []
    for k in range(1, max_period + 1):
        necklaces = enumerate_periodic_words(m, k, up_to_rotation=True)
        jobs = [(psi, K, w, tol) for w in necklaces]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                found = list(pool.map(_orbit_job, jobs))
        else:
            found = [_orbit_job(j) for j in jobs]
        for rec in found:
            seen = set()
            for r in range(k):
                w = rec.word.rotate(r)
                if w.letters in seen:
                    continue
                seen.add(w.letters)
                records[str(w)] = rec if r == 0 else _rotated_record(rec, r)
        counts[k] = sum(1 for w, r in records.items() if len(r.word.letters) == k and r.certified)
        expected[k] = m**k
        cert = [r for r in found if r.certified]
        for a in range(len(cert)):
            for b in range(a + 1, len(cert)):
                if any(ea.intersects(eb) for ea in cert[a].enclosures for eb in cert[b].enclosures):
                    overlaps.append((str(cert[a].word), str(cert[b].word)))
    return ChaosReport(
        m, max_period, list(prerequisites), records, counts, expected, not overlaps, overlaps, log(m)
    )
