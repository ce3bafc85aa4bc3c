"""Rigorous checks that a map stretches one rectangle across another.

Four methods produce a ``StretchCertificate``:

* ``face``: the face-covering criterion. On every expansion direction j the
  image of the left face lies below the target interval and the image of
  the right face above it (or the reverse), and every other component maps
  the source into the target interval.
* ``phase``: for components a0 + c*cos(2*pi*L(x)), the linear phase L
  changes by at least one full period between the two faces, so every path
  sweeps the whole range [a0 - |c|, a0 + |c|].
* ``boundary`` / ``slab``: the image of the (restricted) source stays in the
  target across the transverse directions, the left side lands on or past
  one target side and the right side on or past the other. Overshoot along
  the expansion axis is allowed: a path crossing the source then has a
  sub-path whose image runs from one target side to the other inside the
  target. For a tube target the image must lie in the tube and the sides
  must land exactly in the tube's end faces.
* ``sampled``: a non-rigorous search for a counterexample path.

Statuses refer to the criterion checked. ``falsified`` always comes with a
point witness evaluated in interval arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .dynsys import MapSpec
from .errors import DimMismatch, NotASlab, Status
from .geometry import OrientedRect, Tube, face_box, is_horizontal_slab
from .interval import Box, Interval, add_down, add_up, box_in_union, sub_down, sub_up


@dataclass
class StretchCertificate:
    source: OrientedRect
    target: Any  # OrientedRect or Tube
    K: Box
    method: str
    status: Status
    orientation_swapped: bool = False
    evidence: dict = field(default_factory=dict)
    witness: dict | None = None
    params: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "status": self.status.value,
            "orientation_swapped": self.orientation_swapped,
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "K": self.K,
            "evidence": self.evidence,
            "witness": self.witness,
        }


# ---------------------------------------------------------------------------
# helpers


def _prove(psi: MapSpec, region: Box, pred: Callable[[Box], bool], max_pieces: int) -> tuple[bool, list[Box]]:
    """Check ``pred`` on enclosures of psi over pieces covering ``region``.

    Bisects failing pieces until ``max_pieces`` evaluations were spent.
    Returns (proved, unresolved pieces).
    """
    work = [region]
    bad: list[Box] = []
    spent = 0
    while work:
        piece = work.pop()
        spent += 1
        if pred(psi.eval_box(piece)):
            continue
        if spent + len(work) >= max_pieces or piece.width == 0:
            bad.append(piece)
            continue
        try:
            a, b = piece.bisect()
        except Exception:
            bad.append(piece)
            continue
        work += [b, a]
    return not bad, bad


def _sample_points(region: Box, extra: Sequence[Box], per_axis: int = 9) -> list[tuple[float, ...]]:
    axes = []
    for c in region:
        if c.is_point():
            axes.append([c.lo])
        else:
            axes.append([c.lo + (c.hi - c.lo) * t / (per_axis - 1) for t in range(per_axis)])
    pts: list[tuple[float, ...]] = []
    total = 1
    for a in axes:
        total *= len(a)
    if total <= 4096:
        grid = [()]
        for a in axes:
            grid = [g + (v,) for g in grid for v in a]
        pts += grid
    else:
        pts.append(region.midpoint)
    pts += [b.midpoint for b in extra]
    return pts


def _find_witness(
    psi: MapSpec,
    region: Box,
    extra: Sequence[Box],
    violates: Callable[[Box], bool],
    key: Callable[[Box], float] | None = None,
):
    """Sample point whose image enclosure rigorously violates a bound.

    With ``key``, the violating sample with the largest key is returned.
    """
    best = None
    for p in _sample_points(region, extra):
        try:
            img = psi.eval_box(Box.point(p))
        except Exception:
            continue
        if violates(img):
            if key is None:
                return p, img
            if best is None or key(img) > key(best[1]):
                best = (p, img)
    return best


def _as_rect(r, axis: int) -> OrientedRect:
    if isinstance(r, OrientedRect):
        return r
    return OrientedRect(r, axis)


# ---------------------------------------------------------------------------
# face covering


def check_face_covering(
    psi: MapSpec,
    r1: Box | OrientedRect,
    r2: Box | OrientedRect,
    J: Sequence[int],
    max_pieces: int = 256,
) -> StretchCertificate:
    """Face-covering criterion from r1 to r2 along the directions in J."""
    b1 = r1.body if isinstance(r1, OrientedRect) else r1
    b2 = r2.body if isinstance(r2, OrientedRect) else r2
    if b1.dims != psi.dims_in or b2.dims != psi.dims_out:
        raise DimMismatch("rectangles do not match the map dimensions")
    J = sorted(set(J))
    if any(not 0 <= j < b1.dims for j in J):
        raise ValueError("direction index out of range")
    axis = J[0] if J else 0
    src, tgt = _as_rect(r1, axis), _as_rect(r2, axis)
    evidence: dict[str, Any] = {"directions": {}, "contraction": {}}
    status = Status.CERTIFIED
    swapped_any = False
    witness = None

    def downgrade(s: Status):
        nonlocal status
        if s is Status.FALSIFIED or status is Status.FALSIFIED:
            status = Status.FALSIFIED
        elif s is Status.INCONCLUSIVE:
            status = Status.INCONCLUSIVE

    for j in J:
        c, d = b2[j].lo, b2[j].hi
        left, right = b1.face(j, 0), b1.face(j, 1)
        enc_l, enc_r = psi.eval_box(left)[j], psi.eval_box(right)[j]
        below = lambda img, j=j, c=c: img[j].hi <= c
        above = lambda img, j=j, d=d: img[j].lo >= d
        info = {"left_face": enc_l, "right_face": enc_r}
        result = None
        for swapped, (pl, pr) in ((False, (below, above)), (True, (above, below))):
            ok_l, _ = _prove(psi, left, pl, max_pieces)
            ok_r, _ = _prove(psi, right, pr, max_pieces) if ok_l else (False, [])
            if ok_l and ok_r:
                result = swapped
                break
        if result is not None:
            info["orientation"] = "swapped" if result else "direct"
            swapped_any |= result
            evidence["directions"][str(j)] = info
            continue
        # look for witnesses against both orientations
        hi_key = lambda img, j=j: img[j].lo
        lo_key = lambda img, j=j: -img[j].hi
        w_a = _find_witness(psi, left, [], lambda img, j=j, c=c: img[j].lo > c, hi_key) or _find_witness(
            psi, right, [], lambda img, j=j, d=d: img[j].hi < d, lo_key
        )
        w_b = _find_witness(psi, left, [], lambda img, j=j, d=d: img[j].hi < d, lo_key) or _find_witness(
            psi, right, [], lambda img, j=j, c=c: img[j].lo > c, hi_key
        )
        if w_a and w_b:
            info["orientation"] = "none"
            evidence["directions"][str(j)] = info
            witness = witness or {
                "direction": j,
                "face_enclosure": enc_l.hull(enc_r),
                "points": [list(w_a[0]), list(w_b[0])],
                "values": [w_a[1][j], w_b[1][j]],
                "target": b2[j],
            }
            downgrade(Status.FALSIFIED)
        else:
            info["orientation"] = "unresolved"
            evidence["directions"][str(j)] = info
            downgrade(Status.INCONCLUSIVE)

    for i in range(b1.dims):
        if i in J:
            continue
        tgt_i = b2[i]
        inside = lambda img, i=i, t=tgt_i: t.contains(img[i])
        ok, bad = _prove(psi, b1, inside, max_pieces)
        evidence["contraction"][str(i)] = {"image": psi.eval_box(b1)[i], "target": tgt_i, "proved": ok}
        if ok:
            continue
        w = _find_witness(psi, b1, bad[:64], lambda img, i=i, t=tgt_i: img[i].hi < t.lo or img[i].lo > t.hi)
        if w:
            witness = witness or {"direction": i, "points": [list(w[0])], "values": [w[1][i]], "target": tgt_i}
            downgrade(Status.FALSIFIED)
        else:
            downgrade(Status.INCONCLUSIVE)

    return StretchCertificate(
        src, tgt, b1, "face", status, swapped_any, evidence, witness,
        params={"J": list(J), "max_pieces": max_pieces},
    )


# ---------------------------------------------------------------------------
# phase covering


def check_phase_covering(
    psi: MapSpec,
    x: OrientedRect,
    target: Interval,
    expansion_axis: int | None = None,
    contract_into: Box | None = None,
) -> StretchCertificate:
    """Phase criterion for a component a0 + c*trig(2*pi*L(x)).

    ``expansion_axis`` selects both the component and the axis of x whose
    faces are compared (default: x's expansion axis). With ``contract_into``
    the other components must also map x into that box.
    """
    j = x.expansion_axis if expansion_axis is None else expansion_axis
    pf = psi.phase_form(j)  # raises NotPhaseForm
    left, right = x.body.face(j, 0), x.body.face(j, 1)
    p_l, p_r = pf.phase(left), pf.phase(right)
    gap_fwd = sub_down(p_r.lo, p_l.hi)
    gap_bwd = sub_down(p_l.lo, p_r.hi)
    gap = max(gap_fwd, gap_bwd)
    amp = abs(pf.amp)
    outer = Interval(sub_down(pf.a0, amp), add_up(pf.a0, amp))
    inner_lo, inner_hi = sub_up(pf.a0, amp), add_down(pf.a0, amp)
    amp_ok = inner_lo <= target.lo and target.hi <= inner_hi
    amp_bad = outer.lo > target.lo or outer.hi < target.hi
    evidence: dict[str, Any] = {
        "phase_form": pf.to_dict(),
        "phase_left": p_l,
        "phase_right": p_r,
        "gap_lower_bound": gap,
        "range": outer,
        "target": target,
    }
    witness = None
    if amp_bad:
        status = Status.FALSIFIED
        witness = {"reason": "amplitude", "range": evidence["range"], "target": target}
    elif gap >= 1.0 and amp_ok:
        status = Status.CERTIFIED
    else:
        status = Status.INCONCLUSIVE
    if contract_into is not None and status is not Status.FALSIFIED:
        for i in range(psi.dims_out):
            if i == j:
                continue
            ok, bad = _prove(psi, x.body, lambda img, i=i: contract_into[i].contains(img[i]), 256)
            evidence.setdefault("contraction", {})[str(i)] = ok
            if not ok:
                w = _find_witness(
                    psi, x.body, bad[:64],
                    lambda img, i=i: img[i].hi < contract_into[i].lo or img[i].lo > contract_into[i].hi,
                )
                if w:
                    status = Status.FALSIFIED
                    witness = {"reason": "contraction", "direction": i, "point": list(w[0]), "value": w[1][i]}
                elif status is Status.CERTIFIED:
                    status = Status.INCONCLUSIVE
    tgt_body = (contract_into if contract_into is not None else x.body).replace(j, target)
    return StretchCertificate(
        x,
        OrientedRect(tgt_body, j) if not target.is_point() else x,
        x.body,
        "phase",
        status,
        gap_bwd > gap_fwd,
        evidence,
        witness,
        params={"target": target, "expansion_axis": j, "contract_into": contract_into},
    )


# ---------------------------------------------------------------------------
# boundary criterion


def check_boundary_stretching(
    psi: MapSpec,
    x: OrientedRect,
    y: OrientedRect | Tube,
    k: Box | OrientedRect | None = None,
    max_pieces: int = 4096,
) -> StretchCertificate:
    """Boundary criterion for psi stretching x across y, restricted to k.

    ``k`` must be a full transverse slice of x (a horizontal slab), so that
    every path crossing x contains a sub-path crossing k.
    """
    kbox = x.body if k is None else (k.body if isinstance(k, OrientedRect) else k)
    method = "boundary" if k is None else "slab"
    if kbox.dims != x.dims or psi.dims_in != x.dims or psi.dims_out != y.dims:
        raise DimMismatch("rectangles do not match the map dimensions")
    params = {"max_pieces": max_pieces}
    a = x.expansion_axis
    if not x.body.contains(kbox):
        raise NotASlab("K is not inside the source")
    krect = OrientedRect(kbox, a, x.reversed)
    if k is not None and not is_horizontal_slab(krect, x):
        raise NotASlab("K is not a full transverse slice of the source")
    k_left, k_right = face_box(krect, None, "left"), face_box(krect, None, "right")
    if isinstance(y, Tube):
        return _boundary_tube(psi, x, y, kbox, k_left, k_right, method, max_pieces)

    b = y.expansion_axis
    ylo_face, yhi_face = y.body[b].lo, y.body[b].hi
    if y.reversed:
        ylo_face, yhi_face = yhi_face, ylo_face
    evidence: dict[str, Any] = {}
    status = Status.CERTIFIED
    witness = None

    # transverse containment of the whole image
    for i in range(y.dims):
        if i == b:
            continue
        t = y.body[i]
        ok, bad = _prove(psi, kbox, lambda img, i=i, t=t: t.contains(img[i]), max_pieces)
        evidence[f"transverse_{i}"] = ok
        if not ok:
            w = _find_witness(psi, kbox, bad[:64], lambda img, i=i, t=t: img[i].hi < t.lo or img[i].lo > t.hi)
            if w:
                status = Status.FALSIFIED
                witness = {"reason": f"image leaves the target along axis {i}", "point": list(w[0]), "value": w[1]}
            elif status is Status.CERTIFIED:
                status = Status.INCONCLUSIVE

    lo_t, hi_t = y.body[b].lo, y.body[b].hi
    below = lambda img: img[b].hi <= lo_t
    above = lambda img: img[b].lo >= hi_t
    # direct: left side to the side at y's left, right to y's right
    to_left, to_right = (below, above) if not y.reversed else (above, below)
    orient = None
    for swapped, (pl, pr) in ((False, (to_left, to_right)), (True, (to_right, to_left))):
        ok_l, _ = _prove(psi, k_left, pl, max_pieces)
        ok_r, _ = _prove(psi, k_right, pr, max_pieces) if ok_l else (False, [])
        if ok_l and ok_r:
            orient = swapped
            break
    evidence["left_image"] = psi.eval_box(k_left)[b]
    evidence["right_image"] = psi.eval_box(k_right)[b]
    if orient is None and status is not Status.FALSIFIED:
        wa = _find_witness(psi, k_left, [], lambda img: img[b].lo > lo_t) or _find_witness(
            psi, k_right, [], lambda img: img[b].hi < hi_t
        )
        wb = _find_witness(psi, k_left, [], lambda img: img[b].hi < hi_t) or _find_witness(
            psi, k_right, [], lambda img: img[b].lo > lo_t
        )
        if wa and wb:
            status = Status.FALSIFIED
            witness = {
                "reason": "sides do not reach opposite target sides",
                "points": [list(wa[0]), list(wb[0])],
                "values": [wa[1][b], wb[1][b]],
            }
        else:
            status = Status.INCONCLUSIVE
    evidence["orientation"] = "none" if orient is None else ("swapped" if orient else "direct")
    return StretchCertificate(x, y, kbox, method, status, bool(orient), evidence, witness, params)


def _boundary_tube(psi, x, y: Tube, kbox, k_left, k_right, method, max_pieces) -> StretchCertificate:
    pieces = y.pieces
    evidence: dict[str, Any] = {}
    status = Status.CERTIFIED
    witness = None
    ok, bad = _prove(psi, kbox, lambda img: box_in_union(img, pieces), max_pieces)
    evidence["image_in_tube"] = ok
    if not ok:
        w = _find_witness(psi, kbox, bad[:64], lambda img: not any(p.intersects(img) for p in pieces))
        if w:
            status = Status.FALSIFIED
            witness = {"reason": "image leaves the tube", "point": list(w[0]), "value": w[1]}
        else:
            status = Status.INCONCLUSIVE
    orient = None
    for swapped, (fl, fr) in ((False, (y.left, y.right)), (True, (y.right, y.left))):
        ok_l, _ = _prove(psi, k_left, lambda img, f=fl: f.contains(img), max_pieces)
        ok_r, _ = _prove(psi, k_right, lambda img, f=fr: f.contains(img), max_pieces) if ok_l else (False, [])
        if ok_l and ok_r:
            orient = swapped
            break
    evidence["orientation"] = "none" if orient is None else ("swapped" if orient else "direct")
    if orient is None and status is Status.CERTIFIED:
        status = Status.INCONCLUSIVE
    return StretchCertificate(x, y, kbox, method, status, bool(orient), evidence, witness, {"max_pieces": max_pieces})


# ---------------------------------------------------------------------------
# sampling falsifier


@dataclass
class SamplingResult:
    found: bool
    path_index: int | None = None
    path: list[tuple[float, ...]] | None = None
    paths_tried: int = 0
    note: str = ""

    def to_certificate(self, x: OrientedRect, y: OrientedRect) -> StretchCertificate:
        status = Status.FALSIFIED if self.found else Status.INCONCLUSIVE
        witness = {"path_index": self.path_index, "path": self.path, "rigorous": False} if self.found else None
        return StretchCertificate(
            x, y, x.body, "sampled", status, False, {"paths_tried": self.paths_tried, "note": self.note}, witness
        )


def _make_path(x: OrientedRect, rng: np.random.Generator, n: int, straight: bool) -> np.ndarray:
    a = x.expansion_axis
    lo = np.array(x.body.lo)
    hi = np.array(x.body.hi)
    start = lo + (hi - lo) * (0.5 if straight else rng.random(x.dims))
    end = lo + (hi - lo) * (0.5 if straight else rng.random(x.dims))
    s_lo, s_hi = (lo[a], hi[a]) if not x.reversed else (hi[a], lo[a])
    start[a], end[a] = s_lo, s_hi
    t = np.linspace(0.0, 1.0, n)[:, None]
    pts = start + (end - start) * t
    if not straight:
        for i in range(x.dims):
            if i == a:
                continue
            freq = rng.integers(1, 6)
            amp = rng.uniform(0, 0.25) * (hi[i] - lo[i])
            pts[:, i] += amp * np.sin(np.pi * freq * t[:, 0])
    return np.clip(pts, lo, hi)


def falsify_by_sampling(
    psi: MapSpec,
    x: OrientedRect,
    y: OrientedRect,
    n_paths: int = 100,
    n_samples: int = 400,
    seed: int = 0,
) -> SamplingResult:
    """Look for a path across x none of whose sub-paths is stretched across y.

    Paths run from x's left face to its right face with random transverse
    wiggles. A path passes if some run of consecutive samples has images
    inside y (up to the sampling resolution) that come within resolution of
    both target sides. The result is heuristic: it can miss stretching that
    happens between samples and never proves anything.
    """
    rng = np.random.default_rng(seed)
    b = y.expansion_axis
    ylo, yhi = y.body[b].lo, y.body[b].hi
    for idx in range(n_paths):
        pts = _make_path(x, rng, n_samples, straight=(idx == 0))
        images = []
        for p in pts:
            try:
                images.append(psi.eval_point(tuple(float(v) for v in p)))
            except Exception:
                images.append(None)
        valid = [im for im in images if im is not None]
        if len(valid) < 2:
            res = 0.0
        else:
            arr = np.array([im for im in images if im is not None])
            res = float(np.max(np.abs(np.diff(arr, axis=0)))) if len(arr) > 1 else 0.0
        res += 1e-12
        ok = False
        run: list = []
        for im in images + [None]:
            inside = im is not None and all(
                y.body[i].lo - res <= im[i] <= y.body[i].hi + res for i in range(y.dims)
            )
            if inside:
                run.append(im)
                continue
            if run:
                vals = [r[b] for r in run]
                if min(vals) <= ylo + res and max(vals) >= yhi - res:
                    ok = True
                    break
            run = []
        if not ok:
            return SamplingResult(True, idx, [tuple(map(float, p)) for p in pts], idx + 1)
    return SamplingResult(False, paths_tried=n_paths, note="no counterexample among sampled paths")


# ---------------------------------------------------------------------------


def replay(cert: StretchCertificate, psi: MapSpec) -> StretchCertificate:
    """Re-run the method that produced ``cert`` on its stored inputs."""
    p = cert.params
    if cert.method == "face":
        return check_face_covering(psi, cert.source.body, cert.target.body, p["J"], p["max_pieces"])
    if cert.method == "phase":
        return check_phase_covering(psi, cert.source, p["target"], p["expansion_axis"], p["contract_into"])
    if cert.method in ("boundary", "slab"):
        k = None if cert.method == "boundary" else cert.K
        return check_boundary_stretching(psi, cert.source, cert.target, k, p["max_pieces"])
    raise ValueError(f"cannot replay method {cert.method!r}")
