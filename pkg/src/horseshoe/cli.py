"""Command-line front end.

Every command reads a TOML job file (``--config``), runs the matching
pipeline and writes a JSON report. Exit codes: 0 when every check is
certified or valid, 2 when some check is falsified, 3 when some check is
inconclusive and none falsified, 4 for usage or configuration errors.

Options resolve as command-line flag, then environment variable
(prefix ``HSHOE_``), then the command's table in the job file, then the
``[options]`` table, then the built-in default.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from . import cutting as cl
from .covering import (
    check_boundary_stretching,
    check_face_covering,
    check_phase_covering,
    falsify_by_sampling,
)
from .dynsys import MapSpec, box_from_dict, map_from_dict, with_strict
from .errors import BudgetExceeded, ConfigError, HorseshoeError, HypothesisFailed, Status
from .geometry import OrientedRect, Tube, check_crossing, rects_disjoint
from .interval import Box, Interval
from .miranda import find_fixed_points, track_zero_branch
from .report import EXIT_USAGE, Check, Report, file_hash, overall
from .symbolic import SymbolWord, chaos_report, enumerate_periodic_words, find_periodic_orbit

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_PREFIX = "HSHOE_"
COMMANDS = (
    "verify-covering",
    "fixed-points",
    "periodic-orbits",
    "chaos-report",
    "branch-track",
    "cutting-lab",
    "crossing",
)


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# option name -> (type, default, validator)
OPTIONS: dict[str, tuple[Callable[[Any], Any], Any, Callable[[Any], bool] | None]] = {
    "tol": (float, None, lambda v: v > 0),
    "max_period": (int, None, lambda v: v >= 1),
    "budget": (int, None, lambda v: v >= 1),
    "seed": (int, 0, None),
    "workers": (int, os.cpu_count() or 1, lambda v: v >= 1),
    "strict_strips": (_parse_bool, None, None),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="horseshoe", description="Certify horseshoe structure for maps on rectangles.")
    p.add_argument("--version", action="version", version=f"horseshoe {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="TOML job file")
        s.add_argument("--out", help="report path (default: standard output)")
        s.add_argument("--csv", help="also write enclosures as CSV")
        s.add_argument("--tol", type=str)
        s.add_argument("--max-period", dest="max_period", type=str)
        s.add_argument("--budget", type=str)
        s.add_argument("--seed", type=str)
        s.add_argument("--workers", type=str)
        s.add_argument("--strict-strips", dest="strict_strips", type=str)
    return p


def resolve_options(flags: dict, env: dict, table: dict, base: dict) -> dict:
    out = {}
    for name, (conv, default, valid) in OPTIONS.items():
        for source, key, raw in (
            ("flag", f"--{name.replace('_', '-')}", flags.get(name)),
            ("env", ENV_PREFIX + name.upper(), env.get(ENV_PREFIX + name.upper())),
            ("config", name, table.get(name)),
            ("config", f"options.{name}", base.get(name)),
        ):
            if raw is None:
                continue
            try:
                value = conv(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"cannot parse {raw!r}", key) from None
            if valid is not None and not valid(value):
                raise ConfigError(f"value {raw!r} out of range", key)
            out[name] = value
            break
        else:
            out[name] = default
    return out


# ---------------------------------------------------------------------------
# job file helpers


class Job:
    def __init__(self, data: dict, path: Path, command: str):
        self.data = data
        self.path = path
        self.command = command
        self.table = data.get(command, {})
        if not isinstance(self.table, dict):
            raise ConfigError("expected a table", command)
        self.rects = data.get("rects", {})
        self.tubes = data.get("tubes", {})

    def require(self, key: str, table: dict | None = None, prefix: str | None = None) -> Any:
        t = self.table if table is None else table
        if key not in t:
            raise ConfigError("missing required key", f"{prefix or self.command}.{key}")
        return t[key]

    def rect(self, ref: Any, key: str) -> OrientedRect:
        if isinstance(ref, str):
            if ref not in self.rects:
                raise ConfigError(f"unknown rectangle {ref!r}", key)
            return self.rect(self.rects[ref], f"rects.{ref}")
        if not isinstance(ref, dict):
            raise ConfigError("expected a rectangle name or table", key)
        body = box_from_dict(ref, key)
        axis = ref.get("axis", 0)
        if not isinstance(axis, int) or not 0 <= axis < body.dims:
            raise ConfigError(f"axis {axis!r} out of range", f"{key}.axis")
        try:
            return OrientedRect(body, axis, bool(ref.get("reversed", False)))
        except HorseshoeError as exc:
            raise ConfigError(str(exc), key) from None

    def target(self, ref: Any, key: str) -> OrientedRect | Tube:
        if isinstance(ref, str) and ref in self.tubes:
            spec = self.tubes[ref]
            segs = spec.get("segments") if isinstance(spec, dict) else None
            if not isinstance(segs, list) or not segs:
                raise ConfigError("expected a nonempty segments list", f"tubes.{ref}.segments")
            try:
                return Tube([self.rect(s, f"tubes.{ref}.segments[{i}]") for i, s in enumerate(segs)])
            except HorseshoeError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(str(exc), f"tubes.{ref}") from None
        return self.rect(ref, key)

    def box(self, ref: Any, key: str) -> Box:
        if isinstance(ref, str):
            return self.rect(ref, key).body
        return box_from_dict(ref, key)

    def map(self, strict: bool | None) -> MapSpec:
        if "map" not in self.data:
            raise ConfigError("missing required table", "map")
        psi = map_from_dict(self.data["map"], "map")
        if strict is not None:
            psi = with_strict(psi, strict)
        return psi

    def checks(self) -> list[dict]:
        items = self.require("checks")
        if not isinstance(items, list) or not all(isinstance(c, dict) for c in items):
            raise ConfigError("expected an array of tables", f"{self.command}.checks")
        return items


def _budget_kw(opts: dict, name: str) -> dict:
    return {} if opts["budget"] is None else {name: opts["budget"]}


def _fp_status(encls) -> Status:
    if not encls:
        return Status.FALSIFIED  # pruning is rigorous: no zero in the region
    if all(z.status == "certified" for z in encls):
        return Status.CERTIFIED
    return Status.INCONCLUSIVE


def _run_fixed_points(psi, box, tol, opts, name) -> Check:
    try:
        encls = find_fixed_points(psi, box, tol, **_budget_kw(opts, "max_boxes"))
    except BudgetExceeded as exc:
        return Check(name, "fixed-points", Status.INCONCLUSIVE, {"reason": str(exc), "search": box})
    detail = {"search": box, "enclosures": encls,
              "certificates": [z.certificate.to_dict() if z.certificate else None for z in encls]}
    return Check(name, "fixed-points", _fp_status(encls), detail, [(f"{name}#{i}", z.box) for i, z in enumerate(encls)])


# ---------------------------------------------------------------------------
# commands


def cmd_verify_covering(job: Job, opts: dict) -> list[Check]:
    psi = job.map(opts["strict_strips"])
    out = []
    for i, c in enumerate(job.checks()):
        key = f"verify-covering.checks[{i}]"
        method = job.require("method", c, key)
        name = c.get("name", f"{method}-{i}")
        src = job.rect(job.require("source", c, key), f"{key}.source")
        if method == "face":
            tgt = job.rect(job.require("target", c, key), f"{key}.target")
            J = c.get("J", [src.expansion_axis])
            cert = check_face_covering(psi, src, tgt, J, **_budget_kw(opts, "max_pieces"))
        elif method == "phase":
            if "target_interval" in c:
                lo, hi = c["target_interval"]
                target = Interval(lo, hi)
            else:
                tgt = job.rect(job.require("target", c, key), f"{key}.target")
                target = tgt.body[tgt.expansion_axis]
            into = job.box(c["contract_into"], f"{key}.contract_into") if "contract_into" in c else None
            cert = check_phase_covering(psi, src, target, c.get("axis"), into)
        elif method in ("boundary", "slab"):
            tgt = job.target(job.require("target", c, key), f"{key}.target")
            k = job.box(c["K"], f"{key}.K") if "K" in c else None
            cert = check_boundary_stretching(psi, src, tgt, k, **_budget_kw(opts, "max_pieces"))
        elif method == "sampling":
            tgt = job.rect(job.require("target", c, key), f"{key}.target")
            res = falsify_by_sampling(
                psi, src, tgt, int(c.get("paths", 100)), int(c.get("samples", 400)), opts["seed"]
            )
            cert = res.to_certificate(src, tgt)
        else:
            raise ConfigError(f"unknown method {method!r}", f"{key}.method")
        out.append(Check(name, method, cert.status, cert))
    return out


def cmd_fixed_points(job: Job, opts: dict) -> list[Check]:
    psi = job.map(opts["strict_strips"])
    tol = opts["tol"] or 1e-10
    regions = job.require("regions")
    if not isinstance(regions, list):
        raise ConfigError("expected an array", "fixed-points.regions")
    out = []
    for i, r in enumerate(regions):
        name = r if isinstance(r, str) else f"region-{i}"
        out.append(_run_fixed_points(psi, job.box(r, f"fixed-points.regions[{i}]"), tol, opts, name))
    return out


def _ks(job: Job) -> list[Box]:
    ks = job.require("ks")
    if not isinstance(ks, list):
        raise ConfigError("expected an array", f"{job.command}.ks")
    return [job.box(k, f"{job.command}.ks[{i}]") for i, k in enumerate(ks)]


def cmd_periodic_orbits(job: Job, opts: dict) -> list[Check]:
    psi = job.map(opts["strict_strips"])
    K = _ks(job)
    tol = opts["tol"] or 1e-10
    if "words" in job.table:
        try:
            words = [SymbolWord.parse(str(w), len(K)) for w in job.table["words"]]
        except HorseshoeError as exc:
            raise ConfigError(str(exc), "periodic-orbits.words") from None
    else:
        top = opts["max_period"] or 4
        words = [w for k in range(1, top + 1) for w in enumerate_periodic_words(len(K), k)]
    out = []
    for w in words:
        rec = find_periodic_orbit(psi, K, w, tol, **_budget_kw(opts, "max_boxes"))
        out.append(
            Check(str(w), "periodic-orbit", rec.status, rec,
                  [(f"{w}@{j}", b) for j, b in enumerate(rec.enclosures)])
        )
    return out


def cmd_chaos_report(job: Job, opts: dict) -> list[Check]:
    psi = job.map(opts["strict_strips"])
    x = job.rect(job.require("source"), "chaos-report.source")
    K = _ks(job)
    tol = opts["tol"] or 1e-10
    top = opts["max_period"] or 6
    prereq = [check_boundary_stretching(psi, x, x, k, **_budget_kw(opts, "max_pieces")) for k in K]
    out = [Check(f"stretch-K{i}", "slab", c.status, c) for i, c in enumerate(prereq)]
    if not all(c.certified for c in prereq):
        return out
    rep = chaos_report(psi, x, K, top, tol, workers=opts["workers"], prerequisites=prereq)
    for k in sorted(rep.counts):
        st = Status.CERTIFIED if rep.counts[k] == rep.expected[k] else Status.INCONCLUSIVE
        out.append(Check(f"period-{k}", "orbit-count", st, {"certified": rep.counts[k], "expected": rep.expected[k]}))
    out.append(Check("disjointness", "disjoint", Status.CERTIFIED if rep.disjoint else Status.INCONCLUSIVE,
                     {"overlaps": rep.overlaps}))
    encl = [(f"{w}@{j}", b) for w, r in sorted(rep.records.items()) for j, b in enumerate(r.enclosures)]
    out.append(Check("orbits", "chaos", rep.status, rep, encl))
    return out


def cmd_branch_track(job: Job, opts: dict) -> list[Check]:
    F = job.map(None)
    search = job.box(job.require("search"), "branch-track.search")
    axis = job.require("lambda_axis")
    cell = float(job.require("cell"))
    if cell <= 0:
        raise ConfigError("cell must be positive", "branch-track.cell")
    try:
        chain = track_zero_branch(F, search, int(axis), cell, opts["tol"], **_budget_kw(opts, "max_cells"))
    except HypothesisFailed as exc:
        return [Check("branch", "branch-track", Status.INCONCLUSIVE, {"reason": str(exc)})]
    except BudgetExceeded as exc:
        return [Check("branch", "branch-track", Status.INCONCLUSIVE, {"reason": str(exc)})]
    return [Check("branch", "branch-track", chain.status, chain, [(f"box{i}", b) for i, b in enumerate(chain.boxes)])]


def _grid_set(sets: dict, space: cl.GridSpace, ref: Any, key: str) -> cl.GridSet:
    if isinstance(ref, str):
        if ref not in sets:
            raise ConfigError(f"grid has no set tagged {ref!r}", key)
        return sets[ref]
    if isinstance(ref, list):
        members = [_grid_set(sets, space, r, f"{key}[{i}]") for i, r in enumerate(ref)]
        m = np.zeros(space.shape, bool)
        for s in members:
            m |= s.mask
        return cl.GridSet(space, m)
    if isinstance(ref, dict) and "wall" in ref:
        axis, side = ref["wall"]
        return space.wall(int(axis), int(side))
    raise ConfigError("expected a tag, a list of tags or {wall = [axis, side]}", key)


def _random_lab(count: int, max_side: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    stats = {"instances": count, "cuts": 0, "iff_failures": 0, "side_overlaps": 0, "side_invariance_failures": 0}
    for _ in range(count):
        x, a, b, c = cl.random_instance(rng, max_side)
        r = cl.cuts(x, a, b, c)
        f = cl.cut_function(x, a, b, c)
        sa, sb = cl.side_of(x, a, b)
        stats["cuts"] += bool(r)
        stats["iff_failures"] += bool(r) != (f.valid and bool((f.zero_set == c.mask).all()))
        stats["side_overlaps"] += bool((sa.mask & sb.mask).any())
        stats["side_invariance_failures"] += bool(r) != bool(cl.cuts(x, sa, sb, c))
    return stats


def cmd_cutting_lab(job: Job, opts: dict) -> list[Check]:
    space = sets = None
    if "grid" in job.table:
        gpath = job.path.parent / str(job.table["grid"])
        if not gpath.exists():
            raise ConfigError(f"grid file {str(gpath)!r} not found", "cutting-lab.grid")
        try:
            space, sets = cl.load_grid(gpath)
        except HorseshoeError as exc:
            raise ConfigError(str(exc), "cutting-lab.grid") from None
    out = []
    for i, c in enumerate(job.checks()):
        key = f"cutting-lab.checks[{i}]"
        op = job.require("op", c, key)
        name = c.get("name", f"{op}-{i}")
        if op == "random":
            seed = int(c.get("seed", opts["seed"]))
            stats = _random_lab(int(c.get("count", 200)), int(c.get("max_side", 64)), seed)
            bad = stats["iff_failures"] + stats["side_overlaps"] + stats["side_invariance_failures"]
            out.append(Check(name, op, Status.FALSIFIED if bad else Status.CERTIFIED, stats))
            continue
        if space is None:
            raise ConfigError("missing required key", "cutting-lab.grid")
        S = lambda k: _grid_set(sets, space, job.require(k, c, key), f"{key}.{k}")
        try:
            if op == "cuts":
                r = cl.cuts(space, S("a"), S("b"), S("c"))
                ok, detail = r.cuts, {"cuts": r.cuts, "witness": r.witness}
            elif op == "cut_function":
                f = cl.cut_function(space, S("a"), S("b"), S("c"))
                ok, detail = f.valid, {"verdict": f.verdict, "values": f.values, "violations": f.violations}
            elif op == "side_of":
                sa, sb = cl.side_of(space, S("a"), S("b"))
                ok = not (sa.mask & sb.mask).any()
                detail = {"side_a": sa.cells(), "side_b": sb.cells()}
            elif op == "path_near":
                cc = S("c") if "c" in c else None
                r = cl.path_near_continuum(space, S("gamma"), S("a"), S("b"), int(c.get("radius", 1)), cc)
                ok = r.found and (cc is None or not r.c_cuts or r.witness is not None)
                detail = {"path": r.path, "radius": r.radius, "witness": r.witness, "c_cuts": r.c_cuts}
            elif op == "intersect":
                refs = job.require("sets", c, key)
                res = cl.intersect_cutting_sets(
                    space, [_grid_set(sets, space, s, f"{key}.sets[{j}]") for j, s in enumerate(refs)]
                )
                ok, detail = not res.is_empty(), {"cells": res.cells()}
            else:
                raise ConfigError(f"unknown op {op!r}", f"{key}.op")
        except cl.PreconditionFailed as exc:
            out.append(Check(name, op, Status.INCONCLUSIVE, {"reason": str(exc)}))
            continue
        except (cl.SetsIntersect, cl.EmptySet) as exc:
            raise ConfigError(str(exc), key) from None
        if "expect" in c:
            st = Status.CERTIFIED if bool(c["expect"]) == bool(ok) else Status.FALSIFIED
            detail["expected"] = bool(c["expect"])
        elif op == "intersect":
            st = Status.CERTIFIED if ok else Status.INCONCLUSIVE  # emptiness is allowed on coarse grids
        else:
            st = Status.CERTIFIED if ok else Status.FALSIFIED
        out.append(Check(name, op, st, detail))
    return out


def cmd_crossing(job: Job, opts: dict) -> list[Check]:
    """Stretch A across B, check each E_i crosses A in B, then find a fixed point in each E_i."""
    psi = job.map(opts["strict_strips"])
    a = job.rect(job.require("source"), "crossing.source")
    b = job.target(job.require("target"), "crossing.target")
    refs = job.require("crossings")
    if not isinstance(refs, list) or not refs:
        raise ConfigError("expected a nonempty array", "crossing.crossings")
    es = [job.rect(r, f"crossing.crossings[{i}]") for i, r in enumerate(refs)]
    names = [r if isinstance(r, str) else f"E{i}" for i, r in enumerate(refs)]
    tol = opts["tol"] or 1e-10
    stretch = check_boundary_stretching(psi, a, b, **_budget_kw(opts, "max_pieces"))
    out = [Check("stretch", stretch.method, stretch.status, stretch)]
    disjoint = rects_disjoint([e.body for e in es])
    out.append(Check("disjoint", "disjoint", Status.CERTIFIED if disjoint else Status.INCONCLUSIVE, {"disjoint": disjoint}))
    for name, e in zip(names, es):
        cc = check_crossing(e, a, b)
        out.append(Check(f"crossing-{name}", "crossing", cc.status, cc))
    for name, e in zip(names, es):
        out.append(_run_fixed_points(psi, e.body, tol, opts, f"fixed-point-{name}"))
    return out


HANDLERS = {
    "verify-covering": cmd_verify_covering,
    "fixed-points": cmd_fixed_points,
    "periodic-orbits": cmd_periodic_orbits,
    "chaos-report": cmd_chaos_report,
    "branch-track": cmd_branch_track,
    "cutting-lab": cmd_cutting_lab,
    "crossing": cmd_crossing,
}


def load_config(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {str(path)!r} not found", "--config") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}", str(path)) from None


def run(command: str, config_path: str | Path, flags: dict | None = None, env: dict | None = None) -> tuple[int, Report]:
    """Run one job. Returns (exit code, report)."""
    flags = flags or {}
    env = os.environ if env is None else env
    path = Path(config_path)
    data = load_config(path)
    job = Job(data, path, command)
    base = data.get("options", {})
    if not isinstance(base, dict):
        raise ConfigError("expected a table", "options")
    opts = resolve_options(flags, env, job.table, base)
    t0 = time.perf_counter()
    try:
        checks = HANDLERS[command](job, opts)
    except ConfigError:
        raise
    except HorseshoeError as exc:
        raise ConfigError(str(exc), command) from None
    elapsed = time.perf_counter() - t0
    report = Report("horseshoe", __version__, command, file_hash(path), data, opts, checks,
                    {"seconds": round(elapsed, 6)})
    return overall(checks)[1], report


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"horseshoe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    flags = {k: getattr(args, k) for k in OPTIONS}
    try:
        code, report = run(args.command, args.config, flags)
    except ConfigError as exc:
        print(f"horseshoe: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.dumps()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.csv:
        Path(args.csv).write_text(report.csv_text(), encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
