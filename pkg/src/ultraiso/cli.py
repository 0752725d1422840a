"""Command-line entry point: ``ultraiso <group> <command> [flags]``.

Exit status: 0 success or pass, 1 a verified negative result (failed
verification, obstruction, exceeded cap) with its witness, 2 malformed input.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import oracle
from .constructions import NONLINEAR, classify
from .geometry import Domain, decompose_sphere
from .isotree import (
    IDENTITY,
    IsometryTree,
    IsoTreeError,
    NotCentred,
    NotIsometric,
    apply,
    canonical,
    compose,
    factor_isometry,
    invert,
    random_tree,
    tree_from_json,
    tree_to_json,
    verify_isometry,
)
from .scalars import ScalarError
from .spaces import NotEnumerable, Space, parse_rational, space_from_json
from .tingley import (
    EXTENDED,
    SphereIsometrySpec,
    TingleyError,
    extend_sphere_isometry,
    extension_obstruction,
)

SCHEMA = "1"
OK, NEGATIVE, MALFORMED = 0, 1, 2


class InputError(Exception):
    """Malformed input; the message names the offending flag or field."""


@dataclass
class Report:
    status: int
    data: dict
    lines: list[str] = field(default_factory=list)


# -- loading -----------------------------------------------------------------------


def _read_json(path: str, flag: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{flag}: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{flag}: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from None


def _space_from(data, flag: str, allow_zero: bool = False) -> Space | None:
    if not isinstance(data, dict):
        raise InputError(f"{flag}: expected a JSON object")
    try:
        space = space_from_json(data)
    except KeyError as exc:
        raise InputError(f"{flag}: missing field {exc.args[0]!r}") from None
    except (ValueError, TypeError, ZeroDivisionError, ScalarError) as exc:
        raise InputError(f"{flag}: {exc}") from None
    if space is None and not allow_zero:
        raise InputError(f"{flag}: dimension 0 is only accepted by classify")
    return space


def load_space(path: str | None, flag: str = "--space", allow_zero: bool = False) -> Space | None:
    if path is None:
        raise InputError(f"{flag} is required")
    return _space_from(_read_json(path, flag), flag, allow_zero)


class TableMap:
    """A map given as explicit point pairs, looked up after domain reduction."""

    def __init__(self, space: Space, table: dict, domain: Domain):
        self.space = space
        self.table = table
        self.domain = domain

    def __call__(self, x):
        key = self.domain.reduce(x)
        try:
            return self.table[key]
        except KeyError:
            raise InputError(f"--iso: the table has no image for {self.space.point_to_json(x)}") from None


def load_map(space: Space, path: str, domain: Domain, flag: str = "--iso"):
    data = _read_json(path, flag)
    if data == "identity":
        return IDENTITY
    if isinstance(data, dict) and "pairs" in data:
        pairs = data["pairs"]
        if not isinstance(pairs, list):
            raise InputError(f"{flag}: pairs must be a list")
        table = {}
        for k, pair in enumerate(pairs):
            try:
                x, y = (space.point_from_json(p) for p in pair)
            except (ValueError, TypeError, ScalarError) as exc:
                raise InputError(f"{flag}: pairs[{k}]: {exc}") from None
            table[domain.reduce(x)] = domain.reduce(y)
        return TableMap(space, table, domain)
    try:
        return tree_from_json(space, data)
    except (IsoTreeError, ValueError, TypeError, ScalarError) as exc:
        raise InputError(f"{flag}: {exc}") from None


def parse_point(space: Space, text: str | None, flag: str = "--point"):
    if text is None:
        raise InputError(f"{flag} is required")
    try:
        return space.point_from_json(json.loads(text))
    except (json.JSONDecodeError, ValueError, TypeError, ScalarError) as exc:
        raise InputError(f"{flag}: {exc}") from None


def parse_radius(text: str | None, flag: str = "--radius") -> Fraction:
    if text is None:
        raise InputError(f"{flag} is required")
    try:
        r = parse_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{flag}: {exc}") from None
    if r <= 0:
        raise InputError(f"{flag}: radius must be positive")
    return r


def domain_for(space: Space, depth: int) -> Domain:
    return Domain.full(space, depth)


# -- helpers -----------------------------------------------------------------------


def _pt(space: Space, x):
    return space.point_to_json(x)


def _tree_json(space: Space, tree: IsometryTree) -> dict:
    return tree_to_json(space, tree)


def _witness(space: Space, f, res) -> dict | None:
    if res.witness is None:
        return None
    x, y = res.witness
    if res.reason == "image outside domain":
        return {"x": _pt(space, x), "image": _pt(space, y)}
    fx, fy = f(x), f(y)
    return {"x": _pt(space, x), "y": _pt(space, y), "fx": _pt(space, fx), "fy": _pt(space, fy),
            "dist": str(space.dist(x, y)), "image_dist": str(space.dist(fx, fy))}


def _verify_report(space: Space, f, domain: Domain) -> Report:
    res = verify_isometry(space, f, domain)
    data = {"passed": res.passed, "points": len(domain), "reason": res.reason or None,
            "witness": _witness(space, f, res)}
    lines = [f"verify: {'pass' if res else 'FAIL'} over {len(domain)} points"]
    if not res:
        lines.append(f"reason: {res.reason}")
        if data["witness"]:
            lines.append("witness: " + json.dumps(data["witness"], sort_keys=True))
    return Report(OK if res else NEGATIVE, data, lines)


# -- commands ----------------------------------------------------------------------


def cmd_space_describe(args) -> Report:
    space = load_space(args.space)
    values = space.value_set()
    spheres = []
    for r in values:
        dec = decompose_sphere(space, r)
        entry = {"radius": str(r), "classes": len(dec)}
        if space.is_finite:
            entry["points"] = len(space.sphere_points(r))
        spheres.append(entry)
    data = {"space": space.to_json(), "dim": space.dim,
            "trivially_normed": space.is_trivially_normed(),
            "value_set": [str(v) for v in values], "spheres": spheres}
    lines = [f"field: {space.field!r}", f"dim: {space.dim}",
             "weights: " + ", ".join(str(w) for w in space.weights),
             f"trivially normed: {space.is_trivially_normed()}",
             "radius       classes  points"]
    for e in spheres:
        lines.append(f"{e['radius']:<12} {e['classes']:>7}  {e.get('points', '-'):>6}")
    return Report(OK, data, lines)


def cmd_geometry_decompose(args) -> Report:
    space = load_space(args.space)
    r = parse_radius(args.radius)
    dec = decompose_sphere(space, r, args.depth)
    classes = []
    for c in dec.classes:
        entry = {"representative": _pt(space, c.representative)}
        if space.is_finite:
            entry["size"] = sum(1 for x in space.sphere_points(r)
                                if space.dist(x, c.representative) < r)
        classes.append(entry)
    data = {"radius": str(r), "classes": classes, "count": len(classes)}
    lines = [f"S({r}): {len(classes)} classes"]
    for k, e in enumerate(classes):
        size = f"  ({e['size']} points)" if "size" in e else ""
        lines.append(f"  [{k}] {json.dumps(e['representative'])}{size}")
    return Report(OK if classes else NEGATIVE, data, lines)


def cmd_iso_apply(args) -> Report:
    space = load_space(args.space)
    x = parse_point(space, args.point)
    dom = domain_for(space, args.depth)
    f = _single_map(space, args, dom)
    y = f(x) if not isinstance(f, IsometryTree) else apply(space, f, x)
    data = {"x": _pt(space, x), "image": _pt(space, y), "norm": str(space.norm(y))}
    return Report(OK, data, [f"{json.dumps(data['x'])} -> {json.dumps(data['image'])}"])


def _single_map(space, args, dom):
    if not args.iso or len(args.iso) != 1:
        raise InputError("--iso: exactly one map is required")
    return load_map(space, args.iso[0], dom)


def _as_callable(space, f):
    if isinstance(f, IsometryTree):
        return lambda x: apply(space, f, x)
    return f


def cmd_iso_verify(args) -> Report:
    space = load_space(args.space)
    dom = domain_for(space, args.depth)
    f = _as_callable(space, _single_map(space, args, dom))
    return _verify_report(space, f, dom)


def _factor(space, f, dom, depth) -> Report:
    try:
        tree = factor_isometry(space, f, dom, depth=None)
    except NotCentred as exc:
        return Report(NEGATIVE, {"error": str(exc), "image_of_zero": _pt(space, f(space.zero()))},
                      [f"not centred: {exc}"])
    except NotIsometric:
        rep = _verify_report(space, f, dom)
        return Report(NEGATIVE, rep.data, rep.lines)
    tree = canonical(space, tree)
    return Report(OK, {"tree": _tree_json(space, tree)},
                  [json.dumps(_tree_json(space, tree), sort_keys=True)])


def cmd_iso_factor(args) -> Report:
    space = load_space(args.space)
    dom = domain_for(space, args.depth)
    f = _as_callable(space, _single_map(space, args, dom))
    return _factor(space, f, dom, args.depth)


def cmd_iso_compose(args) -> Report:
    space = load_space(args.space)
    dom = domain_for(space, args.depth)
    if not args.iso or len(args.iso) < 2:
        raise InputError("--iso: give at least two maps (applied right to left)")
    maps = [load_map(space, p, dom) for p in args.iso]
    g = maps[-1]
    for f in reversed(maps[:-1]):
        g = compose(space, f, g)
    return _factor(space, g, dom, args.depth)


def cmd_iso_invert(args) -> Report:
    space = load_space(args.space)
    dom = domain_for(space, args.depth)
    f = _single_map(space, args, dom)
    if isinstance(f, IsometryTree):
        inv = invert(space, f)
        return Report(OK, {"tree": _tree_json(space, inv)},
                      [json.dumps(_tree_json(space, inv), sort_keys=True)])
    rev = {}
    for x in dom.points:
        y = f(x)
        if y in rev:
            return Report(NEGATIVE, {"error": "not injective",
                                     "witness": [_pt(space, rev[y]), _pt(space, x)]},
                          ["not injective"])
        rev[y] = x
    pairs = [[_pt(space, y), _pt(space, x)] for y, x in
             sorted(rev.items(), key=lambda kv: space.sort_key(kv[0]))]
    return Report(OK, {"pairs": pairs}, [json.dumps(pairs)])


def cmd_iso_random(args) -> Report:
    space = load_space(args.space)
    rng = random.Random(args.seed)
    if space.is_finite:
        radii = space.value_set()
    else:
        p = space.p
        radii = space.value_set(min(space.weights) / p, max(space.weights) * p)
    tree = random_tree(space, rng, args.depth, radii=radii, resolution_depth=args.depth)
    return Report(OK, {"tree": _tree_json(space, tree)},
                  [json.dumps(_tree_json(space, tree), sort_keys=True)])


def _certificate_json(space, cert, f) -> dict:
    lhs, rhs = cert.sides(space, f)
    out = {"kind": cert.kind, "x": _pt(space, cert.x), "lhs": _pt(space, lhs),
           "rhs": _pt(space, rhs)}
    if cert.y is not None:
        out["y"] = _pt(space, cert.y)
    if cert.scalar is not None:
        out["scalar"] = cert.scalar.to_json()
    return out


def cmd_classify(args) -> Report:
    space = load_space(args.space, allow_zero=True)
    result = classify(space, args.depth)
    data = {"verdict": result.verdict, "case": result.case}
    lines = [f"verdict: {result.verdict}", f"case: {result.case}"]
    if result.verdict == NONLINEAR:
        f = lambda x: apply(space, result.tree, x)  # noqa: E731
        data["tree"] = _tree_json(space, result.tree)
        data["certificate"] = _certificate_json(space, result.certificate, f)
        data["verified_points"] = len(result.domain)
        lines.append("certificate: " + json.dumps(data["certificate"], sort_keys=True))
        lines.append("tree: " + json.dumps(data["tree"], sort_keys=True))
    return Report(OK, data, lines)


def _obstruction_json(ob) -> dict:
    detail = {}
    for k, v in ob.detail.items():
        if isinstance(v, list):
            v = [str(a) for a in v]
        elif isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, tuple):
            v = repr(v)
        detail[k] = v
    return {"reason": ob.reason, "detail": detail}


def _load_spec(path: str):
    data = _read_json(path, "--spec")
    if not isinstance(data, dict):
        raise InputError("--spec: expected a JSON object")
    X = _space_from(data.get("space"), "--spec: space")
    Y = _space_from(data["space2"], "--spec: space2") if "space2" in data else X
    r = parse_radius(data.get("radius"), "--spec: radius")
    r2 = parse_radius(data.get("radius2", data.get("radius")), "--spec: radius2")
    x0 = parse_point(X, json.dumps(data["x0"]), "--spec: x0") if "x0" in data else None
    try:
        if "tree" in data:
            tree = tree_from_json(X, data["tree"])
            spec = SphereIsometrySpec.from_callable(X, Y, r, r2, lambda x: apply(X, tree, x))
        elif "pairs" in data:
            pairs = []
            for k, pr in enumerate(data["pairs"]):
                try:
                    pairs.append((X.point_from_json(pr[0]), Y.point_from_json(pr[1])))
                except (ValueError, TypeError, IndexError, ScalarError) as exc:
                    raise InputError(f"--spec: pairs[{k}]: {exc}") from None
            spec = SphereIsometrySpec.from_pairs(X, Y, r, r2, pairs, data.get("resolution"))
        else:
            raise InputError("--spec: give either pairs or tree")
    except (IsoTreeError, TingleyError) as exc:
        raise InputError(f"--spec: {exc}") from None
    return spec, x0


def cmd_tingley_extend(args) -> Report:
    if args.spec is None:
        raise InputError("--spec is required")
    spec, x0 = _load_spec(args.spec)
    try:
        res = extend_sphere_isometry(spec, x0=x0, m=args.m, depth=args.depth)
    except TingleyError as exc:
        raise InputError(f"--spec: {exc}") from None
    if res.verdict != EXTENDED:
        ob = _obstruction_json(res.obstruction)
        return Report(NEGATIVE, {"verdict": res.verdict, "obstruction": ob},
                      [f"verdict: {res.verdict}", f"reason: {ob['reason']}",
                       "detail: " + json.dumps(ob["detail"], sort_keys=True)])
    X = spec.X
    ext = res.extension
    sphere_dom, _ = spec.sphere_domains(args.depth)
    restricts = all(ext(x) == spec.tau(x) for x in sphere_dom.points)
    ver = res.verification
    passed = ver.passed and restricts
    data = {"verdict": res.verdict, "m": args.m, "depth": args.depth,
            "alpha": ext.alpha.to_json(), "x0": _pt(X, ext.x0),
            "norms": [str(min(res.domain.radii)), str(max(res.domain.radii))],
            "points": len(res.domain), "verified": ver.passed, "reason": ver.reason or None,
            "witness": _witness(X, ext, ver), "restricts_to_tau": restricts}
    lines = [f"verdict: {res.verdict}",
             f"window: norms {data['norms'][0]} .. {data['norms'][1]} ({len(res.domain)} points)",
             f"verified: {ver.passed}", f"restricts to tau: {restricts}"]
    return Report(OK if passed else NEGATIVE, data, lines)


def cmd_tingley_check(args) -> Report:
    X = load_space(args.space)
    Y = load_space(args.space2, "--space2") if args.space2 else X
    r = parse_radius(args.radius)
    r2 = parse_radius(args.radius2, "--radius2") if args.radius2 else r
    try:
        ob = extension_obstruction(X, Y, r, r2)
    except TingleyError as exc:
        raise InputError(str(exc)) from None
    if ob is None:
        return Report(OK, {"obstruction": None}, ["no obstruction"])
    data = {"obstruction": _obstruction_json(ob)}
    return Report(NEGATIVE, data, [f"obstruction: {ob.reason}",
                                   "detail: " + json.dumps(data["obstruction"]["detail"],
                                                           sort_keys=True)])


def _finite_space(args) -> Space:
    space = load_space(args.space)
    if not space.is_finite:
        raise InputError("--space: the oracle needs a finite field")
    return space


def cmd_oracle_census(args) -> Report:
    space = _finite_space(args)
    c = oracle.census(space, cap=args.cap, rng=random.Random(args.seed))
    data = c.to_json()
    lines = [f"total: {c.total if c.total is not None else 'unknown (sampled)'}",
             f"linear: {c.linear}", f"affine: {c.affine}", f"sampled: {c.sampled}"]
    if c.sampled:
        lines.append(f"samples: {c.samples}")
    return Report(OK, data, lines)


def cmd_oracle_enumerate(args) -> Report:
    space = _finite_space(args)
    try:
        maps = oracle.enumerate_centred_isometries(space, cap=args.cap)
    except oracle.CapExceeded as exc:
        return Report(NEGATIVE, {"error": "cap exceeded", "bound": exc.bound, "cap": exc.cap},
                      [str(exc)])
    osp = oracle.OracleSpace.of(space)
    out = [[[list(a), list(b)] for a, b in m.pairs(osp)] for m in maps]
    lines = [f"{len(out)} centred isometries"] + [json.dumps(m) for m in out]
    return Report(OK, {"count": len(out), "maps": out}, lines)


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ultraiso",
                                     description="Isometries of ultrametric normed spaces.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", help="space JSON file")
    common.add_argument("--space2", help="second space JSON file")
    common.add_argument("--iso", action="append", help="isometry JSON file (repeatable)")
    common.add_argument("--spec", help="sphere isometry JSON file")
    common.add_argument("--radius", help="sphere radius, e.g. 1 or 1/3")
    common.add_argument("--radius2", help="radius of the second sphere")
    common.add_argument("--point", help="point as a JSON list")
    common.add_argument("--depth", type=int, default=3)
    common.add_argument("--m", type=int, default=2)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cap", type=int, default=oracle.DEFAULT_CAP)
    common.add_argument("--format", choices=("human", "json"), default="human")

    groups = parser.add_subparsers(dest="group", required=True)

    def add(group_parser, name, func, help_text):
        p = group_parser.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func, command_name=name)
        return p

    sp = groups.add_parser("space", help="describe a space").add_subparsers(dest="cmd", required=True)
    add(sp, "describe", cmd_space_describe, "value set and sphere sizes")

    geo = groups.add_parser("geometry", help="balls and spheres").add_subparsers(dest="cmd", required=True)
    add(geo, "decompose", cmd_geometry_decompose, "classes of a sphere")

    iso = groups.add_parser("iso", help="isometry trees").add_subparsers(dest="cmd", required=True)
    add(iso, "apply", cmd_iso_apply, "image of --point")
    add(iso, "verify", cmd_iso_verify, "check an isometry on the full domain")
    add(iso, "factor", cmd_iso_factor, "tree of a map")
    add(iso, "compose", cmd_iso_compose, "tree of the composition (right to left)")
    add(iso, "invert", cmd_iso_invert, "inverse map")
    add(iso, "random", cmd_iso_random, "seeded random tree")

    cls = groups.add_parser("classify", parents=[common], help="are all centred isometries linear")
    cls.set_defaults(func=cmd_classify, command_name="classify")

    ting = groups.add_parser("tingley", help="sphere isometry extension").add_subparsers(dest="cmd", required=True)
    add(ting, "extend", cmd_tingley_extend, "extend a sphere isometry")
    add(ting, "check", cmd_tingley_check, "obstructions between two spheres")

    orc = groups.add_parser("oracle", help="brute-force ground truth").add_subparsers(dest="cmd", required=True)
    add(orc, "census", cmd_oracle_census, "count centred isometries")
    add(orc, "enumerate", cmd_oracle_enumerate, "list centred isometries")
    return parser


def _command(args) -> str:
    return " ".join(filter(None, [args.group, getattr(args, "cmd", None)
                                  if args.group != "classify" else None]))


def run(args) -> Report:
    try:
        return args.func(args)
    except InputError as exc:
        return Report(MALFORMED, {"error": str(exc)}, [f"error: {exc}"])
    except (NotEnumerable, ScalarError) as exc:
        return Report(MALFORMED, {"error": str(exc)}, [f"error: {exc}"])


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return MALFORMED if exc.code else OK
    report = run(args)
    if args.format == "json":
        payload = {"schema": SCHEMA, "command": _command(args), "status": report.status}
        payload.update(report.data)
        sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    else:
        out = sys.stderr if report.status == MALFORMED else sys.stdout
        out.write("\n".join(report.lines) + "\n")
    return report.status


if __name__ == "__main__":
    sys.exit(main())
