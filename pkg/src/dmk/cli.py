"""``dmk`` command line: validate, eval, solve, oracle, approx.

Exit codes: 0 success, 1 malformed input, 2 invalid measure (``validate``
reports a hemisphere witness this way), 3 not converged, 4 p = q without
``--normalized``, 5 measure on a closed hemisphere while solving, 6 other
geometric failure, 7 any other library error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .errors import DmkError, GeometryError, MeasureOnHemisphere, NotConverged, PEqualsQ
from .io import (
    SCHEMA,
    SchemaError,
    SolutionDoc,
    density_function,
    dumps,
    input_hash,
    load_json,
    off_text,
    parse_problem,
    svg_text,
    write_json,
)
from .measures import dual_curvature_measure
from .oracle import mc_dual_curvature, mc_dual_intrinsic_volume
from .polytope import build_hpolytope, validate_measure
from .solver import SolveOptions, solve, solve_density, solve_normalized
from .star import Ball, StarBody, star_from_dict

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_MEASURE = 2
EXIT_NOT_CONVERGED = 3
EXIT_P_EQUALS_Q = 4
EXIT_HEMISPHERE = 5
EXIT_GEOMETRY = 6
EXIT_OTHER = 7

log = logging.getLogger("dmk")


def parse_star(text: str | None, dim: int, default: StarBody | None = None) -> StarBody:
    """``ball``, ``ball:R``, a JSON object, or ``@path`` to a JSON file."""
    if text is None:
        return default if default is not None else Ball(1.0, dim)
    if text.startswith("@"):
        desc = load_json(text[1:])
    elif text.lstrip().startswith("{"):
        desc = json.loads(text)
    elif text.startswith("ball"):
        _, _, r = text.partition(":")
        return Ball(float(r) if r else 1.0, dim)
    else:
        raise SchemaError(f"--Q: cannot parse {text!r}")
    return star_from_dict(desc, dim)


def _emit(obj, out: str | None) -> None:
    if out:
        write_json(out, obj)
    else:
        sys.stdout.write(dumps(obj) + "\n")


def _load_polytope(path: str):
    doc = load_json(path)
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise SchemaError(f'{path}: expected "schema": "{SCHEMA}"')
    if "normals" not in doc or "offsets" not in doc:
        raise SchemaError(f"{path}: polytope needs normals and offsets")
    return build_hpolytope(doc["normals"], doc["offsets"]), doc


def _options(args, base: SolveOptions) -> SolveOptions:
    kw = dict(vars(base))
    if args.rtol is not None:
        kw["rtol"] = args.rtol
    if args.max_iters is not None:
        kw["max_iters"] = args.max_iters
    if args.seed is not None:
        kw["seed"] = args.seed
    return SolveOptions(**kw)


def cmd_validate(args) -> int:
    spec = parse_problem(load_json(args.problem))
    test = validate_measure(spec.measure)
    doc = {"schema": SCHEMA, "kind": "validation", "valid": bool(test.valid),
           "dimension": spec.dim, "atoms": len(spec.measure), "total_mass": spec.measure.total,
           "input_hash": spec.input_hash}
    if not test.valid:
        doc["witness"] = test.witness.tolist()
        witness = np.round(test.witness, 12).tolist()
        print(f"dmk: measure is concentrated on a closed hemisphere (witness {witness})",
              file=sys.stderr)
    _emit(doc, args.out)
    return EXIT_OK if test.valid else EXIT_MEASURE


def cmd_eval(args) -> int:
    P, doc = _load_polytope(args.polytope)
    Q = parse_star(args.Q, P.dim, star_from_dict(doc["star_body"], P.dim)
                   if "star_body" in doc else None)
    q = args.q if args.q is not None else doc.get("q")
    p = args.p if args.p is not None else doc.get("p", 0.0)
    if q is None:
        raise SchemaError("eval needs --q")
    rtol = args.rtol if args.rtol is not None else 1e-9
    m = dual_curvature_measure(P, Q, float(q), float(p or 0.0), rtol=rtol)
    _emit({"schema": SCHEMA, "kind": "evaluation", "q": q, "p": p, "Cq": m.per_normal_Cq,
           "Cpq": m.per_normal_Cpq, "Vq": m.Vq, "quadrature_error_estimate":
           m.quadrature_error_estimate, "quadrature_rtol": rtol}, args.out)
    return EXIT_OK


def _write_mesh(P, args, atoms=None) -> None:
    if args.svg:
        if P.dim == 2:
            with open(args.svg, "w", encoding="utf-8") as fh:
                fh.write(svg_text(P, atoms))
        else:
            log.warning("--svg ignored: SVG export is only available for n = 2")
    if args.off:
        with open(args.off, "w", encoding="utf-8") as fh:
            fh.write(off_text(P))


def cmd_solve(args) -> int:
    raw = load_json(args.problem)
    spec = parse_problem(raw)
    p = args.p if args.p is not None else spec.p
    q = args.q if args.q is not None else spec.q
    Q = parse_star(args.Q, spec.dim, spec.star_body)
    opts = _options(args, spec.options)
    if p == q and not args.normalized:
        raise PEqualsQ("p = q: rerun with --normalized for the normalized problem")
    try:
        if args.normalized:
            P, report = solve_normalized(spec.measure, Q, p, q, opts)
        else:
            P, report = solve(spec.measure, Q, p, q, opts)
    except NotConverged as exc:
        if exc.polytope is not None and args.out:
            doc = SolutionDoc.build(exc.polytope, Q, p, q, exc.report.to_dict(),
                                    input_hash(raw), opts.rtol, args.normalized)
            write_json(args.out, doc.to_dict())
        raise
    doc = SolutionDoc.build(P, Q, p, q, report.to_dict(), input_hash(raw), opts.rtol,
                            args.normalized)
    _emit(doc.to_dict(), args.out)
    _write_mesh(P, args, doc.Cpq if not args.normalized else doc.Cq)
    return EXIT_OK


def cmd_oracle(args) -> int:
    P, doc = _load_polytope(args.polytope)
    Q = parse_star(args.Q, P.dim, star_from_dict(doc["star_body"], P.dim)
                   if "star_body" in doc else None)
    q = args.q if args.q is not None else doc.get("q")
    if q is None:
        raise SchemaError("oracle needs --q")
    q = float(q)
    seed = args.seed if args.seed is not None else 0
    rtol = args.rtol if args.rtol is not None else 1e-9
    m = dual_curvature_measure(P, Q, q, rtol=rtol)
    total = mc_dual_intrinsic_volume(P, Q, q, N=args.samples, seed=seed)
    atoms = mc_dual_curvature(P, Q, q, N=args.samples, seed=seed)
    inside = [e.within(v) for e, v in zip(atoms, m.per_normal_Cq)]
    _emit({"schema": SCHEMA, "kind": "oracle", "q": q, "samples": args.samples, "seed": seed,
           "Vq_quadrature": m.Vq, "Vq_mc": total.value, "Vq_stderr": total.stderr,
           "Vq_within_3sigma": total.within(m.Vq), "Cq_quadrature": m.per_normal_Cq,
           "Cq_mc": [e.value for e in atoms], "Cq_stderr": [e.stderr for e in atoms],
           "Cq_within_3sigma": inside, "coverage": float(np.mean(inside))}, args.out)
    return EXIT_OK


def cmd_approx(args) -> int:
    raw = load_json(args.problem)
    spec = parse_problem(raw)
    desc = raw["measure"]
    if desc["type"] != "density":
        raise SchemaError("measure: approx needs a density measure")
    f = density_function(desc, spec.dim)
    p = args.p if args.p is not None else spec.p
    q = args.q if args.q is not None else spec.q
    Q = parse_star(args.Q, spec.dim, spec.star_body)
    resolutions = args.resolutions or [desc["resolution"]]
    result = solve_density(f, spec.dim, Q, p, q, resolutions, _options(args, spec.options))
    summary = result.summary()
    summary.update({"schema": SCHEMA, "kind": "approximation", "p": p, "q": q,
                    "input_hash": input_hash(raw),
                    "offsets": [P.offsets for P in result.polytopes]})
    _emit(summary, args.out)
    _write_mesh(result.polytopes[-1], args, None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dmk {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, exponents=True):
        if exponents:
            sp.add_argument("--p", type=float)
            sp.add_argument("--q", type=float)
        sp.add_argument("--Q", help="star body: ball, ball:R, JSON object or @file.json")
        sp.add_argument("--out", help="write JSON here instead of stdout")
        sp.add_argument("--rtol", type=float, help="quadrature tolerance")
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("validate", help="check a problem file and its measure")
    sp.add_argument("problem")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("eval", help="dual curvature atoms of a polytope")
    sp.add_argument("polytope")
    common(sp)
    sp.set_defaults(func=cmd_eval)

    for name, func, helptext in (("solve", cmd_solve, "solve a discrete problem"),
                                 ("approx", cmd_approx, "solve discretizations of a density")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("problem")
        common(sp)
        sp.add_argument("--max-iters", type=int)
        sp.add_argument("--svg", help="write the 2-D solution as SVG")
        sp.add_argument("--off", help="write the 3-D solution as an OFF mesh")
        if name == "solve":
            sp.add_argument("--normalized", action="store_true",
                            help="solve the normalized problem (allows p = q)")
        else:
            sp.add_argument("--resolutions", type=int, nargs="+")
        sp.set_defaults(func=func)

    sp = sub.add_parser("oracle", help="Monte-Carlo check of the quadrature")
    sp.add_argument("polytope")
    common(sp, exponents=False)
    sp.add_argument("--q", type=float)
    sp.add_argument("--samples", type=int, default=1_000_000)
    sp.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not hasattr(args, "max_iters"):
        args.max_iters = None
    try:
        return args.func(args)
    except (SchemaError, json.JSONDecodeError, OSError) as exc:
        print(f"dmk: invalid input: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except MeasureOnHemisphere as exc:
        witness = None if exc.witness is None else np.round(exc.witness, 12).tolist()
        print(f"dmk: {exc} (witness {witness})", file=sys.stderr)
        return EXIT_HEMISPHERE
    except NotConverged as exc:
        print(f"dmk: not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except PEqualsQ as exc:
        print(f"dmk: {exc}", file=sys.stderr)
        return EXIT_P_EQUALS_Q
    except GeometryError as exc:
        print(f"dmk: geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except DmkError as exc:
        print(f"dmk: {exc}", file=sys.stderr)
        return EXIT_OTHER
    except ValueError as exc:
        print(f"dmk: invalid measure or arguments: {exc}", file=sys.stderr)
        return EXIT_MEASURE


if __name__ == "__main__":
    sys.exit(main())
