"""Problem and solution documents, plus SVG/OFF export.

Documents carry ``"schema": "dmk/1"``.  Floats are written with 17
significant digits so that every double round-trips exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from .measures import dual_curvature_measure
from .polytope import DirectionWeightMeasure, HPolytope, build_hpolytope
from .solver import SolveOptions, sphere_cells
from .star import Ball, StarBody, star_from_dict

SCHEMA = "dmk/1"

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 2}
_matrix = {"type": "array", "items": _vector, "minItems": 1}

STAR_SCHEMA: dict = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["ball", "ellipsoid", "polytope_gauge", "radial_table", "linear_image"]},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "matrix": _matrix,
        "normals": _matrix,
        "offsets": {"type": "array", "items": {"type": "number"}},
        "directions": _matrix,
        "values": {"type": "array", "items": {"type": "number"}},
        "base": {"type": "object"},
    },
}

MEASURE_SCHEMA: dict = {
    "oneOf": [
        {
            "type": "object",
            "required": ["type", "normals", "weights"],
            "properties": {
                "type": {"const": "discrete"},
                "normals": _matrix,
                "weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
            },
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["type", "family", "resolution"],
            "properties": {
                "type": {"const": "density"},
                "family": {"enum": ["constant", "affine", "cell_samples"]},
                "value": {"type": "number", "minimum": 0},
                "constant": {"type": "number"},
                "linear": {"type": "array", "items": {"type": "number"}},
                "samples": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "resolution": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
    ]
}

PROBLEM_SCHEMA: dict = {
    "type": "object",
    "required": ["schema", "dimension", "p", "q", "measure"],
    "properties": {
        "schema": {"const": SCHEMA},
        "dimension": {"type": "integer", "minimum": 2},
        "p": {"type": "number"},
        "q": {"type": "number", "exclusiveMinimum": 0},
        "measure": MEASURE_SCHEMA,
        "star_body": STAR_SCHEMA,
        "options": {
            "type": "object",
            "properties": {
                "max_iters": {"type": "integer", "minimum": 1},
                "grad_tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "armijo_c": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "armijo_shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "offset_floor": {"type": "number", "exclusiveMinimum": 0},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer"},
                "metric": {"enum": ["lbfgs", "scaled", "euclidean"]},
            },
            "additionalProperties": False,
        },
    },
}

SOLUTION_SCHEMA: dict = {
    "type": "object",
    "required": ["schema", "kind", "dimension", "p", "q", "normals", "offsets", "vertices",
                 "Cq", "Cpq", "Vq", "quadrature_rtol", "report", "version", "input_hash"],
    "properties": {
        "schema": {"const": SCHEMA},
        "kind": {"const": "solution"},
        "normals": _matrix,
        "offsets": {"type": "array", "items": {"type": "number"}},
    },
}


class SchemaError(ValueError):
    """A document does not match its JSON schema."""


def _validate(doc: Any, schema: dict) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{where}: {exc.message}") from None


# -- serialization ---------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _emit(obj, out: list[str], indent: int, level: int) -> None:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    if isinstance(obj, float):
        # JSON has no NaN/inf; those mark undefined quantities.
        out.append(format(obj, ".17g") if math.isfinite(obj) else "null")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for j, (k, v) in enumerate(obj.items()):
            out.append(("," if j else "") + pad + json.dumps(k) + (": " if indent else ":"))
            _emit(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        flat = all(not isinstance(v, (list, dict)) for v in obj)
        out.append("[")
        for j, v in enumerate(obj):
            out.append(("," if j else "") + ("" if flat else pad))
            _emit(v, out, indent, level + 1)
        out.append(("" if flat else end) + "]")
    else:
        out.append(json.dumps(obj))


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and NaN as null."""
    out: list[str] = []
    _emit(_plain(obj), out, indent, 0)
    return "".join(out)


def _sorted(obj):
    if isinstance(obj, dict):
        return {k: _sorted(obj[k]) for k in sorted(obj)}
    if isinstance(obj, list):
        return [_sorted(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Compact JSON with keys sorted at every level."""
    return dumps(_sorted(_plain(obj)), indent=0)


def input_hash(problem: dict) -> str:
    return hashlib.sha256(canonical_json(problem).encode()).hexdigest()


def load_json(path: str) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


# -- problems --------------------------------------------------------------

def density_function(desc: dict, dim: int):
    family = desc["family"]
    if family == "constant":
        value = float(desc.get("value", 1.0))
        return lambda u: np.full(len(u), value)
    if family == "affine":
        c0 = float(desc.get("constant", 1.0))
        lin = np.asarray(desc.get("linear", [0.0] * dim), dtype=float)
        if lin.shape != (dim,):
            raise SchemaError("measure/linear: length must equal the dimension")
        return lambda u: c0 + u @ lin
    raise SchemaError(f"measure/family: {family!r} has no closed form")


@dataclass
class ProblemSpec:
    dim: int
    p: float
    q: float
    measure: DirectionWeightMeasure
    star_body: StarBody
    options: SolveOptions
    density: Any = None
    resolution: int | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def input_hash(self) -> str:
        return input_hash(self.raw)


def discrete_measure_from(desc: dict, dim: int) -> tuple[DirectionWeightMeasure, Any]:
    """Measure (and density callable, if any) described by a measure block."""
    if desc["type"] == "discrete":
        normals = np.asarray(desc["normals"], dtype=float)
        weights = np.asarray(desc["weights"], dtype=float)
        if normals.ndim != 2 or normals.shape[1] != dim:
            raise SchemaError("measure/normals: rows must have the problem dimension")
        if len(weights) != len(normals):
            raise SchemaError("measure/weights: need one weight per normal")
        return DirectionWeightMeasure(normals, weights), None
    from .solver import discretize_density

    res = int(desc["resolution"])
    if desc["family"] == "cell_samples":
        dirs, _, areas = sphere_cells(dim, res, lambda u: np.ones(len(u)))
        samples = np.asarray(desc.get("samples", []), dtype=float)
        if samples.shape != (len(dirs),):
            raise SchemaError(f"measure/samples: expected {len(dirs)} cell values")
        keep = samples > 0
        return DirectionWeightMeasure(dirs[keep], samples[keep] * areas[keep]), None
    f = density_function(desc, dim)
    return discretize_density(f, dim, res), f


def parse_problem(doc: dict) -> ProblemSpec:
    """Validate a problem document and build its objects."""
    _validate(doc, PROBLEM_SCHEMA)
    dim = int(doc["dimension"])
    star = doc.get("star_body", {"kind": "ball", "radius": 1.0})
    try:
        Q = star_from_dict(star, dim)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"star_body: {exc}") from None
    if Q.dim != dim:
        raise SchemaError("star_body: dimension mismatch")
    measure, density = discrete_measure_from(doc["measure"], dim)
    options = SolveOptions(**doc.get("options", {}))
    res = doc["measure"].get("resolution")
    return ProblemSpec(dim, float(doc["p"]), float(doc["q"]), measure, Q, options,
                       density, res, doc)


# -- solutions -------------------------------------------------------------

@dataclass
class SolutionDoc:
    dim: int
    p: float
    q: float
    normals: np.ndarray
    offsets: np.ndarray
    vertices: np.ndarray
    Cq: np.ndarray
    Cpq: np.ndarray
    Vq: float
    quadrature_rtol: float
    star_body: dict
    report: dict
    input_hash: str
    normalized: bool = False
    version: str = __version__

    @classmethod
    def build(cls, P: HPolytope, Q: StarBody, p: float, q: float, report: dict, problem_hash: str,
              rtol: float = 1e-9, normalized: bool = False) -> "SolutionDoc":
        m = dual_curvature_measure(P, Q, q, p, rtol=rtol)
        return cls(P.dim, p, q, P.normals, P.offsets, P.vpolytope().vertices, m.per_normal_Cq,
                   m.per_normal_Cpq, m.Vq, rtol, Q.to_dict(), report, problem_hash, normalized)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": "solution",
            "dimension": self.dim,
            "p": self.p,
            "q": self.q,
            "normalized": self.normalized,
            "normals": self.normals,
            "offsets": self.offsets,
            "vertices": self.vertices,
            "Cq": self.Cq,
            "Cpq": self.Cpq,
            "Vq": self.Vq,
            "quadrature_rtol": self.quadrature_rtol,
            "star_body": self.star_body,
            "report": self.report,
            "version": self.version,
            "input_hash": self.input_hash,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SolutionDoc":
        _validate(doc, SOLUTION_SCHEMA)
        arr = lambda key: np.asarray([np.nan if v is None else v for v in doc[key]], dtype=float)
        return cls(int(doc["dimension"]), float(doc["p"]), float(doc["q"]),
                   np.asarray(doc["normals"], dtype=float), arr("offsets"),
                   np.asarray(doc["vertices"], dtype=float), arr("Cq"), arr("Cpq"),
                   float(doc["Vq"]), float(doc["quadrature_rtol"]), doc.get("star_body", {}),
                   doc["report"], doc["input_hash"], bool(doc.get("normalized", False)),
                   doc["version"])

    def polytope(self) -> HPolytope:
        return build_hpolytope(self.normals, self.offsets)

    def reverify(self) -> float:
        """Largest relative gap between stored atoms and atoms recomputed from offsets."""
        Q = star_from_dict(self.star_body, self.dim) if self.star_body else Ball(1.0, self.dim)
        m = dual_curvature_measure(self.polytope(), Q, self.q, rtol=self.quadrature_rtol)
        ref = np.maximum(np.abs(self.Cq), 1e-300)
        gaps = np.abs(m.per_normal_Cq - self.Cq)
        return float(np.max(np.where(self.Cq > 0, gaps / ref, gaps / max(m.Vq, 1e-300))))


# -- meshes ----------------------------------------------------------------

def _polygon_cycle(P: HPolytope) -> np.ndarray:
    vp = P.vpolytope()
    c = vp.vertices.mean(axis=0)
    ang = np.arctan2(vp.vertices[:, 1] - c[1], vp.vertices[:, 0] - c[0])
    return vp.vertices[np.argsort(ang)]


def svg_text(P: HPolytope, atoms=None, size: int = 400, margin: float = 0.08) -> str:
    """Polygon outline with the origin marked.

    With ``atoms`` each facet also gets its outer normal, drawn from the facet
    midpoint with length proportional to the atom.
    """
    if P.dim != 2:
        raise ValueError("SVG export is only defined in the plane")
    pts = _polygon_cycle(P)
    lo = np.minimum(pts.min(axis=0), 0.0)
    hi = np.maximum(pts.max(axis=0), 0.0)
    span = float(np.max(hi - lo)) or 1.0
    arrows = []
    if atoms is not None:
        atoms = np.nan_to_num(np.asarray(atoms, dtype=float), nan=0.0)
        top = float(np.max(atoms)) if len(atoms) else 0.0
        for f in P.vpolytope().facets:
            a = atoms[f.normal_index]
            if top > 0 and a > 0:
                mid = f.simplices[0].mean(axis=0)
                arrows.append((mid, mid + 0.25 * span * a / top * P.normals[f.normal_index]))
        for _, tip in arrows:
            lo, hi = np.minimum(lo, tip), np.maximum(hi, tip)
        span = float(np.max(hi - lo)) or 1.0
    s = size * (1 - 2 * margin) / span

    def xy(v):
        return (size * margin + (v[0] - lo[0]) * s, size * (1 - margin) - (v[1] - lo[1]) * s)

    path = " ".join(f"{x:.6f},{y:.6f}" for x, y in map(xy, pts))
    ox, oy = xy(np.zeros(2))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'  <polygon points="{path}" fill="#dde6f3" stroke="#1f3b73" stroke-width="1.5"/>',
    ]
    for a, b in arrows:
        (x1, y1), (x2, y2) = xy(a), xy(b)
        lines.append(f'  <line x1="{x1:.6f}" y1="{y1:.6f}" x2="{x2:.6f}" y2="{y2:.6f}" '
                     'stroke="#2e7d32" stroke-width="1.2"/>')
    lines.append(f'  <circle cx="{ox:.6f}" cy="{oy:.6f}" r="3" fill="#b22222"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def off_text(P: HPolytope) -> str:
    """OFF mesh with one polygon per facet, vertices ordered counterclockwise from outside."""
    if P.dim != 3:
        raise ValueError("OFF export is for polytopes in R^3")
    vp = P.vpolytope()
    faces = []
    for f in vp.facets:
        idx = np.asarray(f.vertex_indices)
        pts = vp.vertices[idx]
        u = P.normals[f.normal_index]
        c = pts.mean(axis=0)
        a = np.cross(u, [1.0, 0, 0] if abs(u[0]) < 0.9 else [0, 1.0, 0])
        a /= np.linalg.norm(a)
        b = np.cross(u, a)
        order = np.argsort(np.arctan2((pts - c) @ b, (pts - c) @ a))
        faces.append(idx[order])
    lines = ["OFF", f"{len(vp.vertices)} {len(faces)} 0"]
    lines += [" ".join(format(x, ".17g") for x in v) for v in vp.vertices]
    lines += [" ".join(str(int(i)) for i in [len(fc), *fc]) for fc in faces]
    return "\n".join(lines) + "\n"
