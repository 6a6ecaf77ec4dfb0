"""JSON encodings of the domain types.

Complex entries are ``[re, im]`` pairs and matrices are row-major nested
lists.  Readers also accept plain numbers where a complex entry is expected.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import SchemaViolation


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


def complex_matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def real_matrix_to_json(m):
    return [[float(x) for x in row] for row in np.asarray(m, dtype=float)]


def vector_to_json(v):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return [[float(z.real), float(z.imag)] for z in v]
    return [float(x) for x in v]


def _entry(x, where):
    if isinstance(x, bool):
        raise SchemaViolation(f"{where}: booleans are not numbers")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in x):
        return complex(x[0], x[1])
    raise SchemaViolation(f"{where}: expected a number or [re, im] pair")


def complex_matrix_from_json(obj, where="matrix"):
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise SchemaViolation(f"{where}: expected a non-empty list of rows")
    width = len(obj[0])
    if any(len(r) != width for r in obj):
        raise SchemaViolation(f"{where}: ragged rows")
    return np.array([[_entry(x, where) for x in row] for row in obj], dtype=complex)


def real_matrix_from_json(obj, where="matrix"):
    m = complex_matrix_from_json(obj, where)
    if np.any(m.imag != 0):
        raise SchemaViolation(f"{where}: expected real entries")
    return m.real


def real_vector_from_json(obj, where="vector"):
    if not isinstance(obj, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj):
        raise SchemaViolation(f"{where}: expected a list of numbers")
    return np.array(obj, dtype=float)


def _require(obj, keys, where):
    if not isinstance(obj, dict):
        raise SchemaViolation(f"{where}: expected an object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise SchemaViolation(f"{where}: missing keys {missing}")


def density_to_json(rho):
    return {"dim": rho.dim, "matrix": complex_matrix_to_json(rho.matrix)}


def density_from_json(obj, where="state"):
    from .statespace import DensityOperator
    _require(obj, ["dim", "matrix"], where)
    m = complex_matrix_from_json(obj["matrix"], where + ".matrix")
    if m.shape != (obj["dim"], obj["dim"]):
        raise SchemaViolation(f"{where}: matrix shape {m.shape} does not match dim {obj['dim']}")
    return DensityOperator(m)


def ellipsoid_to_json(e):
    orient = "identity" if e.orientation is None else real_matrix_to_json(e.orientation)
    return {"center": density_to_json(e.center), "radii": [float(r) for r in e.radii],
            "orientation": orient}


def ellipsoid_from_json(obj, where="ellipsoid"):
    from .ellipsoid import StateEllipsoid
    _require(obj, ["center", "radii"], where)
    center = density_from_json(obj["center"], where + ".center")
    radii = real_vector_from_json(obj["radii"], where + ".radii")
    orient = obj.get("orientation", "identity")
    o = None if orient == "identity" else real_matrix_from_json(orient, where + ".orientation")
    return StateEllipsoid(center, radii, o)


def design_to_json(design):
    return {"dim": design.dim, "operators": [complex_matrix_to_json(e) for e in design.operators]}


def design_from_json(obj, where="design"):
    from .tomography import MeasurementDesign
    _require(obj, ["dim", "operators"], where)
    if not isinstance(obj["operators"], list) or not obj["operators"]:
        raise SchemaViolation(f"{where}.operators: expected a non-empty list")
    ops = [complex_matrix_from_json(m, f"{where}.operators[{i}]") for i, m in enumerate(obj["operators"])]
    if any(m.shape != (obj["dim"], obj["dim"]) for m in ops):
        raise SchemaViolation(f"{where}: operator shape does not match dim")
    return MeasurementDesign(np.array(ops))


def outcome_ellipsoid_to_json(oe):
    return {"center": [float(x) for x in oe.center], "shape": real_matrix_to_json(oe.shape)}


def outcome_ellipsoid_from_json(obj, where="outcome_ellipsoid"):
    from .tomography import OutcomeEllipsoid
    _require(obj, ["center", "shape"], where)
    return OutcomeEllipsoid(real_vector_from_json(obj["center"], where + ".center"),
                            real_matrix_from_json(obj["shape"], where + ".shape"))


def posterior_to_json(post):
    return {"dim": post.dim, "mean": density_to_json(post.mean), "cov": real_matrix_to_json(post.cov)}


def posterior_from_json(obj, where="posterior"):
    from .bayes import GaussianPosterior
    _require(obj, ["dim", "mean", "cov"], where)
    mean = density_from_json(obj["mean"], where + ".mean")
    if mean.dim != obj["dim"]:
        raise SchemaViolation(f"{where}: mean dimension does not match dim")
    return GaussianPosterior(mean, real_matrix_from_json(obj["cov"], where + ".cov"))


ENCODING_CONSTANTS = ("eps_sq", "B1", "B2", "R1", "R2", "q", "q_plus", "q_minus", "C1", "C2",
                      "p_value", "gap", "functional_gap", "violation_bound",
                      "violation_bound_literal", "radius_gap", "log10_radius_gap",
                      "equiv_lhs", "equiv_residual")


def encoding_to_json(enc):
    out = {"instance": list(enc.instance.a)}
    for k in ENCODING_CONSTANTS:
        out[k] = _finite(getattr(enc, k))
    out["ellipsoid"] = ellipsoid_to_json(enc.ellipsoid)
    return out


def encoding_from_json(obj, where="encoding"):
    """Rebuild an encoding from its instance and check the stored ellipsoid agrees."""
    from .hardness import encode
    if isinstance(obj, dict) and "result" in obj and isinstance(obj["result"], dict):
        obj = obj["result"].get("encoding", obj["result"])
    _require(obj, ["instance"], where)
    inst = obj["instance"]
    if not isinstance(inst, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in inst):
        raise SchemaViolation(f"{where}.instance: expected a list of integers")
    enc = encode(inst)
    if "ellipsoid" in obj:
        stored = ellipsoid_from_json(obj["ellipsoid"], where + ".ellipsoid")
        if (stored.radii.shape != enc.ellipsoid.radii.shape
                or np.max(np.abs(stored.radii - enc.ellipsoid.radii)) > 1e-12
                or np.max(np.abs(stored.center.matrix - enc.ellipsoid.center.matrix)) > 1e-12):
            raise SchemaViolation(f"{where}: stored ellipsoid does not match the instance")
    return enc


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: invalid JSON ({exc})") from exc


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"
