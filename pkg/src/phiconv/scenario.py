"""JSON scenario files: parsing, dispatch and deterministic report output.

A scenario names one task, the cloud, the family, the field(s) and the task
parameters. :func:`parse_scenario` returns a fully normalised
:class:`ScenarioConfig`; :func:`execute_scenario` runs it and returns a
report dictionary whose serialisation via :func:`dumps` is byte-stable.
See ``docs/scenario-schema.md`` for the format.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from . import bauer, convexity, perturb
from .core import PointCloud, Tolerances
from .errors import NonSeparatingFamily, PhiConvError, ScenarioError
from .families import FunctionFamily, GridSpec, build_family

REPORT_VERSION = "1"

TASKS = ("between", "convexity-check", "extremal", "exposed", "hull", "bauer",
         "common-max", "omega", "perturb", "strong-max", "genericity")

# task -> (required params, optional params, needs "function", needs "functions")
_TASK_PARAMS = {
    "between": (("a", "x", "y"), (), False, False),
    "convexity-check": ((), ("domain",), True, False),
    "extremal": ((), ("domain",), False, False),
    "exposed": ((), ("domain",), False, False),
    "hull": (("A",), ("ambient",), False, False),
    "bauer": ((), ("domain", "check_convexity"), True, False),
    "common-max": ((), ("domain", "check_convexity"), False, True),
    "omega": (("x",), ("domain", "check_convexity"), False, True),
    "perturb": (("epsilon",), ("domain",), True, False),
    "strong-max": (("n",), ("domain",), True, False),
    "genericity": (("epsilon", "samples", "seed"), ("domain", "require_convex"), True, False),
}

_INDEX_PARAMS = ("a", "x", "y")
_INDEX_LIST_PARAMS = ("domain", "A", "ambient")
_BOOL_PARAMS = ("check_convexity", "require_convex")


@dataclass
class ScenarioConfig:
    task: str
    cloud: Dict[str, Any]
    family: Dict[str, Any]
    functions: List[Dict[str, Any]] = field(default_factory=list)
    params: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"task": self.task, "cloud": self.cloud, "family": self.family}
        if _TASK_PARAMS[self.task][2]:
            out["function"] = self.functions[0]
        elif _TASK_PARAMS[self.task][3]:
            out["functions"] = self.functions
        out["params"] = self.params
        out["tolerances"] = self.tolerances
        return out


# -- parsing -----------------------------------------------------------------

def _obj(value, path):
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object")
    return value


def _num(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(path, "expected a finite number")
    return float(value)


def _int(value, path, lo=None):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ScenarioError(path, "expected an integer")
    if lo is not None and value < lo:
        raise ScenarioError(path, f"must be >= {lo}")
    return value


def _vec(value, path, length=None):
    if not isinstance(value, list) or not value:
        raise ScenarioError(path, "expected a nonempty list of numbers")
    out = [_num(v, f"{path}[{i}]") for i, v in enumerate(value)]
    if length is not None and len(out) != length:
        raise ScenarioError(path, f"expected {length} entries, got {len(out)}")
    return out


def _matrix(value, path, rows=None, cols=None):
    if not isinstance(value, list) or not value:
        raise ScenarioError(path, "expected a nonempty list of rows")
    out = [_vec(r, f"{path}[{i}]", cols) for i, r in enumerate(value)]
    width = len(out[0])
    if any(len(r) != width for r in out):
        raise ScenarioError(path, "rows have different lengths")
    if rows is not None and len(out) != rows:
        raise ScenarioError(path, f"expected {rows} rows, got {len(out)}")
    return out


def _grid(value, path):
    g = _obj(value, path)
    out = {"width": _int(g.get("width"), f"{path}.width", 3),
           "height": _int(g.get("height"), f"{path}.height", 3),
           "spacing": _num(g.get("spacing", 1.0), f"{path}.spacing")}
    if out["spacing"] <= 0:
        raise ScenarioError(f"{path}.spacing", "must be positive")
    return out


def _parse_cloud(value):
    c = _obj(value, "cloud")
    if "grid" in c:
        return {"grid": _grid(c["grid"], "cloud.grid")}
    if "points" not in c:
        raise ScenarioError("cloud", "needs 'points' or 'grid'")
    points = _matrix(c["points"], "cloud.points")
    metric = c.get("metric", "euclidean")
    if metric != "euclidean":
        metric = _matrix(metric, "cloud.metric", len(points), len(points))
    return {"points": points, "metric": metric}


def _parse_family(value, cloud):
    fam = _obj(value, "family")
    kind = fam.get("kind")
    if kind == "affine":
        return {"kind": "affine"}
    if kind == "polynomial":
        return {"kind": "polynomial", "degree": _int(fam.get("degree"), "family.degree", 1)}
    if kind == "lipschitz":
        full = fam.get("full", False)
        if not isinstance(full, bool):
            raise ScenarioError("family.full", "expected true or false")
        return {"kind": "lipschitz", "basepoint": _int(fam.get("basepoint", 0), "family.basepoint", 0),
                "full": full}
    if kind == "harmonic":
        if "grid" in fam:
            grid = _grid(fam["grid"], "family.grid")
        elif "grid" in cloud:
            grid = cloud["grid"]
        else:
            raise ScenarioError("family.grid", "harmonic families need a grid")
        if "grid" in cloud and cloud["grid"] != grid:
            raise ScenarioError("family.grid", "cloud/grid mismatch")
        if "points" in cloud:
            nodes = GridSpec(**grid).nodes()
            pts = np.asarray(cloud["points"], dtype=float)
            if pts.shape != nodes.shape or not np.allclose(pts, nodes, rtol=0, atol=1e-12):
                raise ScenarioError("cloud.points", "cloud/grid mismatch")
        return {"kind": "harmonic", "grid": grid}
    raise ScenarioError("family.kind", f"unknown family kind {kind!r}")


def _parse_function(value, path, dim):
    f = _obj(value, path)
    if "values" in f:
        return {"values": _vec(f["values"], f"{path}.values")}
    gen = f.get("type")
    if gen == "constant":
        return {"type": "constant", "value": _num(f.get("value", 0.0), f"{path}.value")}
    if gen == "linear":
        return {"type": "linear", "direction": _vec(f.get("direction"), f"{path}.direction", dim),
                "offset": _num(f.get("offset", 0.0), f"{path}.offset")}
    if gen == "quadratic":
        Q = _matrix(f.get("matrix"), f"{path}.matrix", dim, dim)
        center = _vec(f.get("center", [0.0] * dim), f"{path}.center", dim)
        lin = _vec(f.get("linear", [0.0] * dim), f"{path}.linear", dim)
        return {"type": "quadratic", "matrix": Q, "center": center, "linear": lin,
                "offset": _num(f.get("offset", 0.0), f"{path}.offset")}
    raise ScenarioError(path, "needs 'values' or a 'type' of constant, linear or quadratic")


def _cloud_size_dim(cloud):
    if "grid" in cloud:
        g = cloud["grid"]
        return g["width"] * g["height"], 2
    return len(cloud["points"]), len(cloud["points"][0])


def parse_scenario(text) -> ScenarioConfig:
    """Validate scenario JSON (str or UTF-8 bytes) into a :class:`ScenarioConfig`.

    Raises :class:`ScenarioError` naming the offending key path.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioError("", f"scenario is not UTF-8: {exc}") from None
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"malformed JSON: {exc}") from None
    raw = _obj(raw, "")
    task = raw.get("task")
    if task not in TASKS:
        raise ScenarioError("task", f"unknown task {task!r}")
    cloud = _parse_cloud(raw.get("cloud"))
    family = _parse_family(raw.get("family"), cloud)
    size, dim = _cloud_size_dim(cloud)
    required, optional, one_fn, many_fn = _TASK_PARAMS[task]

    functions = []
    if one_fn:
        if "function" not in raw:
            raise ScenarioError("function", "this task needs a function")
        functions = [_parse_function(raw["function"], "function", dim)]
    elif many_fn:
        fs = raw.get("functions")
        if not isinstance(fs, list) or not fs:
            raise ScenarioError("functions", "expected a nonempty list of functions")
        functions = [_parse_function(f, f"functions[{i}]", dim) for i, f in enumerate(fs)]
    for i, f in enumerate(functions):
        if "values" in f and len(f["values"]) != size:
            raise ScenarioError(f"functions[{i}].values" if many_fn else "function.values",
                                f"expected {size} values")

    params_in = _obj(raw.get("params", {}), "params")
    params = {}
    for key in params_in:
        if key not in required and key not in optional:
            raise ScenarioError(f"params.{key}", f"unknown parameter for task {task!r}")
    for key in required:
        if key not in params_in:
            raise ScenarioError(f"params.{key}", "missing required parameter")
    for key in required + optional:
        if key not in params_in:
            continue
        path = f"params.{key}"
        v = params_in[key]
        if key in _INDEX_PARAMS:
            v = _int(v, path, 0)
            if v >= size:
                raise ScenarioError(path, "index out of range")
        elif key in _INDEX_LIST_PARAMS:
            if not isinstance(v, list) or not v:
                raise ScenarioError(path, "expected a nonempty list of indices")
            v = sorted({_int(i, f"{path}[{k}]", 0) for k, i in enumerate(v)})
            if v[-1] >= size:
                raise ScenarioError(path, "index out of range")
        elif key in _BOOL_PARAMS:
            if not isinstance(v, bool):
                raise ScenarioError(path, "expected true or false")
        elif key == "epsilon":
            v = _num(v, path)
            if not 0.0 < v < 1.0:
                raise ScenarioError(path, "epsilon must lie in (0, 1)", kind="BadEpsilon")
        elif key in ("n", "samples"):
            v = _int(v, path, 1)
        elif key == "seed":
            v = _int(v, path, 0)
        params[key] = v
    if task == "omega" and params["x"] >= size:
        raise ScenarioError("params.x", "index out of range")

    tol_in = _obj(raw.get("tolerances", {}), "tolerances")
    tolerances = {}
    for key, v in tol_in.items():
        if key not in ("lp_feas", "argmax_tie", "unique_gap", "geom_tol"):
            raise ScenarioError(f"tolerances.{key}", "unknown tolerance")
        v = _num(v, f"tolerances.{key}")
        if not 0.0 < v < 1e-3:
            raise ScenarioError(f"tolerances.{key}", "must lie in (0, 1e-3)")
        tolerances[key] = v
    return ScenarioConfig(task, cloud, family, functions, params, tolerances)


def _reject_constant(name):
    raise ScenarioError("", f"non-finite JSON constant {name} is not allowed")


# -- construction ------------------------------------------------------------

def build_cloud(cfg: ScenarioConfig) -> PointCloud:
    if "grid" in cfg.cloud:
        return GridSpec(**cfg.cloud["grid"]).cloud()
    metric = cfg.cloud["metric"]
    return PointCloud(cfg.cloud["points"], metric if metric == "euclidean" else np.array(metric))


def build_scenario_family(cfg: ScenarioConfig, cloud: PointCloud) -> FunctionFamily:
    fam = dict(cfg.family)
    kind = fam.pop("kind")
    if kind == "harmonic":
        return build_family("harmonic", cloud, grid=GridSpec(**fam["grid"]))
    return build_family(kind, cloud, **fam)


def field_values(spec: dict, cloud: PointCloud) -> np.ndarray:
    """Evaluate a function spec on the cloud."""
    if "values" in spec:
        return np.asarray(spec["values"], dtype=float)
    P = cloud.points
    if spec["type"] == "constant":
        return np.full(cloud.size, spec["value"])
    if spec["type"] == "linear":
        return P @ np.asarray(spec["direction"]) + spec["offset"]
    D = P - np.asarray(spec["center"])
    Q = np.asarray(spec["matrix"])
    return np.einsum("ij,jk,ik->i", D, Q, D) + P @ np.asarray(spec["linear"]) + spec["offset"]


# -- execution ---------------------------------------------------------------

class _ReplayFailed(PhiConvError):
    kind = "ReplayFailed"


def _exposure_json(cert):
    if cert is None:
        return None
    return {"point": cert.point, "coefficients": [float(v) for v in cert.coefficients],
            "margin": cert.margin}


def _witness_json(w):
    return {"point": w.point, "maxValues": list(w.max_values),
            "exposure": _exposure_json(w.exposure), "functionsChecked": w.functions_checked}


def _run_task(cfg, cloud, family, fields, tol):
    p = cfg.params
    dom = p.get("domain")
    task = cfg.task
    warn = None
    if task == "between":
        cert = convexity.is_between(p["a"], p["x"], p["y"], family, tol)
        if not convexity.replay_betweenness(cert, p["a"], p["x"], p["y"], family, tol):
            raise _ReplayFailed("betweenness witness failed replay")
        w = None if cert.witness is None else [float(v) for v in cert.witness]
        return {"result": cert.result, "witness": w}, warn
    if task == "convexity-check":
        ok, triple = convexity.is_phi_convex(fields[0], dom, family, tol)
        return {"convex": ok, "violation": None if triple is None else list(triple)}, warn
    if task == "extremal":
        return {"points": list(convexity.phi_extremal_points(dom, family, tol))}, warn
    if task == "exposed":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NonSeparatingFamily)
            certs = convexity.phi_exposed_points(dom, family, tol)
        for w in caught:
            if issubclass(w.category, NonSeparatingFamily):
                warn = (NonSeparatingFamily.kind, str(w.message))
        for c in certs:
            if not convexity.replay_exposure(c, family, tol):
                raise _ReplayFailed(f"exposure certificate for {c.point} failed replay")
        return {"certificates": [_exposure_json(c) for c in certs]}, warn
    if task == "hull":
        return {"hull": list(convexity.phi_convex_hull(p["A"], p.get("ambient"), family, tol))}, warn
    if task in ("bauer", "common-max", "omega"):
        check = p.get("check_convexity", True)
        if task == "bauer":
            w = bauer.bauer_witness(fields[0], dom, family, tol, check)
        elif task == "common-max":
            w = bauer.common_extremal_maximizer(fields, dom, family, tol, check)
        else:
            w = bauer.omega_cone_witness(p["x"], fields, dom, family, tol, check)
        if not bauer.replay_witness(w, fields, dom, family, tol):
            raise _ReplayFailed("witness failed replay")
        if w.exposure is not None and not convexity.replay_exposure(w.exposure, family, tol):
            raise _ReplayFailed("witness exposure failed replay")
        return _witness_json(w), warn
    if task == "perturb":
        r = perturb.perturb_to_unique_max(fields[0], dom, family, p["epsilon"], tol)
        g = fields[0] + family.basis.T @ r.coefficients
        winner, gap = perturb.top_gap(g, convexity.as_index_set(dom, cloud.size))
        if winner != r.unique_point or gap < tol.unique_gap or not r.rho_distance < p["epsilon"]:
            raise _ReplayFailed("perturbation failed replay")
        return {"coefficients": [float(v) for v in r.coefficients], "rhoDistance": r.rho_distance,
                "uniquePoint": r.unique_point, "gap": r.gap}, warn
    if task == "strong-max":
        return {"point": perturb.has_strong_max(fields[0], dom, p["n"], cloud, tol)}, warn
    if task == "genericity":
        rep = perturb.genericity_estimate(fields[0], dom, family, p["epsilon"], p["samples"],
                                          p["seed"], tol, p.get("require_convex", True))
        payload = {"samples": rep.samples, "uniqueFraction": rep.unique_fraction,
                   "extremalFraction": rep.extremal_fraction, "seed": rep.seed,
                   "epsilon": rep.epsilon}
        return payload, warn, rep.rows
    raise AssertionError(task)


def execute_scenario(cfg: ScenarioConfig) -> dict:
    """Run a parsed scenario and return the report dictionary.

    Library errors become ``status.state == "error"`` with their ``kind``;
    genericity runs attach per-sample rows under the private key ``_rows``.
    """
    tol = Tolerances(**cfg.tolerances)
    report = {"version": REPORT_VERSION, "task": cfg.task, "status": {"state": "ok"},
              "payload": None, "tolerances": _tol_json(tol), "scenario": cfg.to_json()}
    try:
        cloud = build_cloud(cfg)
        family = build_scenario_family(cfg, cloud)
        fields = [field_values(f, cloud) for f in cfg.functions]
        out = _run_task(cfg, cloud, family, fields, tol)
    except PhiConvError as exc:
        report["status"] = {"state": "error", "kind": exc.kind, "detail": str(exc)}
        return report
    payload, warn = out[0], out[1]
    report["payload"] = payload
    if warn is not None:
        report["status"] = {"state": "warning", "kind": warn[0], "detail": warn[1]}
    if len(out) > 2:
        report["_rows"] = out[2]
    return report


def error_report(exc: PhiConvError) -> dict:
    return {"version": REPORT_VERSION, "task": None,
            "status": {"state": "error", "kind": exc.kind, "detail": str(exc)},
            "payload": None, "tolerances": _tol_json(Tolerances()), "scenario": None}


def _tol_json(tol):
    return {"lp_feas": tol.lp_feas, "argmax_tie": tol.argmax_tie,
            "unique_gap": tol.unique_gap, "geom_tol": tol.geom_tol}


# -- serialisation -----------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for k, (key, v) in enumerate(obj.items()):
            out.append(pad + json.dumps(str(key)) + ": ")
            _encode(v, indent, level + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            parts = []
            for v in obj:
                buf = []
                _encode(v, indent, level + 1, buf)
                parts.append("".join(buf))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for k, v in enumerate(obj):
            out.append(pad)
            _encode(v, indent, level + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: insertion key order, floats at 17 significant digits,
    non-finite floats as ``null``."""
    out: List[str] = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def serialize_scenario(cfg: ScenarioConfig) -> str:
    return dumps(cfg.to_json())


def csv_rows(rows) -> str:
    lines = ["sample,unique,argmax,extremal"]
    lines += [f"{k},{u},{a},{e}" for k, u, a, e in rows]
    return "\n".join(lines) + "\n"
