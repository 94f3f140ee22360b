"""JSON problem and process files, and the deterministic report emitter.

Problem document::

    {
      "grid": {"a": 0, "b": 2, "N": 64},
      "dynamics": {"A": [[0]], "B": [[1]]},
      "state_constraint": {"d": [-1], "e": 0},              # optional
      "running_cost": [{"gradients": [[1, 0]], "offsets": [0]}],
      "endpoint_cost": [...],                                # optional
      "control_set": {"C": [[1], [-1]], "d": [1, 1]},
      "endpoint_set": {"C": [[1, 0], [-1, 0]], "d": [1, -1]},
      "weierstrass_samples": [[-1], [1]]                     # optional
    }

``A``, ``B``, ``d`` and ``e`` may carry a leading per-node axis.
``running_cost``, ``control_set`` and ``weierstrass_samples`` may be wrapped
as ``{"per_node": [...]}`` with one entry per interval.  Cost terms are
max-affine functions over ``(x, u)`` (running) or ``(x_a, x_b)`` (endpoint).

Process document: ``{"x": [[...], ...], "u": [[...], ...]}`` with an
optional ``"cost"`` that is ignored on input.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .model import Grid, LcProblem, MaxAffine, Polytope, Process, PwaSum


class MalformedInput(ValueError):
    pass


PROBLEM_FIELDS = {"grid", "dynamics", "state_constraint", "running_cost", "endpoint_cost",
                  "control_set", "endpoint_set", "weierstrass_samples"}
REQUIRED_FIELDS = {"grid", "dynamics", "running_cost", "control_set", "endpoint_set"}


def _check_keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise MalformedInput(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise MalformedInput(f"{where}: unknown field(s) {unknown}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise MalformedInput(f"{where}: missing field(s) {missing}")


def _array(value, where, ndim=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"{where}: not a numeric array ({exc})") from None
    if ndim is not None and arr.ndim not in ndim:
        raise MalformedInput(f"{where}: expected {' or '.join(map(str, ndim))}-D data, "
                             f"got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MalformedInput(f"{where}: non-finite entries")
    return arr


def _term(obj, where) -> MaxAffine:
    _check_keys(obj, {"gradients", "offsets"}, {"gradients", "offsets"}, where)
    G = _array(obj["gradients"], where + ".gradients", (2,))
    c = _array(obj["offsets"], where + ".offsets", (1,))
    if G.shape[0] != c.size or G.shape[0] == 0:
        raise MalformedInput(f"{where}: need one offset per gradient and at least one piece")
    return MaxAffine(G, c)


def _cost(obj, dim, where) -> PwaSum:
    if not isinstance(obj, list):
        raise MalformedInput(f"{where}: expected a list of max-affine terms")
    terms = [_term(t, f"{where}[{i}]") for i, t in enumerate(obj)]
    for i, t in enumerate(terms):
        if t.dim != dim:
            raise MalformedInput(f"{where}[{i}]: argument dimension {t.dim}, expected {dim}")
    return PwaSum(terms, dim)


def _polytope(obj, dim, where) -> Polytope:
    _check_keys(obj, {"C", "d"}, {"C", "d"}, where)
    C = _array(obj["C"], where + ".C", (2,))
    d = _array(obj["d"], where + ".d", (1,))
    if C.shape != (d.size, dim) and not (d.size == 0 and C.size == 0):
        raise MalformedInput(f"{where}: C has shape {C.shape}, expected ({d.size}, {dim})")
    return Polytope(C.reshape(d.size, dim), d)


def _per_node(obj, count, parse, where):
    if isinstance(obj, dict) and "per_node" in obj:
        _check_keys(obj, {"per_node"}, {"per_node"}, where)
        items = obj["per_node"]
        if not isinstance(items, list) or len(items) != count:
            raise MalformedInput(f"{where}.per_node: expected {count} entries")
        return tuple(parse(v, f"{where}.per_node[{i}]") for i, v in enumerate(items))
    return parse(obj, where)


def problem_from_dict(doc: dict, grid_override: int | None = None) -> LcProblem:
    _check_keys(doc, PROBLEM_FIELDS, REQUIRED_FIELDS, "problem")
    g = doc["grid"]
    _check_keys(g, {"a", "b", "N"}, {"a", "b", "N"}, "grid")
    try:
        grid = Grid(float(g["a"]), float(g["b"]), g["N"])
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"grid: {exc}") from None
    dyn = doc["dynamics"]
    _check_keys(dyn, {"A", "B"}, {"A", "B"}, "dynamics")
    A = _array(dyn["A"], "dynamics.A", (2, 3))
    B = _array(dyn["B"], "dynamics.B", (2, 3))
    n, m = A.shape[-1], B.shape[-1]
    N = grid.N
    state = None
    if "state_constraint" in doc:
        sc = doc["state_constraint"]
        _check_keys(sc, {"d", "e"}, {"d", "e"}, "state_constraint")
        state = (_array(sc["d"], "state_constraint.d", (1, 2)),
                 _array(sc["e"], "state_constraint.e", (0, 1)))
    running = _per_node(doc["running_cost"], N, lambda o, w: _cost(o, n + m, w), "running_cost")
    controls = _per_node(doc["control_set"], N, lambda o, w: _polytope(o, m, w), "control_set")
    endpoint_set = _polytope(doc["endpoint_set"], 2 * n, "endpoint_set")
    endpoint = _cost(doc["endpoint_cost"], 2 * n, "endpoint_cost") if "endpoint_cost" in doc else None
    samples = None
    if "weierstrass_samples" in doc:
        samples = _per_node(doc["weierstrass_samples"], N,
                            lambda o, w: _array(o, w, (2,)), "weierstrass_samples")
    try:
        problem = LcProblem(grid, A, B, running, controls, endpoint_set, endpoint, state, samples)
    except ValueError as exc:
        raise MalformedInput(f"problem: {exc}") from None
    if grid_override is not None and grid_override != N:
        try:
            problem = problem.regrid(grid_override)
        except ValueError as exc:
            raise MalformedInput(f"--grid: {exc}") from None
    return problem


def process_from_dict(doc: dict) -> Process:
    _check_keys(doc, {"x", "u", "cost"}, {"x", "u"}, "process")
    return Process(_array(doc["x"], "process.x", (1, 2)), _array(doc["u"], "process.u", (1, 2)))


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise MalformedInput(f"{path}: {exc.strerror}") from None


def load_problem(path, grid_override: int | None = None) -> LcProblem:
    return problem_from_dict(_load(path), grid_override)


def load_process(path) -> Process:
    return process_from_dict(_load(path))


def _terms_to_list(cost: PwaSum) -> list:
    return [{"gradients": t.gradients.tolist(), "offsets": t.offsets.tolist()} for t in cost.terms]


def problem_to_dict(problem: LcProblem) -> dict:
    """Inverse of :func:`problem_from_dict`; collapses node-constant data."""
    def collapse(arr):
        return arr[0].tolist() if np.all(arr == arr[0]) else arr.tolist()

    g = problem.grid
    doc = {"grid": {"a": g.a, "b": g.b, "N": g.N},
           "dynamics": {"A": collapse(problem.A), "B": collapse(problem.B)}}
    if problem.has_state_constraint:
        doc["state_constraint"] = {"d": collapse(problem.D), "e": collapse(problem.E)}
    if all(r is problem.running[0] for r in problem.running):
        doc["running_cost"] = _terms_to_list(problem.running[0])
    else:
        doc["running_cost"] = {"per_node": [_terms_to_list(r) for r in problem.running]}
    poly = [{"C": U.C.tolist(), "d": U.d.tolist()} for U in problem.controls]
    doc["control_set"] = poly[0] if all(p == poly[0] for p in poly) else {"per_node": poly}
    doc["endpoint_set"] = {"C": problem.endpoint_set.C.tolist(), "d": problem.endpoint_set.d.tolist()}
    if problem.endpoint.terms:
        doc["endpoint_cost"] = _terms_to_list(problem.endpoint)
    samples = [s.tolist() for s in problem.samples]
    doc["weierstrass_samples"] = samples[0] if all(s == samples[0] for s in samples) \
        else {"per_node": samples}
    return doc


def process_to_dict(process: Process, cost: float | None = None) -> dict:
    doc = {"x": process.x.tolist(), "u": process.u.tolist()}
    if cost is not None:
        doc["cost"] = cost
    return doc


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return "null"
        text = f"{v:.17g}"
        return text if any(c in text for c in ".en") else text + ".0"
    return json.dumps(str(obj))


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits; non-finite floats become null."""
    return _encode(obj, indent, 0) + "\n"
