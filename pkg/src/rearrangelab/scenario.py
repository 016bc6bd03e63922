"""Declarative scenarios: JSON literals for grids, bodies, functions, operators and checks.

Parsing normalizes every literal, so ``parse(serialize(parse(x))) == parse(x)``.
Objects are built on demand; function literals become *recipes* (callables
``grid -> GridFunction``) so that checks can rebuild them on refined grids.

Randomness: every random literal carries a local ``seed``; its generator is
``numpy.random.default_rng([scenario_seed, local_seed])`` (PCG64).  Nothing
else draws random numbers.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import convex as CV
from . import gridfn as G
from . import rearrange as R
from . import verify as V
from . import young as Y
from .grid import Grid, GridError, GridFunction, GridSet

VERDICTS = (V.HOLDS, V.VIOLATED, V.EXPECTED)


class ScenarioError(ValueError):
    """Malformed scenario; ``path`` points at the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def _need(cond, path, msg):
    if not cond:
        raise ScenarioError(path, msg)


def _num(x, path, positive=False):
    _need(isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x), path, "expected a number")
    if positive:
        _need(x > 0, path, "must be positive")
    return float(x)


def _int(x, path):
    _need(isinstance(x, int) and not isinstance(x, bool), path, "expected an integer")
    return x


def _vec(x, path, dim=None):
    _need(isinstance(x, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x),
          path, "expected a list of numbers")
    if dim is not None:
        _need(len(x) == dim, path, f"expected {dim} coordinates")
    return [float(v) for v in x]


def _single(lit, path, kinds):
    _need(isinstance(lit, dict) and len(lit) == 1, path, f"expected a one-key object, one of {sorted(kinds)}")
    (k, v), = lit.items()
    _need(k in kinds, path, f"unknown kind {k!r}; expected one of {sorted(kinds)}")
    return k, v


def _keys(v, path, allowed, required=()):
    _need(isinstance(v, dict), path, "expected an object")
    for k in v:
        _need(k in allowed, f"{path}.{k}", "unknown field")
    for k in required:
        _need(k in v, f"{path}.{k}", "missing field")


# ---- normalization -------------------------------------------------------------------

BODY_KINDS = {"ball", "polytope", "square", "square_of_area", "hexagon_of_area", "regular_polygon",
              "phi_body"}


def norm_body(lit, path, names=()):
    if isinstance(lit, str):
        _need(lit in names, path, f"unresolved body name {lit!r}")
        return lit
    k, v = _single(lit, path, BODY_KINDS)
    p = f"{path}.{k}"
    if k == "ball":
        _keys(v, p, {"center", "radius"}, ("radius",))
        c = _vec(v.get("center", [0.0, 0.0]), f"{p}.center")
        _need(1 <= len(c) <= 3, f"{p}.center", "dimension must be 1, 2 or 3")
        return {"ball": {"center": c, "radius": _num(v["radius"], f"{p}.radius", True)}}
    if k == "polytope":
        _keys(v, p, {"vertices"}, ("vertices",))
        _need(isinstance(v["vertices"], list) and len(v["vertices"]) >= 2, f"{p}.vertices", "need vertices")
        vs = [_vec(row, f"{p}.vertices[{i}]") for i, row in enumerate(v["vertices"])]
        _need(len({len(r) for r in vs}) == 1, f"{p}.vertices", "ragged vertex list")
        try:
            CV.ConvexBody.polytope(vs)
        except (CV.ConvexBodyError, ValueError) as e:
            raise ScenarioError(f"{p}.vertices", str(e)) from None
        return {"polytope": {"vertices": vs}}
    if k == "square":
        _keys(v, p, {"half_side"}, ("half_side",))
        return {"square": {"half_side": _num(v["half_side"], f"{p}.half_side", True)}}
    if k in ("square_of_area", "hexagon_of_area"):
        return {k: _num(v, p, True)}
    if k == "regular_polygon":
        _keys(v, p, {"k", "circumradius", "phase"}, ("k",))
        n = _int(v["k"], f"{p}.k")
        _need(n >= 3, f"{p}.k", "need at least 3 vertices")
        return {k: {"k": n, "circumradius": _num(v.get("circumradius", 1.0), f"{p}.circumradius", True),
                    "phase": _num(v.get("phase", 0.0), f"{p}.phase")}}
    _keys(v, p, {"phi", "K", "M"}, ("phi", "K", "M"))
    return {k: {"phi": norm_young(v["phi"], f"{p}.phi"), "K": norm_body(v["K"], f"{p}.K", names),
                "M": _num(v["M"], f"{p}.M", True)}}


YOUNG_KINDS = {"power", "sqrt_shift", "piecewise", "phi_min", "phi_max", "truncated", "conjugate"}


def norm_young(lit, path):
    _need(isinstance(lit, dict) and lit, path, "expected a Young-function literal")
    if "power" in lit:
        _keys(lit, path, {"power", "coef"})
        out = {"power": _num(lit["power"], f"{path}.power")}
        _need(out["power"] >= 1, f"{path}.power", "exponent must be at least 1")
        if "coef" in lit:
            out["coef"] = _num(lit["coef"], f"{path}.coef", True)
        return out
    if "piecewise" in lit:
        _keys(lit, path, {"piecewise", "tail_slope"})
        kn = [_vec(k, f"{path}.piecewise[{i}]", 2) for i, k in enumerate(lit["piecewise"])]
        ts = lit.get("tail_slope")
        return {"piecewise": kn, "tail_slope": None if ts is None else _num(ts, f"{path}.tail_slope")}
    k, v = _single(lit, path, YOUNG_KINDS)
    if k in ("sqrt_shift", "phi_min", "phi_max"):
        _need(v is True, f"{path}.{k}", "expected true")
        return {k: True}
    if k == "truncated":
        _keys(v, f"{path}.{k}", {"base", "r"}, ("base", "r"))
        return {k: {"base": norm_young(v["base"], f"{path}.{k}.base"), "r": _num(v["r"], f"{path}.{k}.r", True)}}
    return {k: norm_young(v, f"{path}.{k}")}


SET_KINDS = {"ball", "body", "blob", "superlevel", "union"}


def norm_set(lit, path, names):
    if isinstance(lit, str):
        _need(lit in names["sets"], path, f"unresolved set name {lit!r}")
        return lit
    k, v = _single(lit, path, SET_KINDS)
    p = f"{path}.{k}"
    if k == "ball":
        _keys(v, p, {"radius", "center"}, ("radius",))
        out = {"radius": _num(v["radius"], f"{p}.radius", True)}
        if "center" in v:
            out["center"] = _vec(v["center"], f"{p}.center")
        return {k: out}
    if k == "body":
        _keys(v, p, {"body", "scale", "center"}, ("body",))
        out = {"body": norm_body(v["body"], f"{p}.body", names["bodies"]),
               "scale": _num(v.get("scale", 1.0), f"{p}.scale", True)}
        if "center" in v:
            out["center"] = _vec(v["center"], f"{p}.center")
        return {k: out}
    if k == "blob":
        _keys(v, p, {"seed", "k", "spread", "rmin", "rmax"}, ("seed",))
        return {k: {"seed": _int(v["seed"], f"{p}.seed"), "k": _int(v.get("k", 5), f"{p}.k"),
                    "spread": _num(v.get("spread", 0.6), f"{p}.spread", True),
                    "rmin": _num(v.get("rmin", 0.2), f"{p}.rmin", True),
                    "rmax": _num(v.get("rmax", 0.45), f"{p}.rmax", True)}}
    if k == "superlevel":
        _keys(v, p, {"function", "level"}, ("function", "level"))
        return {k: {"function": norm_function(v["function"], f"{p}.function", names),
                    "level": _num(v["level"], f"{p}.level")}}
    _need(isinstance(v, list) and v, p, "expected a nonempty list")
    return {k: [norm_set(s, f"{p}[{i}]", names) for i, s in enumerate(v)]}


FUNCTION_KINDS = {"cone", "bump", "indicator", "sum", "samples", "random"}


def norm_function(lit, path, names):
    if isinstance(lit, str):
        _need(lit in names["functions"], path, f"unresolved function name {lit!r}")
        return lit
    k, v = _single(lit, path, FUNCTION_KINDS)
    p = f"{path}.{k}"
    if k == "cone":
        _keys(v, p, {"body", "height", "center", "scale"}, ("body",))
        out = {"body": norm_body(v["body"], f"{p}.body", names["bodies"]),
               "height": _num(v.get("height", 1.0), f"{p}.height", True),
               "scale": _num(v.get("scale", 1.0), f"{p}.scale", True)}
        if "center" in v:
            out["center"] = _vec(v["center"], f"{p}.center")
        return {k: out}
    if k == "bump":
        _keys(v, p, {"center", "radius", "height"})
        out = {"radius": _num(v.get("radius", 1.0), f"{p}.radius", True),
               "height": _num(v.get("height", 1.0), f"{p}.height", True)}
        if "center" in v:
            out["center"] = _vec(v["center"], f"{p}.center")
        return {k: out}
    if k == "indicator":
        if isinstance(v, dict) and "set" in v:
            _keys(v, p, {"set", "height"})
            return {k: {"set": norm_set(v["set"], f"{p}.set", names),
                        "height": _num(v.get("height", 1.0), f"{p}.height", True)}}
        return {k: {"set": norm_set(v, p, names), "height": 1.0}}
    if k == "sum":
        _need(isinstance(v, list) and v, p, "expected a nonempty list")
        return {k: [norm_function(x, f"{p}[{i}]", names) for i, x in enumerate(v)]}
    if k == "samples":
        arr = np.asarray(v, dtype=object)
        try:
            a = np.asarray(v, dtype=float)
        except (TypeError, ValueError):
            raise ScenarioError(p, "expected a rectangular array of numbers") from None
        _need(a.ndim in (1, 2, 3) and np.all(np.isfinite(a)) and np.all(a >= 0), p,
              "expected a finite nonnegative array")
        del arr
        return {k: a.tolist()}
    _keys(v, p, {"seed", "radius", "levels"}, ("seed",))
    out = {"seed": _int(v["seed"], f"{p}.seed"), "radius": _num(v.get("radius", 0.8), f"{p}.radius", True)}
    if "levels" in v:
        out["levels"] = _int(v["levels"], f"{p}.levels")
    return {k: out}


OPERATOR_KINDS = {"sym_decreasing", "schwarz", "steiner", "k_schwarz", "polarization", "composite", "identity"}


def norm_operator(lit, path, names):
    if isinstance(lit, str):
        _need(lit in names["operators"], path, f"unresolved operator name {lit!r}")
        return lit
    k, v = _single(lit, path, OPERATOR_KINDS)
    p = f"{path}.{k}"
    if k in ("sym_decreasing", "schwarz"):
        _keys(v, p, {"center"})
        c = v.get("center")
        if c is not None:
            _need(isinstance(c, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in c),
                  f"{p}.center", "center is a list of integer cell offsets")
        return {k: {"center": c}}
    if k == "steiner":
        _keys(v, p, {"axis", "center"})
        return {k: {"axis": _int(v.get("axis", 0), f"{p}.axis"), "center": _int(v.get("center", 0), f"{p}.center")}}
    if k == "k_schwarz":
        _keys(v, p, {"body"}, ("body",))
        return {k: {"body": norm_body(v["body"], f"{p}.body", names["bodies"])}}
    if k == "polarization":
        _keys(v, p, {"axis", "offset", "positive_side"}, ("offset",))
        off = _num(v["offset"], f"{p}.offset")
        _need(abs(2 * off - round(2 * off)) < 1e-12 and round(2 * off) % 2 == 1, f"{p}.offset",
              "offset must be a half-integer")
        side = v.get("positive_side", "+")
        _need(side in ("+", "-"), f"{p}.positive_side", "expected '+' or '-'")
        return {k: {"axis": _int(v.get("axis", 0), f"{p}.axis"), "offset": off, "positive_side": side}}
    if k == "identity":
        _keys(v, p, set())
        return {k: {}}
    _need(isinstance(v, list) and v, p, "expected a nonempty list")
    return {k: [norm_operator(x, f"{p}[{i}]", names) for i, x in enumerate(v)]}


# argument kinds per check; "list:" prefixes accept one value or a list
CHECKS: dict[str, dict[str, str]] = {
    "check_equimeasurable": {"T": "operator", "f": "function"},
    "check_lp_contraction": {"T": "operator", "f": "function", "g": "function", "p": "number"},
    "check_crz": {"T": "operator", "f": "function", "g": "function", "F": "bivariate"},
    "check_smoothing": {"T": "operator", "A": "list:set", "K": "body", "d": "number"},
    "check_modulus_reduction": {"T": "operator", "f": "list:function", "K": "body", "d_list": "numbers",
                                "r": "number", "R": "number"},
    "check_polya_szego": {"T": "operator", "f": "function", "phi": "young", "K": "body", "p_inf": "bool",
                          "level": "number", "C": "number"},
    "check_energy_equality": {"T": "operator", "f": "function", "phi": "young", "K": "body", "C": "number"},
    "check_isoperimetric": {"T": "operator", "K_test": "body", "blobs": "int", "seed": "int",
                            "rel_tol": "number"},
    "check_subgraph_core": {"T": "operator", "f": "function", "a": "number", "d": "number", "C": "body"},
    "check_content_formula": {"f": "function", "a": "number", "C": "body", "rel_tol": "number",
                              "expected": "number"},
    "check_polarization_flow": {"f": "function", "steps": "int", "seed": "int"},
    "counterexample_exaug721": {"p_list": "numbers", "shift": "number"},
    "counterexample_exmay205": {"d": "number", "shift": "number"},
}

REQUIRED = {
    "check_equimeasurable": ("T", "f"), "check_lp_contraction": ("T", "f", "g", "p"),
    "check_crz": ("T", "f", "g", "F"), "check_smoothing": ("T", "A", "K", "d"),
    "check_modulus_reduction": ("T", "f", "K", "d_list"), "check_polya_szego": ("T", "f", "phi"),
    "check_energy_equality": ("T", "f", "phi"), "check_isoperimetric": ("T", "K_test"),
    "check_subgraph_core": ("T", "f", "a", "d"), "check_content_formula": ("f", "a", "C"),
    "check_polarization_flow": ("f", "steps", "seed"), "counterexample_exaug721": (),
    "counterexample_exmay205": ("d",),
}

BIVARIATE = {"product", "min", "neg_abs_power"}


def _norm_arg(kind, x, path, names):
    if kind.startswith("list:"):
        sub = kind[5:]
        if isinstance(x, list):
            _need(x, path, "empty list")
            return [_norm_arg(sub, y, f"{path}[{i}]", names) for i, y in enumerate(x)]
        return _norm_arg(sub, x, path, names)
    if kind == "operator":
        return norm_operator(x, path, names)
    if kind == "function":
        return norm_function(x, path, names)
    if kind == "set":
        return norm_set(x, path, names)
    if kind == "body":
        return norm_body(x, path, names["bodies"])
    if kind == "young":
        return norm_young(x, path)
    if kind == "number":
        return _num(x, path)
    if kind == "int":
        return _int(x, path)
    if kind == "bool":
        _need(isinstance(x, bool), path, "expected true or false")
        return x
    if kind == "numbers":
        _need(isinstance(x, list) and x, path, "expected a nonempty list of numbers")
        return _vec(x, path)
    if kind == "bivariate":
        k, v = _single(x, path, BIVARIATE)
        if k == "neg_abs_power":
            return {k: _num(v, f"{path}.{k}", True)}
        _need(v is True, f"{path}.{k}", "expected true")
        return {k: True}
    raise AssertionError(kind)


def norm_grid(lit, path):
    _keys(lit, path, {"h", "extent", "dim"}, ("h", "extent"))
    out = {"h": _num(lit["h"], f"{path}.h", True), "extent": _num(lit["extent"], f"{path}.extent", True),
           "dim": _int(lit.get("dim", 2), f"{path}.dim")}
    try:
        Grid.from_extent(out["h"], out["extent"], out["dim"])
    except GridError as e:
        raise ScenarioError(path, str(e)) from None
    return out


def norm_check(lit, path, names):
    _keys(lit, path, {"check", "args", "expect", "tolerance", "grid", "label"}, ("check", "expect"))
    name = lit["check"]
    _need(name in CHECKS, f"{path}.check", f"unknown check {name!r}")
    exp = lit["expect"]
    _need(exp in VERDICTS, f"{path}.expect", f"expected one of {list(VERDICTS)}")
    if exp == V.EXPECTED:
        _need(name in V.COUNTEREXAMPLE_CHECKS, f"{path}.expect",
              f"{name} has no registered counterexample")
    args = lit.get("args", {})
    _keys(args, f"{path}.args", set(CHECKS[name]), REQUIRED[name])
    out = {"check": name, "expect": exp,
           "args": {k: _norm_arg(CHECKS[name][k], v, f"{path}.args.{k}", names) for k, v in sorted(args.items())}}
    tol = lit.get("tolerance", {})
    _keys(tol, f"{path}.tolerance", {"C", "rel_tol"})
    for k, v in tol.items():
        _need(k in CHECKS[name], f"{path}.tolerance.{k}", f"{name} has no tolerance {k!r}")
        out["args"][k] = _num(v, f"{path}.tolerance.{k}", True)
    if "grid" in lit:
        out["grid"] = norm_grid(lit["grid"], f"{path}.grid")
    if "label" in lit:
        _need(isinstance(lit["label"], str), f"{path}.label", "expected a string")
        out["label"] = lit["label"]
    return out


@dataclass
class Scenario:
    name: str
    seed: int
    grid: dict
    bodies: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    operators: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"name": self.name, "seed": self.seed, "grid": self.grid, "bodies": self.bodies,
                "sets": self.sets, "functions": self.functions, "operators": self.operators,
                "checks": self.checks}


def parse(data) -> Scenario:
    """Validate and normalize a scenario given as a dict or JSON text."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"line {e.lineno} column {e.colno}", e.msg) from None
    _keys(data, "$", {"name", "seed", "grid", "bodies", "sets", "functions", "operators", "checks"},
          ("grid", "checks"))
    names = {k: set(data.get(k, {}) or {}) for k in ("bodies", "sets", "functions", "operators")}
    for k in names:
        _need(isinstance(data.get(k, {}), dict), f"$.{k}", "expected an object of named literals")
    bodies = {n: norm_body(v, f"$.bodies.{n}", ()) for n, v in sorted(data.get("bodies", {}).items())}
    sets = {n: norm_set(v, f"$.sets.{n}", names) for n, v in sorted(data.get("sets", {}).items())}
    funcs = {n: norm_function(v, f"$.functions.{n}", names) for n, v in sorted(data.get("functions", {}).items())}
    ops = {n: norm_operator(v, f"$.operators.{n}", names) for n, v in sorted(data.get("operators", {}).items())}
    _need(isinstance(data["checks"], list), "$.checks", "expected a list")
    checks = [norm_check(c, f"$.checks[{i}]", names) for i, c in enumerate(data["checks"])]
    name = data.get("name", "scenario")
    _need(isinstance(name, str), "$.name", "expected a string")
    return Scenario(name, _int(data.get("seed", 0), "$.seed"), norm_grid(data["grid"], "$.grid"),
                    bodies, sets, funcs, ops, checks)


def serialize(s: Scenario) -> str:
    return json.dumps(s.to_dict(), indent=2, sort_keys=True)


def load(path) -> Scenario:
    with open(path) as fh:
        return parse(fh.read())


# ---- building objects ---------------------------------------------------------------


class Builder:
    """Turns normalized literals into objects, resolving names against a scenario."""

    def __init__(self, sc: Scenario):
        self.sc = sc

    def rng(self, local_seed: int) -> np.random.Generator:
        return np.random.default_rng([self.sc.seed, local_seed])

    def grid(self, lit=None) -> Grid:
        g = lit or self.sc.grid
        return Grid.from_extent(g["h"], g["extent"], g["dim"])

    def body(self, lit) -> CV.ConvexBody:
        if isinstance(lit, str):
            return self.body(self.sc.bodies[lit])
        (k, v), = lit.items()
        if k == "ball":
            return CV.ConvexBody.ball(v["center"], v["radius"])
        if k == "polytope":
            return CV.ConvexBody.polytope(v["vertices"])
        if k == "square":
            return CV.square(v["half_side"])
        if k == "square_of_area":
            return CV.square_of_area(v)
        if k == "hexagon_of_area":
            return CV.hexagon_of_area(v)
        if k == "regular_polygon":
            return CV.regular_polygon(v["k"], v["circumradius"], v["phase"])
        return Y.build_phi_body(self.young(v["phi"]), self.body(v["K"]), v["M"])

    def young(self, lit) -> Y.YoungFunction:
        if "power" in lit:
            return Y.Power(lit["power"], lit.get("coef", 1.0))
        if "piecewise" in lit:
            return Y.PiecewiseLinear(tuple(tuple(k) for k in lit["piecewise"]), lit["tail_slope"])
        (k, v), = lit.items()
        if k == "sqrt_shift":
            return Y.SqrtShift()
        if k == "phi_min":
            return Y.PhiMin()
        if k == "phi_max":
            return Y.PhiMax()
        if k == "truncated":
            return Y.Truncated(self.young(v["base"]), v["r"])
        return Y.conjugate(self.young(v))

    def set(self, lit, grid: Grid) -> GridSet:
        if isinstance(lit, str):
            return self.set(self.sc.sets[lit], grid)
        (k, v), = lit.items()
        if k == "ball":
            return G.ball_set(grid, v["radius"], v.get("center"))
        if k == "body":
            return G.body_set(grid, self.body(v["body"]), v["scale"], v.get("center"))
        if k == "blob":
            return V.random_blob(grid, self.rng(v["seed"]), v["k"], v["spread"], v["rmin"], v["rmax"])
        if k == "superlevel":
            f = self.function(v["function"])(grid)
            return GridSet(grid, f.values >= v["level"])
        mask = np.zeros(grid.shape, bool)
        for s in v:
            mask |= self.set(s, grid).mask
        return GridSet(grid, mask)

    def function(self, lit):
        """A recipe ``grid -> GridFunction``."""
        if isinstance(lit, str):
            return self.function(self.sc.functions[lit])
        (k, v), = lit.items()
        if k == "cone":
            K = self.body(v["body"])
            return lambda g: G.cone(g, K, v["height"], v.get("center"), v["scale"])
        if k == "bump":
            return lambda g: G.bump(g, v.get("center"), v["radius"], v["height"])
        if k == "indicator":
            return lambda g: self.set(v["set"], g).indicator(v["height"])
        if k == "sum":
            parts = [self.function(x) for x in v]
            return lambda g: G.add(*[p(g) for p in parts])
        if k == "samples":
            arr = np.asarray(v, float)

            def samples(g):
                if arr.shape != g.shape:
                    raise GridError(f"sample array of shape {arr.shape} on a grid of shape {g.shape}")
                return GridFunction(g, arr)
            return samples

        def random_fn(g):
            rng = self.rng(v["seed"])
            vals = rng.random(g.shape)
            if "levels" in v:
                vals = np.ceil(vals * v["levels"]) / v["levels"]
            r = np.linalg.norm(g.centers(), axis=-1)
            return GridFunction(g, np.where(r <= v["radius"], vals, 0.0))
        return random_fn

    def operator(self, lit) -> R.Rearrangement:
        if isinstance(lit, str):
            return self.operator(self.sc.operators[lit])
        (k, v), = lit.items()
        if k in ("sym_decreasing", "schwarz"):
            cls = R.SymDecreasing if k == "sym_decreasing" else R.Schwarz
            return cls(None if v["center"] is None else tuple(v["center"]))
        if k == "steiner":
            return R.Steiner(v["axis"], v["center"])
        if k == "k_schwarz":
            return R.KSchwarz(self.body(v["body"]))
        if k == "polarization":
            return R.Polarization(v["axis"], v["offset"], v["positive_side"])
        if k == "identity":
            return R.Identity()
        return R.Composite(tuple(self.operator(x) for x in v))


def _bivariate(lit):
    (k, v), = lit.items()
    if k == "product":
        return (lambda s, t: s * t), "st"
    if k == "min":
        return np.minimum, "min(s,t)"
    return (lambda s, t: -np.abs(s - t) ** v), f"-|s-t|^{v:g}"


def run_check(b: Builder, chk: dict) -> list:
    """Execute one normalized check entry; returns a list of reports."""
    name, a = chk["check"], dict(chk["args"])
    grid = b.grid(chk.get("grid"))
    expect = chk["expect"] == V.EXPECTED
    ev = {"expect_violation": True} if expect and name in ("check_smoothing", "check_modulus_reduction") else {}

    def fn(x):
        return [b.function(y)(grid) for y in x] if isinstance(x, list) else b.function(x)(grid)

    if name == "check_equimeasurable":
        return [V.check_equimeasurable(b.operator(a["T"]), fn(a["f"]))]
    if name == "check_lp_contraction":
        p = a["p"]
        return [V.check_lp_contraction(b.operator(a["T"]), fn(a["f"]), fn(a["g"]),
                                       lambda t: np.abs(t) ** p, f"|t|^{p:g}")]
    if name == "check_crz":
        F, label = _bivariate(a["F"])
        return [V.check_crz(b.operator(a["T"]), fn(a["f"]), fn(a["g"]), F, label, seed=b.sc.seed)]
    if name == "check_smoothing":
        A = a["A"]
        sets = [b.set(s, grid) for s in A] if isinstance(A, list) else b.set(A, grid)
        return [V.check_smoothing(b.operator(a["T"]), sets, b.body(a["K"]), a["d"], **ev)]
    if name == "check_modulus_reduction":
        return [V.check_modulus_reduction(b.operator(a["T"]), fn(a["f"]), b.body(a["K"]), a["d_list"],
                                          a.get("r"), a.get("R"), **ev)]
    if name in ("check_polya_szego", "check_energy_equality"):
        kw = {"K": b.body(a["K"]) if "K" in a else None}
        if "C" in a:
            kw["C"] = a["C"]
        if name == "check_polya_szego":
            kw.update(p_inf=a.get("p_inf", False), level=a.get("level"))
            return [V.check_polya_szego(b.operator(a["T"]), b.function(a["f"]), b.young(a["phi"]), grid, **kw)]
        return [V.check_energy_equality(b.operator(a["T"]), b.function(a["f"]), b.young(a["phi"]), grid, **kw)]
    if name == "check_isoperimetric":
        kw = {k: a[k] for k in ("blobs", "rel_tol") if k in a}
        return [V.check_isoperimetric(b.operator(a["T"]), b.body(a["K_test"]), grid,
                                      seed=int(b.rng(a.get("seed", 0)).integers(2**31)), **kw)]
    if name == "check_subgraph_core":
        C = b.body(a["C"]) if "C" in a else None
        return [V.check_subgraph_core(b.operator(a["T"]), fn(a["f"]), a["a"], a["d"], C)]
    if name == "check_content_formula":
        kw = {k: a[k] for k in ("rel_tol", "expected") if k in a}
        return [V.check_content_formula(fn(a["f"]), a["a"], b.body(a["C"]), **kw)]
    if name == "check_polarization_flow":
        return [V.check_polarization_flow(fn(a["f"]), a["steps"], a["seed"])]
    if name == "counterexample_exaug721":
        return V.counterexample_exaug721(grid, tuple(a.get("p_list", (1, 2))), a.get("shift", 0.3))
    return [V.counterexample_exmay205(grid, a["d"], a.get("shift", 0.5))]


def with_overrides(sc: Scenario, h: float | None = None, seed: int | None = None) -> Scenario:
    """Copy of ``sc`` with a new base spacing and/or seed; per-check grids are rescaled alike."""
    out = copy.deepcopy(sc)
    if seed is not None:
        out.seed = int(seed)
    if h is not None:
        factor = h / sc.grid["h"]
        out.grid = norm_grid({**sc.grid, "h": h}, "--h-override")
        for i, c in enumerate(out.checks):
            if "grid" in c:
                c["grid"] = norm_grid({**c["grid"], "h": c["grid"]["h"] * factor}, f"--h-override (check {i})")
    return out


# ---- the Lipschitz battery ----------------------------------------------------------

_B2 = {"ball": {"center": [0.0, 0.0], "radius": 1.0}}
_SQ = {"square": {"half_side": 1.0}}
_HEX = {"hexagon_of_area": float(np.pi)}

BATTERY: dict[str, Any] = {
    "cone": {"cone": {"body": _B2}},
    "cone_off": {"cone": {"body": _B2, "center": [0.3, -0.2], "scale": 0.8}},
    "tent_square": {"cone": {"body": _SQ, "center": [-0.2, 0.1], "scale": 0.7}},
    "tent_hexagon": {"cone": {"body": _HEX, "center": [0.25, 0.25], "scale": 0.6, "height": 0.8}},
    "bump": {"bump": {"center": [0.1, 0.2], "radius": 0.9}},
    "bump_flat": {"bump": {"radius": 1.2, "height": 0.5}},
    "two_bumps": {"sum": [{"bump": {"center": [-0.5, 0.0], "radius": 0.6}},
                          {"bump": {"center": [0.5, 0.3], "radius": 0.7, "height": 0.6}}]},
    "cone_plus_bump": {"sum": [{"cone": {"body": _B2, "center": [-0.4, -0.3], "scale": 0.6, "height": 0.5}},
                               {"bump": {"center": [0.5, 0.4], "radius": 0.6, "height": 0.8}}]},
    "two_tents": {"sum": [{"cone": {"body": _SQ, "center": [0.6, -0.5], "scale": 0.4}},
                          {"cone": {"body": _B2, "center": [-0.5, 0.5], "scale": 0.5, "height": 0.7}}]},
    "three_pieces": {"sum": [{"cone": {"body": _HEX, "center": [0.0, -0.5], "scale": 0.4, "height": 0.6}},
                             {"bump": {"center": [-0.5, 0.4], "radius": 0.5, "height": 0.9}},
                             {"bump": {"center": [0.55, 0.45], "radius": 0.4, "height": 0.4}}]},
}


def battery_recipes() -> dict:
    """Name -> recipe for the fixed Lipschitz battery (no scenario needed)."""
    b = Builder(Scenario("battery", 0, {"h": 1.0, "extent": 1.0, "dim": 2}))
    return {k: b.function(norm_function(v, k, {"functions": set(), "bodies": set(), "sets": set()}))
            for k, v in BATTERY.items()}
