"""JSON problem configurations and the four built-in examples."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import ExpressionSyntaxError, MaslovError, NotSymmetric, ValidationError
from .expr import parse_expression
from .problem import Problem, Settings
from .shooting import Potential

# config key -> Settings field
OVERRIDES = {"s0": "s0", "lambdaInf": "lambda_inf", "steps": "steps", "meshN": "mesh", "samples": "samples",
             "cushion": "cushion"}
SYMMETRIZE = (None, "upper", "average")


@dataclass
class Config:
    n: int
    potential: list
    alpha1: list
    alpha2: list
    beta1: list
    beta2: list
    run: str = "report"
    overrides: dict = field(default_factory=dict)
    symmetrize: str | None = None
    outputs: dict = field(default_factory=dict)
    name: str = "config"

    def to_dict(self) -> dict:
        d = {"n": self.n, "potential": self.potential, "alpha1": self.alpha1, "alpha2": self.alpha2,
             "beta1": self.beta1, "beta2": self.beta2, "run": self.run, "name": self.name}
        if self.symmetrize:
            d["symmetrize"] = self.symmetrize
        if self.outputs:
            d["outputs"] = self.outputs
        d.update(self.overrides)
        return d


def _matrix(d: dict, key: str, n: int) -> list:
    if key not in d:
        raise ValidationError(f"{key}-present", f"missing {key!r}")
    try:
        a = np.array(d[key], dtype=float)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{key}-numeric", str(e)) from e
    if a.shape != (n, n):
        raise ValidationError(f"{key}-shape", f"{key} must be {n}x{n}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{key}-finite", f"{key} has non-finite entries")
    return a.tolist()


def config_from_dict(d: dict, name: str = "config") -> Config:
    if not isinstance(d, dict):
        raise ValidationError("config-object", "configuration must be a JSON object")
    n = d.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= 16:
        raise ValidationError("n-range", "n must be an integer between 1 and 16")
    pot = d.get("potential")
    if (not isinstance(pot, list) or len(pot) != n
            or any(not isinstance(r, list) or len(r) != n for r in pot)):
        raise ValidationError("potential-shape", f"potential must be an {n}x{n} array of strings")
    pot = [[e if isinstance(e, str) else repr(float(e)) for e in row] for row in pot]
    sym = d.get("symmetrize")
    if sym not in SYMMETRIZE:
        raise ValidationError("symmetrize-mode", f"symmetrize must be one of {SYMMETRIZE[1:]}")
    run = d.get("run", "report")
    if run not in ("report", "curves", "check"):
        raise ValidationError("run-mode", "run must be report, curves or check")
    overrides = {}
    for k in OVERRIDES:
        if k in d and d[k] is not None:
            v = d[k]
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ValidationError(f"{k}-numeric", f"{k} must be a number")
            overrides[k] = v
    if "grids" in d:
        overrides["grids"] = d["grids"]
    return Config(n, pot, *(_matrix(d, k, n) for k in ("alpha1", "alpha2", "beta1", "beta2")),
                  run=run, overrides=overrides, symmetrize=sym, outputs=dict(d.get("outputs", {})),
                  name=str(d.get("name", name)))


def expression_potential(entries: list, symmetrize: str | None = None, name: str = "V") -> Potential:
    n = len(entries)
    exprs = [[parse_expression(e) for e in row] for row in entries]

    def func(xs):
        xs = np.asarray(xs, dtype=float)
        out = np.empty((xs.size, n, n))
        for i in range(n):
            for j in range(n):
                out[:, i, j] = exprs[i][j](xs)
        if symmetrize == "upper":
            iu = np.triu_indices(n, 1)
            out[:, iu[1], iu[0]] = out[:, iu[0], iu[1]]
        elif symmetrize == "average":
            out = 0.5 * (out + np.swapaxes(out, 1, 2))
        return out

    return Potential(n, func, name)


def build_problem(cfg: Config) -> Problem:
    try:
        V = expression_potential(cfg.potential, cfg.symmetrize, cfg.name)
    except ExpressionSyntaxError:
        raise
    try:
        V.tabulate(np.linspace(0.0, 1.0, 1024))
    except NotSymmetric as e:
        raise ValidationError("symmetric-potential",
                              f"{e}; set \"symmetrize\" to \"upper\" or \"average\" to mirror entries") from e
    kw = {}
    for k, v in cfg.overrides.items():
        if k in OVERRIDES:
            kw[OVERRIDES[k]] = int(v) if OVERRIDES[k] in ("steps", "mesh", "samples") else float(v)
    try:
        settings = Settings().with_(**kw)
    except ValueError as e:
        raise ValidationError("settings-range", str(e)) from e
    try:
        return Problem.build(V, cfg.alpha1, cfg.alpha2, cfg.beta1, cfg.beta2, settings, cfg.name)
    except ValidationError:
        raise
    except MaslovError as e:
        raise ValidationError(f"boundary-{e.code}", str(e)) from e


_R = 1.0 / np.sqrt(2.0)


def _eye(n, c=1.0):
    return (c * np.eye(n)).tolist()


BUILTINS = {
    "example1": {
        "n": 2, "potential": [["-22", "10*sin(x)"], ["x", "-20"]],
        "alpha1": _eye(2), "alpha2": _eye(2, 0.0), "beta1": _eye(2), "beta2": _eye(2, 0.0),
    },
    "example2": {
        "n": 2,
        "potential": [["-.13-.7*cos(6*pi*x)/(2+cos(6*pi*x))", "0"], ["-cos(pi*x)/(2+cos(4*pi*x))", "1"]],
        "alpha1": _eye(2, 0.0), "alpha2": _eye(2), "beta1": _eye(2, 0.0), "beta2": _eye(2),
    },
    "example3": {
        "n": 2, "potential": [["-13+12*x^2", "-7*cos(x)"], ["-x", "-9"]],
        "alpha1": _eye(2, _R), "alpha2": _eye(2, _R), "beta1": _eye(2, 0.0), "beta2": _eye(2),
    },
    "example4": {
        "n": 2, "potential": [["-10-5*x^2", "-3*x"], ["-9*sin(x)", "-5-7*x^2"]],
        "alpha1": _eye(2, _R), "alpha2": _eye(2, _R), "beta1": _eye(2, _R), "beta2": _eye(2, _R),
    },
}
for _k, _v in BUILTINS.items():
    # the printed lower-left entries are not the mirror of the upper-right ones
    _v["symmetrize"] = "upper"
    _v["name"] = _k


def builtin_config(name: str) -> Config:
    key = name if name.startswith("example") else f"example{name}"
    if key not in BUILTINS:
        raise ValidationError("example-name", f"unknown built-in {name!r}; choose example1..example4")
    return config_from_dict(json.loads(json.dumps(BUILTINS[key])), key)


def read_config(path: str) -> Config:
    if path in BUILTINS:
        return builtin_config(path)
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValidationError("json-syntax", f"{path}: {e}") from e
    return config_from_dict(d, os.path.splitext(os.path.basename(path))[0])


def load_config(path: str) -> Problem:
    """Parse a JSON file (or a built-in name) into a ready Problem."""
    return build_problem(read_config(path))


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_config(cfg: Config, path: str) -> None:
    atomic_write(path, json.dumps(cfg.to_dict(), indent=2) + "\n")
