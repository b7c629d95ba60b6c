import json
import math

import numpy as np
import pytest

from maslov_morse.config import (build_problem, builtin_config, config_from_dict, load_config, read_config,
                                 save_config)
from maslov_morse.errors import ExpressionSyntaxError, ValidationError

R = 1 / math.sqrt(2)


def base(**kw):
    d = {"n": 2, "potential": [["-1", "0"], ["0", "2"]], "alpha1": [[1, 0], [0, 1]], "alpha2": [[0, 0], [0, 0]],
         "beta1": [[1, 0], [0, 1]], "beta2": [[0, 0], [0, 0]]}
    d.update(kw)
    return d


def test_first_builtin():
    p = load_config("example1")
    assert np.allclose(p.left.a1, np.eye(2)) and np.allclose(p.left.a2, 0)
    V = p.potential(0.5)
    assert np.allclose(V, [[-22, 10 * math.sin(0.5)], [10 * math.sin(0.5), -20]])


def test_second_builtin_is_neumann():
    p = load_config("example2")
    assert np.allclose(p.left.a1, 0) and np.allclose(p.right.a2, np.eye(2))
    assert p.potential(0.0)[0, 0] == pytest.approx(-0.13 - 0.7 / 3)


def test_normalizes_pairs():
    p = build_problem(config_from_dict(base(alpha1=[[1, 0], [0, 1]], alpha2=[[1, 0], [0, 1]])))
    assert np.allclose(p.left.a1, R * np.eye(2)) and np.allclose(p.left.a2, R * np.eye(2))


def test_round_trip_is_bit_equal(tmp_path):
    for name in ("example1", "example3"):
        cfg = builtin_config(name)
        path = tmp_path / f"{name}.json"
        save_config(cfg, str(path))
        again = read_config(str(path))
        assert again.to_dict() == cfg.to_dict()
        p, q = build_problem(cfg), build_problem(again)
        for a, b in ((p.left.a1, q.left.a1), (p.left.a2, q.left.a2), (p.right.a1, q.right.a1)):
            assert np.array_equal(a, b)
        xs = np.linspace(0, 1, 17)
        assert np.array_equal(p.potential(xs), q.potential(xs))


def test_overrides():
    p = build_problem(config_from_dict(base(s0=0.1, steps=500, meshN=300, lambdaInf=90)))
    assert (p.settings.s0, p.settings.steps, p.settings.mesh, p.settings.lambda_inf) == (0.1, 500, 300, 90.0)


@pytest.mark.parametrize("change, invariant", [
    ({"n": 0}, "n-range"),
    ({"alpha1": [[1, 0]]}, "alpha1-shape"),
    ({"beta2": [[0, "a"], [0, 0]]}, "beta2-numeric"),
    ({"potential": [["1"]]}, "potential-shape"),
    ({"symmetrize": "lower"}, "symmetrize-mode"),
    ({"run": "plot"}, "run-mode"),
    ({"s0": "small"}, "s0-numeric"),
    ({"s0": 2.0}, "settings-range"),
    ({"potential": [["0", "x"], ["0", "0"]]}, "symmetric-potential"),
    ({"alpha1": [[1, 0], [0, 0]]}, "boundary-RankDeficient"),
    ({"alpha2": [[0, -1], [1, 0]]}, "boundary-NotSelfAdjoint"),
])
def test_validation_names_invariant(change, invariant):
    with pytest.raises(ValidationError) as exc:
        build_problem(config_from_dict(base(**change)))
    assert exc.value.invariant == invariant


def test_missing_key():
    d = base()
    del d["beta1"]
    with pytest.raises(ValidationError) as exc:
        config_from_dict(d)
    assert exc.value.invariant == "beta1-present"


def test_symmetrize_modes():
    d = base(potential=[["0", "x"], ["0", "0"]], symmetrize="upper")
    assert build_problem(config_from_dict(d)).potential(0.5)[1, 0] == pytest.approx(0.5)
    d["symmetrize"] = "average"
    assert build_problem(config_from_dict(d)).potential(0.5)[1, 0] == pytest.approx(0.25)


def test_bad_expression():
    with pytest.raises(ExpressionSyntaxError):
        build_problem(config_from_dict(base(potential=[["1+", "0"], ["0", "0"]])))


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError) as exc:
        read_config(str(path))
    assert exc.value.invariant == "json-syntax"


def test_unknown_builtin():
    with pytest.raises(ValidationError):
        builtin_config("example9")


def test_saved_file_is_json(tmp_path):
    path = tmp_path / "out" / "c.json"
    save_config(builtin_config("example4"), str(path))
    assert json.loads(path.read_text())["symmetrize"] == "upper"
    assert not [f for f in path.parent.iterdir() if f.name.startswith(".tmp-")]
