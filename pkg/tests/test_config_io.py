import tempfile
from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given, strategies as st

from depcag import experiments as ex
from depcag.config import parse_config
from depcag.errors import ConfigError
from depcag.io import read_table, write_grid, write_solution, write_table

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)

BASE = """\
mesh: {base_spacing: 1.0, window: [-20, 20]}
system:
  dimension: 2
  A: {constant: [[-1, 0], [0, 0.5]]}
  B: {constant: [[0.1, [0, 0.2]], [0, 0]], harmonics: [{amplitude: [[1, 0], [0, 1]], frequency: 6.283185307179586, phase: 0.5}]}
  f: {constant: [1, [0, -1]]}
"""


def test_parse_base_config():
    cfg = parse_config(BASE, "base")
    assert cfg.dimension == 2
    assert cfg.B.constant[0, 1] == 0.2j
    assert cfg.f.constant[1] == -1j
    assert cfg.B.harmonics[0].phase == 0.5
    assert cfg.section("solver")["tol"] == 1e-10
    assert not cfg.is_nonlinear
    sys = cfg.system()
    assert sys.mesh.window == (-20, 20)


@pytest.mark.parametrize("text,field,line", [
    (BASE.replace("dimension: 2", "dimension: two"), "system.dimension", 3),
    (BASE.replace("[[-1, 0], [0, 0.5]]", "[[-1, 0]]"), "system.A.constant", 4),
    (BASE + "solver: {tol: -1}\n", "solver.tol", 7),
    (BASE + "dichotomy: {method: magic}\n", "dichotomy.method", 7),
    (BASE + "extra: 1\n", "extra", 7),
    (BASE.replace("window: [-20, 20]", "window: [0, 20]"), "mesh", 1),
])
def test_config_errors_report_field_and_line(text, field, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field
    assert info.value.line == line


def test_yaml_syntax_error_has_line():
    with pytest.raises(ConfigError) as info:
        parse_config("mesh: {window: [1, 2\nsystem: 3\n")
    assert info.value.line is not None


@given(q=st.integers(1, 3), data=st.data())
def test_config_round_trip(q, data):
    def num():
        return data.draw(st.one_of(st.floats(-5, 5), st.tuples(st.floats(-5, 5), st.floats(-5, 5))))
    A = [[num() for _ in range(q)] for _ in range(q)]
    f = [num() for _ in range(q)]
    freq = data.draw(st.floats(0.1, 10))
    doc = {"mesh": {"base_spacing": 1.0, "window": [-5, 5]},
           "system": {"dimension": q, "A": {"constant": [[list(x) if isinstance(x, tuple) else x
                                                          for x in r] for r in A]},
                      "f": {"constant": [list(x) if isinstance(x, tuple) else x for x in f],
                            "harmonics": [{"amplitude": [1.0] * q, "frequency": freq}]}}}
    cfg = parse_config(yaml.safe_dump(doc))
    as_c = lambda x: complex(*x) if isinstance(x, tuple) else complex(x)
    assert np.array_equal(cfg.A.constant, np.array([[as_c(x) for x in r] for r in A]))
    assert np.array_equal(cfg.f.constant, np.array([as_c(x) for x in f]))
    assert cfg.f.harmonics[0].frequency == freq


def test_bundled_examples_parse():
    for name in ex.EXAMPLES:
        cfg = ex.load_example(name)
        assert cfg.name == name
    assert ex.load_example("constant-stable").is_nonlinear
    with pytest.raises(ConfigError):
        ex.load_example("nope")


@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20))
def test_csv_round_trip_is_exact(rows):
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "t.csv"
        write_table(path, ["a", "b", "c"], rows)
        text = path.read_text()
        cols, data = read_table(path)
    assert text.splitlines()[1] == ",".join(f"{float(x):.17g}" for x in rows[0])
    assert cols == ["a", "b", "c"]
    assert np.array_equal(data, np.array(rows, dtype=float))


def test_solution_and_grid_layout(tmp_path):
    y = np.array([[1 + 2j, 3 - 4j], [0.1, -0.2j]])
    write_solution(tmp_path / "s.csv", [0.0, 0.5], y)
    cols, data = read_table(tmp_path / "s.csv")
    assert cols == ["t", "Re(y_1)", "Re(y_2)", "Im(y_1)", "Im(y_2)"]
    assert np.array_equal(data[:, 1:3] + 1j * data[:, 3:], y)
    write_grid(tmp_path / "g.csv", [0, 1], [0.0, 1.0], y)
    cols, data = read_table(tmp_path / "g.csv")
    assert cols[:2] == ["n", "t_n"]


def test_mesh_key_aliases():
    text = BASE.replace("mesh: {base_spacing: 1.0, window: [-20, 20]}",
                        "mesh: {nu: 0.5, window_min: -8, window_max: 12}")
    cfg = parse_config(text)
    assert cfg.mesh.base_spacing == 0.5 and cfg.mesh.window == (-8, 12)
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("base_spacing: 1.0", "spacing: 1.0"))
