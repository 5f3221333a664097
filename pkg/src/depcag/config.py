"""YAML experiment configuration.

Schema (all sections except ``mesh`` and ``system`` optional)::

    mesh:
      base_spacing: 1.0            # alias: nu
      jitter_amplitude: 0.0        # t_n = n nu + a sin(2 pi beta n)
      jitter_frequency: 0.0
      window: [-50, 50]            # or window_min / window_max
    system:
      dimension: 2
      A: {constant: [[0, 0], [0, 0]], harmonics: []}
      B: {constant: ..., harmonics: [{amplitude: ..., frequency: 6.283, phase: 0}]}
      f: {constant: [0, 0], harmonics: [...]}
    nonlinear:                     # replaces f with g(t) + sum_j C_j sin(y(t_{n-p_j}))
      lags: [1]
      forcing: {constant: [1.0]}
      coupling: [[[0.05]]]
    solver: {tol: 1.0e-10, resid_tol: 1.0e-8, samples: 64, max_iter: 200, picard_tol: 1.0e-9}
    dichotomy: {method: constant}  # or periodic (period: P) or projection (projection: ..., rho: ...)
    stability: {horizon: 60, runs: 10, size: 1.0e-2}
    translations: {epsilon: 0.05, search_grid: 1.0e-3}
    falsifier: {T: 20, alpha: 0.05, angles: 8}
    verify: {span: 12, samples: 240, resid_tol: 1.0e-11}

Complex entries are plain numbers or ``[re, im]`` pairs; matrices are lists
of rows.  For ``dimension: 1`` a bare number is accepted for any matrix or
vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .dynamics import LinearDEPCAG
from .errors import ConfigError
from .functions import Harmonic, QuasiPeriodicMatrixFunction
from .mesh import MeshSpec, build_mesh
from .nonlinear_solver import NonlinearRHS

SECTION_DEFAULTS = {
    "solver": {"tol": 1e-10, "resid_tol": 1e-8, "samples": 64, "max_iter": 200,
               "picard_tol": 1e-9},
    "dichotomy": {"method": "constant", "period": None, "projection": None, "rho": None},
    "stability": {"horizon": 60, "runs": 10, "size": 1e-2},
    "translations": {"epsilon": 0.05, "search_grid": 1e-3},
    "falsifier": {"T": 20.0, "alpha": 0.05, "angles": 8},
    "verify": {"span": 12, "samples": 240, "resid_tol": 1e-11},
}


@dataclass
class ExperimentConfig:
    name: str
    mesh: MeshSpec
    dimension: int
    A: QuasiPeriodicMatrixFunction
    B: QuasiPeriodicMatrixFunction
    f: QuasiPeriodicMatrixFunction
    rhs: NonlinearRHS | None = None
    sections: dict = field(default_factory=dict)

    def section(self, name):
        return self.sections[name]

    def system(self):
        return LinearDEPCAG(self.A, self.B, build_mesh(self.mesh), self.f)

    @property
    def is_nonlinear(self):
        return self.rhs is not None

    def with_window(self, half_width):
        self.mesh = MeshSpec(self.mesh.base_spacing, self.mesh.jitter_amplitude,
                             self.mesh.jitter_frequency, (-int(half_width), int(half_width)))
        return self


class _Lines:
    """Line lookup for key paths in a composed YAML node tree."""

    def __init__(self, node):
        self.node = node

    def line(self, path):
        node = self.node
        best = None
        for key in path:
            if node is None:
                break
            best = node.start_mark.line + 1
            if isinstance(node, yaml.MappingNode):
                nxt = None
                for k, v in node.value:
                    if k.value == str(key):
                        best = k.start_mark.line + 1
                        nxt = v
                        break
                node = nxt
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) \
                    and key < len(node.value):
                node = node.value[key]
            else:
                node = None
        if node is not None:
            best = node.start_mark.line + 1
        return best


def _dotted(path):
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


class _Parser:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, msg, path):
        raise ConfigError(msg, _dotted(path), self.lines.line(path))

    def number(self, x, path):
        if isinstance(x, bool):
            self.fail("expected a number", path)
        if isinstance(x, (int, float)):
            return complex(x)
        if isinstance(x, (list, tuple)) and len(x) == 2 and \
                all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
            return complex(x[0], x[1])
        self.fail(f"expected a number or [re, im] pair, got {x!r}", path)

    def real(self, x, path, positive=False):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            self.fail(f"expected a real number, got {x!r}", path)
        if positive and not x > 0:
            self.fail("must be positive", path)
        return float(x)

    def vector(self, x, q, path):
        if q == 1 and not isinstance(x, list):
            return np.array([self.number(x, path)])
        if isinstance(x, list) and q == 1 and len(x) == 2 and \
                all(isinstance(v, (int, float)) for v in x):
            return np.array([self.number(x, path)])
        if not isinstance(x, list) or len(x) != q:
            self.fail(f"expected a vector of length {q}", path)
        return np.array([self.number(v, path + [i]) for i, v in enumerate(x)])

    def matrix(self, x, q, path):
        if q == 1 and not isinstance(x, list):
            return np.array([[self.number(x, path)]])
        if not isinstance(x, list) or len(x) != q:
            self.fail(f"expected {q} rows", path)
        rows = []
        for i, row in enumerate(x):
            if not isinstance(row, list) or len(row) != q:
                self.fail(f"row must have {q} entries", path + [i])
            rows.append([self.number(v, path + [i, j]) for j, v in enumerate(row)])
        return np.array(rows)

    def function(self, x, q, vector, path):
        shape = self.vector if vector else self.matrix
        if x is None:
            return QuasiPeriodicMatrixFunction.zeros(q, vector=vector)
        if not isinstance(x, dict):
            return QuasiPeriodicMatrixFunction(shape(x, q, path))
        unknown = set(x) - {"constant", "harmonics"}
        if unknown:
            self.fail(f"unknown keys {sorted(unknown)}", path)
        const = shape(x["constant"], q, path + ["constant"]) if "constant" in x else \
            np.zeros((q,) if vector else (q, q))
        hs = []
        for i, h in enumerate(x.get("harmonics") or []):
            hp = path + ["harmonics", i]
            if not isinstance(h, dict) or "amplitude" not in h or "frequency" not in h:
                self.fail("harmonic needs amplitude and frequency", hp)
            hs.append(Harmonic(shape(h["amplitude"], q, hp + ["amplitude"]),
                               self.real(h["frequency"], hp + ["frequency"]),
                               self.real(h.get("phase", 0.0), hp + ["phase"])))
        return QuasiPeriodicMatrixFunction(const, tuple(hs))


def parse_config(text, name="config"):
    """Parse and validate YAML text into an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        With the offending field path and line number.
    """
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {exc}", None,
                          mark.line + 1 if mark else None) from exc
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping", None, 1)
    P = _Parser(_Lines(node))
    known = {"name", "mesh", "system", "nonlinear", "output"} | set(SECTION_DEFAULTS)
    for key in data:
        if key not in known:
            P.fail(f"unknown section '{key}'", [key])
    for key in ("mesh", "system"):
        if not isinstance(data.get(key), dict):
            P.fail(f"section '{key}' is required", [key])

    m = dict(data["mesh"])
    unknown = set(m) - {"base_spacing", "nu", "jitter_amplitude", "jitter_frequency", "window",
                        "window_min", "window_max"}
    if unknown:
        P.fail(f"unknown keys {sorted(unknown)}", ["mesh", sorted(unknown)[0]])
    if "nu" in m:
        m.setdefault("base_spacing", m["nu"])
    if "window_min" in m or "window_max" in m:
        m.setdefault("window", [m.get("window_min", -50), m.get("window_max", 50)])
    window = m.get("window", [-50, 50])
    if not (isinstance(window, list) and len(window) == 2 and all(isinstance(w, int) for w in window)):
        P.fail("window must be [n_min, n_max] integers", ["mesh", "window"])
    try:
        mesh = MeshSpec(P.real(m.get("base_spacing", 1.0), ["mesh", "base_spacing"], True),
                        P.real(m.get("jitter_amplitude", 0.0), ["mesh", "jitter_amplitude"]),
                        P.real(m.get("jitter_frequency", 0.0), ["mesh", "jitter_frequency"]),
                        tuple(window))
    except ValueError as exc:
        P.fail(str(exc), ["mesh"])

    s = data["system"]
    q = s.get("dimension")
    if isinstance(q, bool) or not isinstance(q, int) or q < 1:
        P.fail("dimension must be a positive integer", ["system", "dimension"])
    A = P.function(s.get("A"), q, False, ["system", "A"])
    B = P.function(s.get("B"), q, False, ["system", "B"])
    f = P.function(s.get("f"), q, True, ["system", "f"])

    rhs = None
    if data.get("nonlinear") is not None:
        nl = data["nonlinear"]
        path = ["nonlinear"]
        lags = nl.get("lags", [])
        if not isinstance(lags, list) or not all(isinstance(p, int) and p >= 0 for p in lags):
            P.fail("lags must be a list of non-negative integers", path + ["lags"])
        coupling = nl.get("coupling", [])
        if not isinstance(coupling, list) or len(coupling) != len(lags):
            P.fail(f"coupling must list {len(lags)} matrices", path + ["coupling"])
        C = [P.matrix(c, q, path + ["coupling", i]) for i, c in enumerate(coupling)]
        g = P.function(nl.get("forcing"), q, True, path + ["forcing"])
        if not f.is_zero:
            P.fail("give either system.f or nonlinear.forcing, not both", ["system", "f"])
        rhs = NonlinearRHS(tuple(lags), g, tuple(C))

    sections = {}
    for key, defaults in SECTION_DEFAULTS.items():
        given = data.get(key) or {}
        if not isinstance(given, dict):
            P.fail("section must be a mapping", [key])
        unknown = set(given) - set(defaults)
        if unknown:
            P.fail(f"unknown keys {sorted(unknown)}", [key, sorted(unknown)[0]])
        merged = dict(defaults)
        merged.update(given)
        sections[key] = merged
    d = sections["dichotomy"]
    if d["method"] not in ("constant", "periodic", "projection"):
        P.fail("method must be constant, periodic or projection", ["dichotomy", "method"])
    if d["method"] == "projection":
        if d["projection"] is None:
            P.fail("projection method needs a projection matrix", ["dichotomy"])
        d["projection"] = P.matrix(d["projection"], q, ["dichotomy", "projection"])
    if d["method"] == "periodic" and not isinstance(d["period"], int):
        P.fail("periodic method needs an integer period", ["dichotomy", "period"])
    for key in ("tol", "resid_tol", "picard_tol"):
        P.real(sections["solver"][key], ["solver", key], True)
    return ExperimentConfig(str(data.get("name", name)), mesh, q, A, B, f, rhs, sections)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, path.stem)
