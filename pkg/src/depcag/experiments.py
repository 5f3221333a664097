"""End-to-end runs shared by the command line and the test suite."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .config import ExperimentConfig, parse_config
from .errors import ConfigError
from .falsify import falsify_continuous_dichotomy
from .linear_solver import (PiecewiseSolution, almost_periodicity_check, bounded_sequence,
                            norm_bound_check)
from .mesh import find_translations
from .nonlinear_solver import fixed_point, nonlinear_solution, reduce_nonlinear
from .oracle import integrate_depcag, residual_check
from .reduction import GreenKernel, bound_constants, certify, reduce_system
from .stability import decay_certificate

EXAMPLES = ("counterexample-5.1", "no-ode-dichotomy-5.2", "constant-stable",
            "constant-saddle", "nonlinear-contraction", "quasi-periodic-linear")


def example_text(name):
    if name not in EXAMPLES:
        raise ConfigError(f"unknown example '{name}'; choose from {', '.join(EXAMPLES)}")
    return resources.files("depcag").joinpath("examples").joinpath(f"{name}.yaml").read_text()


def load_example(name) -> ExperimentConfig:
    return parse_config(example_text(name), name)


@dataclass
class Run:
    """Reduced system, certificate and solution of one configuration."""

    cfg: ExperimentConfig
    sys: object
    red: object
    cert: object
    kernel: object
    grid: object = None
    solution: object = None
    report: object = None


def prepare(cfg, tol=None):
    """Reduce and certify."""
    s = cfg.section("solver")
    tol = s["tol"] if tol is None else tol
    sys = cfg.system()
    if cfg.is_nonlinear:
        red = reduce_nonlinear(sys, cfg.rhs, tol, s["samples"])
    else:
        red = reduce_system(sys, tol, s["samples"])
    d = cfg.section("dichotomy")
    cert = certify(red, d["method"], d["period"], d["projection"], d["rho"])
    return Run(cfg, sys, red, cert, GreenKernel(red, cert.Pi))


def solve(cfg, tol=None, resid_tol=None):
    """Bounded (almost periodic) solution for a linear or nonlinear configuration."""
    run = prepare(cfg, tol)
    s = cfg.section("solver")
    resid_tol = s["resid_tol"] if resid_tol is None else resid_tol
    if cfg.is_nonlinear:
        run.grid, run.report = fixed_point(run.red, run.cert, cfg.rhs, s["picard_tol"],
                                           s["max_iter"], resid_tol=min(resid_tol, 1e-10))
        run.solution = nonlinear_solution(run.sys, cfg.rhs, run.grid, s["tol"])
    else:
        run.grid = bounded_sequence(run.red, run.cert, resid_tol, kernel=run.kernel)
        run.solution = PiecewiseSolution(run.sys, run.grid, s["tol"])
    return run


def bounds(run, samples_per_interval=16):
    return norm_bound_check(run.solution, bound_constants(run.sys, run.cert), run.cert,
                            samples_per_interval)


@dataclass(frozen=True)
class OracleComparison:
    n_start: int
    t_start: float
    t_end: float
    samples: int
    sup_error: float
    solution_residual: float
    oracle_residual: float


def oracle_comparison(cfg, run=None, span=None, samples=None, oracle_tol=1e-12):
    """Seed the direct integrator at the left edge of the solution and compare.

    The linear solution is recomputed with the tighter residual target of
    the ``verify`` section, since seeding errors along unstable directions
    grow over the span.
    """
    v = cfg.section("verify")
    span = v["span"] if span is None else span
    samples = v["samples"] if samples is None else samples
    if run is None:
        run = solve(cfg, resid_tol=v["resid_tol"])
    grid, sol, rhs = run.grid, run.solution, cfg.rhs
    p = rhs.max_lag if rhs is not None else 0
    n0 = grid.n_lo + p
    n_end = min(n0 + span, grid.n_hi + 1)
    t0, t1 = float(run.sys.mesh.t(n0)), float(run.sys.mesh.t(n_end))
    init = {n0 - j: grid.at(n0 - j) for j in range(p + 1)}
    orc = integrate_depcag(run.sys, init, t1, tol=oracle_tol, rhs=rhs)
    ts = np.linspace(t0, t1, samples)
    err = float(np.max(np.linalg.norm(orc(ts) - sol.evaluate_many(ts), axis=1)))
    r_sol = residual_check(sol.evaluate_many, run.sys, n0, n_end - 1, rhs)
    r_orc = residual_check(orc, run.sys, n0, n_end - 1, rhs) if p == 0 else \
        residual_check(lambda t: _with_history(orc, sol, t0, t), run.sys, n0, n_end - 1, rhs)
    return OracleComparison(n0, t0, t1, samples, err, r_sol, r_orc)


def _with_history(orc, sol, t0, t):
    t = np.asarray(t, dtype=float)
    out = np.empty((t.size, sol.sys.q), complex)
    before = t < t0
    if before.any():
        out[before] = sol.evaluate_many(t[before])
    if (~before).any():
        out[~before] = orc(t[~before])
    return out


def stability(cfg, seed=0, run=None):
    """Perturbed forward runs from the almost periodic solution."""
    if run is None:
        run = solve(cfg)
    st = cfg.section("stability")
    rng = np.random.default_rng(seed)
    p = cfg.rhs.max_lag
    q = cfg.dimension
    perts = []
    for _ in range(int(st["runs"])):
        d = rng.normal(size=(p + 1, q))
        d *= st["size"] / np.max(np.linalg.norm(d, axis=1))
        perts.append(d)
    return decay_certificate(run.sys, run.red, cfg.rhs, run.cert, run.grid.at, perts,
                             int(st["horizon"]), tol=cfg.section("solver")["tol"])


def translations(cfg, run=None, samples_per_interval=8):
    """Translations of mesh and coefficients, and the solution's shift differences."""
    if run is None:
        run = solve(cfg)
    tr = cfg.section("translations")
    funcs = [cfg.A, cfg.B, cfg.f]
    if cfg.rhs is not None:
        funcs.append(cfg.rhs.forcing)
    found = find_translations(run.sys.mesh, funcs, tr["epsilon"], tr["search_grid"])
    return found, almost_periodicity_check(run.solution, found, samples_per_interval)


def falsifier(cfg, run=None):
    if run is None:
        run = prepare(cfg)
    fz = cfg.section("falsifier")
    return falsify_continuous_dichotomy(run.sys, run.red.H, run.cert, float(fz["T"]),
                                        float(fz["alpha"]), int(fz["angles"]))
