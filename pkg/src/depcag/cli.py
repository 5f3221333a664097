"""Command line interface: ``depcag <command> [--config PATH] [flags]``.

Exit status 0 on success, 2 on invalid input, 3 on numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import load_config
from .errors import ConfigError, DEPCAGError
from .io import complex_columns, split_complex, write_grid, write_solution, write_table
from .reduction import bound_constants, verify_dichotomy

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("reduce", "dichotomy", "solve-linear", "solve-nonlinear", "stability", "verify",
            "example")


def _say(text=""):
    print(text, flush=True)


def _fmt_matrix(M):
    M = np.atleast_2d(M)
    if np.allclose(M.imag, 0):
        return "[" + "; ".join(" ".join(f"{x.real:.10g}" for x in row) for row in M) + "]"
    return "[" + "; ".join(" ".join(f"{x:.10g}" for x in row) for row in M) + "]"


def cmd_reduce(cfg, out, args, run=None):
    run = run or ex.prepare(cfg, args.tol)
    red = run.red
    q = red.q
    n = np.arange(red.n_min, red.n_max + 1)
    t = run.sys.mesh.t(n)
    Hflat = red.H.reshape(len(n), q * q)
    cols = ["n", "t_n"] + [f"Re(H_{i + 1}{j + 1})" for i in range(q) for j in range(q)] \
        + [f"Im(H_{i + 1}{j + 1})" for i in range(q) for j in range(q)] \
        + complex_columns("h", q) + ["margin"]
    data = np.column_stack([n, t, Hflat.real, Hflat.imag, split_complex(red.h), red.margins])
    path = write_table(out / "reduce.csv", cols, data)
    dev = float(np.max(np.abs(red.H - red.H[0])))
    _say(f"reduced window {red.window}: H(0) = {_fmt_matrix(red.H_at(0))}, "
         f"max |H(n) - H(0)| = {dev:.3g}, min margin = {red.margins.min():.6g}")
    _say(f"wrote {path}")
    return run


def cmd_dichotomy(cfg, out, args, run=None):
    run = run or ex.prepare(cfg, args.tol)
    cert = run.cert
    evidence = verify_dichotomy(run.red, cert)
    path = out / "certificate.txt"
    path.write_text(cert.to_text())
    _say(f"certificate: Pi = {_fmt_matrix(cert.Pi)}, K = {cert.K:.10g}, rho = {cert.rho:.10g}")
    _say(f"verified on {cert.window}: stable {evidence.max_stable:.6g}, "
         f"unstable {evidence.max_unstable:.6g}, anchor error {evidence.anchor_error:.3g}")
    _say(f"wrote {path}")
    return run


def _write_solution(run, out, args):
    grid = run.grid
    n = grid.indices
    write_grid(out / "grid.csv", n, run.sys.mesh.t(n), grid.c)
    ts = run.solution.sample_times(args.samples)
    path = write_solution(out / "solution.csv", ts, run.solution.evaluate_many(ts))
    _say(f"wrote {out / 'grid.csv'} and {path}")


def cmd_solve_linear(cfg, out, args, run=None):
    if cfg.is_nonlinear:
        raise ConfigError("solve-linear needs a configuration without a nonlinear section",
                          "nonlinear")
    run = run or ex.solve(cfg, args.tol)
    g = run.grid
    _say(f"bounded solution on [{g.n_lo}, {g.n_hi}]: radius N = {g.N}, "
         f"tail bound {g.tail_bound:.3g}, recursion residual {g.residual:.3g}")
    b = ex.bounds(run, args.samples)
    consts = bound_constants(run.sys, run.cert)
    _say(f"|c| = {b.c_sup:.6g} <= 2K|h|/(1-rho) = {b.c_bound:.6g}; "
         f"|y| = {b.y_sup:.6g} <= K3|f| = {b.y_bound:.6g} (K0={consts.K0:.6g}, "
         f"K3={consts.K3:.6g}, K4={consts.K4:.6g}); bounds {'hold' if b.ok else 'VIOLATED'}")
    _write_solution(run, out, args)
    return run


def cmd_solve_nonlinear(cfg, out, args, run=None):
    if not cfg.is_nonlinear:
        raise ConfigError("solve-nonlinear needs a nonlinear section", "nonlinear")
    run = run or ex.solve(cfg, args.tol)
    r = run.report
    _say(f"contraction factor {r.contraction_factor:.6g} (L={r.L:.6g}, kappa={r.kappa:.6g}, "
         f"ell={r.ell}); {r.iterations} iterations, last update {r.final_update_norm:.3g}, "
         f"residual {r.residual:.3g}")
    _write_solution(run, out, args)
    return run


def cmd_stability(cfg, out, args, run=None):
    if not cfg.is_nonlinear:
        raise ConfigError("stability needs a nonlinear section", "nonlinear")
    run = run or ex.solve(cfg, args.tol)
    summ = ex.stability(cfg, args.seed, run)
    rows = []
    for i, e in enumerate(summ.experiments):
        for n, (d, b) in enumerate(zip(e.decay_samples, e.grid_bound)):
            rows.append([i, n, run.sys.mesh.t(n), d, b])
    write_table(out / "stability.csv", ["run", "n", "t_n", "|c-c~|", "bound"], rows)
    text = (f"alpha = {summ.alpha:.10g}\nK = {summ.K:.10g}\nK_forward = {summ.K_forward:.10g}\n"
            f"rho = {summ.rho:.10g}\nL = {summ.L:.10g}\nkappa = {summ.kappa:.10g}\n"
            f"smallness = {summ.smallness:.10g}\nrate_condition = {summ.rate_condition_holds}\n"
            f"fitted_rate = {summ.max_fitted_rate:.10g}\n"
            f"K_tilde = {max(e.K_tilde for e in summ.experiments):.10g}\n"
            f"K_tilde_bound = {summ.experiments[0].K_tilde_bound:.10g}\n"
            f"bounds_hold = {summ.all_bounds_hold}\n")
    (out / "stability.txt").write_text(text)
    _say(f"alpha = {summ.alpha:.6g}, fitted rate {summ.max_fitted_rate:.6g}, "
         f"smallness {summ.smallness:.6g}, rate condition {summ.rate_condition_holds}, "
         f"bounds {'hold' if summ.all_bounds_hold else 'VIOLATED'}")
    _say(f"wrote {out / 'stability.csv'} and {out / 'stability.txt'}")
    return run


def cmd_verify(cfg, out, args, run=None):
    oc = ex.oracle_comparison(cfg)
    text = (f"n_start = {oc.n_start}\nt_start = {oc.t_start:.17g}\nt_end = {oc.t_end:.17g}\n"
            f"samples = {oc.samples}\nsup_error = {oc.sup_error:.6g}\n"
            f"solution_residual = {oc.solution_residual:.6g}\n"
            f"oracle_residual = {oc.oracle_residual:.6g}\n")
    (out / "verify.txt").write_text(text)
    _say(f"oracle comparison on [{oc.t_start:.6g}, {oc.t_end:.6g}] ({oc.samples} samples): "
         f"sup error {oc.sup_error:.3g}, residuals {oc.solution_residual:.3g} (solution), "
         f"{oc.oracle_residual:.3g} (oracle)")
    return run


def cmd_example(cfg, out, args):
    name = cfg.name
    _say(f"== {name}")
    if cfg.is_nonlinear:
        run = ex.solve(cfg, args.tol)
        cmd_reduce(cfg, out, args, run)
        cmd_dichotomy(cfg, out, args, run)
        cmd_solve_nonlinear(cfg, out, args, run)
        if run.cert.is_stable and min(cfg.rhs.lags) >= 1:
            cmd_stability(cfg, out, args, run)
    else:
        run = ex.solve(cfg, args.tol)
        cmd_reduce(cfg, out, args, run)
        cmd_dichotomy(cfg, out, args, run)
        cmd_solve_linear(cfg, out, args, run)
        if name == "quasi-periodic-linear":
            found, checks = ex.translations(cfg, run)
            lines = ["tau,p,epsilon,sup_difference,C"]
            for c in checks:
                lines.append(f"{c.tau:.17g},{c.p},{c.epsilon},{c.sup_difference:.6g},"
                             f"{c.constant:.6g}")
            (out / "translations.csv").write_text("\n".join(lines) + "\n")
            best = min(checks, key=lambda c: c.constant)
            _say(f"{len(checks)} translations; best tau = {best.tau:.6g} (p = {best.p}): "
                 f"sup |y(t+tau) - y(t)| = {best.sup_difference:.3g} = C eps with C = "
                 f"{best.constant:.3g}")
    if cfg.dimension <= 2 and name in ("counterexample-5.1", "no-ode-dichotomy-5.2",
                                       "constant-stable"):
        rep = ex.falsifier(cfg, run)
        (out / "falsifier.csv").write_text(rep.to_text())
        _say(f"continuous dichotomy search: {len(rep.rejected)} of {len(rep.candidates)} "
             f"candidates rejected; survivors: "
             f"{', '.join(c.label for c in rep.survivors) or 'none'}")
    cmd_verify(cfg, out, args, run)
    return run


HANDLERS = {"reduce": cmd_reduce, "dichotomy": cmd_dichotomy, "solve-linear": cmd_solve_linear,
            "solve-nonlinear": cmd_solve_nonlinear, "stability": cmd_stability,
            "verify": cmd_verify}


def build_parser():
    p = argparse.ArgumentParser(prog="depcag", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("name", nargs="?", help=f"example name: {', '.join(ex.EXAMPLES)}")
    p.add_argument("--config", type=Path, help="YAML experiment configuration")
    p.add_argument("--out", type=Path, default=Path("depcag-out"), help="output directory")
    p.add_argument("--tol", type=float, default=None, help="integration tolerance")
    p.add_argument("--window", type=int, default=None,
                   help="use the mesh window [-N, N]")
    p.add_argument("--samples", type=int, default=16,
                   help="output samples per mesh interval")
    p.add_argument("--seed", type=int, default=0, help="seed for random perturbations")
    return p


def run(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "example":
        if not args.name:
            raise ConfigError("example needs a name", "name")
        cfg = ex.load_example(args.name)
    else:
        if args.config is None:
            raise ConfigError(f"{args.command} needs --config", "config")
        cfg = load_config(args.config)
    if args.window is not None:
        if args.window < 1:
            raise ConfigError("--window must be positive", "window")
        cfg.with_window(args.window)
    if args.tol is not None and not args.tol > 0:
        raise ConfigError("--tol must be positive", "tol")
    if args.tol is not None:
        cfg.sections["solver"]["tol"] = args.tol
    out = args.out / cfg.name if args.command == "example" else args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.command == "example":
        cmd_example(cfg, out, args)
    else:
        HANDLERS[args.command](cfg, out, args)


def main(argv=None):
    try:
        run(argv)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DEPCAGError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
