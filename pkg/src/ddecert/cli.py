"""Command-line front end.

Every subcommand writes ``<output>/<subcommand>.json`` (plus CSV files where
useful) and exits with 0 on success, 2 when no certificate exists or a
checked condition fails, and 1 on bad input.  Reports embed the resolved
configuration and the tool version; thread count is deliberately left out
so that reports do not depend on it.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certificate import (NoCertificateError, build_certificate, rate_bounds,
                          dissipativity_gap, generalized_contraction_shift, lyapunov_renorm,
                          min_mu)
from .io import SystemFileError, load_system, system_to_dict, write_csv, write_report
from .kernel import dissipativity_lambda, total_variation
from .operator_check import check_dissipativity, discretize_generator
from .simulation.deterministic import HistorySegment, contraction_report, integrate_dde
from .simulation.stochastic import (additive_noise, as_lyapunov_exponent,
                                    mean_square_contraction, multiplicative_noise, zero_drift)

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1); 2 is reserved for failed checks."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _vector(text, n, name):
    try:
        v = np.array([float(t) for t in str(text).split(",")])
    except ValueError as exc:
        raise InputError(f"--{name}: expected comma-separated numbers") from exc
    if v.size == 1:
        v = np.full(n, v[0])
    if v.size != n:
        raise InputError(f"--{name}: expected {n} components, got {v.size}")
    return v


def _positive(x, name):
    if not x > 0:
        raise InputError(f"--{name} must be positive")


def _envelope(args, config, result):
    return {"tool": "ddecert", "version": __version__, "command": args.command,
            "config": config, "result": result}


def _system_config(args):
    system = load_system(args.system)
    return system, {"system_file": str(args.system), "system": system_to_dict(system)}


def _write(args, config, result, name=None):
    path = Path(args.output) / f"{name or args.command}.json"
    write_report(path, _envelope(args, config, result))
    return path


def cmd_certify(args):
    system, cfg = _system_config(args)
    cfg.update(mu=args.mu, grid_points=args.grid_points)
    lam = dissipativity_lambda(system.drift)
    bounds = rate_bounds(lam, system.kernel).to_dict()
    try:
        cert = build_certificate(system, args.mu, args.grid_points)
    except NoCertificateError:
        gap = dissipativity_gap(lam, args.mu, system.kernel)
        _write(args, cfg, {"certified": False, "lambda": lam, "mu": args.mu, "gap": gap,
                           "bounds": bounds})
        print(f"no certificate: gap ≤ 0 at mu={args.mu!r} (gap={gap!r})", file=sys.stderr)
        return EXIT_FAIL
    except ValueError:
        _write(args, cfg, {"certified": False, "lambda": lam, "mu": args.mu, "bounds": bounds})
        print(f"no certificate: mu={args.mu!r} does not exceed lambda={lam!r}", file=sys.stderr)
        return EXIT_FAIL
    result = {"certified": True, **cert.to_dict(), "bounds": bounds}
    _write(args, cfg, result)
    write_csv(Path(args.output) / "tau.csv", ["s", "value", "side"],
              [(t["s"], t["value"], t["side"]) for t in result["tau"]])
    print(f"certified mu={cert.mu!r}: gap={cert.gap!r}, c1={cert.c1!r}, c2={cert.c2!r}")
    return EXIT_OK


def cmd_min_mu(args):
    system, cfg = _system_config(args)
    _positive(args.tol, "tol")
    margin = args.tol if args.margin is None else args.margin
    cfg.update(tol=args.tol, margin=margin)
    lam = dissipativity_lambda(system.drift)
    mu_star = min_mu(lam, system.kernel, args.tol)
    result = {"lambda": lam, "mu_star": mu_star,
              "bounds": rate_bounds(lam, system.kernel).to_dict()}
    try:
        cert = build_certificate(system, mu_star + margin)
        result["certificate"] = cert.to_dict()
    except ValueError:
        result["certificate"] = None
    _write(args, cfg, result)
    print(f"mu* = {mu_star!r}")
    return EXIT_OK


def cmd_bounds(args):
    system, cfg = _system_config(args)
    lam = dissipativity_lambda(system.drift)
    shift = generalized_contraction_shift(system)
    result = {"lambda": lam, "total_variation": total_variation(system.kernel),
              **rate_bounds(lam, system.kernel).to_dict(),
              "contraction_shift": shift.nu}
    _write(args, cfg, result)
    print(f"mu_sufficient={result['mu_sufficient']!r} webb_mu={result['webb_mu']!r}")
    return EXIT_OK


def cmd_spectrum(args):
    from .spectrum import generator_eigenvalues

    system, cfg = _system_config(args)
    if args.N < 4:
        raise InputError("--N must be at least 4")
    cfg.update(N=args.N)
    spec = generator_eigenvalues(system, args.N)
    result = spec.to_dict()
    _write(args, cfg, result)
    write_csv(Path(args.output) / "eigenvalues.csv", ["re", "im", "residual", "spurious"],
              [(e["re"], e["im"], e["residual"], int(e["spurious"]))
               for e in result["eigenvalues"]])
    print(f"abscissa = {spec.abscissa!r}")
    return EXIT_OK


def cmd_check(args):
    system, cfg = _system_config(args)
    if args.N < 4:
        raise InputError("--N must be at least 4")
    cfg.update(mu=args.mu, N=args.N, tol=args.tol)
    try:
        cert = build_certificate(system, args.mu)
    except ValueError as exc:
        _write(args, cfg, {"certified": False, "message": str(exc)})
        print(f"no certificate: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rep = check_dissipativity(discretize_generator(system, args.N), cert)
    passed = rep.margin >= -args.tol
    _write(args, cfg, {**rep.to_dict(audit=args.audit), "pass": passed})
    print(f"theta_max={rep.theta_max!r} margin={rep.margin!r}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_simulate(args):
    system, cfg = _system_config(args)
    _positive(args.h, "h")
    _positive(args.t_final, "t-final")
    x0 = _vector(args.x0, system.dimension, "x0")
    cfg.update(mu=args.mu, h=args.h, t_final=args.t_final, x0=x0.tolist(), every=args.every)
    try:
        cert = build_certificate(system, args.mu)
    except ValueError as exc:
        _write(args, cfg, {"certified": False, "message": str(exc)})
        print(f"no certificate: {exc}", file=sys.stderr)
        return EXIT_FAIL
    hist = HistorySegment.constant(x0, args.h)
    traj = integrate_dde(system, x0, hist, args.t_final, args.h)
    rep = contraction_report(traj, cert, every=args.every)
    _write(args, cfg, rep.to_dict())
    idx = np.unique(np.concatenate([np.arange(0, traj.times.size,
                                              max(1, int(round(args.every / args.h)))),
                                    [traj.times.size - 1]]))
    norms = traj.segment_norms(cert, idx)
    header = ["t"] + [f"u{i}" for i in range(system.dimension)] + ["weighted_norm"]
    write_csv(Path(args.output) / "trajectory.csv", header,
              [(traj.times[i], *traj.states[i], nv) for i, nv in zip(idx, norms)])
    print(f"max_ratio={rep.max_ratio!r} pass={rep.passed}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _noise(spec, n):
    kind, _, value = spec.partition(":")
    try:
        level = float(value) if value else 1.0
    except ValueError as exc:
        raise InputError(f"--noise: bad level {value!r}") from exc
    if kind == "additive":
        return additive_noise(level * np.eye(n)), 0.0
    if kind == "multiplicative":
        return multiplicative_noise(level, n), abs(level)
    if kind == "none":
        return additive_noise(np.zeros((n, 1))), 0.0
    raise InputError("--noise must be additive[:g], multiplicative[:sigma] or none")


def cmd_sdde_pair(args):
    system, cfg = _system_config(args)
    n = system.dimension
    g, g_lip = _noise(args.noise, n)
    if args.f_lip < 0:
        raise InputError("--f-lip must be nonnegative")
    if args.f_lip > 0:
        L = args.f_lip

        def f(X):
            return L * np.tanh(X)
    else:
        f = zero_drift
    x0a = _vector(args.x0a, n, "x0a")
    x0b = _vector(args.x0b, n, "x0b")
    cfg.update(noise=args.noise, f_lip=args.f_lip, g_lip=g_lip, omega=args.omega,
               x0a=x0a.tolist(), x0b=x0b.tolist(), dt=args.dt, t_final=args.t_final,
               paths=args.paths, seed=args.seed)
    res = mean_square_contraction(system, f, g, args.f_lip, g_lip, x0a, x0b, args.omega,
                                  dt=args.dt, t_final=args.t_final, path_count=args.paths,
                                  seed=args.seed, threads=args.threads)
    _write(args, cfg, res.to_dict())
    ens = res.ensemble
    write_csv(Path(args.output) / "sdde-pair.csv", ["t", "mean_sq_distance"],
              zip(ens.times, ens.sq_distance.mean(axis=0)))
    est = res.estimate
    print(f"rate={est.rate!r} ci=[{est.ci_low!r}, {est.ci_high!r}] pass={res.passed}")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_sdde_lyapunov(args):
    cfg = {"b": args.b, "c": args.c, "sigma": args.sigma, "dt": args.dt,
           "t_final": args.t_final, "paths": args.paths, "seed": args.seed}
    res = as_lyapunov_exponent(args.b, args.c, args.sigma, args.dt, args.t_final,
                               args.paths, args.seed, threads=args.threads)
    out = res.to_dict()
    _write(args, cfg, out)
    est = res.estimate
    print(f"lyapunov={est.rate!r} ci=[{est.ci_low!r}, {est.ci_high!r}] "
          f"region={res.region_holds}")
    return EXIT_OK if out["stable"] else EXIT_FAIL


def cmd_lyapunov_renorm(args):
    system, cfg = _system_config(args)
    n = system.dimension
    C = np.eye(n)
    if args.observation:
        C = np.atleast_2d(np.array(
            [[float(v) for v in row.split(",")] for row in args.observation.split(";")]))
        if C.shape[1] != n:
            raise InputError(f"--observation needs {n} columns")
    cfg.update(observation=C.tolist())
    try:
        R = lyapunov_renorm(system.drift, C)
    except ValueError as exc:
        _write(args, cfg, {"renormed": False, "message": str(exc)})
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    A = system.drift
    resid = float(np.max(np.abs(A.T @ R.Q + R.Q @ A + C.T @ C)))
    _write(args, cfg, {"renormed": True, "Q": R.Q.tolist(), "gamma_lower": R.gamma_lower,
                       "residual": resid})
    print(f"gamma_lower={R.gamma_lower!r} residual={resid!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ddecert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ddecert {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help, system=True):
        s = sub.add_parser(name, help=help)
        if system:
            s.add_argument("--system", required=True, help="system JSON file")
        s.add_argument("--output", default="./out", help="report directory (default ./out)")
        s.set_defaults(func=func)
        return s

    s = add("certify", cmd_certify, "build the certificate at rate mu")
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--grid-points", type=int, default=33)

    s = add("min-mu", cmd_min_mu, "smallest certifiable rate")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--margin", type=float, default=None,
                   help="offset above mu* for the attached certificate (default: tol)")

    add("bounds", cmd_bounds, "closed-form sufficient rates")

    s = add("spectrum", cmd_spectrum, "collocation eigenvalues of the generator")
    s.add_argument("--N", type=int, default=32, help="nodes per panel")

    s = add("check", cmd_check, "discrete dissipativity check of a certificate")
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--N", type=int, default=32, help="nodes per panel")
    s.add_argument("--tol", type=float, default=1e-3, help="allowed negative margin")
    s.add_argument("--audit", action="store_true", help="dump nodes and Gram diagonal")

    s = add("simulate", cmd_simulate, "deterministic trajectory and contraction check")
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--x0", default="1", help="constant initial history (comma-separated)")
    s.add_argument("--h", type=float, default=1e-3)
    s.add_argument("--t-final", type=float, default=10.0)
    s.add_argument("--every", type=float, default=0.1, help="checkpoint spacing")

    s = add("sdde-pair", cmd_sdde_pair, "mean-square contraction of a coupled pair")
    s.add_argument("--omega", type=float, required=True)
    s.add_argument("--noise", default="additive:1")
    s.add_argument("--f-lip", type=float, default=0.0, help="f(x) = f_lip tanh(x)")
    s.add_argument("--x0a", default="0")
    s.add_argument("--x0b", default="1")
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--t-final", type=float, default=20.0)
    s.add_argument("--paths", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=None)

    s = add("sdde-lyapunov", cmd_sdde_lyapunov, "almost-sure Lyapunov exponent", system=False)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--t-final", type=float, default=50.0)
    s.add_argument("--paths", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=None)

    s = add("lyapunov-renorm", cmd_lyapunov_renorm, "quadratic renorming of the drift B")
    s.add_argument("--observation", default=None,
                   help="observation matrix rows 'a,b;c,d' (default identity)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version or a usage error
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (SystemFileError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
