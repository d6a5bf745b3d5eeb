"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for a bad
configuration or a request outside the supported regime.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness as H
from . import io
from .config import RunConfig, load_config
from .errors import ForcedChainError, InvariantFailure, RegimeError, ValidationError
from .first_moments import solve_harmonics
from .kernels import BACKEND
from .model import ChainModel, validate
from .second_moments import mixing_matrix_bruteforce
from .simulation import DEFAULT_PERIODS, DEFAULT_REPLICAS, estimate_periodic_averages, relaxation_periods

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def _n_list(text):
    try:
        vals = [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad n list {text!r}") from exc
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("n list needs positive integers")
    return vals


def _burn_in(text):
    if text == "auto":
        return text
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("burn-in must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration (defaults to the reference chain)")
    common.add_argument("--n", type=int, help="chain length, overrides the config")
    common.add_argument("--n-list", type=_n_list, help="comma separated chain lengths for sweeps")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", type=Path, default=Path("out"))
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--strict", action="store_true",
                        help="require strictly decreasing error sequences in sweeps")

    ap = argparse.ArgumentParser(prog="forcedchain", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("current", parents=[common], help="current sweep over n")
    sub.add_parser("profile", parents=[common], help="temperature profile and exact identities")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo against the analytic engine")
    for p in (sim, sub.add_parser("verify-all", parents=[common], help="every check at default sizes")):
        p.add_argument("--replicas", type=int, default=DEFAULT_REPLICAS)
        p.add_argument("--periods", type=int, default=DEFAULT_PERIODS)
        p.add_argument("--burn-in", type=_burn_in, default="auto",
                       help="periods discarded first; 'auto' uses eight slowest relaxation times")
        p.add_argument("--steps-per-period", type=int, default=256)
    sub.add_parser("variance", parents=[common], help="variance scaling over n")
    return ap


def _config(args) -> RunConfig:
    try:
        cfg = load_config(args.config) if args.config else RunConfig.default()
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if args.n is not None:
        cfg = replace(cfg, params=cfg.params.with_n(args.n))
    return cfg


def _model(cfg: RunConfig, **kw) -> ChainModel:
    return validate(cfg.params, cfg.force, **kw)


class Report:
    def __init__(self, command, cfg, out_dir):
        self.command = command
        self.cfg = cfg
        self.out_dir = Path(out_dir)
        self.checks: list[H.Check] = []
        self.files: list[str] = []
        self.extra: dict = {}
        self.t0 = time.perf_counter()

    def add(self, checks):
        for c in checks:
            print(c.line())
            self.checks.append(c)

    def csv(self, name, columns, rows):
        path = io.write_csv(self.out_dir / name, columns, rows)
        self.files.append(path.name)
        return path

    def json(self, name, data):
        path = io.write_json(self.out_dir / name, data)
        self.files.append(path.name)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def finish(self) -> int:
        self.json("report.json", {
            "command": self.command,
            "config": self.cfg.to_dict(),
            "backend": BACKEND,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
            "files": sorted(set(self.files)),
            "runtime_s": time.perf_counter() - self.t0,
            **self.extra,
        })
        print(("PASS" if self.passed else "FAIL") + f": {self.command} ({sum(c.passed for c in self.checks)}"
              f"/{len(self.checks)} checks)")
        return EXIT_OK if self.passed else EXIT_FAIL


# commands -----------------------------------------------------------------------

def cmd_current(args, cfg, rep: Report, n_list=None):
    model = _model(cfg, asymptotic=True)
    n_list = n_list or args.n_list or [64, 128, 256, 512]
    rep.csv("harmonics.csv", io.HARMONICS_COLUMNS, io.harmonics_rows(solve_harmonics(model)))
    rows = H.current_sweep(model, n_list)
    rep.csv("current.csv", io.CURRENT_COLUMNS, [(r.n, r.J_n, r.nJ_n, r.J_limit, r.I_n) for r in rows])
    rep.extra["current_rows"] = [vars(r) for r in rows]
    for r in rows:
        print(f"  n={r.n:5d}  nJ_n={r.nJ_n:.12g}  J={r.J_limit:.12g}  rel.err={r.relative_error:.3e}")
    rep.add([H.current_trend_check(rows, cfg.tolerances, args.strict)])
    if not model.force.is_zero:
        rep.add(H.closed_form_checks(model, cfg.tolerances))
        ns = [r.n for r in rows]
        werr = [r.work_error for r in rows]
        ok, how = H.trend_passes(ns, werr, cfg.tolerances.converged_floor, args.strict)
        rep.add([H.Check("I_n / n^2a trend", ok, werr[-1], cfg.tolerances.asymptotic_gate, how)])


def _profile_rows(an: H.ProfileAnalysis, J_limit):
    n = an.model.n
    p = an.model.params
    u = np.arange(n + 1) / n
    if J_limit is not None:
        from .spectral import transport_coefficient
        T_u = p.t_minus - 4 * p.gamma * J_limit * u / transport_coefficient(p.omega0)
    else:
        T_u = [None] * (n + 1)
    s = an.solution
    bonds = s.bond_currents
    for x in range(n + 1):
        yield (x, u[x], an.profile[x], T_u[x], s.energy_profile[x], s.F_profile[x], bonds[x + 1])


def cmd_profile(args, cfg, rep: Report):
    tol = cfg.tolerances
    model = _model(cfg)
    an = H.analyse_profile(model, tol=tol)
    J = None
    if model.params.regime_valid:
        from .first_moments import current_asymptotic
        J, _ = current_asymptotic(model)
    rep.csv("profile.csv", io.PROFILE_COLUMNS, _profile_rows(an, J))
    rep.add(H.mixing_checks(an.mixing, tol))
    rep.add(H.identity_checks(an, tol))
    rep.add(H.fd_checks(an, tol))
    t_minus = model.params.t_minus
    slack = float(an.profile.min() - t_minus)
    rep.add([H.Check("min <p_x^2> >= T_-", slack >= -tol.min_profile_slack, slack, -tol.min_profile_slack)])
    if model.force.is_zero:
        flat = float(np.max(np.abs(an.profile - t_minus)))
        rep.add([H.Check("flat equilibrium profile", flat <= tol.flat_profile, flat, tol.flat_profile)])
    if args.n_list and J is not None:
        _profile_sweep(args, cfg, rep, model)


def _profile_sweep(args, cfg, rep, model):
    tol = cfg.tolerances
    rows = H.profile_sweep(model, args.n_list, tol)
    rep.extra["profile_rows"] = [vars(r) for r in rows]
    ns = [r.n for r in rows]
    for r in rows:
        print(f"  n={r.n:4d}  max dev={r.max_deviation:.4e}  min p2={r.min_p2:.12g}")
    devs = [r.max_deviation for r in rows]
    if model.force.is_zero:
        rep.add([H.Check("profile deviation (flat)", max(devs) <= tol.flat_profile, max(devs), tol.flat_profile)])
    else:
        ok = H.strictly_decreasing(devs) if args.strict else H.trend_passes(ns, devs, tol.converged_floor)[0]
        rep.add([H.Check("profile deviation decreases", ok, devs[-1], devs[0])])
    worst = min(r.min_p2 for r in rows) - model.params.t_minus
    rep.add([H.Check("min <p_x^2> >= T_- over sweep", worst >= -tol.min_profile_slack, worst,
                     -tol.min_profile_slack)])
    for name in ("energy_per_site", "sup_p2", "gradient_h1"):
        ok, ratio = H.bounded([getattr(r, name) for r in rows], tol.bounded_ratio)
        rep.add([H.Check(f"{name} bounded", ok, ratio, tol.bounded_ratio, "max/min")])


def cmd_simulate(args, cfg, rep: Report):
    tol = cfg.tolerances
    model = _model(cfg)
    an = H.analyse_profile(model, tol=tol)
    burn = relaxation_periods(model) if args.burn_in == "auto" else args.burn_in
    h = model.theta_n / args.steps_per_period
    est = estimate_periodic_averages(model, replicas=args.replicas, burn_in=burn, periods=args.periods,
                                     h=h, seed=args.seed, threads=args.threads)
    checks, zp, zj = H.simulation_checks(est, an.profile, an.solution.bond_currents, tol.mc_zscore)
    n = model.n
    # sim.csv: one row per site; bonds are keyed by their left end (x = -1 .. n)
    rep.csv("sim.csv", io.SIM_COLUMNS,
            [(x, est.p2_mean[x], est.p2_stderr[x], est.current_mean[x + 1], est.current_stderr[x + 1])
             for x in range(n + 1)])
    rep.csv("sim_compare.csv", ("kind", "index", "simulated", "stderr", "analytic", "z"),
            [("p2", x, est.p2_mean[x], est.p2_stderr[x], an.profile[x], zp[x]) for x in range(n + 1)]
            + [("current", x - 1, est.current_mean[x], est.current_stderr[x], an.solution.bond_currents[x], zj[x])
               for x in range(n + 2)])
    meta = est.metadata()
    meta.update(backend=BACKEND, threads=args.threads, rng="Philox, SeedSequence(seed).spawn(R)")
    rep.json("sim_meta.json", meta)
    rep.extra["simulation"] = meta
    if est.block_drift is not None:
        rep.extra["block_drift_max"] = float(np.max(np.abs(est.block_drift)))
    rep.add(checks)
    bad = [x for x in range(n + 1) if abs(zp[x]) > tol.mc_zscore]
    if bad:
        print(f"  offending sites: {bad}")
    bad = [x - 1 for x in range(n + 2) if abs(zj[x]) > tol.mc_zscore]
    if bad:
        print(f"  offending bonds: {bad}")


def cmd_variance(args, cfg, rep: Report, n_list=None):
    tol = cfg.tolerances
    model = _model(cfg)
    n_list = n_list or args.n_list or [16, 32, 64]
    rows, reports = H.variance_sweep(model, n_list)
    rep.csv("variance_scaling.csv", io.VARIANCE_TOTAL_COLUMNS, rows)
    vrows = []
    for n, r in reports.items():
        for m, V in r.V_harmonics.items():
            vrows.extend((n, m, x, V[x].real, V[x].imag) for x in range(n + 1))
    rep.csv("variance.csv", io.VARIANCE_COLUMNS, vrows)
    for n, total, scaled in rows:
        print(f"  n={n:4d}  variance={total:.6e}  n^2 variance={scaled:.6e}")
    ok, ratio = H.bounded([r[2] for r in rows], tol.bounded_ratio)
    rep.add([H.Check("n^2 variance bounded", ok, ratio, tol.bounded_ratio, "max/min")])
    if not model.force.is_zero:
        checks, _, _ = H.variance_ode_check(model, 8, tol=tol)
        rep.add(checks[:1])


def cmd_verify_all(args, cfg, rep: Report):
    tol = cfg.tolerances
    p = cfg.params
    checks, _ = H.transport_checks(p.omega0, tol)
    rep.add(checks)
    for n in (4, 64, 512):
        for ell in (0, 1, 5):
            r = H.green_residual(n, p.gamma, p.omega0, p.theta, ell)
            rep.add([H.Check(f"Green residual n={n} l={ell}", r < tol.green_residual, r, tol.green_residual)])
    from .second_moments import mixing_matrix
    from .spectral import NeumannEigenbasis
    for n in (4, 16, 64, 128):
        basis = NeumannEigenbasis(n, p.omega0)
        brute = mixing_matrix_bruteforce(basis, p.gamma) if n == 4 else None
        rep.add(H.mixing_checks(mixing_matrix(basis, p.gamma, check=False), tol, brute))
    model = _model(cfg)
    if model.params.regime_valid:
        cmd_current(args, cfg, rep)
    big = replace(cfg, params=cfg.params.with_n(128))
    an = H.analyse_profile(_model(big), tol=tol)
    rep.add(H.identity_checks(an, tol))
    rep.add(H.fd_checks(an, tol))
    if model.params.regime_valid:
        sweep = argparse.Namespace(**{**vars(args), "n_list": [32, 64, 128, 256]})
        _profile_sweep(sweep, cfg, rep, model)
    if abs(p.b) < 1e-12 and abs(p.a + 0.5) < 1e-12:
        cmd_variance(args, cfg, rep)
    sim_cfg = replace(cfg, params=cfg.params.with_n(args.n or 16))
    cmd_simulate(args, sim_cfg, rep)


COMMANDS = {
    "current": cmd_current,
    "profile": cmd_profile,
    "simulate": cmd_simulate,
    "variance": cmd_variance,
    "verify-all": cmd_verify_all,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        rep = Report(args.command, cfg, args.out_dir)
        COMMANDS[args.command](args, cfg, rep)
    except (ConfigError, ValidationError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantFailure as exc:
        where = f" at {exc.where}" if getattr(exc, "where", None) is not None else ""
        print(f"check failed{where}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ForcedChainError as exc:
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return rep.finish()


if __name__ == "__main__":
    sys.exit(main())
