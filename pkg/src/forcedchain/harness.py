"""Checks shared by the command line and the acceptance suite.

Every function returns plain data (rows, :class:`Check` records) so the
caller decides how to print or serialise it. Thresholds come from a
:class:`~forcedchain.config.Tolerances` instance.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .first_moments import (current_asymptotic, current_exact, current_routes, mean_square_averages,
                            q_weight_closed, q_weight_quadrature, solve_harmonics, work_asymptotic,
                            work_functional)
from .lyapunov_ode import periodic_covariance_ode
from .model import ChainModel
from .second_moments import (covariance_blocks, fluctuation_dissipation_check, macroscopic_profile_check,
                             mixing_matrix, solve_profile, variance_harmonics)
from .spectral import FiniteGreens, NeumannEigenbasis, shifted_apply, transport_coefficient


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{tag}] {self.name}: value={self.value:.6g} threshold={self.threshold:.3g}{extra}"

    def as_dict(self) -> dict:
        return asdict(self)


def _rel(a, b):
    s = max(abs(a), abs(b))
    return 0.0 if s == 0 else abs(a - b) / s


def strictly_decreasing(values) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) < 0))


def trend_slope(ns, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(n)``."""
    v = np.maximum(np.asarray(values, dtype=float), 1e-300)
    return float(np.polyfit(np.log(ns), np.log(v), 1)[0])


def trend_passes(ns, errors, floor: float, strict: bool = False) -> tuple[bool, str]:
    """Decreasing-error gate for convergence sweeps.

    Errors already at ``floor`` or below count as converged: rounding then
    dominates and no ordering is meaningful. ``strict`` demands a strictly
    decreasing sequence regardless.
    """
    errors = np.asarray(errors, dtype=float)
    if strict:
        return strictly_decreasing(errors), "strict decrease"
    if np.max(errors) <= floor:
        return True, f"all errors below {floor:g}"
    ok = strictly_decreasing(errors) or trend_slope(ns, errors) <= 0
    return bool(ok), "fitted slope <= 0"


# spectral ---------------------------------------------------------------------

def transport_checks(omega0: float, tol: Tolerances = DEFAULT_TOLERANCES, target: float | None = None):
    rep = transport_coefficient(omega0, diagnostic=True, tol=np.inf, nodes=tol.quadrature_nodes)
    out = [Check("transport routes agree", rep.spread <= tol.transport_agreement, rep.spread,
                 tol.transport_agreement)]
    if target is not None:
        for name in ("closed_form", "green_form", "kubo"):
            v = getattr(rep, name)
            out.append(Check(f"D {name} = {target}", abs(v - target) <= tol.transport_agreement,
                             abs(v - target), tol.transport_agreement))
    return out, rep


def green_residual(n: int, gamma: float, omega0: float, theta: float, ell: int) -> float:
    """``max_y ||L G(., y) - delta_y||_inf`` for the spectral Green's function."""
    basis = NeumannEigenbasis(n, omega0)
    G = FiniteGreens(basis, gamma, theta)
    mat = G.matrix(ell)
    r = shifted_apply(mat.T, G.shift(ell)) - np.eye(n + 1)
    return float(np.max(np.abs(r)))


# first moments ------------------------------------------------------------------

@dataclass
class CurrentRow:
    n: int
    J_n: float
    nJ_n: float
    J_limit: float | None
    I_n: float
    relative_error: float | None
    work_error: float | None
    runtime: float


def current_sweep(model: ChainModel, n_list):
    rows = []
    J = I = None
    if model.params.regime_valid:
        J, _ = current_asymptotic(model)
        I = work_asymptotic(model)
    for n in n_list:
        t0 = time.perf_counter()
        m = model.with_n(int(n))
        f = solve_harmonics(m)
        jn = current_exact(f)
        i_n = work_functional(f).real
        rel = werr = None
        if J is not None:
            rel = abs(n * jn - J) / abs(J) if J != 0 else 0.0
            scale = float(n) ** (2 * m.params.a)
            werr = abs(i_n / scale - I) / abs(I) if I != 0 else 0.0
        rows.append(CurrentRow(int(n), jn, n * jn, J, i_n, rel, werr, time.perf_counter() - t0))
    return rows


def current_trend_check(rows, tol: Tolerances, strict: bool = False):
    if not rows or rows[0].J_limit is None:
        return Check("current trend", False, np.nan, 0.0, "outside the scaling regime")
    if rows[0].J_limit == 0:
        return Check("current trend", True, 0.0, 0.0, "zero force")
    ns = [r.n for r in rows]
    errs = [r.relative_error for r in rows]
    ok, how = trend_passes(ns, errs, tol.converged_floor, strict)
    last = errs[-1]
    gate = last < tol.asymptotic_gate
    return Check("n J_n -> J", ok and gate, last, tol.asymptotic_gate, how)


def closed_form_checks(model: ChainModel, tol: Tolerances = DEFAULT_TOLERANCES):
    out = []
    for ell in model.force.ells:
        ell = int(ell)
        qq = q_weight_quadrature(model, ell, tol.quadrature_nodes)
        qc = q_weight_closed(model, ell)
        e = _rel(qq, qc)
        out.append(Check(f"Q({ell}) closed form vs quadrature", e <= tol.closed_form, e, tol.closed_form))
    return out


# second moments -----------------------------------------------------------------

@dataclass
class ProfileAnalysis:
    model: ChainModel
    field: object
    mixing: object
    profile: np.ndarray
    solution: object
    J_n: float
    mean_squares: np.ndarray


def analyse_profile(model: ChainModel, method: str = "direct", tol: Tolerances = DEFAULT_TOLERANCES) -> ProfileAnalysis:
    p = model.params
    basis = NeumannEigenbasis(p.n, p.omega0)
    f = solve_harmonics(model)
    jn = current_exact(f, tol.current_routes)
    p2, _ = mean_square_averages(f)
    mix = mixing_matrix(basis, p.gamma, check=False)
    prof = solve_profile(model, p2, mix, method=method, tol=tol.profile_fixed_point,
                         max_iter=tol.max_iterations).profile
    sol = covariance_blocks(model, prof, f, basis, tol.psd_floor)
    return ProfileAnalysis(model, f, mix, prof, sol, jn, p2)


def mixing_checks(mix, tol: Tolerances = DEFAULT_TOLERANCES, brute=None):
    n = mix.n
    out = [
        Check(f"M symmetric (n={n})", mix.symmetry_error() <= tol.mixing_symmetry,
              mix.symmetry_error(), tol.mixing_symmetry),
        Check(f"M row sums (n={n})", mix.row_sum_error() <= tol.mixing_rowsum,
              mix.row_sum_error(), tol.mixing_rowsum),
        Check(f"M positive (n={n})", bool(np.isfinite(mix.log_min_entry)), mix.log_min_entry,
              -np.inf, "log of smallest entry"),
        Check(f"M contraction (n={n})", mix.contraction_gap > 0, mix.contraction_gap, 0.0,
              "min_x M[x,0] > 0, i.e. rho < 1"),
    ]
    if brute is not None:
        e = float(np.max(np.abs(mix.M - brute)))
        out.append(Check(f"M brute force (n={n})", e <= tol.brute_force, e, tol.brute_force))
    return out


def identity_checks(an: ProfileAnalysis, tol: Tolerances = DEFAULT_TOLERANCES):
    p = an.model.params
    jd, jw = current_routes(an.field)
    out = [Check("current routes agree", _rel(jd, jw) <= tol.current_routes, _rel(jd, jw), tol.current_routes)]
    flux = 2 * p.gamma * (p.t_minus - an.profile[0])
    e = _rel(flux, an.J_n) if an.J_n != 0 else abs(flux)
    out.append(Check("2 gamma (T_- - <p_0^2>) = J_n", e <= tol.flux_identity, e, tol.flux_identity))
    solv = abs(an.profile[0] - p.t_minus - an.mean_squares.sum())
    out.append(Check("<p_0^2> - T_- = sum <pbar^2>", solv <= tol.profile_agreement, solv, tol.profile_agreement))
    clos = float(np.max(np.abs(np.diag(an.solution.Cp) - an.profile)))
    out.append(Check("closure diag(Cp) = profile", clos <= tol.profile_agreement, clos, tol.profile_agreement))
    return out


def fd_checks(an: ProfileAnalysis, tol: Tolerances = DEFAULT_TOLERANCES):
    p = an.model.params
    fd = fluctuation_dissipation_check(an.solution, p.gamma)
    b = an.solution.bond_currents
    if an.J_n != 0:
        spread = float(np.max(np.abs(b - an.J_n)) / abs(an.J_n))
    else:
        spread = float(np.max(np.abs(b)))
    scale = max(abs(fd.intercept), 1e-300)
    return [
        Check("F_x affine with slope -4 gamma J_n", fd.relative_deviation <= tol.fd_affine,
              fd.relative_deviation, tol.fd_affine),
        Check("F_n boundary work term", fd.boundary_deviation / scale <= tol.fd_affine,
              fd.boundary_deviation / scale, tol.fd_affine),
        Check("bond currents constant", spread <= tol.bond_constancy, spread, tol.bond_constancy),
    ]


@dataclass
class ProfileRow:
    n: int
    max_deviation: float
    min_p2: float
    energy_per_site: float
    sup_p2: float
    gradient_h1: float
    weak_error: float
    equipartition: float
    p0_check: float
    runtime: float


def profile_sweep(model: ChainModel, n_list, tol: Tolerances = DEFAULT_TOLERANCES):
    J, _ = current_asymptotic(model)
    rows = []
    for n in n_list:
        t0 = time.perf_counter()
        an = analyse_profile(model.with_n(int(n)), tol=tol)
        dev = macroscopic_profile_check(an.solution, an.model, J)
        T = an.profile
        p = an.model.params
        flux = 2 * p.gamma * (p.t_minus - T[0])
        rows.append(ProfileRow(
            n=int(n),
            max_deviation=dev.max_deviation,
            min_p2=float(T.min()),
            energy_per_site=float(an.solution.energy_profile.mean()),
            sup_p2=float(T.max()),
            gradient_h1=float((n + 1) * np.sum(np.diff(T) ** 2)),
            weak_error=max(dev.weak_errors.values()),
            equipartition=max(dev.equipartition.values()),
            p0_check=_rel(flux, an.J_n) if an.J_n else abs(flux),
            runtime=time.perf_counter() - t0,
        ))
    return rows


def bounded(values, factor: float) -> tuple[bool, float]:
    v = np.abs(np.asarray(values, dtype=float))
    if np.all(v == 0):
        return True, 1.0
    ratio = float(v.max() / v.min()) if v.min() > 0 else np.inf
    return ratio <= factor, ratio


# variance -----------------------------------------------------------------------

def variance_sweep(model: ChainModel, n_list):
    rows = []
    reports = {}
    for n in n_list:
        m = model.with_n(int(n))
        rep = variance_harmonics(m, solve_harmonics(m))
        reports[int(n)] = rep
        rows.append((int(n), rep.total_variance, rep.scaled))
    return rows, reports


def variance_ode_check(model: ChainModel, n: int = 8, steps: int = 512, tol: Tolerances = DEFAULT_TOLERANCES):
    m = model.with_n(n)
    freq = variance_harmonics(m, solve_harmonics(m)).total_variance
    ode = periodic_covariance_ode(m, steps, tol.periodic_ode)
    e = _rel(freq, ode.total_variance)
    an = analyse_profile(m, tol=tol)
    pe = float(np.max(np.abs(ode.profile - an.profile)))
    return [
        Check(f"variance frequency vs ODE (n={n})", e <= tol.variance_ode, e, tol.variance_ode),
        Check(f"profile frequency vs ODE (n={n})", pe <= 1e-6, pe, 1e-6),
    ], freq, ode


# Monte Carlo --------------------------------------------------------------------

def zscores(mean, stderr, reference):
    """``(mean - reference) / stderr``; exact agreement with zero spread counts as 0."""
    d = np.asarray(mean, dtype=float) - np.asarray(reference, dtype=float)
    se = np.asarray(stderr, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = d / se
    return np.where(se > 0, z, np.where(d == 0, 0.0, np.inf))


def simulation_checks(est, profile, bond_currents, zmax: float):
    zp = zscores(est.p2_mean, est.p2_stderr, profile)
    zj = zscores(est.current_mean, est.current_stderr, bond_currents)
    worst_p = int(np.argmax(np.abs(zp)))
    worst_j = int(np.argmax(np.abs(zj)))
    return [
        Check("simulated p^2 within z", bool(np.all(np.abs(zp) <= zmax)), float(np.abs(zp).max()), zmax,
              f"worst site {worst_p}"),
        Check("simulated currents within z", bool(np.all(np.abs(zj) <= zmax)), float(np.abs(zj).max()), zmax,
              f"worst bond {worst_j - 1}"),
    ], zp, zj
