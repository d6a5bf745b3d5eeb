"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import math
import os
import sys
import time

import mpmath as mp
import numpy as np
import pytest

from forcedchain import (ChainParams, ForceSpec, NeumannEigenbasis, estimate_periodic_averages,
                         mixing_matrix, mixing_matrix_bruteforce, relaxation_periods, solve_harmonics, validate,
                         work_asymptotic, work_functional)
from forcedchain import harness as H
from forcedchain.config import DEFAULT_TOLERANCES as TOL
from forcedchain.first_moments import q_weight_closed, q_weight_quadrature

D_TARGET = 0.3819660113
THREADS = os.cpu_count() or 1
LINES = []


def emit(k, title, passed, detail, capsys=None):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {k:2d} {title}: {detail}"
    LINES.append(line)
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)
    return passed


def reference_model(n=16, **kw):
    """gamma = omega0 = theta = 1, F(+-1) = 1/2, (a, b) = (-1/2, 0) unless overridden."""
    return validate(ChainParams(n, **kw), ForceSpec.cosine(1.0))


# extended-precision current ------------------------------------------------------

def _mp_thomas(c, n, rhs_last):
    m = n + 1
    cp = [mp.mpf(0)] * m
    d = [mp.mpf(0)] * m
    for i in range(m):
        diag = c + (1 if i in (0, m - 1) else 2)
        r = rhs_last if i == m - 1 else 0
        piv = diag if i == 0 else diag + cp[i - 1]
        d[i] = r / piv if i == 0 else (r + d[i - 1]) / piv
        cp[i] = -1 / piv
    for i in range(m - 2, -1, -1):
        d[i] = d[i] - cp[i] * d[i + 1]
    return d


def _mp_lattice_green01(lam):
    s = mp.sqrt(1 + 4 / lam)
    rho = 1 + lam / 2 * (1 + s)
    pref = 1 / (lam * s)
    if abs(rho) < 1:
        rho, pref = 1 / rho, -pref
    return pref, pref / rho


def mp_current_errors(model, n):
    """Relative errors of ``n J_n`` and ``I_n / n^(2a)`` for b = 0, in extended precision.

    The finite-chain error decays like ``|rho|^(-2n)``; the working precision
    is chosen from that rate so the error is resolved.
    """
    p = model.params
    ells = [int(l) for l in model.force.ells]
    rho_min = min(abs(complex(_mp_lattice_green01(complex(model.shift(l)))[0]
                              / _mp_lattice_green01(complex(model.shift(l)))[1])) for l in ells)
    dps = int(2 * n * math.log10(rho_min)) + 60
    with mp.workdps(dps):
        gamma, omega0, theta = mp.mpf(p.gamma), mp.mpf(p.omega0), mp.mpf(p.theta)
        amp = mp.mpf(n) ** mp.mpf(p.a)
        Jn = mp.mpf(0)
        In = mp.mpc(0)
        J = mp.mpf(0)
        Ilim = mp.mpf(0)
        for ell in ells:
            F = mp.mpc(model.force.coefficient(ell))
            w = 2 * mp.pi * ell / theta
            c = omega0 ** 2 - w * w + 2j * gamma * w
            q = _mp_thomas(c, n, amp * F)
            Jn += -2 * gamma * w * w * mp.fsum(abs(v) ** 2 for v in q)
            In += amp * F * mp.conj(q[-1])
            g0, g1 = _mp_lattice_green01(c)
            Q = -theta * abs(F) ** 2 / (2 * mp.pi * ell) * mp.im(g0 + g1)
            J += -(2 * mp.pi / theta) ** 2 * ell * ell * Q
            # I-limit: 2 |F|^2 int cos^2(pi u) Re 1/(4 sin^2 + c) du = |F|^2 Re(G(0) + G(1))
            Ilim += abs(F) ** 2 * mp.re(g0 + g1)
        e_cur = abs((n * Jn - J) / J)
        e_work = abs((mp.re(In) / amp ** 2 - Ilim) / Ilim)
        return e_cur, e_work, J, Ilim


# criteria -----------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    rep = H.transport_checks(1.0, TOL, D_TARGET)[1]
    dt = time.perf_counter() - t0
    errs = [abs(v - D_TARGET) for v in (rep.closed_form, rep.green_form, rep.kubo)]
    ok = max(errs) <= 1e-9 and dt < 1.0
    return ok, f"max |D - {D_TARGET}| over 3 routes = {max(errs):.2e} (tol 1e-9), {dt:.3f} s (limit 1 s)"


def criterion_2():
    t0 = time.perf_counter()
    worst = max(H.green_residual(n, 1.0, 1.0, 1.0, ell) for n in (4, 64, 512) for ell in (0, 1, 5))
    dt = time.perf_counter() - t0
    return worst < 1e-10 and dt < 10, f"max residual {worst:.2e} (tol 1e-10), {dt:.2f} s (limit 10 s)"


def criterion_3():
    t0 = time.perf_counter()
    an = H.analyse_profile(reference_model(128))
    checks = H.identity_checks(an)
    routes, flux = checks[0], checks[1]
    dt = time.perf_counter() - t0
    ok = routes.value <= 1e-12 and flux.value <= 1e-9 and dt < 30
    return ok, (f"routes rel. diff {routes.value:.2e} (tol 1e-12), flux identity rel. diff {flux.value:.2e} "
                f"(tol 1e-9), {dt:.2f} s (limit 30 s)")


def criterion_4():
    t0 = time.perf_counter()
    sym = row = 0.0
    gap = np.inf
    positive = True
    rho_small = 0.0
    for n in (4, 16, 64, 128):
        mix = mixing_matrix(NeumannEigenbasis(n), 1.0, check=False)
        sym = max(sym, mix.symmetry_error())
        row = max(row, mix.row_sum_error())
        positive &= bool(np.isfinite(mix.log_min_entry) and np.all(mix.M > 0))
        gap = min(gap, mix.contraction_gap)
        if n <= 16:
            Mh = mix.M.copy()
            Mh[:, 0] = 0
            rho_small = max(rho_small, float(np.max(np.abs(np.linalg.eigvals(Mh)))))
    b = NeumannEigenbasis(4)
    brute = float(np.max(np.abs(mixing_matrix(b, 1.0).M - mixing_matrix_bruteforce(b, 1.0))))
    dt = time.perf_counter() - t0
    # rho(M restricted) <= max row sum = 1 - min_x M[x,0] < 1 whenever the gap is positive
    ok = sym <= 1e-12 and row <= 1e-10 and positive and gap > 0 and brute <= 1e-12 and dt < 60
    return ok, (f"symmetry {sym:.1e}, row sums {row:.1e}, positive={positive}, min M[x,0]={gap:.2e} > 0 "
                f"(rho<1; rho={rho_small:.6f} for n<=16), brute force {brute:.1e}, {dt:.2f} s")


def criterion_5():
    t0 = time.perf_counter()
    model = reference_model()
    ns = (64, 128, 256, 512)
    rows = H.current_sweep(model, ns)
    float_errs = [r.relative_error for r in rows]
    hp = [mp_current_errors(model, n)[0] for n in ns]
    strict = all(hp[i + 1] < hp[i] for i in range(3))
    below = hp[-1] < 0.05
    dt = time.perf_counter() - t0
    ok = strict and below and dt < 300
    errs = ", ".join(mp.nstr(e, 3) for e in hp)
    return ok, (f"|nJ_n - J|/|J| = {errs} (extended precision; float64 gives "
                f"{max(float_errs):.1e} at rounding level); strictly decreasing={strict}, "
                f"below 5% at n=512={below}, {dt:.1f} s")


def criterion_6():
    an = H.analyse_profile(reference_model(128))
    fd, _, bonds = H.fd_checks(an)
    ok = fd.value < 1e-9 and bonds.value <= 1e-9
    return ok, f"F_x affine deviation {fd.value:.2e} (tol 1e-9), bond currents spread {bonds.value:.2e} (tol 1e-9)"


_SWEEP = {}


def profile_sweep_rows():
    if "rows" not in _SWEEP:
        t0 = time.perf_counter()
        _SWEEP["rows"] = H.profile_sweep(reference_model(), (32, 64, 128, 256))
        _SWEEP["time"] = time.perf_counter() - t0
    return _SWEEP["rows"], _SWEEP["time"]


def criterion_7():
    rows, dt = profile_sweep_rows()
    devs = [r.max_deviation for r in rows]
    decreasing = all(devs[i + 1] < devs[i] for i in range(len(devs) - 1))
    floor = min(r.min_p2 for r in rows) - 1.0
    flat = 0.0
    for n in (32, 64, 128, 256):
        m = validate(ChainParams(n), ForceSpec.zero())
        flat = max(flat, float(np.max(np.abs(H.analyse_profile(m).profile - 1.0))))
    ok = decreasing and flat <= 1e-12 and floor >= -1e-12 and dt < 600
    return ok, (f"max deviation {', '.join(f'{d:.3e}' for d in devs)} decreasing={decreasing}; "
                f"zero force flat to {flat:.1e}; min_x <p_x^2> - T_- = {floor:.2e}; {dt:.1f} s")


def criterion_8():
    rows, _ = profile_sweep_rows()
    ratios = {name: H.bounded([getattr(r, name) for r in rows], 10)[1]
              for name in ("energy_per_site", "sup_p2", "gradient_h1")}
    ok = all(v <= 10 for v in ratios.values())
    return ok, "max/min ratios " + ", ".join(f"{k}={v:.4f}" for k, v in ratios.items()) + " (limit 10)"


def criterion_9():
    t0 = time.perf_counter()
    rows, _ = H.variance_sweep(reference_model(), (16, 32, 64))
    ok_b, ratio = H.bounded([r[2] for r in rows], 10)
    checks, freq, ode = H.variance_ode_check(reference_model(), 8)
    rel = checks[0].value
    dt = time.perf_counter() - t0
    ok = ok_b and rel < 0.01 and dt < 600
    scaled = ", ".join(f"{r[2]:.4e}" for r in rows)
    return ok, (f"n^2 variance = {scaled}, max/min {ratio:.4f} (limit 10); frequency vs ODE at n=8 "
                f"rel. diff {rel:.1e} (tol 1%); {dt:.1f} s")


def criterion_10():
    t0 = time.perf_counter()
    model = reference_model(16)
    burn = relaxation_periods(model)
    an = H.analyse_profile(model)
    est = estimate_periodic_averages(model, replicas=32, burn_in=burn, periods=500, seed=0, threads=THREADS)
    checks, zp, zj = H.simulation_checks(est, an.profile, an.solution.bond_currents, 3.0)
    eq = validate(ChainParams(16), ForceSpec.zero())
    est0 = estimate_periodic_averages(eq, replicas=32, burn_in=burn, periods=500, seed=1, threads=THREADS)
    z0 = H.zscores(est0.p2_mean, est0.p2_stderr, 1.0)
    dt = time.perf_counter() - t0
    ok = all(c.passed for c in checks) and bool(np.all(np.abs(z0) <= 3)) and dt < 900
    return ok, (f"R=32, K=500, B={burn}: max |z| p^2 {np.max(np.abs(zp)):.2f}, currents "
                f"{np.max(np.abs(zj)):.2f}; equilibrium max |z| {np.max(np.abs(z0)):.2f} (limit 3); {dt:.0f} s")


def criterion_11():
    bpos = reference_model(16, a=0.0, b=0.5)
    b0 = reference_model(16)
    e_pos = max(abs(q_weight_closed(bpos, l) - q_weight_quadrature(bpos, l)) / q_weight_quadrature(bpos, l)
                for l in (1, -1))
    e_b0 = max(abs(q_weight_closed(b0, l) - q_weight_quadrature(b0, l)) / abs(q_weight_quadrature(b0, l))
               for l in (1, -1))
    ns = (64, 128, 256, 512)
    Ib = work_asymptotic(bpos)
    werr_pos = [abs(work_functional(solve_harmonics(bpos.with_n(n))).real - Ib) / Ib for n in ns]
    werr_b0 = [mp_current_errors(b0, n)[1] for n in ns]
    t_pos = all(werr_pos[i + 1] < werr_pos[i] for i in range(3))
    t_b0 = all(werr_b0[i + 1] < werr_b0[i] for i in range(3))
    ok = e_pos <= 1e-8 and e_b0 <= 1e-8 and t_pos and t_b0
    return ok, (f"Q closed vs quadrature: b>0 {e_pos:.1e}, b=0 {e_b0:.1e} (tol 1e-8); I_n/n^2a error "
                f"b>0 {', '.join(f'{e:.3f}' for e in werr_pos)} decreasing={t_pos}; "
                f"b=0 {', '.join(mp.nstr(e, 2) for e in werr_b0)} decreasing={t_b0}")


CRITERIA = [
    (1, "transport coefficient", criterion_1),
    (2, "Green's residuals", criterion_2),
    (3, "exact current identities", criterion_3),
    (4, "mixing-matrix invariants", criterion_4),
    (5, "asymptotic current", criterion_5),
    (6, "fluctuation-dissipation exactness", criterion_6),
    (7, "profile law", criterion_7),
    (8, "energy and H1 bounds", criterion_8),
    (9, "variance scaling", criterion_9),
    (10, "cross-engine Monte Carlo", criterion_10),
    (11, "closed forms and work limit", criterion_11),
]


@pytest.mark.parametrize("k,title,fn", CRITERIA, ids=[f"criterion_{k}" for k, _, _ in CRITERIA])
def test_criterion(k, title, fn, capsys):
    ok, detail = fn()
    assert emit(k, title, ok, detail, capsys), detail


def test_supplementary_current_trend_bpos(capsys):
    """With (a, b) = (0, 1/2) the finite-n error is visible in float64 and must shrink."""
    model = reference_model(16, a=0.0, b=0.5)
    rows = H.current_sweep(model, (16, 32, 64, 128, 256, 512))
    errs = [r.relative_error for r in rows]
    ok = all(np.diff(errs) < 0)
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] supplementary (a,b)=(0,1/2) current error "
              + ", ".join(f"{e:.3f}" for e in errs))
    assert ok


if __name__ == "__main__":
    results = [emit(k, title, *fn()) for k, title, fn in CRITERIA]
    sys.exit(0 if all(results) else 1)
