import numpy as np
import pytest
import scipy.integrate as si
from hypothesis import given, settings
from hypothesis import strategies as st

from forcedchain import (ChainParams, ForceSpec, RegimeError, current_asymptotic, current_exact, current_routes,
                         force_value, mean_square_averages, mean_trajectory, q_weight_closed,
                         q_weight_quadrature, solve_harmonics, validate, work_asymptotic, work_functional)
from forcedchain.first_moments import current_report
from forcedchain.lyapunov_ode import drift_matrix
from forcedchain.spectral import shifted_matrix

from conftest import make_model

MULTI = ForceSpec.from_pairs([[1, 0.5, 0.0], [2, 0.1, -0.3], [5, 0.05, 0.02]])


def test_harmonics_match_dense_solve():
    m = make_model(20, MULTI, gamma=0.7, omega0=1.4, theta=0.8)
    f = solve_harmonics(m)
    for i, ell in enumerate(f.ells):
        rhs = np.zeros(21, complex)
        rhs[-1] = m.params.amplitude * m.force.coefficient(int(ell))
        ref = np.linalg.solve(shifted_matrix(20, m.shift(ell)), rhs)
        np.testing.assert_allclose(f.q[i], ref, rtol=1e-12, atol=1e-15)
    assert f.residual() < 1e-14


def test_mean_trajectory_solves_mean_ode():
    m = make_model(6, MULTI, gamma=0.5)
    f = solve_harmonics(m)
    A = drift_matrix(m)
    e = np.zeros(14)
    e[-1] = 1.0
    q0, p0 = mean_trajectory(f, 0.0)

    def rhs(t, X):
        return -A @ X + force_value(m.force, m.params, t) * e

    T = m.theta_n
    ts = np.linspace(0, T, 9)
    sol = si.solve_ivp(rhs, (0, T), np.concatenate([q0, p0]), t_eval=ts, rtol=1e-12, atol=1e-14,
                       method="DOP853")
    q, p = mean_trajectory(f, ts)
    np.testing.assert_allclose(sol.y.T, np.hstack([q, p]), atol=1e-10)


def test_mean_trajectory_is_periodic():
    f = solve_harmonics(make_model(8, MULTI))
    a = np.hstack(mean_trajectory(f, 0.3))
    b = np.hstack(mean_trajectory(f, 0.3 + f.model.theta_n))
    np.testing.assert_allclose(a, b, atol=1e-14)


def _time_average(fn, T, k=512):
    t = np.arange(k) * T / k
    return np.mean(fn(t), axis=0)


def test_current_routes_vs_time_domain():
    m = make_model(12, MULTI, gamma=0.8)
    f = solve_harmonics(m)
    jd, jw = current_routes(f)
    T = m.theta_n
    work = _time_average(lambda t: -force_value(m.force, m.params, t) * mean_trajectory(f, t)[1][:, -1], T)
    diss = _time_average(lambda t: -2 * m.params.gamma * np.sum(mean_trajectory(f, t)[1] ** 2, axis=1), T)
    assert jw == pytest.approx(work, rel=1e-12)
    assert jd == pytest.approx(diss, rel=1e-12)
    assert abs(jd - jw) <= 1e-12 * abs(jd)


def test_mean_squares_vs_time_domain():
    m = make_model(10, MULTI)
    f = solve_harmonics(m)
    p2, q2 = mean_square_averages(f)
    np.testing.assert_allclose(p2, _time_average(lambda t: mean_trajectory(f, t)[1] ** 2, m.theta_n), rtol=1e-12)
    np.testing.assert_allclose(q2, _time_average(lambda t: mean_trajectory(f, t)[0] ** 2, m.theta_n), rtol=1e-12)


def test_work_functional_vs_time_domain():
    m = make_model(10, MULTI)
    f = solve_harmonics(m)
    I = work_functional(f)
    ref = _time_average(lambda t: force_value(m.force, m.params, t) * mean_trajectory(f, t)[0][:, -1], m.theta_n)
    assert I.real == pytest.approx(ref, rel=1e-12)
    assert abs(I.imag) < 1e-15


def test_zero_force_gives_zero_everything():
    m = validate(ChainParams(8), ForceSpec.zero())
    f = solve_harmonics(m)
    assert current_exact(f) == 0.0
    assert work_functional(f) == 0
    assert not np.any(mean_square_averages(f)[0])
    J, table = current_asymptotic(m)
    assert J == 0 and table == {}


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 6), st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=4,
                unique_by=lambda t: t[0]),
       st.integers(2, 40), st.floats(0.1, 3.0), st.floats(0.2, 3.0))
def test_current_is_nonpositive_and_routes_agree(pairs, n, gamma, omega0):
    m = validate(ChainParams(n, gamma=gamma, omega0=omega0), ForceSpec.from_pairs([list(p) for p in pairs]))
    f = solve_harmonics(m)
    jd, jw = current_routes(f)
    assert jd <= 0
    assert abs(jd - jw) <= 1e-11 * max(abs(jd), 1e-300)


def _quad_weight_b0(gamma, omega0, theta, f2, ell):
    w = 2 * np.pi * ell / theta
    g = lambda u: np.cos(np.pi * u) ** 2 / ((4 * np.sin(np.pi * u) ** 2 + omega0 ** 2 - w * w) ** 2
                                            + (2 * gamma * w) ** 2)
    return 4 * gamma * f2 * si.quad(g, 0, 1, epsabs=1e-15, epsrel=1e-13, limit=400)[0]


@pytest.mark.parametrize("gamma,omega0,theta", [(1.0, 1.0, 1.0), (0.3, 2.0, 1.5), (2.0, 0.5, 0.7)])
def test_q_weight_b0_closed_form_and_quadrature(gamma, omega0, theta):
    m = make_model(16, MULTI, gamma=gamma, omega0=omega0, theta=theta)
    for ell in (1, 2, -5):
        f2 = abs(MULTI.coefficient(ell)) ** 2
        ref = _quad_weight_b0(gamma, omega0, theta, f2, ell)
        assert q_weight_quadrature(m, ell) == pytest.approx(ref, rel=1e-9)
        assert q_weight_closed(m, ell) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("gamma,omega0", [(1.0, 1.0), (0.4, 2.0), (3.0, 0.3)])
def test_q_weight_bpos_closed_form_vs_scipy(gamma, omega0):
    m = make_model(16, MULTI, gamma=gamma, omega0=omega0, a=0.0, b=0.5)
    g = lambda u: np.cos(np.pi * u) ** 2 / (4 * np.sin(np.pi * u) ** 2 + omega0 ** 2) ** 2
    base = 4 * gamma * si.quad(g, 0, 1, epsabs=1e-15, epsrel=1e-13, limit=400)[0]
    for ell in (1, 2):
        ref = base * abs(MULTI.coefficient(ell)) ** 2
        assert q_weight_closed(m, ell) == pytest.approx(ref, rel=1e-10)
        assert q_weight_quadrature(m, ell) == pytest.approx(ref, rel=1e-10)


def test_q_weight_bpos_reference_value():
    # gamma = omega0 = 1 and |F|^2 = 1: 2 * 5 / 5^{3/2}
    m = validate(ChainParams(16, a=0.0, b=0.5), ForceSpec.from_pairs([[1, 1.0, 0.0]]))
    assert q_weight_closed(m, 1) == pytest.approx(2 / np.sqrt(5), rel=1e-14)


def test_asymptotic_current_b0_is_exact_at_every_n():
    m = make_model(16)
    J, _ = current_asymptotic(m)
    for n in (8, 64, 512):
        jn = current_exact(solve_harmonics(m.with_n(n)))
        assert n * jn == pytest.approx(J, rel=1e-12)


def test_asymptotic_current_bpos_trend():
    m = make_model(16, a=0.0, b=0.5)
    J, _ = current_asymptotic(m)
    errs = [abs(n * current_exact(solve_harmonics(m.with_n(n))) - J) / abs(J) for n in (32, 64, 128, 256, 512)]
    assert all(np.diff(errs) < 0)
    assert errs[-1] < 0.1


def test_work_asymptotic_b0_and_bpos():
    m = make_model(16)
    I = work_asymptotic(m)
    for n in (16, 256):
        assert work_functional(solve_harmonics(m.with_n(n))).real / n ** -1.0 == pytest.approx(I, rel=1e-12)
    mb = make_model(16, a=0.0, b=0.5)
    Ib = work_asymptotic(mb)
    errs = [abs(work_functional(solve_harmonics(mb.with_n(n))).real - Ib) for n in (64, 256, 1024)]
    assert all(np.diff(errs) < 0)


def test_regime_errors():
    m = make_model(16, a=-0.3, b=0.0)
    for fn in (lambda: current_asymptotic(m), lambda: work_asymptotic(m), lambda: q_weight_closed(m, 1)):
        with pytest.raises(RegimeError):
            fn()


def test_current_report_fields():
    rep = current_report(make_model(32))
    assert rep.J_n == pytest.approx(rep.J_n_plancherel, rel=1e-12)
    assert 32 * rep.J_n == pytest.approx(rep.J_limit, rel=1e-12)
