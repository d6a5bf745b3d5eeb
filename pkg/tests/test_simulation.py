import numpy as np
import pytest

from forcedchain import (ChainParams, ChainState, Channels, ForceSpec, estimate_periodic_averages, mean_trajectory,
                         phase_resolved_means, relaxation_periods, solve_harmonics, validate)
from forcedchain.harness import zscores
from forcedchain.kernels import get_backend
from forcedchain.simulation import hamiltonian, site_energies, step

from conftest import make_model

try:
    get_backend("cython")
    HAVE_C = True
except ImportError:
    HAVE_C = False


def _energy_error(model, h, channels, steps):
    rng = np.random.default_rng(4)
    s = ChainState(rng.normal(size=model.n + 1), rng.normal(size=model.n + 1))
    e0 = hamiltonian(s.q, s.p, model.params.omega0)
    worst = 0.0
    for _ in range(steps):
        s = step(s, model, h, rng, channels)
        worst = max(worst, abs(hamiltonian(s.q, s.p, model.params.omega0) - e0))
    return worst


@pytest.mark.parametrize("flips", [False, True])
def test_energy_conserved_to_second_order(flips):
    m = make_model(6)
    ch = Channels(flips=flips, bath=False, force=False)
    e1 = _energy_error(m, 1 / 64, ch, 256)
    e2 = _energy_error(m, 1 / 128, ch, 512)
    assert e1 < 1e-2
    assert 3.0 < e1 / e2 < 5.0


def test_site_energies_sum_to_hamiltonian():
    rng = np.random.default_rng(1)
    q, p = rng.normal(size=7), rng.normal(size=7)
    e = site_energies(q, p, 1.5)
    assert e.sum() == pytest.approx(hamiltonian(q, p, 1.5))
    assert e[0] == pytest.approx(0.5 * (p[0] ** 2 + 2.25 * q[0] ** 2))


def test_step_size_limit():
    m = make_model(4)
    with pytest.raises(ValueError):
        step(ChainState(np.zeros(5), np.zeros(5)), m, 1 / 32, np.random.default_rng(0))


def test_state_validation():
    with pytest.raises(ValueError):
        ChainState(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        ChainState([np.nan, 0], [0, 0])


def test_seed_reproducibility():
    m = make_model(6)
    a = estimate_periodic_averages(m, replicas=4, burn_in=1, periods=4, seed=11)
    b = estimate_periodic_averages(m, replicas=4, burn_in=1, periods=4, seed=11)
    c = estimate_periodic_averages(m, replicas=4, burn_in=1, periods=4, seed=12)
    for f in ("p2_mean", "p2_stderr", "current_mean", "current_stderr"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert not np.array_equal(a.p2_mean, c.p2_mean)
    assert a.metadata() == {"seed": 11, "h": 1 / 256, "R": 4, "B": 1, "K": 4}


def test_thread_count_does_not_change_results():
    m = make_model(6)
    a = estimate_periodic_averages(m, replicas=6, burn_in=1, periods=3, seed=2, threads=1)
    b = estimate_periodic_averages(m, replicas=6, burn_in=1, periods=3, seed=2, threads=3)
    assert np.array_equal(a.p2_mean, b.p2_mean) and np.array_equal(a.current_mean, b.current_mean)


@pytest.mark.skipif(not HAVE_C, reason="compiled extension not built")
def test_backends_bitwise_identical():
    m = make_model(8)
    kw = dict(replicas=3, burn_in=1, periods=3, seed=5, phases=4)
    a = estimate_periodic_averages(m, backend=get_backend("python"), **kw)
    b = estimate_periodic_averages(m, backend=get_backend("cython"), **kw)
    for f in ("p2_mean", "current_mean", "phase_q", "phase_p"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_bad_step_grid_rejected():
    m = make_model(4)
    with pytest.raises(ValueError):
        estimate_periodic_averages(m, replicas=1, burn_in=0, periods=1, h=1 / 300.5)
    with pytest.raises(ValueError):
        estimate_periodic_averages(m, replicas=1, burn_in=0, periods=1, phases=7)


def test_equilibrium_reproduces_bath_temperature():
    m = validate(ChainParams(8, t_minus=1.5), ForceSpec.zero())
    est = estimate_periodic_averages(m, replicas=32, burn_in=0, periods=60, seed=3)
    assert np.all(np.abs(zscores(est.p2_mean, est.p2_stderr, 1.5)) < 3.5)
    assert np.all(np.abs(zscores(est.current_mean, est.current_stderr, 0.0)) < 3.5)
    # no force, no work at the driven end
    assert est.current_mean[-1] == 0.0


def test_phase_means_follow_mean_trajectory():
    m = make_model(8)
    times, qm, pm, qse, pse = phase_resolved_means(m, replicas=32, phases=8, burn_in=10, periods=60, seed=9)
    q, p = mean_trajectory(solve_harmonics(m), times)
    zq = (qm - q) / qse
    zp = (pm - p) / pse
    assert np.all(np.abs(zq) < 4) and np.all(np.abs(zp) < 4)


def test_phase_means_vanish_without_force():
    m = validate(ChainParams(6), ForceSpec.zero())
    _, qm, pm, qse, pse = phase_resolved_means(m, replicas=16, phases=4, burn_in=0, periods=20, seed=1)
    assert np.all(np.abs(qm / qse) < 4.5) and np.all(np.abs(pm / pse) < 4.5)


def test_relaxation_periods_grow_with_n():
    assert relaxation_periods(make_model(8)) < relaxation_periods(make_model(16))
