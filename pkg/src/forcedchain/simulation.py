"""Monte Carlo simulation of the chain with flips, thermostat and boundary force.

Each step of size ``h`` is the symmetric splitting

    flip(h/2) OU(h/2) Verlet(h) OU(h/2) flip(h/2).

The flip half-step reverses ``p_x`` (``x >= 1``) with probability
``(1 - exp(-gamma h))/2``, the parity of a Poisson count, so it is exact in
law. The thermostat half-step is the exact Ornstein-Uhlenbeck update of
``p_0``. Random numbers come from one Philox stream per replica spawned
from the master seed, drawn in Python one period at a time; both kernel
backends therefore see identical inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as _kernels
from .model import ChainModel, force_value

DEFAULT_STEPS_PER_PERIOD = 256
DEFAULT_BURN_IN = 50
DEFAULT_PERIODS = 500
DEFAULT_REPLICAS = 32


@dataclass
class ChainState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.q.shape != self.p.shape:
            raise ValueError("q and p must have the same shape")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ValueError("state has non-finite entries")

    def copy(self) -> "ChainState":
        return ChainState(self.q.copy(), self.p.copy(), self.t)


def site_energies(q, p, omega0: float) -> np.ndarray:
    """``p_x^2/2 + (q_x - q_{x-1})^2/2 + omega0^2 q_x^2/2`` with ``q_{-1} = q_0``."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    r = np.diff(q, axis=-1, prepend=q[..., :1])
    return 0.5 * (p * p + r * r + omega0 ** 2 * q * q)


def hamiltonian(q, p, omega0: float) -> float:
    """Total energy of the chain."""
    return float(np.sum(site_energies(q, p, omega0), axis=-1))


@dataclass(frozen=True)
class Channels:
    """Switches for the three ingredients of the dynamics (diagnostics)."""

    flips: bool = True
    bath: bool = True
    force: bool = True


def _channel_constants(model: ChainModel, h: float, ch: Channels):
    p = model.params
    tau = h / 2
    flip_prob = 0.5 * (1 - math.exp(-2 * p.gamma * tau)) if ch.flips else 0.0
    if ch.bath:
        decay = math.exp(-2 * p.gamma * tau)
        amp = math.sqrt(p.t_minus * (1 - math.exp(-4 * p.gamma * tau)))
    else:
        decay, amp = 1.0, 0.0
    return flip_prob, decay, amp


def _force_grid(model: ChainModel, steps: int, on: bool = True) -> np.ndarray:
    if not on:
        return np.zeros(steps + 1)
    t = np.arange(steps + 1) * (model.theta_n / steps)
    f = force_value(model.force, model.params, t)
    f[-1] = f[0]
    return np.ascontiguousarray(f)


def step(state: ChainState, model: ChainModel, h: float, rng: np.random.Generator,
         channels: Channels = Channels(), backend=None) -> ChainState:
    """Advance one state by one splitting step of size ``h``.

    ``h`` must not exceed ``theta_n / 64``. The force is evaluated at the
    state's time and at ``t + h``.
    """
    if not 0 < h <= model.theta_n / 64 * (1 + 1e-12):
        raise ValueError(f"step {h} outside (0, theta_n/64]")
    kern = backend or _kernels
    n = model.n
    flip_prob, decay, amp = _channel_constants(model, h, channels)
    if channels.force:
        f = force_value(model.force, model.params, [state.t, state.t + h])
    else:
        f = np.zeros(2)
    q = state.q.reshape(1, -1).copy()
    p = state.p.reshape(1, -1).copy()
    uflip = rng.random((1, 1, 2, n))
    gauss = rng.standard_normal((1, 1, 2))
    dummy = np.zeros((1, n + 1))
    kern.splitting_chunk(q, p, np.ascontiguousarray(f), uflip, gauss, h, model.params.omega0,
                         flip_prob, decay, amp, model.params.t_minus, model.params.gamma,
                         False, dummy, np.zeros((1, n + 2)), 0, np.zeros((1, 1, n + 1)),
                         np.zeros((1, 1, n + 1)), 0)
    return ChainState(q[0], p[0], state.t + h)


@dataclass(frozen=True)
class SimEstimate:
    """Replica means and standard errors of period-averaged observables.

    ``currents`` are bond currents for ``x = -1..n`` (``n + 2`` bonds).
    """

    p2_mean: np.ndarray
    p2_stderr: np.ndarray
    current_mean: np.ndarray
    current_stderr: np.ndarray
    replicas: int
    periods_averaged: int
    burn_in_periods: int
    seed: int
    h: float
    block_drift: np.ndarray = field(default=None)
    phase_q: np.ndarray = field(default=None)
    phase_p: np.ndarray = field(default=None)
    phase_q_stderr: np.ndarray = field(default=None)
    phase_p_stderr: np.ndarray = field(default=None)

    def metadata(self) -> dict:
        return {"seed": self.seed, "h": self.h, "R": self.replicas,
                "B": self.burn_in_periods, "K": self.periods_averaged}


def _mean_se(samples: np.ndarray):
    r = samples.shape[0]
    mean = samples.mean(axis=0)
    if r < 2:
        return mean, np.full(mean.shape, np.nan)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(r)


def _initial_states(model: ChainModel, rngs, init, R):
    m = model.n + 1
    if init is None or init == "rest":
        return np.zeros((R, m)), np.zeros((R, m))
    if init == "gibbs":
        # equilibrium at T_-: p ~ N(0, T_-), q ~ N(0, T_- K^{-1})
        from .spectral import NeumannEigenbasis
        b = NeumannEigenbasis(model.n, model.params.omega0)
        T = model.params.t_minus
        q = np.empty((R, m))
        p = np.empty((R, m))
        for r, g in enumerate(rngs):
            z = g.standard_normal(m)
            q[r] = b.psi.T @ (np.sqrt(T / b.mus) * z)
            p[r] = math.sqrt(T) * g.standard_normal(m)
        return q, p
    # a Gaussian law given as (mean, covariance) of (q, p)
    mean, cov = init
    L = np.linalg.cholesky(cov + 1e-14 * np.eye(cov.shape[0]))
    X = np.array([mean + L @ g.standard_normal(2 * m) for g in rngs])
    return np.ascontiguousarray(X[:, :m]), np.ascontiguousarray(X[:, m:])


def estimate_periodic_averages(model: ChainModel, replicas: int = DEFAULT_REPLICAS,
                               burn_in: int = DEFAULT_BURN_IN, periods: int = DEFAULT_PERIODS,
                               h: float | None = None, seed: int = 0, init="gibbs",
                               phases: int = 0, channels: Channels = Channels(),
                               threads: int = 1, backend=None) -> SimEstimate:
    """Period averages of ``p_x^2`` and bond currents over independent replicas.

    Parameters
    ----------
    h : float, optional
        Step size; ``theta_n / 256`` by default. ``theta_n / h`` must be an
        integer so that the force grid is periodic.
    init : {"gibbs", "rest"} or (mean, covariance)
        Initial law of every replica.
    phases : int
        If positive, also record ensemble means of ``q`` and ``p`` at
        ``phases`` equally spaced points of the period.
    backend : module, optional
        Kernel module; the import-time selection by default.
    """
    kern = backend or _kernels
    theta_n = model.theta_n
    steps = DEFAULT_STEPS_PER_PERIOD if h is None else int(round(theta_n / h))
    if steps < 64 or not math.isclose(steps * (theta_n / steps), theta_n):
        raise ValueError("need at least 64 steps per period")
    if h is not None and not math.isclose(steps * h, theta_n, rel_tol=1e-9):
        raise ValueError("theta_n / h must be an integer")
    h = theta_n / steps
    if phases and steps % phases:
        raise ValueError("phases must divide the number of steps per period")
    stride = steps // phases if phases else 0
    n = model.n
    m = n + 1
    R = int(replicas)
    par = model.params
    seq = np.random.SeedSequence(seed)
    rngs = [np.random.Generator(np.random.Philox(s)) for s in seq.spawn(R)]
    q, p = _initial_states(model, rngs, init, R)
    q = np.ascontiguousarray(q, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    force = _force_grid(model, steps, channels.force)
    flip_prob, decay, amp = _channel_constants(model, h, channels)

    acc_p2 = np.zeros((R, m))
    acc_j = np.zeros((R, m + 1))
    P = max(phases, 1)
    acc_q = np.zeros((R, P, m))
    acc_p = np.zeros((R, P, m))
    half = periods // 2
    first_half = None
    uflip = np.empty((R, steps, 2, n))
    gauss = np.empty((R, steps, 2))
    for period in range(burn_in + periods):
        for r, g in enumerate(rngs):
            uflip[r] = g.random((steps, 2, n))
            gauss[r] = g.standard_normal((steps, 2))
        measure = period >= burn_in
        kern.splitting_chunk(q, p, force, uflip, gauss, h, par.omega0, flip_prob, decay, amp,
                             par.t_minus, par.gamma, measure, acc_p2, acc_j, stride,
                             acc_q, acc_p, 0, threads)
        if measure and period - burn_in + 1 == half:
            first_half = acc_p2.copy()
    K = periods
    p2, p2_se = _mean_se(acc_p2 / (K * steps))
    jm, j_se = _mean_se(acc_j / (K * steps))
    drift = None
    if first_half is not None and half > 0 and K - half > 0:
        a = first_half / (half * steps)
        b = (acc_p2 - first_half) / ((K - half) * steps)
        drift = (b - a).mean(axis=0)
    out = dict(p2_mean=p2, p2_stderr=p2_se, current_mean=jm, current_stderr=j_se,
               replicas=R, periods_averaged=K, burn_in_periods=burn_in, seed=seed, h=h,
               block_drift=drift)
    if phases:
        qm, qse = _mean_se(acc_q / K)
        pm, pse = _mean_se(acc_p / K)
        out.update(phase_q=qm, phase_p=pm, phase_q_stderr=qse, phase_p_stderr=pse)
    return SimEstimate(**out)


def phase_resolved_means(model: ChainModel, replicas: int = DEFAULT_REPLICAS, phases: int = 16,
                         burn_in: int = DEFAULT_BURN_IN, periods: int = DEFAULT_PERIODS,
                         h: float | None = None, seed: int = 0, init="gibbs", threads: int = 1,
                         backend=None):
    """Ensemble means of ``q`` and ``p`` at ``t = k theta_n / phases``.

    Returns
    -------
    times, q_mean, p_mean, q_stderr, p_stderr
        Arrays of shape ``(phases,)`` and ``(phases, n + 1)``.
    """
    est = estimate_periodic_averages(model, replicas, burn_in, periods, h, seed, init,
                                     phases=phases, threads=threads, backend=backend)
    times = np.arange(phases) * model.theta_n / phases
    return times, est.phase_q, est.phase_p, est.phase_q_stderr, est.phase_p_stderr


def relaxation_periods(model: ChainModel, factor: float = 8.0) -> int:
    """Burn-in long enough for ``factor`` relaxation times of the slowest mode.

    The slowest second-moment mode decays at rate close to
    ``2 gamma (1 - rho)``, with ``rho`` the spectral radius of the mixing
    matrix restricted to the flip sites.
    """
    from .second_moments import mixing_matrix
    from .spectral import NeumannEigenbasis

    p = model.params
    M = mixing_matrix(NeumannEigenbasis(p.n, p.omega0), p.gamma).M.copy()
    M[:, 0] = 0.0
    rho = float(np.max(np.abs(np.linalg.eigvals(M))))
    rate = 2 * p.gamma * (1 - rho)
    return int(math.ceil(factor / (rate * model.theta_n)))
