"""Pure numpy versions of the hot loops.

Signatures match the compiled module ``_ckernels`` exactly so either can be
selected at import time by :mod:`forcedchain.kernels`.
"""
import numpy as np

from .errors import SingularPivotError

_PIVOT_FLOOR = 1e-14


def shifted_tridiag_solve(c, rhs):
    """Solve ``(c_k - Delta_N) u_k = rhs_k`` for each row ``k``.

    Parameters
    ----------
    c : complex array, shape (k,)
    rhs : complex array, shape (k, n + 1)

    Returns
    -------
    complex array, shape (k, n + 1)
    """
    c = np.ascontiguousarray(c, dtype=np.complex128)
    rhs = np.ascontiguousarray(rhs, dtype=np.complex128)
    k, m = rhs.shape
    if m < 2:
        raise ValueError("need at least two sites")
    scale = np.maximum(np.abs(c) + 2.0, 1.0)
    cp = np.empty((k, m), dtype=np.complex128)
    dp = np.empty((k, m), dtype=np.complex128)
    piv = c + 1.0
    for i in range(m):
        if i > 0:
            piv = c + (1.0 if i == m - 1 else 2.0) + cp[:, i - 1]
        bad = np.abs(piv) <= _PIVOT_FLOOR * scale
        if np.any(bad):
            raise SingularPivotError(f"pivot {i} vanished for shift {c[np.argmax(bad)]}")
        # off-diagonals are -1: u_i - (1/piv) u_{i+1} = ...
        cp[:, i] = -1.0 / piv
        prev = dp[:, i - 1] if i > 0 else 0.0
        dp[:, i] = (rhs[:, i] + prev) / piv
    u = np.empty_like(dp)
    u[:, -1] = dp[:, -1]
    for i in range(m - 2, -1, -1):
        u[:, i] = dp[:, i] - cp[:, i] * u[:, i + 1]
    return u


def splitting_chunk(q, p, force, uflip, gauss, h, omega0, flip_prob, ou_decay, ou_amp,
                    t_minus, gamma, measure, acc_p2, acc_j, phase_stride, acc_q, acc_p,
                    step0, threads=1):
    """Advance every replica through ``uflip.shape[1]`` Strang steps.

    Parameters
    ----------
    q, p : float arrays, shape (R, n + 1)
        Updated in place.
    force : float array, shape (S + 1,)
        Boundary force on the periodic grid ``k h``, ``k = 0..S``.
    uflip : float array, shape (R, steps, 2, n)
        Uniforms for the two flip half-steps of each step.
    gauss : float array, shape (R, steps, 2)
        Normals for the two thermostat half-steps.
    measure : bool
        Accumulate observables after each step.
    acc_p2 : (R, n + 1), acc_j : (R, n + 2)
        Sums of ``p_x^2`` and of bond currents ``x = -1..n``.
    phase_stride : int
        Record ``q, p`` into ``acc_q, acc_p`` (shape (R, P, n + 1)) whenever
        the step count within the period is a multiple of it; 0 disables.
    step0 : int
        Grid index of the first step within the period.
    threads : int
        Ignored; present for signature parity.
    """
    steps = uflip.shape[1]
    S = force.shape[0] - 1
    hh = 0.5 * h
    w2 = omega0 * omega0
    k = step0
    for s in range(steps):
        # flip and thermostat half-steps
        flips = uflip[:, s, 0, :] < flip_prob
        p[:, 1:] = np.where(flips, -p[:, 1:], p[:, 1:])
        p[:, 0] = p[:, 0] * ou_decay + ou_amp * gauss[:, s, 0]
        # velocity Verlet on the forced harmonic flow
        f0 = force[k]
        f1 = force[k + 1]
        acc = _accel(q, w2)
        acc[:, -1] += f0
        p += hh * acc
        q += h * p
        acc = _accel(q, w2)
        acc[:, -1] += f1
        p += hh * acc
        p[:, 0] = p[:, 0] * ou_decay + ou_amp * gauss[:, s, 1]
        flips = uflip[:, s, 1, :] < flip_prob
        p[:, 1:] = np.where(flips, -p[:, 1:], p[:, 1:])
        k += 1
        if k == S:
            k = 0
        if measure:
            acc_p2 += p * p
            acc_j[:, 0] += 2.0 * gamma * (t_minus - p[:, 0] * p[:, 0])
            acc_j[:, 1:-1] -= p[:, :-1] * (q[:, 1:] - q[:, :-1])
            acc_j[:, -1] -= force[k] * p[:, -1]
            if phase_stride > 0 and k % phase_stride == 0:
                slot = k // phase_stride
                acc_q[:, slot] += q
                acc_p[:, slot] += p
    return k


def _accel(q, w2):
    a = -w2 * q
    d = q[:, 1:] - q[:, :-1]
    a[:, :-1] += d
    a[:, 1:] -= d
    return a
