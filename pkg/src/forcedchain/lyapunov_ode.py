"""Time-domain periodic solution of the first two moment equations.

An independent engine for small chains. The moments obey

    dX/dt = -A X + F_n(t) e,
    dC/dt = -A C - C A^T + Sigma(diag C_pp) + F_n(t) (e X^T + X e^T),

with ``C = E[X X^T]`` and ``e`` the unit vector of ``p_n``. The noise
matrix is ``4 gamma T_-`` at ``p_0`` and ``4 gamma E p_x^2`` at ``p_x``,
``x >= 1``, so the system is affine in ``(X, C)``. Both are integrated
with classical RK4 and the periodic orbit is found as the fixed point of
the affine period map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoPeriodicConvergence
from .model import ChainModel, force_value
from .spectral import shifted_matrix


def drift_matrix(model: ChainModel) -> np.ndarray:
    """``A = [[0, -I], [K, 2 gamma I]]`` with ``K = omega0^2 - Delta_N``."""
    p = model.params
    m = p.n + 1
    K = shifted_matrix(p.n, p.omega0 ** 2)
    A = np.zeros((2 * m, 2 * m))
    A[:m, m:] = -np.eye(m)
    A[m:, :m] = K
    A[m:, m:] = 2 * p.gamma * np.eye(m)
    return A


def _rk4_poly(Z: np.ndarray) -> np.ndarray:
    I = np.eye(Z.shape[0])
    Z2 = Z @ Z
    return I + Z + Z2 / 2 + Z2 @ Z / 6 + Z2 @ Z2 / 24


def _matrix_power(P: np.ndarray, k: int) -> np.ndarray:
    return np.linalg.matrix_power(P, k)


@dataclass(frozen=True)
class PeriodicMoments:
    """Second moments along one period on the grid ``t_k = k h``.

    Attributes
    ----------
    times : (N + 1,)
    p2 : (N + 1, n + 1)
        ``E p_x^2(t)``.
    C0 : full second-moment matrix at ``t = 0``.
    X0 : mean at ``t = 0``.
    periodicity_error : float
        ``max |C(theta_n) - C(0)|`` after one more period from the fixed point.
    """

    times: np.ndarray
    p2: np.ndarray
    C0: np.ndarray
    X0: np.ndarray
    periodicity_error: float
    h: float

    @property
    def profile(self) -> np.ndarray:
        """Period average of ``E p_x^2``."""
        return self.p2[:-1].mean(axis=0)

    @property
    def total_variance(self) -> float:
        """``sum_x (1/theta_n) int (E p_x^2(t) - <p_x^2>)^2 dt``."""
        dev = self.p2[:-1] - self.profile
        return float(np.sum(np.mean(dev * dev, axis=0)))


class _Flow:
    def __init__(self, model: ChainModel):
        p = model.params
        self.model = model
        self.m = p.n + 1
        self.A = drift_matrix(model)
        self.N2 = 2 * self.m
        self.e = np.zeros(self.N2)
        self.e[-1] = 1.0
        self.src = np.zeros((self.N2, self.N2))
        self.src[self.m, self.m] = 4 * p.gamma * p.t_minus
        self.gain = 4 * p.gamma
        self.pidx = np.arange(self.m + 1, self.N2)

    def force(self, t):
        return float(force_value(self.model.force, self.model.params, t))

    def rhs(self, t, X, C, affine=True):
        f = self.force(t) if affine else 0.0
        dX = -self.A @ X + f * self.e
        dC = -self.A @ C - C @ self.A.T
        dC[self.pidx, self.pidx] += self.gain * C[self.pidx, self.pidx]
        if affine:
            dC += self.src + f * (np.outer(self.e, X) + np.outer(X, self.e))
        return dX, dC

    def step(self, t, h, X, C):
        k1 = self.rhs(t, X, C)
        k2 = self.rhs(t + h / 2, X + h / 2 * k1[0], C + h / 2 * k1[1])
        k3 = self.rhs(t + h / 2, X + h / 2 * k2[0], C + h / 2 * k2[1])
        k4 = self.rhs(t + h, X + h * k3[0], C + h * k3[1])
        X = X + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        C = C + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        return X, C

    def linear_operator(self) -> np.ndarray:
        """Homogeneous part of the C equation acting on row-major ``vec C``."""
        N2 = self.N2
        I = np.eye(N2)
        L = -(np.kron(self.A, I) + np.kron(I, self.A))
        for x in self.pidx:
            k = x * N2 + x
            L[k, k] += self.gain
        return L


def periodic_covariance_ode(model: ChainModel, steps: int = 512, tol: float = 1e-10) -> PeriodicMoments:
    """Periodic second moments by direct integration (small ``n`` only).

    The period map of the affine system is ``Y -> Phi Y + Y_part``; its
    propagator ``Phi`` is the RK4 polynomial of the generator raised to the
    number of steps, so the fixed point is exact for the discrete scheme.
    Cost is ``O(n^6)`` for the propagator.

    Raises
    ------
    NoPeriodicConvergence
        If one more period from the computed fixed point moves ``C`` by more
        than ``tol``.
    """
    flow = _Flow(model)
    theta_n = model.theta_n
    h = theta_n / steps
    N2 = flow.N2

    # mean: X(theta) = Phi X(0) + x_part
    Phi = _matrix_power(_rk4_poly(-h * flow.A), steps)
    X, C = np.zeros(N2), np.zeros((N2, N2))
    for k in range(steps):
        X, _ = flow.step(k * h, h, X, C)
    X0 = np.linalg.solve(np.eye(N2) - Phi, X)

    # covariance, with the periodic mean driving it
    Phic = _matrix_power(_rk4_poly(h * flow.linear_operator()), steps)
    X, C = X0.copy(), np.zeros((N2, N2))
    for k in range(steps):
        X, C = flow.step(k * h, h, X, C)
    c0 = np.linalg.solve(np.eye(N2 * N2) - Phic, C.reshape(-1))
    C0 = c0.reshape(N2, N2)
    C0 = 0.5 * (C0 + C0.T)

    m = flow.m
    p2 = np.empty((steps + 1, m))
    X, C = X0.copy(), C0.copy()
    p2[0] = np.diag(C)[m:]
    for k in range(steps):
        X, C = flow.step(k * h, h, X, C)
        p2[k + 1] = np.diag(C)[m:]
    err = float(np.max(np.abs(C - C0)))
    if err > tol * max(1.0, float(np.max(np.abs(C0)))):
        raise NoPeriodicConvergence(f"period map residual {err:.3e} exceeds {tol:g}")
    times = np.arange(steps + 1) * h
    return PeriodicMoments(times, p2, C0, X0, err, h)


def richardson_gap(model: ChainModel, steps: int = 256) -> dict:
    """Change of the profile and variance when the step is halved."""
    a = periodic_covariance_ode(model, steps)
    b = periodic_covariance_ode(model, 2 * steps)
    return {
        "profile": float(np.max(np.abs(a.profile - b.profile))),
        "variance": abs(a.total_variance - b.total_variance),
        "fine": b,
    }
