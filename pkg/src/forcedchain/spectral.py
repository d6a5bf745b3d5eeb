"""Neumann Laplacian eigenstructure, Green's functions and the coefficient D.

Eigenpairs come from closed formulas. The eigenvectors are stored as rows,
``psi[j, x]``, so ``psi @ f`` gives spectral coefficients and ``psi.T @ c``
goes back to sites.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvariantFailure, ResonantDenominator

QUAD_NODES = 4096


@dataclass(frozen=True)
class NeumannEigenbasis:
    """Eigenbasis of ``-Delta_N`` on sites ``0..n``.

    Parameters
    ----------
    n : int
        Last site label; the chain has ``n + 1`` sites.
    omega0 : float
        Pinning constant, only used for ``mus``.
    """

    n: int
    omega0: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n}")

    @cached_property
    def lambdas(self) -> np.ndarray:
        j = np.arange(self.n + 1)
        return 4.0 * np.sin(np.pi * j / (2 * (self.n + 1))) ** 2

    @cached_property
    def psi(self) -> np.ndarray:
        m = self.n + 1
        j = np.arange(m)[:, None]
        x = np.arange(m)[None, :]
        norm = np.full((m, 1), np.sqrt(2.0 / m))
        norm[0, 0] = np.sqrt(1.0 / m)
        return norm * np.cos(np.pi * j * (2 * x + 1) / (2 * m))

    @cached_property
    def mus(self) -> np.ndarray:
        return self.omega0 ** 2 + self.lambdas

    def to_spectral(self, f):
        return self.psi @ f

    def to_sites(self, c):
        return self.psi.T @ c

    def orthonormality_error(self) -> float:
        psi = self.psi
        return float(np.max(np.abs(psi @ psi.T - np.eye(self.n + 1))))

    def eigen_residual(self) -> float:
        """``max_j ||(omega0^2 - Delta_N) psi_j - mu_j psi_j||_inf``."""
        r = shifted_apply(self.psi, self.omega0 ** 2) - self.mus[:, None] * self.psi
        return float(np.max(np.abs(r)))


def neumann_laplacian_apply(f) -> np.ndarray:
    """Apply the Neumann Laplacian along the last axis.

    ``(Delta_N f)_x = f_{x+1} + f_{x-1} - 2 f_x`` with ``f_{-1} = f_0`` and
    ``f_{n+1} = f_n``.
    """
    f = np.asarray(f)
    if f.ndim == 0 or f.shape[-1] < 2:
        raise ValueError("need a vector of length n + 1 >= 2")
    out = np.empty_like(f, dtype=np.result_type(f, float))
    d = np.diff(f, axis=-1)
    out[..., :-1] = d
    out[..., -1] = 0
    out[..., 1:] -= d
    return out


def shifted_apply(f, c) -> np.ndarray:
    """``(c - Delta_N) f`` along the last axis."""
    f = np.asarray(f)
    return c * f - neumann_laplacian_apply(f)


def shifted_matrix(n: int, c) -> np.ndarray:
    """Dense ``c - Delta_N`` on ``n + 1`` sites. Used by oracles and tests."""
    m = n + 1
    L = np.zeros((m, m), dtype=np.result_type(c, float))
    idx = np.arange(m)
    L[idx, idx] = c + 2
    L[0, 0] = L[-1, -1] = c + 1
    L[idx[:-1], idx[1:]] = -1
    L[idx[1:], idx[:-1]] = -1
    return L


class FiniteGreens:
    """Green's function of ``L = c_l - Delta_N`` for one chain.

    ``c_l = omega0^2 - (2 pi l / theta)^2 + 4 pi i gamma l / theta``.
    Spectral denominators are cached per harmonic.
    """

    def __init__(self, basis: NeumannEigenbasis, gamma: float, theta: float):
        self.basis = basis
        self.gamma = float(gamma)
        self.theta = float(theta)
        self._inv: dict[int, np.ndarray] = {}

    def shift(self, ell: int) -> complex:
        w = 2 * np.pi * ell / self.theta
        return self.basis.omega0 ** 2 - w * w + 2j * self.gamma * w

    def inverse_denominators(self, ell: int) -> np.ndarray:
        ell = int(ell)
        if ell not in self._inv:
            den = self.basis.lambdas + self.shift(ell)
            if np.any(den == 0):
                raise ResonantDenominator(f"zero denominator at harmonic {ell}")
            self._inv[ell] = 1.0 / den
        return self._inv[ell]

    def __call__(self, ell: int, x: int, y: int) -> complex:
        psi = self.basis.psi
        return complex(np.sum(psi[:, x] * psi[:, y] * self.inverse_denominators(ell)))

    def column(self, ell: int, y: int) -> np.ndarray:
        psi = self.basis.psi
        return psi.T @ (self.inverse_denominators(ell) * psi[:, y])

    def matrix(self, ell: int) -> np.ndarray:
        psi = self.basis.psi
        return psi.T @ (self.inverse_denominators(ell)[:, None] * psi)


def greens_finite(basis: NeumannEigenbasis, theta: float, ell: int, x, y, *, gamma: float) -> complex:
    """Entry ``G(x, y)`` of the inverse of ``c_l - Delta_N``."""
    n = basis.n
    for s in (x, y):
        if not 0 <= s <= n:
            raise IndexError(f"site {s} outside 0..{n}")
    return FiniteGreens(basis, gamma, theta)(ell, x, y)


def greens_lattice(omega0: float, x) -> np.ndarray:
    """Green's function of ``omega0^2 - Delta`` on the infinite lattice."""
    w2 = omega0 * omega0
    base = 1.0 + w2 / 2 + omega0 * np.sqrt(1.0 + w2 / 4)
    return base ** (-np.abs(np.asarray(x, dtype=float))) / (omega0 * np.sqrt(w2 + 4))


def _periodic_nodes(nodes: int) -> np.ndarray:
    return np.arange(nodes) / nodes


def greens_lattice_quadrature(omega0: float, x, nodes: int = QUAD_NODES) -> np.ndarray:
    """Trapezoid evaluation of ``int_0^1 cos(2 pi u x) / (4 sin^2(pi u) + omega0^2) du``."""
    u = _periodic_nodes(nodes)
    x = np.asarray(x, dtype=float)
    den = 4 * np.sin(np.pi * u) ** 2 + omega0 ** 2
    return np.mean(np.cos(2 * np.pi * np.multiply.outer(x, u)) / den, axis=-1)


def greens_lattice_complex(lam, x) -> np.ndarray:
    """Lattice Green's function of ``lam - Delta`` for complex ``lam`` off ``[-4, 0]``.

    Decaying branch: ``|rho| > 1``.
    """
    lam = np.asarray(lam, dtype=complex)
    s = np.sqrt(1 + 4 / lam)
    rho = 1 + lam / 2 * (1 + s)
    # rho and 1/rho both solve r + 1/r = 2 + lam; keep the one that decays
    flip = np.abs(rho) < 1
    rho = np.where(flip, 1 / rho, rho)
    pref = np.where(flip, -1.0, 1.0) / (lam * s)
    return pref * rho ** (-np.abs(np.asarray(x)))


@dataclass(frozen=True)
class TransportReport:
    closed_form: float
    green_form: float
    kubo: float

    @property
    def spread(self) -> float:
        v = (self.closed_form, self.green_form, self.kubo)
        return max(v) - min(v)


def transport_coefficient(omega0: float, diagnostic: bool = False, tol: float = 1e-9,
                          nodes: int = QUAD_NODES):
    """Transport coefficient ``D = 2 / (2 + omega0^2 + omega0 sqrt(omega0^2 + 4))``.

    With ``diagnostic`` the Green's-function form ``1 - omega0^2 (G(0) + G(1))``
    (quadrature Green values) and the group-velocity integral are evaluated
    too; a :class:`TransportReport` is returned and disagreement beyond
    ``tol`` raises :class:`InvariantFailure`.
    """
    if not omega0 > 0:
        raise ValueError(f"omega0 must be > 0, got {omega0}")
    w2 = omega0 * omega0
    d = 2.0 / (2.0 + w2 + omega0 * np.sqrt(w2 + 4))
    if not diagnostic:
        return float(d)
    g = greens_lattice_quadrature(omega0, [0, 1], nodes)
    green_form = 1.0 - w2 * (g[0] + g[1])
    u = _periodic_nodes(nodes)
    kubo = 2.0 * np.mean(np.sin(2 * np.pi * u) ** 2 / (w2 + 4 * np.sin(np.pi * u) ** 2))
    rep = TransportReport(float(d), float(green_form), float(kubo))
    if rep.spread > tol:
        raise InvariantFailure(f"transport coefficient routes disagree by {rep.spread:.3e}")
    return rep


def chain_green_log_abs(n: int, c: np.ndarray, rows=None) -> np.ndarray:
    """``log |G_c(x, y)|`` for the inverse of ``c - Delta_N``, per value of ``c``.

    Uses the product form of the tridiagonal inverse, so entries far below
    the float64 range stay finite in log space.

    Parameters
    ----------
    n : int
    c : complex array, shape (k,)
    rows : array of int, optional
        Restrict to these ``x``; all rows by default.

    Returns
    -------
    ndarray, shape (len(rows), n + 1, k)
    """
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    m = n + 1
    # left ratios G(x, y) = l_x G(x+1, y) for x < y
    lr = np.empty((m, c.size), dtype=complex)
    lr[0] = 1.0 / (c + 1)
    for k in range(1, m):
        d = c + (1 if k == m - 1 else 2)
        lr[k] = 1.0 / (d - lr[k - 1])
    diag = np.empty((m, c.size), dtype=complex)
    for y in range(m):
        d = c + (1 if y in (0, m - 1) else 2)
        if m == 1:
            d = c
        left = lr[y - 1] if y > 0 else 0.0
        right = lr[m - 2 - y] if y < m - 1 else 0.0  # right ratio at y+1 by reflection
        diag[y] = 1.0 / (d - left - right)
    log_l = np.log(np.abs(lr[:-1]))
    cum = np.vstack([np.zeros((1, c.size)), np.cumsum(log_l, axis=0)])  # cum[k] = sum_{i<k}
    log_diag = np.log(np.abs(diag))
    rows = np.arange(m) if rows is None else np.asarray(rows)
    x = rows[:, None, None]
    y = np.arange(m)[None, :, None]
    # x <= y: sum_{k=x}^{y-1} log l_k ; x > y: same with roles swapped by symmetry
    lo = np.minimum(x, y)[..., 0]
    hi = np.maximum(x, y)[..., 0]
    # G(x, y) = G(hi, hi) * prod_{k=lo}^{hi-1} l_k
    return log_diag[hi] + cum[hi] - cum[lo]
