"""Second moments of the periodic state.

The kinetic temperature profile ``T_x = <p_x^2>`` solves the
self-consistency equation

    T_x = T_- M_{x,0} + sum_{y>=1} M_{x,y} T_y + <pbar_x^2>,

where ``M`` is the mixing matrix built from the weights ``Theta``. From
``T`` the time-averaged covariance follows in closed form in the Neumann
eigenbasis; the fluctuation-dissipation functional, bond currents and
energy profile are read off from it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantFailure, NoConvergence, RegimeError, SingularSystemError
from .first_moments import HarmonicField, current_routes
from .model import ChainModel
from .spectral import NeumannEigenbasis, chain_green_log_abs, transport_coefficient

# Entries of M below this are recomputed from the frequency integral; the
# spectral sum cannot resolve them (its absolute error is ~ n * eps).
TAIL_THRESHOLD = 1e-10


def theta_weight(mu_j, mu_jp, gamma):
    """``[1 + (mu - mu')^2 / (8 gamma^2 (mu + mu'))]^{-1}``."""
    mu_j = np.asarray(mu_j, dtype=float)
    mu_jp = np.asarray(mu_jp, dtype=float)
    return 1.0 / (1.0 + (mu_j - mu_jp) ** 2 / (8 * gamma * gamma * (mu_j + mu_jp)))


def theta_weight_m(c, cp, gamma, theta, m):
    """Weight of the pair ``(c, c')`` for the ``m``-th time harmonic.

    Obtained by eliminating the ``q q`` and ``q p`` blocks from the
    Lyapunov-Sylvester equation ``A S + S A^T + i w S = Sigma`` with
    ``w = 2 pi m / theta``; reduces to :func:`theta_weight` at ``m = 0``.
    """
    c = np.asarray(c, dtype=float)
    cp = np.asarray(cp, dtype=float)
    iw = 2j * np.pi * m / theta
    s = c + cp
    inner = (iw * s + (c - cp) ** 2 / (2 * gamma + iw)) / (s + iw * (2 * gamma + iw))
    return 4 * gamma / (4 * gamma + iw + inner)


@dataclass(frozen=True)
class MixingMatrix:
    """Symmetric bistochastic matrix coupling site temperatures.

    Attributes
    ----------
    M : ndarray, shape (n + 1, n + 1)
    contraction_gap : float
        ``min_x M_{x,0}``; the restricted map contracts by ``1 - gap`` per sweep.
    log_min_entry : float
        Natural log of the smallest entry, finite when every entry is
        positive even if it underflows in float64.
    """

    n: int
    M: np.ndarray
    contraction_gap: float
    log_min_entry: float
    tail_entries: int = 0

    @property
    def contraction_rho(self) -> float:
        """``max_x (1 - M_{x,0})``."""
        return 1.0 - self.contraction_gap

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.M - self.M.T)))

    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.M.sum(axis=1) - 1.0)))

    def check(self, symmetry_tol=1e-12, rowsum_tol=1e-10):
        """Raise :class:`InvariantFailure` unless every structural property holds."""
        d = np.abs(self.M - self.M.T)
        if d.max() > symmetry_tol:
            raise InvariantFailure("mixing matrix not symmetric", where=np.unravel_index(d.argmax(), d.shape))
        r = np.abs(self.M.sum(axis=1) - 1.0)
        if r.max() > rowsum_tol:
            raise InvariantFailure("mixing matrix row sum differs from 1", where=int(r.argmax()))
        if not np.isfinite(self.log_min_entry):
            bad = np.argwhere(self.M <= 0)
            raise InvariantFailure("mixing matrix has a non-positive entry",
                                   where=tuple(bad[0]) if bad.size else None)
        if not self.contraction_gap > 0:
            raise InvariantFailure("restricted mixing map does not contract")


def _spectral_contraction(psi, weights, block=None):
    """``sum_{j,j'} w_{jj'} psi_j(x) psi_j'(x) psi_j(y) psi_j'(y)``.

    Evaluated as ``W^T diag(w) W`` with ``W_{(j,j'),x} = psi_j(x) psi_j'(x)``,
    a block of ``j`` at a time.
    """
    m = psi.shape[0]
    dtype = np.result_type(weights, psi)
    out = np.zeros((m, m), dtype=dtype)
    if block is None:
        block = max(1, min(m, 4_000_000 // (m * m)))
    for j0 in range(0, m, block):
        j1 = min(m, j0 + block)
        W = (psi[j0:j1, None, :] * psi[None, :, :]).reshape(-1, m)
        out += W.T @ (weights[j0:j1].reshape(-1, 1) * W)
    return out


def _tail_logs(n, gamma, omega0, rows, nodes):
    """``log M_{x,y}`` from ``(4 gamma / pi) int_0^inf w^2 |G_{c(w)}(x, y)|^2 dw``.

    ``c(w) = omega0^2 - w^2 + 2 i gamma w``; the substitution
    ``w = s tan(phi)`` maps the half line onto ``(0, pi/2)`` where
    Gauss-Legendre nodes are used.
    """
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    phi = (xg + 1) * np.pi / 4
    s = np.sqrt(omega0 ** 2 + 2)
    om = s * np.tan(phi)
    logw = np.log(wg * np.pi / 4 * s / np.cos(phi) ** 2 * om * om)
    c = omega0 ** 2 - om * om + 2j * gamma * om
    out = np.empty((len(rows), n + 1))
    step = max(1, 2_000_000 // ((n + 1) * nodes))
    for i in range(0, len(rows), step):
        lg = chain_green_log_abs(n, c, rows[i:i + step])
        lt = logw + 2 * lg
        top = lt.max(axis=-1)
        out[i:i + step] = top + np.log(np.exp(lt - top[..., None]).sum(axis=-1))
    return out + np.log(4 * gamma / np.pi)


def mixing_matrix(basis: NeumannEigenbasis, gamma: float, check: bool = True,
                  tail_nodes: int | None = None) -> MixingMatrix:
    """Assemble ``M`` and verify its invariants.

    Entries too small for the spectral sum are replaced by the equivalent
    frequency integral, which stays accurate (in log form) far below the
    float64 range.
    """
    mu = basis.mus
    n = basis.n
    theta = theta_weight(mu[:, None], mu[None, :], gamma)
    M = _spectral_contraction(basis.psi, theta)
    M = 0.5 * (M + M.T)
    logM = np.full(M.shape, np.nan)
    small = M < TAIL_THRESHOLD
    rows = np.nonzero(small.any(axis=1))[0]
    if rows.size:
        nodes = tail_nodes or int(max(400, 400 / min(gamma, 1.0)))
        logs = _tail_logs(n, gamma, basis.omega0, rows, nodes)
        full = np.full(M.shape, -np.inf)
        full[rows] = logs
        # small is symmetric, so both triangles were computed
        logM = np.where(small, 0.5 * (full + full.T), np.nan)
        M = np.where(small, np.exp(np.where(small, logM, 0.0)), M)
    log_entries = np.where(small, logM, np.log(np.where(small, 1.0, M)))
    out = MixingMatrix(
        n=n, M=M,
        contraction_gap=float(M[:, 0].min()),
        log_min_entry=float(np.min(log_entries)),
        tail_entries=int(small.sum()),
    )
    if check:
        out.check()
    return out


def mixing_matrix_bruteforce(basis: NeumannEigenbasis, gamma: float) -> np.ndarray:
    """Quadruple loop over ``(j, j', x, y)``; reference for small ``n`` only."""
    mu = basis.mus
    psi = basis.psi
    m = basis.n + 1
    M = np.zeros((m, m))
    for x in range(m):
        for y in range(m):
            s = 0.0
            for j in range(m):
                for k in range(m):
                    s += theta_weight(mu[j], mu[k], gamma) * psi[j, x] * psi[k, x] * psi[j, y] * psi[k, y]
            M[x, y] = s
    return M


def mixing_matrix_m(basis: NeumannEigenbasis, gamma: float, theta: float, m: int) -> np.ndarray:
    """Complex mixing matrix for the ``m``-th time harmonic."""
    mu = basis.mus
    w = theta_weight_m(mu[:, None], mu[None, :], gamma, theta, m)
    return _spectral_contraction(basis.psi, w)


# temperature profile ----------------------------------------------------------

@dataclass(frozen=True)
class ProfileSolution:
    profile: np.ndarray
    method: str
    iterations: int = 0


def solve_profile(model: ChainModel, mean_squares, mixing: MixingMatrix | None = None,
                  method: str = "direct", tol: float = 1e-12, max_iter: int = 100_000) -> ProfileSolution:
    """Kinetic temperature profile from the self-consistency equation.

    The unknown is the excess ``delta = T - T_-``; because the rows of ``M``
    sum to one the equation for it has no ``T_-`` source. ``method`` is
    ``"direct"`` (dense solve), ``"fixed_point"`` (iterate the contraction)
    or ``"both"`` (solve both ways and require agreement within ``1e-10``).

    Raises
    ------
    NoConvergence
        If the fixed-point iteration exceeds ``max_iter`` sweeps.
    """
    p = model.params
    g = np.asarray(mean_squares, dtype=float)
    if mixing is None:
        mixing = mixing_matrix(NeumannEigenbasis(p.n, p.omega0), p.gamma)
    Mh = mixing.M.copy()
    Mh[:, 0] = 0.0
    if method not in ("direct", "fixed_point", "both"):
        raise ValueError(f"unknown method {method!r}")
    delta = None
    its = 0
    if method in ("direct", "both"):
        delta = np.linalg.solve(np.eye(p.n + 1) - Mh, g)
    if method in ("fixed_point", "both"):
        d = np.zeros_like(g)
        steps = []
        for its in range(1, max_iter + 1):
            nxt = Mh @ d + g
            steps.append(np.max(np.abs(nxt - d)))
            d = nxt
            if steps[-1] == 0:
                break
            # the iterates converge geometrically; once the step ratio r has
            # settled the remaining error is at most step * r / (1 - r)
            if its > 8:
                r = max(steps[-k] / steps[-k - 1] for k in range(1, 6))
                if r < 1 and steps[-1] * r / (1 - r) < tol:
                    break
        else:
            raise NoConvergence(f"profile iteration did not reach {tol:g} in {max_iter} sweeps")
        if delta is not None and np.max(np.abs(delta - d)) > 1e-10:
            raise InvariantFailure(f"direct and fixed-point profiles differ by {np.max(np.abs(delta - d)):.3e}")
        delta = d if delta is None else delta
    return ProfileSolution(p.t_minus + delta, method, its)


# covariance -----------------------------------------------------------------

@dataclass(frozen=True)
class CovarianceSolution:
    """Time-averaged second moments of the periodic state.

    ``Sq, Sp, Sqp`` are centred covariances (``Sqp[x, y] = E q_x p_y``);
    ``Cq, Cp, Cqp`` add the contributions of the periodic means.
    """

    profile: np.ndarray
    Sq: np.ndarray
    Sp: np.ndarray
    Sqp: np.ndarray
    Cq: np.ndarray
    Cp: np.ndarray
    Cqp: np.ndarray
    F_profile: np.ndarray
    bond_currents: np.ndarray
    energy_profile: np.ndarray
    J_n: float
    boundary_work: float

    def neighbour_correlations(self, lag: int) -> np.ndarray:
        """``<q_x q_{x+lag}>`` including mean parts."""
        return np.diagonal(self.Cq, offset=lag).copy()


def covariance_blocks(model: ChainModel, profile, field: HarmonicField,
                      basis: NeumannEigenbasis | None = None, psd_tol: float = -1e-10) -> CovarianceSolution:
    """Covariance, fluctuation-dissipation functional, currents and energies.

    The bath site enters the noise matrix at ``T_-``; the flip sites at
    their kinetic temperatures.
    """
    p = model.params
    n = p.n
    basis = NeumannEigenbasis(n, p.omega0) if basis is None else basis
    T = np.asarray(profile, dtype=float)
    psi, mu = basis.psi, basis.mus
    noise = T.copy()
    noise[0] = p.t_minus
    Ft = psi @ (noise[:, None] * psi.T)
    th = theta_weight(mu[:, None], mu[None, :], p.gamma)
    Sp_t = th * Ft
    Sq_t = 2 * th / (mu[:, None] + mu[None, :]) * Ft
    Sqp_t = Sq_t * (mu[:, None] - mu[None, :]) / (4 * p.gamma)
    Sp = psi.T @ Sp_t @ psi
    Sq = psi.T @ Sq_t @ psi
    Sqp = psi.T @ Sqp_t @ psi
    Sp = 0.5 * (Sp + Sp.T)
    Sq = 0.5 * (Sq + Sq.T)
    for name, S in (("Sp", Sp), ("Sq", Sq)):
        lo = np.linalg.eigvalsh(S).min()
        if lo < psd_tol:
            raise InvariantFailure(f"{name} not positive semidefinite (eigenvalue {lo:.3e})")
    Cq = Sq + field.mean_products("qq")
    Cp = Sp + field.mean_products("pp")
    Cqp = Sqp + field.mean_products("qp")

    jn_diss, jn_work = current_routes(field)
    bonds = np.empty(n + 2)
    bonds[0] = 2 * p.gamma * (p.t_minus - Cp[0, 0])
    x = np.arange(n)
    bonds[1:-1] = -(Cqp[x + 1, x] - Cqp[x, x])
    bonds[-1] = jn_work

    Ff = functional_profile(Cq, Cp, p.omega0)
    En = energy_profile(Cq, Cp, p.omega0)
    # work term entering the functional at the driven end
    if field.ells.size:
        wk = float(np.real(np.sum(np.conj(field.forcing) * (field.q[:, n - 1] - field.q[:, n]))))
    else:
        wk = 0.0
    return CovarianceSolution(T, Sq, Sp, Sqp, Cq, Cp, Cqp, Ff, bonds, En, jn_diss, wk)


def _clip_diff(Cq):
    """Covariances of the forward and backward differences with Neumann closure."""
    m = Cq.shape[0]
    up = np.minimum(np.arange(m) + 1, m - 1)
    dn = np.maximum(np.arange(m) - 1, 0)
    x = np.arange(m)
    return up, dn, x


def functional_profile(Cq, Cp, omega0) -> np.ndarray:
    """``<p_x^2 + (q_{x+1} - q_x)(q_x - q_{x-1}) - omega0^2 q_x^2>``."""
    up, dn, x = _clip_diff(Cq)
    cross = Cq[up, x] - Cq[up, dn] - Cq[x, x] + Cq[x, dn]
    return np.diag(Cp) + cross - omega0 ** 2 * np.diag(Cq)


def energy_profile(Cq, Cp, omega0) -> np.ndarray:
    """``<p_x^2/2 + (q_x - q_{x-1})^2/2 + omega0^2 q_x^2/2>``."""
    up, dn, x = _clip_diff(Cq)
    r2 = Cq[x, x] - 2 * Cq[x, dn] + Cq[dn, dn]
    return 0.5 * (np.diag(Cp) + r2 + omega0 ** 2 * np.diag(Cq))


def stretch_squares(Cq) -> np.ndarray:
    """``<(q_x - q_{x-1})^2>`` with ``q_{-1} = q_0``."""
    up, dn, x = _clip_diff(Cq)
    return Cq[x, x] - 2 * Cq[x, dn] + Cq[dn, dn]


@dataclass(frozen=True)
class FDReport:
    """Deviation of ``<F_x>`` from ``<F_0> - 4 gamma J_n x`` in the bulk."""

    intercept: float
    slope: float
    bulk_deviation: float
    relative_deviation: float
    boundary_deviation: float


def fluctuation_dissipation_check(sol: CovarianceSolution, gamma: float) -> FDReport:
    Ff = sol.F_profile
    n = len(Ff) - 1
    slope = -4 * gamma * sol.J_n
    x = np.arange(n + 1)
    pred = Ff[0] + slope * x
    bulk = np.max(np.abs(Ff[1:n] - pred[1:n])) if n > 1 else 0.0
    # at the driven end the boundary work enters
    bnd = abs(Ff[n] - (pred[n] + sol.boundary_work))
    return FDReport(float(Ff[0]), float(slope), float(bulk), float(bulk / max(abs(Ff[0]), 1e-300)), float(bnd))


# macroscopic profile ----------------------------------------------------------

TEST_FUNCTIONS = {
    "one": lambda u: np.ones_like(u),
    "u": lambda u: u,
    "u2": lambda u: u * u,
    "sin": lambda u: np.sin(np.pi * u),
}

_TEST_INTEGRALS_T = {
    # int_0^1 phi(u) (T_- + s u) du, as (int phi, int u phi)
    "one": (1.0, 0.5),
    "u": (0.5, 1.0 / 3),
    "u2": (1.0 / 3, 0.25),
    "sin": (2 / np.pi, 1 / np.pi),
}


@dataclass(frozen=True)
class ProfileDeviation:
    n: int
    max_deviation: float
    limit_slope: float
    weak_errors: dict
    equipartition: dict


def macroscopic_profile_check(sol: CovarianceSolution, model: ChainModel, J_limit: float) -> ProfileDeviation:
    """Compare the profile with the line ``T(u) = T_- - 4 gamma J u / D``."""
    p = model.params
    if not p.regime_valid:
        raise RegimeError("macroscopic profile needs b - a = 1/2, a <= 0, b >= 0")
    n = p.n
    u = np.arange(n + 1) / n
    D = transport_coefficient(p.omega0)
    slope = -4 * p.gamma * J_limit / D
    T_u = p.t_minus + slope * u
    dev = float(np.max(np.abs(sol.profile - T_u)))
    r2 = stretch_squares(sol.Cq)
    equi = np.diag(sol.Cp) - r2 - p.omega0 ** 2 * np.diag(sol.Cq)
    weak, eq = {}, {}
    for name, phi in TEST_FUNCTIONS.items():
        a0, a1 = _TEST_INTEGRALS_T[name]
        target = p.t_minus * a0 + slope * a1
        weak[name] = float(abs(np.sum(phi(u) * sol.energy_profile) / n - target))
        eq[name] = float(abs(np.sum(phi(u) * equi) / n))
    return ProfileDeviation(n, dev, slope, weak, eq)


# variance of the kinetic energy ------------------------------------------------

@dataclass(frozen=True)
class VarianceReport:
    V_harmonics: dict
    total_variance: float
    n: int

    @property
    def scaled(self) -> float:
        return self.n ** 2 * self.total_variance


def square_harmonics(field: HarmonicField) -> dict:
    """Fourier coefficients ``m -> v(m)`` of ``pbar_x(t)^2``, ``m != 0``."""
    ells = [int(l) for l in field.ells]
    out: dict[int, np.ndarray] = {}
    for i, l1 in enumerate(ells):
        for k, l2 in enumerate(ells):
            m = l1 + l2
            if m == 0:
                continue
            out.setdefault(m, np.zeros(field.n + 1, complex))
            out[m] = out[m] + field.p[i] * field.p[k]
    return dict(sorted(out.items()))


def variance_harmonics(model: ChainModel, field: HarmonicField,
                       basis: NeumannEigenbasis | None = None) -> VarianceReport:
    """Time variance of ``E p_x^2(t)`` summed over sites.

    Each harmonic ``m != 0`` of ``V_x(t) = E p_x^2(t) - <p_x^2>`` solves
    ``(I - M(m) restricted to y >= 1) V(m) = v(m)`` with ``v(m)`` the
    harmonic of ``pbar_x^2``.

    Raises
    ------
    RegimeError
        Unless ``b = 0`` and ``a = -1/2``.
    SingularSystemError
        If a harmonic system is numerically singular.
    """
    p = model.params
    if not (abs(p.b) < 1e-12 and abs(p.a + 0.5) < 1e-12):
        raise RegimeError("the variance is computed only for b = 0, a = -1/2")
    basis = NeumannEigenbasis(p.n, p.omega0) if basis is None else basis
    V = {}
    total = 0.0
    eye = np.eye(p.n + 1)
    for m, v in square_harmonics(field).items():
        if not np.any(v):
            continue
        if m < 0 and -m in V:
            V[m] = np.conj(V[-m])
        else:
            Mm = mixing_matrix_m(basis, p.gamma, p.theta_n, m)
            Mm[:, 0] = 0.0
            try:
                V[m] = np.linalg.solve(eye - Mm, v)
            except np.linalg.LinAlgError as exc:
                raise SingularSystemError(f"harmonic {m}: {exc}") from exc
        total += float(np.sum(np.abs(V[m]) ** 2))
    return VarianceReport(V, total, p.n)
