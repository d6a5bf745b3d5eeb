"""Periodic means of the forced chain, the exact current and its large-n limit.

Each Fourier harmonic of the mean displacement solves a complex tridiagonal
system ``(c_l - Delta_N) q(l) = n**a F(l) e_n``; the momenta follow from
``p(l) = (2 pi i l / theta_n) q(l)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvariantFailure, RegimeError
from .model import ChainModel
from .spectral import QUAD_NODES, greens_lattice_complex, shifted_apply


@dataclass(frozen=True)
class HarmonicField:
    """Fourier coefficients of the periodic mean, one row per harmonic.

    Attributes
    ----------
    ells : int array, shape (k,)
    q, p : complex arrays, shape (k, n + 1)
    """

    model: ChainModel
    ells: np.ndarray
    q: np.ndarray
    p: np.ndarray

    @property
    def n(self) -> int:
        return self.model.n

    def _row(self, ell):
        hit = np.nonzero(self.ells == ell)[0]
        return int(hit[0]) if hit.size else None

    def q_tilde(self, ell: int) -> np.ndarray:
        i = self._row(ell)
        return np.zeros(self.n + 1, complex) if i is None else self.q[i]

    def p_tilde(self, ell: int) -> np.ndarray:
        i = self._row(ell)
        return np.zeros(self.n + 1, complex) if i is None else self.p[i]

    @property
    def forcing(self) -> np.ndarray:
        """``n**a F(l)`` for each row."""
        f = self.model.force
        return self.model.params.amplitude * np.array([f.coefficient(l) for l in self.ells], dtype=complex)

    def residual(self) -> float:
        """``max ||L q(l) - n**a F(l) e_n||_inf``."""
        if self.ells.size == 0:
            return 0.0
        r = shifted_apply(self.q, self.model.shift(self.ells)[:, None])
        r[:, -1] -= self.forcing
        return float(np.max(np.abs(r)))

    def mean_products(self, kind: str = "qq") -> np.ndarray:
        """Period average of ``qbar_x qbar_y`` (``"qq"``), ``pbar pbar`` or ``qbar_x pbar_y``."""
        a = self.q if kind[0] == "q" else self.p
        b = self.q if kind[1] == "q" else self.p
        m = self.n + 1
        if self.ells.size == 0:
            return np.zeros((m, m))
        return np.real(a.T @ b.conj())


def solve_harmonics(model: ChainModel, check: bool = True) -> HarmonicField:
    """Solve the mean dynamics harmonic by harmonic.

    Raises
    ------
    SingularPivotError
        If the elimination meets a vanishing pivot.
    """
    ells = model.force.ells
    m = model.n + 1
    if ells.size == 0:
        z = np.zeros((0, m), dtype=complex)
        return HarmonicField(model, ells, z, z.copy())
    shifts = model.shift(ells)
    rhs = np.zeros((ells.size, m), dtype=complex)
    rhs[:, -1] = model.params.amplitude * np.array([model.force.coefficient(l) for l in ells], dtype=complex)
    q = kernels.shifted_tridiag_solve(shifts, rhs)
    w = 2 * np.pi * ells / model.theta_n
    p = 1j * w[:, None] * q
    out = HarmonicField(model, ells, q, p)
    if check:
        res = out.residual()
        scale = float(np.max(np.abs(rhs)))
        if res > 1e-12 * scale:
            raise InvariantFailure(f"harmonic residual {res:.3e} exceeds 1e-12 relative")
    return out


def mean_trajectory(field: HarmonicField, t):
    """Mean positions and momenta at times ``t``.

    Returns
    -------
    qbar, pbar : arrays of shape ``t.shape + (n + 1,)``
    """
    t = np.asarray(t, dtype=float)
    m = field.n + 1
    if field.ells.size == 0:
        z = np.zeros(t.shape + (m,))
        return z, z.copy()
    phase = np.exp(2j * np.pi * np.multiply.outer(t, field.ells) / field.model.theta_n)
    return np.real(phase @ field.q), np.real(phase @ field.p)


@dataclass(frozen=True)
class CurrentReport:
    J_n: float
    J_n_plancherel: float
    J_limit: float | None = None
    Q_ell: dict = field(default_factory=dict)
    I_n: float = 0.0
    I_limit_coeff: float | None = None
    mean_square_sums: tuple = (0.0, 0.0)


def current_exact(field: HarmonicField, tol: float = 1e-12) -> float:
    """Time-averaged current ``J_n`` through the chain.

    Computed as ``-2 gamma (2 pi / theta_n)^2 sum_l l^2 sum_x |q_x(l)|^2`` and
    checked against the work done by the force, ``-n**a sum_l F(l) conj(p_n(l))``.
    """
    jn, jp = current_routes(field)
    scale = max(abs(jn), abs(jp))
    if scale > 0 and abs(jn - jp) > tol * scale:
        raise InvariantFailure(f"current routes disagree: {jn!r} vs {jp!r}")
    return jn


def current_routes(field: HarmonicField):
    """Both evaluations of the current, dissipation and work."""
    if field.ells.size == 0:
        return 0.0, 0.0
    p = field.model.params
    w = 2 * np.pi * field.ells / p.theta_n
    dissipation = -2 * p.gamma * float(np.sum(w ** 2 * np.sum(np.abs(field.q) ** 2, axis=1)))
    work = -np.sum(field.forcing * np.conj(field.p[:, -1]))
    return dissipation, float(work.real)


def work_functional(field: HarmonicField) -> complex:
    """``I_n = n**a sum_l F(l) conj(q_n(l))``; real for conjugate-symmetric forces."""
    if field.ells.size == 0:
        return 0j
    return complex(np.sum(field.forcing * np.conj(field.q[:, -1])))


def mean_square_averages(field: HarmonicField):
    """Period averages ``<pbar_x^2>`` and ``<qbar_x^2>`` by Plancherel."""
    if field.ells.size == 0:
        z = np.zeros(field.n + 1)
        return z, z.copy()
    return np.sum(np.abs(field.p) ** 2, axis=0), np.sum(np.abs(field.q) ** 2, axis=0)


# large-n limits -------------------------------------------------------------

def _nodes(nodes: int) -> np.ndarray:
    # the integrands below are functions of sin^2(pi u), cos^2(pi u): smooth
    # and 1-periodic in u, so the trapezoid rule converges geometrically
    return np.arange(nodes) / nodes


def _require_regime(model: ChainModel):
    p = model.params
    if not p.regime_valid:
        raise RegimeError(f"large-n limit needs b - a = 1/2, a <= 0, b >= 0 (got a={p.a}, b={p.b})")


def q_weight_quadrature(model: ChainModel, ell: int, nodes: int = QUAD_NODES) -> float:
    """Limit weight of harmonic ``l`` in the current, by quadrature."""
    _require_regime(model)
    p = model.params
    f2 = abs(model.force.coefficient(ell)) ** 2
    u = _nodes(nodes)
    s2 = 4 * np.sin(np.pi * u) ** 2
    c2 = np.cos(np.pi * u) ** 2
    if p.b > 0:
        den = (s2 + p.omega0 ** 2) ** 2
    else:
        w = 2 * np.pi * ell / p.theta
        den = (s2 + p.omega0 ** 2 - w * w) ** 2 + (2 * p.gamma * w) ** 2
    return float(4 * p.gamma * f2 * np.mean(c2 / den))


def q_weight_closed(model: ChainModel, ell: int) -> float:
    """Closed form of :func:`q_weight_quadrature` through lattice Green's functions."""
    _require_regime(model)
    p = model.params
    f2 = abs(model.force.coefficient(ell)) ** 2
    w2 = p.omega0 ** 2
    if p.b > 0:
        # residue calculus on the unit circle; the poles zeta_+- have
        # product 1 and difference sqrt(omega0^4 + 4 omega0^2)
        return 2 * p.gamma * f2 * (4 + w2) / (w2 * w2 + 4 * w2) ** 1.5
    if ell == 0:
        return 0.0
    w = 2 * np.pi * ell / p.theta
    lam = w2 - w * w + 2j * p.gamma * w
    g = greens_lattice_complex(lam, [0, 1])
    return float(-p.theta * f2 / (2 * np.pi * ell) * np.imag(g[0] + g[1]))


def current_asymptotic(model: ChainModel, nodes: int = QUAD_NODES, tol: float = 1e-8):
    """Limit ``J = lim n J_n`` and the per-harmonic weights.

    Returns
    -------
    J : float
    table : dict
        ``l -> (quadrature, closed form)``.

    Raises
    ------
    RegimeError
        Outside ``b - a = 1/2, a <= 0, b >= 0``.
    InvariantFailure
        If quadrature and closed form differ by more than ``tol`` (relative).
    """
    _require_regime(model)
    p = model.params
    table = {}
    total = 0.0
    for ell in model.force.ells:
        ell = int(ell)
        qq = q_weight_quadrature(model, ell, nodes)
        qc = q_weight_closed(model, ell)
        if abs(qq - qc) > tol * max(abs(qq), 1e-300):
            raise InvariantFailure(f"closed form {qc!r} vs quadrature {qq!r}", where=ell)
        table[ell] = (qq, qc)
        total += ell * ell * qq
    return -(2 * np.pi / p.theta) ** 2 * total, table


def work_asymptotic(model: ChainModel, nodes: int = QUAD_NODES) -> float:
    """Limit of ``I_n / n**(2a)``."""
    _require_regime(model)
    p = model.params
    u = _nodes(nodes)
    s2 = 4 * np.sin(np.pi * u) ** 2
    c2 = np.cos(np.pi * u) ** 2
    total = 0.0
    for ell in model.force.ells:
        f2 = abs(model.force.coefficient(int(ell))) ** 2
        if p.b > 0:
            val = np.mean(c2 / (s2 + p.omega0 ** 2))
        else:
            w = 2 * np.pi * ell / p.theta
            re = s2 + p.omega0 ** 2 - w * w
            val = np.mean(c2 * re / (re * re + (2 * p.gamma * w) ** 2))
        total += 2 * f2 * val
    return float(total)


def current_report(model: ChainModel, field: HarmonicField | None = None) -> CurrentReport:
    """Everything the current sweep tabulates for one ``n``."""
    field = solve_harmonics(model) if field is None else field
    jn, jp = current_routes(field)
    current_exact(field)
    p2, q2 = mean_square_averages(field)
    jl = ql = il = None
    if model.params.regime_valid:
        jl, table = current_asymptotic(model)
        ql = {k: v[0] for k, v in table.items()}
        il = work_asymptotic(model)
    return CurrentReport(
        J_n=jn, J_n_plancherel=jp, J_limit=jl, Q_ell=ql or {},
        I_n=work_functional(field).real, I_limit_coeff=il,
        mean_square_sums=(float(p2.sum()), float(q2.sum())),
    )
