"""Chain parameters, boundary force profile and their validation.

The chain has sites ``0..n``. Site 0 is coupled to a Langevin bath at
temperature ``t_minus``; site ``n`` is driven by the periodic force
``n**a * F(t / theta_n)`` with ``theta_n = n**b * theta``. The 1-periodic
profile ``F`` is stored through a finite set of Fourier coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from .errors import ValidationError

DEFAULT_L_MAX = 8

_HERMITIAN_TOL = 1e-14


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass(frozen=True)
class ChainParams:
    """Physical and scaling parameters.

    ``gamma`` is used both as the flip rate and as the thermostat coupling.
    """

    n: int
    gamma: float = 1.0
    omega0: float = 1.0
    t_minus: float = 1.0
    theta: float = 1.0
    a: float = -0.5
    b: float = 0.0

    @property
    def theta_n(self) -> float:
        return self.n ** self.b * self.theta

    @property
    def amplitude(self) -> float:
        """Force amplitude ``n**a``."""
        return float(self.n) ** self.a

    @property
    def regime_valid(self) -> bool:
        return math.isclose(self.b - self.a, 0.5, abs_tol=1e-12) and self.a <= 0 and self.b >= 0

    def with_n(self, n: int) -> "ChainParams":
        return replace(self, n=int(n))


@dataclass(frozen=True)
class ForceSpec:
    """Truncated Fourier series of the 1-periodic force profile.

    Parameters
    ----------
    coeffs : mapping int -> complex
        Coefficient of ``exp(2 pi i l t)`` for each harmonic ``l``.
    l_max : int
        Largest admissible ``|l|``.
    """

    coeffs: Mapping[int, complex] = field(default_factory=dict)
    l_max: int = DEFAULT_L_MAX

    def __post_init__(self):
        items = sorted((int(k), complex(v)) for k, v in dict(self.coeffs).items())
        object.__setattr__(self, "coeffs", dict(items))

    @classmethod
    def from_pairs(cls, pairs: Iterable, l_max: int = DEFAULT_L_MAX, complete: bool = True) -> "ForceSpec":
        """Build from ``(l, re, im)`` triples.

        With ``complete`` the conjugate partner of any harmonic given only
        for one sign of ``l`` is filled in.
        """
        coeffs: dict[int, complex] = {}
        for ell, re, im in pairs:
            ell = int(ell)
            if ell in coeffs:
                raise ValueError(f"harmonic {ell} given twice")
            coeffs[ell] = complex(float(re), float(im))
        if complete:
            for ell, c in list(coeffs.items()):
                if ell != 0 and -ell not in coeffs:
                    coeffs[-ell] = c.conjugate()
        return cls(coeffs, l_max=l_max)

    @classmethod
    def cosine(cls, amplitude: float = 1.0, ell: int = 1, l_max: int = DEFAULT_L_MAX) -> "ForceSpec":
        """``amplitude * cos(2 pi ell t)``."""
        return cls({ell: amplitude / 2, -ell: amplitude / 2}, l_max=l_max)

    @classmethod
    def zero(cls, l_max: int = DEFAULT_L_MAX) -> "ForceSpec":
        return cls({}, l_max=l_max)

    @property
    def ells(self) -> np.ndarray:
        """Harmonics carrying a nonzero coefficient, ascending."""
        return np.array([k for k, v in self.coeffs.items() if v != 0], dtype=np.int64)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v in self.coeffs.values() if v != 0], dtype=complex)

    def coefficient(self, ell: int) -> complex:
        return self.coeffs.get(int(ell), 0j)

    @property
    def is_zero(self) -> bool:
        return len(self.ells) == 0

    def power(self) -> float:
        """``sum |F(l)|^2``, the mean square of the profile."""
        return float(np.sum(np.abs(self.values) ** 2))

    def to_pairs(self) -> list:
        return [[k, v.real, v.imag] for k, v in self.coeffs.items()]


@dataclass(frozen=True)
class ChainModel:
    """A validated ``(params, force)`` pair."""

    params: ChainParams
    force: ForceSpec

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def theta_n(self) -> float:
        return self.params.theta_n

    def with_n(self, n: int) -> "ChainModel":
        return ChainModel(self.params.with_n(n), self.force)

    def shift(self, ell) -> np.ndarray:
        """Complex shift ``omega0^2 - (2 pi l/theta_n)^2 + 4 pi i gamma l/theta_n``."""
        p = self.params
        w = 2 * np.pi * np.asarray(ell, dtype=float) / p.theta_n
        return p.omega0 ** 2 - w ** 2 + 2j * p.gamma * w


def check(params: ChainParams, force: ForceSpec, *, driven: bool = False,
          asymptotic: bool = False) -> list[Violation]:
    """Return every violated constraint (empty when the model is valid)."""
    out: list[Violation] = []
    p = params
    if int(p.n) != p.n or p.n < 1:
        out.append(Violation("Parameter", f"n must be an integer >= 1, got {p.n}"))
    if not p.gamma > 0:
        out.append(Violation("Parameter", f"gamma must be > 0, got {p.gamma}"))
    if not p.omega0 > 0:
        out.append(Violation("Parameter", f"omega0 must be > 0, got {p.omega0}"))
    if not p.theta > 0:
        out.append(Violation("Parameter", f"theta must be > 0, got {p.theta}"))
    if not p.t_minus >= 0:
        out.append(Violation("Parameter", f"t_minus must be >= 0, got {p.t_minus}"))
    for name in ("gamma", "omega0", "t_minus", "theta", "a", "b"):
        if not math.isfinite(getattr(p, name)):
            out.append(Violation("Parameter", f"{name} is not finite"))

    c0 = force.coefficient(0)
    if c0 != 0:
        out.append(Violation("ZeroMean", f"F(0) = {c0} but the profile must have zero mean"))
    for ell, c in force.coeffs.items():
        if abs(ell) > force.l_max:
            out.append(Violation("Truncation", f"harmonic {ell} exceeds l_max = {force.l_max}"))
        partner = force.coefficient(-ell)
        scale = max(abs(c), abs(partner), 1.0)
        if abs(partner - c.conjugate()) > _HERMITIAN_TOL * scale:
            out.append(Violation("NonHermitian", f"F({-ell}) = {partner} != conj(F({ell})) = {c.conjugate()}"))
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            out.append(Violation("Parameter", f"F({ell}) is not finite"))
    if driven and force.power() == 0:
        out.append(Violation("ZeroForce", "all force coefficients vanish but a driven run was requested"))
    if asymptotic and not p.regime_valid:
        out.append(Violation(
            "ScalingViolation",
            f"asymptotics need b - a = 1/2, a <= 0, b >= 0; got a={p.a}, b={p.b}"))
    return out


def validate(params: ChainParams, force: ForceSpec, *, driven: bool = False,
             asymptotic: bool = False) -> ChainModel:
    """Validate and bundle a model.

    Raises
    ------
    ValidationError
        Listing every violated constraint.
    """
    violations = check(params, force, driven=driven, asymptotic=asymptotic)
    if violations:
        raise ValidationError(violations)
    return ChainModel(params, force)


def force_value(force: ForceSpec, params: ChainParams, t) -> np.ndarray:
    """Evaluate ``F_n(t) = n**a * sum_l F(l) exp(2 pi i l t / theta_n)``."""
    values = force_value_complex(force, params, t)
    return values.real


def force_value_complex(force: ForceSpec, params: ChainParams, t) -> np.ndarray:
    """Same as :func:`force_value` before discarding the imaginary part."""
    t = np.asarray(t, dtype=float)
    ells, vals = force.ells, force.values
    if len(ells) == 0:
        return np.zeros(t.shape, dtype=complex)
    phase = np.exp(2j * np.pi * np.multiply.outer(t, ells) / params.theta_n)
    return params.amplitude * (phase @ vals)
