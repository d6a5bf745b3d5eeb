"""Run configuration: model parameters plus check tolerances.

A config file is flat JSON::

    {"n": 16, "gamma": 1.0, "omega0": 1.0, "t_minus": 1.0, "theta": 1.0,
     "a": -0.5, "b": 0.0, "force": [[1, 0.5, 0.0]]}

Optional keys: ``l_max`` and ``tolerances`` (a mapping overriding fields of
:class:`Tolerances`). Harmonics listed for one sign only are completed by
conjugate symmetry.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .model import DEFAULT_L_MAX, ChainParams, ForceSpec

PARAM_KEYS = ("n", "gamma", "omega0", "t_minus", "theta", "a", "b")


@dataclass(frozen=True)
class Tolerances:
    """Every numerical threshold used by the checks, in one place."""

    orthonormality: float = 1e-12
    eigen_residual: float = 1e-12
    green_residual: float = 1e-10
    transport_agreement: float = 1e-9
    current_routes: float = 1e-12
    flux_identity: float = 1e-9
    closed_form: float = 1e-8
    mixing_symmetry: float = 1e-12
    mixing_rowsum: float = 1e-10
    brute_force: float = 1e-12
    profile_fixed_point: float = 1e-12
    profile_agreement: float = 1e-10
    max_iterations: int = 100_000
    fd_affine: float = 1e-9
    bond_constancy: float = 1e-9
    psd_floor: float = -1e-10
    flat_profile: float = 1e-12
    min_profile_slack: float = 1e-12
    asymptotic_gate: float = 0.05
    converged_floor: float = 1e-12
    bounded_ratio: float = 10.0
    periodic_ode: float = 1e-10
    variance_ode: float = 0.01
    mc_zscore: float = 3.0
    quadrature_nodes: int = 4096

    def updated(self, overrides: dict) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown tolerance keys: {sorted(unknown)}")
        return Tolerances(**{**asdict(self), **overrides})


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class RunConfig:
    params: ChainParams
    force: ForceSpec
    tolerances: Tolerances = DEFAULT_TOLERANCES

    @classmethod
    def default(cls) -> "RunConfig":
        """The reference driven chain: n=16, a=-1/2, b=0, F(t) = cos(2 pi t)."""
        return cls(ChainParams(n=16), ForceSpec.cosine(1.0))

    def to_dict(self) -> dict:
        d = {k: getattr(self.params, k) for k in PARAM_KEYS}
        d["force"] = self.force.to_pairs()
        d["l_max"] = self.force.l_max
        return d


def parse_config(data: dict) -> RunConfig:
    missing = [k for k in PARAM_KEYS if k not in data]
    if missing:
        raise KeyError(f"config is missing keys: {missing}")
    extra = set(data) - set(PARAM_KEYS) - {"force", "l_max", "tolerances"}
    if extra:
        raise KeyError(f"unknown config keys: {sorted(extra)}")
    params = ChainParams(
        n=int(data["n"]),
        gamma=float(data["gamma"]),
        omega0=float(data["omega0"]),
        t_minus=float(data["t_minus"]),
        theta=float(data["theta"]),
        a=float(data["a"]),
        b=float(data["b"]),
    )
    force = ForceSpec.from_pairs(data.get("force", []), l_max=int(data.get("l_max", DEFAULT_L_MAX)))
    tol = DEFAULT_TOLERANCES.updated(data.get("tolerances", {}))
    return RunConfig(params, force, tol)


def load_config(path) -> RunConfig:
    with open(Path(path)) as fh:
        return parse_config(json.load(fh))
