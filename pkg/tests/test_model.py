import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forcedchain import (ChainParams, ForceSpec, RunConfig, ValidationError, check, force_value, load_config,
                         parse_config, validate)
from forcedchain.config import Tolerances


def test_default_model_is_valid():
    m = validate(ChainParams(16), ForceSpec.cosine(1.0), driven=True, asymptotic=True)
    assert m.n == 16
    assert m.theta_n == 1.0


def test_all_violations_reported_together():
    bad = ChainParams(16, gamma=-1.0, omega0=0.0)
    force = ForceSpec({0: 1.0, 12: 1.0, -12: 1.0})
    with pytest.raises(ValidationError) as info:
        validate(bad, force)
    kinds = info.value.kinds
    assert {"Parameter", "ZeroMean", "Truncation"} <= kinds
    assert sum(v.kind == "Parameter" for v in info.value.violations) == 2


def test_non_hermitian_force_rejected():
    f = ForceSpec.from_pairs([[1, 0.5, 0.0], [-1, 0.2, 0.0]], complete=False)
    assert "NonHermitian" in {v.kind for v in check(ChainParams(8), f)}


def test_zero_force_rejected_only_for_driven_runs():
    assert check(ChainParams(8), ForceSpec.zero()) == []
    assert [v.kind for v in check(ChainParams(8), ForceSpec.zero(), driven=True)] == ["ZeroForce"]


@pytest.mark.parametrize("a,b,ok", [(-0.5, 0.0, True), (0.0, 0.5, True), (-0.3, 0.0, False),
                                    (0.5, 1.0, False), (-1.0, -0.5, False)])
def test_scaling_regime(a, b, ok):
    v = check(ChainParams(8, a=a, b=b), ForceSpec.cosine(), asymptotic=True)
    assert (v == []) is ok


def test_theta_n_and_amplitude():
    p = ChainParams(64, theta=2.0, a=0.0, b=0.5)
    assert p.theta_n == pytest.approx(16.0)
    assert p.amplitude == 1.0
    assert ChainParams(64).amplitude == pytest.approx(1 / 8)


def test_cosine_force_values():
    p = ChainParams(16, theta=1.0)
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(force_value(ForceSpec.cosine(1.0), p, t), 0.25 * np.cos(2 * np.pi * t), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 8), st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=5,
                unique_by=lambda t: t[0]))
def test_hermitian_completion_gives_real_force(pairs):
    f = ForceSpec.from_pairs([list(p) for p in pairs])
    assert check(ChainParams(8), f) == []
    t = np.linspace(0, 1, 17)
    z = np.exp(2j * np.pi * np.outer(t, f.ells)) @ f.values
    assert np.max(np.abs(z.imag)) <= 1e-12 * max(1.0, np.max(np.abs(z)))


def test_duplicate_harmonic_rejected():
    with pytest.raises(ValueError):
        ForceSpec.from_pairs([[1, 0.5, 0], [1, 0.1, 0]])


def test_config_round_trip(tmp_path):
    cfg = RunConfig.default()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    back = load_config(path)
    assert back.params == cfg.params
    assert back.force.to_pairs() == cfg.force.to_pairs()


def test_config_errors():
    base = RunConfig.default().to_dict()
    with pytest.raises(KeyError):
        parse_config({k: v for k, v in base.items() if k != "gamma"})
    with pytest.raises(KeyError):
        parse_config({**base, "colour": 1})
    with pytest.raises(KeyError):
        parse_config({**base, "tolerances": {"nope": 1}})


def test_tolerance_override():
    cfg = parse_config({**RunConfig.default().to_dict(), "tolerances": {"mc_zscore": 4.0}})
    assert cfg.tolerances.mc_zscore == 4.0
    assert cfg.tolerances.fd_affine == Tolerances().fd_affine
