import numpy as np
import pytest

from forcedchain import ChainParams, ForceSpec, validate


@pytest.fixture
def driven():
    """Reference driven chain with n = 16 and F(t) = cos(2 pi t)."""
    return validate(ChainParams(16), ForceSpec.cosine(1.0))


def make_model(n=16, force=None, **kw):
    return validate(ChainParams(n, **kw), ForceSpec.cosine(1.0) if force is None else force)


def dense_neumann(n):
    """Dense ``-Delta_N`` on sites ``0..n``."""
    m = n + 1
    L = 2 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)
    L[0, 0] = L[-1, -1] = 1
    return L
