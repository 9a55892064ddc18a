import numpy as np
import pytest

from evbet.kernels import _pykernels

_BACKENDS = {"python": _pykernels.up_game_batch}
try:
    from evbet.kernels import _ckernels

    _BACKENDS["cython"] = _ckernels.up_game_batch
except ImportError:
    pass


@pytest.fixture(params=sorted(_BACKENDS))
def up_batch(request):
    """The batch UP runner of each available backend."""
    return _BACKENDS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
