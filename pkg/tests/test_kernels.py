import numpy as np
import pytest

from tildelab import _kernels as K
from tildelab.qstate import random_mixed


@pytest.mark.parametrize("dims", [(2, 2), (2, 3, 2), (3, 2, 2, 2)])
def test_partial_trace_flavours_agree(dims):
    rho = random_mixed(dims, 3, seed=0).mat
    for keep in range(1, (1 << len(dims)) - 1):
        a = K.partial_trace_numpy(rho, dims, keep)
        b = K.partial_trace_numba(rho, dims, keep)
        assert np.abs(a - b).max() < 1e-14


def test_mon3_flavours_agree():
    rng = np.random.default_rng(0)
    w = rng.random((500, 4, 4))
    d = rng.random((500, 4))
    assert np.abs(K.mon3_margins_numpy(w, d) - K.mon3_margins_loops(w, d)).max() < 1e-13


@pytest.mark.parametrize("square", [False, True])
def test_search_flavours_agree(square):
    rng = np.random.default_rng(1)
    fbar = rng.random((4, 4))
    fbar = fbar + fbar.T
    np.fill_diagonal(fbar, 0)
    lam = rng.dirichlet(np.ones(4), size=500)
    d = rng.random((500, 4))
    d[0] = 1.0  # p2 = 0 branch
    a = K.search_margins_numpy(fbar, lam, d, square)
    b = K.search_margins_loops(fbar, lam, d, square)
    assert np.abs(a - b).max() < 1e-12


def test_env_flag_selects_numpy_path():
    import os
    import subprocess
    import sys
    code = "import tildelab._kernels as K; print(K.USE_NUMBA, K.partial_trace is K.partial_trace_numpy)"
    env = dict(os.environ, TILDELAB_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.split() == ["False", "True"]
