import numpy as np
import pytest

from qagibbs import _accel
from qagibbs.ising import IsingModel


@pytest.fixture(params=["numba", "numpy"])
def kernel_path(request, monkeypatch):
    if request.param == "numba" and not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_accel, "USE_NUMBA", request.param == "numba")
    return request.param


def random_pm1_model(n, rng, density=1.0, fields=True, integral=True):
    couplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                couplings[(i, j)] = float(rng.choice((-1, 1))) if integral else rng.normal()
    f = {}
    if fields:
        f = {i: float(rng.choice((-1, 1))) if integral else rng.normal() for i in range(n)}
    return IsingModel(tuple(range(n)), couplings, f)


def brute_energies(model):
    """Energies of all configurations from an explicit spin table (independent of the kernels)."""
    n = model.n
    idx = np.arange(1 << n)
    spins = np.where((idx[:, None] >> np.arange(n)) & 1, 1.0, -1.0)
    pos = model.position
    e = np.zeros(1 << n)
    for (i, j), v in model.couplings.items():
        e -= v * spins[:, pos[i]] * spins[:, pos[j]]
    for i, v in model.fields.items():
        e -= v * spins[:, pos[i]]
    return e
