"""Thermal states of small transverse-field Ising Hamiltonians.

Operators are dense real symmetric matrices in the canonical configuration
basis (bit ``k`` of the row index is qubit ``k``, bit set <-> sigma^z = +1).
"""
import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .distributions import DiscreteDistribution
from .errors import CapacityError, NotHermitian
from .ising import IsingModel, enumerate_gibbs

MAX_QUBITS = 10

# single-qubit basis ordered (spin -1, spin +1)
PAULI_Z = np.diag([-1.0, 1.0])
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
IDENTITY = np.eye(2)


@dataclass(frozen=True)
class QuantumChainSpec:
    """Noise-averaged transverse-field model.

    ``H = -sum J_in J_ij Z_i Z_j - sum h_i Z_i - sum gamma_i J_in X_i - sum eta_i s_i Z_i``

    ``couplings`` are ``(i, j, J)`` with qubit positions; the coupling
    strength is ``j_in * J``. With ``absolute_transverse`` the transverse term
    is ``gamma_i X_i`` instead of ``gamma_i j_in X_i``.
    """

    n_qubits: int
    couplings: tuple
    j_in: float
    gamma: tuple
    eta: tuple
    beta: float
    fields: tuple = ()
    absolute_transverse: bool = False

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise CapacityError(f"{self.n_qubits} qubits outside 1..{MAX_QUBITS}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        gamma = _per_qubit(self.gamma, self.n_qubits, "gamma")
        eta = _per_qubit(self.eta, self.n_qubits, "eta")
        if min(gamma) < 0 or min(eta) < 0:
            raise ValueError("gamma and eta must be non-negative")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "couplings", tuple((int(i), int(j), float(v)) for i, j, v in self.couplings))
        object.__setattr__(self, "fields", _per_qubit(self.fields, self.n_qubits, "fields") if len(self.fields) else ())

    def classical_model(self):
        """Diagonal part without transverse field or noise, couplings scaled by ``j_in``."""
        return IsingModel(
            tuple(range(self.n_qubits)),
            {(i, j): self.j_in * v for i, j, v in self.couplings},
            {k: v for k, v in enumerate(self.fields) if v != 0},
        )


def _per_qubit(values, n, name):
    if np.isscalar(values):
        return (float(values),) * n
    values = tuple(float(v) for v in values)
    if len(values) != n:
        raise ValueError(f"{name} needs {n} entries, got {len(values)}")
    return values


def chain3_spec(j_in, beta=11.0, gamma=0.013, eta=0.04):
    """Open three-qubit ferromagnetic chain 1-2-3 with uniform gamma and eta."""
    return QuantumChainSpec(3, ((0, 1, 1.0), (1, 2, 1.0)), j_in, gamma, eta, beta)


def _site_operator(op, k, n):
    # qubit k is bit k, so it is the k-th factor counted from the right
    factors = [IDENTITY] * n
    factors[n - 1 - k] = op
    return reduce(np.kron, factors)


def build_noise_hamiltonian(spec, signs):
    """Dense Hamiltonian for one noise realisation ``signs`` (one +-1 per qubit)."""
    n = spec.n_qubits
    signs = tuple(signs)
    if len(signs) != n:
        raise ValueError(f"{len(signs)} noise signs for {n} qubits")
    z = [_site_operator(PAULI_Z, k, n) for k in range(n)]
    dim = 1 << n
    h = np.zeros((dim, dim))
    for i, j, v in spec.couplings:
        h -= spec.j_in * v * (z[i] @ z[j])
    scale = 1.0 if spec.absolute_transverse else spec.j_in
    for k in range(n):
        if spec.gamma[k]:
            h -= spec.gamma[k] * scale * _site_operator(PAULI_X, k, n)
        if spec.eta[k]:
            h -= spec.eta[k] * signs[k] * z[k]
    for k, v in enumerate(spec.fields):
        if v:
            h -= v * z[k]
    return h


def check_hermitian(h, tol=1e-12):
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] & (h.shape[0] - 1):
        raise NotHermitian(f"operator of shape {h.shape} is not square with power-of-two size")
    if np.abs(h - h.conj().T).max() > tol:
        raise NotHermitian("operator differs from its conjugate transpose")
    return h


def thermal_distribution(h, beta):
    """Computational-basis diagonal of ``exp(-beta H) / Tr exp(-beta H)``."""
    h = check_hermitian(h)
    n = h.shape[0].bit_length() - 1
    if np.iscomplexobj(h):
        if np.abs(h.imag).max() == 0:
            h = h.real
    w, v = np.linalg.eigh(h)
    boltz = np.exp(-beta * (w - w[0]))
    p = (np.abs(v) ** 2) @ boltz
    return DiscreteDistribution(n, p / p.sum())


def noise_averaged_distribution(spec):
    """Uniform average of thermal laws over all ``2**n`` noise sign patterns."""
    acc = np.zeros(1 << spec.n_qubits)
    for signs in itertools.product((-1, 1), repeat=spec.n_qubits):
        acc += thermal_distribution(build_noise_hamiltonian(spec, signs), spec.beta).probs
    acc /= 1 << spec.n_qubits
    return DiscreteDistribution(spec.n_qubits, acc / acc.sum())


def bs_model(j_in, chi):
    """Chain 1-2-3 plus the background-susceptibility link ``chi * j_in**2`` on (1, 3)."""
    return IsingModel((0, 1, 2), {(0, 1): j_in, (1, 2): j_in, (0, 2): chi * j_in ** 2})


def bs_distribution(j_in, chi, beta):
    return enumerate_gibbs(bs_model(j_in, chi), beta)
