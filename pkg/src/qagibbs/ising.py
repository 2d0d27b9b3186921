"""Classical Ising models: energies, exact Gibbs laws, ground states, gauges.

Energy convention: ``H(s) = -sum_{ij} J_ij s_i s_j - sum_i h_i s_i``.
"""
import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import kernels
from .distributions import MAX_SITES, DiscreteDistribution, gibbs_from_energies
from .errors import CapacityError, ConfigurationMismatch

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class IsingModel:
    sites: tuple
    couplings: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise ValueError("duplicate site id")
        known = set(sites)
        couplings = {}
        for (i, j), v in dict(self.couplings).items():
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-coupling on site {i}")
            if i not in known or j not in known:
                raise ValueError(f"coupling ({i}, {j}) references an unknown site")
            key = (min(i, j), max(i, j))
            if key in couplings:
                raise ValueError(f"coupling {key} given twice")
            couplings[key] = float(v)
        fields = {}
        for i, v in dict(self.fields).items():
            if int(i) not in known:
                raise ValueError(f"field on unknown site {i}")
            fields[int(i)] = float(v)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "fields", fields)

    @classmethod
    def from_lists(cls, sites, couplings=(), fields=()):
        """Build from ``[(i, j, J), ...]`` and ``[(i, h), ...]`` lists; duplicates are errors."""
        cmap = {}
        for i, j, v in couplings:
            key = (min(int(i), int(j)), max(int(i), int(j)))
            if key in cmap:
                raise ValueError(f"coupling {key} given twice")
            cmap[key] = v
        fmap = {}
        for i, v in fields:
            if int(i) in fmap:
                raise ValueError(f"field on site {i} given twice")
            fmap[int(i)] = v
        return cls(tuple(sites), cmap, fmap)

    @property
    def n(self):
        return len(self.sites)

    @cached_property
    def position(self):
        return {s: k for k, s in enumerate(self.sites)}

    @cached_property
    def is_integral(self):
        vals = list(self.couplings.values()) + list(self.fields.values())
        return all(float(v).is_integer() for v in vals)

    @cached_property
    def _arrays(self):
        pos = self.position
        dtype = np.int64 if self.is_integral else np.float64
        keys = list(self.couplings)
        ei = np.array([pos[i] for i, _ in keys], dtype=np.int64)
        ej = np.array([pos[j] for _, j in keys], dtype=np.int64)
        jv = np.array([self.couplings[k] for k in keys], dtype=dtype)
        h = np.zeros(self.n, dtype=dtype)
        for s, v in self.fields.items():
            h[pos[s]] = v
        return ei, ej, jv, h

    def edge_arrays(self):
        """``(ei, ej, J)`` with site positions, plus the dense field vector."""
        return self._arrays

    def coupling_matrix(self):
        ei, ej, jv, _ = self._arrays
        m = np.zeros((self.n, self.n))
        m[ei, ej] = jv
        m[ej, ei] = jv
        return m

    def energies(self):
        """Energy of every configuration in canonical index order (int64 when integral)."""
        if self.n > MAX_SITES:
            raise CapacityError(f"{self.n} sites exceeds the enumeration cap of {MAX_SITES}")
        ei, ej, jv, h = self._arrays
        return kernels.all_energies(self.n, ei, ej, jv, h)

    def scaled(self, alpha):
        return IsingModel(self.sites,
                          {k: alpha * v for k, v in self.couplings.items()},
                          {k: alpha * v for k, v in self.fields.items()})

    def negated(self):
        return self.scaled(-1.0)

    def max_abs(self):
        vals = [abs(v) for v in self.couplings.values()] + [abs(v) for v in self.fields.values()]
        return max(vals, default=0.0)

    def key(self):
        """Hashable identity of the model's contents."""
        return (self.sites, tuple(sorted(self.couplings.items())), tuple(sorted(self.fields.items())))

    def same_as(self, other):
        return (self.sites == other.sites and self.couplings == other.couplings
                and self.fields == other.fields)

    def to_dict(self):
        return {
            "sites": list(self.sites),
            "couplings": [[i, j, v] for (i, j), v in self.couplings.items()],
            "fields": [[i, v] for i, v in self.fields.items()],
        }

    @classmethod
    def from_dict(cls, d):
        return cls.from_lists(d["sites"], d.get("couplings", ()), d.get("fields", ()))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def as_spins(model, config):
    """+-1 int8 vector in site order from an array or a ``{site: spin}`` mapping."""
    if isinstance(config, Mapping):
        missing = [s for s in model.sites if s not in config]
        if missing:
            raise ConfigurationMismatch(f"no spin for sites {missing}")
        arr = np.array([config[s] for s in model.sites])
    else:
        arr = np.asarray(config)
        if arr.shape != (model.n,):
            raise ConfigurationMismatch(f"expected {model.n} spins, got shape {arr.shape}")
    if not np.isin(arr, (-1, 1)).all():
        raise ConfigurationMismatch("spins must be -1 or +1")
    return arr.astype(np.int8)


def energy(model, config):
    s = as_spins(model, config).astype(np.int64 if model.is_integral else np.float64)
    ei, ej, jv, h = model.edge_arrays()
    e = -np.sum(jv * s[ei] * s[ej]) - np.dot(h, s)
    return e.item()


def enumerate_gibbs(model, alpha):
    """Exact ``exp(-alpha H) / Z`` over all ``2**n`` configurations."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return DiscreteDistribution(model.n, gibbs_from_energies(model.energies(), alpha))


class GroundStates(NamedTuple):
    min_energy: float
    degeneracy: int
    states: list


def ground_states(model):
    e = model.energies()
    emin = e.min()
    if model.is_integral:
        hit = np.flatnonzero(e == emin)
    else:
        hit = np.flatnonzero(e <= emin + DEGENERACY_TOL)
    states = list(kernels.unpack_spins(hit, model.n))
    return GroundStates(emin.item(), int(hit.size), states)


def as_gauge(model, a):
    if isinstance(a, Mapping):
        missing = [s for s in model.sites if s not in a]
        if missing:
            raise ConfigurationMismatch(f"gauge does not cover sites {missing}")
        a = [a[s] for s in model.sites]
    return as_spins(model, a)


def gauge_transform(model, a):
    """``h_i -> a_i h_i``, ``J_ij -> a_i a_j J_ij``."""
    a = as_gauge(model, a)
    pos = model.position
    return IsingModel(
        model.sites,
        {(i, j): float(a[pos[i]] * a[pos[j]]) * v for (i, j), v in model.couplings.items()},
        {i: float(a[pos[i]]) * v for i, v in model.fields.items()},
    )


def gauge_map_config(config, a):
    """``s_i -> a_i s_i``; arrays or matching ``{site: spin}`` mappings."""
    if isinstance(config, Mapping):
        if not isinstance(a, Mapping) or set(a) != set(config):
            raise ConfigurationMismatch("gauge and configuration cover different sites")
        return {s: a[s] * v for s, v in config.items()}
    c, g = np.asarray(config), np.asarray(a)
    if c.shape[-1:] != g.shape:
        raise ConfigurationMismatch(f"gauge of length {g.shape} for configuration of shape {c.shape}")
    return (c * g).astype(np.int8)


def gauge_mask(a):
    """Index-space form of a gauge: bit k set where ``a_k = -1``, so configs map by XOR."""
    a = np.asarray(a)
    return int(((a < 0).astype(np.int64) << np.arange(a.size, dtype=np.int64)).sum())


def random_gauge(n, rng):
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
