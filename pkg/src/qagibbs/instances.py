"""Ground-state-degeneracy benchmark instances on two Chimera unit cells.

The catalog ships as JSON files in ``data/``, holding the published
coupling and field tables verbatim in the D-Wave programming convention
(``E = sum J s s + sum h s``, negative J ferromagnetic). The loader negates
them into this package's convention unless told otherwise.

The field-bearing tables omit the ``(296, 300)`` coupler. Each such file
carries a ``restored_couplings`` list with the value that reproduces the
instance's declared degeneracy; it is applied unless ``verbatim=True``.
"""
import json
from dataclasses import dataclass
from importlib import resources

from .errors import DegeneracyNotFound
from .ising import IsingModel, ground_states

TWO_CELL_SITES = tuple(range(296, 312))

GSD_NAMES = tuple(f"GSD-{d}" for d in (2, 4, 6, 8, 10, 24, 38))
GSD_F_NAMES = tuple(f"GSD-F-{d}" for d in range(1, 7))
NAMES = GSD_NAMES + GSD_F_NAMES

# smallest and largest alpha_out observed per instance in the 0.2-0.4 band
ALPHA_OUT_RANGE = {
    "GSD-2": (1.32, 3.97), "GSD-4": (1.85, 4.95), "GSD-6": (1.85, 5.16),
    "GSD-8": (1.59, 4.37), "GSD-10": (1.32, 4.76), "GSD-24": (1.59, 4.58),
    "GSD-38": (1.59, 4.76), "GSD-F-1": (1.32, 3.97), "GSD-F-2": (1.32, 4.37),
    "GSD-F-3": (1.59, 4.37), "GSD-F-4": (1.59, 4.58), "GSD-F-5": (1.59, 4.76),
    "GSD-F-6": (1.59, 4.37),
}


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    model: IsingModel
    declared_degeneracy: int
    has_fields: bool


def _raw(name):
    if name not in NAMES:
        raise KeyError(f"unknown instance {name!r}; known: {', '.join(NAMES)}")
    return json.loads(resources.files("qagibbs").joinpath("data").joinpath(f"{name}.json").read_text())


def load_instance(name, dwave_convention=True, verbatim=False):
    raw = _raw(name)
    couplings = list(raw["couplings"])
    if not verbatim:
        couplings += raw.get("restored_couplings", [])
    model = IsingModel.from_lists(raw["sites"], couplings, raw.get("fields", []))
    if dwave_convention:
        model = model.negated()
    return CatalogEntry(name, model, int(raw["declared_degeneracy"]), bool(raw.get("fields")))


def catalog(dwave_convention=True, verbatim=False):
    return [load_instance(n, dwave_convention, verbatim) for n in NAMES]


def load_model_file(path, dwave_convention=False):
    """Model from an instance JSON file (``sites``, ``couplings``, ``fields``)."""
    with open(path) as fh:
        model = IsingModel.from_dict(json.load(fh))
    return model.negated() if dwave_convention else model


def resolve_model(ref, dwave_convention=True):
    """Catalog name or path to an instance file."""
    if ref in NAMES:
        return load_instance(ref, dwave_convention).model
    return load_model_file(ref, dwave_convention=False)


def chimera_edges(m, n=None, t=4):
    """Edges of a C_{m,n,t} Chimera graph with linear qubit labels.

    Qubit ``((i * n + j) * 2 + u) * t + k`` sits in cell row ``i``, column
    ``j``, side ``u`` (0 vertical, 1 horizontal), position ``k``. Vertical
    qubits couple down to the next row, horizontal ones right to the next column.
    """
    n = m if n is None else n

    def q(i, j, u, k):
        return ((i * n + j) * 2 + u) * t + k

    edges = []
    for i in range(m):
        for j in range(n):
            for a in range(t):
                for b in range(t):
                    edges.append((q(i, j, 0, a), q(i, j, 1, b)))
            for k in range(t):
                if i + 1 < m:
                    edges.append((q(i, j, 0, k), q(i + 1, j, 0, k)))
                if j + 1 < n:
                    edges.append((q(i, j, 1, k), q(i, j + 1, 1, k)))
    return sorted(edges)


def two_cell_chimera_edges():
    """The 36 couplers among qubits 296-311, as listed in the no-field catalog tables."""
    return sorted((i, j) for i, j, _ in _raw("GSD-2")["couplings"])


def generate_instance(rng, with_fields=False, target_degeneracy=None, max_tries=1000):
    """Random +-1 instance on the two-cell edge set; returns ``(model, degeneracy)``.

    With a target, draws are repeated until the degeneracy matches or
    ``max_tries`` is exhausted.
    """
    edges = two_cell_chimera_edges()
    tries = 1 if target_degeneracy is None else max_tries
    for _ in range(tries):
        jv = rng.choice((-1.0, 1.0), size=len(edges))
        cmap = {e: float(v) for e, v in zip(edges, jv)}
        fmap = {}
        if with_fields:
            hv = rng.choice((-1.0, 1.0), size=len(TWO_CELL_SITES))
            fmap = {s: float(v) for s, v in zip(TWO_CELL_SITES, hv)}
        model = IsingModel(TWO_CELL_SITES, cmap, fmap)
        deg = ground_states(model).degeneracy
        if target_degeneracy is None or deg == target_degeneracy:
            return model, deg
    raise DegeneracyNotFound(target_degeneracy, max_tries)


def degeneracy_hit_rate(rng, target, tries, with_fields=False):
    """Fraction of ``tries`` random draws whose degeneracy equals ``target``."""
    hits = 0
    for _ in range(tries):
        _, deg = generate_instance(rng, with_fields)
        hits += deg == target
    return hits / tries


__all__ = [
    "CatalogEntry", "NAMES", "GSD_NAMES", "GSD_F_NAMES", "ALPHA_OUT_RANGE", "catalog",
    "load_instance", "load_model_file", "resolve_model", "chimera_edges",
    "two_cell_chimera_edges", "generate_instance", "degeneracy_hit_rate",
]
