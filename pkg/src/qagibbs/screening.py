"""Interaction-screening reconstruction of effective Ising parameters.

For node ``u`` with neighbours ``N(u)`` the screening objective is

    S_u(J, h) = E[ exp(-s_u * (sum_{j in N(u)} J_uj s_j + h_u)) ]

which is convex. The expectation runs over an exact distribution or over
the distinct configurations of a sample set weighted by their counts.
"""
from concurrent.futures import ThreadPoolExecutor
import dataclasses
from dataclasses import dataclass

import numpy as np

from . import kernels
from .distributions import DiscreteDistribution

GRAD_TOL = 1e-9
STEP_TOL = 1e-10
MAX_ITER = 500


@dataclass
class NodeParams:
    node: int
    field: float = 0.0
    couplings: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.node in self.couplings:
            raise ValueError(f"self-coupling on node {self.node}")


@dataclass
class NodeFit:
    params: NodeParams
    objective: float
    grad_norm: float
    iterations: int
    converged: bool


@dataclass
class ReconstructionResult:
    nodes: dict
    couplings: dict
    fields: dict

    @property
    def converged(self):
        return all(f.converged for f in self.nodes.values())

    def coupling(self, i, j):
        return self.couplings[(min(i, j), max(i, j))]

    def discrepancy(self, i, j):
        """Gap between the two directed estimates of ``J_ij``."""
        return abs(self.nodes[i].params.couplings[j] - self.nodes[j].params.couplings[i])

    def to_dict(self):
        return {
            "couplings": [[i, j, v] for (i, j), v in self.couplings.items()],
            "fields": [[i, v] for i, v in self.fields.items()],
            "nodes": {
                str(u): {
                    "field": f.params.field,
                    "couplings": {str(k): v for k, v in f.params.couplings.items()},
                    "objective": f.objective,
                    "grad_norm": f.grad_norm,
                    "iterations": f.iterations,
                    "converged": f.converged,
                }
                for u, f in self.nodes.items()
            },
        }


class _Data:
    """Distinct configurations as +-1 rows with their probability weights."""

    def __init__(self, spins, weights, sites):
        self.spins = spins.astype(np.float64)
        self.weights = weights
        self.sites = tuple(sites)
        self.pos = {s: k for k, s in enumerate(self.sites)}


def _as_data(source, sites=None):
    if isinstance(source, _Data):
        return source
    if isinstance(source, DiscreteDistribution):
        n = source.n_sites
        sites = tuple(range(n)) if sites is None else tuple(sites)
        if len(sites) != n:
            raise ValueError(f"{len(sites)} site ids for a {n}-site distribution")
        idx = np.flatnonzero(source.probs)
        return _Data(kernels.unpack_spins(idx, n), source.probs[idx], sites)
    if hasattr(source, "configs"):
        sites = source.sites if sites is None else tuple(sites)
        idx, counts = np.unique(np.asarray(source.configs, dtype=np.int64), return_counts=True)
        return _Data(kernels.unpack_spins(idx, len(sites)), counts / counts.sum(), sites)
    arr = np.asarray(source)
    if arr.ndim != 2:
        raise TypeError("expected a DiscreteDistribution, a SampleSet or an (M, n) spin array")
    sites = tuple(range(arr.shape[1])) if sites is None else tuple(sites)
    rows, counts = np.unique(arr.astype(np.int8), axis=0, return_counts=True)
    return _Data(rows, counts / counts.sum(), sites)


def _design(data, node, neighbours):
    cols = [data.pos[j] for j in neighbours]
    x = np.column_stack([data.spins[:, cols], np.ones(len(data.weights))])
    return data.spins[:, data.pos[node]], x


def _theta(params, neighbours):
    return np.array([params.couplings.get(j, 0.0) for j in neighbours] + [params.field])


def _value_grad(su, x, w, theta):
    # trial points far out may overflow; the line search rejects them
    with np.errstate(over="ignore", invalid="ignore"):
        e = w * np.exp(-su * (x @ theta))
        return float(e.sum()), -(e * su) @ x


def iso_objective(node, params, dist, sites=None):
    data = _as_data(dist, sites)
    nb = sorted(params.couplings)
    su, x = _design(data, node, nb)
    return _value_grad(su, x, data.weights, _theta(params, nb))[0]


def iso_gradient(node, params, dist, sites=None):
    """Gradient ordered as ``sorted(params.couplings)`` followed by the field."""
    data = _as_data(dist, sites)
    nb = sorted(params.couplings)
    su, x = _design(data, node, nb)
    return _value_grad(su, x, data.weights, _theta(params, nb))[1]


def bfgs(fg, x0, tol=GRAD_TOL, max_iter=MAX_ITER, step_tol=STEP_TOL):
    """Minimise with BFGS and backtracking. ``fg(x) -> (f, grad)``.

    Stops once the gradient norm is below ``tol`` and the quasi-Newton step
    ``|H^-1 g|`` is below ``step_tol``; the second test matters on flat,
    badly conditioned objectives where a small gradient still leaves the
    iterate far from the minimiser. Returns ``(x, f, grad, iterations, converged)``.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fg(x)
    hinv = np.eye(x.size)
    for it in range(max_iter):
        gnorm = np.linalg.norm(g)
        d = -hinv @ g
        if gnorm < tol and np.linalg.norm(d) < step_tol:
            return x, f, g, it, True
        slope = g @ d
        if slope >= 0:
            hinv = np.eye(x.size)
            d, slope = -g, -(g @ g)
        t = 1.0
        while True:
            xn = x + t * d
            fn, gn = fg(xn)
            if fn <= f + 1e-4 * t * slope:
                break
            # below rounding resolution of f: accept any step that shrinks the gradient
            if abs(fn - f) <= 4e-16 * max(1.0, abs(f)) and np.linalg.norm(gn) < gnorm:
                break
            t *= 0.5
            if t < 1e-20:
                # no further progress is representable
                return x, f, g, it, bool(gnorm < tol)
        s, y = xn - x, gn - g
        sy = s @ y
        if sy > 1e-300:
            if it == 0:
                hinv = np.eye(x.size) * (sy / (y @ y))
            rho = 1.0 / sy
            v = np.eye(x.size) - rho * np.outer(s, y)
            hinv = v @ hinv @ v.T + rho * np.outer(s, s)
        x, f, g = xn, fn, gn
    return x, f, g, max_iter, False


def _prox_gradient(fg, x0, l1, penalised, tol, max_iter):
    """ISTA with backtracking for ``f(x) + l1 * |x[penalised]|_1``.

    The step only ever shrinks; growing it again lets rounding noise in
    ``f`` admit unstable steps close to the optimum.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fg(x)
    step = 1.0
    for it in range(max_iter):
        while True:
            z = x - step * g
            z[penalised] = np.sign(z[penalised]) * np.maximum(np.abs(z[penalised]) - step * l1, 0.0)
            fz, gz = fg(z)
            diff = z - x
            if fz <= f + g @ diff + (diff @ diff) / (2 * step) + 1e-15:
                break
            step *= 0.5
        mapping = np.linalg.norm(diff) / step
        x, f, g = z, fz, gz
        if mapping < tol:
            return x, f, mapping, it + 1, True
    return x, f, mapping, max_iter, False


def fit_node(data, node, neighbours, l1=0.0, tol=GRAD_TOL, max_iter=MAX_ITER):
    neighbours = sorted(neighbours)
    su, x = _design(data, node, neighbours)
    w = data.weights

    def fg(theta):
        return _value_grad(su, x, w, theta)

    theta0 = np.zeros(len(neighbours) + 1)
    if l1 > 0:
        mask = np.zeros(theta0.size, dtype=bool)
        mask[:-1] = True
        theta, f, gnorm, it, ok = _prox_gradient(fg, theta0, l1, mask, tol, max_iter)
    else:
        theta, f, g, it, ok = bfgs(fg, theta0, tol, max_iter)
        gnorm = float(np.linalg.norm(g))
    params = NodeParams(node, float(theta[-1]), {j: float(v) for j, v in zip(neighbours, theta[:-1])})
    return NodeFit(params, f, gnorm, it, ok)


def reconstruct(source, sites=None, support=None, l1=0.0, tol=GRAD_TOL, max_iter=MAX_ITER, workers=1):
    """Per-node screening fits, symmetrised by averaging the two directed estimates.

    ``support`` is an edge list over site ids; the complete graph by default.
    Non-convergence is reported through ``NodeFit.converged``, never raised.
    """
    data = _as_data(source, sites)
    sites = data.sites
    if support is None:
        support = [(a, b) for k, a in enumerate(sites) for b in sites[k + 1:]]
    nbrs = {s: set() for s in sites}
    for a, b in support:
        if a == b:
            raise ValueError(f"self-loop on {a} in support")
        nbrs[a].add(b)
        nbrs[b].add(a)

    def run(u):
        return fit_node(data, u, nbrs[u], l1, tol, max_iter)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            fits = list(pool.map(run, sites))
    else:
        fits = [run(u) for u in sites]
    nodes = dict(zip(sites, fits))
    couplings = {}
    for a, b in support:
        key = (min(a, b), max(a, b))
        couplings[key] = 0.5 * (nodes[a].params.couplings[b] + nodes[b].params.couplings[a])
    fields = {u: f.params.field for u, f in nodes.items()}
    return ReconstructionResult(nodes, couplings, fields)


@dataclass(frozen=True)
class SweepRow:
    j_in: float
    j12: float
    j23: float
    j13: float
    converged: bool


def chain_model(j_in):
    from .ising import IsingModel

    return IsingModel((0, 1, 2), {(0, 1): j_in, (1, 2): j_in})


def _chain_source(j_in, source, params):
    from . import quantum

    if source == "toy":
        spec = quantum.chain3_spec(j_in, params.get("beta", 11.0), params.get("gamma", 0.013), params.get("eta", 0.04))
        return quantum.noise_averaged_distribution(spec)
    if source == "bs":
        return quantum.bs_distribution(j_in, params.get("chi", 0.05), params.get("beta", 11.0))
    from .backends import collect_with_gauges

    return collect_with_gauges(
        source, chain_model(j_in), params.get("num_samples", 5_000_000),
        batch=params.get("batch", 100), seed=params.get("seed", 0), alpha_in=j_in,
        anneal_label=params.get("anneal_label", 1),
    )


def three_spin_sweep(j_grid, source="toy", workers=1, **params):
    """Reconstruct ``(J12, J23, J13)`` of the three-spin chain output at each ``J_in``.

    ``source`` is ``"toy"`` (noise-averaged transverse-field model), ``"bs"``
    (background susceptibility) or a sampler backend, in which case
    ``num_samples`` gauge-cycled samples are collected per point. For a
    backend, each point gets seed ``params['seed'] + k``.
    """
    j_grid = list(j_grid)

    def run(k):
        j = j_grid[k]
        p = dict(params)
        if not isinstance(source, str):
            p["seed"] = params.get("seed", 0) + k
        res = reconstruct(_chain_source(j, source, p), sites=(0, 1, 2))
        return SweepRow(float(j), res.coupling(0, 1), res.coupling(1, 2), res.coupling(0, 2), res.converged)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, range(len(j_grid))))
    return [run(k) for k in range(len(j_grid))]


def zero_crossing(xs, ys, atol=1e-12):
    """First sign change of ``ys`` located by linear interpolation, or None.

    Points with ``|y| <= atol`` are skipped, so an exact zero at the start of
    a sweep does not count as a crossing.
    """
    pts = [(x, y) for x, y in zip(xs, ys) if abs(y) > atol]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if (y0 < 0) != (y1 < 0):
            return float(x0 + (x1 - x0) * (-y0) / (y1 - y0))
    return None
