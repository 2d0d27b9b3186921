"""Distribution comparison, empirical estimation and effective-temperature fits."""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import CapacityError, DimensionMismatch, EmptyGrid

MAX_SITES = 20


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Probability vector over the ``2**n_sites`` configurations in canonical index order."""

    n_sites: int
    probs: np.ndarray

    def __post_init__(self):
        if self.n_sites > MAX_SITES:
            raise CapacityError(f"{self.n_sites} sites exceeds the enumeration cap of {MAX_SITES}")
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (1 << self.n_sites,):
            raise DimensionMismatch(f"expected {1 << self.n_sites} probabilities, got shape {p.shape}")
        if (p < 0).any():
            raise ValueError("negative probability")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, n_sites):
        return cls(n_sites, np.full(1 << n_sites, 1.0 / (1 << n_sites)))

    @classmethod
    def point_mass(cls, n_sites, index):
        p = np.zeros(1 << n_sites)
        p[index] = 1.0
        return cls(n_sites, p)

    def __len__(self):
        return self.probs.shape[0]

    def permuted(self, mask):
        """Distribution of ``index ^ mask`` (spin flips on the sites set in ``mask``)."""
        idx = np.arange(len(self), dtype=np.int64)
        return DiscreteDistribution(self.n_sites, self.probs[idx ^ mask])


def gibbs_from_energies(energies, alpha):
    """Normalised ``exp(-alpha * E)`` with a log-sum-exp shift."""
    logw = -alpha * np.asarray(energies, dtype=np.float64)
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def _check_same(mu, nu):
    if mu.n_sites != nu.n_sites:
        raise DimensionMismatch(f"{mu.n_sites} vs {nu.n_sites} sites")


def total_variation(mu, nu):
    _check_same(mu, nu)
    return 0.5 * float(np.abs(mu.probs - nu.probs).sum())


def kl_divergence(mu, nu):
    """``KL(mu || nu)``; ``inf`` when mu puts mass outside the support of nu.

    Diagnostic only, never used for fitting.
    """
    _check_same(mu, nu)
    p, q = mu.probs, nu.probs
    on = p > 0
    if (q[on] == 0).any():
        return float("inf")
    return float(np.sum(p[on] * (np.log(p[on]) - np.log(q[on]))))


def pinsker_holds(mu, nu):
    return total_variation(mu, nu) <= np.sqrt(kl_divergence(mu, nu) / 2) + 1e-15


def empirical_distribution(samples, n_sites=None):
    """Frequency vector of a sample set.

    ``samples`` is a :class:`~qagibbs.backends.SampleSet`, an integer array of
    configuration indices, or an ``(M, n)`` array of +-1 spins.
    """
    if hasattr(samples, "configs"):
        n_sites = len(samples.sites) if n_sites is None else n_sites
        idx = np.asarray(samples.configs, dtype=np.int64)
    else:
        arr = np.asarray(samples)
        if arr.ndim == 2:
            n_sites = arr.shape[1] if n_sites is None else n_sites
            idx = kernels.pack_spins(arr)
        else:
            if n_sites is None:
                raise ValueError("n_sites is required for index samples")
            idx = arr.astype(np.int64)
    if n_sites > MAX_SITES:
        raise CapacityError(f"{n_sites} sites exceeds the enumeration cap of {MAX_SITES}")
    if idx.size == 0:
        raise ValueError("empty sample set")
    counts = np.bincount(idx, minlength=1 << n_sites)
    return DiscreteDistribution(n_sites, counts / idx.size)


# (step, first, last) per band, as fractions of alpha_max
_BANDS = ((Fraction(1, 80), Fraction(0), Fraction(7, 80)),
          (Fraction(1, 40), Fraction(1, 10), Fraction(1, 2)),
          (Fraction(1, 10), Fraction(6, 10), Fraction(1)))


@dataclass(frozen=True)
class AlphaGrid:
    alpha_max: float
    points: tuple

    def __post_init__(self):
        pts = self.points
        if len(pts) == 0:
            raise EmptyGrid("grid has no points")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("grid points must be strictly increasing")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def relative_grid():
    """The 30 banded fractions of the stepped sweep, exact."""
    out = []
    for step, lo, hi in _BANDS:
        x = lo
        while x <= hi:
            out.append(x)
            x += step
    return out


def build_alpha_grid(alpha_max):
    """Stepped grid on ``[0, alpha_max]``: fine below 0.1, medium to 0.5, coarse above."""
    if not alpha_max > 0:
        raise EmptyGrid(f"alpha_max must be positive, got {alpha_max!r}")
    return AlphaGrid(float(alpha_max), tuple(float(f * Fraction(alpha_max)) for f in relative_grid()))


class GibbsFamily:
    """Gibbs distributions of one model on a fixed alpha grid, precomputed once."""

    def __init__(self, model, grid):
        if isinstance(grid, AlphaGrid):
            alphas = grid.points
        else:
            alphas = tuple(grid)
        if not alphas:
            raise EmptyGrid("grid has no points")
        self.model = model
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.n_sites = model.n
        energies = model.energies()
        self.table = np.stack([gibbs_from_energies(energies, a) for a in self.alphas])

    def distribution(self, k):
        return DiscreteDistribution(self.n_sites, self.table[k])

    def tv_profile(self, nu):
        if nu.n_sites != self.n_sites:
            raise DimensionMismatch(f"{nu.n_sites} vs {self.n_sites} sites")
        return 0.5 * np.abs(self.table - nu.probs).sum(axis=1)

    def fit(self, nu):
        tv = self.tv_profile(nu)
        # argmin returns the first minimum, i.e. the smaller alpha on ties
        k = int(np.argmin(tv))
        return float(self.alphas[k]), float(tv[k])


def fit_alpha_out(nu, model, grid):
    """Grid point whose Gibbs distribution is TV-closest to ``nu``; returns ``(alpha, tv)``."""
    return GibbsFamily(model, grid).fit(nu)


def sampling_floor_trials(target, m, trials=8, seed=0):
    """TV of ``trials`` independent ``m``-draw empirical laws against ``target``.

    Trial ``t`` draws from ``default_rng([seed, t])``. Multinomial counts are
    drawn directly, which has the same law as binning ``m`` i.i.d. samples.
    """
    probs = target.probs
    out = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        counts = rng.multinomial(m, probs)
        out[t] = kernels.tv_counts(counts, probs, m)
    return out


def finite_sampling_bound(model, alpha_out, m, trials=8, seed=0):
    """Mean TV between ``m`` Gibbs draws at ``alpha_out`` and the exact law."""
    target = DiscreteDistribution(model.n, gibbs_from_energies(model.energies(), alpha_out))
    return float(sampling_floor_trials(target, m, trials, seed).mean())
