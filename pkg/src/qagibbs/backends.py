"""Sampler backends standing in for annealing hardware, plus gauge-cycled collection."""
import json
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .distributions import MAX_SITES, gibbs_from_energies
from .errors import CapacityError, UnknownAnnealLabel
from .ising import IsingModel, gauge_mask, gauge_transform, random_gauge
from .quantum import MAX_QUBITS, QuantumChainSpec, noise_averaged_distribution

ANNEAL_LABELS = (1, 5, 25, 125)


def normalize_label(label):
    """Anneal labels compare as strings; integral numbers lose their decimal part."""
    if isinstance(label, (int, float, np.integer, np.floating)) and float(label).is_integer():
        return str(int(label))
    text = str(label).strip()
    try:
        f = float(text)
    except ValueError:
        return text
    return str(int(f)) if f.is_integer() else text


@dataclass(frozen=True, eq=False)
class SampleRequest:
    model: IsingModel
    anneal_label: object = 1
    num_samples: int = 1
    seed: int = 0
    alpha_in: float = None

    def __post_init__(self):
        if int(self.num_samples) < 1:
            raise ValueError("num_samples must be at least 1")

    def echo(self):
        return {
            "model": self.model.to_dict(),
            "anneal_label": normalize_label(self.anneal_label),
            "num_samples": int(self.num_samples),
            "seed": int(self.seed),
            "alpha_in": self.alpha_in,
        }


@dataclass(eq=False)
class SampleSet:
    """Observed configurations as canonical indices, already in the ungauged frame."""

    sites: tuple
    configs: np.ndarray
    batch_size: int
    gauges: list
    backend_id: str
    request: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sites = tuple(self.sites)
        self.configs = np.asarray(self.configs, dtype=np.int64)
        self.gauges = [np.asarray(g, dtype=np.int8) for g in self.gauges]
        expected = math.ceil(len(self.configs) / self.batch_size)
        if len(self.gauges) != expected:
            raise ValueError(f"{len(self.gauges)} gauges for {len(self.configs)} samples in batches of {self.batch_size}")

    def __len__(self):
        return len(self.configs)

    def spins(self):
        return kernels.unpack_spins(self.configs, len(self.sites))

    def to_dict(self):
        return {
            "sites": list(self.sites),
            "configs": self.configs.tolist(),
            "batch_size": int(self.batch_size),
            "gauges": [g.tolist() for g in self.gauges],
            "backend_id": self.backend_id,
            "request": self.request,
            "info": self.info,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(d["sites"], d["configs"], d["batch_size"], d["gauges"], d["backend_id"],
                   d.get("request", {}), d.get("info", {}))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def draw_indices(probs, m, rng, cdf=None):
    """``m`` i.i.d. configuration indices from a probability vector (inverse CDF)."""
    cdf = np.cumsum(probs) if cdf is None else cdf
    out = np.searchsorted(cdf, rng.random(m) * cdf[-1], side="right")
    return np.minimum(out, len(cdf) - 1)


class Backend:
    """Sampler contract: ``sample(request) -> SampleSet``, deterministic given the seed."""

    backend_id = "backend"
    max_sites = MAX_SITES
    cache_size = 64

    def __init__(self):
        self._cache = OrderedDict()
        self._lock = threading.Lock()

    def check(self, request):
        if request.model.n > self.max_sites:
            raise CapacityError(f"{self.backend_id} handles at most {self.max_sites} sites, got {request.model.n}")

    def distribution(self, request):
        """Probability vector the backend samples from."""
        raise NotImplementedError

    def _cached(self, key, build):
        with self._lock:
            hit = self._cache.get(key)
            if hit is not None:
                self._cache.move_to_end(key)
                return hit
        hit = build()
        with self._lock:
            self._cache[key] = hit
            if len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return hit

    def _draw(self, request, probs, cdf=None, mask=0):
        rng = np.random.default_rng(int(request.seed))
        idx = draw_indices(probs, int(request.num_samples), rng, cdf) ^ mask
        return SampleSet(request.model.sites, idx, int(request.num_samples),
                         [np.ones(request.model.n, dtype=np.int8)], self.backend_id, request.echo())

    def sample(self, request):
        self.check(request)
        return self._draw(request, self.distribution(request))

    def sample_gauged(self, request, a):
        """Sample the gauge-transformed request model; configs stay in the gauged frame."""
        return self.sample(replace(request, model=gauge_transform(request.model, a)))


class _GibbsBackend(Backend):
    # Gibbs laws are gauge covariant: the transformed model's law is the base
    # law read at index ^ mask. Drawing x from the base law and reporting
    # x ^ mask therefore samples the gauged model without re-enumerating it.
    def _key(self, request):
        raise NotImplementedError

    def _law(self, request):
        raise NotImplementedError

    def distribution(self, request):
        return self._cached(self._key(request), lambda: self._law(request))

    def _base_cdf(self, request):
        probs = self.distribution(request)
        return probs, self._cached(("cdf",) + self._key(request), lambda: np.cumsum(probs))

    def sample_gauged(self, request, a):
        self.check(request)
        probs, cdf = self._base_cdf(request)
        req = replace(request, model=gauge_transform(request.model, a))
        return self._draw(req, probs, cdf, gauge_mask(a))


class ExactGibbsBackend(_GibbsBackend):
    """I.i.d. draws from ``exp(-H) / Z`` of the (pre-scaled) request model."""

    backend_id = "exact"

    def _key(self, request):
        return (request.model.key(),)

    def _law(self, request):
        return gibbs_from_energies(request.model.energies(), 1.0)


class ToyModelBackend(Backend):
    """Draws from the noise-averaged transverse-field thermal state.

    The programming scale ``alpha_in`` (request field, or the largest
    parameter magnitude) plays the role of ``J_in``: couplings enter as
    ``alpha_in * (J / alpha_in)`` and the transverse field as
    ``gamma * alpha_in``. Fields enter unscaled as static longitudinal terms.
    """

    backend_id = "toy"
    max_sites = MAX_QUBITS

    def __init__(self, gamma=0.013, eta=0.04, beta=11.0, absolute_transverse=False):
        super().__init__()
        self.gamma, self.eta, self.beta = gamma, eta, beta
        self.absolute_transverse = absolute_transverse

    def spec_for(self, model, alpha_in=None):
        scale = model.max_abs() if alpha_in is None else float(alpha_in)
        pos = model.position
        unit = scale if scale > 0 else 1.0
        couplings = tuple((pos[i], pos[j], v / unit) for (i, j), v in model.couplings.items())
        h = np.zeros(model.n)
        for s, v in model.fields.items():
            h[pos[s]] = v
        return QuantumChainSpec(model.n, couplings, scale, self.gamma, self.eta, self.beta,
                                tuple(h) if model.fields else (), self.absolute_transverse)

    def distribution(self, request):
        key = (request.model.key(), request.alpha_in)
        return self._cached(key, lambda: noise_averaged_distribution(
            self.spec_for(request.model, request.alpha_in)).probs)


@dataclass(frozen=True)
class EffectiveTemperatureTable:
    """Inverse temperature applied to the programmed (scaled) model, per alpha_in band and anneal label.

    Bands: ``low`` below 0.2, ``mid`` from 0.2 to 0.4 inclusive, ``high`` above.
    """

    betas: dict

    BANDS = ("low", "mid", "high")

    def __post_init__(self):
        norm = {(band, normalize_label(lab)): float(b) for (band, lab), b in self.betas.items()}
        for (band, _), b in norm.items():
            if band not in self.BANDS:
                raise ValueError(f"unknown band {band!r}")
            if not b > 0:
                raise ValueError("effective inverse temperatures must be positive")
        object.__setattr__(self, "betas", norm)

    @staticmethod
    def band_of(alpha_in):
        if alpha_in < 0.2:
            return "low"
        if alpha_in <= 0.4:
            return "mid"
        return "high"

    def labels(self):
        return sorted({lab for _, lab in self.betas}, key=lambda s: (len(s), s))

    def lookup(self, alpha_in, label):
        key = (self.band_of(alpha_in), normalize_label(label))
        if key not in self.betas:
            raise UnknownAnnealLabel(f"no effective temperature for band {key[0]!r}, anneal label {key[1]!r}")
        return self.betas[key]

    @classmethod
    def from_alpha_out_range(cls, lo, hi, labels=ANNEAL_LABELS, alpha_lo=0.2, alpha_hi=0.4):
        """Linear ramp across labels from ``lo / alpha_lo`` to ``hi / alpha_hi``, same in every band.

        ``lo`` and ``hi`` are the smallest and largest observed effective
        scales, reached at the edges of the high-quality alpha_in band.
        """
        b0, b1 = lo / alpha_lo, hi / alpha_hi
        steps = np.linspace(b0, b1, len(labels))
        return cls({(band, lab): float(b) for band in cls.BANDS for lab, b in zip(labels, steps)})

    @classmethod
    def default(cls, instance="GSD-6"):
        from .instances import ALPHA_OUT_RANGE

        return cls.from_alpha_out_range(*ALPHA_OUT_RANGE[instance])


class EmulatorBackend(_GibbsBackend):
    """Gibbs draws at a per-(band, anneal label) effective inverse temperature. Emulation only."""

    backend_id = "emulator"

    def __init__(self, table=None):
        super().__init__()
        self.table = EffectiveTemperatureTable.default() if table is None else table

    def beta_for(self, request):
        alpha_in = request.model.max_abs() if request.alpha_in is None else request.alpha_in
        return self.table.lookup(alpha_in, request.anneal_label)

    def _key(self, request):
        return (request.model.key(), self.beta_for(request))

    def _law(self, request):
        return gibbs_from_energies(request.model.energies(), self.beta_for(request))


def _batch_seed(seed, b):
    # batch 0 reuses the stream seed so one identity-gauge batch equals plain sampling
    if b == 0:
        return int(seed)
    return int(np.random.SeedSequence(int(seed), spawn_key=(2, b)).generate_state(1, np.uint64)[0])


def collect_with_gauges(backend, model, total, batch=100, seed=0, anneal_label=1, alpha_in=None, gauges=None):
    """Sample ``total`` configurations, re-gauging the programmed model every ``batch`` draws.

    Each batch draws a uniform random gauge ``a``, samples the transformed
    model, and maps configurations back with ``s -> a s``. ``gauges`` may
    force the gauge sequence (a list of +-1 vectors, or ``"identity"``).
    """
    total, batch = int(total), int(batch)
    if total < 1 or batch < 1:
        raise ValueError("total and batch must be positive")
    gauge_rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(1,)))
    n_batches = math.ceil(total / batch)
    chunks, used = [], []
    for b in range(n_batches):
        m = min(batch, total - b * batch)
        if gauges == "identity":
            a = np.ones(model.n, dtype=np.int8)
        elif gauges is not None:
            a = np.asarray(gauges[b], dtype=np.int8)
        else:
            a = random_gauge(model.n, gauge_rng)
        req = SampleRequest(model, anneal_label, m, _batch_seed(seed, b), alpha_in)
        got = backend.sample_gauged(req, a)
        chunks.append(got.configs ^ gauge_mask(a))
        used.append(a)
    echo = SampleRequest(model, anneal_label, total, seed, alpha_in).echo()
    return SampleSet(model.sites, np.concatenate(chunks), batch, used, backend.backend_id, echo)


def make_backend(name, **options):
    """Backend by name: ``exact``, ``toy``, ``emulator`` or ``remote``."""
    if name == "exact":
        return ExactGibbsBackend()
    if name == "toy":
        return ToyModelBackend(**options)
    if name == "emulator":
        table = options.get("table")
        if "betas" in options:
            # {label: beta}, the same in every band
            table = EffectiveTemperatureTable({(band, lab): b for band in EffectiveTemperatureTable.BANDS
                                               for lab, b in options["betas"].items()})
        elif "instance" in options:
            table = EffectiveTemperatureTable.default(options["instance"])
        return EmulatorBackend(table)
    if name == "remote":
        from .remote import RemoteBackend

        return RemoteBackend(**options)
    raise ValueError(f"unknown backend {name!r}")
