"""Exact Gibbs analysis of small Ising models and annealer-style samplers."""
__version__ = "0.1.0"

from .distributions import (AlphaGrid, DiscreteDistribution, GibbsFamily, build_alpha_grid,
                            empirical_distribution, finite_sampling_bound, fit_alpha_out,
                            kl_divergence, total_variation)
from .ising import (IsingModel, energy, enumerate_gibbs, gauge_map_config, gauge_transform,
                    ground_states)
from .quantum import (QuantumChainSpec, bs_distribution, build_noise_hamiltonian,
                      noise_averaged_distribution, thermal_distribution)
from .screening import iso_gradient, iso_objective, reconstruct, three_spin_sweep
from .instances import catalog, generate_instance, load_instance, two_cell_chimera_edges
from .backends import (EffectiveTemperatureTable, EmulatorBackend, ExactGibbsBackend, SampleRequest,
                       SampleSet, ToyModelBackend, collect_with_gauges)
