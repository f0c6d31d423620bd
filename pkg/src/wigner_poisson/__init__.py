"""1D1V Wigner-Poisson solvers: full-rank Strang splitting and adaptive-rank
ACA-SVD, with conservation and rank-structure diagnostics."""

__version__ = "0.1.0"

from .grid import PhaseSpaceGrid, build_grid, frequency_grid, opposite_index
from .poisson import density_full, density_lowrank, electric_field, solve_poisson
from .advection import Departure, SLAccessor, departure, sl_column, sl_entry, sl_full
from .wigner import (FourierAccessor, PhaseMultiplier, fourier_entry,
                     fourier_update_full, interpolate_potential, phase_multiplier)
from .lowrank import (CrossFactors, DenseAccessor, LowRankFactors, aca,
                      compress, evaluate_entry, recompress, svd_truncate)
from .solver import (SimulationResult, SimulationState, SolverConfig,
                     init_distribution, mass_correct, run, step_adaptive,
                     step_full, timestep, total_mass)
from .diagnostics import (ENERGY_THRESHOLDS, DiagnosticsRecord, absolute_momentum,
                          electrostatic_energy, fit_damping_rate,
                          imaginary_residual, momentum, rank_at_energy)
