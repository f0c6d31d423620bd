"""Conservation, energy, rank-structure, and damping-rate measurements."""

from dataclasses import dataclass

import numpy as np

ENERGY_THRESHOLDS = (0.95, 0.99, 0.9999, 0.999999, 0.99999999)


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    mass_rel_err: float
    momentum: float
    momentum_err: float
    ee_norm: float
    rank: int
    ranks_at_thresholds: tuple      # ranks at ENERGY_THRESHOLDS
    imag_residual: float


def _v_weights(grid):
    """Trapezoid-weighted velocity values v_j * w_j."""
    return grid.v_nodes * grid.trapezoid_weights()


def momentum(solution, grid):
    """First velocity moment sum_ij v_j f_ij w_j dx dv.

    Low-rank solutions are contracted factor-wise without expansion.
    """
    vw = _v_weights(grid)
    if hasattr(solution, "sigma"):
        if solution.rank == 0:
            return 0.0
        return float(solution.sigma @ (solution.U.sum(axis=0)
                                       * (vw @ solution.V))) * grid.dx * grid.dv
    F = np.asarray(solution)
    return float((F @ vw).sum()) * grid.dx * grid.dv


def absolute_momentum(solution, grid):
    """sum_ij |v_j| f_ij w_j dx dv, the momentum-error normalization."""
    aw = np.abs(grid.v_nodes) * grid.trapezoid_weights()
    if hasattr(solution, "sigma"):
        if solution.rank == 0:
            return 0.0
        return float(solution.sigma @ (solution.U.sum(axis=0)
                                       * (aw @ solution.V))) * grid.dx * grid.dv
    F = np.asarray(solution)
    return float((F @ aw).sum()) * grid.dx * grid.dv


def electrostatic_energy(E, grid):
    """L2 norm (sum E_i^2 dx)^(1/2) of the electric field."""
    E = np.asarray(E)
    return float(np.sqrt((E * E).sum() * grid.dx))


def fit_damping_rate(t, ee, window=(0.0, 20.0)):
    """Damping rate from the least-squares slope through log energy peaks.

    Returns None (unavailable) when fewer than 3 local maxima of ee fall
    inside the window; never extrapolates.
    """
    t = np.asarray(t, dtype=float)
    ee = np.asarray(ee, dtype=float)
    sel = (t >= window[0]) & (t <= window[1])
    ts = t[sel]
    es = ee[sel]
    if ts.size < 3:
        return None
    interior = (es[1:-1] > es[:-2]) & (es[1:-1] >= es[2:])
    peaks = np.flatnonzero(interior) + 1
    peaks = peaks[es[peaks] > 0.0]
    if peaks.size < 3:
        return None
    slope = np.polyfit(ts[peaks], np.log(es[peaks]), 1)[0]
    return -float(slope)


def rank_at_energy(sigmas, fraction):
    """Smallest r capturing the given fraction of sum sigma_m^2."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    s = np.asarray(sigmas, dtype=float)
    energy = s * s
    total = energy.sum()
    if total == 0.0:
        return 0
    cum = np.cumsum(energy)
    return int(np.argmax(cum >= fraction * total)) + 1


def imaginary_residual(F, grid):
    """Plain-sum integral |sum Im f_ij| dx dv of a complex phase-space matrix."""
    F = np.asarray(F)
    return abs(F.imag.sum()) * grid.dx * grid.dv


def imaginary_residual_factors(U, sigma, W, grid):
    """Same integral contracted from complex factors U diag(sigma) W^T."""
    if sigma.shape[0] == 0:
        return 0.0
    total = sigma @ (U.sum(axis=0) * W.sum(axis=0))
    return abs(total.imag) * grid.dx * grid.dv
