"""Strang-splitting time integration, full-rank and adaptive-rank.

One step advances f by a half step of advection, a Poisson solve, a full
step of the Fourier field term at the frozen mid-step potential, a second
advection half step, and a final uniform rescaling that pins the total mass
to Lx.  The adaptive path replaces each dense stage by an ACA-SVD
compression of the corresponding entry accessor; the Fourier stage pairs
conjugate-symmetric columns so the solution stays real.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as diag
from .advection import SLAccessor, sl_full
from .grid import build_grid, opposite_index
from .lowrank import LowRankFactors, compress, recompress
from .poisson import density_full, density_lowrank, electric_field, solve_poisson
from .wigner import FourierAccessor, PhaseMultiplier, fourier_update_full

PROBLEM_DOMAINS = {
    "two_stream": {"Lx": 4.0 * np.pi, "Lv": 2.0 * np.pi},
    "landau": {"Lx": 5.0 * np.pi, "Lv": 2.0 * np.pi},
}


@dataclass
class SolverConfig:
    problem: str
    H: float
    Nx: int
    Nv: int
    T: float
    cfl: float = None
    dt: float = None
    Lx: float = None
    Lv: float = None
    mode: str = "adaptive"
    weno_order: int = 5
    eps_c: float = 1e-4
    eps_s: float = 1e-3
    p: int = 12
    max_rank: int = None
    rng_seed: int = 0
    snapshot_every: int = 0
    fit_window: tuple = (0.0, 20.0)
    out_dir: str = None
    track_ranks: bool = True    # dense-mode SVD spectra cost O(N^3) per step

    def __post_init__(self):
        if self.problem not in PROBLEM_DOMAINS:
            raise ValueError(f"unknown problem '{self.problem}'")
        if (self.cfl is None) == (self.dt is None):
            raise ValueError("exactly one of cfl and dt must be given")
        if self.H <= 0:
            raise ValueError(f"H must be positive, got {self.H}")
        if self.T < 0:
            raise ValueError(f"final time must be nonnegative, got {self.T}")
        if self.mode not in ("full", "adaptive"):
            raise ValueError(f"mode must be 'full' or 'adaptive', got '{self.mode}'")
        if self.weno_order not in (3, 5):
            raise ValueError(f"weno_order must be 3 or 5, got {self.weno_order}")
        domain = PROBLEM_DOMAINS[self.problem]
        if self.Lx is None:
            self.Lx = domain["Lx"]
        if self.Lv is None:
            self.Lv = domain["Lv"]


@dataclass
class SimulationState:
    t: float
    step: int
    solution: object                 # ndarray (full) or LowRankFactors (adaptive)
    phi: np.ndarray = None
    records: list = field(default_factory=list)
    stage_ranks: list = field(default_factory=list)
    momentum0: float = 0.0
    momentum_scale: float = 1.0


def init_distribution(problem, grid):
    """Initial condition as an exact rank-1 factorization and a dense matrix.

    two_stream: f0 = v^2/sqrt(8 pi) (2 + cos(x/2)) exp(-v^2/2)
    landau:     f0 = exp(-v^2/2)/sqrt(2 pi) (1 + 0.2 cos(0.4 x))
    """
    x = grid.x_nodes
    v = grid.v_nodes
    if problem == "two_stream":
        gx = 2.0 + np.cos(0.5 * x)
        hv = v**2 * np.exp(-0.5 * v**2) / np.sqrt(8.0 * np.pi)
    elif problem == "landau":
        gx = 1.0 + 0.2 * np.cos(0.4 * x)
        hv = np.exp(-0.5 * v**2) / np.sqrt(2.0 * np.pi)
    else:
        raise ValueError(f"unknown problem '{problem}'")
    nx = np.linalg.norm(gx)
    nv = np.linalg.norm(hv)
    factors = LowRankFactors((gx / nx)[:, None], np.array([nx * nv]),
                             (hv / nv)[:, None])
    return factors, np.outer(gx, hv)


def timestep(cfl, grid):
    """dt from the CFL number with max |v| = Lv."""
    if cfl <= 0:
        raise ValueError(f"cfl must be positive, got {cfl}")
    return cfl * grid.dx / grid.Lv


def total_mass(solution, grid):
    """Mass by simple sums in x and the trapezoid rule in v."""
    if isinstance(solution, LowRankFactors):
        if np.iscomplexobj(solution.U) or np.iscomplexobj(solution.V):
            raise ValueError("total_mass requires a real-valued solution")
        if solution.rank == 0:
            return 0.0
        w = grid.trapezoid_weights()
        return float(solution.sigma @ (solution.U.sum(axis=0) * grid.dx
                                       * (w @ solution.V) * grid.dv))
    F = np.asarray(solution)
    if np.iscomplexobj(F):
        raise ValueError("total_mass requires a real-valued solution")
    w = grid.trapezoid_weights()
    return float(grid.dx * grid.dv * (F @ w).sum())


def mass_correct(solution, grid):
    """Rescale so the total mass equals Lx; only sigma changes in low rank."""
    mass = total_mass(solution, grid)
    if not mass > 0.0:
        raise RuntimeError(f"nonphysical state: total mass {mass} is not positive")
    scale = grid.Lx / mass
    if isinstance(solution, LowRankFactors):
        return solution.scaled(scale)
    return np.asarray(solution) * scale


def _stage_seed(config, step, stage):
    """RNG for one compression, independent of evaluation order."""
    return np.random.default_rng(
        np.random.SeedSequence([config.rng_seed, step, stage]))


def _next_dt(state, config, grid):
    """Nominal step, truncated so the final step lands exactly on T."""
    dt = config.dt if config.dt is not None else timestep(config.cfl, grid)
    return min(dt, config.T - state.t)


def step_full(state, config, grid):
    """One Strang step of the dense solver; updates state in place."""
    dt = _next_dt(state, config, grid)
    F = sl_full(state.solution, 0.5 * dt, config.weno_order, grid)
    rho = density_full(F, grid)
    phi = solve_poisson(rho, grid)
    F, imag_res = fourier_update_full(F, phi, config.H, dt, grid)
    F = sl_full(F, 0.5 * dt, config.weno_order, grid)
    F = mass_correct(F, grid)
    state.solution = F
    state.phi = phi
    state.t += dt
    state.step += 1
    sigmas = (np.linalg.svd(F, compute_uv=False) if config.track_ranks
              else np.zeros(0))
    _record(state, config, grid, sigmas, imag_res)
    return state


def step_adaptive(state, config, grid):
    """One Strang step of the adaptive-rank solver; updates state in place."""
    dt = _next_dt(state, config, grid)
    f = state.solution
    kw = dict(eps_c=config.eps_c, eps_s=config.eps_s, p=config.p,
              max_rank=config.max_rank)

    acc = SLAccessor(f.U, f.sigma, f.V, 0.5 * dt, grid, config.weno_order)
    f = compress(acc, rng=_stage_seed(config, state.step, 1), **kw)
    ranks = [f.rank]

    rho = density_lowrank(f, grid)
    phi = solve_poisson(rho, grid)

    Vhat = np.fft.fft(f.V, axis=0)
    mult = PhaseMultiplier(phi, config.H, dt, grid)
    facc = FourierAccessor(f.U, f.sigma, Vhat, mult, grid)
    ft = compress(facc, rng=_stage_seed(config, state.step, 3),
                  pairing=True, pair_map=opposite_index, **kw)
    ranks.append(ft.rank)

    # back to velocity space: zero the Nyquist bin, invert the DFT, record the
    # imaginary residue, drop it in factored form, and re-orthogonalize
    Vt = ft.V.copy()
    Vt[grid.nyquist_bin, :] = 0.0
    W = np.fft.ifft(Vt, axis=0)
    imag_res = diag.imaginary_residual_factors(ft.U, ft.sigma, W, grid)
    Ur = np.hstack([ft.U.real, ft.U.imag])
    Vr = np.hstack([W.real, -W.imag])
    f = recompress(Ur, np.concatenate([ft.sigma, ft.sigma]), Vr, config.eps_s)
    ranks.append(f.rank)

    acc = SLAccessor(f.U, f.sigma, f.V, 0.5 * dt, grid, config.weno_order)
    f = compress(acc, rng=_stage_seed(config, state.step, 4), **kw)
    ranks.append(f.rank)

    f = mass_correct(f, grid)
    state.solution = f
    state.phi = phi
    state.t += dt
    state.step += 1
    state.stage_ranks.append(tuple(ranks))
    _record(state, config, grid, f.sigma, imag_res)
    return state


def _record(state, config, grid, sigmas, imag_res):
    f = state.solution
    mass = total_mass(f, grid)
    mom = diag.momentum(f, grid)
    ee = diag.electrostatic_energy(electric_field(state.phi, grid), grid)
    rank = (f.rank if isinstance(f, LowRankFactors)
            else int((sigmas >= config.eps_s).sum()))
    state.records.append(diag.DiagnosticsRecord(
        t=state.t,
        mass=mass,
        mass_rel_err=abs(mass - grid.Lx) / grid.Lx,
        momentum=mom,
        momentum_err=abs(mom - state.momentum0) / state.momentum_scale,
        ee_norm=ee,
        rank=rank,
        ranks_at_thresholds=tuple(diag.rank_at_energy(sigmas, frac)
                                  for frac in diag.ENERGY_THRESHOLDS),
        imag_residual=imag_res,
    ))


@dataclass
class SimulationResult:
    config: SolverConfig
    grid: object
    records: list
    state: SimulationState
    snapshots: list                   # (step, t, solution) tuples
    wall_time: float


def run(config, progress=None):
    """Integrate to T, collecting per-step diagnostics and snapshots.

    Deterministic for a fixed rng_seed.  Snapshots hold the initial state,
    every snapshot_every-th step when positive, and the final state.
    """
    start = time.perf_counter()
    grid = build_grid(config.Lx, config.Lv, config.Nx, config.Nv)
    factors, dense = init_distribution(config.problem, grid)
    solution = factors if config.mode == "adaptive" else dense
    state = SimulationState(t=0.0, step=0, solution=solution)
    state.momentum0 = diag.momentum(solution, grid)
    state.momentum_scale = diag.absolute_momentum(solution, grid)
    dt = config.dt if config.dt is not None else timestep(config.cfl, grid)

    snapshots = [(0, 0.0, solution)]
    stepper = step_adaptive if config.mode == "adaptive" else step_full
    eps_t = 1e-12 * max(config.T, dt)
    while state.t < config.T - eps_t:
        stepper(state, config, grid)
        if config.snapshot_every > 0 and state.step % config.snapshot_every == 0:
            snapshots.append((state.step, state.t, state.solution))
        if progress is not None:
            progress(state)
    if snapshots[-1][0] != state.step:
        snapshots.append((state.step, state.t, state.solution))
    return SimulationResult(config=config, grid=grid, records=state.records,
                            state=state, snapshots=snapshots,
                            wall_time=time.perf_counter() - start)
