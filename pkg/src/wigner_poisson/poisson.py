"""Charge density and the periodic 1D Poisson solve -phi'' = rho - 1.

The Poisson equation is discretized with the 4th-order central stencil
-(-1/12, 4/3, -5/2, 4/3, -1/12)/dx^2 and inverted in discrete Fourier space
through its exact symbol, with the zero mode removed (zero-mean gauge).  The
electric field is a diagnostic obtained from the matching 4th-order first
derivative.
"""

import numpy as np


def density_full(F, grid):
    """Velocity integral rho_i = int f(x_i, v) dv by the trapezoid rule."""
    F = np.asarray(F)
    if F.shape != (grid.Nx, grid.Nv):
        raise ValueError(f"distribution shape {F.shape} does not match grid "
                         f"({grid.Nx}, {grid.Nv})")
    w = grid.trapezoid_weights()
    return grid.dv * (F @ w)


def density_lowrank(factors, grid):
    """Trapezoid density contracted directly from SVD factors.

    rho = U @ (sigma * (w^T V)), never expanding the dense matrix.  Factors
    must be real (velocity space); complex V means the solution is still in
    Fourier space, which is a caller bug.
    """
    if np.iscomplexobj(factors.V) or np.iscomplexobj(factors.U):
        raise ValueError("density requires real-valued factors (velocity space)")
    if factors.rank == 0:
        return np.zeros(grid.Nx)
    w = grid.trapezoid_weights()
    vsum = grid.dv * (w @ factors.V)          # (r,)
    return factors.U @ (factors.sigma * vsum)


def solve_poisson(rho, grid):
    """Solve -phi'' = rho - 1 (4th-order periodic FD) with mean(phi) = 0.

    The mean of (rho - 1) is projected out before inversion so a solution
    always exists.
    """
    rho = np.asarray(rho, dtype=float)
    src = rho - 1.0
    src = src - src.mean()
    theta = 2.0 * np.pi * np.fft.fftfreq(grid.Nx)
    lam = (2.5 - (8.0 / 3.0) * np.cos(theta) + (1.0 / 6.0) * np.cos(2.0 * theta)) / grid.dx**2
    src_hat = np.fft.fft(src)
    phi_hat = np.zeros_like(src_hat)
    phi_hat[1:] = src_hat[1:] / lam[1:]
    phi = np.fft.ifft(phi_hat).real
    return phi - phi.mean()


def apply_stencil(phi, grid):
    """-phi'' through the 4th-order stencil; used for residual checks."""
    phi = np.asarray(phi)
    out = (np.roll(phi, 2) / 12.0 - np.roll(phi, 1) * (4.0 / 3.0) + phi * 2.5
           - np.roll(phi, -1) * (4.0 / 3.0) + np.roll(phi, -2) / 12.0)
    return out / grid.dx**2


def electric_field(phi, grid):
    """E = -phi' by the 4th-order central difference (periodic)."""
    phi = np.asarray(phi)
    dphi = (np.roll(phi, 2) - 8.0 * np.roll(phi, 1)
            + 8.0 * np.roll(phi, -1) - np.roll(phi, -2)) / (12.0 * grid.dx)
    return -dphi
