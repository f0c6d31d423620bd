"""Phase-space and velocity-frequency grids.

The spatial grid is periodic on [0, Lx) with the right endpoint excluded;
the velocity grid spans [-Lv, Lv] with both endpoints included, so
dv = 2*Lv/(Nv-1).  Velocity-space Fourier data lives on the frequency grid
K_v = (2*pi/(2*Lv)) * {-Nv/2, ..., Nv/2 - 1}, stored internally in unshifted
DFT bin order (DC first); the zero-centered order is reached through an
explicit permutation.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Immutable discretization of the (x, v) phase space.

    Attributes:
        Nx, Nv: node counts (Nv even)
        Lx: spatial period
        Lv: velocity half-width
        dx, dv: grid spacings
        x_nodes: Nx nodes, x_i = i*dx, i = 0..Nx-1
        v_nodes: Nv nodes, v_j = -Lv + j*dv, both endpoints included
        kv_bins: Nv frequencies in DFT bin order (DC at index 0)
    """

    Nx: int
    Nv: int
    Lx: float
    Lv: float
    dx: float = field(init=False)
    dv: float = field(init=False)
    x_nodes: np.ndarray = field(init=False)
    v_nodes: np.ndarray = field(init=False)
    kv_bins: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.Nx <= 0 or self.Nv <= 0:
            raise ValueError(f"grid sizes must be positive, got Nx={self.Nx}, Nv={self.Nv}")
        if self.Nv % 2 != 0:
            raise ValueError(f"Nv must be even for the FFT structure, got Nv={self.Nv}")
        if self.Lx <= 0 or self.Lv <= 0:
            raise ValueError(f"domain sizes must be positive, got Lx={self.Lx}, Lv={self.Lv}")
        dx = self.Lx / self.Nx
        dv = 2.0 * self.Lv / (self.Nv - 1)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dv", dv)
        object.__setattr__(self, "x_nodes", dx * np.arange(self.Nx))
        object.__setattr__(self, "v_nodes", -self.Lv + dv * np.arange(self.Nv))
        kv = frequency_grid(self.Nv, self.Lv)
        object.__setattr__(self, "kv_bins", np.fft.ifftshift(kv))
        self.x_nodes.setflags(write=False)
        self.v_nodes.setflags(write=False)
        self.kv_bins.setflags(write=False)

    @property
    def kv_centered(self):
        """Frequencies in zero-centered order, -Nv/2 ... Nv/2-1."""
        return np.fft.fftshift(self.kv_bins)

    @property
    def nyquist_bin(self):
        """Index of the Nyquist bin in DFT bin order."""
        return self.Nv // 2

    @property
    def k_nyquist(self):
        """Nyquist frequency, (2*pi/(2*Lv)) * (-Nv/2)."""
        return (np.pi / self.Lv) * (-(self.Nv // 2))

    def trapezoid_weights(self):
        """Trapezoid quadrature weights along v (without the dv factor)."""
        w = np.ones(self.Nv)
        w[0] = 0.5
        w[-1] = 0.5
        return w


def build_grid(Lx, Lv, Nx, Nv):
    """Construct a PhaseSpaceGrid, validating sizes."""
    return PhaseSpaceGrid(Nx=int(Nx), Nv=int(Nv), Lx=float(Lx), Lv=float(Lv))


def frequency_grid(Nv, Lv):
    """Zero-centered velocity frequencies (2*pi/(2*Lv)) * {-Nv/2, ..., Nv/2-1}.

    The unshifted DFT bin order (DC first) is np.fft.ifftshift of this array;
    the Nyquist bin sits at index Nv//2 there, with value (pi/Lv)*(-Nv/2).
    """
    if Nv % 2 != 0:
        raise ValueError(f"Nv must be even, got {Nv}")
    m = np.arange(-(Nv // 2), Nv // 2)
    return (np.pi / Lv) * m


def opposite_index(j, Nv):
    """Conjugate-symmetric partner of DFT bin j (0-based, DC at 0).

    The DC bin and the Nyquist bin (Nv//2) are self-paired; every other bin j
    pairs with Nv - j.
    """
    return (Nv - j) % Nv
