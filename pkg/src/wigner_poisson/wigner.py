"""Structure-preserving Fourier update of the nonlocal field term.

Held at a frozen potential, each velocity-frequency mode evolves by the exact
phase factor

    g^x(k_v) = exp( (i/H) * [Phi(x + H k_v/2) - Phi(x - H k_v/2)] * dt ),

which is conjugate symmetric in k_v, so a real solution stays real except for
the unpaired Nyquist mode.  That bin is zeroed before the inverse transform;
the leftover imaginary residue is recorded and dropped.  The potential is
evaluated at the off-grid points x +/- H k_v/2 by 5th-order WENO
interpolation on the periodic grid.
"""

import math

import numpy as np
from numba import njit

from .advection import WENO_EPS


@njit(cache=True)
def _weno5_point_ct(vals, c, t, weno, eps):
    """Interpolate periodic nodal values at node c plus fraction t in [-1/2, 1/2).

    Uses the 5 nodes nearest the query with three quadratic substencils;
    position weights g0=(t-1)(t-2)/12, g1=(4-t^2)/6, g2=(t+1)(t+2)/12
    recover the degree-4 interpolant.
    """
    n = vals.shape[0]
    v0 = vals[(c - 2) % n]
    v1 = vals[(c - 1) % n]
    v2 = vals[c % n]
    v3 = vals[(c + 1) % n]
    v4 = vals[(c + 2) % n]
    # substencil quadratics (nodes {-2,-1,0}, {-1,0,1}, {0,1,2}) in Newton form
    # anchored at v2, so nodal queries and constant data reproduce exactly
    q0 = t * ((v2 - v1) + (t + 1.0) * 0.5 * (v0 - 2.0 * v1 + v2))
    q1 = t * ((v3 - v2) + (t - 1.0) * 0.5 * (v1 - 2.0 * v2 + v3))
    q2 = t * ((v3 - v2) + (t - 1.0) * 0.5 * (v2 - 2.0 * v3 + v4))
    g0 = (t - 1.0) * (t - 2.0) / 12.0
    g1 = (4.0 - t * t) / 6.0
    g2 = (t + 1.0) * (t + 2.0) / 12.0
    if weno:
        b0 = (13.0 / 12.0) * (v0 - 2.0 * v1 + v2) ** 2 + 0.25 * (v0 - 4.0 * v1 + 3.0 * v2) ** 2
        b1 = (13.0 / 12.0) * (v1 - 2.0 * v2 + v3) ** 2 + 0.25 * (v1 - v3) ** 2
        b2 = (13.0 / 12.0) * (v2 - 2.0 * v3 + v4) ** 2 + 0.25 * (3.0 * v2 - 4.0 * v3 + v4) ** 2
        w0 = g0 / ((eps + b0) * (eps + b0))
        w1 = g1 / ((eps + b1) * (eps + b1))
        w2 = g2 / ((eps + b2) * (eps + b2))
        return v2 + (w0 * q0 + w1 * q1 + w2 * q2) / (w0 + w1 + w2)
    return v2 + (g0 * q0 + g1 * q1 + g2 * q2)


@njit(cache=True)
def _weno5_point(vals, q, weno, eps):
    """Interpolate at fractional grid position q (grid units)."""
    c = int(np.floor(q + 0.5))
    return _weno5_point_ct(vals, c, q - c, weno, eps)


@njit(cache=True)
def _interp_shifted(vals, delta_over_dx, weno, eps, out):
    """Evaluate the interpolant at x_i + delta for every node i."""
    n = vals.shape[0]
    for i in range(n):
        out[i] = _weno5_point(vals, i + delta_over_dx, weno, eps)


@njit(cache=True)
def _phase_row(phi, i, deltas, scale, weno, eps, out):
    """Phase angles at spatial node i for all bins; deltas in cells per bin."""
    for b in range(deltas.shape[0]):
        up = _weno5_point(phi, i + deltas[b], weno, eps)
        dn = _weno5_point(phi, i - deltas[b], weno, eps)
        out[b] = (up - dn) * scale


def interpolate_potential(phi, xq, grid, weights="weno", eps=WENO_EPS):
    """5th-order WENO interpolation of the potential at position xq (periodic).

    The fractional offset is formed as (xq - c*dx)/dx so queries that equal a
    stored node value reproduce the nodal data exactly.
    """
    phi = np.ascontiguousarray(phi, dtype=float)
    c = math.floor(float(xq) / grid.dx + 0.5)
    t = (float(xq) - c * grid.dx) / grid.dx
    return _weno5_point_ct(phi, c, t, weights == "weno", eps)


class PhaseMultiplier:
    """Deferred evaluator of g^{x_i}(k_v(j)) over the (i, bin) index plane.

    Bins use unshifted DFT order; the two interpolated potential arrays for a
    +/- displacement pair are computed once and shared, so conjugate symmetry
    g(-k) = conj(g(k)) holds exactly.  Columns are cached per bin.
    """

    def __init__(self, phi, H, dt, grid, weights="weno", eps=WENO_EPS):
        if H <= 0:
            raise ValueError(f"H must be positive, got {H}")
        self.phi = np.ascontiguousarray(phi, dtype=float)
        self.H = float(H)
        self.dt = float(dt)
        self.grid = grid
        self.weno = weights == "weno"
        self.eps = eps
        self._cols = {}
        self._deltas = 0.5 * self.H * grid.kv_bins / grid.dx

    def _phase_col(self, b):
        """Phase angle theta(i) for bin b; g = exp(i*theta)."""
        grid = self.grid
        delta = self._deltas[b]                 # displacement in cells
        up = np.empty(grid.Nx)
        dn = np.empty(grid.Nx)
        _interp_shifted(self.phi, delta, self.weno, self.eps, up)
        _interp_shifted(self.phi, -delta, self.weno, self.eps, dn)
        return (up - dn) * (self.dt / self.H)

    def column(self, b):
        """g values for all i at bin b (zeros at the Nyquist bin)."""
        col = self._cols.get(b)
        if col is None:
            if b == self.grid.nyquist_bin:
                col = np.zeros(self.grid.Nx, dtype=complex)
            else:
                col = np.exp(1j * self._phase_col(b))
            col.setflags(write=False)
            self._cols[b] = col
        return col

    def entry(self, i, b):
        return self.column(b)[i]

    def row(self, i):
        """g values for all bins at spatial index i (O(Nv), no column builds)."""
        theta = np.empty(self.grid.Nv)
        _phase_row(self.phi, i, self._deltas, self.dt / self.H,
                   self.weno, self.eps, theta)
        out = np.exp(1j * theta)
        out[self.grid.nyquist_bin] = 0.0
        return out

    def matrix(self):
        """Dense Nx x Nv multiplier with the Nyquist column zeroed."""
        return np.column_stack([self.column(b) for b in range(self.grid.Nv)])


def phase_multiplier(phi, H, dt, i, j, grid, weights="weno", eps=WENO_EPS):
    """Single value g^{x_i}(k_v(j)), j in DFT bin order."""
    return PhaseMultiplier(phi, H, dt, grid, weights, eps).entry(i, j)


def fourier_update_full(F, phi, H, dt, grid, weights="weno", eps=WENO_EPS):
    """Advance the dense distribution through the field term over a full dt.

    Returns (F_new, imag_residual): the real updated matrix and the absolute
    plain-sum integral |sum Im| * dx * dv of the discarded imaginary part.
    """
    F = np.asarray(F, dtype=float)
    if F.shape != (grid.Nx, grid.Nv):
        raise ValueError(f"distribution shape {F.shape} does not match grid")
    mult = PhaseMultiplier(phi, H, dt, grid, weights, eps)
    Fhat = np.fft.fft(F, axis=1)
    Fhat *= mult.matrix()
    Fhat[:, grid.nyquist_bin] = 0.0
    W = np.fft.ifft(Fhat, axis=1)
    residual = abs(W.imag.sum()) * grid.dx * grid.dv
    return np.ascontiguousarray(W.real), residual


class FourierAccessor:
    """Entry accessor for the Fourier-space update of a low-rank solution.

    A(i, b) = [U diag(sigma) Vhat^T](i, b) * g^{x_i}(k_v(b)) with Vhat the
    column-wise DFT of the real right factor; the Nyquist bin reads 0.
    """

    def __init__(self, U, sigma, Vhat, mult, grid):
        self.U = U
        self.What = Vhat * sigma                # (Nv, r) complex
        self.mult = mult
        self.grid = grid
        self.shape = (grid.Nx, grid.Nv)

    def entry(self, i, b):
        if b == self.grid.nyquist_bin:
            return 0.0 + 0.0j
        return (self.U[i] @ self.What[b]) * self.mult.entry(i, b)

    def col(self, b):
        if b == self.grid.nyquist_bin:
            return np.zeros(self.grid.Nx, dtype=complex)
        return (self.U @ self.What[b]) * self.mult.column(b)

    def row(self, i):
        vals = self.What @ self.U[i]
        out = vals * self.mult.row(i)
        out[self.grid.nyquist_bin] = 0.0
        return out


def fourier_entry(U, sigma, Vhat, phi, H, dt, i, j, grid, weights="weno", eps=WENO_EPS):
    """Single entry of the Fourier-updated matrix from pre-update factors."""
    mult = PhaseMultiplier(phi, H, dt, grid, weights, eps)
    return FourierAccessor(U, sigma, Vhat, mult, grid).entry(i, j)
