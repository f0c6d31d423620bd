"""Sampling-based adaptive cross approximation with SVD re-compression.

The ACA builds a CUR factorization of a matrix known only through an entry
accessor: at each step it samples a few candidate residual entries, refines
the best one by a column argmax then a row argmax (no rook condition), and
performs a rank-one residual update.  With pairing enabled, every selected
column is followed by its conjugate-symmetric partner, which preserves
column-wise conjugate symmetry of the reconstruction.  The cross factors are
then orthogonalized by QR and truncated by an SVD of the small core.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass
class CrossFactors:
    """Raw ACA output: pivot index sets, residual column/row stacks, pivots.

    Reconstruction cols @ diag(1/pivots) @ rows interpolates the sampled
    matrix exactly on all selected rows and columns.
    """

    row_idx: list
    col_idx: list
    cols: np.ndarray        # (Nrows, k)
    rows: np.ndarray        # (k, Ncols)
    pivots: np.ndarray      # (k,)
    shape: tuple

    @property
    def rank(self):
        return len(self.pivots)

    def expand(self):
        if self.rank == 0:
            return np.zeros(self.shape)
        return (self.cols / self.pivots) @ self.rows


@dataclass
class LowRankFactors:
    """SVD-form triple U diag(sigma) V^T with orthonormal U, V columns.

    V may be complex (Fourier space); the reconstruction always uses the
    plain transpose, never the conjugate.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank(self):
        return self.sigma.shape[0]

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[0])

    def expand(self):
        return (self.U * self.sigma) @ self.V.T

    def scaled(self, factor):
        """New factors with sigma scaled; U and V are shared, not copied."""
        return LowRankFactors(self.U, self.sigma * factor, self.V)


def zero_factors(nrows, ncols, dtype=float):
    return LowRankFactors(np.zeros((nrows, 0)), np.zeros(0),
                          np.zeros((ncols, 0), dtype=dtype))


def evaluate_entry(factors, i, j):
    """Single entry sum_m U(i,m) sigma(m) V(j,m), O(r)."""
    if factors.rank == 0:
        return 0.0
    return (factors.U[i] * factors.sigma) @ factors.V[j]


class DenseAccessor:
    """Adapter presenting a dense ndarray through the accessor protocol."""

    def __init__(self, A):
        self.A = np.asarray(A)
        self.shape = self.A.shape

    def entry(self, i, j):
        return self.A[i, j]

    def col(self, j):
        return self.A[:, j]

    def row(self, i):
        return self.A[i, :]


def aca(accessor, eps_c, p=12, max_rank=None, rng=None, pairing=False,
        pair_map=None, rel_scale=0.0):
    """Greedy cross approximation of the matrix behind ``accessor``.

    accessor: object with .shape, .entry(i,j), .col(j), .row(i).
    eps_c: stop once the Frobenius norm of the latest rank-one update falls
        below eps_c (plus eps_c * rel_scale times the running Frobenius
        estimate of the accumulated approximation, when rel_scale > 0).  The
        absolute form must sit below the downstream SVD truncation threshold
        or the truncation stage has nothing left to clean.
    p: candidate pairs sampled per iteration.
    max_rank: hard cap when given.  By default the iteration is bounded only
        by min(shape), with a diagnostic warning once the rank crosses
        min(shape)//2 (likely under-resolution, not an error).
    rng: int seed or np.random.Generator.
    pairing: after each pivot, immediately process the partner column
        pair_map(j) with its own row argmax (Fourier-space symmetry mode).
    """
    nrows, ncols = accessor.shape
    if pairing and pair_map is None:
        raise ValueError("pairing requires a pair_map")
    if p < 1:
        raise ValueError(f"candidate count p must be >= 1, got {p}")
    soft_cap = max_rank is None
    if soft_cap:
        max_rank = min(nrows, ncols)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)

    complex_data = np.iscomplexobj(accessor.col(0)) if ncols else False
    dtype = complex if complex_data else float

    row_free = np.ones(nrows, dtype=bool)
    col_free = np.ones(ncols, dtype=bool)
    cols = []       # residual columns c_l
    rows = []       # residual rows r_l
    pivots = []
    row_idx = []
    col_idx = []
    fro2 = 0.0      # running ||A_k||_F^2 estimate

    def residual_col(j):
        c = np.array(accessor.col(j), dtype=dtype)
        for cl, rl, dl in zip(cols, rows, pivots):
            c -= cl * (rl[j] / dl)
        return c

    def residual_row(i):
        r = np.array(accessor.row(i), dtype=dtype)
        for cl, rl, dl in zip(cols, rows, pivots):
            r -= rl * (cl[i] / dl)
        return r

    def push_update(i_k, j_k, c, r):
        nonlocal fro2
        d = c[i_k]
        unorm2 = (np.vdot(c, c).real * np.vdot(r, r).real) / abs(d) ** 2
        cross = 0.0
        for cl, rl, dl in zip(cols, rows, pivots):
            cross += (np.vdot(cl, c) * np.vdot(rl, r).conjugate()
                      / (np.conjugate(dl) * d)).real
        fro2 += unorm2 + 2.0 * cross
        cols.append(c)
        rows.append(r)
        pivots.append(d)
        row_idx.append(i_k)
        col_idx.append(j_k)
        row_free[i_k] = False
        col_free[j_k] = False
        return unorm2

    def finish():
        k = len(pivots)
        if k == 0:
            return CrossFactors([], [], np.zeros((nrows, 0), dtype=dtype),
                                np.zeros((0, ncols), dtype=dtype),
                                np.zeros(0, dtype=dtype), (nrows, ncols))
        return CrossFactors(row_idx, col_idx,
                            np.column_stack(cols), np.vstack(rows),
                            np.array(pivots), (nrows, ncols))

    stale = 0
    while len(pivots) < max_rank and row_free.any() and col_free.any() and stale < 3:
        # Phase I: random candidates from unselected rows and columns
        free_r = np.flatnonzero(row_free)
        free_c = np.flatnonzero(col_free)
        nc = min(p, free_r.size, free_c.size)
        cand_i = rng.choice(free_r, size=nc, replace=False)
        cand_j = rng.choice(free_c, size=nc, replace=False)
        vals = np.empty(nc, dtype=dtype)
        for t in range(nc):
            vals[t] = accessor.entry(cand_i[t], cand_j[t])
            for cl, rl, dl in zip(cols, rows, pivots):
                vals[t] -= cl[cand_i[t]] * rl[cand_j[t]] / dl
        best = int(np.argmax(np.abs(vals)))
        if vals[best] == 0.0:
            # residual indistinguishable from zero at the sampled entries
            break
        j_star = int(cand_j[best])

        # greedy refinement: column argmax, then row argmax
        c = residual_col(j_star)
        masked = np.where(row_free, np.abs(c), -1.0)
        i_k = int(np.argmax(masked))
        r = residual_row(i_k)
        masked = np.where(col_free, np.abs(r), -1.0)
        j_k = int(np.argmax(masked))
        if j_k != j_star:
            c = residual_col(j_k)
        if c[i_k] == 0.0:
            stale += 1  # zero pivot: skip this candidate set and resample
            continue
        stale = 0
        unorm2 = push_update(i_k, j_k, c, r)

        # pairing: process the conjugate-symmetric partner column right away
        if pairing:
            j_opp = pair_map(j_k, ncols)
            if j_opp != j_k and col_free[j_opp]:
                c2 = residual_col(j_opp)
                masked = np.where(row_free, np.abs(c2), -1.0)
                i_opp = int(np.argmax(masked))
                if c2[i_opp] != 0.0:
                    unorm2 = push_update(i_opp, j_opp, c2, residual_row(i_opp))

        thresh = eps_c + eps_c * rel_scale * np.sqrt(max(fro2, 0.0))
        if np.sqrt(unorm2) <= thresh:
            break

    if soft_cap:
        if len(pivots) > min(nrows, ncols) // 2:
            warnings.warn(f"ACA rank {len(pivots)} exceeds half the matrix "
                          "dimension; the data is barely compressible")
    elif len(pivots) >= max_rank:
        warnings.warn(f"ACA reached the rank cap {max_rank}; "
                      "the approximation may be under-resolved")
    return finish()


def svd_truncate(cross, eps_s):
    """QR both stacks, SVD the small core, truncate at sigma < eps_s."""
    if cross.rank == 0:
        nrows, ncols = cross.shape
        return zero_factors(nrows, ncols, cross.rows.dtype)
    Q1, R1 = np.linalg.qr(cross.cols)
    Q2, R2 = np.linalg.qr(cross.rows.T)
    core = (R1 / cross.pivots) @ R2.T
    Uc, S, Vh = np.linalg.svd(core)
    r = int((S >= eps_s).sum())
    return LowRankFactors(Q1 @ Uc[:, :r], S[:r], Q2 @ Vh[:r].T)


def recompress(U, sigma, V, eps_s):
    """Re-orthogonalize and truncate a plain factorization U diag(sigma) V^T."""
    if sigma.shape[0] == 0:
        return zero_factors(U.shape[0], V.shape[0], V.dtype)
    Q1, R1 = np.linalg.qr(U)
    Q2, R2 = np.linalg.qr(V)
    core = (R1 * sigma) @ R2.T
    Uc, S, Vh = np.linalg.svd(core)
    r = int((S >= eps_s).sum())
    return LowRankFactors(Q1 @ Uc[:, :r], S[:r], Q2 @ Vh[:r].T)


def compress(accessor, eps_c, eps_s, p=12, max_rank=None, rng=None,
             pairing=False, pair_map=None, rel_scale=0.0):
    """ACA followed by SVD truncation; O((Nrows+Ncols) * k) entry evaluations."""
    cross = aca(accessor, eps_c, p=p, max_rank=max_rank, rng=rng,
                pairing=pairing, pair_map=pair_map, rel_scale=rel_scale)
    return svd_truncate(cross, eps_s)
