import numpy as np
import pytest

from wigner_poisson import build_grid, init_distribution
from wigner_poisson.diagnostics import (absolute_momentum, electrostatic_energy,
                                        fit_damping_rate, imaginary_residual,
                                        imaginary_residual_factors, momentum,
                                        rank_at_energy)
from wigner_poisson.lowrank import LowRankFactors


def test_momentum_zero_for_initial_conditions():
    for problem, Lx in (("two_stream", 4 * np.pi), ("landau", 5 * np.pi)):
        g = build_grid(Lx, 2 * np.pi, 64, 64)
        factors, F = init_distribution(problem, g)
        assert abs(momentum(F, g)) <= 1e-13
        assert abs(momentum(factors, g)) <= 1e-13


def test_momentum_known_first_moment():
    # construct f with a nonzero first moment and compare against direct
    # quadrature with the same trapezoid weights
    g = build_grid(4 * np.pi, 2 * np.pi, 32, 32)
    X, V = np.meshgrid(g.x_nodes, g.v_nodes, indexing="ij")
    F = (1 + 0.5 * np.cos(X / 2)) * (V**2 + 0.3 * V) * np.exp(-V**2 / 2)
    w = g.trapezoid_weights()
    expected = g.dx * g.dv * np.sum(F * (g.v_nodes * w)[None, :])
    assert momentum(F, g) == pytest.approx(expected, rel=1e-14)
    assert expected != 0.0


def test_momentum_lowrank_matches_dense():
    g = build_grid(4 * np.pi, 2 * np.pi, 48, 40)
    rng = np.random.default_rng(0)
    U, _ = np.linalg.qr(rng.normal(size=(48, 3)))
    V, _ = np.linalg.qr(rng.normal(size=(40, 3)))
    f = LowRankFactors(U, np.array([2.0, 1.0, 0.5]), V)
    assert momentum(f, g) == pytest.approx(momentum(f.expand(), g), abs=1e-13)
    assert absolute_momentum(f, g) == pytest.approx(
        absolute_momentum(f.expand(), g), abs=1e-13)


def test_electrostatic_energy():
    g = build_grid(4 * np.pi, 2 * np.pi, 64, 16)
    assert electrostatic_energy(np.zeros(64), g) == 0.0
    E = np.sin(2 * np.pi * g.x_nodes / g.Lx)
    # discrete orthogonality makes sum sin^2 dx = Lx/2 exactly
    assert electrostatic_energy(E, g) == pytest.approx(np.sqrt(g.Lx / 2), rel=1e-13)
    assert electrostatic_energy(2 * E, g) == pytest.approx(
        2 * electrostatic_energy(E, g), rel=1e-14)


def test_fit_damping_rate_synthetic():
    t = np.arange(0.0, 20.0, 0.01)
    ee = np.exp(-0.1516 * t) * np.abs(np.cos(1.3 * t))
    gamma = fit_damping_rate(t, ee, window=(0.0, 20.0))
    assert gamma == pytest.approx(0.1516, abs=1e-3)


def test_fit_damping_rate_scale_invariant():
    t = np.arange(0.0, 20.0, 0.01)
    ee = np.exp(-0.2 * t) * np.abs(np.cos(1.3 * t))
    g1 = fit_damping_rate(t, ee)
    g2 = fit_damping_rate(t, 137.0 * ee)
    assert g1 == pytest.approx(g2, rel=1e-12)


def test_fit_damping_rate_unavailable():
    t = np.linspace(0.0, 2.0, 40)
    ee = np.exp(-0.1 * t) * np.abs(np.cos(1.3 * t))   # one interior peak
    assert fit_damping_rate(t, ee, window=(0.0, 2.0)) is None
    assert fit_damping_rate(t[:2], ee[:2]) is None


def test_rank_at_energy():
    assert rank_at_energy([1.0], 0.5) == 1
    assert rank_at_energy([1.0], 1.0) == 1
    assert rank_at_energy([1.0, 1.0, 1.0, 1.0], 0.5) == 2
    assert rank_at_energy([], 0.99) == 0
    assert rank_at_energy([0.0, 0.0], 0.99) == 0
    with pytest.raises(ValueError):
        rank_at_energy([1.0], 0.0)


def test_rank_at_energy_partial_sum_oracle():
    s = 2.0 ** -np.arange(12)
    energy = s * s
    total = energy.sum()
    for frac in (0.5, 0.9, 0.99, 0.9999):
        expected = int(np.argmax(np.cumsum(energy) >= frac * total)) + 1
        assert rank_at_energy(s, frac) == expected
    # monotone in the fraction
    ranks = [rank_at_energy(s, f) for f in (0.5, 0.9, 0.99, 0.9999, 1.0)]
    assert ranks == sorted(ranks)


def test_imaginary_residual_conjugate_symmetric_spectrum():
    g = build_grid(4 * np.pi, 2 * np.pi, 16, 16)
    rng = np.random.default_rng(1)
    F = rng.normal(size=(16, 16))
    spec = np.fft.fft(F, axis=1)
    spec[:, g.nyquist_bin] = 0.0
    W = np.fft.ifft(spec, axis=1)
    assert imaginary_residual(W, g) <= 1e-12


def test_imaginary_residual_negative_control():
    # the signed plain-sum integral projects onto the zero mode, so corruption
    # must reach the DC bin to register; a complex Nyquist bin (the bug the
    # truncation removes) alternates in sign and shows up pointwise instead
    g = build_grid(4 * np.pi, 2 * np.pi, 16, 16)
    rng = np.random.default_rng(2)
    spec = np.fft.fft(rng.normal(size=(16, 16)), axis=1)
    spec[:, 0] += 0.1j                            # complex zero mode
    W = np.fft.ifft(spec, axis=1)
    assert imaginary_residual(W, g) > 1e-3

    spec = np.fft.fft(rng.normal(size=(16, 16)), axis=1)
    spec[:, g.nyquist_bin] = 1.0j                 # complex Nyquist, no truncation
    W = np.fft.ifft(spec, axis=1)
    assert np.abs(W.imag).max() > 1e-3
    assert imaginary_residual(W, g) < 1e-12       # invisible to the signed sum


def test_imaginary_residual_factors_matches_dense():
    g = build_grid(4 * np.pi, 2 * np.pi, 24, 16)
    rng = np.random.default_rng(3)
    U = rng.normal(size=(24, 3)) + 1j * rng.normal(size=(24, 3))
    W = rng.normal(size=(16, 3)) + 1j * rng.normal(size=(16, 3))
    s = np.array([2.0, 1.0, 0.3])
    dense = (U * s) @ W.T
    assert imaginary_residual_factors(U, s, W, g) == pytest.approx(
        imaginary_residual(dense, g), rel=1e-12)
    assert imaginary_residual_factors(U[:, :0], s[:0], W[:, :0], g) == 0.0
