"""Grid algebra, norms, spectral calculus, and checkpoint round trips."""

import math

import numpy as np
import pytest

from mzk.errors import GridMismatchError, InvalidFieldError
from mzk.fields import (ComplexField2D, Grid2D, RealField2D, SystemState,
                        VectorField2D, boundary_mass_fraction, dealias,
                        divergence, gradient, gradient_norm_sq, l2_norm_sq,
                        l4_norm_4, laplacian, read_checkpoint,
                        smooth_random_field, spectral_derivative,
                        state_from_arrays, vector_l2_norm_sq, write_checkpoint)


def test_grid_geometry():
    g = Grid2D(nx=64, ny=32, L=8.0)
    assert g.shape == (64, 32)
    assert g.dx == 8.0 / 64
    assert g.dy == 8.0 / 32
    assert g.cell_area == g.dx * g.dy
    assert g.xs.shape == (64, 1) and g.ys.shape == (1, 32)
    assert g.k_sq.shape == (64, 32)
    assert g.k_sq[0, 0] == 0.0


@pytest.mark.parametrize("nx", [0, 1, 3, 48, -64])
def test_grid_rejects_non_power_of_two(nx):
    with pytest.raises(InvalidFieldError):
        Grid2D(nx=nx, ny=64, L=8.0)


@pytest.mark.parametrize("L", [0.0, -1.0, np.inf, np.nan])
def test_grid_rejects_bad_box(L):
    with pytest.raises(InvalidFieldError):
        Grid2D(nx=64, ny=64, L=L)


def test_field_values_are_frozen_copies():
    g = Grid2D(nx=16, ny=16, L=2.0)
    src = np.ones(g.shape, dtype=complex)
    f = ComplexField2D(g, src)
    src[0, 0] = 5.0
    assert f.values[0, 0] == 1.0
    with pytest.raises(ValueError):
        f.values[0, 0] = 3.0


def test_field_rejects_nonfinite_and_wrong_shape():
    g = Grid2D(nx=16, ny=16, L=2.0)
    bad = np.ones(g.shape)
    bad[3, 3] = np.nan
    with pytest.raises(InvalidFieldError):
        RealField2D(g, bad)
    with pytest.raises(InvalidFieldError):
        RealField2D(g, np.ones((8, 8)))


def test_state_requires_single_grid():
    g1 = Grid2D(nx=16, ny=16, L=2.0)
    g2 = Grid2D(nx=16, ny=16, L=3.0)
    z = np.zeros(g1.shape)
    with pytest.raises(GridMismatchError):
        SystemState(E1=ComplexField2D(g1, z), E2=ComplexField2D(g2, z),
                    n=RealField2D(g1, z), v=VectorField2D(g1, z, z))


def test_gaussian_l2_and_l4_match_closed_form():
    # int exp(-r^2/s^2) = pi s^2 and int exp(-2 r^2/s^2) = pi s^2/2
    g = Grid2D(nx=128, ny=128, L=24.0)
    s = 1.7
    r_sq = (g.xs - 12.0) ** 2 + (g.ys - 12.0) ** 2
    f = RealField2D(g, np.exp(-r_sq / (2.0 * s ** 2)))
    assert l2_norm_sq(f) == pytest.approx(math.pi * s ** 2, rel=1e-12)
    assert l4_norm_4(f) == pytest.approx(math.pi * s ** 2 / 2.0, rel=1e-12)


def test_gradient_norm_parseval_consistency():
    g = Grid2D(nx=64, ny=64, L=8.0)
    rng = np.random.default_rng(3)
    f = smooth_random_field(g, rng, complex_valued=True)
    gx = spectral_derivative(f, axis=0)
    gy = spectral_derivative(f, axis=1)
    direct = l2_norm_sq(gx) + l2_norm_sq(gy)
    assert gradient_norm_sq(f) == pytest.approx(direct, rel=1e-12)


def test_spectral_derivative_of_single_mode():
    g = Grid2D(nx=64, ny=64, L=2.0 * np.pi)
    f = RealField2D(g, np.sin(3.0 * g.xs + 0.0 * g.ys))
    d = spectral_derivative(f, axis=0)
    assert np.abs(d.values - 3.0 * np.cos(3.0 * g.xs + 0.0 * g.ys)).max() < 1e-12
    d2 = spectral_derivative(f, axis=0, order=2)
    assert np.abs(d2.values + 9.0 * f.values).max() < 1e-11


def test_laplacian_of_plane_wave():
    g = Grid2D(nx=32, ny=32, L=4.0)
    k = (2.0 * np.pi / g.L) * np.array([2.0, -3.0])
    f = ComplexField2D(g, np.exp(1j * (k[0] * g.xs + k[1] * g.ys)))
    lap = laplacian(f)
    assert np.abs(lap.values + (k @ k) * f.values).max() < 1e-11


def test_gradient_divergence_adjoint_chain():
    # div(grad f) equals the spectral Laplacian
    g = Grid2D(nx=64, ny=64, L=5.0)
    rng = np.random.default_rng(9)
    f = smooth_random_field(g, rng, complex_valued=False)
    vec = gradient(f)
    lap1 = divergence(vec)
    lap2 = laplacian(f)
    assert np.abs(lap1.values - lap2.values).max() < 1e-10


def test_dealias_is_projection():
    g = Grid2D(nx=64, ny=64, L=8.0)
    rng = np.random.default_rng(1)
    raw = rng.standard_normal(g.shape)
    f = RealField2D(g, raw)
    once = dealias(f)
    twice = dealias(once)
    assert np.abs(once.values - twice.values).max() < 1e-14
    kept = np.fft.fft2(once.values)
    assert np.abs(kept[~g.dealias_mask]).max() < 1e-10


def test_smooth_random_field_is_deterministic_and_scaled():
    g = Grid2D(nx=64, ny=64, L=8.0)
    f1 = smooth_random_field(g, np.random.default_rng(42), scale=0.7)
    f2 = smooth_random_field(g, np.random.default_rng(42), scale=0.7)
    assert np.array_equal(f1.values, f2.values)
    rms = np.sqrt(np.mean(np.abs(f1.values) ** 2))
    assert rms == pytest.approx(0.7, rel=1e-12)


def test_boundary_mass_fraction_localized_vs_edge():
    g = Grid2D(nx=64, ny=64, L=16.0)
    r_sq_mid = (g.xs - 8.0) ** 2 + (g.ys - 8.0) ** 2
    centered = RealField2D(g, np.exp(-r_sq_mid))
    assert boundary_mass_fraction(centered) < 1e-6
    r_sq_edge = (g.xs - 0.5) ** 2 + (g.ys - 8.0) ** 2
    shifted = RealField2D(g, np.exp(-r_sq_edge))
    assert boundary_mass_fraction(shifted) > 0.9
    zero = RealField2D(g, np.zeros(g.shape))
    assert boundary_mass_fraction(zero) == 0.0


def test_checkpoint_round_trip(tmp_path):
    g = Grid2D(nx=32, ny=16, L=6.0)
    rng = np.random.default_rng(5)
    st = state_from_arrays(
        g,
        smooth_random_field(g, rng).values,
        smooth_random_field(g, rng).values,
        smooth_random_field(g, rng, complex_valued=False).values,
        smooth_random_field(g, rng, complex_valued=False).values,
        smooth_random_field(g, rng, complex_valued=False).values,
        t=1.25)
    path = tmp_path / "state.mzk"
    write_checkpoint(path, st)
    back = read_checkpoint(path)
    assert back.grid == g
    assert back.t == st.t
    assert np.array_equal(back.E1.values, st.E1.values)
    assert np.array_equal(back.E2.values, st.E2.values)
    assert np.array_equal(back.n.values, st.n.values)
    assert np.array_equal(back.v.x, st.v.x)
    assert np.array_equal(back.v.y, st.v.y)


def test_checkpoint_write_is_reproducible(tmp_path):
    g = Grid2D(nx=16, ny=16, L=4.0)
    st = state_from_arrays(g, np.ones(g.shape, complex), np.zeros(g.shape, complex),
                           np.zeros(g.shape), np.zeros(g.shape), np.zeros(g.shape))
    p1, p2 = tmp_path / "a.mzk", tmp_path / "b.mzk"
    write_checkpoint(p1, st)
    write_checkpoint(p2, st)
    assert p1.read_bytes() == p2.read_bytes()


def test_vector_norm_additivity():
    g = Grid2D(nx=32, ny=32, L=4.0)
    rng = np.random.default_rng(8)
    vx = rng.standard_normal(g.shape)
    vy = rng.standard_normal(g.shape)
    vec = VectorField2D(g, vx, vy)
    direct = l2_norm_sq(RealField2D(g, vx)) + l2_norm_sq(RealField2D(g, vy))
    assert vector_l2_norm_sq(vec) == pytest.approx(direct, rel=1e-14)
