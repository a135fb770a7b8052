"""Periodic grids, immutable field containers, spectral calculus, checkpoint IO.

Fields live on a uniform grid over the doubly periodic box [0, L) x [0, L)
with power-of-two sampling in each direction.  Values are frozen at
construction; every operation returns a new object.  Norms are quadrature
sums with weight dx*dy, which is exact for trigonometric polynomials, and
derivatives are computed through the FFT.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError, GridMismatchError, InvalidFieldError

TWO_THIRDS = 2.0 / 3.0

_MAGIC = b"MZKV1"
_HEADER = struct.Struct("<IIdd")  # nx, ny, L, t


def _is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 2 and (n & (n - 1)) == 0


# ---------------------------------------------------------------------------
# grid

@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid; dealias_fraction sets the retained spectral band."""

    nx: int
    ny: int
    L: float
    dealias_fraction: float = TWO_THIRDS

    def __post_init__(self):
        if not (_is_power_of_two(self.nx) and _is_power_of_two(self.ny)):
            raise InvalidFieldError(
                f"grid sizes must be powers of two >= 2, got {self.nx} x {self.ny}")
        if not (isinstance(self.L, (int, float)) and math.isfinite(self.L) and self.L > 0):
            raise InvalidFieldError(f"box size must be positive and finite, got {self.L!r}")
        if not (0.0 < self.dealias_fraction <= 1.0):
            raise InvalidFieldError(
                f"dealias fraction must lie in (0, 1], got {self.dealias_fraction!r}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return self.L / self.nx

    @property
    def dy(self) -> float:
        return self.L / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def spectral_weight(self) -> float:
        """Parseval weight: cell_area/(nx*ny) turns sum |fhat|^2 into the L2 integral."""
        return self.cell_area / (self.nx * self.ny)

    @cached_property
    def xs(self):
        return (np.arange(self.nx) * self.dx).reshape(-1, 1)

    @cached_property
    def ys(self):
        return (np.arange(self.ny) * self.dy).reshape(1, -1)

    @cached_property
    def kx(self):
        """Angular wavenumbers along axis 0, shaped (nx, 1) for broadcasting."""
        return (2.0 * np.pi / self.L) * np.fft.fftfreq(self.nx, 1.0 / self.nx).reshape(-1, 1)

    @cached_property
    def ky(self):
        return (2.0 * np.pi / self.L) * np.fft.fftfreq(self.ny, 1.0 / self.ny).reshape(1, -1)

    @cached_property
    def k_sq(self):
        return self.kx ** 2 + self.ky ** 2

    @cached_property
    def ikx(self):
        """First-derivative multiplier d/dx; the unpaired Nyquist mode is zeroed."""
        ik = 1j * self.kx
        ik[self.nx // 2, 0] = 0.0
        ik.setflags(write=False)
        return ik

    @cached_property
    def iky(self):
        ik = 1j * self.ky
        ik[0, self.ny // 2] = 0.0
        ik.setflags(write=False)
        return ik

    @cached_property
    def dealias_mask(self):
        """Boolean keep-mask: |k| <= dealias_fraction * k_nyquist per axis."""
        mx = np.abs(np.fft.fftfreq(self.nx, 1.0 / self.nx)) <= self.dealias_fraction * (self.nx // 2)
        my = np.abs(np.fft.fftfreq(self.ny, 1.0 / self.ny)) <= self.dealias_fraction * (self.ny // 2)
        mask = mx.reshape(-1, 1) & my.reshape(1, -1)
        mask.setflags(write=False)
        return mask

    @cached_property
    def boundary_zone(self):
        """Cells within L/4 of the box edge (complement of the central half-box)."""
        ex = np.minimum(self.xs, self.L - self.xs) < 0.25 * self.L
        ey = np.minimum(self.ys, self.L - self.ys) < 0.25 * self.L
        zone = ex | ey
        zone.setflags(write=False)
        return zone


# ---------------------------------------------------------------------------
# field containers

def _frozen_array(values, dtype, shape):
    try:
        arr = np.array(values, dtype=dtype, order="C", copy=True)
    except (TypeError, ValueError) as exc:
        raise InvalidFieldError(f"cannot build {np.dtype(dtype).name} samples: {exc}") from exc
    if arr.shape != shape:
        raise InvalidFieldError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidFieldError("non-finite samples")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ComplexField2D:
    """Immutable complex samples on a Grid2D, row-major, values[i, j] = f(x_i, y_j)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values",
            _frozen_array(self.values, np.complex128, self.grid.shape))


@dataclass(frozen=True, eq=False)
class RealField2D:
    """Immutable real samples on a Grid2D."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values",
            _frozen_array(self.values, np.float64, self.grid.shape))


@dataclass(frozen=True, eq=False)
class VectorField2D:
    """Immutable real vector field; components x and y share one grid."""

    grid: Grid2D
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen_array(self.x, np.float64, self.grid.shape))
        object.__setattr__(self, "y", _frozen_array(self.y, np.float64, self.grid.shape))


@dataclass(frozen=True, eq=False)
class SystemState:
    """Complete field content (E1, E2, n, v) at one instant."""

    E1: ComplexField2D
    E2: ComplexField2D
    n: RealField2D
    v: VectorField2D
    t: float = 0.0

    def __post_init__(self):
        g = self.E1.grid
        if not (self.E2.grid == g and self.n.grid == g and self.v.grid == g):
            raise GridMismatchError("state components live on different grids")
        if not (isinstance(self.t, (int, float)) and math.isfinite(self.t) and self.t >= 0.0):
            raise InvalidFieldError(f"time must be finite and nonnegative, got {self.t!r}")
        object.__setattr__(self, "t", float(self.t))

    @property
    def grid(self) -> Grid2D:
        return self.E1.grid


def state_from_arrays(grid, e1, e2, n, vx, vy, t=0.0) -> SystemState:
    """Bundle raw arrays into a SystemState (values are copied and frozen)."""
    return SystemState(
        E1=ComplexField2D(grid, e1),
        E2=ComplexField2D(grid, e2),
        n=RealField2D(grid, n),
        v=VectorField2D(grid, vx, vy),
        t=t)


# ---------------------------------------------------------------------------
# norms and quadrature

def l2_norm_sq(field) -> float:
    """Integral of |f|^2 over the box (quadrature sum, weight dx*dy)."""
    v = field.values
    s = np.sum(v.real ** 2 + v.imag ** 2) if np.iscomplexobj(v) else np.dot(v.ravel(), v.ravel())
    return float(s) * field.grid.cell_area


def l4_norm_4(field) -> float:
    """Integral of |f|^4 over the box."""
    v = field.values
    d = (v.real ** 2 + v.imag ** 2) if np.iscomplexobj(v) else v * v
    return float(np.sum(d * d)) * field.grid.cell_area


def vector_l2_norm_sq(vec: VectorField2D) -> float:
    """Integral of |v|^2 = vx^2 + vy^2 over the box."""
    s = np.dot(vec.x.ravel(), vec.x.ravel()) + np.dot(vec.y.ravel(), vec.y.ravel())
    return float(s) * vec.grid.cell_area


def gradient_norm_sq(field) -> float:
    """Integral of |grad f|^2, evaluated spectrally via Parseval."""
    g = field.grid
    fh = np.fft.fft2(field.values)
    return float(np.sum(g.k_sq * (fh.real ** 2 + fh.imag ** 2))) * g.spectral_weight


def boundary_mass_fraction(field) -> float:
    """Fraction of the |f|^2 mass within L/4 of the box edge; 0 for a zero field."""
    v = field.values
    dens = v.real ** 2 + v.imag ** 2 if np.iscomplexobj(v) else v * v
    total = float(dens.sum())
    if total == 0.0:
        return 0.0
    return float(dens[field.grid.boundary_zone].sum()) / total


# ---------------------------------------------------------------------------
# spectral calculus

def _wrap_like(field, values):
    if isinstance(field, RealField2D):
        return RealField2D(field.grid, values.real)
    return ComplexField2D(field.grid, values)


def spectral_derivative(field, axis: int, order: int = 1):
    """Partial derivative of the trigonometric interpolant.

    Odd orders drop the unpaired Nyquist mode so real input maps to real
    output; even orders keep it, so applying this twice with order=1 agrees
    with order=2 only on dealiased spectra (where the Nyquist band is empty).
    """
    if axis not in (0, 1):
        raise DomainError(f"axis must be 0 or 1, got {axis}")
    if not isinstance(order, int) or order < 1:
        raise DomainError(f"order must be a positive integer, got {order!r}")
    g = field.grid
    if order % 2:
        mult = (g.ikx if axis == 0 else g.iky) ** order
    else:
        k = g.kx if axis == 0 else g.ky
        mult = (-1.0) ** (order // 2) * k ** order
    out = np.fft.ifft2(mult * np.fft.fft2(field.values))
    return _wrap_like(field, out)


def laplacian(field):
    g = field.grid
    out = np.fft.ifft2(-g.k_sq * np.fft.fft2(field.values))
    return _wrap_like(field, out)


def gradient(field: RealField2D) -> VectorField2D:
    g = field.grid
    fh = np.fft.fft2(field.values)
    gx = np.fft.ifft2(g.ikx * fh).real
    gy = np.fft.ifft2(g.iky * fh).real
    return VectorField2D(g, gx, gy)


def divergence(vec: VectorField2D) -> RealField2D:
    g = vec.grid
    out = np.fft.ifft2(g.ikx * np.fft.fft2(vec.x) + g.iky * np.fft.fft2(vec.y)).real
    return RealField2D(g, out)


def dealias(field):
    """Project onto the retained spectral band (the grid's dealias mask)."""
    g = field.grid
    if isinstance(field, VectorField2D):
        fx = np.fft.ifft2(np.where(g.dealias_mask, np.fft.fft2(field.x), 0.0)).real
        fy = np.fft.ifft2(np.where(g.dealias_mask, np.fft.fft2(field.y), 0.0)).real
        return VectorField2D(g, fx, fy)
    out = np.fft.ifft2(np.where(g.dealias_mask, np.fft.fft2(field.values), 0.0))
    return _wrap_like(field, out)


def smooth_random_field(grid, rng, complex_valued=True, scale=1.0):
    """Band-limited random field with a Gaussian spectral envelope, unit rms * scale.

    Deterministic for a given numpy Generator; used for property checks and
    the inequality audit subcommand.
    """
    g = grid
    k_cut = g.dealias_fraction * math.pi * min(g.nx, g.ny) / g.L
    env = np.exp(-0.5 * g.k_sq / (k_cut / 4.0) ** 2) * g.dealias_mask
    coef = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    raw = np.fft.ifft2(env * coef)
    raw = raw if complex_valued else raw.real
    rms = math.sqrt(float(np.mean(np.abs(raw) ** 2)))
    if rms == 0.0:  # cannot happen for a continuous draw; guards degenerate rng stubs
        raise DomainError("random draw produced an identically zero field")
    vals = raw * (scale / rms)
    if complex_valued:
        return ComplexField2D(g, vals)
    return RealField2D(g, vals)


# ---------------------------------------------------------------------------
# checkpoint format: magic "MZKV1", LE u32 nx, u32 ny, f64 L, f64 t,
# then row-major E1 (interleaved re/im f64), E2, n, vx, vy

def write_checkpoint(path, state: SystemState) -> None:
    g = state.grid
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_HEADER.pack(g.nx, g.ny, g.L, state.t))
        fh.write(np.ascontiguousarray(state.E1.values, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(state.E2.values, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(state.n.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.v.x, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.v.y, dtype="<f8").tobytes())


def read_checkpoint(path, dealias_fraction=TWO_THIRDS) -> SystemState:
    data = Path(path).read_bytes()
    if data[: len(_MAGIC)] != _MAGIC:
        raise InvalidFieldError(f"{path}: bad magic, not a checkpoint file")
    off = len(_MAGIC)
    try:
        nx, ny, L, t = _HEADER.unpack_from(data, off)
    except struct.error as exc:
        raise InvalidFieldError(f"{path}: truncated header") from exc
    off += _HEADER.size
    npts = nx * ny
    expected = off + npts * (16 + 16 + 8 + 8 + 8)
    if len(data) != expected:
        raise InvalidFieldError(
            f"{path}: expected {expected} bytes for {nx} x {ny}, found {len(data)}")
    grid = Grid2D(nx, ny, L, dealias_fraction)

    def block(count, dtype):
        nonlocal off
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=off).reshape(nx, ny)
        off += count * np.dtype(dtype).itemsize
        return arr

    e1 = block(npts, "<c16")
    e2 = block(npts, "<c16")
    n = block(npts, "<f8")
    vx = block(npts, "<f8")
    vy = block(npts, "<f8")
    return state_from_arrays(grid, e1, e2, n, vx, vy, t=t)
