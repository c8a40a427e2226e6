"""
Periodic grids, complex vector fields and the spectral operators acting on them.

Fourier convention: coefficients are g_hat(xi_k) = h^n * sum_x g(x) exp(-i xi_k . x) with
xi_k = 2 pi k / L, k in [-N/2, N/2)^n, so a plane wave exp(i xi_k . x) is an exact eigenvector
of every multiplier and Parseval reads  sum_x |g|^2 h^n = L^-n sum_k |g_hat(xi_k)|^2.
"""
from __future__ import annotations
from functools import cached_property
from typing import Callable, Literal, Optional, Sequence
import dataclasses, math
import numpy as np
import scipy.fft as sfft

from .config import N_WORKERS
from .datatype import LebesgueExponent, LebesgueExponentLike
from .error import ShapeError, InvalidFieldError, SymbolError, ParameterError

@dataclasses.dataclass(frozen=True)
class Grid:
    n: int          # spatial dimension
    N: int          # points per axis
    L: float        # box edge length

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ShapeError(f"Grid dimension must be 2 or 3, got {self.n}")
        if self.N < 8 or self.N % 2 != 0:
            raise ShapeError(f"Points per axis must be even and >= 8, got {self.N}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ParameterError(f"Box length must be positive, got {self.L}")
        object.__setattr__(self, 'L', float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def dual_volume(self) -> float:
        """ Volume of one cell of the frequency lattice, (2 pi / L)^n. """
        return (2 * math.pi / self.L) ** self.n

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """ Integer wave indices k in FFT order, Nyquist stored as -N/2. """
        k = np.rint(np.fft.fftfreq(self.N) * self.N).astype(np.int64)
        k.setflags(write=False)
        return k

    @cached_property
    def index(self) -> np.ndarray:
        """ Integer lattice k, shape (n, N, ..., N). """
        k = np.stack(np.meshgrid(*([self.wavenumbers] * self.n), indexing='ij'))
        k.setflags(write=False)
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        """ Frequencies xi_k = 2 pi k / L, shape (n, N, ..., N). """
        xi = self.index * (2 * math.pi / self.L)
        xi.setflags(write=False)
        return xi

    @cached_property
    def xi_derivative(self) -> np.ndarray:
        """ Frequencies for first derivatives: the Nyquist row of each axis is zeroed. """
        xi = np.where(self.index == -self.N // 2, 0.0, self.xi)
        xi.setflags(write=False)
        return xi

    @cached_property
    def xi_sq(self) -> np.ndarray:
        s = np.sum(self.xi ** 2, axis=0)
        s.setflags(write=False)
        return s

    @cached_property
    def coordinates(self) -> np.ndarray:
        """ Sample positions x_j = j h, shape (n, N, ..., N). """
        x1 = np.arange(self.N) * self.h
        x = np.stack(np.meshgrid(*([x1] * self.n), indexing='ij'))
        x.setflags(write=False)
        return x

    def lattice_radii(self) -> np.ndarray:
        """ Sorted distinct values of |xi_k|^2 (the resonant shells). """
        return np.unique(np.round(self.xi_sq, 12))

    def __str__(self):
        return f"Grid(n={self.n}, N={self.N}, L={self.L:g}, h={self.h:g})"


def _spatial_axes(arr: np.ndarray, n: int) -> tuple[int, ...]:
    return tuple(range(arr.ndim - n, arr.ndim))

def fft(arr: np.ndarray, n: int) -> np.ndarray:
    return sfft.fftn(arr, axes=_spatial_axes(arr, n), workers=N_WORKERS)

def ifft(arr: np.ndarray, n: int) -> np.ndarray:
    return sfft.ifftn(arr, axes=_spatial_axes(arr, n), workers=N_WORKERS)


class Field:
    """
    m-component complex field sampled on a periodic grid.
    Samples are stored component-major, shape (m, N, ..., N), and are read-only.
    """
    __slots__ = ('grid', 'values')

    def __init__(self, grid: Grid, values: np.ndarray | Sequence, *, copy: bool = True):
        arr = np.array(values, dtype=np.complex128) if copy else np.asarray(values, dtype=np.complex128)
        if arr.ndim == grid.n:
            arr = arr[None]
        if arr.ndim != grid.n + 1 or arr.shape[1:] != grid.shape or arr.shape[0] < 1:
            raise ShapeError(f"Samples of shape {arr.shape} do not fit {grid}")
        if not np.all(np.isfinite(arr)):
            raise InvalidFieldError("Field samples must be finite")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr

    @classmethod
    def _wrap(cls, grid: Grid, arr: np.ndarray) -> Field:
        """ Wrap a freshly computed sample array without copying or checking. """
        obj = cls.__new__(cls)
        if arr.ndim == grid.n:
            arr = arr[None]
        arr.setflags(write=False)
        obj.grid = grid
        obj.values = arr
        return obj

    @classmethod
    def zeros(cls, grid: Grid, m: int = 1) -> Field:
        return cls._wrap(grid, np.zeros((m,) + grid.shape, dtype=np.complex128))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> Field:
        """ `fn` receives the coordinates, shape (n, N, ..., N), and returns (m, N, ..., N) or (N, ..., N). """
        return cls(grid, fn(grid.coordinates))

    @classmethod
    def from_fourier(cls, grid: Grid, coeffs: np.ndarray) -> Field:
        return cls._wrap(grid, ifft(np.asarray(coeffs, dtype=np.complex128), grid.n) / grid.cell_volume)

    @classmethod
    def plane_wave(cls, grid: Grid, k: Sequence[int], amplitude: Sequence[complex] | complex = 1.0) -> Field:
        """ amplitude * exp(i xi_k . x) for the integer wave index k. """
        phase = np.exp(1j * np.tensordot(np.asarray(k, dtype=float) * (2 * math.pi / grid.L), grid.coordinates, axes=1))
        amp = np.atleast_1d(np.asarray(amplitude, dtype=np.complex128))
        return cls._wrap(grid, amp.reshape((-1,) + (1,) * grid.n) * phase[None])

    @classmethod
    def stack(cls, fields: Sequence[Field]) -> Field:
        grid = fields[0].grid
        for f in fields:
            if f.grid != grid:
                raise ShapeError("Cannot stack fields living on different grids")
        return cls._wrap(grid, np.concatenate([f.values for f in fields], axis=0))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def fourier(self) -> np.ndarray:
        return fft(self.values, self.grid.n) * self.grid.cell_volume

    def component(self, i: int | slice) -> Field:
        sl = slice(i, i + 1) if isinstance(i, int) else i
        return Field._wrap(self.grid, self.values[sl].copy())

    def pointwise_norm(self) -> np.ndarray:
        """ Euclidean norm over the components at each sample, shape (N, ..., N). """
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=0))

    def scale(self, weight: np.ndarray) -> Field:
        """ Multiply every component by a pointwise weight of shape (N, ..., N). """
        return Field._wrap(self.grid, self.values * np.asarray(weight)[None])

    def conj(self) -> Field:
        return Field._wrap(self.grid, np.conj(self.values))

    def real(self) -> Field:
        return Field._wrap(self.grid, self.values.real.astype(np.complex128))

    def _check_compatible(self, other: Field):
        if self.grid != other.grid or self.m != other.m:
            raise ShapeError(f"Incompatible fields: m={self.m} on {self.grid} vs m={other.m} on {other.grid}")

    def __add__(self, other: Field) -> Field:
        self._check_compatible(other)
        return Field._wrap(self.grid, self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        self._check_compatible(other)
        return Field._wrap(self.grid, self.values - other.values)

    def __neg__(self) -> Field:
        return Field._wrap(self.grid, -self.values)

    def __mul__(self, c: complex) -> Field:
        if not np.isscalar(c):
            return NotImplemented
        return Field._wrap(self.grid, self.values * c)

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> Field:
        return Field._wrap(self.grid, self.values / c)

    def __repr__(self):
        return f"Field(m={self.m}, {self.grid})"


def inner(a: Field, b: Field) -> complex:
    """ Sesquilinear pairing <a, b> = sum_x a(x) . conj(b(x)) h^n. """
    a._check_compatible(b)
    return complex(np.vdot(b.values, a.values) * a.grid.cell_volume)

def bilinear(a: Field, b: Field) -> complex:
    """ Complex-bilinear pairing sum_x a(x) . b(x) h^n. """
    a._check_compatible(b)
    return complex(np.sum(a.values * b.values) * a.grid.cell_volume)

def lp_norm(f: Field, p: LebesgueExponentLike) -> float:
    """ Discrete L^p norm with cell volume h^n; |f(x)| is the Euclidean norm over components. """
    p = LebesgueExponent.of(p)
    mag = f.pointwise_norm()
    if p.is_infinite:
        return float(np.max(mag))
    pf = float(p.value)
    if pf == 2:
        return float(np.sqrt(np.sum(mag ** 2) * f.grid.cell_volume))
    scale = float(np.max(mag))
    if scale == 0:
        return 0.0
    # scaled to keep mag**p in range for large p
    return scale * float(np.sum((mag / scale) ** pf) * f.grid.cell_volume) ** (1 / pf)


SymbolFn = Callable[[np.ndarray], np.ndarray | complex]
Lattice = Literal['full', 'derivative']

def evaluate_symbol(grid: Grid, symbol: SymbolFn | np.ndarray | complex, lattice: Lattice = 'full') -> np.ndarray:
    """
    Evaluate a symbol on the frequency lattice and reject non-finite values.
    Returns either a scalar symbol (broadcastable to the grid shape) or a matrix
    symbol of shape (m_out, m_in, N, ..., N).
    """
    xi = grid.xi if lattice == 'full' else grid.xi_derivative
    s = symbol(xi) if callable(symbol) else symbol
    s = np.asarray(s, dtype=np.complex128)
    if s.ndim not in (0, grid.n, grid.n + 2):
        raise ShapeError(f"Symbol of shape {s.shape} does not fit {grid}")
    bad = ~np.isfinite(s)
    if np.any(bad):
        if s.ndim == grid.n + 2:
            bad = np.any(bad, axis=(0, 1))
        idx = tuple(int(i[0]) for i in np.nonzero(np.broadcast_to(bad, grid.shape)))
        xi_k = tuple(float(xi[(j,) + idx]) for j in range(grid.n))
        raise SymbolError(f"Symbol is not finite at xi = {xi_k}", xi=xi_k)
    return s

def apply_symbol_hat(f_hat: np.ndarray, s: np.ndarray, n: int) -> np.ndarray:
    """ Pointwise (matrix) product of an evaluated symbol with Fourier data of shape (m, N, ..., N). """
    if s.ndim == n + 2:
        if s.shape[1] != f_hat.shape[0]:
            raise ShapeError(f"Matrix symbol {s.shape[:2]} cannot act on {f_hat.shape[0]} components")
        return np.einsum('ij...,j...->i...', s, f_hat)
    return s[None] * f_hat if s.ndim == n else s * f_hat

def apply_fourier_multiplier(f: Field, symbol: SymbolFn | np.ndarray | complex, lattice: Lattice = 'full') -> Field:
    s = evaluate_symbol(f.grid, symbol, lattice)
    n = f.grid.n
    return Field._wrap(f.grid, ifft(apply_symbol_hat(fft(f.values, n), s, n), n))


def leray_project(f: Field) -> Field:
    """
    Projection onto divergence-free fields, f_hat - xi (xi . f_hat) / |xi|^2.
    Modes with a Nyquist index on any axis are removed, so xi . (Pi f)_hat = 0 holds on the full
    and on the derivative lattice. The zero mode passes through. Real fields stay real.
    """
    grid = f.grid
    if f.m != grid.n:
        raise ShapeError(f"Leray projection needs m = n = {grid.n}, got m = {f.m}")
    k = grid.xi
    k2 = grid.xi_sq
    nyquist = np.any(grid.index == -grid.N // 2, axis=0)
    fh = fft(f.values, grid.n)
    coef = np.einsum('j...,j...->...', k, fh) / np.where(k2 > 0, k2, 1.0)
    fh = fh - k * np.where(k2 > 0, coef, 0.0)[None]
    fh = np.where(nyquist[None], 0.0, fh)
    return Field._wrap(grid, ifft(fh, grid.n))

def spectral_gradient(f: Field, order: Literal[1, 2] = 1) -> Field:
    """
    All first partials (components ordered (i, j) -> d_j f_i) via i xi_j on the derivative
    lattice, or all second partials ((i, j, k) -> d_j d_k f_i) via -xi_j xi_k on the full lattice.
    """
    grid, n = f.grid, f.grid.n
    fh = fft(f.values, n)
    if order == 1:
        k = grid.xi_derivative
        out = fh[:, None] * (1j * k)[None]
    elif order == 2:
        xi = grid.xi
        out = fh[:, None, None] * (-xi[:, None] * xi[None, :])[None]
    else:
        raise ParameterError(f"Derivative order must be 1 or 2, got {order}")
    out = out.reshape((-1,) + grid.shape)
    return Field._wrap(grid, ifft(out, n))

def laplacian(f: Field) -> Field:
    n = f.grid.n
    return Field._wrap(f.grid, ifft(-f.grid.xi_sq[None] * fft(f.values, n), n))

def divergence(f: Field) -> Field:
    grid = f.grid
    if f.m != grid.n:
        raise ShapeError(f"Divergence needs m = n = {grid.n}, got m = {f.m}")
    fh = fft(f.values, grid.n)
    return Field._wrap(grid, ifft(np.sum(1j * grid.xi_derivative * fh, axis=0), grid.n))

def cross_hat(k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """ Pointwise cross product of two (3, ...) arrays. """
    return np.stack([
        k[1] * v[2] - k[2] * v[1],
        k[2] * v[0] - k[0] * v[2],
        k[0] * v[1] - k[1] * v[0],
    ])

def curl(f: Field) -> Field:
    grid = f.grid
    if grid.n != 3 or f.m != 3:
        raise ShapeError(f"Curl needs a 3-component field in 3D, got m = {f.m}, n = {grid.n}")
    fh = fft(f.values, 3)
    return Field._wrap(grid, ifft(cross_hat(1j * grid.xi_derivative, fh), 3))

def gaussian_mollify(f: Field, sigma: float) -> Field:
    """ Spectral mollification with symbol exp(-|xi|^2 sigma^2). """
    if sigma < 0:
        raise ParameterError(f"Mollification width must be >= 0, got {sigma}")
    if sigma == 0:
        return Field._wrap(f.grid, f.values.copy())
    return apply_fourier_multiplier(f, np.exp(-f.grid.xi_sq * sigma ** 2))


def periodized_gaussian(grid: Grid, center: Sequence[float], width: float, derivatives: int = 0) -> np.ndarray | tuple[np.ndarray, ...]:
    """
    Real samples of sum over images of exp(-|x - c - L j|^2 / width^2).
    With derivatives = 1 or 2, also returns the analytic gradient (n, ...) and Hessian (n, n, ...).
    """
    n, L = grid.n, grid.L
    x = grid.coordinates
    c = np.asarray(center, dtype=float).reshape((n,) + (1,) * n)
    n_img = max(1, int(math.ceil(8 * width / L)))
    shifts = np.arange(-n_img, n_img + 1)
    g = np.zeros(grid.shape)
    dg = np.zeros((n,) + grid.shape)
    d2g = np.zeros((n, n) + grid.shape)
    for offset in np.stack(np.meshgrid(*([shifts] * n), indexing='ij')).reshape(n, -1).T:
        d = x - c - L * offset.reshape((n,) + (1,) * n)
        e = np.exp(-np.sum(d ** 2, axis=0) / width ** 2)
        g += e
        if derivatives >= 1:
            dg += -2 * d / width ** 2 * e
        if derivatives >= 2:
            d2g += (4 * d[:, None] * d[None, :] / width ** 4 - 2 * np.eye(n).reshape((n, n) + (1,) * n) / width ** 2) * e
    if derivatives == 0:
        return g
    if derivatives == 1:
        return g, dg
    return g, dg, d2g

def random_band_limited(grid: Grid, m: int, bandwidth: int, rng: np.random.Generator, real: bool = False) -> Field:
    """
    Random field whose Fourier coefficients vanish outside |k_j| <= bandwidth, normalized
    to unit L^2 norm. bandwidth must stay below N/2 so no Nyquist content appears.
    """
    if not 0 <= bandwidth < grid.N // 2:
        raise ParameterError(f"Bandwidth must lie in [0, N/2), got {bandwidth}")
    mask = np.all(np.abs(grid.index) <= bandwidth, axis=0)
    coeffs = (rng.standard_normal((m,) + grid.shape) + 1j * rng.standard_normal((m,) + grid.shape)) * mask[None]
    vals = ifft(coeffs, grid.n)
    if real:
        vals = vals.real.astype(np.complex128)
    f = Field._wrap(grid, vals)
    norm = lp_norm(f, 2)
    return f / norm if norm > 0 else f

def band_limit_hat(f_hat: np.ndarray, grid: Grid, bandwidth: int) -> np.ndarray:
    mask = np.all(np.abs(grid.index) <= bandwidth, axis=0)
    return f_hat * mask[None]

def band_limit(f: Field, bandwidth: int) -> Field:
    """ Zero every Fourier coefficient outside |k_j| <= bandwidth. """
    n = f.grid.n
    return Field._wrap(f.grid, ifft(band_limit_hat(fft(f.values, n), f.grid, bandwidth), n))
