"""
Free resolvent R_0(zeta) = (Delta + zeta)^-1, symbol (zeta - |xi|^2)^-1.

The splitting of R_0(zeta) d_j into a low-frequency part and a Bessel-potential factored
high-frequency part is written with 1/(|xi|^2 - zeta) in the literature; here the same
operator carries the global sign convention (zeta - |xi|^2)^-1.
"""
from __future__ import annotations
from typing import Callable, Literal, Optional, Sequence
import dataclasses, itertools, math
import numpy as np

from .config import RESONANCE_GAP, MIKHLIN_STEP, MIKHLIN_MIN_RADIUS
from .datatype import SpectralParameterLike, LimitTag, LebesgueExponentLike, as_spectral_parameter
from .grid_field import Grid, Field, fft, ifft, apply_fourier_multiplier, lp_norm, periodized_gaussian, random_band_limited
from .exponents import check_gutierrez
from .bounded_pool import ordered_map
from .error import ResonanceError, SingularityError, SymbolError, ParameterError, AdmissibilityError
from .log import get_logger

logger = get_logger('resolvent')

def check_resonance(grid: Grid, zeta: complex) -> float:
    """ Distance from zeta to the lattice shells |xi_k|^2; raises below the resonance gap. """
    gap = np.abs(zeta - grid.xi_sq)
    i = int(np.argmin(gap))
    if gap.flat[i] <= RESONANCE_GAP:
        xi_sq = float(grid.xi_sq.flat[i])
        raise ResonanceError(f"zeta = {zeta} is resonant with the lattice shell |xi|^2 = {xi_sq:g}", xi_sq=xi_sq)
    return float(gap.flat[i])

def resolvent_symbol(grid: Grid, zeta: complex) -> np.ndarray:
    check_resonance(grid, zeta)
    return 1.0 / (zeta - grid.xi_sq)

def apply_free_resolvent(f: Field, z: SpectralParameterLike, delta: Optional[float] = None) -> Field:
    zeta = as_spectral_parameter(z).effective(delta)
    return apply_fourier_multiplier(f, resolvent_symbol(f.grid, zeta))

def principal_root(zeta: complex) -> complex:
    """ sqrt(zeta) with nonnegative imaginary part. """
    mu = complex(np.sqrt(complex(zeta)))
    return -mu if mu.imag < 0 else mu

def greens_kernel(z_point: Sequence[float] | np.ndarray, zeta: SpectralParameterLike, n: int = 3) -> complex | np.ndarray:
    """
    Kernel G of R_0(zeta) in R^3, G(z) = -exp(i mu |z|) / (4 pi |z|), with Im mu > 0 for
    interior zeta and mu = ±sqrt(lambda) on the limits lambda ± i0. The last axis of
    `z_point` holds the coordinates, so arrays of points are evaluated at once.
    """
    if n != 3:
        raise ParameterError(f"Green's kernel is only available for n = 3, got n = {n}")
    z = as_spectral_parameter(zeta)
    if z.limit_tag == LimitTag.INTERIOR:
        mu = principal_root(z.zeta)
    else:
        mu = math.sqrt(z.zeta.real) * (1 if z.limit_tag == LimitTag.PLUS_I0 else -1)
    r = np.linalg.norm(np.asarray(z_point, dtype=float), axis=-1)
    if np.any(r == 0):
        raise SingularityError("Green's kernel is singular at z = 0")
    g = -np.exp(1j * mu * r) / (4 * math.pi * r)
    return complex(g) if np.ndim(g) == 0 else g

def kernel_difference_bound(mu: complex, mu_tilde: complex, z_norm: float, n: int) -> float:
    """
    Regime bound (constant 1) for |G_zeta(z) - G_zeta~(z)| with zeta = mu^2:
        |mu - mu~| |z|^(3-n)                       for |z| <= 1/|mu|
        |mu - mu~| |mu|^((n-3)/2) |z|^((3-n)/2)     for 1/|mu| <= |z| <= 1/|mu - mu~|
        |mu|^((n-3)/2) |z|^((1-n)/2)              for |z| >= 1/|mu - mu~|
    Valid for Re mu, Im mu > 0.
    """
    a = abs(mu)
    if a == 0:
        raise ParameterError("kernel_difference_bound needs mu != 0")
    if z_norm <= 0:
        raise ParameterError(f"|z| must be positive, got {z_norm}")
    d = abs(mu - mu_tilde)
    if z_norm <= 1 / a:
        return d * z_norm ** (3 - n)
    if d == 0 or z_norm <= 1 / d:
        return d * a ** ((n - 3) / 2) * z_norm ** ((3 - n) / 2)
    return a ** ((n - 3) / 2) * z_norm ** ((1 - n) / 2)


@dataclasses.dataclass(frozen=True)
class CutoffProfile:
    """ Radial cutoff: 1 for r <= inner, 0 for r >= outer, quintic C^2 transition in between. """
    inner: float = 2.0
    outer: float = 3.0

    def _t(self, r):
        return np.clip((np.asarray(r, dtype=float) - self.inner) / (self.outer - self.inner), 0.0, 1.0)

    def __call__(self, r):
        t = self._t(r)
        return 1.0 - t ** 3 * (10 - 15 * t + 6 * t ** 2)

    def derivatives(self, r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """ (chi, chi', chi'') in r. """
        t = self._t(r)
        w = self.outer - self.inner
        d1 = -30 * t ** 2 * (1 - t) ** 2 / w
        d2 = -60 * t * (1 - t) * (1 - 2 * t) / w ** 2
        return self(r), d1, d2

CUTOFF = CutoffProfile()

def bessel_potential(f: Field, scale: float = 1.0) -> Field:
    """ Bessel potential of order one, symbol (1 + |xi / scale|^2)^(-1/2). """
    return apply_fourier_multiplier(f, (1.0 + f.grid.xi_sq / scale ** 2) ** -0.5)

def split_symbol(zeta: complex, j: int, numerator: Optional[np.ndarray] = None) -> Callable[[np.ndarray], np.ndarray]:
    """
    Rescaled high-frequency symbol m(eta) = (1 - chi(eta)) eta_j sqrt(1 + |eta|^2) / (|eta|^2 - zeta/|zeta|).
    `numerator` optionally replaces eta_j (the derivative lattice zeroes Nyquist rows).
    """
    if zeta == 0:
        raise ParameterError("The split symbol needs zeta != 0")
    unit = zeta / abs(zeta)

    def m(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        r2 = np.sum(eta ** 2, axis=0)
        outside = 1.0 - CUTOFF(np.sqrt(r2))
        num = eta[j] if numerator is None else numerator
        denom = np.where(outside > 0, r2 - unit, 1.0)
        return np.where(outside > 0, outside * num * np.sqrt(1.0 + r2) / denom, 0.0)
    return m

def apply_free_resolvent_derivative(
    f: Field, z: SpectralParameterLike, j: int,
    mode: Literal['direct', 'split'] = 'direct', delta: Optional[float] = None
    ) -> Field:
    """
    R_0(zeta) d_j f. The split mode separates the frequencies |xi| <= 3 |zeta|^(1/2) and
    routes the rest through the Bessel potential at scale s = |zeta|^(1/2):
        R_0 d_j = chi_zeta R_0 d_j  +  (-i / s) m(xi / s) J_s,
    which agrees with the direct symbol mode by mode.
    """
    grid = f.grid
    if not 0 <= j < grid.n:
        raise ParameterError(f"Axis {j} out of range for n = {grid.n}")
    zeta = as_spectral_parameter(z).effective(delta)
    r0 = resolvent_symbol(grid, zeta)
    k_j = grid.xi_derivative[j]
    if mode == 'direct':
        return apply_fourier_multiplier(f, 1j * k_j * r0)
    if mode != 'split':
        raise ParameterError(f"Unknown mode {mode!r}, expected 'direct' or 'split'")
    if zeta == 0:
        raise ParameterError("Split mode needs |zeta| > 0")
    s = math.sqrt(abs(zeta))
    chi = CUTOFF(np.sqrt(grid.xi_sq) / s)
    low = apply_fourier_multiplier(f, chi * 1j * k_j * r0)
    m = split_symbol(zeta, j, numerator=k_j / s)
    high = apply_fourier_multiplier(bessel_potential(f, scale=s), m(grid.xi / s)) * (-1j / s)
    return low + high


_FD_STENCILS: dict[int, tuple[tuple[int, float], ...]] = {
    0: ((0, 1.0),),
    1: ((1, 0.5), (-1, -0.5)),
    2: ((1, 1.0), (0, -2.0), (-1, 1.0)),
    3: ((2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)),
}

def mikhlin_bound_estimate(
    symbol: Callable[[np.ndarray], np.ndarray], xi_samples: np.ndarray, order: Optional[int] = None
    ) -> float:
    """
    A = max over samples and |alpha| <= order of |xi|^|alpha| |d^alpha s(xi)|, derivatives by
    central differences with step MIKHLIN_STEP * |xi|. `xi_samples` has shape (S, n);
    samples closer than MIKHLIN_MIN_RADIUS to the origin are skipped.
    """
    pts = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    n = pts.shape[1]
    k = n // 2 + 1 if order is None else order
    if k not in range(len(_FD_STENCILS)):
        raise ParameterError(f"Derivative order must be <= {len(_FD_STENCILS) - 1}, got {k}")
    radius = np.linalg.norm(pts, axis=1)
    keep = radius >= MIKHLIN_MIN_RADIUS
    if not np.all(keep):
        logger.debug(f"Mikhlin estimate: skipped {int(np.sum(~keep))} samples near the origin")
    pts, radius = pts[keep].T, radius[keep]         # (n, S), (S,)
    if radius.size == 0:
        raise ParameterError("No admissible samples for the Mikhlin estimate")
    step = MIKHLIN_STEP * radius

    best = 0.0
    for alpha in itertools.product(range(k + 1), repeat=n):
        size = sum(alpha)
        if size > k:
            continue
        deriv = np.zeros(radius.shape, dtype=np.complex128)
        for terms in itertools.product(*(_FD_STENCILS[a] for a in alpha)):
            offset = np.array([t[0] for t in terms], dtype=float).reshape(n, 1)
            weight = math.prod(t[1] for t in terms)
            deriv += weight * np.asarray(symbol(pts + offset * step[None]), dtype=np.complex128)
        deriv /= step ** size
        if not np.all(np.isfinite(deriv)):
            bad = int(np.argmax(~np.isfinite(deriv)))
            raise SymbolError(f"Non-finite derivative of order {alpha}", xi=tuple(pts[:, bad]))
        best = max(best, float(np.max(radius ** size * np.abs(deriv))))
    return best


def _probe_fields(grid: Grid, zeta: complex, trials: int, rng: np.random.Generator) -> list[Field]:
    """ Gaussian bumps at the natural scale |zeta|^(-1/2), a Herglotz-type shell packet, then random fields. """
    center = [grid.L / 2] * grid.n
    base = max(abs(zeta) ** -0.5, 1.5 * grid.h)
    fields: list[Field] = []
    for w in (base, 2 * base, 4 * base):
        if len(fields) >= trials or w > grid.L / 6:
            break
        fields.append(Field._wrap(grid, periodized_gaussian(grid, center, w).astype(np.complex128)))
    if len(fields) < trials:
        rho = math.sqrt(abs(zeta.real)) if zeta.real > 0 else 0.0
        width = 4 * math.pi / grid.L
        xi_abs = np.sqrt(grid.xi_sq)
        shifts = np.exp(-1j * np.tensordot(np.asarray(center), grid.xi, axes=1))
        coeffs = np.exp(-(xi_abs - rho) ** 2 / (2 * width ** 2)) * shifts
        coeffs = np.where(np.abs(grid.index).max(axis=0) < grid.N // 2, coeffs, 0.0)
        fields.append(Field._wrap(grid, ifft(coeffs[None], grid.n)))
    while len(fields) < trials:
        fields.append(random_band_limited(grid, 1, grid.N // 4, rng))
    return fields[:trials]

def operator_norm_lower_bound(
    z: SpectralParameterLike, p: LebesgueExponentLike, q: LebesgueExponentLike,
    trials: int, grid: Grid, seed: int = 0, delta: Optional[float] = None,
    fields: Optional[Sequence[Field]] = None
    ) -> float:
    """
    max over test fields of ||R_0(zeta) f||_q / ||f||_p, a lower bound on the discrete
    L^p -> L^q norm. `fields` replaces the built-in probe family.
    """
    res = check_gutierrez(p, q, grid.n)
    if not res:
        raise AdmissibilityError(str(res), res.violations)
    if trials < 1:
        raise ParameterError(f"Need at least one trial, got {trials}")
    zeta = as_spectral_parameter(z).effective(delta)
    r0 = resolvent_symbol(grid, zeta)
    probes = list(fields)[:trials] if fields is not None else \
        _probe_fields(grid, zeta, trials, np.random.default_rng(seed))

    def ratio(f: Field) -> float:
        denom = lp_norm(f, p)
        if denom == 0:
            return 0.0
        return lp_norm(apply_fourier_multiplier(f, r0), q) / denom

    ratios = ordered_map(ratio, probes)
    logger.debug(f"Norm probe at zeta={zeta}: {len(ratios)} trials, max ratio {max(ratios):.4e}")
    return max(ratios)

def cauchy_difference(
    f: Field, lam: float, delta: float, delta_prime: float, q: LebesgueExponentLike
    ) -> tuple[float, float]:
    """ (|sqrt(zeta) - sqrt(zeta')|, ||R_0(zeta) f - R_0(zeta') f||_q) for zeta = lam + i delta. """
    zeta, zeta_p = complex(lam, delta), complex(lam, delta_prime)
    diff = apply_fourier_multiplier(f, resolvent_symbol(f.grid, zeta) - resolvent_symbol(f.grid, zeta_p))
    return abs(principal_root(zeta) - principal_root(zeta_p)), lp_norm(diff, q)
