"""
Birman-Schwinger operator K(zeta) = -R_0(zeta) V and the Lippmann-Schwinger equation
(I - K(zeta)) u = R_0(zeta) f for matrix potentials on the periodic grid.
"""
from __future__ import annotations
from typing import Optional, Sequence
import dataclasses, math
import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .config import KRYLOV_RESTART, DEFAULT_TOL, DEFAULT_MAX_ITER, NEUMANN_THRESHOLD, \
    HERMITIAN_TOL, PROBE_BANDWIDTH_FRACTION, IM_IDENTITY_SPREAD
from .datatype import SpectralParameterLike, LebesgueExponent, LebesgueExponentLike, SolveReport, as_spectral_parameter
from .grid_field import Grid, Field, fft, ifft, inner, lp_norm, random_band_limited, band_limit_hat
from .free_resolvent import resolvent_symbol
from .bounded_pool import ordered_map
from .error import ShapeError, ParameterError, ConvergenceError, ProbeError
from .log import get_logger

logger = get_logger('solver')

class Potential:
    """
    m x m complex matrix at every grid point, samples of shape (m, m, N, ..., N).
    An optional split V = V1 + V2 records the target integrability exponents (kappa, kappa_tilde).
    """
    def __init__(self, grid: Grid, values: np.ndarray, hermitian: Optional[bool] = None):
        arr = np.array(values, dtype=np.complex128)
        if arr.ndim == grid.n:
            arr = arr[None, None]
        if arr.ndim != grid.n + 2 or arr.shape[0] != arr.shape[1] or arr.shape[2:] != grid.shape:
            raise ShapeError(f"Potential samples of shape {arr.shape} do not fit {grid}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("Potential samples must be finite")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr
        detected = self.hermitian_defect() <= HERMITIAN_TOL * max(self.sup_norm(), 1e-300)
        if hermitian and not detected:
            raise ParameterError(f"Potential flagged Hermitian has defect {self.hermitian_defect():.3e}")
        self.hermitian = detected if hermitian is None else bool(hermitian)
        self.split: Optional[tuple[Potential, Potential]] = None
        self.split_exponents: Optional[tuple[LebesgueExponent, LebesgueExponent]] = None

    @classmethod
    def zeros(cls, grid: Grid, m: int = 1) -> Potential:
        return cls(grid, np.zeros((m, m) + grid.shape))

    @classmethod
    def scalar(cls, grid: Grid, weight: np.ndarray | complex, m: int = 1) -> Potential:
        """ weight(x) times the identity matrix. """
        w = np.broadcast_to(np.asarray(weight, dtype=np.complex128), grid.shape)
        return cls(grid, np.eye(m).reshape((m, m) + (1,) * grid.n) * w[None, None])

    @classmethod
    def from_field(cls, f: Field) -> Potential:
        """ Inverse of as_field: m^2 components in row-major matrix order. """
        m = math.isqrt(f.m)
        if m * m != f.m:
            raise ShapeError(f"A potential needs a square number of components, got {f.m}")
        return cls(f.grid, f.values.reshape((m, m) + f.grid.shape))

    def as_field(self) -> Field:
        return Field(self.grid, self.values.reshape((self.m * self.m,) + self.grid.shape))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def apply(self, u: Field) -> Field:
        if u.grid != self.grid or u.m != self.m:
            raise ShapeError(f"Potential of size {self.m} cannot act on a {u.m}-component field")
        return Field._wrap(self.grid, np.einsum('ij...,j...->i...', self.values, u.values))

    def apply_array(self, arr: np.ndarray) -> np.ndarray:
        return np.einsum('ij...,j...->i...', self.values, arr)

    def adjoint(self) -> Potential:
        return Potential(self.grid, np.conj(np.swapaxes(self.values, 0, 1)), hermitian=self.hermitian or None)

    def pointwise_norm(self) -> np.ndarray:
        """ Largest singular value of V(x) at every sample. """
        if self.m == 1:
            return np.abs(self.values[0, 0])
        mats = np.moveaxis(self.values, (0, 1), (-2, -1))
        return np.linalg.norm(mats, ord=2, axis=(-2, -1))

    def sup_norm(self) -> float:
        return float(np.max(self.pointwise_norm()))

    def lp_norm(self, kappa: LebesgueExponentLike) -> float:
        kappa = LebesgueExponent.of(kappa)
        mag = self.pointwise_norm()
        if kappa.is_infinite:
            return float(np.max(mag))
        k = float(kappa.value)
        return float(np.sum(mag ** k) * self.grid.cell_volume) ** (1 / k)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.values - np.conj(np.swapaxes(self.values, 0, 1)))))

    def with_split(self, v1: Potential, v2: Potential, kappa: LebesgueExponentLike, kappa_tilde: LebesgueExponentLike) -> Potential:
        if np.max(np.abs(v1.values + v2.values - self.values)) > 1e-12 * max(self.sup_norm(), 1.0):
            raise ParameterError("Split parts do not add up to the potential")
        out = Potential(self.grid, self.values, hermitian=self.hermitian or None)
        out.split = (v1, v2)
        out.split_exponents = (LebesgueExponent.of(kappa), LebesgueExponent.of(kappa_tilde))
        return out

    def __add__(self, other: Potential) -> Potential:
        return Potential(self.grid, self.values + other.values)

    def __sub__(self, other: Potential) -> Potential:
        return Potential(self.grid, self.values - other.values)

    def __repr__(self):
        return f"Potential(m={self.m}, hermitian={self.hermitian}, {self.grid})"


def decompose_potential(
    V: Potential, kappa: LebesgueExponentLike, kappa_tilde: LebesgueExponentLike, eta: float
    ) -> tuple[Potential, Potential]:
    """
    Threshold split V1 = V 1{|V(x)| > t}, V2 = V - V1 with the largest t such that
    ||V2||_kappa_tilde <= eta. The threshold is found by bisection over the sorted
    pointwise magnitudes, so ties enter V2 together.
    """
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta}")
    kt = LebesgueExponent.of(kappa_tilde)
    if kt.is_infinite:
        raise ParameterError("kappa_tilde must be finite for the split")
    k = float(kt.value)
    mag = V.pointwise_norm()
    if V.lp_norm(kt) <= eta:
        t = math.inf
    else:
        levels = np.unique(mag)
        mass = np.sort(mag.ravel()) ** k * V.grid.cell_volume
        cum = np.concatenate([[0.0], np.cumsum(mass)])
        # V2 mass with threshold levels[i]: every sample with |V| <= levels[i]
        counts = np.searchsorted(np.sort(mag.ravel()), levels, side='right')
        ok = cum[counts] <= eta ** k
        idx = np.searchsorted(~ok, True) - 1            # ok is monotone: True ... True False ... False
        t = float(levels[idx]) if idx >= 0 else -1.0
    low = mag <= t
    v2 = Potential(V.grid, V.values * low[None, None])
    v1 = Potential(V.grid, V.values * (~low)[None, None])
    logger.debug(f"Potential split at t={t:.4e}: ||V2||_{kt} = {v2.lp_norm(kt):.4e} (eta={eta:g})")
    return v1, v2

def _bs_array(u: np.ndarray, r0: np.ndarray, V: Potential) -> np.ndarray:
    n = V.grid.n
    return -ifft(r0[None] * fft(V.apply_array(u), n), n)

def apply_bs_operator(u: Field, z: SpectralParameterLike, V: Potential, delta: Optional[float] = None) -> Field:
    """ K(zeta) u = -R_0(zeta)(V u). """
    if u.grid != V.grid or u.m != V.m:
        raise ShapeError(f"Potential of size {V.m} cannot act on a {u.m}-component field")
    zeta = as_spectral_parameter(z).effective(delta)
    return Field._wrap(u.grid, _bs_array(u.values, resolvent_symbol(u.grid, zeta), V))

def apply_bs_adjoint(w: Field, z: SpectralParameterLike, V: Potential, delta: Optional[float] = None) -> Field:
    """ K(zeta)* w = -V* R_0(conj zeta) w. """
    if w.grid != V.grid or w.m != V.m:
        raise ShapeError(f"Potential of size {V.m} cannot act on a {w.m}-component field")
    zeta = as_spectral_parameter(z).effective(delta)
    n = w.grid.n
    r0_bar = resolvent_symbol(w.grid, zeta.conjugate())
    return Field._wrap(w.grid, -V.adjoint().apply_array(ifft(r0_bar[None] * fft(w.values, n), n)))

def neumann_bound(grid: Grid, zeta: complex, V: Potential) -> float:
    """ Certified L^2 bound ||V||_inf * max_k |zeta - |xi_k|^2|^-1 on ||K(zeta)||. """
    return V.sup_norm() * float(np.max(np.abs(resolvent_symbol(grid, zeta))))


def solve_lippmann_schwinger(
    f: Field, z: SpectralParameterLike, V: Potential,
    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
    delta: Optional[float] = None, x0: Optional[Field] = None,
    ) -> SolveReport:
    """
    Solve (I - K(zeta)) u = R_0(zeta) f to relative L^2 residual tol.
    Fixed-point iteration when the Neumann bound is below 1/2, restarted GMRES otherwise.
    Raises ConvergenceError (carrying the report) when tol is not met within max_iter.
    """
    grid = f.grid
    if f.m != V.m or f.grid != V.grid:
        raise ShapeError(f"Source with {f.m} components does not match a potential of size {V.m}")
    zeta = as_spectral_parameter(z).effective(delta)
    r0 = resolvent_symbol(grid, zeta)
    n = grid.n
    rhs = ifft(r0[None] * fft(f.values, n), n)
    rhs_norm = float(np.linalg.norm(rhs))

    def residual(u: np.ndarray) -> float:
        if rhs_norm == 0:
            return float(np.linalg.norm(u))
        return float(np.linalg.norm(u - _bs_array(u, r0, V) - rhs)) / rhs_norm

    if V.sup_norm() == 0 or rhs_norm == 0:
        u = rhs if rhs_norm > 0 else np.zeros_like(rhs)
        return SolveReport(Field._wrap(grid, u), 0, residual(u), 'free', zeta=zeta)

    bound = neumann_bound(grid, zeta, V)
    if bound < NEUMANN_THRESHOLD:
        u = rhs.copy() if x0 is None else x0.values.copy()
        iterations = 0
        while iterations < max_iter:
            u_next = rhs + _bs_array(u, r0, V)
            iterations += 1
            step = float(np.linalg.norm(u_next - u)) / rhs_norm
            u = u_next
            # the fixed-point residual shrinks by the factor `bound` each step
            if step * bound <= tol:
                break
        method = 'neumann'
    else:
        shape, size = rhs.shape, rhs.size
        op = spla.LinearOperator(
            (size, size), dtype=np.complex128,
            matvec=lambda x: x - _bs_array(x.reshape(shape), r0, V).ravel(),
        )
        counter = [0]
        def count(_):
            counter[0] += 1
        guess = None if x0 is None else x0.values.ravel()
        cycles = max(1, math.ceil(max_iter / KRYLOV_RESTART))
        sol, info = spla.gmres(op, rhs.ravel(), x0=guess, rtol=tol, atol=0.0, restart=KRYLOV_RESTART,
                               maxiter=cycles, callback=count, callback_type='pr_norm')
        u = sol.reshape(shape)
        if residual(u) > tol and counter[0] < max_iter:
            # true residual drifted from the Krylov estimate, warm restart once
            logger.debug(f"GMRES warm restart at zeta={zeta}: true residual {residual(u):.3e}")
            sol, info = spla.gmres(op, rhs.ravel(), x0=sol, rtol=tol, atol=0.0, restart=KRYLOV_RESTART,
                                   maxiter=cycles, callback=count, callback_type='pr_norm')
            u = sol.reshape(shape)
        iterations = counter[0]
        method = 'gmres'

    res = residual(u)
    converged = res <= tol * (1 + 1e-6)
    report = SolveReport(Field._wrap(grid, u), iterations, res, method,
                         converged=converged, near_singular=not converged, zeta=zeta)
    if not converged:
        logger.warning(f"Lippmann-Schwinger solve did not converge: {report}")
        raise ConvergenceError(f"No convergence within {max_iter} iterations (residual {res:.3e}); "
                               "I - K(zeta) may be nearly singular", report=report)
    logger.debug(str(report))
    return report

def dense_matrix(grid: Grid, z: SpectralParameterLike, V: Potential, delta: Optional[float] = None) -> np.ndarray:
    """ I - K(zeta) assembled column by column (small grids only). """
    zeta = as_spectral_parameter(z).effective(delta)
    r0 = resolvent_symbol(grid, zeta)
    shape = (V.m,) + grid.shape
    size = int(np.prod(shape))
    cols = np.empty((size, size), dtype=np.complex128)
    e = np.zeros(size, dtype=np.complex128)
    for i in range(size):
        e[i] = 1.0
        cols[:, i] = e - _bs_array(e.reshape(shape), r0, V).ravel()
        e[i] = 0.0
    return cols


def injectivity_functional(u: Field, V: Potential) -> float:
    """ Im sum_x conj(u(x)) . V(x) u(x) h^n. """
    return inner(V.apply(u), u).imag

def sphere_trace_l2(g: Field, lam: float, shell_width: Optional[float] = None) -> float:
    """
    Shell-averaged surrogate of the sphere trace of g_hat at radius sqrt(lambda):
    (1 / 2w) sum over ||xi_k| - sqrt(lambda)| <= w of |g_hat(xi_k)|^2 (2 pi / L)^n.
    """
    grid = g.grid
    spacing = 2 * math.pi / grid.L
    w = 2 * spacing if shell_width is None else shell_width
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if w < spacing * (1 - 1e-12):
        raise ParameterError(f"Shell width {w:g} is below the lattice spacing {spacing:g}")
    shell = np.abs(np.sqrt(grid.xi_sq) - math.sqrt(lam)) <= w
    if not np.any(shell):
        logger.warning(f"Sphere trace: empty shell at sqrt(lambda)={math.sqrt(lam):g}, width {w:g}")
        return 0.0
    mass = np.sum(np.abs(g.fourier()) ** 2, axis=0)
    return float(np.sum(mass[shell]) * grid.dual_volume / (2 * w))

@dataclasses.dataclass
class ImIdentityRow:
    delta: float
    lhs: float          # -Im <R_0(lambda + i delta) g, g>
    trace: float
    ratio: float        # lhs / (sqrt(lambda) * trace)

@dataclasses.dataclass
class ImIdentityReport:
    rows: list[ImIdentityRow]       # decreasing delta
    c: float                        # mean ratio over the last half of the rows
    spread: float                   # (max - min) / |c| over the same rows
    stable: bool

def verify_im_resolvent_identity(
    g: Field, lam: float, delta_list: Sequence[float], shell_width: Optional[float] = None,
    max_spread: float = IM_IDENTITY_SPREAD,
    ) -> ImIdentityReport:
    """
    Both sides of -Im <R_0(lambda + i0) g, g> = c sqrt(lambda) * (sphere trace), per delta.
    c is fitted as the mean ratio over the smaller half of the deltas; the identity is
    reported stable when the ratios there spread by at most `max_spread` relative to c.
    On the lattice this needs deltas well above the spacing (2 pi / L)^2 of the values of |xi_k|^2.
    """
    if not delta_list:
        raise ParameterError("delta_list must not be empty")
    if any(not d > 0 for d in delta_list):
        raise ParameterError(f"Deltas must be positive, got {list(delta_list)}")
    trace = sphere_trace_l2(g, lam, shell_width)
    rows = []
    for d in sorted(delta_list, reverse=True):
        r0 = resolvent_symbol(g.grid, complex(lam, d))
        ru = Field._wrap(g.grid, ifft(r0[None] * fft(g.values, g.grid.n), g.grid.n))
        lhs = -inner(ru, g).imag
        ratio = lhs / (math.sqrt(lam) * trace) if trace > 0 else math.nan
        rows.append(ImIdentityRow(float(d), lhs, trace, ratio))

    tail = [r.ratio for r in rows[len(rows) // 2:]]
    c = float(np.mean(tail))
    if math.isfinite(c) and c != 0:
        spread = (max(tail) - min(tail)) / abs(c)
    else:
        spread = math.nan
    stable = bool(spread <= max_spread)
    if not stable:
        logger.debug(f"Im-resolvent ratio does not settle at lambda={lam:g}: c={c:.4e}, spread={spread:.3f}")
    return ImIdentityReport(rows, c, spread, stable)


def min_singular_value_probe(
    z: SpectralParameterLike, V: Potential, probe_dim: int = 8,
    seed: int = 0, delta: Optional[float] = None, refine_steps: int = 2
    ) -> float:
    """
    Smallest singular value of I - K(zeta) on a band-limited random subspace of dimension
    probe_dim (bandwidth N/4). Rayleigh-Ritz on the normal map (I-K)*(I-K), followed by
    `refine_steps` swaps of the worst Ritz direction for the normal-map residual of the best.
    Every value returned is an upper bound on the smallest singular value of I - K.
    """
    grid = V.grid
    if probe_dim < 1:
        raise ParameterError(f"probe_dim must be positive, got {probe_dim}")
    zeta = as_spectral_parameter(z).effective(delta)
    r0 = resolvent_symbol(grid, zeta)
    r0_bar = resolvent_symbol(grid, zeta.conjugate())
    V_adj = V.adjoint()
    n = grid.n
    shape = (V.m,) + grid.shape
    band = grid.N // PROBE_BANDWIDTH_FRACTION
    rng = np.random.default_rng(seed)

    def forward(x: np.ndarray) -> np.ndarray:
        return x - _bs_array(x, r0, V)

    def backward(x: np.ndarray) -> np.ndarray:
        return x + V_adj.apply_array(ifft(r0_bar[None] * fft(x, n), n))

    basis = np.stack([random_band_limited(grid, V.m, band, rng).values.ravel() for _ in range(probe_dim)], axis=1)
    Q, _ = np.linalg.qr(basis)
    best = math.inf
    for step in range(refine_steps + 1):
        AQ = np.stack(ordered_map(lambda c: forward(Q[:, c].reshape(shape)).ravel(), range(Q.shape[1])), axis=1)
        if not np.all(np.isfinite(AQ)):
            raise ProbeError("Non-finite values while applying I - K on the probe subspace")
        try:
            _, S, Wh = sla.svd(AQ, full_matrices=False)
        except (sla.LinAlgError, ValueError) as e:
            raise ProbeError(f"Probe SVD failed: {e}") from e
        best = min(best, float(S[-1]))
        if step == refine_steps or Q.shape[1] < 2:
            break
        w = Wh[-1].conj()
        y = (Q @ w).reshape(shape)
        r = backward((AQ @ w).reshape(shape)) - S[-1] ** 2 * y
        r = ifft(band_limit_hat(fft(r, n), grid, band), n).ravel()
        r -= Q @ (Q.conj().T @ r)
        rn = np.linalg.norm(r)
        if rn <= 1e-14 * np.linalg.norm(y):
            break
        Q = np.concatenate([Q @ Wh[1:].conj().T, (r / rn)[:, None]], axis=1)
    logger.debug(f"sigma_min probe at zeta={zeta}: {best:.6e}")
    return best


def k_norm_ratio(
    z: SpectralParameterLike, V: Potential, q: LebesgueExponentLike,
    trials: int = 8, seed: int = 0, delta: Optional[float] = None
    ) -> float:
    """ max ||K(zeta) u||_q / ||u||_q over random band-limited u. """
    grid = V.grid
    zeta = as_spectral_parameter(z).effective(delta)
    r0 = resolvent_symbol(grid, zeta)
    rng = np.random.default_rng(seed)
    probes = [random_band_limited(grid, V.m, grid.N // PROBE_BANDWIDTH_FRACTION, rng) for _ in range(trials)]

    def ratio(u: Field) -> float:
        ku = Field._wrap(grid, _bs_array(u.values, r0, V))
        return lp_norm(ku, q) / lp_norm(u, q)
    return max(ordered_map(ratio, probes))

def injectivity_estimate_ratio(
    u: Field, z: SpectralParameterLike, V: Potential,
    q1: LebesgueExponentLike, q2: LebesgueExponentLike, delta: Optional[float] = None
    ) -> float:
    """
    (||u||_q1 + ||u||_q2) / (||(I-K)u||_q1 + ||(I-K)u||_q2 + |Im <u, V u>|^(1/2)),
    which stays bounded for the a priori injectivity estimate.
    """
    ku = apply_bs_operator(u, z, V, delta)
    w = u - ku
    denom = lp_norm(w, q1) + lp_norm(w, q2) + abs(injectivity_functional(u, V)) ** 0.5
    num = lp_norm(u, q1) + lp_norm(u, q2)
    return num / denom if denom > 0 else math.inf
