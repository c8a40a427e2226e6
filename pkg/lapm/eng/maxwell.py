"""
Time-harmonic Maxwell system in isotropic media

    i zeta eps E - curl H = -J_e,    i zeta mu H + curl E = J_m,

and its reduction to the 6x6 Helmholtz system

    (Delta + zeta^2 eps_inf mu_inf) u + V(zeta) u = L1(zeta) J~ + L2 J~,
    u = (eps^1/2 E, mu^1/2 H),  J~ = (mu^1/2 J_e, eps^1/2 J_m).
"""
from __future__ import annotations
from typing import Optional, Sequence
import dataclasses, functools, math
import numpy as np

from .config import MEDIUM_DECAY_THRESHOLD, MIN_BUMP_WIDTH_CELLS, RESONANCE_GAP, DEFAULT_TOL, DEFAULT_MAX_ITER
from .datatype import CurrentPair, EMState, MaxwellSolveReport, LebesgueExponentLike
from .grid_field import (
    Grid, Field, fft, ifft, lp_norm, curl, divergence, laplacian, leray_project,
    gaussian_mollify, spectral_gradient, periodized_gaussian, cross_hat,
)
from .helmholtz import Potential, solve_lippmann_schwinger, injectivity_functional
from .error import MediumError, ParameterError, ShapeError, ResonanceError
from .log import get_logger, log_access

logger = get_logger('solver')

_EYE3 = np.eye(3).reshape((3, 3, 1, 1, 1))

def _positive_samples(grid: Grid, value, name: str) -> np.ndarray:
    if isinstance(value, Field):
        if value.m != 1 or value.grid != grid:
            raise ShapeError(f"{name} must be a scalar field on {grid}")
        value = value.values[0]
    arr = np.broadcast_to(np.asarray(value), grid.shape)
    if np.iscomplexobj(arr):
        if np.any(arr.imag != 0):
            raise MediumError(f"{name} must be real, use a complex zeta for conducting media")
        arr = arr.real
    arr = np.array(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise MediumError(f"{name} must be finite")
    if np.min(arr) <= 0:
        raise MediumError(f"{name} must be uniformly positive, min = {np.min(arr):g}")
    arr.setflags(write=False)
    return arr

def _background_constant(value, name: str) -> float:
    if np.iscomplexobj(value):
        if np.imag(value) != 0:
            raise MediumError(f"{name} must be real, got {value}")
        value = np.real(value)
    try:
        value = float(value)
    except (TypeError, ValueError) as e:
        raise MediumError(f"{name} must be a real number, got {value!r}") from e
    if not (math.isfinite(value) and value > 0):
        raise MediumError(f"Background constant {name} must be positive and finite, got {value}")
    return value

def _is_constant(a: np.ndarray) -> bool:
    return bool(np.all(a == a.flat[0]))

def _cross_matrix(v: np.ndarray) -> np.ndarray:
    """ Matrix of u -> v x u at every sample, (3, ...) -> (3, 3, ...). """
    z = np.zeros_like(v[0])
    return np.array([
        [z, -v[2], v[1]],
        [v[2], z, -v[0]],
        [-v[1], v[0], z],
    ])


class MediumProfile:
    """
    Scalar permittivity eps and permeability mu with background values eps_inf, mu_inf.
    Derivatives are spectral and cached on first use.
    """
    def __init__(
        self, grid: Grid, eps, mu, eps_inf: float, mu_inf: float,
        decay_threshold: float = MEDIUM_DECAY_THRESHOLD
        ):
        if grid.n != 3:
            raise MediumError(f"Maxwell media live in 3D, got n = {grid.n}")
        self.grid = grid
        self.eps = _positive_samples(grid, eps, 'eps')
        self.mu = _positive_samples(grid, mu, 'mu')
        self.eps_inf = _background_constant(eps_inf, 'eps_inf')
        self.mu_inf = _background_constant(mu_inf, 'mu_inf')
        gap = self.boundary_gap()
        if gap > decay_threshold:
            raise MediumError(
                f"|eps mu - eps_inf mu_inf| reaches {gap:.3e} (relative) on the boundary cells, "
                f"above the decay threshold {decay_threshold:g}"
            )

    @classmethod
    def constant(cls, grid: Grid, eps0: float, mu0: float,
                 eps_inf: Optional[float] = None, mu_inf: Optional[float] = None, **kwargs) -> MediumProfile:
        return cls(grid, eps0, mu0, eps0 if eps_inf is None else eps_inf, mu0 if mu_inf is None else mu_inf, **kwargs)

    def boundary_gap(self) -> float:
        """ max |eps mu - eps_inf mu_inf| / (eps_inf mu_inf) over cells touching the box boundary. """
        w = np.abs(self.weight)
        edges = [np.take(w, idx, axis=ax) for ax in range(3) for idx in (0, -1)]
        return float(max(np.max(e) for e in edges)) / (self.eps_inf * self.mu_inf)

    @property
    def weight(self) -> np.ndarray:
        """ eps mu - eps_inf mu_inf """
        return self.eps * self.mu - self.eps_inf * self.mu_inf

    @property
    def is_constant(self) -> bool:
        return _is_constant(self.eps) and _is_constant(self.mu)

    def _gradient(self, a: np.ndarray) -> np.ndarray:
        if _is_constant(a):
            return np.zeros((3,) + self.grid.shape)
        return spectral_gradient(Field(self.grid, a), order=1).values.real

    def _hessian(self, a: np.ndarray) -> np.ndarray:
        if _is_constant(a):
            return np.zeros((3, 3) + self.grid.shape)
        return spectral_gradient(Field(self.grid, a), order=2).values.real.reshape((3, 3) + self.grid.shape)

    @functools.cached_property
    def grad_eps(self) -> np.ndarray:
        return self._gradient(self.eps)

    @functools.cached_property
    def grad_mu(self) -> np.ndarray:
        return self._gradient(self.mu)

    @functools.cached_property
    def hess_eps(self) -> np.ndarray:
        return self._hessian(self.eps)

    @functools.cached_property
    def hess_mu(self) -> np.ndarray:
        return self._hessian(self.mu)

    @functools.cached_property
    def v(self) -> np.ndarray:
        """ v = 2 grad((eps mu)^1/2) = (eps mu)^-1/2 (mu grad eps + eps grad mu) """
        return (self.mu * self.grad_eps + self.eps * self.grad_mu) / np.sqrt(self.eps * self.mu)

    def v_defect(self) -> float:
        """ Largest deviation of the cached v from 2 grad((eps mu)^1/2) differentiated directly. """
        direct = 2 * self._gradient(np.sqrt(self.eps * self.mu))
        return float(np.max(np.abs(direct - self.v)))

    def __repr__(self):
        return f"MediumProfile(eps_inf={self.eps_inf:g}, mu_inf={self.mu_inf:g}, constant={self.is_constant}, {self.grid})"


def build_bump_medium(
    grid: Grid, eps_inf: float, mu_inf: float,
    eps_amplitude: float, mu_amplitude: float,
    centers: Sequence[Sequence[float]], widths: Sequence[float],
    decay_threshold: float = MEDIUM_DECAY_THRESHOLD,
    ) -> MediumProfile:
    """
    eps = eps_inf (1 + a_eps sum_i G_i), mu = mu_inf (1 + a_mu sum_i G_i) with periodized
    Gaussians G_i of the given centers and widths. Widths below 6h are rejected.
    """
    if len(centers) != len(widths) or not centers:
        raise MediumError("Bump medium needs one width per center and at least one bump")
    min_width = MIN_BUMP_WIDTH_CELLS * grid.h
    bumps = np.zeros(grid.shape)
    for c, w in zip(centers, widths):
        if w < min_width:
            raise MediumError(f"Bump width {w:g} is under-resolved, need >= {MIN_BUMP_WIDTH_CELLS}h = {min_width:g}")
        bumps += periodized_gaussian(grid, c, w)
    return MediumProfile(
        grid, eps_inf * (1 + eps_amplitude * bumps), mu_inf * (1 + mu_amplitude * bumps),
        eps_inf, mu_inf, decay_threshold=decay_threshold,
    )


def prepare_currents(raw_Je: Field, raw_Jm: Field, sigma: float = 0.0) -> CurrentPair:
    """ Gaussian mollification exp(-|xi|^2 sigma^2) followed by the Leray projection. """
    for f in (raw_Je, raw_Jm):
        if f.m != 3:
            raise ShapeError(f"Currents need 3 components, got {f.m}")
    return CurrentPair(
        leray_project(gaussian_mollify(raw_Je, sigma)),
        leray_project(gaussian_mollify(raw_Jm, sigma)),
    )

def tilde_currents(med: MediumProfile, J: CurrentPair) -> Field:
    """ J~ = (mu^1/2 J_e, eps^1/2 J_m) """
    return Field.stack([J.Je.scale(np.sqrt(med.mu)), J.Jm.scale(np.sqrt(med.eps))])

def state_to_u(med: MediumProfile, state: EMState) -> Field:
    return Field.stack([state.E.scale(np.sqrt(med.eps)), state.H.scale(np.sqrt(med.mu))])

def u_to_state(med: MediumProfile, u: Field, zeta: complex) -> EMState:
    if u.m != 6:
        raise ShapeError(f"Helmholtz-system fields have 6 components, got {u.m}")
    return EMState(
        u.component(slice(0, 3)).scale(1 / np.sqrt(med.eps)),
        u.component(slice(3, 6)).scale(1 / np.sqrt(med.mu)),
        complex(zeta),
    )


def _diagonal_block(c: np.ndarray, grad: np.ndarray, hess: np.ndarray, weight: np.ndarray, zeta: complex) -> np.ndarray:
    # -c^-1/2 Delta(c^1/2) I + grad grad^T (log c) - zeta^2 (eps_inf mu_inf - eps mu) I
    lap_sqrt = 0.5 * np.trace(hess) / c - 0.25 * np.sum(grad ** 2, axis=0) / c ** 2
    hess_log = hess / c - grad[:, None] * grad[None, :] / c ** 2
    return (-lap_sqrt + zeta ** 2 * weight) * _EYE3 + hess_log

def _l1_matrix(med: MediumProfile, zeta: complex) -> np.ndarray:
    shape = med.grid.shape
    s = 1j * zeta * np.sqrt(med.eps * med.mu)
    out = np.zeros((6, 6) + shape, dtype=np.complex128)
    out[:3, :3] = s * _EYE3
    out[:3, 3:] = -0.5 * _cross_matrix(med.grad_eps / med.eps)
    out[3:, :3] = -0.5 * _cross_matrix(med.grad_mu / med.mu)
    out[3:, 3:] = -s * _EYE3
    return out

def apply_l2(jt: Field) -> Field:
    """ L2 = [[0, -curl], [-curl, 0]], applied spectrally. """
    if jt.m != 6:
        raise ShapeError(f"L2 acts on 6-component fields, got {jt.m}")
    return -Field.stack([curl(jt.component(slice(3, 6))), curl(jt.component(slice(0, 3)))])

@dataclasses.dataclass
class PotentialAssembly:
    V: Potential                # V(zeta), 6x6
    L1: Potential               # L1(zeta), 6x6
    zeta: complex
    helmholtz_zeta: complex     # zeta^2 eps_inf mu_inf

    def apply_l1(self, jt: Field) -> Field:
        return self.L1.apply(jt)

    def apply_l2(self, jt: Field) -> Field:
        return apply_l2(jt)

    def source(self, jt: Field) -> Field:
        return self.L1.apply(jt) + apply_l2(jt)

def assemble_potentials(med: MediumProfile, zeta: complex) -> PotentialAssembly:
    zeta = complex(zeta)
    grid = med.grid
    w = med.weight
    vx = _cross_matrix(med.v)
    V = np.zeros((6, 6) + grid.shape, dtype=np.complex128)
    V[:3, :3] = _diagonal_block(med.eps, med.grad_eps, med.hess_eps, w, zeta)
    V[3:, 3:] = _diagonal_block(med.mu, med.grad_mu, med.hess_mu, w, zeta)
    V[:3, 3:] = -1j * zeta * vx
    V[3:, :3] = 1j * zeta * vx
    return PotentialAssembly(
        Potential(grid, V), Potential(grid, _l1_matrix(med, zeta)),
        zeta, zeta ** 2 * med.eps_inf * med.mu_inf,
    )

def maxwell_to_helmholtz_rhs(med: MediumProfile, J: CurrentPair, zeta: complex) -> Field:
    """ L1(zeta) J~ + L2 J~ """
    if J.grid != med.grid:
        raise ShapeError("Currents and medium live on different grids")
    jt = tilde_currents(med, J)
    return Potential(med.grid, _l1_matrix(med, complex(zeta))).apply(jt) + apply_l2(jt)


def maxwell_residuals(med: MediumProfile, state: EMState, J: CurrentPair, zeta: complex) -> tuple[float, float]:
    """ (||i zeta eps E - curl H + J_e||_2, ||i zeta mu H + curl E - J_m||_2) """
    r1 = state.E.scale(1j * zeta * med.eps) - curl(state.H) + J.Je
    r2 = state.H.scale(1j * zeta * med.mu) + curl(state.E) - J.Jm
    return lp_norm(r1, 2), lp_norm(r2, 2)

@log_access(include_args=False, logger=logger)
def solve_maxwell(
    med: MediumProfile, J: CurrentPair, zeta: complex,
    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, x0: Optional[Field] = None,
    ) -> tuple[EMState, MaxwellSolveReport]:
    """
    Solve the Maxwell system at a non-real zeta through the Helmholtz system:
    (I - K) u = R_0(zeta^2 eps_inf mu_inf)[L1 J~ + L2 J~], then E = eps^-1/2 u_e, H = mu^-1/2 u_m.
    """
    zeta = complex(zeta)
    if J.grid != med.grid:
        raise ShapeError("Currents and medium live on different grids")
    asm = assemble_potentials(med, zeta)
    rep = solve_lippmann_schwinger(asm.source(tilde_currents(med, J)), asm.helmholtz_zeta, asm.V,
                                   tol=tol, max_iter=max_iter, x0=x0)
    state = u_to_state(med, rep.solution, zeta)
    r1, r2 = maxwell_residuals(med, state, J, zeta)
    j_norm = lp_norm(J.Je, 2) + lp_norm(J.Jm, 2)
    report = MaxwellSolveReport(
        **{f.name: getattr(rep, f.name) for f in dataclasses.fields(rep)},
        res1=r1, res2=r2, condition_factor=(r1 + r2) / (tol * j_norm) if j_norm > 0 else 0.0,
    )
    report.zeta = zeta
    logger.debug(str(report))
    return state, report

def solve_maxwell_lap(
    med: MediumProfile, J: CurrentPair, omega: float, delta: float, sign: int = 1,
    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, x0: Optional[Field] = None,
    ) -> tuple[EMState, MaxwellSolveReport]:
    """ Maxwell solve at zeta = omega + sign * i delta, one step of a limiting absorption sweep. """
    if omega == 0 or not math.isfinite(omega):
        raise ParameterError(f"omega must be a nonzero real, got {omega}")
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    if sign not in (1, -1):
        raise ParameterError(f"sign must be +1 or -1, got {sign}")
    return solve_maxwell(med, J, complex(omega, sign * delta), tol=tol, max_iter=max_iter, x0=x0)


def constant_coefficient_oracle(eps0: float, mu0: float, J: CurrentPair, zeta: complex) -> EMState:
    """
    Independent Fourier solve in a constant medium: for every mode the 6x6 system
    i zeta eps0 E^ - ik x H^ = -J_e^,  i zeta mu0 H^ + ik x E^ = J_m^.
    """
    eps0, mu0 = _background_constant(eps0, 'eps0'), _background_constant(mu0, 'mu0')
    zeta = complex(zeta)
    if zeta == 0:
        raise ParameterError("The constant-coefficient system is singular at zeta = 0")
    grid = J.grid
    k = grid.xi_derivative
    k_sq = np.sum(k ** 2, axis=0)
    gap = np.abs(zeta ** 2 * eps0 * mu0 - k_sq)
    i = int(np.argmin(gap))
    if gap.flat[i] <= RESONANCE_GAP:
        raise ResonanceError(f"zeta^2 eps0 mu0 = {zeta ** 2 * eps0 * mu0} hits the mode |k|^2 = {k_sq.flat[i]:g}",
                             xi_sq=float(k_sq.flat[i]))
    kx = _cross_matrix(1j * k)
    M = np.zeros((6, 6) + grid.shape, dtype=np.complex128)
    M[:3, :3] = 1j * zeta * eps0 * _EYE3
    M[:3, 3:] = -kx
    M[3:, :3] = kx
    M[3:, 3:] = 1j * zeta * mu0 * _EYE3
    rhs = np.concatenate([-fft(J.Je.values, 3), fft(J.Jm.values, 3)])
    mats = np.moveaxis(M.reshape(6, 6, -1), -1, 0)
    sol = np.linalg.solve(mats, rhs.reshape(6, -1).T[..., None])[..., 0]
    sol = ifft(sol.T.reshape((6,) + grid.shape), 3)
    return EMState(Field._wrap(grid, sol[:3].copy()), Field._wrap(grid, sol[3:].copy()), zeta)


def reduction_residual(med: MediumProfile, state: EMState, J: CurrentPair, zeta: complex) -> float:
    """ ||(Delta + zeta^2 eps_inf mu_inf) u + V(zeta) u - L1 J~ - L2 J~||_2 / ||u||_2 """
    asm = assemble_potentials(med, zeta)
    u = state_to_u(med, state)
    r = laplacian(u) + u * asm.helmholtz_zeta + asm.V.apply(u) - asm.source(tilde_currents(med, J))
    u_norm = lp_norm(u, 2)
    return lp_norm(r, 2) / u_norm if u_norm > 0 else lp_norm(r, 2)

def _flux_integral(med: MediumProfile, u: np.ndarray) -> float:
    """ integral of v . Re(u_m x conj(u_e)) """
    cross = cross_hat(u[3:], np.conj(u[:3]))
    return float(np.sum(med.v * cross.real) * med.grid.cell_volume)

def poynting_identity_check(med: MediumProfile, state: EMState, J: CurrentPair, zeta: complex) -> tuple[float, float, float]:
    """
    Both sides of
        int v . Re(u_m x conj u_e)
          = Im zeta int w |u|^2 + int w Re(mu^-1/2 conj(J_m) . u_m - eps^-1/2 J_e . conj(u_e)),
    w = eps mu - eps_inf mu_inf, and their gap relative to the magnitude of the terms.
    """
    u = state_to_u(med, state).values
    w, dv = med.weight, med.grid.cell_volume
    lhs = _flux_integral(med, u)
    mass = np.sum(np.abs(u) ** 2, axis=0)
    j_term = np.sum(np.conj(J.Jm.values) * u[3:], axis=0) / np.sqrt(med.mu) \
        - np.sum(J.Je.values * np.conj(u[:3]), axis=0) / np.sqrt(med.eps)
    rhs = complex(zeta).imag * float(np.sum(w * mass) * dv) + float(np.sum(w * j_term.real) * dv)
    scale = abs(lhs) + abs(complex(zeta).imag) * float(np.sum(np.abs(w) * mass) * dv) \
        + float(np.sum(np.abs(w * j_term)) * dv)
    gap = abs(lhs - rhs) / scale if scale > 0 else 0.0
    return lhs, rhs, gap

def injectivity_identity_rhs(med: MediumProfile, u: Field, zeta: complex) -> float:
    """ Im(zeta^2) int w |u|^2 - 2 Re(zeta) int v . Re(u_m x conj u_e); equals Im <V(zeta) u, u> for every u. """
    if u.m != 6 or u.grid != med.grid:
        raise ShapeError(f"Expected a 6-component field on {med.grid}, got m = {u.m}")
    zeta = complex(zeta)
    mass = np.sum(np.abs(u.values) ** 2, axis=0)
    return (zeta ** 2).imag * float(np.sum(med.weight * mass) * med.grid.cell_volume) \
        - 2 * zeta.real * _flux_integral(med, u.values)

def divergence_relation_check(med: MediumProfile, state: EMState) -> tuple[float, float]:
    """
    Relative L^2 size of div E + eps^-1 grad eps . E and div H + mu^-1 grad mu . H,
    both zero when div(eps E) = div(mu H) = 0.
    """
    def relation(f: Field, c: np.ndarray, grad: np.ndarray) -> float:
        r = divergence(f).values[0] + np.sum(grad * f.values, axis=0) / c
        norm = lp_norm(f, 2)
        res = float(np.sqrt(np.sum(np.abs(r) ** 2) * f.grid.cell_volume))
        return res / norm if norm > 0 else res
    return relation(state.E, med.eps, med.grad_eps), relation(state.H, med.mu, med.grad_mu)

def gradient_estimate_ratio(
    med: MediumProfile, state: EMState, J: CurrentPair, zeta: complex, r: LebesgueExponentLike
    ) -> float:
    """ (||grad E||_r + ||grad H||_r) / ((1 + |zeta|)(||E||_r + ||H||_r) + ||J_e||_r + ||J_m||_r) """
    num = lp_norm(spectral_gradient(state.E), r) + lp_norm(spectral_gradient(state.H), r)
    denom = (1 + abs(zeta)) * (lp_norm(state.E, r) + lp_norm(state.H, r)) + lp_norm(J.Je, r) + lp_norm(J.Jm, r)
    return num / denom if denom > 0 else 0.0

def extra_condition_ratio(
    med: MediumProfile, u: Field, J: CurrentPair, zeta: complex,
    q1: LebesgueExponentLike, q2: LebesgueExponentLike, p: LebesgueExponentLike,
    ) -> float:
    """
    |Im <u, V(zeta) u>| / (|Im zeta| (||u||_q1 + ||u||_q2)^2 + (||J_e||_p + ||J_m||_p)(||u||_q1 + ||u||_q2)),
    bounded on compact zeta sets for solutions u.
    """
    V = assemble_potentials(med, zeta).V
    num = abs(injectivity_functional(u, V))
    uq = lp_norm(u, q1) + lp_norm(u, q2)
    denom = abs(complex(zeta).imag) * uq ** 2 + (lp_norm(J.Je, p) + lp_norm(J.Jm, p)) * uq
    return num / denom if denom > 0 else 0.0
