"""
Limiting absorption sweeps: solve along zeta = omega +- i delta_k, delta_k = delta0 ratio^k,
measure successor differences, fit their rate, and extrapolate the limit fields.
"""
from __future__ import annotations
from typing import Literal, Optional, Sequence
from pathlib import Path
import dataclasses, io, math, csv
import numpy as np

from .config import DEFAULT_TOL, DEFAULT_MAX_ITER, MEDIUM_DECAY_THRESHOLD
from .datatype import LebesgueExponent, LebesgueExponentLike, CurrentPair, EMState, SpectralParameter
from .grid_field import Grid, Field, lp_norm, periodized_gaussian, random_band_limited
from .exponents import check_maxwell_conditions
from .maxwell import MediumProfile, build_bump_medium, prepare_currents, solve_maxwell_lap, state_to_u, \
    poynting_identity_check
from .helmholtz import Potential, solve_lippmann_schwinger
from .snapshot import read_snapshot, write_snapshot
from .bounded_pool import ordered_map
from .utils import fmt_float
from .error import AdmissibilityError, ParameterError, MediumError, ShapeError, LAPMExceptionBase
from .log import get_logger, log_access

logger = get_logger('sweep')

@dataclasses.dataclass
class MediumSpec:
    family: Literal['constant', 'bump'] = 'constant'
    eps_inf: float = 1.0
    mu_inf: float = 1.0
    eps0: Optional[float] = None            # constant family, defaults to eps_inf
    mu0: Optional[float] = None
    eps_amplitude: float = 0.0              # bump family
    mu_amplitude: float = 0.0
    centers: list[list[float]] = dataclasses.field(default_factory=list)
    widths: list[float] = dataclasses.field(default_factory=list)
    decay_threshold: float = MEDIUM_DECAY_THRESHOLD

    def build(self, grid: Grid) -> MediumProfile:
        if self.family == 'constant':
            eps0 = self.eps_inf if self.eps0 is None else self.eps0
            mu0 = self.mu_inf if self.mu0 is None else self.mu0
            return MediumProfile.constant(grid, eps0, mu0,
                                          self.eps_inf, self.mu_inf, decay_threshold=self.decay_threshold)
        if self.family == 'bump':
            return build_bump_medium(grid, self.eps_inf, self.mu_inf, self.eps_amplitude, self.mu_amplitude,
                                     self.centers, self.widths, decay_threshold=self.decay_threshold)
        raise MediumError(f"Unknown medium family {self.family!r}")

@dataclasses.dataclass
class CurrentSpec:
    """
    Raw (unprojected) currents. Families:
    cosine    J = a cos(xi_k . x) with integer wave index `k`
    gaussian  J = a G(x; center, width)
    random    real band-limited, |k_j| <= bandwidth, unit L^2 norm per current
    lapf      J_e, J_m read from snapshot files
    """
    family: Literal['cosine', 'gaussian', 'random', 'lapf'] = 'gaussian'
    je: list[float] = dataclasses.field(default_factory=lambda: [0.0, 1.0, 0.0])
    jm: list[float] = dataclasses.field(default_factory=lambda: [0.0, 0.0, 0.0])
    k: list[int] = dataclasses.field(default_factory=lambda: [1, 0, 0])
    center: Optional[list[float]] = None    # defaults to the box center
    width: float = 1.0
    bandwidth: int = 2
    je_path: Optional[str] = None
    jm_path: Optional[str] = None
    smoothing: bool = True                  # mollify with sigma(delta) = delta^1/2 h

    def build(self, grid: Grid, seed: int = 0) -> tuple[Field, Field]:
        if self.family == 'cosine':
            phase = np.tensordot(np.asarray(self.k, dtype=float) * (2 * math.pi / grid.L), grid.coordinates, axes=1)
            profile = np.cos(phase)
        elif self.family == 'gaussian':
            center = self.center if self.center is not None else [grid.L / 2] * grid.n
            profile = periodized_gaussian(grid, center, self.width)
        elif self.family == 'random':
            rng = np.random.default_rng(seed)
            je = random_band_limited(grid, 3, self.bandwidth, rng, real=True)
            jm = random_band_limited(grid, 3, self.bandwidth, rng, real=True)
            # an all-zero `jm` switches the magnetic current off
            return je, jm if np.any(self.jm) else Field.zeros(grid, 3)
        elif self.family == 'lapf':
            if self.je_path is None:
                raise ParameterError("The lapf current family needs je_path")
            je = read_snapshot(self.je_path)
            jm = read_snapshot(self.jm_path) if self.jm_path is not None else Field.zeros(grid, 3)
            for f in (je, jm):
                if f.grid != grid or f.m != 3:
                    raise ShapeError(f"Current snapshot {f} does not match the 3-component fields on {grid}")
            return je, jm
        else:
            raise ParameterError(f"Unknown current family {self.family!r}")
        def vec(a: Sequence[float]) -> Field:
            return Field._wrap(grid, np.asarray(a, dtype=np.complex128).reshape((3,) + (1,) * grid.n) * profile[None])
        return vec(self.je), vec(self.jm)

@dataclasses.dataclass
class SweepConfig:
    grid: Grid
    omega: float
    medium: MediumSpec = dataclasses.field(default_factory=MediumSpec)
    currents: CurrentSpec = dataclasses.field(default_factory=CurrentSpec)
    sign: int = 1
    delta0: float = 0.5
    ratio: float = 0.5
    count: int = 6
    p: LebesgueExponentLike = '6/5'
    p_tilde: LebesgueExponentLike = 2
    q: LebesgueExponentLike = 4
    q1: Optional[LebesgueExponentLike] = None
    q2: Optional[LebesgueExponentLike] = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    seed: int = 0
    c_floor: Optional[float] = None

    def __post_init__(self):
        for name in ('p', 'p_tilde', 'q', 'q1', 'q2'):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, LebesgueExponent.of(v))
        if self.omega == 0 or not math.isfinite(self.omega):
            raise ParameterError(f"omega must be a nonzero real, got {self.omega}")
        if self.sign not in (1, -1):
            raise ParameterError(f"sign must be +1 or -1, got {self.sign}")
        if not self.delta0 > 0:
            raise ParameterError(f"delta0 must be positive, got {self.delta0}")
        if not 0 < self.ratio < 1:
            raise ParameterError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.count < 3:
            raise ParameterError(f"A sweep needs count >= 3, got {self.count}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")

    @property
    def deltas(self) -> list[float]:
        return [self.delta0 * self.ratio ** k for k in range(self.count)]

    def floor(self) -> float:
        """ Smallest admissible delta, c_floor / L with c_floor defaulting to 2 (omega^2 eps_inf mu_inf)^1/2. """
        c = self.c_floor
        if c is None:
            c = 2 * math.sqrt(self.omega ** 2 * self.medium.eps_inf * self.medium.mu_inf)
        return c / self.grid.L

    def check(self):
        """ Admissibility and floor checks that must pass before any solve. """
        res = check_maxwell_conditions(self.p, self.p_tilde, self.q)
        if not res:
            raise AdmissibilityError(str(res), violations=res.violations)
        floor = self.floor()
        below = [d for d in self.deltas if d < floor]
        if below:
            raise ParameterError(
                f"{len(below)} of the sweep deltas fall below the resolution floor {floor:.4g} "
                f"(smallest {min(below):.4g}); raise delta0 or ratio, enlarge L, or lower c_floor"
            )


@dataclasses.dataclass
class SweepRow:
    delta: float
    norm_u_q: float
    norm_EH_q: float
    res1: float
    res2: float
    poynting_gap: float
    diff_prev: float            # ||u_k - u_{k-1}||_q, nan for the first row
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

@dataclasses.dataclass
class SweepReport:
    rows: list[SweepRow]
    rate: float                 # fitted exponent of diff_prev against delta
    rate_r2: float
    C_omega: float              # (||E||_q + ||H||_q) / (||J||_p + ||J||_p~) at the smallest delta
    states: list[Optional[EMState]] = dataclasses.field(default_factory=list, repr=False)
    currents: list[Optional[CurrentPair]] = dataclasses.field(default_factory=list, repr=False)
    limit: Optional[EMState] = dataclasses.field(default=None, repr=False)

    @property
    def partial(self) -> bool:
        return any(not r.ok for r in self.rows)


def fit_power_law(xs: Sequence[float], ys: Sequence[float], min_points: int = 3) -> tuple[float, float, float]:
    """ Least squares of log y on log x; returns (slope, intercept, r^2). """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError("xs and ys must be flat sequences of equal length")
    if len(x) < min_points:
        raise ParameterError(f"A power-law fit needs at least {min_points} points, got {len(x)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(x > 0) and np.all(y > 0)):
        raise ParameterError("A power-law fit needs strictly positive, finite data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    fit = slope * lx + intercept
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ly - fit) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2

def richardson_extrapolate(u_prev: Field, u_last: Field, ratio: float, rate: float) -> Field:
    """
    Two-point extrapolation to delta -> 0 for u(delta) = u0 + c delta^rate, with
    delta_last = ratio * delta_prev: u0 = u_last - (u_prev - u_last) / (ratio^-rate - 1).
    """
    if not (math.isfinite(rate) and rate > 0):
        logger.warning(f"No extrapolation with rate {rate}, returning the last iterate")
        return Field._wrap(u_last.grid, u_last.values.copy())
    return u_last - (u_prev - u_last) / (ratio ** -rate - 1)

def _fit_rate(deltas: Sequence[float], diffs: Sequence[float]) -> tuple[float, float]:
    pts = [(d, y) for d, y in zip(deltas, diffs) if math.isfinite(y) and y > 0]
    if len(pts) < 2:
        return math.nan, math.nan
    slope, _, r2 = fit_power_law([p[0] for p in pts], [p[1] for p in pts], min_points=2)
    return slope, r2


@log_access(include_args=False, logger=logger)
def run_lap_sweep(
    cfg: SweepConfig, medium: Optional[MediumProfile] = None, raw_currents: Optional[tuple[Field, Field]] = None,
    ) -> SweepReport:
    """
    Per delta: mollify with sigma = delta^1/2 h, project, and solve at omega +- i delta.
    A failing solve yields a row with its error message and nan entries.
    """
    cfg.check()
    grid = cfg.grid
    med = medium if medium is not None else cfg.medium.build(grid)
    raw_je, raw_jm = raw_currents if raw_currents is not None else cfg.currents.build(grid, cfg.seed)
    deltas = cfg.deltas
    logger.info(f"LAP sweep omega={cfg.omega:g} sign={cfg.sign:+d} over {len(deltas)} deltas "
                f"[{deltas[0]:.4g} .. {deltas[-1]:.4g}] on {grid}")

    def solve_one(delta: float):
        sigma = math.sqrt(delta) * grid.h if cfg.currents.smoothing else 0.0
        J = prepare_currents(raw_je, raw_jm, sigma)
        try:
            state, rep = solve_maxwell_lap(med, J, cfg.omega, delta, cfg.sign, tol=cfg.tol, max_iter=cfg.max_iter)
        except LAPMExceptionBase as e:
            logger.error(f"Solve at delta={delta:g} failed: {e}")
            return J, None, None, str(e)
        return J, state, rep, None

    results = ordered_map(solve_one, deltas)
    rows: list[SweepRow] = []
    us: list[Optional[Field]] = []
    for delta, (J, state, rep, err) in zip(deltas, results):
        if state is None:
            rows.append(SweepRow(delta, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, error=err))
            us.append(None)
            continue
        u = state_to_u(med, state)
        zeta = complex(cfg.omega, cfg.sign * delta)
        prev = us[-1] if us else None
        diff = lp_norm(u - prev, cfg.q) if prev is not None else math.nan
        rows.append(SweepRow(
            delta, lp_norm(u, cfg.q), lp_norm(state.E, cfg.q) + lp_norm(state.H, cfg.q),
            rep.res1, rep.res2, poynting_identity_check(med, state, J, zeta)[2], diff,
        ))
        us.append(u)

    rate, r2 = _fit_rate(deltas[1:], [r.diff_prev for r in rows[1:]])
    states = [r[1] for r in results]
    currents = [r[0] for r in results]

    C_omega = math.nan
    limit = None
    if rows[-1].ok:
        J = Field.stack([currents[-1].Je, currents[-1].Jm])
        j_norm = lp_norm(J, cfg.p) + lp_norm(J, cfg.p_tilde)
        C_omega = rows[-1].norm_EH_q / j_norm if j_norm > 0 else math.nan
        if rows[-2].ok:
            s_prev, s_last = states[-2], states[-1]
            limit = EMState(
                richardson_extrapolate(s_prev.E, s_last.E, cfg.ratio, rate),
                richardson_extrapolate(s_prev.H, s_last.H, cfg.ratio, rate),
                complex(cfg.omega),
            )
    report = SweepReport(rows, rate, r2, C_omega, states, currents, limit)
    logger.info(f"LAP sweep done: rate={rate:.4g} (r2={r2:.4g}), C(omega)={C_omega:.4g}, partial={report.partial}")
    return report

def save_sweep_fields(report: SweepReport, directory: str | Path) -> list[Path]:
    """ E_k.lapf and H_k.lapf for every successful delta index k. """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for k, state in enumerate(report.states):
        if state is None:
            continue
        for name, f in (('E', state.E), ('H', state.H)):
            path = d / f"{name}_{k}.lapf"
            write_snapshot(f, path)
            out.append(path)
    return out


CSV_COLUMNS = ('delta', 'norm_u_q', 'norm_EH_q', 'res1', 'res2', 'poynting_gap', 'diff_prev')

def format_report_csv(report: SweepReport) -> str:
    """ Header row, one row per delta (decreasing), then the `rate` and `C_omega` footer rows. """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        writer.writerow([fmt_float(getattr(row, c)) for c in CSV_COLUMNS])
    writer.writerow(['rate', fmt_float(report.rate)])
    writer.writerow(['C_omega', fmt_float(report.C_omega)])
    return buf.getvalue()

def write_report_csv(report: SweepReport, path: str | Path):
    Path(path).write_text(format_report_csv(report), encoding='utf-8')


@dataclasses.dataclass
class HelmholtzSweepRow:
    delta: float
    norm_u_q: float
    diff_prev: float
    iterations: int

@dataclasses.dataclass
class HelmholtzSweepReport:
    rows: list[HelmholtzSweepRow]
    rate: float
    rate_r2: float
    solutions: list[Field] = dataclasses.field(default_factory=list, repr=False)

def run_helmholtz_sweep(
    f: Field, V: Potential, lam: float, sign: int, deltas: Sequence[float], q: LebesgueExponentLike,
    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
    ) -> HelmholtzSweepReport:
    """ Lippmann-Schwinger solves at lambda +- i delta for decreasing delta, with the fitted Cauchy rate. """
    if sign not in (1, -1):
        raise ParameterError(f"sign must be +1 or -1, got {sign}")
    deltas = sorted((float(d) for d in deltas), reverse=True)
    z = SpectralParameter.plus(lam) if sign > 0 else SpectralParameter.minus(lam)
    reports = ordered_map(lambda d: solve_lippmann_schwinger(f, z, V, tol=tol, max_iter=max_iter, delta=d), deltas)
    rows = []
    for i, (d, rep) in enumerate(zip(deltas, reports)):
        diff = lp_norm(rep.solution - reports[i - 1].solution, q) if i > 0 else math.nan
        rows.append(HelmholtzSweepRow(d, lp_norm(rep.solution, q), diff, rep.iterations))
    rate, r2 = _fit_rate(deltas[1:], [r.diff_prev for r in rows[1:]])
    logger.info(f"Helmholtz sweep at lambda={lam:g}: rate={rate:.4g} over {len(deltas)} deltas")
    return HelmholtzSweepReport(rows, rate, r2, [r.solution for r in reports])
