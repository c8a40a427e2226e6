from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence
import math, sys
import numpy as np

from lapm.api import load_sweep_config, build_medium, build_currents
from lapm.eng.datatype import LebesgueExponent, SpectralParameter, LimitTag, CheckResult
from lapm.eng.grid_field import Grid, Field, periodized_gaussian, lp_norm
from lapm.eng.utils import parse_complex, fmt_complex, fmt_float, fmt_fraction
from lapm.eng import exponents as ex
from lapm.eng.free_resolvent import apply_free_resolvent, apply_free_resolvent_derivative, operator_norm_lower_bound
from lapm.eng.helmholtz import Potential, solve_lippmann_schwinger, min_singular_value_probe
from lapm.eng.maxwell import (
    prepare_currents, solve_maxwell_lap, constant_coefficient_oracle, reduction_residual,
    poynting_identity_check, injectivity_identity_rhs, divergence_relation_check, state_to_u, assemble_potentials,
)
from lapm.eng.helmholtz import injectivity_functional
from lapm.eng.sweep import run_lap_sweep, run_helmholtz_sweep, format_report_csv, save_sweep_fields
from lapm.eng.snapshot import read_snapshot, write_snapshot
from lapm.eng.error import UsageError, ShapeError
from lapm.eng.log import get_logger
from . import ArgumentParser, handle_exception, print_ok, print_warn, EXIT_OK, EXIT_USER, EXIT_NUMERICAL

logger = get_logger('lapm')

def _exponent(s: str) -> str:
    # validated later so that bad exponents map to exit code 1 through handle_exception
    return s

def _add_spectral_args(p):
    p.add_argument("--zeta", type=str, default=None, help="Interior spectral parameter, e.g. 1+0.5i")
    p.add_argument("--limit", choices=["plus", "minus"], default=None, help="Boundary value lambda +- i0")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="lambda > 0 for --limit")
    p.add_argument("--delta", type=float, default=None, help="Surrogate delta > 0 for --limit")

def _add_grid_args(p):
    p.add_argument("--n", type=int, default=3, help="Dimension for builtin profiles")
    p.add_argument("--N", type=int, default=32, help="Points per axis for builtin profiles")
    p.add_argument("--L", type=float, default=20.0, help="Box length for builtin profiles")

def _add_helmholtz_inputs(p, source: bool = True):
    if source:
        p.add_argument("--source", type=str, default="gaussian", help="LAPF file or builtin 'gaussian'")
    p.add_argument("--potential", type=str, default="bump",
                   help="LAPF file (m*m components) or builtin 'zero', 'bump', 'absorbing-bump'")
    p.add_argument("--height", type=float, default=1.0, help="Height of the builtin bump potential")
    p.add_argument("--width", type=float, default=1.5, help="Width of the builtin bump potential and source")
    p.add_argument("--m", type=int, default=1, help="System size for builtin profiles")
    _add_grid_args(p)

def parse_arguments(argv: Optional[Sequence[str]] = None):
    parser = ArgumentParser(prog="lapm", description="Limiting absorption numerics for perturbed Helmholtz and Maxwell systems.")
    sp = parser.add_subparsers(dest="command", required=True)

    # exponents
    sp_ex = sp.add_parser("exponents", help="Exponent regions and scaling laws")
    sp_ex_sub = sp_ex.add_subparsers(dest="action", required=True)
    p = sp_ex_sub.add_parser("check", help="Check an exponent tuple against a region")
    p.add_argument("--system", required=True, choices=[
        "gutierrez", "maxwell", "compactness", "simplified", "helmholtz-system", "bessel", "derivative"])
    for name in ("p", "ptilde", "q", "q1", "q2", "kappa", "kappa-tilde"):
        p.add_argument(f"--{name}", type=_exponent, default=None)
    p.add_argument("--n", type=int, default=3)
    p = sp_ex_sub.add_parser("scan", help="List admissible reciprocals k/D of a region")
    p.add_argument("--system", required=True, choices=["gutierrez", "bessel", "maxwell"])
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--denominator", type=int, default=12, help="Scan reciprocals k/D")
    for name in ("p", "ptilde", "q"):
        p.add_argument(f"--{name}", type=_exponent, default=None)
    p = sp_ex_sub.add_parser("bootstrap", help="Regularity bootstrap exponents")
    p.add_argument("--q0", type=_exponent, required=True)
    p.add_argument("--kappa-tilde", type=_exponent, required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--steps", type=int, default=5)
    p = sp_ex_sub.add_parser("scaling", help="|zeta| scaling exponents of the free resolvent")
    p.add_argument("--p", type=_exponent, required=True)
    p.add_argument("--q", type=_exponent, required=True)
    p.add_argument("--ptilde", type=_exponent, default=None, help="With ptilde, the derivative resolvent exponents")
    p.add_argument("--n", type=int, default=3)

    # resolvent
    sp_r = sp.add_parser("resolvent", help="Free resolvent R_0(zeta)")
    sp_r_sub = sp_r.add_subparsers(dest="action", required=True)
    p = sp_r_sub.add_parser("apply", help="Apply R_0(zeta) (or R_0(zeta) d_j) to a LAPF field")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--derivative", type=int, default=None, help="Axis j for R_0(zeta) d_j")
    p.add_argument("--mode", choices=["direct", "split"], default="direct")
    _add_spectral_args(p)
    p = sp_r_sub.add_parser("scaling", help="Probe ||R_0(zeta)||_{p->q} across |zeta|")
    p.add_argument("--p", type=_exponent, default="4/3")
    p.add_argument("--q", type=_exponent, default="4")
    p.add_argument("--zetas", type=str, default="1,4,16,64", help="Comma separated |zeta| values")
    p.add_argument("--angle", type=float, default=90.0, help="arg(zeta) in degrees")
    p.add_argument("--trials", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    _add_grid_args(p)

    # helmholtz
    sp_h = sp.add_parser("helmholtz", help="Lippmann-Schwinger equation (I - K(zeta)) u = R_0(zeta) f")
    sp_h_sub = sp_h.add_subparsers(dest="action", required=True)
    p = sp_h_sub.add_parser("solve", help="Solve for u")
    _add_helmholtz_inputs(p)
    _add_spectral_args(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--output", type=str, default=None, help="LAPF file for the solution")
    p = sp_h_sub.add_parser("probe", help="Estimate the smallest singular value of I - K(zeta)")
    _add_helmholtz_inputs(p, source=False)
    _add_spectral_args(p)
    p.add_argument("--probe-dim", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)

    # maxwell
    sp_m = sp.add_parser("maxwell", help="Maxwell solves driven by a sweep config")
    sp_m_sub = sp_m.add_subparsers(dest="action", required=True)
    for action, helps in (("solve", "Solve at zeta = omega +- i delta"),
                          ("oracle", "Constant-coefficient Fourier solve"),
                          ("verify", "Solve and evaluate the reduction and energy identities")):
        p = sp_m_sub.add_parser(action, help=helps)
        p.add_argument("--config", required=True)
        p.add_argument("--delta", type=float, default=None, help="Defaults to delta0 of the config")
        if action != "verify":
            p.add_argument("--output-dir", type=str, default=None, help="Directory for E.lapf and H.lapf")

    # lap
    sp_l = sp.add_parser("lap", help="Limiting absorption sweeps")
    sp_l_sub = sp_l.add_subparsers(dest="action", required=True)
    p = sp_l_sub.add_parser("sweep", help="Maxwell sweep delta -> 0 from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", type=str, default=None, help="CSV report path, stdout if omitted")
    p.add_argument("--save-fields", type=str, default=None, help="Directory for E_k.lapf / H_k.lapf")
    p = sp_l_sub.add_parser("helmholtz", help="Helmholtz-system sweep lambda +- i delta")
    _add_helmholtz_inputs(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--sign", choices=["+", "-"], default="+")
    p.add_argument("--deltas", type=str, default="1,0.5,0.25,0.125")
    p.add_argument("--q", type=_exponent, default="4")
    p.add_argument("--tol", type=float, default=1e-10)

    return parser.parse_args(argv)


def _spectral_parameter(args) -> SpectralParameter:
    if args.limit is not None:
        if args.zeta is not None:
            raise UsageError("Give either --zeta or --limit, not both")
        if args.lam is None:
            raise UsageError("--limit needs --lambda")
        tag = LimitTag.PLUS_I0 if args.limit == "plus" else LimitTag.MINUS_I0
        return SpectralParameter(complex(args.lam), tag, args.delta)
    if args.zeta is None:
        raise UsageError("Give --zeta, or --limit with --lambda and --delta")
    try:
        return SpectralParameter(parse_complex(args.zeta))
    except ValueError as e:
        raise UsageError(str(e)) from e

def _float_list(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as e:
        raise UsageError(f"Invalid number list {s!r}") from e

def _builtin_grid(args) -> Grid:
    return Grid(args.n, args.N, args.L)

def _load_source(args) -> Field:
    if args.source == "gaussian":
        grid = _builtin_grid(args)
        g = periodized_gaussian(grid, [grid.L / 2] * grid.n, args.width)
        return Field(grid, np.repeat(g[None], args.m, axis=0))
    return read_snapshot(args.source)

def _load_potential(args, grid: Optional[Grid] = None) -> Potential:
    name = args.potential
    if name in ("zero", "bump", "absorbing-bump"):
        grid = grid or _builtin_grid(args)
        m = args.m
        if name == "zero":
            return Potential.zeros(grid, m)
        g = args.height * periodized_gaussian(grid, [grid.L / 2] * grid.n, args.width)
        return Potential.scalar(grid, g if name == "bump" else 1j * g, m)
    V = Potential.from_field(read_snapshot(name))
    if grid is not None and V.grid != grid:
        raise ShapeError(f"Potential lives on {V.grid}, the source on {grid}")
    return V

def _print_check(res: CheckResult) -> int:
    if res:
        print_ok(str(res))
        return EXIT_OK
    print(str(res))
    return EXIT_USER

def _need(args, *names: str):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError(f"--system {args.system} needs " + ", ".join(f"--{n}" for n in missing))


@handle_exception
def cmd_exponents(args) -> int:
    if args.action == "check":
        s = args.system
        if s == "gutierrez":
            _need(args, "p", "q"); return _print_check(ex.check_gutierrez(args.p, args.q, args.n))
        if s == "maxwell":
            _need(args, "p", "ptilde", "q"); return _print_check(ex.check_maxwell_conditions(args.p, args.ptilde, args.q))
        if s == "compactness":
            _need(args, "q1", "q2", "kappa", "kappa-tilde")
            return _print_check(ex.check_compactness_conditions(args.q1, args.q2, args.kappa, args.kappa_tilde, args.n))
        if s == "simplified":
            _need(args, "q", "kappa-tilde"); return _print_check(ex.check_simplified_conditions(args.q, args.kappa_tilde, args.n))
        if s == "helmholtz-system":
            _need(args, "p", "q")
            return _print_check(ex.check_helmholtz_system_conditions(args.p, args.q, args.n, args.kappa_tilde))
        if s == "bessel":
            _need(args, "p", "q"); return _print_check(ex.check_bessel_conditions(args.p, args.q, args.n))
        if s == "derivative":
            _need(args, "p", "ptilde", "q"); return _print_check(ex.check_derivative_conditions(args.p, args.ptilde, args.q, args.n))

    if args.action == "scan":
        D = args.denominator
        if D < 1:
            raise UsageError("--denominator must be positive")
        recips = [LebesgueExponent(Fraction(k, D)) for k in range(D + 1)]
        if args.system == "maxwell":
            _need(args, "p", "ptilde")
            hits = [r for r in recips if ex.check_maxwell_conditions(args.p, args.ptilde, r)]
            print("admissible 1/q: " + " ".join(fmt_fraction(r.reciprocal) for r in hits))
            if args.q is not None:
                bracket = ex.find_maxwell_bracket(args.p, args.ptilde, args.q, scan_denominator=D)
                if bracket is None:
                    print_warn(f"no non-degenerate bracket around q = {args.q}")
                else:
                    print(f"bracket: q1 = {bracket[0]}, q2 = {bracket[1]}")
            return EXIT_OK if hits else EXIT_USER
        check = ex.check_gutierrez if args.system == "gutierrez" else ex.check_bessel_conditions
        hits = [(a, b) for a in recips for b in recips if check(a, b, args.n)]
        for a, b in hits:
            print(f"1/p = {fmt_fraction(a.reciprocal)}, 1/q = {fmt_fraction(b.reciprocal)}")
        print(f"{len(hits)} admissible pairs over reciprocals k/{D}")
        return EXIT_OK

    if args.action == "bootstrap":
        seq = ex.bootstrap_sequence(args.q0, args.kappa_tilde, args.n, args.steps)
        for j, q in enumerate(seq):
            print(f"q_{j} = {q}  (1/q = {fmt_fraction(q.reciprocal)})")
        return EXIT_OK

    if args.action == "scaling":
        if args.ptilde is None:
            print(f"s = {fmt_fraction(ex.scaling_exponent(args.p, args.q, args.n))}")
        else:
            s1, s2 = ex.derivative_scaling_exponents(args.p, args.ptilde, args.q, args.n)
            print(f"s1 = {fmt_fraction(s1)}, s2 = {fmt_fraction(s2)}")
        return EXIT_OK
    raise UsageError(f"Unknown action {args.action}")

@handle_exception
def cmd_resolvent(args) -> int:
    if args.action == "apply":
        z = _spectral_parameter(args)
        f = read_snapshot(args.input)
        if args.derivative is None:
            out = apply_free_resolvent(f, z)
        else:
            out = apply_free_resolvent_derivative(f, z, args.derivative, mode=args.mode)
        write_snapshot(out, args.output)
        print_ok(f"R_0 at {z} written to {args.output}")
        return EXIT_OK

    if args.action == "scaling":
        grid = _builtin_grid(args)
        s = ex.scaling_exponent(args.p, args.q, args.n)
        angle = math.radians(args.angle)
        print(f"|zeta|,ratio,normalized  (s = {fmt_fraction(s)})")
        for r in _float_list(args.zetas):
            zeta = complex(r * math.cos(angle), r * math.sin(angle))
            bound = operator_norm_lower_bound(zeta, args.p, args.q, args.trials, grid, seed=args.seed)
            print(f"{fmt_float(r)},{fmt_float(bound)},{fmt_float(bound * r ** -float(s))}")
        return EXIT_OK
    raise UsageError(f"Unknown action {args.action}")

@handle_exception
def cmd_helmholtz(args) -> int:
    z = _spectral_parameter(args)
    if args.action == "solve":
        f = _load_source(args)
        V = _load_potential(args, f.grid)
        rep = solve_lippmann_schwinger(f, z, V, tol=args.tol, max_iter=args.max_iter)
        print(str(rep))
        if args.output is not None:
            write_snapshot(rep.solution, args.output)
            print_ok(f"Solution written to {args.output}")
        return EXIT_OK

    if args.action == "probe":
        V = _load_potential(args)
        sigma = min_singular_value_probe(z, V, probe_dim=args.probe_dim, seed=args.seed)
        print(f"sigma_min estimate at {z}: {fmt_float(sigma)}")
        return EXIT_OK
    raise UsageError(f"Unknown action {args.action}")

def _write_state(state, directory: Optional[str]):
    if directory is None:
        return
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_snapshot(state.E, d / "E.lapf")
    write_snapshot(state.H, d / "H.lapf")
    print_ok(f"E.lapf and H.lapf written to {d}")

@handle_exception
def cmd_maxwell(args) -> int:
    cfg = load_sweep_config(args.config)
    delta = cfg.delta0 if args.delta is None else args.delta
    if not delta > 0:
        raise UsageError(f"--delta must be positive, got {delta}")
    zeta = complex(cfg.omega, cfg.sign * delta)
    sigma = math.sqrt(delta) * cfg.grid.h if cfg.currents.smoothing else 0.0
    J = prepare_currents(*build_currents(cfg), sigma=sigma)

    if args.action == "oracle":
        m = cfg.medium
        eps0 = m.eps_inf if m.eps0 is None else m.eps0
        mu0 = m.mu_inf if m.mu0 is None else m.mu0
        if m.family != "constant":
            print_warn(f"oracle uses the constant medium eps0={eps0:g}, mu0={mu0:g}, ignoring the {m.family} profile")
        state = constant_coefficient_oracle(eps0, mu0, J, zeta)
        print(f"oracle at {fmt_complex(zeta)}: ||E||_2 = {fmt_float(lp_norm(state.E, 2))}, ||H||_2 = {fmt_float(lp_norm(state.H, 2))}")
        _write_state(state, args.output_dir)
        return EXIT_OK

    med = build_medium(cfg)
    state, rep = solve_maxwell_lap(med, J, cfg.omega, delta, cfg.sign, tol=cfg.tol, max_iter=cfg.max_iter)
    if args.action == "solve":
        u = state_to_u(med, state)
        gap = poynting_identity_check(med, state, J, zeta)[2]
        print("delta,norm_u_q,norm_EH_q,res1,res2,poynting_gap")
        print(",".join(fmt_float(x) for x in (
            delta, lp_norm(u, cfg.q), lp_norm(state.E, cfg.q) + lp_norm(state.H, cfg.q), rep.res1, rep.res2, gap)))
        _write_state(state, args.output_dir)
        return EXIT_OK

    if args.action == "verify":
        u = state_to_u(med, state)
        lhs, rhs, gap = poynting_identity_check(med, state, J, zeta)
        inj = injectivity_functional(u, assemble_potentials(med, zeta).V)
        inj_rhs = injectivity_identity_rhs(med, u, zeta)
        res_e, res_h = divergence_relation_check(med, state)
        print(str(rep))
        print(f"reduction residual      {fmt_float(reduction_residual(med, state, J, zeta))}")
        print(f"poynting lhs, rhs, gap  {fmt_float(lhs)}, {fmt_float(rhs)}, {fmt_float(gap)}")
        print(f"injectivity identity    {fmt_float(inj)} vs {fmt_float(inj_rhs)}")
        print(f"divergence relations    {fmt_float(res_e)}, {fmt_float(res_h)}")
        return EXIT_OK
    raise UsageError(f"Unknown action {args.action}")

@handle_exception
def cmd_lap(args) -> int:
    if args.action == "sweep":
        cfg = load_sweep_config(args.config)
        report = run_lap_sweep(cfg, build_medium(cfg), build_currents(cfg))
        text = format_report_csv(report)
        if args.output is None:
            print(text, end="")
        else:
            Path(args.output).write_text(text, encoding="utf-8")
            print_ok(f"Report written to {args.output}")
        if args.save_fields is not None:
            paths = save_sweep_fields(report, args.save_fields)
            print_ok(f"{len(paths)} snapshots written to {args.save_fields}")
        if report.partial:
            print_warn("Some solves failed, the report is partial")
            return EXIT_NUMERICAL
        return EXIT_OK

    if args.action == "helmholtz":
        f = _load_source(args)
        V = _load_potential(args, f.grid)
        sign = 1 if args.sign == "+" else -1
        rep = run_helmholtz_sweep(f, V, args.lam, sign, _float_list(args.deltas), args.q, tol=args.tol)
        print("delta,norm_u_q,diff_prev,iterations")
        for row in rep.rows:
            print(f"{fmt_float(row.delta)},{fmt_float(row.norm_u_q)},{fmt_float(row.diff_prev)},{row.iterations}")
        print(f"rate,{fmt_float(rep.rate)}")
        return EXIT_OK
    raise UsageError(f"Unknown action {args.action}")


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command == "exponents":
        return cmd_exponents(args)
    if args.command == "resolvent":
        return cmd_resolvent(args)
    if args.command == "helmholtz":
        return cmd_helmholtz(args)
    if args.command == "maxwell":
        return cmd_maxwell(args)
    if args.command == "lap":
        return cmd_lap(args)
    return EXIT_USER

def main():
    sys.exit(cli_main())
