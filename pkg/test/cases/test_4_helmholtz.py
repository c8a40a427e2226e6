import math
import numpy as np
import pytest
from .common import rel_err
from lapm.eng.grid_field import Grid, Field, inner, lp_norm, random_band_limited, periodized_gaussian
from lapm.eng.datatype import SpectralParameter
from lapm.eng.free_resolvent import apply_free_resolvent
from lapm.eng.helmholtz import (
    Potential, decompose_potential, apply_bs_operator, apply_bs_adjoint, neumann_bound,
    solve_lippmann_schwinger, dense_matrix, injectivity_functional, sphere_trace_l2,
    verify_im_resolvent_identity, min_singular_value_probe, k_norm_ratio, injectivity_estimate_ratio,
)
from lapm.eng.error import ParameterError, ShapeError, ConvergenceError

G8 = Grid(3, 8, 2 * math.pi)
G16 = Grid(3, 16, 2 * math.pi)

def random_potential(grid: Grid, m: int, scale: float, rng: np.random.Generator) -> Potential:
    shape = (m, m) + grid.shape
    return Potential(grid, scale * (rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)))

def bump(grid: Grid, height: float, width: float = 1.0) -> np.ndarray:
    return height * periodized_gaussian(grid, [grid.L / 2] * grid.n, width)

def test_potential_basics():
    rng = np.random.default_rng(0)
    V = Potential.scalar(G8, bump(G8, 2.0), m=2)
    assert V.hermitian and V.m == 2, "Real scalar potentials are Hermitian"
    W = random_potential(G8, 2, 1.0, rng)
    assert not W.hermitian, "A random complex matrix potential is not Hermitian"
    with pytest.raises(ParameterError):
        Potential(G8, W.values, hermitian=True)
    back = Potential.from_field(W.as_field())
    assert np.array_equal(back.values, W.values), "as_field / from_field should invert each other"
    with pytest.raises(ShapeError):
        Potential.from_field(Field.zeros(G8, 3))
    assert V.sup_norm() == pytest.approx(float(np.max(bump(G8, 2.0)))), "Sup norm of a scalar potential"
    sym = W + W.adjoint()
    assert sym.hermitian, "V + V* is Hermitian"

def test_decompose_potential():
    grid = Grid(3, 32, 10.0)
    V = Potential.scalar(grid, bump(grid, 10.0))
    eta = 0.1
    v1, v2 = decompose_potential(V, '3/2', 2, eta)
    assert np.array_equal(v1.values + v2.values, V.values), "V1 + V2 must equal V exactly"
    n2 = v2.lp_norm(2)
    assert 0.9 * eta <= n2 <= eta, f"||V2||_2 = {n2} should sit just below eta"
    v1_small, v2_small = decompose_potential(V, '3/2', 2, eta / 10)
    assert v2_small.lp_norm(2) <= n2 and v1_small.lp_norm('3/2') >= v1.lp_norm('3/2'), "Split is monotone in eta"
    big_eta = 2 * V.lp_norm(2)
    v1, v2 = decompose_potential(V, '3/2', 2, big_eta)
    assert v1.sup_norm() == 0 and np.array_equal(v2.values, V.values), "Small potentials go entirely into V2"
    with pytest.raises(ParameterError):
        decompose_potential(V, '3/2', 2, 0.0)
    split = V.with_split(v1, v2, '3/2', 2)
    assert split.split is not None and split.split_exponents[1].reciprocal == 0.5

def test_bs_operator_on_plane_wave():
    c, zeta, k = 0.7, complex(0.5, 1.0), [1, 1, 0]
    u = Field.plane_wave(G8, k, [1, 0, 0])
    V = Potential.scalar(G8, c, m=3)
    out = apply_bs_operator(u, zeta, V)
    assert rel_err(out.values, -c * u.values / (zeta - 2)) < 1e-12, "K e^{ik.x} e1 = -c e^{ik.x} e1 / (zeta - |k|^2)"
    assert lp_norm(apply_bs_operator(u, zeta, Potential.zeros(G8, 3)), 2) == 0, "V = 0 gives K = 0"
    with pytest.raises(ShapeError):
        apply_bs_operator(Field.zeros(G8, 2), zeta, V)

def test_bs_adjoint():
    rng = np.random.default_rng(1)
    V = random_potential(G8, 2, 1.0, rng)
    u = random_band_limited(G8, 2, 3, rng)
    w = random_band_limited(G8, 2, 3, rng)
    zeta = complex(1.5, 0.3)
    a = inner(apply_bs_operator(u, zeta, V), w)
    b = inner(u, apply_bs_adjoint(w, zeta, V))
    assert abs(a - b) <= 1e-10 * abs(a), "<K u, w> should equal <u, K* w>"

def test_solve_free_and_constant():
    rng = np.random.default_rng(2)
    f = random_band_limited(G8, 1, 3, rng)
    rep = solve_lippmann_schwinger(f, 1j, Potential.zeros(G8))
    assert rep.method == 'free' and rep.iterations == 0, "V = 0 needs no iterations"
    assert rel_err(rep.solution.values, apply_free_resolvent(f, 1j).values) < 1e-14, "V = 0 gives u = R_0 f"

    # (I - K) u = R_0 f with V = c: u_hat = f_hat / (zeta - |k|^2 + c)
    V = Potential.scalar(G8, 1.0)
    rep = solve_lippmann_schwinger(f, 1j, V, tol=1e-12)
    expected = Field.from_fourier(G8, f.fourier() / (1j - G8.xi_sq + 1.0)[None])
    assert rep.converged and rep.method == "gmres", "Solve should reach the tolerance through GMRES"
    assert rel_err(rep.solution.values, expected.values) < 1e-8, "Constant potential solution is mode-wise"

def test_solve_matches_dense_oracle():
    rng = np.random.default_rng(3)
    for zeta in (complex(1.5, 0.5), complex(-2.0, 1.0), complex(2.5, -0.2)):
        V = random_potential(G8, 1, 0.3, rng)
        f = random_band_limited(G8, 1, 3, rng)
        rep = solve_lippmann_schwinger(f, zeta, V, tol=1e-12)
        A = dense_matrix(G8, zeta, V)
        rhs = apply_free_resolvent(f, zeta).values.ravel()
        u = np.linalg.solve(A, rhs)
        assert rel_err(rep.solution.values.ravel(), u) < 1e-8, f"Matrix-free and dense solves differ at zeta={zeta}"

def test_solve_matches_dense_oracle_random_draws():
    rng = np.random.default_rng(11)
    for case in range(20):
        m = 1 + case % 2
        zeta = complex(rng.uniform(-3.0, 3.0), rng.choice([-1, 1]) * rng.uniform(0.4, 1.5))
        V = random_potential(G8, m, 0.3 if m == 1 else 0.2, rng)
        f = random_band_limited(G8, m, 3, rng)
        rep = solve_lippmann_schwinger(f, zeta, V, tol=1e-12)
        u = np.linalg.solve(dense_matrix(G8, zeta, V), apply_free_resolvent(f, zeta).values.ravel())
        assert rel_err(rep.solution.values.ravel(), u) < 1e-8, f"Case {case}: dense and matrix-free solves differ at zeta={zeta}"

def test_neumann_regime_and_failure():
    rng = np.random.default_rng(4)
    f = random_band_limited(G8, 1, 3, rng)
    V = Potential.scalar(G8, 0.1)
    assert neumann_bound(G8, -1.0, V) == pytest.approx(0.1), "Bound at zeta = -1 is sup|V| / 1"
    rep = solve_lippmann_schwinger(f, -1.0, V, tol=1e-12)
    assert rep.method == 'neumann' and rep.converged, "Small potentials use the fixed-point iteration"
    with pytest.raises(ConvergenceError) as e:
        solve_lippmann_schwinger(f, -1.0, V, tol=1e-14, max_iter=1)
    assert e.value.report is not None and e.value.report.near_singular, "Failure carries the partial report"

def test_solve_at_limit_parameter():
    rng = np.random.default_rng(5)
    f = random_band_limited(G8, 1, 2, rng)
    V = Potential.scalar(G8, bump(G8, 0.5))
    rep = solve_lippmann_schwinger(f, SpectralParameter.plus(2.5), V, delta=0.1, tol=1e-10)
    assert rep.zeta == complex(2.5, 0.1), "lambda + i0 is evaluated at lambda + i delta"
    assert rep.converged and rep.residual <= 1e-10 * (1 + 1e-6), "Limit solve should converge"

def test_injectivity_functional():
    rng = np.random.default_rng(6)
    u = random_band_limited(G8, 2, 3, rng)
    W = random_potential(G8, 2, 1.0, rng)
    H = W + W.adjoint()
    assert abs(injectivity_functional(u, H)) <= 1e-12 * H.sup_norm(), "Hermitian quadratic forms are real"
    V = Potential.scalar(G8, 1j, m=2)
    assert injectivity_functional(u, V) == pytest.approx(1.0), "V = iI with ||u||_2 = 1 gives 1"

def test_sphere_trace():
    # L = 2 pi: lattice spacing 1, default shell width 2
    g = Field.plane_wave(G16, [2, 0, 0])
    t = sphere_trace_l2(g, 4.0)
    expected = G16.L ** 6 * G16.dual_volume / 4
    assert t == pytest.approx(expected, rel=1e-10), "On-shell plane wave gives |g_hat|^2 (2 pi/L)^n / 2w"
    off = sphere_trace_l2(Field.plane_wave(G16, [1, 0, 0]), 36.0, shell_width=1.0)
    assert off <= 1e-20 * expected, "Off-shell plane wave has no trace"
    assert sphere_trace_l2(g, 1e4) == 0.0, "Empty shell reports zero"
    with pytest.raises(ParameterError):
        sphere_trace_l2(g, 4.0, shell_width=0.5)

def test_im_resolvent_identity_single_mode():
    g = Field.plane_wave(G16, [1, 0, 0])
    lam = 2.5
    report = verify_im_resolvent_identity(g, lam, [0.05, 0.4, 0.2, 0.1])
    assert [row.delta for row in report.rows] == [0.4, 0.2, 0.1, 0.05], "Rows run in decreasing delta"
    for row in report.rows:
        expected = row.delta * G16.L ** 3 / ((lam - 1) ** 2 + row.delta ** 2)
        assert row.lhs == pytest.approx(expected, rel=1e-10), f"One-mode algebra fails at delta={row.delta}"
    lhs = [row.lhs for row in report.rows]
    assert all(a > b for a, b in zip(lhs, lhs[1:])), "No spectral mass at lambda: the left side decays with delta"
    assert not report.stable and report.spread > 0.5, "A decaying left side has no limiting constant"
    with pytest.raises(ParameterError):
        verify_im_resolvent_identity(g, lam, [])

def test_im_resolvent_constant_is_field_independent():
    # |xi|^2 takes values (2 pi / L)^2 Z = Z / 64 here, so deltas >= 0.18 average over many lattice shells
    grid = Grid(3, 64, 16 * math.pi)
    lam = 2.5
    deltas = [1.0, 0.7, 0.5, 0.35, 0.25, 0.18]
    fits = []
    for width, center in ((1.4, [grid.L / 2] * 3), (1.0, [grid.L / 3, grid.L / 2, grid.L / 4])):
        g = Field(grid, periodized_gaussian(grid, center, width))
        report = verify_im_resolvent_identity(g, lam, deltas)
        ratios = [row.ratio for row in report.rows]
        assert report.stable, f"Ratios {ratios} should settle for the width {width} Gaussian"
        assert report.spread <= 0.2 and report.c > 0
        fits.append(report.c)
    assert abs(fits[0] - fits[1]) <= 0.2 * max(fits), f"Fitted constants {fits} should not depend on g"

def test_min_singular_value_probe():
    assert min_singular_value_probe(1j, Potential.zeros(G8, 2)) == pytest.approx(1.0, abs=1e-8), "I has sigma_min = 1"
    c, zeta = 0.5, complex(2.0, 1.0)
    closed = float(np.min(np.abs(1 + c / (zeta - G8.xi_sq))))
    probe = min_singular_value_probe(zeta, Potential.scalar(G8, c))
    assert probe >= closed - 1e-6, "Probe is an upper bound on the true sigma_min"

def test_hermitian_bumps_stay_invertible():
    z = SpectralParameter.plus(2.5)
    for height, width in ((0.5, 1.0), (1.0, 1.0), (1.0, 1.5)):
        V = Potential.scalar(G16, bump(G16, height, width))
        sigmas = [min_singular_value_probe(z, V, probe_dim=6, delta=d) for d in (1.0, 0.5, 0.25, 0.125)]
        assert min(sigmas) >= 0.1, f"sigma_min {sigmas} of bump ({height}, {width}) should stay away from 0"
        decaying = all(a > b for a, b in zip(sigmas, sigmas[1:])) and sigmas[-1] < 0.5 * sigmas[0]
        assert not decaying, f"sigma_min {sigmas} of bump ({height}, {width}) decays as delta -> 0"

def test_k_norm_ratio_and_estimate():
    rng = np.random.default_rng(7)
    V = Potential.scalar(G8, bump(G8, 2.0))
    zeta = complex(1.5, 0.5)
    r = k_norm_ratio(zeta, V, 2)
    assert 0 < r <= neumann_bound(G8, zeta, V) * (1 + 1e-12), "||K||_2 is below the Neumann bound"
    assert k_norm_ratio(zeta, Potential.zeros(G8), 2) == 0
    u = random_band_limited(G8, 1, 3, rng)
    est = injectivity_estimate_ratio(u, zeta, V, 4, 6)
    assert math.isfinite(est) and est > 0, "Injectivity estimate ratio should be finite"
