import math
import numpy as np
import pytest
from .common import rel_err, cosine_field, sine_field
from lapm.eng.grid_field import Grid, Field, lp_norm, periodized_gaussian, random_band_limited, divergence, curl
from lapm.eng.datatype import CurrentPair, EMState
from lapm.eng.helmholtz import injectivity_functional
from lapm.eng.maxwell import (
    MediumProfile, build_bump_medium, prepare_currents, state_to_u, u_to_state,
    assemble_potentials, maxwell_to_helmholtz_rhs, tilde_currents, solve_maxwell, solve_maxwell_lap,
    constant_coefficient_oracle, reduction_residual, poynting_identity_check, injectivity_identity_rhs,
    divergence_relation_check, gradient_estimate_ratio, extra_condition_ratio, apply_l2, maxwell_residuals,
)
from lapm.eng.error import MediumError, ParameterError, ShapeError, ResonanceError

G = Grid(3, 16, 2 * math.pi)
CENTER = [math.pi] * 3

def bump_medium() -> MediumProfile:
    # the box is too small for the bump to decay, so the boundary check is off
    return build_bump_medium(G, 1.0, 1.0, 0.3, 0.2, [CENTER], [2.4], decay_threshold=math.inf)

def gaussian_currents(grid: Grid, width: float = 1.5) -> CurrentPair:
    g = periodized_gaussian(grid, [grid.L / 2] * 3, width)
    Je = Field(grid, np.stack([g, 0.5 * g, np.zeros_like(g)]))
    Jm = Field(grid, np.stack([np.zeros_like(g), 0.3j * g, g]))
    return prepare_currents(Je, Jm)

def random_currents(rng: np.random.Generator) -> CurrentPair:
    return prepare_currents(random_band_limited(G, 3, 3, rng), random_band_limited(G, 3, 3, rng))

def test_medium_validation():
    with pytest.raises(MediumError):
        MediumProfile.constant(Grid(2, 16, 1.0), 1.0, 1.0)
    with pytest.raises(MediumError):
        MediumProfile.constant(G, -1.0, 1.0)
    with pytest.raises(MediumError):
        MediumProfile.constant(G, 1 + 0.1j, 1.0)
    with pytest.raises(MediumError):
        MediumProfile.constant(G, 1.0, 1.0, eps_inf=0.0)
    for eps_inf, mu_inf in ((1 + 0.1j, 1.0), (1.0, math.inf), (1.0, math.nan), ('a', 1.0)):
        with pytest.raises(MediumError):
            MediumProfile(G, 1.0, 1.0, eps_inf, mu_inf, decay_threshold=math.inf)
    assert MediumProfile(G, 1.0, 1.0, 1 + 0j, 1.0).eps_inf == 1.0, "Real-valued complex backgrounds are accepted"
    with pytest.raises(MediumError):
        constant_coefficient_oracle(1 + 0.1j, 1.0, CurrentPair(Field.zeros(G, 3), Field.zeros(G, 3)), 1j)
    with pytest.raises(MediumError):
        MediumProfile.constant(G, 3.0, 1.0, eps_inf=1.0, mu_inf=1.0)
    med = MediumProfile.constant(G, 3.0, 1.0, eps_inf=1.0, mu_inf=1.0, decay_threshold=math.inf)
    assert med.is_constant and med.boundary_gap() == pytest.approx(2.0), "Constant gap is |3 - 1| / 1"
    assert MediumProfile.constant(G, 2.0, 1.5).boundary_gap() == 0, "Background equal to the medium has no gap"

def test_bump_medium():
    with pytest.raises(MediumError):
        build_bump_medium(G, 1.0, 1.0, 0.3, 0.2, [CENTER], [1.0])
    with pytest.raises(MediumError):
        build_bump_medium(G, 1.0, 1.0, 0.3, 0.2, [CENTER], [2.4, 2.4])
    with pytest.raises(MediumError):
        build_bump_medium(G, 1.0, 1.0, 0.3, 0.2, [CENTER], [2.4])

    big = Grid(3, 32, 16.0)
    med = build_bump_medium(big, 1.5, 2.0, 0.3, 0.2, [[8.0, 8.0, 8.0]], [3.0])
    assert med.boundary_gap() < 1e-2, "A bump far from the boundary passes the decay check"
    assert not med.is_constant

    med = bump_medium()
    v_max = float(np.max(np.abs(med.v)))
    assert v_max > 0, "A bump medium has a nonzero v"
    assert med.v_defect() <= 1e-8 * v_max, "Cached v must match 2 grad (eps mu)^1/2"

def test_prepare_currents():
    rng = np.random.default_rng(0)
    J = random_currents(rng)
    assert lp_norm(divergence(J.Je), 2) < 1e-10 and lp_norm(divergence(J.Jm), 2) < 1e-10, "Currents must be divergence free"
    smooth = prepare_currents(random_band_limited(G, 3, 3, rng), Field.zeros(G, 3), sigma=0.5)
    assert not smooth.Jm.values.any() and not smooth.is_zero(), "Zero magnetic current stays zero"
    with pytest.raises(ShapeError):
        prepare_currents(Field.zeros(G, 1), Field.zeros(G, 3))
    with pytest.raises(ShapeError):
        CurrentPair(Field.zeros(G, 3), Field.zeros(Grid(3, 8, 1.0), 3))

def test_state_round_trip_and_l2():
    rng = np.random.default_rng(1)
    med = bump_medium()
    u = random_band_limited(G, 6, 3, rng)
    back = state_to_u(med, u_to_state(med, u, 1j))
    assert rel_err(back.values, u.values) < 1e-12, "u -> (E, H) -> u must be the identity"
    with pytest.raises(ShapeError):
        u_to_state(med, Field.zeros(G, 3), 1j)
    # L2 (a, 0) = (0, -curl a)
    a = cosine_field(G, [1, 0, 0], [0, 1, 0])
    out = apply_l2(Field.stack([a, Field.zeros(G, 3)]))
    expected = sine_field(G, [1, 0, 0], [0, 0, 1])
    assert lp_norm(out.component(slice(0, 3)), 2) == 0, "Upper half of L2 (a, 0) vanishes"
    assert rel_err(out.component(slice(3, 6)).values, expected.values) < 1e-10, "L2 (cos x1 e2, 0) = (0, sin x1 e3)"

def test_assembly_source_matches_rhs():
    rng = np.random.default_rng(2)
    med = bump_medium()
    J = random_currents(rng)
    zeta = complex(1.0, 0.5)
    asm = assemble_potentials(med, zeta)
    assert asm.helmholtz_zeta == zeta ** 2, "zeta_H = zeta^2 eps_inf mu_inf"
    a = asm.source(tilde_currents(med, J))
    b = maxwell_to_helmholtz_rhs(med, J, zeta)
    assert rel_err(a.values, b.values) < 1e-14, "Assembly source and right-hand side must agree"
    assert assemble_potentials(MediumProfile.constant(G, 2.0, 1.5), zeta).V.sup_norm() == 0, "Matched background gives V = 0"

def test_worked_example_vacuum():
    # eps = mu = 1, zeta = i, J_e = cos x1 e2: E = cos x1 e2 / 2, H = -sin x1 e3 / 2
    J = CurrentPair(cosine_field(G, [1, 0, 0], [0, 1, 0]), Field.zeros(G, 3))
    E = cosine_field(G, [1, 0, 0], [0, 0.5, 0]).values
    H = sine_field(G, [1, 0, 0], [0, 0, -0.5]).values
    med = MediumProfile.constant(G, 1.0, 1.0)
    state, rep = solve_maxwell(med, J, 1j)
    assert rep.method == 'free', "Vacuum has V = 0"
    assert rel_err(state.E.values, E) < 1e-10 and rel_err(state.H.values, H) < 1e-10, "Solver misses the closed form"
    assert rep.res1 < 1e-10 and rep.res2 < 1e-10, "Closed form satisfies Maxwell"
    oracle = constant_coefficient_oracle(1.0, 1.0, J, 1j)
    assert rel_err(oracle.E.values, E) < 1e-10 and rel_err(oracle.H.values, H) < 1e-10, "Oracle misses the closed form"

def test_solver_matches_oracle_constant_medium():
    rng = np.random.default_rng(3)
    J = random_currents(rng)
    zeta = complex(0.8, 0.3)
    oracle = constant_coefficient_oracle(2.0, 1.5, J, zeta)
    for med in (MediumProfile.constant(G, 2.0, 1.5),
                MediumProfile.constant(G, 2.0, 1.5, eps_inf=1.0, mu_inf=1.0, decay_threshold=math.inf)):
        state, rep = solve_maxwell(med, J, zeta, tol=1e-12)
        assert rep.converged, f"Constant medium solve should converge: {rep}"
        assert rel_err(state.E.values, oracle.E.values) < 1e-8, f"E differs from the oracle for {med}"
        assert rel_err(state.H.values, oracle.H.values) < 1e-8, f"H differs from the oracle for {med}"

def test_lap_solver_matches_oracle_on_32():
    grid = Grid(3, 32, 2 * math.pi)
    rng = np.random.default_rng(8)
    for draw in range(20):
        eps0, mu0 = rng.uniform(0.5, 2.5, 2)
        omega, delta, sign = rng.uniform(0.3, 2.5), rng.uniform(0.2, 1.0), int(rng.choice([-1, 1]))
        J = prepare_currents(random_band_limited(grid, 3, 6, rng), random_band_limited(grid, 3, 6, rng))
        state, _ = solve_maxwell_lap(MediumProfile.constant(grid, eps0, mu0), J, omega, delta, sign)
        oracle = constant_coefficient_oracle(eps0, mu0, J, complex(omega, sign * delta))
        assert rel_err(state.E.values, oracle.E.values) < 1e-10, f"Draw {draw}: E differs from the oracle"
        assert rel_err(state.H.values, oracle.H.values) < 1e-10, f"Draw {draw}: H differs from the oracle"

def manufactured_solution(grid: Grid, zeta: complex) -> tuple[MediumProfile, EMState, CurrentPair]:
    """ E = eps^-1 curl A, H = mu^-1 curl B on a bump medium, currents read off the Maxwell system. """
    med = build_bump_medium(grid, 1.0, 1.0, 0.3, 0.2, [CENTER], [2.4], decay_threshold=math.inf)
    g = periodized_gaussian(grid, CENTER, 0.6)
    zero = np.zeros_like(g)
    E = curl(Field(grid, np.stack([g, 0.5 * g, zero]))).scale(1 / med.eps)
    H = curl(Field(grid, np.stack([zero, g, -0.3 * g]))).scale(1 / med.mu)
    Je = curl(H) - E.scale(1j * zeta * med.eps)
    Jm = H.scale(1j * zeta * med.mu) + curl(E)
    return med, EMState(E, H, zeta), CurrentPair(Je, Jm)

def test_reduction_residual_under_refinement():
    zeta = complex(1.0, 0.5)
    residuals = []
    for N in (16, 32):
        med, state, J = manufactured_solution(Grid(3, N, 2 * math.pi), zeta)
        r1, r2 = maxwell_residuals(med, state, J, zeta)
        assert r1 + r2 < 1e-10 * (lp_norm(J.Je, 2) + lp_norm(J.Jm, 2)), "Currents are read off the Maxwell system"
        residuals.append(reduction_residual(med, state, J, zeta))
    assert residuals[0] > 0 and residuals[1] <= residuals[0] / 4, f"Reduction residuals {residuals} under N -> 2N"

def test_oracle_errors_and_energy():
    rng = np.random.default_rng(4)
    J = random_currents(rng)
    with pytest.raises(ParameterError):
        constant_coefficient_oracle(1.0, 1.0, J, 0.0)
    with pytest.raises(ResonanceError):
        constant_coefficient_oracle(1.0, 1.0, J, 1.0)
    with pytest.raises(MediumError):
        constant_coefficient_oracle(0.0, 1.0, J, 1j)
    # constant medium: v = 0, so the weighted Poynting identity is the energy identity
    zeta = complex(0.7, 0.4)
    med = MediumProfile.constant(G, 2.0, 1.5, eps_inf=1.0, mu_inf=1.0, decay_threshold=math.inf)
    state = constant_coefficient_oracle(2.0, 1.5, J, zeta)
    lhs, rhs, gap = poynting_identity_check(med, state, J, zeta)
    assert lhs == 0 and gap < 1e-10, f"Energy identity gap {gap} is too large"
    assert reduction_residual(med, state, J, zeta) < 1e-10, "Oracle solution satisfies the Helmholtz system"

def test_bump_medium_solve():
    med = bump_medium()
    J = gaussian_currents(G)
    zeta = complex(1.0, 0.5)
    state, rep = solve_maxwell(med, J, zeta, tol=1e-11)
    j_norm = lp_norm(J.Je, 2) + lp_norm(J.Jm, 2)
    assert rep.converged, f"Bump medium solve failed: {rep}"
    assert rep.res1 + rep.res2 < 1e-5 * j_norm, f"Maxwell residuals too large: {rep}"
    assert reduction_residual(med, state, J, zeta) < 1e-7, "Solution should satisfy the Helmholtz system"
    _, _, gap = poynting_identity_check(med, state, J, zeta)
    assert gap < 1e-5, f"Weighted Poynting identity gap {gap}"
    res_e, res_h = divergence_relation_check(med, state)
    assert res_e < 1e-5 and res_h < 1e-5, f"div(eps E) = div(mu H) = 0 violated: {res_e}, {res_h}"
    r = gradient_estimate_ratio(med, state, J, zeta, 2)
    assert math.isfinite(r) and r > 0
    x = extra_condition_ratio(med, state_to_u(med, state), J, zeta, 4, '12/5', '6/5')
    assert math.isfinite(x) and x >= 0

def test_injectivity_identity():
    rng = np.random.default_rng(5)
    med = bump_medium()
    for zeta in (1.3, complex(0.9, 0.4), complex(-1.1, 0.2)):
        u = random_band_limited(G, 6, 3, rng)
        V = assemble_potentials(med, zeta).V
        a = injectivity_functional(u, V)
        b = injectivity_identity_rhs(med, u, zeta)
        assert abs(a - b) <= 1e-10 * V.sup_norm(), f"Im <V u, u> identity fails at zeta={zeta}: {a} vs {b}"
    with pytest.raises(ShapeError):
        injectivity_identity_rhs(med, Field.zeros(G, 3), 1.0)

def test_solve_maxwell_lap_validation():
    med = MediumProfile.constant(G, 1.0, 1.0)
    J = CurrentPair(cosine_field(G, [1, 0, 0], [0, 1, 0]), Field.zeros(G, 3))
    for omega, delta, sign in ((0.0, 0.1, 1), (1.5, 0.0, 1), (1.5, 0.1, 2), (math.nan, 0.1, 1)):
        with pytest.raises(ParameterError):
            solve_maxwell_lap(med, J, omega, delta, sign)
    state, rep = solve_maxwell_lap(med, J, 1.5, 0.1, sign=-1)
    assert rep.zeta == complex(1.5, -0.1), "sign = -1 evaluates at omega - i delta"
    assert state.zeta == complex(1.5, -0.1)
