from fractions import Fraction as F
import math
import pytest
from . import common
from lapm.eng.datatype import LebesgueExponent, SpectralParameter, LimitTag
from lapm.eng import exponents as ex
from lapm.eng.error import ExponentDomainError, AdmissibilityError, ParameterError, UsageError

def test_lebesgue_exponent_parsing():
    assert LebesgueExponent.of('4/3').reciprocal == F(3, 4), "4/3 should have reciprocal 3/4"
    assert LebesgueExponent.of('inf').is_infinite, "inf should be the infinite exponent"
    assert LebesgueExponent.of(math.inf).reciprocal == 0, "math.inf should have reciprocal 0"
    assert str(LebesgueExponent.of(F(10, 7))) == '10/7', "Exponents print as exact fractions"
    for bad in ('1/2', '0', 'abc', -3):
        with pytest.raises(ExponentDomainError):
            LebesgueExponent.of(bad)

def test_gutierrez_region():
    assert ex.check_gutierrez('4/3', 4, 3), "(4/3, 4) is the classic n = 3 pair"
    res = ex.check_gutierrez(2, 2, 3)
    assert not res, "(2, 2) violates the lower bound on 1/p"
    assert "1/p > (n+1)/2n" in str(res), "The violated inequality should be named"
    assert ex.check_gutierrez('10/7', '10/3', 4), "Lower boundary of the gap condition is included"
    with pytest.raises(ExponentDomainError):
        ex.check_gutierrez(2, 2, 2)

def test_maxwell_region():
    assert ex.check_maxwell_conditions('6/5', 2, 4), "(6/5, 2, 4) is admissible"
    assert ex.check_maxwell_conditions('4/3', 2, 4), "1/p - 1/q = 1/2 is included"
    res = ex.check_maxwell_conditions(2, 2, 4)
    assert not res and "1/p > 2/3" in str(res), "(2, 2, 4) violates 1/p > 2/3"
    assert str(ex.check_maxwell_conditions('6/5', 2, 4)) == "[maxwell] admissible"

def test_compactness_region():
    assert ex.check_compactness_conditions(4, 4, '3/2', 2, 3), "q1 = q2 = 4 with kappa = 3/2, kappa_tilde = 2"
    assert not ex.check_compactness_conditions(4, 'inf', '3/2', 2, 3), "q2 = inf breaks 1/q1 - 1/q2 <= 2/n - 1/kappa"
    assert not ex.check_compactness_conditions(2, 2, '3/2', 2, 3), "q2 = 2 breaks 1/q2 < (n-1)/2n"
    with pytest.raises(ExponentDomainError):
        ex.check_compactness_conditions(4, 4, 2, '3/2', 3)

def test_simplified_and_system_regions():
    assert ex.check_simplified_conditions(4, 2, 3), "q = 4, kappa_tilde = 2 is admissible"
    assert not ex.check_simplified_conditions(4, 3, 3), "kappa_tilde = 3 is above (n+1)/2"
    assert ex.check_helmholtz_system_conditions('4/3', 4, 3), "(4/3, 4) lies in the Hermitian system region"
    # default kappa_tilde = (n+1)/2 puts the lower bound on 1/q at (n-1)^2/(2n(n+1)) = 1/6
    assert not ex.check_helmholtz_system_conditions('6/5', 6, 3), "1/q = 1/6 sits on the excluded lower bound"

def test_bessel_and_derivative_regions():
    assert ex.check_bessel_conditions(2, 6, 3), "1/p - 1/q = 1/3 is the Sobolev endpoint"
    assert not ex.check_bessel_conditions(1, '3/2', 3), "(1, 2/3) is an excluded corner"
    assert ex.check_derivative_conditions('4/3', 2, 4, 3), "(4/3, 2, 4) is admissible"
    assert not ex.check_derivative_conditions('4/3', 1, '3/2', 3), "(1/ptilde, 1/q) = (1, 2/3) is excluded"
    assert ex.check_derivative_conditions('4/3', 3, 4, 3), "1/ptilde - 1/q = 1/12 is admissible"


# brute-force regions written out on reciprocals, a = 1/p, b = 1/q, t = 1/ptilde
def _gutierrez(a, b, n):
    return a > F(n + 1, 2 * n) and b < F(n - 1, 2 * n) and F(2, n + 1) <= a - b <= F(2, n)

def _maxwell(a, t, b):
    return F(2, 3) < a < 1 and F(1, 6) < b < F(1, 3) and F(1, 2) <= a - b <= F(2, 3) and 0 <= t - b <= F(1, 3)

def _off_corners(a, b, n):
    return (a, b) != (1, 1 - F(1, n)) and (a, b) != (F(1, n), 0)

def _bessel(a, b, n):
    return 0 <= a - b <= F(1, n) and _off_corners(a, b, n)

def _derivative(a, t, b, n):
    return _gutierrez(a, b, n) and 0 <= t - b <= F(1, n) and _off_corners(t, b, n)

def _compactness(r1, r2, rk, rkt, n):
    return F(n + 1, 2 * n) - rkt < r1 <= 1 - rk and r2 < F(n - 1, 2 * n) \
        and F(2, n + 1) - rkt <= r1 - r2 <= F(2, n) - rk

def _simplified(b, rkt, n):
    return F(2, n + 1) <= rkt <= F(2, n) and F(n + 1, 2 * n) - rkt < b < F(n - 1, 2 * n)

def _helmholtz_system(a, b, n, rkt):
    return F(2, n + 1) <= rkt <= F(2, n) and _gutierrez(a, b, n) and b > F(n + 1, 2 * n) - rkt

SIXTIETHS = [(F(k, 60), LebesgueExponent(F(k, 60))) for k in range(61)]

def test_three_exponent_checkers_on_sixtieths():
    for a, p in SIXTIETHS:
        for t, pt in SIXTIETHS:
            for b, q in SIXTIETHS:
                assert bool(ex.check_maxwell_conditions(p, pt, q)) == _maxwell(a, t, b), \
                    f"maxwell disagrees at (1/p, 1/ptilde, 1/q) = ({a}, {t}, {b})"
                assert bool(ex.check_derivative_conditions(p, pt, q, 3)) == _derivative(a, t, b, 3), \
                    f"derivative disagrees at (1/p, 1/ptilde, 1/q) = ({a}, {t}, {b})"

def test_pair_checkers_on_sixtieths():
    for n in (3, 4, 5, 8):
        for a, p in SIXTIETHS:
            for b, q in SIXTIETHS:
                assert bool(ex.check_gutierrez(p, q, n)) == _gutierrez(a, b, n), \
                    f"gutierrez disagrees at (1/p, 1/q) = ({a}, {b}), n = {n}"
                assert bool(ex.check_bessel_conditions(p, q, n)) == _bessel(a, b, n), \
                    f"bessel disagrees at (1/p, 1/q) = ({a}, {b}), n = {n}"
                assert bool(ex.check_helmholtz_system_conditions(p, q, n)) == _helmholtz_system(a, b, n, F(2, n + 1)), \
                    f"helmholtz_system disagrees at (1/p, 1/q) = ({a}, {b}), n = {n}"
            for rkt, kt in SIXTIETHS:
                assert bool(ex.check_simplified_conditions(p, kt, n)) == _simplified(a, rkt, n), \
                    f"simplified disagrees at (1/q, 1/kappa_tilde) = ({a}, {rkt}), n = {n}"

def test_kappa_dependent_checkers_on_sixtieths():
    kappas = [(F(2, 3), F(1, 2)), (F(2, 3), F(4, 7)), (1, F(1, 2)), (F(1, 2), F(1, 2)), (F(5, 6), F(1, 3))]
    for rk, rkt in kappas:
        k, kt = LebesgueExponent(F(rk)), LebesgueExponent(rkt)
        for a, q1 in SIXTIETHS:
            for b, q2 in SIXTIETHS:
                assert bool(ex.check_compactness_conditions(q1, q2, k, kt, 3)) == _compactness(a, b, F(rk), rkt, 3), \
                    f"compactness disagrees at (1/q1, 1/q2) = ({a}, {b}), (1/kappa, 1/kappa_tilde) = ({rk}, {rkt})"
                assert bool(ex.check_helmholtz_system_conditions(q1, q2, 3, kt)) == _helmholtz_system(a, b, 3, rkt), \
                    f"helmholtz_system disagrees at (1/p, 1/q) = ({a}, {b}), 1/kappa_tilde = {rkt}"

def test_scaling_exponents():
    assert ex.scaling_exponent('4/3', 4, 3) == F(-1, 4), "(4/3, 4) scales like |zeta|^-1/4"
    for n in range(3, 9):
        p, q = F(2 * (n + 1), n + 3), F(2 * (n + 1), n - 1)
        assert ex.scaling_exponent(p, q, n) == F(-1, n + 1), f"Endpoint pair scales like |zeta|^-1/(n+1) for n = {n}"
    assert ex.scaling_exponent('6/5', 6, 3) == 0, "1/p - 1/q = 2/n gives scale invariance"
    assert ex.derivative_scaling_exponents('4/3', 2, 4, 3) == (F(1, 4), F(-1, 8))
    s1, s2 = ex.derivative_scaling_exponents('12/7', 4, 4, 3)
    assert s1 == 0, "1/p - 1/q = 1/n gives a zero first exponent"
    assert s2 == F(-1, 2), "1/ptilde = 1/q gives -1/2"

def test_k_norm_bound_exponents():
    assert ex.k_norm_bound_exponents(4, 4, '3/2', 2, 3) == (0, F(-1, 4))
    # kappa = n/2 cancels the first exponent, kappa_tilde = (n+1)/2 gives -1/(n+1)
    assert ex.k_norm_bound_exponents(3, 3, 2, '5/2', 4) == (0, F(-1, 5))
    assert ex.k_norm_bound_exponents(3, 3, '5/2', 3, 5) == (0, F(-1, 6))
    with pytest.raises(AdmissibilityError):
        ex.k_norm_bound_exponents(2, 2, '3/2', 2, 3)

def test_holder_and_cauchy():
    p, pt = ex.holder_exponents(4, '3/2', 2)
    assert p.reciprocal == F(11, 12) and pt.reciprocal == F(3, 4), "Holder split 1/p = 1/kappa + 1/q1"
    with pytest.raises(ExponentDomainError):
        ex.holder_exponents(1, '3/2', 2)
    assert ex.cauchy_rate_exponent(4, 3) == F(1, 4), "(n-1)/2 - n/q at n = 3, q = 4"

def test_bootstrap_sequence():
    seq = ex.bootstrap_sequence(4, '7/4', 3, 4)
    assert seq[1].reciprocal == F(7, 24), "First step at kappa_tilde = 7/4 is 7/24"
    assert ex.bootstrap_sequence(4, 2, 3, 1)[1].reciprocal == F(7, 24), "Limiting case first step is 7/24"
    recips = [q.reciprocal for q in seq]
    assert all(a < b for a, b in zip(recips, recips[1:])), "Reciprocals must strictly increase"
    assert all(r < F(1, 3) for r in recips), "Reciprocals stay below (n-1)/2n"
    with pytest.raises(ExponentDomainError):
        ex.bootstrap_sequence(2, 2, 3, 3)
    with pytest.raises(ExponentDomainError):
        ex.bootstrap_sequence(4, 3, 3, 3)

def test_maxwell_bracket():
    q1, q2 = ex.find_maxwell_bracket('6/5', 2, 4, scan_denominator=24)
    assert q1.reciprocal == F(7, 24) and q2.reciprocal == F(5, 24), "Widest bracket on the 1/24 lattice"
    assert float(q1) < 4 < float(q2), "Bracket should straddle q"
    # (1/p, 1/ptilde, 1/q) = (11/12, 1/4, 1/4) is a corner with a single admissible q
    assert ex.find_maxwell_bracket('12/11', 4, 4) is None, "Corner tuples have only the degenerate bracket"
    q1, q2 = ex.find_maxwell_bracket('12/11', 4, 4, allow_degenerate=True)
    assert q1 == q2 == LebesgueExponent.of(4), "Degenerate bracket is (q, q)"
    with pytest.raises(AdmissibilityError):
        ex.find_maxwell_bracket(2, 2, 4)

def test_spectral_parameter():
    z = SpectralParameter.plus(2.0)
    assert z.is_limit and z.effective(0.1) == complex(2, 0.1), "lambda + i0 evaluates at lambda + i delta"
    assert SpectralParameter.minus(2.0, 0.5).effective() == complex(2, -0.5)
    assert z.conjugate().limit_tag == LimitTag.MINUS_I0, "Conjugation flips the side"
    with pytest.raises(UsageError):
        z.effective()
    with pytest.raises(ParameterError):
        SpectralParameter(2.0)
    with pytest.raises(ParameterError):
        SpectralParameter.plus(-1.0)
    assert SpectralParameter(-1.0).effective() == -1, "Negative real parameters are interior"

def test_exponent_tuple():
    t = ex.ExponentTuple(3, 4, p='6/5', p_tilde=2)
    assert t.p.reciprocal == F(5, 6) and t.q.reciprocal == F(1, 4), "Fields are normalized to exponents"
    assert str(t) == "ExponentTuple(n=3, q=4, p=6/5, p_tilde=2)"
    assert ex.ExponentTuple(3, 4, kappa='3/2', kappa_tilde=2).kappa_tilde.reciprocal == F(1, 2)
    with pytest.raises(ExponentDomainError):
        ex.ExponentTuple(3, 4, kappa=2, kappa_tilde='3/2')
