"""
Admissible exponent regions, resolvent scaling exponents and bootstrap recurrences.
All arithmetic is exact (fractions.Fraction); the infinite exponent has reciprocal 0.
"""
from __future__ import annotations
from fractions import Fraction
from typing import Optional
import dataclasses

from .datatype import LebesgueExponent, LebesgueExponentLike, CheckResult, Violation, recip
from .error import ExponentDomainError, AdmissibilityError
from .utils import fmt_fraction as _f

@dataclasses.dataclass(frozen=True)
class ExponentTuple:
    n: int
    q: LebesgueExponent
    p: Optional[LebesgueExponent] = None
    p_tilde: Optional[LebesgueExponent] = None
    q1: Optional[LebesgueExponent] = None
    q2: Optional[LebesgueExponent] = None
    kappa: Optional[LebesgueExponent] = None
    kappa_tilde: Optional[LebesgueExponent] = None

    def __post_init__(self):
        for name in ('q', 'p', 'p_tilde', 'q1', 'q2', 'kappa', 'kappa_tilde'):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, LebesgueExponent.of(v))
        if self.kappa is not None and self.kappa_tilde is not None:
            if self.kappa.reciprocal < self.kappa_tilde.reciprocal:
                raise ExponentDomainError(f"Need kappa <= kappa_tilde, got {self.kappa} > {self.kappa_tilde}")

    def __str__(self):
        parts = [
            f"{fd.name}={getattr(self, fd.name)}" for fd in dataclasses.fields(self)
            if fd.name != 'n' and getattr(self, fd.name) is not None
        ]
        return f"ExponentTuple(n={self.n}, " + ", ".join(parts) + ")"


class _Region:
    """ Accumulates violated inequalities of one exponent system. """
    def __init__(self, system: str):
        self.result = CheckResult(system)

    def require(self, ok: bool, constraint: str, **values: Fraction):
        if not ok:
            detail = ", ".join(f"{k} = {_f(v)}" for k, v in values.items())
            self.result.violations.append(Violation(constraint, detail))

def _require_dim(n: int):
    if n < 3:
        raise ExponentDomainError(f"Exponent regions are only available for n >= 3, got n = {n}")

def _gutierrez_into(reg: _Region, rp: Fraction, rq: Fraction, n: int):
    lo_p = Fraction(n + 1, 2 * n)
    hi_q = Fraction(n - 1, 2 * n)
    d = rp - rq
    reg.require(rp > lo_p, "1/p > (n+1)/2n", **{'1/p': rp, '(n+1)/2n': lo_p})
    reg.require(rq < hi_q, "1/q < (n-1)/2n", **{'1/q': rq, '(n-1)/2n': hi_q})
    reg.require(d >= Fraction(2, n + 1), "1/p - 1/q >= 2/(n+1)", **{'1/p - 1/q': d, '2/(n+1)': Fraction(2, n + 1)})
    reg.require(d <= Fraction(2, n), "1/p - 1/q <= 2/n", **{'1/p - 1/q': d, '2/n': Fraction(2, n)})

def check_gutierrez(p: LebesgueExponentLike, q: LebesgueExponentLike, n: int) -> CheckResult:
    """ L^p -> L^q boundedness region of the free resolvent with the |zeta| scaling law. """
    _require_dim(n)
    rp, rq = recip(p), recip(q)
    reg = _Region('gutierrez')
    _gutierrez_into(reg, rp, rq, n)
    return reg.result

def check_maxwell_conditions(p: LebesgueExponentLike, p_tilde: LebesgueExponentLike, q: LebesgueExponentLike) -> CheckResult:
    """ Exponent region of the Maxwell limiting absorption principle (n = 3). """
    rp, rpt, rq = recip(p), recip(p_tilde), recip(q)
    reg = _Region('maxwell')
    d, dt = rp - rq, rpt - rq
    reg.require(rp > Fraction(2, 3), "1/p > 2/3", **{'1/p': rp})
    reg.require(rp < 1, "1/p < 1", **{'1/p': rp})
    reg.require(rq > Fraction(1, 6), "1/q > 1/6", **{'1/q': rq})
    reg.require(rq < Fraction(1, 3), "1/q < 1/3", **{'1/q': rq})
    reg.require(d >= Fraction(1, 2), "1/p - 1/q >= 1/2", **{'1/p - 1/q': d})
    reg.require(d <= Fraction(2, 3), "1/p - 1/q <= 2/3", **{'1/p - 1/q': d})
    reg.require(dt >= 0, "1/ptilde - 1/q >= 0", **{'1/ptilde - 1/q': dt})
    reg.require(dt <= Fraction(1, 3), "1/ptilde - 1/q <= 1/3", **{'1/ptilde - 1/q': dt})
    return reg.result

def _check_kappa_pair(kappa: LebesgueExponentLike, kappa_tilde: LebesgueExponentLike) -> tuple[Fraction, Fraction]:
    rk, rkt = recip(kappa), recip(kappa_tilde)
    if rkt == 0:
        raise ExponentDomainError("kappa_tilde must be finite")
    if rk < rkt:
        raise ExponentDomainError(f"Need kappa <= kappa_tilde, got 1/kappa = {_f(rk)} < 1/kappa_tilde = {_f(rkt)}")
    return rk, rkt

def check_compactness_conditions(
    q1: LebesgueExponentLike, q2: LebesgueExponentLike,
    kappa: LebesgueExponentLike, kappa_tilde: LebesgueExponentLike, n: int
    ) -> CheckResult:
    """ Conditions under which K(zeta) = -R_0(zeta) V is compact from L^q1 to L^q2. """
    _require_dim(n)
    rk, rkt = _check_kappa_pair(kappa, kappa_tilde)
    r1, r2 = recip(q1), recip(q2)
    reg = _Region('compactness')
    lo1 = Fraction(n + 1, 2 * n) - rkt
    hi1 = 1 - rk
    hi2 = Fraction(n - 1, 2 * n)
    lo_d = Fraction(2, n + 1) - rkt
    hi_d = Fraction(2, n) - rk
    d = r1 - r2
    reg.require(r1 > lo1, "1/q1 > (n+1)/2n - 1/kappa_tilde", **{'1/q1': r1, 'bound': lo1})
    reg.require(r1 <= hi1, "1/q1 <= 1 - 1/kappa", **{'1/q1': r1, 'bound': hi1})
    reg.require(r2 < hi2, "1/q2 < (n-1)/2n", **{'1/q2': r2, 'bound': hi2})
    reg.require(d >= lo_d, "1/q1 - 1/q2 >= 2/(n+1) - 1/kappa_tilde", **{'1/q1 - 1/q2': d, 'bound': lo_d})
    reg.require(d <= hi_d, "1/q1 - 1/q2 <= 2/n - 1/kappa", **{'1/q1 - 1/q2': d, 'bound': hi_d})
    return reg.result

def check_simplified_conditions(q: LebesgueExponentLike, kappa_tilde: LebesgueExponentLike, n: int) -> CheckResult:
    """ Compactness of K(zeta) on a single L^q, for V in L^{n/2} + L^kappa_tilde. """
    _require_dim(n)
    rq, rkt = recip(q), recip(kappa_tilde)
    reg = _Region('simplified')
    reg.require(rkt <= Fraction(2, n), "kappa_tilde >= n/2", **{'1/kappa_tilde': rkt})
    reg.require(rkt >= Fraction(2, n + 1), "kappa_tilde <= (n+1)/2", **{'1/kappa_tilde': rkt})
    lo = Fraction(n + 1, 2 * n) - rkt
    hi = Fraction(n - 1, 2 * n)
    reg.require(rq > lo, "1/q > (n+1)/2n - 1/kappa_tilde", **{'1/q': rq, 'bound': lo})
    reg.require(rq < hi, "1/q < (n-1)/2n", **{'1/q': rq, 'bound': hi})
    return reg.result

def check_helmholtz_system_conditions(
    p: LebesgueExponentLike, q: LebesgueExponentLike, n: int,
    kappa_tilde: Optional[LebesgueExponentLike] = None
    ) -> CheckResult:
    """
    Region of the Hermitian Helmholtz-system resolvent L^p -> L^q. The default
    kappa_tilde = (n+1)/2 gives the lower bound (n-1)^2 / (2n(n+1)) on 1/q.
    """
    _require_dim(n)
    rkt = Fraction(2, n + 1) if kappa_tilde is None else recip(kappa_tilde)
    rp, rq = recip(p), recip(q)
    reg = _Region('helmholtz_system')
    reg.require(Fraction(2, n + 1) <= rkt <= Fraction(2, n), "n/2 <= kappa_tilde <= (n+1)/2", **{'1/kappa_tilde': rkt})
    lo_p = Fraction(n + 1, 2 * n)
    lo_q = lo_p - rkt
    hi_q = Fraction(n - 1, 2 * n)
    d = rp - rq
    reg.require(rp > lo_p, "1/p > (n+1)/2n", **{'1/p': rp, '(n+1)/2n': lo_p})
    reg.require(rq > lo_q, "1/q > (n+1)/2n - 1/kappa_tilde", **{'1/q': rq, 'bound': lo_q})
    reg.require(rq < hi_q, "1/q < (n-1)/2n", **{'1/q': rq, '(n-1)/2n': hi_q})
    reg.require(d >= Fraction(2, n + 1), "1/p - 1/q >= 2/(n+1)", **{'1/p - 1/q': d})
    reg.require(d <= Fraction(2, n), "1/p - 1/q <= 2/n", **{'1/p - 1/q': d})
    return reg.result

def check_bessel_conditions(p: LebesgueExponentLike, q: LebesgueExponentLike, n: int) -> CheckResult:
    """ L^p -> L^q boundedness of the Bessel potential of order one. """
    _require_dim(n)
    rp, rq = recip(p), recip(q)
    reg = _Region('bessel')
    d = rp - rq
    reg.require(d >= 0, "1/p - 1/q >= 0", **{'1/p - 1/q': d})
    reg.require(d <= Fraction(1, n), "1/p - 1/q <= 1/n", **{'1/p - 1/q': d})
    for corner in ((Fraction(1), 1 - Fraction(1, n)), (Fraction(1, n), Fraction(0))):
        reg.require((rp, rq) != corner, f"(1/p, 1/q) != ({_f(corner[0])}, {_f(corner[1])})", **{'1/p': rp, '1/q': rq})
    return reg.result

def check_derivative_conditions(
    p: LebesgueExponentLike, p_tilde: LebesgueExponentLike, q: LebesgueExponentLike, n: int
    ) -> CheckResult:
    """ Region for the derivative resolvent R_0(zeta) d_j : L^p cap L^ptilde -> L^q. """
    _require_dim(n)
    rp, rpt, rq = recip(p), recip(p_tilde), recip(q)
    reg = _Region('derivative')
    _gutierrez_into(reg, rp, rq, n)
    dt = rpt - rq
    reg.require(dt >= 0, "1/ptilde - 1/q >= 0", **{'1/ptilde - 1/q': dt})
    reg.require(dt <= Fraction(1, n), "1/ptilde - 1/q <= 1/n", **{'1/ptilde - 1/q': dt})
    for corner in ((Fraction(1), 1 - Fraction(1, n)), (Fraction(1, n), Fraction(0))):
        reg.require((rpt, rq) != corner, f"(1/ptilde, 1/q) != ({_f(corner[0])}, {_f(corner[1])})", **{'1/ptilde': rpt, '1/q': rq})
    return reg.result


def scaling_exponent(p: LebesgueExponentLike, q: LebesgueExponentLike, n: int) -> Fraction:
    """ Exponent s in ||R_0(zeta)||_{p->q} ~ |zeta|^s, s = (n/2)(1/p - 1/q - 2/n). """
    rp, rq = recip(p), recip(q)
    if rp < rq:
        raise ExponentDomainError(f"Need p <= q, got p = {p}, q = {q}")
    return Fraction(n, 2) * (rp - rq - Fraction(2, n))

def derivative_scaling_exponents(
    p: LebesgueExponentLike, p_tilde: LebesgueExponentLike, q: LebesgueExponentLike, n: int
    ) -> tuple[Fraction, Fraction]:
    rp, rpt, rq = recip(p), recip(p_tilde), recip(q)
    return (
        Fraction(n, 2) * (rp - rq - Fraction(1, n)),
        Fraction(n, 2) * (rpt - rq - Fraction(1, n)),
    )

def k_norm_bound_exponents(
    q1: LebesgueExponentLike, q2: LebesgueExponentLike,
    kappa: LebesgueExponentLike, kappa_tilde: LebesgueExponentLike, n: int
    ) -> tuple[Fraction, Fraction]:
    """ |zeta| exponents multiplying ||V1||_kappa and ||V2||_kappa_tilde in the K(zeta) norm bound. """
    res = check_compactness_conditions(q1, q2, kappa, kappa_tilde, n)
    if not res:
        raise AdmissibilityError(str(res), res.violations)
    r1, r2, rk, rkt = recip(q1), recip(q2), recip(kappa), recip(kappa_tilde)
    half = Fraction(n, 2)
    return (
        half * (r1 - r2 + rk - Fraction(2, n)),
        half * (r1 - r2 + rkt - Fraction(2, n)),
    )

def holder_exponents(
    q1: LebesgueExponentLike, kappa: LebesgueExponentLike, kappa_tilde: LebesgueExponentLike
    ) -> tuple[LebesgueExponent, LebesgueExponent]:
    """ (p, ptilde) with 1/p = 1/kappa + 1/q1 and 1/ptilde = 1/kappa_tilde + 1/q1. """
    r1, rk, rkt = recip(q1), recip(kappa), recip(kappa_tilde)
    if rk + r1 > 1 or rkt + r1 > 1:
        raise ExponentDomainError(f"Hölder split leaves [1, inf]: 1/kappa + 1/q1 = {_f(rk + r1)}")
    return LebesgueExponent(rk + r1), LebesgueExponent(rkt + r1)

def cauchy_rate_exponent(q: LebesgueExponentLike, n: int) -> Fraction:
    """ Exponent of |sqrt(zeta) - sqrt(zeta')| in the free-resolvent Cauchy estimate. """
    return Fraction(n - 1, 2) - n * recip(q)


def bootstrap_sequence(
    q0: LebesgueExponentLike, kappa_tilde: LebesgueExponentLike, n: int, j_max: int
    ) -> list[LebesgueExponent]:
    """
    Exponents q_0 .. q_jmax whose reciprocals increase strictly toward (n-1)/2n:
        1/q_{j+1} = min{ (1/q_j + (n-1)/2n) / 2, 1/q_j - 2/(n+1) + 1/kappa_tilde },
    with 1/kappa_tilde replaced by 2/n in the limiting case kappa_tilde = (n+1)/2.
    """
    _require_dim(n)
    r, rkt = recip(q0), recip(kappa_tilde)
    top = Fraction(n - 1, 2 * n)
    if not r < top:
        raise ExponentDomainError(f"Need q0 > 2n/(n-1), got 1/q0 = {_f(r)}")
    if not Fraction(2, n + 1) <= rkt <= Fraction(2, n):
        raise ExponentDomainError(f"Need n/2 <= kappa_tilde <= (n+1)/2, got kappa_tilde = {kappa_tilde}")
    if j_max < 0:
        raise ExponentDomainError(f"j_max must be >= 0, got {j_max}")
    gain = Fraction(2, n) if rkt == Fraction(2, n + 1) else rkt
    seq = [LebesgueExponent(r)]
    for _ in range(j_max):
        r = min((r + top) / 2, r - Fraction(2, n + 1) + gain)
        seq.append(LebesgueExponent(r))
    return seq


def find_maxwell_bracket(
    p: LebesgueExponentLike, p_tilde: LebesgueExponentLike, q: LebesgueExponentLike,
    scan_denominator: int = 24, allow_degenerate: bool = False
    ) -> Optional[tuple[LebesgueExponent, LebesgueExponent]]:
    """
    Pick q1 <= q <= q2 with (p, ptilde, q1) and (p, ptilde, q2) admissible.
    Scans 1/r = k / scan_denominator and returns the widest admissible bracket.
    None when only q1 = q2 = q is available, unless allow_degenerate is set.
    """
    res = check_maxwell_conditions(p, p_tilde, q)
    if not res:
        raise AdmissibilityError(str(res), res.violations)
    if scan_denominator < 1:
        raise ExponentDomainError(f"Scan denominator must be positive, got {scan_denominator}")
    rq = recip(q)
    admissible = [rq] + [
        Fraction(k, scan_denominator) for k in range(scan_denominator + 1)
        if check_maxwell_conditions(p, p_tilde, LebesgueExponent(Fraction(k, scan_denominator)))
    ]
    r1, r2 = max(admissible), min(admissible)
    if r1 == r2 and not allow_degenerate:
        return None
    return LebesgueExponent(r1), LebesgueExponent(r2)
