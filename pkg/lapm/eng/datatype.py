from __future__ import annotations
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Optional
import dataclasses, typing, math
from .utils import fmt_fraction, fmt_complex, parse_exponent
from .error import ExponentDomainError, ParameterError, UsageError, ShapeError

if TYPE_CHECKING:
    from .grid_field import Field, Grid

@dataclasses.dataclass(frozen=True, order=False)
class LebesgueExponent:
    """ Exponent p in [1, inf], stored through its exact reciprocal 1/p in [0, 1]. """
    reciprocal: Fraction

    def __post_init__(self):
        r = Fraction(self.reciprocal)
        if r < 0 or r > 1:
            raise ExponentDomainError(f"Exponent must lie in [1, inf], got 1/p = {fmt_fraction(r)}")
        object.__setattr__(self, 'reciprocal', r)

    @classmethod
    def of(cls, p: LebesgueExponentLike) -> LebesgueExponent:
        if isinstance(p, LebesgueExponent):
            return p
        if isinstance(p, str):
            try:
                p = parse_exponent(p)
            except ValueError as e:
                raise ExponentDomainError(str(e)) from e
        if isinstance(p, float):
            if math.isinf(p) and p > 0:
                return cls(Fraction(0))
            if not math.isfinite(p):
                raise ExponentDomainError(f"Invalid exponent {p}")
        value = Fraction(p)
        if value < 1:
            raise ExponentDomainError(f"Exponent must be >= 1, got {fmt_fraction(value)}")
        return cls(1 / value)

    @property
    def is_infinite(self) -> bool:
        return self.reciprocal == 0

    @property
    def value(self) -> Fraction | float:
        return math.inf if self.is_infinite else 1 / self.reciprocal

    def __float__(self):
        return float(self.value)

    def __str__(self):
        return fmt_fraction(self.value)

LebesgueExponentLike = typing.Union[LebesgueExponent, Fraction, int, float, str]

def recip(p: LebesgueExponentLike) -> Fraction:
    return LebesgueExponent.of(p).reciprocal

@dataclasses.dataclass
class Violation:
    constraint: str
    detail: str = ""

    def __str__(self):
        return f"{self.constraint} ({self.detail})" if self.detail else self.constraint

@dataclasses.dataclass
class CheckResult:
    system: str
    violations: list[Violation] = dataclasses.field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.admissible

    def __str__(self):
        if self.admissible:
            return f"[{self.system}] admissible"
        return f"[{self.system}] not admissible: " + "; ".join(str(v) for v in self.violations)

class LimitTag(Enum):
    INTERIOR = 'interior'
    PLUS_I0 = 'plus_i0'
    MINUS_I0 = 'minus_i0'

@dataclasses.dataclass(frozen=True)
class SpectralParameter:
    """
    Spectral parameter zeta. For the tags plus_i0 / minus_i0, `zeta` holds the real
    lambda > 0 and an evaluation needs a surrogate delta > 0 (stored or passed in).
    """
    zeta: complex
    limit_tag: LimitTag = LimitTag.INTERIOR
    delta: Optional[float] = None

    def __post_init__(self):
        z = complex(self.zeta)
        object.__setattr__(self, 'zeta', z)
        object.__setattr__(self, 'limit_tag', LimitTag(self.limit_tag))
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ParameterError(f"Spectral parameter must be finite, got {z}")
        if self.limit_tag == LimitTag.INTERIOR:
            if z.imag == 0 and z.real >= 0:
                raise ParameterError(f"Interior parameter {fmt_complex(z)} lies on the nonnegative real axis, use a ±i0 tag")
        else:
            if z.imag != 0 or z.real <= 0:
                raise ParameterError(f"A ±i0 parameter needs a real lambda > 0, got {fmt_complex(z)}")
        if self.delta is not None and not self.delta > 0:
            raise ParameterError(f"Surrogate delta must be positive, got {self.delta}")

    @classmethod
    def plus(cls, lam: float, delta: Optional[float] = None):
        return cls(complex(lam), LimitTag.PLUS_I0, delta)

    @classmethod
    def minus(cls, lam: float, delta: Optional[float] = None):
        return cls(complex(lam), LimitTag.MINUS_I0, delta)

    @property
    def is_limit(self) -> bool:
        return self.limit_tag != LimitTag.INTERIOR

    def effective(self, delta: Optional[float] = None) -> complex:
        if not self.is_limit:
            return self.zeta
        d = delta if delta is not None else self.delta
        if d is None:
            raise UsageError(f"Parameter {self} is tagged {self.limit_tag.value} but no surrogate delta was given")
        if not d > 0:
            raise ParameterError(f"Surrogate delta must be positive, got {d}")
        sign = 1 if self.limit_tag == LimitTag.PLUS_I0 else -1
        return complex(self.zeta.real, sign * d)

    def with_delta(self, delta: float) -> SpectralParameter:
        return dataclasses.replace(self, delta=delta)

    def conjugate(self) -> SpectralParameter:
        if not self.is_limit:
            return SpectralParameter(self.zeta.conjugate())
        tag = LimitTag.MINUS_I0 if self.limit_tag == LimitTag.PLUS_I0 else LimitTag.PLUS_I0
        return SpectralParameter(self.zeta, tag, self.delta)

    def __str__(self):
        if not self.is_limit:
            return f"zeta={fmt_complex(self.zeta)}"
        sign = '+' if self.limit_tag == LimitTag.PLUS_I0 else '-'
        d = '' if self.delta is None else f" (delta={self.delta:g})"
        return f"zeta={self.zeta.real:g}{sign}i0{d}"

SpectralParameterLike = typing.Union[SpectralParameter, complex, float, int]

def as_spectral_parameter(z: SpectralParameterLike) -> SpectralParameter:
    if isinstance(z, SpectralParameter):
        return z
    return SpectralParameter(complex(z))

SolveMethod = typing.Literal['free', 'neumann', 'gmres']

@dataclasses.dataclass
class SolveReport:
    solution: Field
    iterations: int
    residual: float                 # relative, recomputed from scratch
    method: SolveMethod
    converged: bool = True
    near_singular: bool = False
    zeta: complex = 0j

    def __str__(self):
        return f"Solve [{self.method}] at {fmt_complex(self.zeta)}: iterations={self.iterations}, " + \
               f"residual={self.residual:.3e}, converged={self.converged}, near_singular={self.near_singular}"

def _check_vector_pair(a: Field, b: Field, what: str):
    if a.m != 3 or b.m != 3:
        raise ShapeError(f"{what} need 3 components each, got {a.m} and {b.m}")
    if a.grid != b.grid or a.grid.n != 3:
        raise ShapeError(f"{what} must live on the same 3D grid")

@dataclasses.dataclass(frozen=True)
class CurrentPair:
    """ Electric and magnetic current densities (J_e, J_m). """
    Je: Field
    Jm: Field

    def __post_init__(self):
        _check_vector_pair(self.Je, self.Jm, "Currents")

    @property
    def grid(self) -> Grid:
        return self.Je.grid

    def is_zero(self) -> bool:
        return not (self.Je.values.any() or self.Jm.values.any())

@dataclasses.dataclass(frozen=True)
class EMState:
    E: Field
    H: Field
    zeta: complex = 0j

    def __post_init__(self):
        _check_vector_pair(self.E, self.H, "E and H")

    @property
    def grid(self) -> Grid:
        return self.E.grid

@dataclasses.dataclass
class MaxwellSolveReport(SolveReport):
    res1: float = 0.0               # ||i zeta eps E - curl H + J_e||_2
    res2: float = 0.0               # ||i zeta mu H + curl E - J_m||_2
    condition_factor: float = 0.0   # (res1 + res2) / (tol (||J_e||_2 + ||J_m||_2))

    def __str__(self):
        return super().__str__() + f", res1={self.res1:.3e}, res2={self.res2:.3e}, factor={self.condition_factor:.3g}"
