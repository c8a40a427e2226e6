from fractions import Fraction
import math

def parse_exponent(s: str) -> Fraction | float:
    """
    Parse a Lebesgue exponent written as "a/b", an integer, a decimal, or "inf".
    Returns a Fraction, or math.inf for the infinite exponent.
    """
    t = s.strip().lower()
    if t in ('inf', 'infinity', '∞', 'oo'):
        return math.inf
    try:
        return Fraction(t)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Invalid exponent {s!r}") from e

def parse_complex(s: str) -> complex:
    """ Parse "RE+IMi" style complex numbers, e.g. "1+0.5i", "-2", "i". """
    t = s.strip().replace(' ', '').lower()
    if not t:
        raise ValueError("Empty complex number")
    if t.endswith('i'):
        t = t[:-1] + 'j'
    try:
        return complex(t)
    except ValueError as e:
        raise ValueError(f"Invalid complex number {s!r}") from e

def fmt_fraction(x: Fraction | float) -> str:
    if isinstance(x, float) and math.isinf(x):
        return 'inf'
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

def fmt_complex(z: complex, digits: int = 6) -> str:
    re, im = z.real, z.imag
    sign = '+' if im >= 0 else '-'
    return f"{re:.{digits}g}{sign}{abs(im):.{digits}g}i"

def fmt_float(x: float) -> str:
    """ Deterministic, round-trippable float text for reports. """
    if math.isnan(x):
        return 'nan'
    return repr(float(x))
