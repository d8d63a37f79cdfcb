"""Terminating hypergeometric series and the orthogonal polynomials built on them.

Everything here is a finite sum, so these functions serve as oracles that do
not depend on any recurrence.  Arguments may be numbers or
``numpy.polynomial.Polynomial`` objects; in the latter case the result is the
polynomial itself, which is how coefficient vectors for eigenvector checks
are produced.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "PoleInLowerParameter",
    "NoTruncation",
    "HypSeries",
    "pochhammer",
    "hyp_terminating",
    "jacobi_P",
    "laguerre_L",
    "racah_R",
    "racah_R_x",
    "dual_hahn_R",
    "poly_coeffs",
]


class PoleInLowerParameter(ZeroDivisionError):
    pass


class NoTruncation(ValueError):
    pass


def _nonpos_int(x, tol=1e-12):
    """Return -x as an int if x is a nonpositive integer, else None."""
    z = complex(x)
    if abs(z.imag) > tol:
        return None
    r = round(z.real)
    if r <= 0 and abs(z.real - r) <= tol:
        return int(-r)
    return None


def pochhammer(x, n: int):
    """Rising factorial (x)_n."""
    out = 1
    for i in range(n):
        out = out * (x + i)
    return out


@dataclass(frozen=True)
class HypSeries:
    upper: tuple
    lower: tuple
    arg: object

    def __post_init__(self):
        if len(self.upper) > 4 or len(self.lower) > 3:
            raise ValueError("at most 4 upper and 3 lower parameters")

    def termination(self) -> int:
        idx = [k for k in (_nonpos_int(a) for a in self.upper) if k is not None]
        if not idx:
            raise NoTruncation("no upper parameter is a nonpositive integer")
        return min(idx)


def hyp_terminating(s: HypSeries | Sequence, lower=None, arg=None):
    """Finite sum  sum_k prod (upper)_k / prod (lower)_k * arg^k / k!.

    Can be called with a HypSeries or as ``hyp_terminating(upper, lower, arg)``.
    """
    if not isinstance(s, HypSeries):
        s = HypSeries(tuple(s), tuple(lower), arg)
    N = s.termination()
    for b in s.lower:
        k = _nonpos_int(b)
        if k is not None and k < N:
            raise PoleInLowerParameter(f"lower parameter {b} vanishes before the series ends")
    total = 0
    term = 1
    for k in range(N + 1):
        total = total + term
        if k == N:
            break
        num = 1
        for a in s.upper:
            num *= a + k
        den = 1
        for b in s.lower:
            den *= b + k
        term = term * s.arg * (num / (den * (k + 1)))
    return total


def jacobi_P(n: int, a, b, x):
    """P_n^{(a,b)}(x) = (a+1)_n / n! * 2F1(-n, n+a+b+1; a+1; (1-x)/2)."""
    if n == 0:
        return x * 0 + 1 if isinstance(x, Polynomial) else 1
    k = _nonpos_int(a + 1)
    if k is not None and k < n:
        raise PoleInLowerParameter(f"Jacobi parameter a={a} is a negative integer with |a| <= n")
    pref = pochhammer(a + 1, n) / factorial(n)
    return pref * hyp_terminating((-n, n + a + b + 1), (a + 1,), (1 - x) / 2)


def laguerre_L(n: int, alpha, x):
    """L_n^{(alpha)}(x) = (alpha+1)_n / n! * 1F1(-n; alpha+1; x)."""
    if n == 0:
        return x * 0 + 1 if isinstance(x, Polynomial) else 1
    pref = pochhammer(alpha + 1, n) / factorial(n)
    return pref * hyp_terminating((-n,), (alpha + 1,), x)


def _racah_check(n, params):
    al, be, ga, de = params
    lows = (al + 1, be + de + 1, ga + 1)
    Ns = [k for k in (_nonpos_int(v) for v in lows) if k is not None]
    if not Ns:
        raise NoTruncation("none of a+1, b+d+1, g+1 is a nonpositive integer")
    N = min(Ns)
    if n > N:
        raise PoleInLowerParameter(f"degree {n} exceeds the Racah truncation N={N}")
    return lows


def racah_R(n: int, params: Sequence, lambda_x):
    """Racah polynomial R_n(lambda(x); a, b, g, d) in the Askey normalization.

    R_n = 4F3(-n, n+a+b+1, -x, x+g+d+1; a+1, b+d+1, g+1; 1) with
    lambda(x) = x (x + g + d + 1).  The pair (-x)_k (x+g+d+1)_k is written as
    prod_{j<k} (j (j+g+d+1) - lambda), so the argument can be lambda itself
    (a number or a Polynomial).  R_n(lambda = 0) = 1.
    """
    al, be, ga, de = params
    lows = _racah_check(n, params)
    c = ga + de + 1
    total = 0
    term = 1
    for k in range(n + 1):
        total = total + term
        if k == n:
            break
        num = (-n + k) * (n + al + be + 1 + k)
        den = lows[0] + k
        den *= lows[1] + k
        den *= lows[2] + k
        term = term * (k * (k + c) - lambda_x) * (num / (den * (k + 1)))
    return total


def racah_R_x(n: int, params: Sequence, x):
    """Racah polynomial at lattice point x via the plain 4F3 sum (cross-check)."""
    al, be, ga, de = params
    lows = _racah_check(n, params)
    return hyp_terminating((-n, n + al + be + 1, -x, x + ga + de + 1), lows, 1)


def dual_hahn_R(n: int, gamma, delta, N: int, lambda_x):
    """Dual Hahn R_n(lambda(x); g, d, N) = 3F2(-n, -x, x+g+d+1; g+1, -N; 1).

    As with racah_R the argument is lambda(x) = x (x + g + d + 1).
    """
    if n > N:
        raise PoleInLowerParameter("degree exceeds N")
    k0 = _nonpos_int(gamma + 1)
    if k0 is not None and k0 < n:
        raise PoleInLowerParameter("gamma + 1 is a nonpositive integer")
    c = gamma + delta + 1
    total = 0
    term = 1
    for k in range(n + 1):
        total = total + term
        if k == n:
            break
        term = term * (k * (k + c) - lambda_x) * ((-n + k) / ((gamma + 1 + k) * (-N + k) * (k + 1)))
    return total


def poly_coeffs(p, length: int) -> np.ndarray:
    """Coefficient vector (lowest power first) of a Polynomial, padded to ``length``."""
    c = np.asarray(p.coef if isinstance(p, Polynomial) else [p], dtype=complex)
    c = np.trim_zeros(c, "b") if np.any(c) else c[:1]
    if len(c) > length and np.any(np.abs(c[length:]) > 1e-12 * max(1.0, np.abs(c).max())):
        raise ValueError("polynomial degree exceeds the requested length")
    out = np.zeros(length, dtype=complex)
    out[: min(len(c), length)] = c[:length]
    return out
