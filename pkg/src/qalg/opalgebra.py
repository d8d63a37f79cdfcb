"""Exact algebra of one-variable linear operators.

Operators are finite sums ``c(t) * D`` where ``D`` is either a derivative
power ``d^k/dt^k`` or a shift ``T^A f(t) = f(t + A)``.  Products are kept in
normal order (coefficients on the left), which is what makes commutators of
model generators cheap to compute and easy to compare.

Coefficients may be Python ints, ``Fraction`` or floats/complex.  When every
coefficient is rational the arithmetic is exact and operator equality is
structural; otherwise equality is decided by action on monomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from math import comb, sqrt
from numbers import Number
from typing import Iterable, Mapping

__all__ = [
    "OperatorError",
    "MixedKind",
    "NonPolynomialResult",
    "UnboundSymbol",
    "LaurentPoly",
    "RationalFunc",
    "Derivative",
    "Shift",
    "OpTerm",
    "LinearOperator",
    "NCExpr",
    "Sym",
    "gen",
    "sym",
    "ncomm",
    "laurent_arith",
    "compose",
    "commutator",
    "anticommutator",
    "apply",
    "equivalent",
    "operators_equal",
    "OperatorRing",
    "MatrixRing",
    "nc_evaluate",
    "nc_terms",
]


class OperatorError(Exception):
    """Base class for operator algebra failures."""


class MixedKind(OperatorError):
    """Raised when differential and shift operators are combined."""


class NonPolynomialResult(OperatorError):
    """The action of a rational-coefficient operator did not cancel to a Laurent polynomial."""


class UnboundSymbol(OperatorError):
    def __init__(self, name: str):
        super().__init__(f"generator {name!r} is not bound")
        self.name = name


def _is_exact(c) -> bool:
    return isinstance(c, (int, Fraction))


def _inv(c):
    if isinstance(c, int):
        return Fraction(1, c)
    return 1 / c


def _abs2(c) -> float:
    if isinstance(c, complex):
        return c.real * c.real + c.imag * c.imag
    return float(c) * float(c)


def _falling(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


# --------------------------------------------------------------------------
# Laurent polynomials in t
# --------------------------------------------------------------------------


class LaurentPoly:
    """Finite sum of ``c_n t^n`` with integer (possibly negative) ``n``."""

    __slots__ = ("_c",)

    def __init__(self, terms: Mapping[int, Number] | Iterable | None = None):
        c: dict[int, Number] = {}
        if terms:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for e, v in items:
                e = int(e)
                c[e] = c.get(e, 0) + v
            c = {e: v for e, v in c.items() if v != 0}
        self._c = c

    @classmethod
    def _raw(cls, c: dict) -> "LaurentPoly":
        p = cls.__new__(cls)
        p._c = c
        return p

    @classmethod
    def const(cls, c) -> "LaurentPoly":
        return cls._raw({0: c} if c != 0 else {})

    @classmethod
    def monomial(cls, n: int, c=1) -> "LaurentPoly":
        return cls._raw({int(n): c} if c != 0 else {})

    @classmethod
    def from_coeffs(cls, coeffs: Iterable, start: int = 0) -> "LaurentPoly":
        return cls((start + i, v) for i, v in enumerate(coeffs))

    @property
    def terms(self) -> dict[int, Number]:
        return dict(self._c)

    def items(self):
        return sorted(self._c.items())

    def coeff(self, n: int):
        return self._c.get(n, 0)

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self) -> bool:
        return bool(self._c)

    @property
    def degree(self) -> int:
        if not self._c:
            raise ValueError("degree of the zero polynomial")
        return max(self._c)

    @property
    def low(self) -> int:
        if not self._c:
            raise ValueError("low exponent of the zero polynomial")
        return min(self._c)

    def is_exact(self) -> bool:
        return all(_is_exact(v) for v in self._c.values())

    def is_monomial(self) -> bool:
        return len(self._c) == 1

    # arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            return other
        if isinstance(other, Number):
            return LaurentPoly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        c = dict(self._c)
        for e, v in other._c.items():
            s = c.get(e, 0) + v
            if s == 0:
                c.pop(e, None)
            else:
                c[e] = s
        return LaurentPoly._raw(c)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly._raw({e: -v for e, v in self._c.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "LaurentPoly":
        if s == 0:
            return LaurentPoly._raw({})
        return LaurentPoly._raw({e: v * s for e, v in self._c.items()})

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        c: dict[int, Number] = {}
        for e1, v1 in self._c.items():
            for e2, v2 in other._c.items():
                e = e1 + e2
                c[e] = c.get(e, 0) + v1 * v2
        return LaurentPoly._raw({e: v for e, v in c.items() if v != 0})

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return self.scale(_inv(other))
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            if self.is_monomial():
                (e, v), = self._c.items()
                return LaurentPoly.monomial(e * k, _inv(v) ** (-k))
            raise ValueError("negative power of a non-monomial")
        out = LaurentPoly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, Number):
            other = LaurentPoly.const(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    # calculus ------------------------------------------------------------

    def deriv(self, k: int = 1) -> "LaurentPoly":
        if k == 0:
            return self
        c = {}
        for e, v in self._c.items():
            f = _falling(e, k)
            if f:
                c[e - k] = v * f
        return LaurentPoly._raw(c)

    def shifted(self, a) -> "LaurentPoly":
        """Return p(t + a); only defined when there are no negative powers."""
        if a == 0 or not self._c:
            return self
        if self.low < 0:
            raise NonPolynomialResult("cannot shift a polynomial with negative powers")
        c: dict[int, Number] = {}
        for e, v in self._c.items():
            apow = 1
            for j in range(e, -1, -1):
                # binomial term C(e, j) a^(e-j) t^j
                c[j] = c.get(j, 0) + v * comb(e, j) * apow
                apow = apow * a
        return LaurentPoly._raw({e: v for e, v in c.items() if v != 0})

    def times_t(self, k: int) -> "LaurentPoly":
        return LaurentPoly._raw({e + k: v for e, v in self._c.items()})

    def __call__(self, x):
        return sum((v * x**e for e, v in self._c.items()), 0)

    def norm(self) -> float:
        return sqrt(sum(_abs2(v) for v in self._c.values()))

    def to_complex(self) -> "LaurentPoly":
        return LaurentPoly._raw({e: complex(v) for e, v in self._c.items()})

    def __repr__(self):
        if not self._c:
            return "0"
        parts = []
        for e, v in sorted(self._c.items(), reverse=True):
            if e == 0:
                parts.append(f"{v}")
            elif e == 1:
                parts.append(f"{v}*t")
            else:
                parts.append(f"{v}*t^{e}")
        return " + ".join(parts)


ONE = LaurentPoly.const(1)
T = LaurentPoly.monomial(1)


def laurent_arith(a: LaurentPoly, b: LaurentPoly, op: str) -> LaurentPoly:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def poly_divmod(num: LaurentPoly, den: LaurentPoly):
    """Long division of ordinary polynomials (no negative powers)."""
    if den.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    r = dict(num.terms)
    dd = den.degree
    lead_inv = _inv(den.coeff(dd))
    dterms = den.items()
    q: dict[int, Number] = {}
    top = max(r) if r else -1
    while r and top >= dd:
        v = r.pop(top, 0)
        if v != 0:
            f = v * lead_inv
            q[top - dd] = f
            for e, c in dterms:
                if e == dd:
                    continue
                k = e + top - dd
                s = r.get(k, 0) - f * c
                if s == 0:
                    r.pop(k, None)
                else:
                    r[k] = s
        top -= 1
        while r and top not in r and top >= dd:
            top -= 1
    return LaurentPoly(q), LaurentPoly(r)


# --------------------------------------------------------------------------
# Rational functions
# --------------------------------------------------------------------------


class RationalFunc:
    """num/den with den normalized to unit leading coefficient.

    Monomial denominators are folded into the numerator, so every
    Laurent-polynomial coefficient has ``den == 1``.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = num if isinstance(num, LaurentPoly) else LaurentPoly.const(num)
        if den is None:
            den = ONE
        elif not isinstance(den, LaurentPoly):
            den = LaurentPoly.const(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            self.num, self.den = num, ONE
            return
        if den.is_monomial():
            (e, v), = den._c.items()
            self.num, self.den = num.scale(_inv(v)).times_t(-e), ONE
            return
        # clear negative powers and common powers of t
        k = -min(num.low, den.low)
        num, den = num.times_t(k), den.times_t(k)
        j = min(num.low, den.low)
        if j:
            num, den = num.times_t(-j), den.times_t(-j)
        lead = den.coeff(den.degree)
        if lead != 1:
            li = _inv(lead)
            num, den = num.scale(li), den.scale(li)
        self.num, self.den = num, den

    @classmethod
    def of(cls, x) -> "RationalFunc":
        return x if isinstance(x, RationalFunc) else cls(x)

    def is_poly(self) -> bool:
        return self.den._c == {0: 1}

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_exact(self) -> bool:
        return self.num.is_exact() and self.den.is_exact()

    def __add__(self, other):
        other = RationalFunc.of(other)
        if self.den == other.den:
            return RationalFunc(self.num + other.num, self.den)
        return RationalFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        r = RationalFunc.__new__(RationalFunc)
        r.num, r.den = -self.num, self.den
        return r

    def __sub__(self, other):
        return self + (-RationalFunc.of(other))

    def __mul__(self, other):
        if isinstance(other, Number):
            r = RationalFunc.__new__(RationalFunc)
            r.num, r.den = self.num.scale(other), (self.den if other != 0 else ONE)
            return r
        other = RationalFunc.of(other)
        if other.is_poly():
            return RationalFunc(self.num * other.num, self.den)
        if self.is_poly():
            return RationalFunc(self.num * other.num, other.den)
        return RationalFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (Number, LaurentPoly)):
            other = RationalFunc(other)
        if not isinstance(other, RationalFunc):
            return NotImplemented
        return self.num * other.den == other.num * self.den

    def __hash__(self):
        return hash((self.num, self.den))

    def deriv(self, k: int = 1) -> "RationalFunc":
        if self.is_poly():
            return RationalFunc(self.num.deriv(k))
        out = self
        for _ in range(k):
            n, d = out.num, out.den
            out = RationalFunc(n.deriv() * d - n * d.deriv(), d * d)
        return out

    def shifted(self, a) -> "RationalFunc":
        if a == 0:
            return self
        n, d = self.num, self.den
        if n.low < 0:
            k = -n.low
            n, d = n.times_t(k), d.times_t(k)
        return RationalFunc(n.shifted(a), d.shifted(a))

    def __call__(self, x):
        return self.num(x) / self.den(x)

    def __repr__(self):
        if self.is_poly():
            return repr(self.num)
        return f"({self.num!r})/({self.den!r})"


# --------------------------------------------------------------------------
# Linear operators
# --------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Derivative:
    k: int


@dataclass(frozen=True, order=True)
class Shift:
    step: Fraction


@dataclass(frozen=True)
class OpTerm:
    coeff: RationalFunc
    action: Derivative | Shift


DIFFERENTIAL = "differential"
SHIFT = "shift"


class LinearOperator:
    """Normal-ordered sum of coefficient * action terms.

    Internally the terms are a dict keyed by derivative order (differential
    kind) or by shift step (shift kind).
    """

    __slots__ = ("kind", "_t")

    def __init__(self, kind: str, terms: Mapping | None = None):
        if kind not in (DIFFERENTIAL, SHIFT):
            raise ValueError(f"unknown operator kind {kind!r}")
        self.kind = kind
        t = {}
        for key, c in (terms or {}).items():
            key = int(key) if kind == DIFFERENTIAL else Fraction(key)
            if kind == DIFFERENTIAL and key < 0:
                raise ValueError("negative derivative order")
            c = RationalFunc.of(c)
            if key in t:
                c = t[key] + c
            if c.is_zero():
                t.pop(key, None)
            else:
                t[key] = c
        self._t = t

    @classmethod
    def _raw(cls, kind, t):
        op = cls.__new__(cls)
        op.kind = kind
        op._t = t
        return op

    # constructors --------------------------------------------------------

    @classmethod
    def scalar(cls, c, kind: str = DIFFERENTIAL) -> "LinearOperator":
        key = 0 if kind == DIFFERENTIAL else Fraction(0)
        return cls(kind, {key: c})

    @classmethod
    def identity(cls, kind: str = DIFFERENTIAL) -> "LinearOperator":
        return cls.scalar(1, kind)

    @classmethod
    def mult(cls, coeff, kind: str = DIFFERENTIAL) -> "LinearOperator":
        """Multiplication by a Laurent polynomial or rational function."""
        return cls.scalar(coeff, kind)

    @classmethod
    def d(cls, k: int = 1) -> "LinearOperator":
        return cls(DIFFERENTIAL, {k: 1})

    @classmethod
    def shift(cls, step) -> "LinearOperator":
        return cls(SHIFT, {Fraction(step): 1})

    # inspection ----------------------------------------------------------

    @property
    def terms(self) -> list[OpTerm]:
        act = Derivative if self.kind == DIFFERENTIAL else Shift
        return [OpTerm(self._t[k], act(k)) for k in sorted(self._t)]

    def items(self):
        return sorted(self._t.items())

    def coeff(self, key) -> RationalFunc:
        return self._t.get(key, RationalFunc(0))

    def is_zero(self) -> bool:
        return not self._t

    def is_exact(self) -> bool:
        return all(c.is_exact() for c in self._t.values())

    def has_polynomial_coeffs(self) -> bool:
        return all(c.is_poly() for c in self._t.values())

    def degree_shift(self) -> tuple[int, int]:
        """(max lowering, max raising) of the t-degree for polynomial coefficients.

        For shift operators the steps do not change the degree, so only the
        coefficient degrees count.
        """
        lo, hi = 0, 0
        for key, c in self._t.items():
            if c.is_zero():
                continue
            dnum, lnum = c.num.degree, c.num.low
            dden = c.den.degree
            order = key if self.kind == DIFFERENTIAL else 0
            hi = max(hi, dnum - dden - order)
            lo = max(lo, order - lnum)
        return lo, hi

    # arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "LinearOperator":
        if isinstance(other, LinearOperator):
            if other.kind != self.kind:
                raise MixedKind(f"cannot combine {self.kind} and {other.kind} operators")
            return other
        if isinstance(other, (Number, LaurentPoly, RationalFunc)):
            return LinearOperator.scalar(other, self.kind)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t = dict(self._t)
        for k, c in other._t.items():
            s = t[k] + c if k in t else c
            if s.is_zero():
                t.pop(k, None)
            else:
                t[k] = s
        return LinearOperator._raw(self.kind, t)

    __radd__ = __add__

    def __neg__(self):
        return LinearOperator._raw(self.kind, {k: -c for k, c in self._t.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "LinearOperator":
        if s == 0:
            return LinearOperator._raw(self.kind, {})
        return LinearOperator._raw(self.kind, {k: c * s for k, c in self._t.items()})

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return compose(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        if isinstance(other, (LaurentPoly, RationalFunc)):
            return compose(LinearOperator.scalar(other, self.kind), self)
        return NotImplemented

    def __pow__(self, k: int):
        out = LinearOperator.identity(self.kind)
        for _ in range(k):
            out = compose(out, self)
        return out

    def __eq__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        if self.kind != other.kind or set(self._t) != set(other._t):
            return False
        return all(self._t[k] == other._t[k] for k in self._t)

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self._t))))

    def __call__(self, f: LaurentPoly) -> LaurentPoly:
        return apply(self, f)

    def __repr__(self):
        if not self._t:
            return "0"
        sym = "D" if self.kind == DIFFERENTIAL else "T"
        parts = []
        for k, c in sorted(self._t.items(), reverse=True):
            if k == 0:
                parts.append(f"[{c!r}]")
            else:
                parts.append(f"[{c!r}]*{sym}^{k}")
        return " + ".join(parts)


def compose(a: LinearOperator, b: LinearOperator) -> LinearOperator:
    """Normal-ordered product a∘b."""
    if a.kind != b.kind:
        raise MixedKind(f"cannot compose {a.kind} with {b.kind}")
    out: dict = {}

    def acc(key, c):
        if key in out:
            s = out[key] + c
            if s.is_zero():
                del out[key]
            else:
                out[key] = s
        elif not c.is_zero():
            out[key] = c

    if a.kind == DIFFERENTIAL:
        dcache: dict = {}
        for k, ca in a._t.items():
            for j, cb in b._t.items():
                for i in range(k + 1):
                    key = (j, i)
                    if key not in dcache:
                        dcache[key] = cb.deriv(i)
                    db = dcache[key]
                    if db.is_zero():
                        continue
                    acc(k - i + j, ca * db * comb(k, i))
    else:
        for sa, ca in a._t.items():
            for sb, cb in b._t.items():
                acc(sa + sb, ca * cb.shifted(sa))
    return LinearOperator._raw(a.kind, out)


def commutator(a: LinearOperator, b: LinearOperator) -> LinearOperator:
    return compose(a, b) - compose(b, a)


def anticommutator(a: LinearOperator, b: LinearOperator) -> LinearOperator:
    return compose(a, b) + compose(b, a)


def _combine(parts: list[tuple[RationalFunc, LaurentPoly]], rtol: float = 1e-9) -> LaurentPoly:
    """Sum of c_i * g_i, forcing the result to be a Laurent polynomial."""
    poly = LaurentPoly()
    groups: dict = {}
    for c, g in parts:
        if c.is_poly():
            poly = poly + c.num * g
        else:
            key = c.den
            groups[key] = groups.get(key, LaurentPoly()) + c.num * g
    groups = {d: n for d, n in groups.items() if not n.is_zero()}
    if not groups:
        return poly
    dens = list(groups)
    total_den = ONE
    for d in dens:
        total_den = total_den * d
    num = LaurentPoly()
    for d, n in groups.items():
        other = ONE
        for d2 in dens:
            if d2 is not d:
                other = other * d2
        num = num + n * other
    if num.is_zero():
        return poly
    k = max(0, -num.low) + total_den.low
    q, r = poly_divmod(num.times_t(k), total_den)
    if not r.is_zero():
        exact = num.is_exact() and total_den.is_exact()
        if exact or r.norm() > rtol * max(1.0, num.norm()):
            raise NonPolynomialResult(
                f"rational coefficients do not cancel (remainder norm {r.norm():.3g})"
            )
    return poly + q.times_t(-k)


def apply(op: LinearOperator, f: LaurentPoly) -> LaurentPoly:
    """Exact action of ``op`` on a Laurent polynomial."""
    if not isinstance(f, LaurentPoly):
        f = LaurentPoly.const(f)
    parts = []
    if op.kind == DIFFERENTIAL:
        for k, c in op._t.items():
            g = f.deriv(k)
            if not g.is_zero():
                parts.append((c, g))
    else:
        for s, c in op._t.items():
            parts.append((c, f.shifted(s)))
    return _combine(parts)


def equivalent(a: LinearOperator, b: LinearOperator, lo: int = -4, hi: int = 12,
               rtol: float = 1e-10, step: int = 1) -> bool:
    """Action-equivalence on the monomials t^lo .. t^hi.

    For shift operators only non-negative powers are meaningful; ``step=2``
    restricts to even powers.
    """
    if a.kind != b.kind:
        raise MixedKind("kinds differ")
    if a.kind == SHIFT:
        lo = max(lo, 0)
    diff = a - b
    for n in range(lo, hi + 1):
        if step == 2 and n % 2:
            continue
        m = LaurentPoly.monomial(n)
        scale = 1.0 + max(apply(a, m).norm(), apply(b, m).norm())
        if apply(diff, m).norm() > rtol * scale:
            return False
    return True


def operators_equal(a: LinearOperator, b: LinearOperator, **kw) -> bool:
    """Structural equality in exact mode, action equivalence otherwise."""
    if a.is_exact() and b.is_exact():
        return a == b
    return equivalent(a, b, **kw)


# --------------------------------------------------------------------------
# Non-commutative expressions over generator symbols
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Sym:
    """Symmetrizer node {a, b} or {a, b, c} over sub-expressions."""

    args: tuple

    def expand(self) -> "NCExpr":
        out = NCExpr()
        for perm in permutations(self.args):
            prod = NCExpr.const(1)
            for a in perm:
                prod = prod * a
            out = out + prod
        return out.expand()

    def __str__(self):
        return "{" + ", ".join(str(a) for a in self.args) + "}"


class NCExpr:
    """Linear combination of words in generator symbols and symmetrizers."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[tuple[Number, tuple]] = ()):
        merged: dict[tuple, Number] = {}
        for c, w in terms:
            w = tuple(w)
            merged[w] = merged.get(w, 0) + c
        self.terms = tuple((c, w) for w, c in merged.items() if c != 0)

    @classmethod
    def gen(cls, name: str) -> "NCExpr":
        return cls([(1, (name,))])

    @classmethod
    def const(cls, c) -> "NCExpr":
        return cls([(c, ())])

    @staticmethod
    def _lift(x) -> "NCExpr":
        if isinstance(x, NCExpr):
            return x
        if isinstance(x, str):
            return NCExpr.gen(x)
        if isinstance(x, Number):
            return NCExpr.const(x)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return NCExpr(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return NCExpr((-c, w) for c, w in self.terms)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return NCExpr((c * other, w) for c, w in self.terms)
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return NCExpr((c1 * c2, w1 + w2) for c1, w1 in self.terms for c2, w2 in other.terms)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other * self

    def __pow__(self, k: int):
        out = NCExpr.const(1)
        for _ in range(k):
            out = out * self
        return out

    def expand(self) -> "NCExpr":
        """Replace symmetrizer nodes by their word sums (idempotent)."""
        out = []
        for c, w in self.terms:
            if not any(isinstance(x, Sym) for x in w):
                out.append((c, w))
                continue
            acc = NCExpr.const(c)
            for x in w:
                acc = acc * (x.expand() if isinstance(x, Sym) else NCExpr.gen(x))
            out.extend(acc.terms)
        return NCExpr(out)

    def symbols(self) -> set[str]:
        names: set[str] = set()
        for _, w in self.expand().terms:
            names.update(w)
        return names

    def max_word_length(self) -> int:
        return max((len(w) for _, w in self.expand().terms), default=0)

    def __eq__(self, other):
        if not isinstance(other, NCExpr):
            return NotImplemented
        return dict((w, c) for c, w in self.terms) == dict((w, c) for c, w in other.terms)

    def __hash__(self):
        return hash(frozenset((w, c) for c, w in self.terms))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for c, w in self.terms:
            word = " ".join(str(x) for x in w) if w else "1"
            parts.append(f"({c})*{word}" if c != 1 else word)
        return " + ".join(parts)

    __repr__ = __str__


def gen(*names: str):
    """Generator symbols as expressions: ``L1, L2 = gen('L1', 'L2')``."""
    out = tuple(NCExpr.gen(n) for n in names)
    return out[0] if len(out) == 1 else out


def sym(*args) -> NCExpr:
    if len(args) not in (2, 3):
        raise ValueError("symmetrizers take two or three arguments")
    return NCExpr([(1, (Sym(tuple(NCExpr._lift(a) for a in args)),))])


def ncomm(a, b) -> NCExpr:
    a, b = NCExpr._lift(a), NCExpr._lift(b)
    return a * b - b * a


def substitute(expr: NCExpr, rules: Mapping[str, NCExpr]) -> NCExpr:
    """Replace generator letters by expressions (after expanding symmetrizers)."""
    out = NCExpr()
    for c, w in expr.expand().terms:
        acc = NCExpr.const(c)
        for x in w:
            acc = acc * (rules[x] if x in rules else NCExpr.gen(x))
        out = out + acc
    return out


# --------------------------------------------------------------------------
# Rings and evaluation
# --------------------------------------------------------------------------


class OperatorRing:
    """Ring of LinearOperators of one kind."""

    def __init__(self, kind: str = DIFFERENTIAL):
        self.kind = kind

    def identity(self):
        return LinearOperator.identity(self.kind)

    def zero(self):
        return LinearOperator(self.kind)

    def add(self, a, b):
        return a + b

    def scale(self, c, a):
        return a.scale(c)

    def mul(self, a, b):
        return compose(a, b)


class MatrixRing:
    """Ring of dense square numpy matrices of a fixed size."""

    def __init__(self, dim: int):
        import numpy as np

        self._np = np
        self.dim = dim

    def identity(self):
        return self._np.eye(self.dim, dtype=complex)

    def zero(self):
        return self._np.zeros((self.dim, self.dim), dtype=complex)

    def add(self, a, b):
        return a + b

    def scale(self, c, a):
        return complex(c) * a

    def mul(self, a, b):
        return a @ b


def nc_terms(expr: NCExpr, bindings: Mapping, ring) -> list:
    """Evaluate each term of the expanded expression separately.

    Scalars in ``bindings`` stand for multiples of the identity (this is how
    H = E is bound).  Word products are memoized by prefix.
    """
    expanded = expr.expand()
    cache: dict[tuple, object] = {(): ring.identity()}

    def value(name):
        if name not in bindings:
            raise UnboundSymbol(name)
        v = bindings[name]
        if isinstance(v, Number):
            return ring.scale(v, ring.identity())
        return v

    def word_value(w):
        if w in cache:
            return cache[w]
        v = ring.mul(word_value(w[:-1]), value(w[-1]))
        cache[w] = v
        return v

    for _, w in expanded.terms:
        for name in w:
            value(name)
    return [ring.scale(c, word_value(w)) for c, w in expanded.terms]


def nc_evaluate(expr: NCExpr, bindings: Mapping, ring=None):
    """Evaluate ``expr`` in ``ring`` with generator symbols taken from ``bindings``."""
    if ring is None:
        ring = OperatorRing()
    total = ring.zero()
    for v in nc_terms(expr, bindings, ring):
        total = ring.add(total, v)
    return total
