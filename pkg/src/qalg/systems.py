"""Catalog of model operator sets, their structure relations and closed forms.

Every entry builds concrete operators for one superintegrable system with the
Hamiltonian replaced by its eigenvalue E.  Relations are stored as NCExpr
objects that must vanish.  When the printed form of a relation, a model
operator or a closed-form rule disagrees with what the operators actually
satisfy, the entry keeps both: the canonical form (checked to pass) and the
printed one (checked to fail, and reported in the ledger).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import Polynomial

from . import specfun
from .matrixrep import EVEN, LATTICE, MONOMIAL, BasisSpec, RepMatrix, to_matrix
from .opalgebra import (
    DIFFERENTIAL,
    SHIFT,
    LaurentPoly,
    LinearOperator,
    NCExpr,
    OperatorRing,
    RationalFunc,
    commutator,
    gen,
    nc_evaluate,
    ncomm,
    sym,
)

__all__ = [
    "InadmissibleParams",
    "NoQuantization",
    "NoRealRoot",
    "NoRule",
    "QuantizedParam",
    "Relation",
    "ModelVariant",
    "SpectrumRule",
    "SystemMeta",
    "SystemInstance",
    "SYSTEMS",
    "system_ids",
    "build",
    "quantized_energy",
    "printed_energy",
    "closed_spectrum",
    "s9_l1_matrix",
    "sample_params",
    "rep_dim",
]


class InadmissibleParams(ValueError):
    pass


class NoQuantization(LookupError):
    pass


class NoRealRoot(ArithmeticError):
    pass


class NoRule(LookupError):
    pass


@dataclass(frozen=True)
class QuantizedParam:
    """A quantization rule that fixes a potential parameter instead of E."""

    name: str
    value: float


@dataclass
class Relation:
    name: str
    expr: NCExpr
    printed: NCExpr | None = None
    note: str = ""


@dataclass
class ModelVariant:
    """Alternative transcription of model operators, checked against the relations."""

    name: str
    generators: dict
    expect: str = "fail"  # "pass", "fail" or "differs" (fail or inconclusive)
    note: str = ""


@dataclass
class SpectrumRule:
    op: str
    expr: NCExpr
    values: list
    printed: list | None = None
    oracle: str = "none"
    vectors: list | None = None
    note: str = ""


@dataclass(frozen=True)
class SystemMeta:
    id: str
    casimir_class: str
    members: str
    table: str
    model_type: str
    degenerate: bool
    quantizes: str | None
    params: tuple
    basis: str


@dataclass
class SystemInstance:
    id: str
    params: dict
    E: complex
    branch: str | None
    m: int | None
    generators: dict
    relations: list
    ladders: list = field(default_factory=list)
    variants: list = field(default_factory=list)
    spectra: list = field(default_factory=list)
    kind: str = DIFFERENTIAL
    basis_family: str = MONOMIAL
    dim: int | None = None
    quotient_diag: str | None = None
    lattice: BasisSpec | None = None
    extra: dict = field(default_factory=dict)

    @property
    def meta(self) -> SystemMeta:
        return SYSTEMS[self.id].meta

    def primary_generators(self) -> list[str]:
        return [k for k in self.generators if k not in ("H", "I", "R")]


# --------------------------------------------------------------------------
# small helpers
# --------------------------------------------------------------------------

L1, L2, L3, R, H, X, A, Ad, K1, K2 = gen("L1", "L2", "L3", "R", "H", "X", "A", "Adag", "K1", "K2")

t = LaurentPoly.monomial(1)
D = LinearOperator.d(1)
D2 = LinearOperator.d(2)
I_ = 1j


def mult(p, kind=DIFFERENTIAL) -> LinearOperator:
    return LinearOperator.mult(p, kind)


def csqrt(x):
    """Principal square root; exact for perfect-square rationals."""
    if isinstance(x, (int, Fraction)) and x >= 0:
        x = Fraction(x)
        n, d = x.numerator, x.denominator
        rn, rd = int(round(n**0.5)), int(round(d**0.5))
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
    z = cmath.sqrt(complex(x))
    return z


def _clean(z):
    """Drop a negligible imaginary part so real inputs give real outputs."""
    if isinstance(z, complex) and z.imag == 0:
        return z.real
    return z


def _bind(gens: dict, E) -> dict:
    out = dict(gens)
    out["H"] = E
    out["I"] = 1
    return out


def _derived(expr: NCExpr, gens: dict, kind=DIFFERENTIAL) -> LinearOperator:
    return nc_evaluate(expr, _bind(gens, gens.get("H", 0)), OperatorRing(kind))


def _with_R(gens: dict) -> dict:
    gens = dict(gens)
    gens["R"] = commutator(gens["L1"], gens["L2"])
    return gens


def _monomial_vec(p: Polynomial, length: int, step: int = 1) -> np.ndarray:
    c = specfun.poly_coeffs(p, length * step)
    return c[::step][:length]


def _reversed_in_t(p: Polynomial, k: int, scale) -> Polynomial:
    """t^k p(scale / t) as a polynomial in t (p of degree <= k)."""
    c = np.zeros(k + 1, dtype=complex)
    for j, v in enumerate(p.coef):
        if j <= k:
            c[k - j] += v * scale**j
    return Polynomial(c)


def _bisect(f, lo, hi, tol=1e-15, maxit=400):
    flo = f(lo)
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or (hi - lo) <= tol * max(1.0, abs(mid)):
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _positive_root(f, scale=1.0):
    """Bisection for the positive root of f with f(0+) > 0 and f -> -inf."""
    lo = 1e-12
    if f(lo) <= 0:
        raise NoRealRoot("f is not positive near zero")
    hi = max(1.0, scale)
    for _ in range(200):
        if f(hi) < 0:
            return _bisect(f, lo, hi)
        hi *= 2.0
    raise NoRealRoot("could not bracket a positive root")


# --------------------------------------------------------------------------
# system definitions
# --------------------------------------------------------------------------


@dataclass
class SystemDef:
    meta: SystemMeta
    make: Callable
    energy: Callable | None = None
    printed_energy: Callable | None = None
    branches: tuple = (None,)
    dim_offset: int = 0
    sampler: Callable | None = None
    defaults: dict = field(default_factory=dict)


SYSTEMS: dict[str, SystemDef] = {}


def _register(defn: SystemDef):
    SYSTEMS[defn.meta.id] = defn
    return defn


def _u(rng, lo=0.2, hi=1.5):
    return float(rng.uniform(lo, hi))


# ---------------------------------------------------------------- E1 -----


def _e1_L2(w, a, b, E, k=Fraction(1, 2), t_fix=True, half=True):
    first = 16 * (E - 2 * w * b - 6 * w) * t**2
    second = 2 * (E - 4 * w * b - 8 * w) * (t if t_fix else 1)
    if half:
        c0 = (-2 * E * (1 + b) + (4 * b**2 + 8 * b + 5) * w) / (2 * w)
    else:
        c0 = -2 * E * (1 + b) / w + 4 * b**2 + 8 * b + 5
    return (
        mult(Fraction(1, 2) * t * (8 * t + 1) ** 2) * D2
        - mult((first + second) / w - (1 + b) * k) * D
        + mult(2 * t * ((E - 4 * w - 2 * w * b) ** 2 - 4 * w**2 * a**2) / w**2 + c0)
    )


def _e1_make(p, E, branch, m):
    w, a, b = p["omega"], p["a"], p["b"]
    if w == 0:
        raise InadmissibleParams("omega must be nonzero")
    gens = {
        "L1": mult(-4 * w * t) * D + (E - 2 * w * (1 + b)),
        "L2": _e1_L2(w, a, b, E),
        "A": mult(t) * D2 + (1 + b) * D,
        "Adag": mult(64 * t**3) * D2
        - mult(32 * (E - 2 * w * b - 6 * w) / w * t**2) * D
        + mult(4 * ((E - 2 * w * b - 4 * w) ** 2 - 4 * a**2 * w**2) / w**2 * t),
    }
    gens = _with_R(gens)
    rels = [
        Relation(
            "[R,L1]",
            ncomm(R, L1) - (8 * L1 * L1 - 8 * H * L1 - 16 * w**2 * L2 + 8 * w**2),
            printed=ncomm(R, L1) - (8 * L1 * L1 - 8 * H * L1 + 16 * w**2 * L2 - 8 * w**2),
            note="printed signs of the omega^2 L2 and omega^2 terms are reversed",
        ),
        Relation(
            "[R,L2]",
            ncomm(R, L2)
            - (8 * H * L2 - 8 * sym(L1, L2) + (12 - 16 * a**2) * H + (16 * a**2 + 16 * b**2 - 24) * L1),
        ),
        Relation(
            "R^2",
            R * R
            - (
                8 * H * sym(L1, L2)
                - Fraction(8, 3) * sym(L1, L1, L2)
                + 16 * w**2 * L2 * L2
                + 16 * (a**2 - 1) * H * H
                + (16 * a**2 + 16 * b**2 - Fraction(200, 3)) * L1 * L1
                - (32 * a**2 - Fraction(200, 3)) * H * L1
                - Fraction(176, 3) * w**2 * L2
                - Fraction(4, 3) * w**2 * (48 * a**2 * b**2 - 48 * a**2 - 48 * b**2 + 29)
            ),
        ),
    ]
    lad_base = L2 - L1 * L1 * (1 / (2 * w**2)) + (E / (2 * w**2)) * L1 - Fraction(1, 2)
    ladders = [
        Relation("A = L2 + R/(4w) - L1^2/(2w^2) + E L1/(2w^2) - 1/2", A - (lad_base + R * (1 / (4 * w)))),
        Relation("Adag = L2 - R/(4w) - L1^2/(2w^2) + E L1/(2w^2) - 1/2", Ad - (lad_base - R * (1 / (4 * w)))),
        Relation("[L1,A] = 4wA", ncomm(L1, A) - 4 * w * A),
        Relation("[L1,Adag] = -4wAdag", ncomm(L1, Ad) + 4 * w * Ad),
        Relation(
            "[A,Adag]",
            ncomm(A, Ad)
            - (
                (-4 / w**3) * L1 * L1 * L1
                + (6 * E / w**3) * L1 * L1
                - (2 / w**3) * (E**2 - 4 * w**2 * (a**2 + b**2 - 2)) * L1
                - 8 * E * (a**2 - 1) / w
            ),
            printed=ncomm(A, Ad)
            - (
                (-4 / w**3) * L1 * L1 * L1
                + (6 * E / w**3) * L1 * L1
                - (2 / w**3) * (E**2 - 4 * w**2 * (a**2 + b**2 + 2)) * L1
                - 8 * E * (a**2 - 1) / w
            ),
            note="printed L1 coefficient has a^2+b^2+2 where the model gives a^2+b^2-2",
        ),
    ]
    variants = [
        ModelVariant(
            "L2 with (1+b)/3 first-derivative constant",
            {"L2": _e1_L2(w, a, b, E, k=Fraction(1, 3))},
            note="second printed listing of the model; only (1+b)/2 satisfies the relations",
        ),
        ModelVariant(
            "L2 as first printed (no t on the linear term, doubled constant)",
            {"L2": _e1_L2(w, a, b, E, t_fix=False, half=False)},
        ),
        ModelVariant(
            "L2 as second printed ((1+b)/3, no t on the linear term, doubled constant)",
            {"L2": _e1_L2(w, a, b, E, k=Fraction(1, 3), t_fix=False, half=False)},
        ),
        ModelVariant(
            "Adag closed form with a^2 w in place of a^2 w^2",
            {
                "Adag": mult(64 * t**3) * D2
                - mult(32 * (E - 2 * w * b - 6 * w) / w * t**2) * D
                + mult(4 * ((E - 2 * w * b - 4 * w) ** 2 - 4 * a**2 * w) / w**2 * t)
            },
            expect=_e1_adag_expect(w, a),
        ),
    ]
    inst = SystemInstance("E1", dict(p), E, branch, m, gens, rels, ladders, variants)
    if m is not None:
        sa = a if branch != "-" else -a
        vals1 = [E - 2 * w * (1 + b) - 4 * w * n for n in range(m)]
        lam = [
            -Fraction(3, 2) - 2 * b - 2 * sa - 4 * k - 2 * b * sa - 4 * b * k - 4 * sa * k - 4 * k * k
            for k in range(m)
        ]
        z = Polynomial([0, 1])
        vecs = []
        for k in range(m):
            f = (8 * z + 1) ** (m - 1 - k) * specfun.hyp_terminating((-k, -sa - k), (1 + b,), -8 * z)
            vecs.append(_monomial_vec(f, m))
        inst.spectra = [
            SpectrumRule("L1", L1, vals1, oracle="diagonal", vectors=[np.eye(m)[n] for n in range(m)]),
            SpectrumRule("L2", L2, lam, oracle="jacobi", vectors=vecs,
                         note="psi_k = (8t+1)^(m-1-k) 2F1(-k,-a-k;1+b;-8t), a Jacobi polynomial in (1-8t)/(1+8t)"),
        ]
    return inst


def _e1_adag_expect(w, a):
    # the variant moves the t coefficient by 16 a^2 (w - w^2) / w^2: it
    # coincides with the model at w = 1 and is hard to tell apart near it
    gap = abs(complex(16 * a**2 * (w - w**2) / w**2))
    if gap < 1e-12:
        return "pass"
    return "fail" if gap > 0.1 else "differs"


def _e1_energy(m, p, branch):
    w, a, b = p["omega"], p["a"], p["b"]
    sa = a if branch != "-" else -a
    return 2 * w * (2 * m + b + sa)


def _e1_printed(m, p, branch):
    w, a, b = p["omega"], p["a"], p["b"]
    return -2 * w * (2 * m + a + b)


_register(SystemDef(
    SystemMeta("E1", "L1^2 L2 + f(alpha_i,H) L2^2", "E1, E16, S2, S4", "non-degenerate",
               "differential", False, "energy", ("omega", "a", "b"), MONOMIAL),
    _e1_make, _e1_energy, _e1_printed, branches=("+", "-"),
    sampler=lambda rng: {"omega": _u(rng), "a": _u(rng), "b": _u(rng)},
    defaults={"omega": 1.0, "a": 0.5, "b": 0.5},
))


# ---------------------------------------------------------------- E2 -----


def _e2_L2(w, b, c, E, printed=False):
    q2 = (16 * (E - 6 * w) if printed else -16 * (E - 6 * w)) + b**2 / w**2
    const = (16 * E * w**2 - 32 * w**3 - b**2) / (128 * w**4)
    if not printed:
        const = b * const
    return (
        mult(32 * w * t**3) * D2
        + mult(q2 * t**2 - b / (2 * w) * t - Fraction(1, 8)) * D
        + mult(((16 * E * w**2 - 64 * w**3 - b**2) ** 2 - (32 * w**3 * c) ** 2) / (128 * w**5) * t + const)
    )


def _e2_make(p, E, branch, m):
    w, b, c = p["omega"], p["b"], p["c"]
    if w == 0:
        raise InadmissibleParams("omega must be nonzero")
    q = 16 * E * w**2 - 64 * w**3 - b**2
    gens = {
        "L1": mult(4 * w * t) * D + (2 * w + b**2 / (16 * w**2)),
        "L2": _e2_L2(w, b, c, E),
        "A": mult(Fraction(-1, 4)) * D,
        "Adag": mult(64 * w * t**3) * D2
        + mult(2 * (-16 * E * w**2 + b**2 + 96 * w**3) / w**2 * t**2) * D
        + mult((q**2 - (32 * c * w**3) ** 2) / (64 * w**5) * t),
    }
    gens = _with_R(gens)
    rels = [
        Relation("[L1,R]", ncomm(L1, R) - (-2 * b * H + 16 * w**2 * L2 + 2 * b * L1)),
        Relation(
            "[L2,R]",
            ncomm(L2, R) - (8 * L1 * H - 6 * L1 * L1 - 2 * H * H - 2 * b * L2 - 8 * w**2 * (1 - c**2)),
            printed=ncomm(L2, R) - (8 * L1 * H - 6 * L1 * L1 - 2 * H * H + 2 * b * L2 - 8 * w**2 * (1 - c**2)),
            note="printed sign of the b L2 term is reversed",
        ),
        Relation(
            "R^2",
            R * R
            - (
                4 * L1 * L1 * L1 + 4 * L1 * H * H - 8 * L1 * L1 * H + 16 * w**2 * L2 * L2
                - 4 * b * L2 * H + 2 * b * sym(L1, L2) + 16 * w**2 * (3 - c**2) * L1
                - 32 * w**2 * H - b**2 * (1 - c**2)
            ),
        ),
    ]
    ladders = [
        Relation(
            "A = L2 - R/(4w) + b(L1 - E)/(8w^2)",
            A - (L2 - R * (1 / (4 * w)) + (b / (8 * w**2)) * (L1 - E)),
            printed=A - (L2 - R * (1 / (4 * w)) + (b / (4 * w**2)) * L1 - b * E / (4 * w**2)),
            note="printed b/(4w^2) must be b/(8w^2) for A to be a ladder operator",
        ),
        Relation(
            "Adag = L2 + R/(4w) + b(L1 - E)/(8w^2)",
            Ad - (L2 + R * (1 / (4 * w)) + (b / (8 * w**2)) * (L1 - E)),
            printed=Ad - (L2 + R * (1 / (4 * w)) + (b / (4 * w**2)) * L1 - b * E / (4 * w**2)),
            note="same b/(8w^2) correction as for A",
        ),
        Relation("[L1,A] = -4wA", ncomm(L1, A) + 4 * w * A),
        Relation("[L1,Adag] = 4wAdag", ncomm(L1, Ad) - 4 * w * Ad),
        Relation(
            "[A,Adag]",
            ncomm(A, Ad)
            - (
                (-3 / w) * L1 * L1
                + (32 * E * w**2 + b**2) / (8 * w**3) * L1
                - (8 * E**2 * w**2 + b**2 * E + 32 * w**4 * (1 - c**2)) / (8 * w**3)
            ),
            printed=ncomm(A, Ad)
            - (
                (-3 / w) * L1 * L1
                + (32 * w**2 + b) / (8 * w**3) * L1
                - (8 * E**2 * w**2 + b**2 * E + 32 * w**4 * (1 - c**2)) / (8 * w**3)
            ),
            note="printed L1 coefficient (32w^2+b)/(8w^3) should be (32Ew^2+b^2)/(8w^3)",
        ),
    ]
    variants = [
        ModelVariant("L2 as printed (+16(E-6w) t^2 term, constant without factor b)",
                     {"L2": _e2_L2(w, b, c, E, printed=True)}),
        ModelVariant("A closed form as printed, (1/w^2) d/dt", {"A": mult(1 / w**2) * D}),
    ]
    inst = SystemInstance("E2", dict(p), E, branch, m, gens, rels, ladders, variants)
    if m is not None:
        vals = [4 * w * n + 2 * w + b**2 / (16 * w**2) for n in range(m)]
        inst.spectra = [SpectrumRule("L1", L1, vals, oracle="diagonal",
                                     vectors=[np.eye(m)[n] for n in range(m)])]
    return inst


def _e2_energy(m, p, branch):
    w, b, c = p["omega"], p["b"], p["c"]
    eps = -1 if branch == "-" else 1
    return 4 * w * m + 2 * eps * w * c + b**2 / (16 * w**2)


def _e2_printed(m, p, branch):
    w, b, c = p["omega"], p["b"], p["c"]
    eps = -1 if branch == "-" else 1
    return 4 * w * (m + 2 * eps * c) + b**2 / (16 * w**2)


_register(SystemDef(
    SystemMeta("E2", "L1^3 + f(alpha_i,H) L2^2", "E2, S1", "non-degenerate",
               "differential", False, "energy", ("omega", "b", "c"), MONOMIAL),
    _e2_make, _e2_energy, _e2_printed, branches=("+", "-"),
    sampler=lambda rng: {"omega": _u(rng), "b": _u(rng), "c": _u(rng)},
    defaults={"omega": 1.0, "b": 0.0, "c": 0.5},
))


# ---------------------------------------------------------------- E10 ----


def _e10_make(p, E, branch, m):
    al, be, ga = p["alpha"], p["beta"], p["gamma"]
    if ga == 0:
        raise InadmissibleParams("gamma must be nonzero")
    g = csqrt(-ga)
    kap = 1 + g * (ga**2 * E + al * be * ga + be**3) / (2 * ga**3)
    const2 = (2 * be * ga**2 * E + al**2 * ga**2 + 4 * al * be**2 * ga + 3 * be**4) / ga**3

    def L2_of(kappa, sign):
        return (
            mult(sign * 256 * ga) * D2
            + mult(t**2 + 32 * al + 48 * be**2 / ga) * D
            + mult(kappa * t - const2)
        )

    gens = {
        "L1": mult(16 * ga) * D - be**2 / ga,
        "L2": L2_of(kap, -1),
        "K1": mult(16 * ga) * D,
        "K2": mult(t**2) * D + mult(kap * t),
    }
    gens = _with_R(gens)
    casimir_k = lambda g4: R * R - (
        32 * ga * sym(K1, K2) - 64 * ga * H * H - 128 * be * (al * ga + be**2) / ga * H
        - 64 * (be**6 + 4 * g4 + al**2 * be**2 * ga**2 + 2 * al * be**4 * ga) / ga**3
    )
    rels = [
        Relation("[R,L1]", ncomm(R, L1) - (-32 * ga * L1 - 32 * be**2)),
        Relation("[R,L2]", ncomm(R, L2) - (96 * L1 * L1 - 128 * al * L1 + 32 * ga * L2 + 64 * be * H + 32 * al**2)),
        Relation(
            "R^2",
            R * R - (64 * L1 * L1 * L1 + 32 * ga * sym(L1, L2) - 128 * al * L1 * L1 - 64 * ga * H * H
                     + 128 * be * H * L1 + 64 * be**2 * L2 + 64 * al**2 * L1 - 128 * be * al * H - 256 * ga**2),
            printed=R * R - (64 * L1 * L1 * L1 + 32 * ga * sym(L1, L2) - 128 * al * L1 * L1 - 64 * ga * H * H
                             - 128 * be * H * L1 + 64 * be**2 * L2 + 64 * al**2 * L1 - 128 * be * al * H - 256 * ga**2),
            note="printed sign of the beta H L1 term is reversed",
        ),
        Relation("K1 = L1 + beta^2/gamma", K1 - (L1 + be**2 / ga)),
        Relation(
            "K2 = L2 + L1^2/gamma - (beta^2+2 alpha gamma)L1/gamma^2 + 2 beta H/gamma + (alpha gamma+beta^2)^2/gamma^3",
            K2 - (L2 + (1 / ga) * L1 * L1 - (be**2 + 2 * al * ga) / ga**2 * L1 + (2 * be / ga) * H
                  + (al * ga + be**2) ** 2 / ga**3),
        ),
        Relation("[R,K1]", ncomm(R, K1) + 32 * ga * K1),
        Relation("[R,K2]", ncomm(R, K2) - 32 * ga * K2),
        Relation("[K1,K2] = R", ncomm(K1, K2) - R),
        Relation("R^2 (K basis)", casimir_k(ga**5), printed=casimir_k(ga**4),
                 note="printed 4 gamma^4 in the constant should be 4 gamma^5"),
    ]
    root_g = csqrt(ga)
    kap_printed = 1 + root_g * (ga**2 * E + al * be * ga + be**3) / (2 * ga**3)
    variants = [
        ModelVariant("L2 as printed (+256 gamma d^2/dt^2, sqrt(gamma) in the t coefficient)",
                     {"L2": L2_of(kap_printed, +1)}),
    ]
    inst = SystemInstance("E10", dict(p), E, branch, m, gens, rels, [], variants)
    if m is not None:
        vals = [4 * g * (m - 2 * n - 1) for n in range(m)]
        z = Polynomial([0, 1])
        vecs = [_monomial_vec((4 * g + z) ** n * (4 * g - z) ** (m - n - 1), m) for n in range(m)]
        inst.spectra = [SpectrumRule("K1+K2", K1 + K2, vals, oracle="product", vectors=vecs)]
    return inst


def _e10_energy(m, p, branch):
    al, be, ga = p["alpha"], p["beta"], p["gamma"]
    return _clean(2 * m * csqrt(-ga) - al * be / ga - be**3 / ga**2)


def _e10_printed(m, p, branch):
    al, be, ga = p["alpha"], p["beta"], p["gamma"]
    return _clean(2j * csqrt(ga) * m - al * be / ga - be**3 / ga)


_register(SystemDef(
    SystemMeta("E10", "L1^3 + f(alpha_i,H) L1L2", "E9, E10", "non-degenerate",
               "differential", False, "energy", ("alpha", "beta", "gamma"), MONOMIAL),
    _e10_make, _e10_energy, _e10_printed,
    sampler=lambda rng: {"alpha": _u(rng), "beta": _u(rng), "gamma": -_u(rng)},
    defaults={"alpha": 0.0, "beta": 0.0, "gamma": -1.0},
))


# ---------------------------------------------------------------- E15 ----


def _e15_make(p, E, branch, m):
    a = p["a"]
    gens = {"L1": D + a, "L2": mult(I_ * t) * D + mult(I_ * a * t)}
    gens = _with_R(gens)
    rels = [Relation("[L1,L2] = iL1", ncomm(L1, L2) - I_ * L1)]
    return SystemInstance("E15", dict(p), E, branch, m, gens, rels)


_register(SystemDef(
    SystemMeta("E15", "L1^3 + 0", "E15", "non-degenerate", "differential", False, None, ("a",), MONOMIAL),
    _e15_make,
    sampler=lambda rng: {"a": _u(rng)},
    defaults={"a": 2.0},
))


# ---------------------------------------------------------------- E8 -----


def _e8_radicals(p, branch):
    al, ga = p["alpha"], p["gamma"]
    ra, rg = csqrt(al), csqrt(-ga)
    if branch == "+":
        ra, rg = -ra, -rg
    return ra, rg


def _e8_make(p, E, branch, m):
    al, be, ga = p["alpha"], p["beta"], p["gamma"]
    if al == 0 or ga == 0:
        raise InadmissibleParams("E8 needs alpha != 0 and gamma != 0")
    ra, rg = _e8_radicals(p, branch)
    r0 = -((1 - be / (2 * ra)) ** 2) - al
    pcoef = 2 * be / ra - 8

    def L2_of(const):
        return mult(-4 * (t**2 - 1)) * D2 + mult(pcoef * t + 2 * E / rg) * D + const

    gens = {"L1": mult(2 * ra * rg * t), "L2": L2_of(r0)}
    gens = _with_R(gens)
    rels = [
        Relation("[R,L1]", ncomm(R, L1) - (8 * L1 * L1 + 32 * al * ga)),
        Relation("[R,L2]", ncomm(R, L2) - (-8 * sym(L1, L2) + 8 * be * H - 16 * (al + 1) * L1),
                 note="the printed coefficient of H is written with b; it is beta"),
        Relation(
            "R^2",
            R * R - (-Fraction(8, 3) * sym(L1, L1, L2) - (16 * al + Fraction(176, 3)) * L1 * L1
                     + 16 * al * H * H - 64 * al * ga * L2 + 16 * be * L1 * H
                     - 64 * ga * al**2 - 16 * ga * be**2 + Fraction(64, 3) * al * ga),
        ),
    ]
    variants = [
        ModelVariant("L2 constant as printed, -(1 + beta/(2 sqrt(alpha)))^2 - alpha",
                     {"L2": L2_of(-((1 + be / (2 * ra)) ** 2) - al)}),
    ]
    inst = SystemInstance("E8", dict(p), E, branch, m, gens, rels, [], variants,
                          quotient_diag="L2")
    if m is not None:
        d = m + 1
        lam = [-4 * n * n + pcoef * n + 4 * n + r0 for n in range(d)]
        # -4n(n-1) from the second-order term plus p n, written as -4n^2 + (p + 4) n
        printed = [
            -4 * n * n + (8 * be * csqrt(al) - 16 * al) / (4 * al) * n
            - (4 * al**2 + 4 * al + 4 * be * csqrt(al) - be**2) / (4 * al)
            for n in range(d)
        ]
        ja = E / (4 * rg) - be / (4 * ra)
        jb = -E / (4 * rg) - be / (4 * ra)
        z = Polynomial([0, -1])
        vecs = [_monomial_vec(specfun.jacobi_P(n, ja, jb, z), d) for n in range(d)]
        inst.spectra = [SpectrumRule("L2", L2, lam, printed=printed, oracle="jacobi", vectors=vecs,
                                     note="eigenvectors are P_n^(a,b)(-t) in the monomial basis")]
        inst.extra["jacobi_params"] = (ja, jb)
    return inst


def _e8_energy(m, p, branch):
    ra, rg = _e8_radicals(p, branch)
    be = p["beta"]
    # closure of the quotient at dimension m+1 (lowering coefficient C_{m+1} = 0)
    return _clean(2 * rg * (2 * m + 2 - be / (2 * ra)))


def _e8_printed(m, p, branch):
    al, be, ga = p["alpha"], p["beta"], p["gamma"]
    s = 1 if branch == "+" else -1
    return _clean(2 * csqrt(-ga) * (2 * m + 2 + s * be / (2 * csqrt(al))))


_register(SystemDef(
    SystemMeta("E8", "L1^2 L2 + 0", "E7, E8, E17, E19", "non-degenerate",
               "differential", False, "energy", ("alpha", "beta", "gamma"), MONOMIAL),
    _e8_make, _e8_energy, _e8_printed, branches=("-", "+"), dim_offset=1,
    sampler=lambda rng: {"alpha": _u(rng), "beta": _u(rng), "gamma": -_u(rng)},
    defaults={"alpha": 0.81, "beta": 0.6, "gamma": -1.21},
))


# ---------------------------------------------------------------- S9 -----


def s9_mu_from_energy(p, E):
    s = 2 * p["a"] + 2 * p["b"] + 2 * p["c"]
    if "mu" in p and _s9_energy_of(p, p["mu"]) == E:
        return p["mu"]
    u = csqrt(1 - 4 * E)
    return _clean((u - s - 4) / 4)


def _s9_energy_of(p, mu):
    s = 2 * p["a"] + 2 * p["b"] + 2 * p["c"]
    return -Fraction(1, 4) * (4 * mu + s + 5) * (4 * mu + s + 3)


def s9_model(a, b, c, mu):
    """tau, tau* and the generators L1, L3 of the Wilson-type difference model."""
    half = Fraction(1, 2)
    al = -(a + c + 1) / 2 - mu
    be = (a + c + 1) / 2
    ga = (a - c + 1) / 2
    de = (a + c - 1) / 2 + b + mu + 2
    tinv2 = LaurentPoly.monomial(-1, Fraction(1, 2))
    tau = LinearOperator(SHIFT, {half: RationalFunc(tinv2), -half: RationalFunc(-tinv2)})
    plus = (al + t) * (be + t) * (ga + t) * (de + t)
    minus = (al - t) * (be - t) * (ga - t) * (de - t)
    taus = LinearOperator(SHIFT, {half: RationalFunc(plus * tinv2), -half: RationalFunc(-(minus * tinv2))})
    L1op = (tau * 0) + taus * tau * (-4) + (-2 * (a + 1) * (b + 1) + half)
    return {"tau": tau, "taus": taus, "L1": L1op, "wilson": (al, be, ga, de)}


def _s9_make(p, E, branch, m):
    a, b, c = p["a"], p["b"], p["c"]
    mu = s9_mu_from_energy(p, E)
    mod = s9_model(a, b, c, mu)
    half = Fraction(1, 2)
    L3op = mult(-4 * t**2 + a**2 + c**2 - half, SHIFT)
    L1op = mod["L1"]
    shift_c = E - Fraction(3, 4) + a**2 + b**2 + c**2
    L2op = L1op * (-1) - L3op + shift_c
    gens = _with_R({"L1": L1op, "L2": L2op, "L3": L3op})
    a1, a2, a3 = Fraction(1, 4) - c**2, Fraction(1, 4) - a**2, Fraction(1, 4) - b**2
    Ls = {1: L1, 2: L2, 3: L3}
    av = {1: a1, 2: a2, 3: a3}
    rels = []
    for i, j, k in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        Li, Lj, Lk = Ls[i], Ls[j], Ls[k]
        rels.append(Relation(
            f"[L{i},R]",
            ncomm(Li, R) - (4 * sym(Li, Lk) - 4 * sym(Li, Lj) - (8 + 16 * av[j]) * Lj
                            + (8 + 16 * av[k]) * Lk + 8 * (av[j] - av[k])),
        ))
    rels.append(Relation(
        "R^2",
        R * R - (Fraction(8, 3) * sym(L1, L2, L3) - (16 * a1 + 12) * L1 * L1 - (16 * a2 + 12) * L2 * L2
                 - (16 * a3 + 12) * L3 * L3 + Fraction(52, 3) * (sym(L1, L2) + sym(L2, L3) + sym(L3, L1))
                 + Fraction(1, 3) * (16 + 176 * a1) * L1 + Fraction(1, 3) * (16 + 176 * a2) * L2
                 + Fraction(1, 3) * (16 + 176 * a3) * L3 + Fraction(32, 3) * (a1 + a2 + a3)
                 + 48 * (a1 * a2 + a2 * a3 + a3 * a1) + 64 * a1 * a2 * a3),
    ))
    L3p = mult(-4 * t**2 + a**2 + c**2, SHIFT)
    Ep = E + Fraction(3, 2) - a**2 - b**2 - c**2
    L2p = L1op * (-1) - L3p + (Ep - Fraction(3, 4) + a**2 + b**2 + c**2)
    variants = [
        ModelVariant("L3 = -4t^2 + a^2 + c^2 and E as printed (extra 3/2 - a^2 - b^2 - c^2)",
                     {"L3": L3p, "L2": L2p}),
    ]
    inst = SystemInstance("S9", dict(p), E, branch, m, gens, rels, [], variants,
                          kind=SHIFT, basis_family=EVEN, quotient_diag="L1")
    inst.extra.update(mu=mu, wilson=mod["wilson"], tau=mod["tau"], taus=mod["taus"])
    if m is not None:
        d = m + 1
        vals = [-4 * n * (n + a + b + 1) - 2 * (a + 1) * (b + 1) + half for n in range(d)]
        wa, wb, wc, wd = mod["wilson"]
        rparams = (wa + wb - 1, wc + wd - 1, wa + wd - 1, wa - wd)
        T = Polynomial([0, 1])  # variable t^2
        vecs = []
        for n in range(d):
            poly = specfun.racah_R(n, rparams, T - wa**2)
            vecs.append(specfun.poly_coeffs(poly, d))
        inst.spectra = [SpectrumRule("L1", L1, vals, oracle="racah", vectors=vecs,
                                     note="Racah R_n(t^2 - alpha^2) in the even-monomial basis")]
        inst.extra["racah_params"] = rparams
    return inst


def _s9_energy(m, p, branch):
    return _s9_energy_of(p, m)


def _s9_printed(m, p, branch):
    a, b, c = p["a"], p["b"], p["c"]
    return _s9_energy_of(p, m) + Fraction(3, 2) - a**2 - b**2 - c**2


_register(SystemDef(
    SystemMeta("S9", "L1L2(L1+L2) + f(alpha_i,H) L1L2", "S7, S8, S9", "non-degenerate",
               "difference", False, "energy", ("a", "b", "c"), EVEN),
    _s9_make, _s9_energy, _s9_printed, dim_offset=1,
    sampler=lambda rng: {"a": _u(rng), "b": _u(rng), "c": _u(rng), "mu": _u(rng)},
    defaults={"a": 0.3, "b": 0.4, "c": 0.6},
))


def s9_l1_matrix(params: Mapping, m: int) -> RepMatrix:
    """L1 = -4 tau* tau - 2(a+1)(b+1) + 1/2 at mu = m on EvenMonomial(m)."""
    mod = s9_model(params["a"], params["b"], params["c"], m)
    return to_matrix(mod["L1"], BasisSpec(EVEN, m))


# ---------------------------------------------------------------- E20 ----


def _e20_make(p, E, branch, m):
    al, be, ga = p["alpha"], p["beta"], p["gamma"]
    s = csqrt(E)
    if s == 0:
        raise InadmissibleParams("E20 needs E != 0")
    k = -E / 2 + s * al + (be**2 + ga**2) / s

    def L2_of(kk, const):
        return mult(-E / 2 * t**2 + 2) * D + mult(kk * t + const)

    gens = {
        "L1": mult(-2 * s * t) * D + (-s + 2 * al + 4 * be**2 / E),
        "L2": L2_of(k, 4 * be * ga / E),
        "A": mult(4) * D,
        "Adag": mult(-E * t**2) * D - mult((s**3 - 2 * al * E - 2 * be**2 - 2 * ga**2) / s * t),
    }
    gens = _with_R(gens)
    rels = [
        Relation("[R,L1]", ncomm(R, L1) - (-4 * L2 * H + 16 * be * ga)),
        Relation("[R,L2]", ncomm(R, L2) - (4 * L1 * H - 8 * (be**2 - ga**2))),
        Relation(
            "R^2",
            R * R - (4 * L1 * L1 * H + 4 * L2 * L2 * H + 4 * H * H - 16 * al**2 * H
                     + 16 * (ga**2 - be**2) * L1 - 32 * be * ga * L2 - 32 * al * (be**2 + ga**2)),
            printed=R * R - (4 * L1 * L1 * H + 4 * L2 * L2 * H + 4 * H * H - 16 * al**2 * H
                             + 16 * (ga**2 - be**2) * L1 - 32 * be * ga * L2 - 32 * al**2 * (be**2 + ga**2)),
            note="printed constant -32 alpha^2 (beta^2+gamma^2) should be -32 alpha (beta^2+gamma^2)",
        ),
    ]
    ladders = [
        Relation("A = L2 + R/(2 sqrt E) - 4 beta gamma/E", A - (L2 + R * (1 / (2 * s)) - 4 * be * ga / E),
                 printed=A - (L2 + R * (1 / (2 * s)) - be * ga / E),
                 note="printed beta gamma/E must be 4 beta gamma/E to reach the closed form 4 d/dt"),
        Relation("Adag = L2 - R/(2 sqrt E) - 4 beta gamma/E", Ad - (L2 - R * (1 / (2 * s)) - 4 * be * ga / E),
                 printed=Ad - (L2 - R * (1 / (2 * s)) - be * ga / E),
                 note="same 4 beta gamma/E correction as for A"),
        Relation("[A,L1] = -2 sqrt(E) A", ncomm(A, L1) + 2 * s * A),
        Relation("[Adag,L1] = 2 sqrt(E) Adag", ncomm(Ad, L1) - 2 * s * Ad),
        Relation(
            "[A,Adag]",
            ncomm(A, Ad) - (4 * s * L1 - 8 * (be**2 - ga**2) / s),
            printed=ncomm(A, Ad) - (-2 * L1 * L1 + (be**2 - ga**2) / E * L1 - 2 * E + 8 * al**2
                                    + 16 * al * (be**2 + ga**2) / E + 32 * be**2 * ga**2 / E**2),
            note="the model gives a relation linear in L1",
        ),
    ]
    variants = [
        ModelVariant("L2 constant as printed, -4 beta gamma/sqrt(E)", {"L2": L2_of(k, -4 * be * ga / s)}),
    ]
    inst = SystemInstance("E20", dict(p), E, branch, m, gens, rels, ladders, variants)
    if m is not None:
        z = Polynomial([0, 1])
        lam = [4 * be * ga / E + (m - 1 - 2 * n) * s for n in range(m)]
        vecs = [_monomial_vec((s * z + 2) ** (m - n - 1) * (s * z - 2) ** n, m) for n in range(m)]
        vals1 = [-2 * s * n - s + 2 * al + 4 * be**2 / E for n in range(m)]
        inst.spectra = [
            SpectrumRule("L1", L1, vals1, oracle="diagonal", vectors=[np.eye(m)[n] for n in range(m)]),
            SpectrumRule("L2", L2, lam, oracle="product", vectors=vecs,
                         note="Psi_n = (sqrt(E) t + 2)^(m-n-1) (sqrt(E) t - 2)^n"),
        ]
    return inst


def _e20_root(m, p, factor):
    al, be, ga = p["alpha"], p["beta"], p["gamma"]
    c = be**2 + ga**2
    if factor == 1:
        f = lambda s: -m * s**3 / 2 + al * s**2 + c
    else:
        f = lambda s: -m * s**3 + 2 * al * s**2 + c
    for v in (al, be, ga):
        if isinstance(v, complex) and v.imag != 0:
            raise NoRealRoot("E20 quantization needs real parameters")
    s = _positive_root(f, scale=2 * abs(float(al)) / m + (2 * abs(float(c)) / m) ** (1 / 3) + 1)
    return s * s


def _e20_energy(m, p, branch):
    return _e20_root(m, p, 1)


def _e20_printed(m, p, branch):
    return _e20_root(m, p, 2)


_register(SystemDef(
    SystemMeta("E20", "0 + f(alpha_i,H) L1L2", "E3, E11, E20", "non-degenerate",
               "differential", False, "energy", ("alpha", "beta", "gamma"), MONOMIAL),
    _e20_make, _e20_energy, _e20_printed,
    sampler=lambda rng: {"alpha": _u(rng), "beta": _u(rng), "gamma": _u(rng)},
    defaults={"alpha": 1.3, "beta": 0.4, "gamma": 0.7},
))


# ---------------------------------------------------------------- E18 ----


def _e18_root(E, branch):
    # "-" takes the negative square root, the one on which Adag annihilates
    # t^(m-1) at E = alpha^2/m^2 for alpha > 0
    s = csqrt(E)
    return -s if branch == "-" else s


def _e18_make(p, E, branch, m):
    al = p["alpha"]
    s = _e18_root(E, branch)
    if s == 0:
        raise InadmissibleParams("E18 needs E != 0")
    Aop = mult(E / 4) * D
    Adop = mult(-4 * t**2) * D - mult(4 * (1 + al / s) * t)
    gens = {
        "X": mult(-I_ * t) * D - I_ * (Fraction(1, 2) + al / (2 * s)),
        "A": Aop,
        "Adag": Adop,
        "L1": (Aop + Adop) * Fraction(1, 2),
        "L2": (Aop - Adop) * (1 / (2 * I_)),
    }
    rels = [
        Relation("[L1,X] = L2", ncomm(L1, X) - L2),
        Relation("[L2,X] = -L1", ncomm(L2, X) + L1),
        Relation("[L1,L2] = HX", ncomm(L1, L2) - H * X),
        Relation("L1^2 + L2^2 - HX^2 + (H - alpha^2)/4", L1 * L1 + L2 * L2 - H * X * X + (E - al**2) / 4),
        Relation("[A,X] = -iA", ncomm(A, X) + I_ * A),
        Relation("[Adag,X] = iAdag", ncomm(Ad, X) - I_ * Ad),
        Relation("[A,Adag]", ncomm(A, Ad) + 2 * I_ * H * X, printed=ncomm(A, Ad) - 2 * I_ * H * X,
                 note="with A = L1 + iL2 the relation [L1,L2] = HX forces [A,Adag] = -2iHX"),
        Relation("{A,Adag} - 2HX^2 + H/2 - alpha^2/2", sym(A, Ad) - 2 * H * X * X + E / 2 - al**2 / 2),
    ]
    ladders = [
        Relation("A = L1 + iL2", A - (L1 + I_ * L2)),
        Relation("Adag = L1 - iL2", Ad - (L1 - I_ * L2)),
    ]
    inst = SystemInstance("E18", dict(p), E, branch, m, gens, rels, ladders)
    if m is not None:
        vals = [-I_ * (n + Fraction(1, 2) + al / (2 * s)) for n in range(m)]
        inst.spectra = [SpectrumRule("X", X, vals, oracle="diagonal", vectors=[np.eye(m)[n] for n in range(m)])]
    return inst


def _e18_energy(m, p, branch):
    return p["alpha"] ** 2 / Fraction(m * m)


_register(SystemDef(
    SystemMeta("E18", "0 + L1L2 + AX^2", "E3, E18", "degenerate", "differential", True, "energy",
               ("alpha",), MONOMIAL),
    _e18_make, _e18_energy, _e18_energy, branches=("-",),
    sampler=lambda rng: {"alpha": _u(rng)},
    defaults={"alpha": 2.0},
))


# ---------------------------------------------------------------- S3 -----


def _s3_relations(a, E, printed_casimir=True):
    cas = lambda sgn: (L1 * L1 + Fraction(1, 6) * sym(L1, X, X) - H * L1 + L2 * L2
                       - (a**2 - Fraction(7, 6)) * X * X - (a**2 + Fraction(5, 12)) * L1
                       + sgn * (H * Fraction(1, 6) - Fraction(5, 24) * (4 * a**2 - 1)))
    return [
        Relation("[L1,X] = 2L2", ncomm(L1, X) - 2 * L2),
        Relation("[L2,X]", ncomm(L2, X) - (-X * X - 2 * L1 + H + a**2 - Fraction(1, 4))),
        Relation("[L1,L2]", ncomm(L1, L2) - (-sym(L1, X) + (2 * a**2 - 1) * X)),
        Relation("Casimir", cas(-1), printed=cas(+1),
                 note="printed signs of the H/6 and (5/24)(4a^2-1) terms are reversed"),
    ]


def _s3_ladders(a, E):
    shift = Fraction(1, 2) * (X * X - E + Fraction(1, 4) - a**2)
    anti = lambda c1, c2: (sym(A, Ad) - Fraction(1, 2) * X * X * X * X + (E - a**2 + Fraction(11, 4)) * X * X
                           + c1 * Fraction(1, 32) * (4 * E + 4 * a**2 + 8 * a + 3) * (c2 * E + 4 * a**2 - 8 * a + 3))
    return [
        Relation("A = L1 - iL2 + (X^2 - E + 1/4 - a^2)/2", A - (L1 - I_ * L2 + shift)),
        Relation("Adag = L1 + iL2 + (X^2 - E + 1/4 - a^2)/2", Ad - (L1 + I_ * L2 + shift)),
        Relation("[A,X] = 2iA", ncomm(A, X) - 2 * I_ * A),
        Relation("[Adag,X] = -2iAdag", ncomm(Ad, X) + 2 * I_ * Ad),
        Relation("{A,Adag}", anti(-1, 4), printed=anti(+1, 1),
                 note="constant term: the model gives -(1/32)(4E+4a^2+8a+3)(4E+4a^2-8a+3)"),
    ]


def _s3_printed_model(a, E, k19):
    r = csqrt(4 * E - 1)
    c0 = a - 1 + r / 2
    c1 = 0.75 * (2 * a + r) + 0.25 * csqrt(4 * a * a + 16 * a - 12 * E - 13 - 4 * (a - 2) * r)
    K = c1**2 + 1.5 * c0**2 - 2 * c0 * c1 + 3 * c0 - 3 * c1 - a * a / 2 + E / 2 + k19
    return {
        "X": mult(2 * I_ * t) * D + I_ * c0,
        "L1": mult(t * (t + 1) ** 2) * D2 + mult((t + 1) * (c1 * t + c1 + 2 * c0 - 1)) * D
        + mult(K * t + (a * a + c0**2 + E) / 2 - 0.125),
        "L2": mult(-I_ * (t**3 - t)) * D2 - mult(I_ * (c1 * t**2 + 2 + 2 * c0 - c1)) * D - mult(I_ * K * t),
    }


def _s3_make(p, E, branch, m):
    a = p["a"]
    s = (I_ / 2) * csqrt(4 * E - 1)
    s = _clean(s)
    c0 = 1 - a + s
    p1 = 2 * c0 + a
    p0 = (s + 1) * (s + 1 - a)
    q0 = (4 * E + 4 * a**2 + 4 * c0**2 - 1) / 8
    gens = {
        "X": mult(2 * I_ * t) * D + I_ * c0,
        "L1": mult(t * (t + 1) ** 2) * D2 + mult((1 + p1) * t**2 + (2 + 2 * c0) * t + (1 - a)) * D
        + mult(p0 * t + q0),
        "L2": mult(-I_ * (t**3 - t)) * D2 - mult(I_ * ((1 + p1) * t**2 - (1 - a))) * D - mult(I_ * p0 * t),
    }
    lad = _s3_ladders(a, E)
    bind = _bind(gens, E)
    gens["A"] = nc_evaluate(L1 - I_ * L2 + Fraction(1, 2) * (X * X - E + Fraction(1, 4) - a**2), bind)
    gens["Adag"] = nc_evaluate(L1 + I_ * L2 + Fraction(1, 2) * (X * X - E + Fraction(1, 4) - a**2), bind)
    variants = [
        ModelVariant("model as printed with 19/18", _s3_printed_model(a, E, 19 / 18)),
        ModelVariant("model as printed with 19/8 (value used in the printed recurrence)",
                     _s3_printed_model(a, E, 19 / 8)),
    ]
    inst = SystemInstance("S3", dict(p), E, branch, m, gens, _s3_relations(a, E), lad, variants)
    inst.extra["c0"] = c0
    if m is not None:
        vals = [I_ * (2 * n + c0) for n in range(m)]
        inst.spectra = [SpectrumRule("X", X, vals, oracle="diagonal", vectors=[np.eye(m)[n] for n in range(m)])]
    return inst


def _s3_energy(m, p, branch):
    return Fraction(1, 4) - (m - p["a"]) ** 2


_register(SystemDef(
    SystemMeta("S3", "X^4 + L1L2", "S3, S6", "degenerate", "differential", True, "energy", ("a",), MONOMIAL),
    _s3_make, _s3_energy, _s3_energy,
    sampler=lambda rng: {"a": _u(rng)},
    defaults={"a": 0.3},
))


# ---------------------------------------------------------------- S3diff -


def _s3d_ops(a, mm, printed=False):
    half = Fraction(1, 2)
    tinv = LaurentPoly.monomial(-1)
    if printed:
        u = (half - a - t) * (mm + a - half - t) * tinv * half
        d = (half - a + t) * (mm + a - half + t) * tinv * half
        X_ = LinearOperator(SHIFT, {1: I_ * u, -1: -I_ * d})
        L2_ = LinearOperator(SHIFT, {1: (1 - 2 * t) * u * half, -1: (1 + 2 * t) * d * half})
    else:
        u = (t - a + half) * (t - mm + a + half) * tinv * half
        d = (t + a - half) * (t + mm - a - half) * tinv * half
        X_ = LinearOperator(SHIFT, {1: I_ * u, -1: -I_ * d})
        L2_ = LinearOperator(SHIFT, {1: (I_ / 2) * (1 + 2 * t) * u, -1: -(I_ / 2) * (1 - 2 * t) * d})
    L1_ = mult(-(t**2) + a**2 - Fraction(1, 4), SHIFT)
    return {"X": X_, "L1": L1_, "L2": L2_}


def s3_lattice(X_: LinearOperator, m: int) -> BasisSpec:
    """Find an m-point unit-step lattice on which the shift operator closes.

    Candidate offsets are the zeros of the T^-1 coefficient (no value below
    the lattice is needed); an offset is accepted when the T^1 coefficient
    vanishes at offset + m - 1 (none above it either).  Of the admissible
    offsets the one with the largest real part is used.
    """
    down = X_.coeff(Fraction(-1))
    up = X_.coeff(Fraction(1))
    num = down.num
    lo = num.low
    coeffs = [complex(num.coeff(k)) for k in range(num.degree, lo - 1, -1)]
    cands = np.roots(coeffs) if len(coeffs) > 1 else []
    best = None
    for x0 in cands:
        top = x0 + (m - 1)
        pts = x0 + np.arange(m)
        if np.any(np.abs(pts) < 1e-9):
            continue
        if abs(complex(up(complex(top)))) < 1e-9 * (1 + abs(top)) ** 2:
            if best is None or x0.real > best.real + 1e-12:
                best = x0
    if best is None:
        raise NoQuantization("no closing lattice found for the shift operator")
    off = complex(best)
    if abs(off.imag) < 1e-12:
        off = off.real
    return BasisSpec(LATTICE, m, lattice_offset=off, lattice_step=Fraction(1), frame="closing lattice")


def _s3d_make(p, E, branch, m):
    a = p["a"]
    mm = m if m is not None else _clean(a + csqrt(Fraction(1, 4) - E))
    gens = _s3d_ops(a, mm)
    variants = [ModelVariant("X and L2 as printed", _s3d_ops(a, mm, printed=True))]
    inst = SystemInstance("S3diff", dict(p), E, branch, m, gens, _s3_relations(a, E), [], variants,
                          kind=SHIFT, basis_family=LATTICE)
    inst.extra["m_eff"] = mm
    if m is not None:
        inst.lattice = s3_lattice(gens["X"], m)
        pts = inst.lattice.points()
        N = m - 1
        vals = [I_ * (2 * n - m + 1) for n in range(m)]
        lamx = np.array([k * (k + 1 - 2 * a) for k in range(m)], dtype=complex)
        vecs = [np.array([specfun.dual_hahn_R(n, -a, -a, N, lx) for lx in lamx], dtype=complex)
                for n in range(m)]
        inst.spectra = [
            SpectrumRule("L1", L1, [-(x**2) + a**2 - 0.25 for x in pts], oracle="diagonal",
                         vectors=[np.eye(m)[n] for n in range(m)]),
            SpectrumRule("X", X, vals, oracle="dual-hahn", vectors=vecs,
                         note="dual Hahn R_n(x(x+1-2a); -a, -a, m-1) on lattice index x"),
        ]
    return inst


_register(SystemDef(
    SystemMeta("S3diff", "X^4 + L1L2", "S3, S6", "degenerate", "difference", True, "energy", ("a",), LATTICE),
    _s3d_make, _s3_energy, _s3_energy,
    # at a = m/2 both boundary zeros sit on the lattice ends for every E, so
    # closure is trivial there; draws stay strictly between half-integers
    sampler=lambda rng: {"a": _u(rng, 0.6, 0.9)},
    defaults={"a": 0.3},
))


# ---------------------------------------------------------------- E14 ----


def _e14_make(p, E, branch, m):
    al = p["alpha"]
    gens = {
        "X": mult(LaurentPoly.monomial(-1)),
        "L1": mult(I_) * D,
        "L2": mult(-(t**2)) * D2 - mult(2 * t) * D + mult(al * E * t**2 - Fraction(1, 4)),
    }
    rels = [
        Relation("[X,L1] = iX^2", ncomm(X, L1) - I_ * X * X),
        Relation("[X,L2] = 2iL1", ncomm(X, L2) - 2 * I_ * L1, printed=ncomm(X, L2) - 2 * I_ * L2,
                 note="the printed right-hand side 2iL2 should be 2iL1"),
        Relation("[L1,L2]", ncomm(L1, L2) - (I_ * sym(X, L2) + (I_ / 2) * X)),
        Relation("Casimir", L1 * L1 - Fraction(1, 2) * sym(L2, X * X) + al * H - Fraction(5, 4) * X * X),
    ]
    return SystemInstance("E14", dict(p), E, branch, m, gens, rels)


_register(SystemDef(
    SystemMeta("E14", "X^4 + X^2L1 + L2^2 + 0", "E12, E14", "degenerate", "differential", True, None,
               ("alpha",), MONOMIAL),
    _e14_make,
    sampler=lambda rng: {"alpha": _u(rng)},
    defaults={"alpha": 1.0},
))


# ---------------------------------------------------------------- E6 -----


def _e6_make(p, E, branch, m):
    a = p["a"]
    s = csqrt(E)
    gens = {
        "X": (mult(t**2) * D + mult((a + 1) * t + 1)) * s,
        "L1": (mult(t**3) * D2 + mult(((2 * a + 3) * t + 2) * t) * D + mult((a + 1) ** 2 * t + a + 1)) * (-s),
        "L2": mult(-(t**2)) * D2 - mult(2 * ((a + 1) * t + 1)) * D - (a + Fraction(1, 2)),
    }
    rels = [
        Relation("[L1,X] = H - X^2", ncomm(L1, X) - (H - X * X)),
        Relation("[L2,X] = 2L1", ncomm(L2, X) - 2 * L1),
        Relation("[L1,L2]", ncomm(L1, L2) - (sym(X, L2) + (1 - 2 * a**2) * X),
                 printed=ncomm(L1, L2) - (sym(X, L2) + (1 - 2 * a) * X),
                 note="printed (1-2a) should be (1-2a^2)"),
        Relation("Casimir", L1 * L1 + Fraction(1, 2) * sym(X * X, L2) - H * L2 - (a**2 - Fraction(3, 2)) * X * X
                 - H * Fraction(1, 2),
                 printed=L1 * L1 - H * L2 - 2 * sym(L1, X) + H * Fraction(1, 2) + (Fraction(1, 2) - a**2) * X * X,
                 note="the model satisfies L1^2 + {X^2,L2}/2 - H L2 - (a^2-3/2) X^2 - H/2 = 0"),
    ]
    inst = SystemInstance("E6", dict(p), E, branch, m, gens, rels)
    if m is not None:
        v1 = [s * (2 * n - m + 1) for n in range(m)]
        v2 = [m * m - k * k + k - Fraction(1, 2) for k in range(1, m + 1)]
        v2p = [m * m - k * k + k - Fraction(1, 2) for k in range(m)]
        vec1, vec2 = [], []
        for k in range(m):
            N = m - 1 - k
            lag = specfun.laguerre_L(N, 0, Polynomial([0, 1]))
            poly = _reversed_in_t(lag, N, 2) * Polynomial([0, 1]) ** k
            vec1.append(specfun.poly_coeffs(poly, m))
        for k in range(1, m + 1):
            j = m - k
            lag = specfun.laguerre_L(j, -2 * j - 2 * a - 1, Polynomial([0, 1]))
            vec2.append(specfun.poly_coeffs(_reversed_in_t(lag, j, 2), m))
        # eigenvalue order: psi_k for L1 has eigenvalue s(m - 1 - 2k)
        v1_by_k = [s * (m - 1 - 2 * k) for k in range(m)]
        inst.spectra = [
            SpectrumRule("L1", L1, v1_by_k, oracle="laguerre", vectors=vec1,
                         note="t^k (t/2)^N L_N(2/t), N = m-1-k"),
            SpectrumRule("L2", L2, v2, printed=v2p, oracle="laguerre", vectors=vec2,
                         note="k = 1..m; eigenvector t^j L_j^(-2j-2a-1)(2/t), j = m-k"),
        ]
        inst.extra["L1_printed_order"] = v1
    return inst


_register(SystemDef(
    SystemMeta("E6", "0 + X^2L1 + L2^2 + AL1", "E6, S5", "degenerate", "differential", True, "parameter",
               ("a",), MONOMIAL),
    _e6_make,
    sampler=lambda rng: {"a": _u(rng)},
    defaults={"a": -3.0},
))


# ---------------------------------------------------------------- E5 -----


def _e5_make(p, E, branch, m):
    al = p["alpha"]
    if al == 0:
        raise InadmissibleParams("alpha must be nonzero")
    gens = {
        "X": mult(t),
        "L1": mult(-al / 2) * D,
        "L2": mult(-al / 4) * D2 + mult(t**2 * (E - t**2) * (1 / al if not isinstance(al, int) else Fraction(1, al))),
    }
    rels = [
        Relation("[L1,X] = -alpha/2", ncomm(L1, X) + al / 2),
        Relation("[L2,X] = L1", ncomm(L2, X) - L1),
        Relation("[L1,L2] = 2X^3 - HX", ncomm(L1, L2) - (2 * X * X * X - H * X)),
        Relation("X^4 - HX^2 + L1^2 + alpha L2", X * X * X * X - H * X * X + L1 * L1 + al * L2),
    ]
    return SystemInstance("E5", dict(p), E, branch, m, gens, rels)


_register(SystemDef(
    SystemMeta("E5", "X^4 + L1^2", "E5", "degenerate", "differential", True, None, ("alpha",), MONOMIAL),
    _e5_make,
    sampler=lambda rng: {"alpha": _u(rng)},
    defaults={"alpha": 1.0},
))


# ---------------------------------------------------------------- E4 -----


def _e4_make(p, E, branch, m):
    al = p["alpha"]
    if al == 0:
        raise InadmissibleParams("alpha must be nonzero")
    gens = {
        "X": mult(I_ * al * t),
        "L1": mult(I_) * D + E / 2,
        "L2": mult(-al * t**2) * D + mult((I_ * al**4 * t**4 - 4 * al**2 * t + I_ * E**2) * (1 / (4 * al))),
    }
    rels = [
        Relation("[L1,X] = -alpha", ncomm(L1, X) + al),
        Relation("[L2,X] = iX^2", ncomm(L2, X) - I_ * X * X),
        Relation("[L1,L2]", ncomm(L1, L2) - (-I_ * X * X * X - I_ * H * X + I_ * sym(L1, X))),
        Relation("Casimir", X * X * X * X - Fraction(2, 3) * sym(L1, X, X) + 2 * H * X * X + H * H
                 + 4 * al * I_ * L2),
    ]
    return SystemInstance("E4", dict(p), E, branch, m, gens, rels)


_register(SystemDef(
    SystemMeta("E4", "0 + X^2L1 + L2", "E4, E13", "degenerate", "differential", True, None, ("alpha",), MONOMIAL),
    _e4_make,
    sampler=lambda rng: {"alpha": _u(rng)},
    defaults={"alpha": 1.0},
))


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------


def system_ids() -> list[str]:
    return list(SYSTEMS)


def _get(id_: str) -> SystemDef:
    try:
        return SYSTEMS[id_]
    except KeyError:
        raise KeyError(f"unknown system {id_!r}; choose from {', '.join(SYSTEMS)}") from None


def _check_params(defn: SystemDef, params: Mapping) -> dict:
    p = dict(params)
    missing = [k for k in defn.meta.params if k not in p]
    if missing:
        raise InadmissibleParams(f"{defn.meta.id} needs parameters {', '.join(missing)}")
    if defn.meta.id in ("E10", "E8"):
        ga = p["gamma"]
        if not isinstance(ga, complex) and ga >= 0:
            raise InadmissibleParams(f"{defn.meta.id} requires gamma < 0 for the real branch")
    if defn.meta.id == "E8" and p["alpha"] == 0:
        raise InadmissibleParams("E8 requires alpha != 0")
    return p


def rep_dim(id_: str, m: int) -> int:
    return m + _get(id_).dim_offset


def quantized_energy(id_: str, m: int, params: Mapping, branch: str | None = None):
    """Energy (or quantized parameter) at which the model closes on a finite space."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    defn = _get(id_)
    if defn.meta.quantizes is None:
        raise NoQuantization(f"{id_} has no finite-dimensional quantization")
    if defn.meta.quantizes == "parameter":
        return QuantizedParam("a", -m)
    p = _check_params(defn, params)
    return defn.energy(m, p, branch if branch is not None else defn.branches[0])


def printed_energy(id_: str, m: int, params: Mapping, branch: str | None = None):
    """The energy formula as printed, kept for cross-checks against the operator-derived rule."""
    defn = _get(id_)
    if defn.printed_energy is None:
        raise NoQuantization(f"{id_} has no printed energy formula")
    p = _check_params(defn, params)
    return defn.printed_energy(m, p, branch if branch is not None else defn.branches[0])


def build(id_: str, params: Mapping, E=None, branch: str | None = None, m: int | None = None,
          closed_forms: bool = True) -> SystemInstance:
    """Instantiate the model of ``id_``.

    If ``m`` is given the instance is set up for the m-dimensional
    representation: E defaults to the quantized energy (E6 gets a = -m) and
    closed-form spectra are attached (skipped with ``closed_forms=False``,
    which detuned closure checks need).
    """
    defn = _get(id_)
    p = _check_params(defn, params)
    if branch is None:
        branch = defn.branches[0]
    if m is not None and defn.meta.quantizes == "parameter" and "a" not in params:
        p["a"] = -m
    if E is None:
        if m is None or defn.meta.quantizes != "energy":
            if "E" in p:
                E = p["E"]
            else:
                raise ValueError(f"{id_} needs an explicit energy")
        else:
            E = defn.energy(m, p, branch)
    p.pop("E", None)
    inst = defn.make(p, E, branch, m if closed_forms else None)
    inst.m = m
    inst.generators = _bind(inst.generators, E)
    if m is not None:
        inst.dim = m + defn.dim_offset
    return inst


def closed_spectrum(id_: str, op: str, m: int, params: Mapping, branch: str | None = None, E=None) -> list:
    inst = build(id_, params, E=E, branch=branch, m=m)
    for rule in inst.spectra:
        if rule.op == op:
            return list(rule.values)
    raise NoRule(f"{id_} has no spectrum rule for {op}")


def sample_params(id_: str, rng) -> tuple[dict, complex]:
    """Random admissible parameters and energy for relation checks."""
    defn = _get(id_)
    p = defn.sampler(rng)
    if id_ == "S9":
        mu = p.pop("mu")
        E = _s9_energy_of(p, mu)
    elif id_ == "S3diff":
        E = -_u(rng)
    else:
        E = _u(rng)
    return p, E
