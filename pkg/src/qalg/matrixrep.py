"""Finite matrix representations of model operators and a small dense eigensolver."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .opalgebra import (
    DIFFERENTIAL,
    SHIFT,
    LaurentPoly,
    LinearOperator,
    MatrixRing,
    NCExpr,
    OperatorError,
    apply,
    nc_terms,
)

MONOMIAL = "Monomial"
EVEN = "EvenMonomial"
LATTICE = "Lattice"


class BasisKindMismatch(OperatorError):
    pass


class DimensionMismatch(ValueError):
    pass


class NoConvergence(ArithmeticError):
    def __init__(self, msg, matrix=None, residual=None):
        super().__init__(msg)
        self.matrix = matrix
        self.residual = residual


@dataclass(frozen=True)
class BasisSpec:
    family: str
    dim: int
    lattice_offset: complex = 0.0
    lattice_step: Fraction = Fraction(1)
    frame: str = "standard"

    def __post_init__(self):
        if self.family not in (MONOMIAL, EVEN, LATTICE):
            raise ValueError(f"unknown basis family {self.family!r}")
        if self.dim < 1:
            raise ValueError("basis dimension must be positive")

    def exponents(self) -> list[int]:
        if self.family == MONOMIAL:
            return list(range(self.dim))
        if self.family == EVEN:
            return [2 * n for n in range(self.dim)]
        raise BasisKindMismatch("lattice bases have no exponents")

    def points(self) -> np.ndarray:
        if self.family != LATTICE:
            raise BasisKindMismatch("only lattice bases have points")
        return self.lattice_offset + float(self.lattice_step) * np.arange(self.dim)


@dataclass
class RepMatrix:
    mat: np.ndarray
    spill: float
    basis: BasisSpec

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def rel_spill(self) -> float:
        nrm = np.linalg.norm(self.mat)
        return self.spill / nrm if nrm > 0 else self.spill


@dataclass
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray = field(repr=False)


# --------------------------------------------------------------------------
# operator -> matrix
# --------------------------------------------------------------------------


def _laurent_terms(op: LinearOperator):
    """[(order, [(power, value), ...]), ...] for a differential operator whose
    coefficients are Laurent polynomials, else None."""
    if op.kind != DIFFERENTIAL:
        return None
    out = []
    for k, c in op.items():
        den = c.den.items()
        if len(den) != 1:
            return None
        dp, dv = den[0]
        out.append((int(k), [(p_ - dp, complex(v) / complex(dv)) for p_, v in c.num.items()]))
    return out


def monomial_window(op: LinearOperator, exps: Sequence[int]):
    """Matrix of ``op`` on the monomials ``t^e`` for ``e`` in ``exps``.

    Returns (matrix, spill) where spill collects every coefficient that lands
    on a power outside ``exps``.
    """
    index = {e: i for i, e in enumerate(exps)}
    m = len(exps)
    mat = np.zeros((m, m), dtype=complex)
    spill2 = 0.0
    terms = _laurent_terms(op)
    if terms is not None:
        # d^k t^e = e (e-1) ... (e-k+1) t^(e-k), no symbolic work needed
        for j, e in enumerate(exps):
            outside: dict = {}
            for k, coeffs in terms:
                ff = 1
                for r in range(k):
                    ff *= e - r
                if ff == 0:
                    continue
                for p_, v in coeffs:
                    i = index.get(e - k + p_)
                    if i is None:
                        outside[e - k + p_] = outside.get(e - k + p_, 0) + v * ff
                    else:
                        mat[i, j] += v * ff
            spill2 += sum(abs(v) ** 2 for v in outside.values())
        return mat, float(np.sqrt(spill2))
    for j, e in enumerate(exps):
        img = apply(op, LaurentPoly.monomial(e))
        for k, v in img.items():
            i = index.get(k)
            if i is None:
                spill2 += abs(complex(v)) ** 2
            else:
                mat[i, j] += complex(v)
    return mat, float(np.sqrt(spill2))


def lattice_window(op: LinearOperator, points: np.ndarray, step=Fraction(1)):
    """Matrix of a shift operator on functions restricted to ``points``.

    Row k is (op f)(x_k) = sum_a c_a(x_k) f(x_k + a).  The same matrix is the
    action on delta functions column by column.  Spill collects the
    coefficients c_a(x_k) that would need f off the lattice, so zero spill
    means the restriction to the lattice is closed.
    """
    if op.kind != SHIFT:
        raise BasisKindMismatch("lattice bases need shift-type operators")
    m = len(points)
    step = Fraction(step)
    mat = np.zeros((m, m), dtype=complex)
    spill2 = 0.0
    for k in range(m):
        x = complex(points[k])
        for a, c in op.items():
            q = a / step
            val = complex(c(x))
            if q.denominator == 1 and 0 <= k + int(q) < m:
                mat[k, k + int(q)] += val
            else:
                spill2 += abs(val) ** 2
    return mat, float(np.sqrt(spill2))


def to_matrix(op: LinearOperator, basis: BasisSpec) -> RepMatrix:
    if basis.family == LATTICE:
        if op.kind != SHIFT:
            raise BasisKindMismatch("Lattice basis requires a shift-type operator")
        mat, spill = lattice_window(op, basis.points(), basis.lattice_step)
    else:
        mat, spill = monomial_window(op, basis.exponents())
    return RepMatrix(mat, spill, basis)


def triangular_eigenbasis(mat: np.ndarray) -> np.ndarray:
    """Unit-diagonal upper-triangular V with mat @ V = V @ diag(mat).

    Column n of V is the eigenvector of an upper-triangular ``mat`` belonging
    to its n-th diagonal entry (a degree-n polynomial in the graded basis).
    """
    n = mat.shape[0]
    V = np.zeros((n, n), dtype=complex)
    d = np.diag(mat)
    scale = max(1.0, float(np.abs(mat).max()))
    for k in range(n):
        V[k, k] = 1.0
        for i in range(k - 1, -1, -1):
            s = mat[i, i + 1 : k + 1] @ V[i + 1 : k + 1, k]
            den = d[k] - d[i]
            if abs(den) < 1e-14 * scale:
                den = 1e-14 * scale
            V[i, k] = s / den
    return V


def quotient_reps(ops: Mapping[str, LinearOperator], diag: str, family: str, dim: int,
                  raise_by: int = 2, frame: str | None = None) -> dict[str, RepMatrix]:
    """Finite representation on the quotient by the span of high eigenpolynomials.

    ``ops[diag]`` must preserve the degree (triangular on the graded basis);
    its eigenpolynomials p_0, p_1, ... form a new basis.  The other generators
    are expressed in that basis; the leading ``dim`` x ``dim`` block is the
    quotient representation and spill measures how far span{p_n : n >= dim}
    is from being invariant.
    """
    N = dim + 2 * raise_by + 2
    exps = BasisSpec(family, N).exponents()
    mats = {k: monomial_window(op, exps)[0] for k, op in ops.items()}
    V = triangular_eigenbasis(mats[diag])
    V = V / np.linalg.norm(V, axis=0)
    out = {}
    spec = BasisSpec(family, dim, frame=frame or f"{diag}-eigenbasis")
    for k, M in mats.items():
        G = np.linalg.solve(V, M @ V)
        block = G[:dim, :dim].copy()
        # spill is the top recurrence block: couplings from the first raise_by
        # dropped eigenpolynomials to the last raise_by kept ones.  For the
        # banded (three-term) actions of the models every other entry of
        # G[:dim, dim:] vanishes identically and only carries round-off from
        # the ill-conditioned change to the eigenbasis.
        lo = max(0, dim - raise_by)
        spill = float(np.linalg.norm(G[lo:dim, dim : dim + raise_by]))
        out[k] = RepMatrix(block, spill, spec)
    return out


# --------------------------------------------------------------------------
# residuals
# --------------------------------------------------------------------------


def matrix_residual(expr: NCExpr, bindings: Mapping) -> float:
    """Frobenius norm of the evaluated expression over (1 + largest term norm)."""
    mats = {}
    basis = None
    dim = None
    for k, v in bindings.items():
        if isinstance(v, RepMatrix):
            if basis is not None and v.basis != basis:
                raise DimensionMismatch("matrices live on different bases")
            basis = v.basis
            v = v.mat
        if isinstance(v, np.ndarray):
            if dim is not None and v.shape != (dim, dim):
                raise DimensionMismatch(f"{k} has shape {v.shape}, expected {(dim, dim)}")
            dim = v.shape[0]
        mats[k] = v
    if dim is None:
        dim = 1
    terms = nc_terms(expr, mats, MatrixRing(dim))
    if not terms:
        return 0.0
    total = sum(terms)
    big = max(np.linalg.norm(t) for t in terms)
    return float(np.linalg.norm(total) / (1.0 + big))


# --------------------------------------------------------------------------
# eigensolver
# --------------------------------------------------------------------------


def hessenberg(A: np.ndarray):
    """Householder reduction A = Q H Q^*; returns (H, Q)."""
    H = np.array(A, dtype=complex)
    n = H.shape[0]
    Q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = H[k + 1 :, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        H[k + 1 :, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1 :, :])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v.conj())
        Q[:, k + 1 :] -= 2.0 * np.outer(Q[:, k + 1 :] @ v, v.conj())
        H[k + 2 :, k] = 0.0
    return H, Q


def _wilkinson(a, b, c, d):
    tr2 = (a + d) / 2
    disc = np.sqrt(((a - d) / 2) ** 2 + b * c)
    mu1, mu2 = tr2 + disc, tr2 - disc
    return mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2


def schur(A: np.ndarray, max_iter: int | None = None):
    """Complex Schur form by Hessenberg reduction and Wilkinson-shifted QR."""
    n = A.shape[0]
    H, Z = hessenberg(A)
    if max_iter is None:
        max_iter = 100 * n
    eps = np.finfo(float).eps
    norm = max(np.abs(H).max(), np.finfo(float).tiny)
    hi = n - 1
    its = 0
    since_deflation = 0
    while hi > 0:
        l = hi
        while l > 0:
            s = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if abs(H[l, l - 1]) <= eps * (s if s > 0 else norm):
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            hi -= 1
            since_deflation = 0
            continue
        its += 1
        since_deflation += 1
        if its > max_iter:
            raise NoConvergence(
                f"QR iteration did not converge in {max_iter} steps",
                matrix=A, residual=float(abs(H[hi, hi - 1])),
            )
        if since_deflation % 11 == 10:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        idx = np.arange(l, hi + 1)
        H[idx, idx] -= mu
        rots = []
        for k in range(l, hi):
            x, y = H[k, k], H[k + 1, k]
            r = np.hypot(abs(x), abs(y))
            if r == 0:
                c, s = 1.0, 0.0
            else:
                c, s = x / r, y / r
            G = np.array([[np.conj(c), np.conj(s)], [-s, c]])
            H[k : k + 2, k:] = G @ H[k : k + 2, k:]
            rots.append(G)
        for k, G in zip(range(l, hi), rots):
            top = min(k + 2, hi) + 1
            H[:top, k : k + 2] = H[:top, k : k + 2] @ G.conj().T
            Z[:, k : k + 2] = Z[:, k : k + 2] @ G.conj().T
        H[idx, idx] += mu
    return np.triu(H), Z


def _upper_eigvecs(T: np.ndarray) -> np.ndarray:
    n = T.shape[0]
    X = np.zeros((n, n), dtype=complex)
    small = np.finfo(float).eps * max(1.0, np.abs(T).max())
    for k in range(n):
        lam = T[k, k]
        X[k, k] = 1.0
        for i in range(k - 1, -1, -1):
            den = T[i, i] - lam
            if abs(den) < small:
                den = small
            X[i, k] = -(T[i, i + 1 : k + 1] @ X[i + 1 : k + 1, k]) / den
    return X


def _lower_eigvecs(L: np.ndarray) -> np.ndarray:
    n = L.shape[0]
    X = np.zeros((n, n), dtype=complex)
    small = np.finfo(float).eps * max(1.0, np.abs(L).max())
    for k in range(n):
        lam = L[k, k]
        X[k, k] = 1.0
        for j in range(k + 1, n):
            den = L[j, j] - lam
            if abs(den) < small:
                den = small
            X[j, k] = -(L[j, k:j] @ X[k:j, k]) / den
    return X


def normalize_vector(v: np.ndarray) -> np.ndarray:
    """Unit 2-norm with the largest-magnitude entry real and positive."""
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return v
    v = v / nrm
    j = int(np.argmax(np.abs(v)))
    return v * (abs(v[j]) / v[j])


def eigenpairs(mat, tol: float = 1e-13) -> EigenPairs:
    """All eigenvalues and right eigenvectors of a small dense matrix."""
    M = mat.mat if isinstance(mat, RepMatrix) else np.asarray(mat, dtype=complex)
    M = np.array(M, dtype=complex)
    n = M.shape[0]
    if n > 64:
        raise ValueError("eigenpairs is meant for matrices of size <= 64")
    if n == 0:
        return EigenPairs(np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex))
    scale = max(np.abs(M).max(), np.finfo(float).tiny)
    lower_mass = np.abs(np.tril(M, -1)).max() if n > 1 else 0.0
    upper_mass = np.abs(np.triu(M, 1)).max() if n > 1 else 0.0
    if lower_mass <= tol * scale:
        vals = np.diag(M).copy()
        vecs = _upper_eigvecs(np.triu(M))
    elif upper_mass <= tol * scale:
        vals = np.diag(M).copy()
        vecs = _lower_eigvecs(np.tril(M))
    else:
        T, Z = schur(M)
        vals = np.diag(T).copy()
        vecs = Z @ _upper_eigvecs(T)
    vecs = np.column_stack([normalize_vector(vecs[:, k]) for k in range(n)])
    return EigenPairs(vals, vecs)


def projective_distance(u: np.ndarray, v: np.ndarray) -> float:
    """sin of the angle between the complex lines spanned by u and v."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 1.0
    u, v = u / nu, v / nv
    # norm of the part of v orthogonal to u; sqrt(1 - |<u,v>|^2) loses half
    # the digits near zero
    return float(min(1.0, np.linalg.norm(v - u * np.vdot(u, v))))


def subspace_distance(U: np.ndarray, V: np.ndarray) -> float:
    """sin of the largest principal angle from span(V) to span(U).

    Only meaningful when span(V) is at most as large as span(U).
    """
    qu, _ = np.linalg.qr(np.asarray(U, dtype=complex))
    qv, _ = np.linalg.qr(np.asarray(V, dtype=complex))
    rest = qv - qu @ (qu.conj().T @ qv)
    return float(min(1.0, np.linalg.norm(rest, 2))) if rest.size else 1.0


def match_values(computed: Sequence[complex], expected: Sequence[complex]):
    """Pair two equal-length lists of numbers by repeatedly taking the closest pair.

    Returns (max error, permutation p) with computed[p[i]] matched to expected[i].
    """
    computed = list(computed)
    expected = list(expected)
    if len(computed) != len(expected):
        return float("inf"), []
    n = len(expected)
    D = np.abs(np.subtract.outer(np.asarray(computed, complex), np.asarray(expected, complex)))
    perm = [-1] * n
    used_c, used_e = set(), set()
    worst = 0.0
    for _ in range(n):
        best = None
        for i in range(n):
            if i in used_c:
                continue
            for j in range(n):
                if j in used_e:
                    continue
                if best is None or D[i, j] < best[0]:
                    best = (D[i, j], i, j)
        d, i, j = best
        used_c.add(i)
        used_e.add(j)
        perm[j] = i
        worst = max(worst, float(d))
    return worst, perm
