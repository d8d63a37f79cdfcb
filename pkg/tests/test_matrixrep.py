import numpy as np
import pytest

from qalg import systems
from qalg.matrixrep import (
    EVEN, LATTICE, MONOMIAL, BasisKindMismatch, BasisSpec, eigenpairs, matrix_residual, projective_distance,
    subspace_distance, to_matrix,
)
from qalg.opalgebra import LinearOperator, MatrixRing, gen, nc_evaluate, ncomm

E1_DEFAULT = {"omega": 1.0, "a": 0.5, "b": 0.5}


def test_basis_spans():
    assert BasisSpec(MONOMIAL, 3).exponents() == [0, 1, 2]
    assert BasisSpec(EVEN, 3).exponents() == [0, 2, 4]
    pts = BasisSpec(LATTICE, 3, lattice_offset=0.5).points()
    assert np.allclose(pts, [0.5, 1.5, 2.5])
    with pytest.raises(BasisKindMismatch):
        BasisSpec(LATTICE, 2).exponents()


def test_e1_L1_diagonal():
    inst = systems.build("E1", E1_DEFAULT, E=-14.0)
    rep = to_matrix(inst.generators["L1"], BasisSpec(MONOMIAL, 3))
    assert np.allclose(rep.mat, np.diag([-17, -21, -25]))
    assert rep.spill == 0


def test_identity_matrix():
    rep = to_matrix(LinearOperator.identity(), BasisSpec(MONOMIAL, 5))
    assert np.array_equal(rep.mat, np.eye(5))
    assert rep.spill == 0


def test_e1_L2_subdiagonal():
    b = 0.5
    inst = systems.build("E1", E1_DEFAULT, E=-11.3)
    rep = to_matrix(inst.generators["L2"], BasisSpec(MONOMIAL, 5))
    for n in range(1, 5):
        # column n, row n-1: coefficient of t^(n-1) in L2 t^n
        assert rep.mat[n - 1, n] == pytest.approx(n * (n + b) / 2)
    # generic energy: L2 raises the degree out of the window
    assert rep.spill > 1e-3


def test_eigenpairs_triangular():
    ep = eigenpairs(np.array([[2.0, 1.0], [0.0, 3.0]]))
    assert sorted(ep.values.real) == pytest.approx([2, 3])


def test_eigenpairs_symmetric_vectors():
    ep = eigenpairs(np.array([[0.0, 1.0], [1.0, 0.0]]))
    order = np.argsort(ep.values.real)
    assert ep.values.real[order] == pytest.approx([-1, 1])
    s = 1 / np.sqrt(2)
    assert projective_distance(ep.vectors[:, order[0]], np.array([s, -s])) < 1e-12
    assert projective_distance(ep.vectors[:, order[1]], np.array([s, s])) < 1e-12


def test_eigenpairs_residual_bound():
    rng = np.random.default_rng(5)
    M = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    ep = eigenpairs(M)
    for lam, v in zip(ep.values, ep.vectors.T):
        assert np.linalg.norm(M @ v - lam * v) <= 1e-8 * np.linalg.norm(M) * np.linalg.norm(v)
    # against numpy as an independent oracle
    ref = np.sort_complex(np.linalg.eigvals(M))
    assert np.allclose(np.sort_complex(ep.values), ref, atol=1e-10)


def test_eigenvalues_similarity_invariant():
    rng = np.random.default_rng(9)
    A = np.triu(rng.normal(size=(5, 5)))
    np.fill_diagonal(A, [1, 2, 3, 4, 5])
    S = rng.normal(size=(5, 5)) + 3 * np.eye(5)
    B = S @ A @ np.linalg.inv(S)
    assert np.sort(eigenpairs(B).values.real) == pytest.approx([1, 2, 3, 4, 5], abs=1e-9)


def test_e8_L2_spectrum_at_m4():
    p = systems.SYSTEMS["E8"].defaults
    inst = systems.build("E8", p, m=4)
    closed = systems.closed_spectrum("E8", "L2", 4, p)
    reps = {}
    from qalg.verify import native_reps

    reps = native_reps(inst)
    vals = eigenpairs(reps["L2"].mat).values
    # characteristic polynomial as a brute-force cross-check
    charp = np.poly(reps["L2"].mat)
    for lam in closed:
        assert abs(np.polyval(charp, lam)) < 1e-6 * (1 + abs(lam)) ** 4
    assert np.sort_complex(np.asarray(vals, complex)) == pytest.approx(np.sort_complex(np.asarray(closed, complex)),
                                                                       abs=1e-9)


def test_homomorphism_on_window():
    inst = systems.build("E1", E1_DEFAULT, m=4)
    basis = BasisSpec(MONOMIAL, 4)
    A = to_matrix(inst.generators["L1"], basis).mat
    B = to_matrix(inst.generators["A"], basis).mat
    from qalg.opalgebra import compose

    AB = to_matrix(compose(inst.generators["L1"], inst.generators["A"]), basis).mat
    assert np.allclose(AB, A @ B)


def test_matrix_residual_zero_and_perturbed():
    L1, L2 = gen("L1", "L2")
    rng = np.random.default_rng(1)
    X = rng.normal(size=(3, 3))
    assert matrix_residual(ncomm(L1, L1), {"L1": X}) == 0
    inst = systems.build("E18", {"alpha": 2.0}, m=4)
    basis = BasisSpec(MONOMIAL, 4)
    mats = {k: to_matrix(v, basis).mat for k, v in inst.generators.items() if k in ("L1", "L2", "X")}
    Xs = gen("X")
    expr = ncomm(L1, Xs) - L2
    assert matrix_residual(expr, mats) < 1e-12
    bumped = dict(mats)
    bumped["L2"] = mats["L2"].astype(complex).copy()
    bumped["L2"][0, 0] += 1
    r = matrix_residual(expr, bumped)
    assert r > 0.1 / (1 + max(np.linalg.norm(m) for m in mats.values()))


def test_distance_functions():
    u = np.array([1.0, 0.0, 0.0])
    v = np.array([1.0, 1e-9, 0.0]) * (2 - 1j)
    # phase and scale are ignored
    assert projective_distance(u, v) == pytest.approx(1e-9, rel=1e-6)
    U = np.eye(4)[:, :2]
    V = U @ np.array([[1, 2], [3, 5]])
    assert subspace_distance(U, V) < 1e-14
    assert subspace_distance(U, np.eye(4)[:, 2:]) == pytest.approx(1.0)


def test_nc_evaluate_matches_matrix_product():
    X, Y = gen("X", "Y")
    rng = np.random.default_rng(2)
    A, B = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    got = nc_evaluate(X * Y * X - 2 * Y, {"X": A, "Y": B}, MatrixRing(3))
    assert np.allclose(got, A @ B @ A - 2 * B)
