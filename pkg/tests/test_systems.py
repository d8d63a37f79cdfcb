import numpy as np
import pytest

from qalg import systems
from qalg.matrixrep import eigenpairs
from qalg.opalgebra import LaurentPoly, LinearOperator, apply, commutator, operators_equal
from qalg.opalgebra import T

E1P = {"omega": 1.0, "a": 0.5, "b": 0.5}


def test_registry_covers_all_systems():
    ids = systems.system_ids()
    assert len(ids) == len(set(ids)) == 14
    for sid in ids:
        meta = systems.SYSTEMS[sid].meta
        assert meta.id == sid
        assert set(systems.SYSTEMS[sid].defaults) <= set(meta.params) | {"E"}


def test_e1_L1_operator():
    L1 = systems.build("E1", E1P, E=-14.0).generators["L1"]
    expect = LinearOperator.mult(-4 * T) * LinearOperator.d() + (-14.0 - 3.0)
    assert operators_equal(L1, expect)


def test_e15_single_relation():
    inst = systems.build("E15", {"a": 2.0}, E=0.3)
    assert [r.name for r in inst.relations] == ["[L1,L2] = iL1"]


def test_e5_generators():
    g = systems.build("E5", {"alpha": 1.0}, E=3.0).generators
    assert operators_equal(g["X"], LinearOperator.mult(T))
    assert operators_equal(g["L1"], LinearOperator.d().scale(-0.5))


def test_hamiltonian_is_constant_and_R_derived():
    for sid in systems.system_ids():
        defn = systems.SYSTEMS[sid]
        p = dict(defn.defaults)
        E = p.pop("E", 1.3)
        inst = systems.build(sid, p, E=E)
        if "H" in inst.generators:
            # the Hamiltonian acts as the constant E
            assert inst.generators["H"] == E
        if "R" in inst.generators and "L1" in inst.generators and "L2" in inst.generators:
            R = commutator(inst.generators["L1"], inst.generators["L2"])
            assert operators_equal(inst.generators["R"], R)


def test_quantized_energy_e18():
    assert systems.quantized_energy("E18", 2, {"alpha": 2.0}, None) == pytest.approx(1.0)


def test_non_quantizing_systems():
    for sid in ("E14", "E5", "E4", "E15"):
        with pytest.raises(systems.NoQuantization):
            systems.quantized_energy(sid, 3, systems.SYSTEMS[sid].defaults, None)


def test_e1_closure_energy_and_printed_form():
    # closure energy comes from the vanishing recurrence coefficient
    assert systems.quantized_energy("E1", 4, E1P, "+") == pytest.approx(18.0)
    assert systems.printed_energy("E1", 4, E1P, "+") == pytest.approx(-18.0)


def test_e2_branch_energies():
    p = {"omega": 1.0, "b": 0.0, "c": 0.5}
    assert systems.quantized_energy("E2", 1, p, "+") == pytest.approx(5.0)
    assert systems.quantized_energy("E2", 1, p, "-") == pytest.approx(3.0)
    assert systems.printed_energy("E2", 1, p, "+") == pytest.approx(8.0)
    assert systems.printed_energy("E2", 1, p, "-") == pytest.approx(0.0)


def test_e10_energy_branch():
    p = {"alpha": 0.0, "beta": 0.0, "gamma": -1.0}
    assert systems.quantized_energy("E10", 3, p, None) == pytest.approx(6.0)
    inst = systems.build("E10", p, m=3)
    img = apply(inst.generators["K2"], LaurentPoly.monomial(2))
    assert img.norm() < 1e-12


def test_closed_spectra_examples():
    assert systems.closed_spectrum("E1", "L2", 3, E1P) == pytest.approx([-4, -16, -36])
    vals = systems.closed_spectrum("E10", "K1+K2", 2, {"alpha": 0.0, "beta": 0.0, "gamma": -1.0})
    assert sorted(np.real(vals)) == pytest.approx([-4, 4])
    assert systems.closed_spectrum("E1", "L1", 3, E1P, E=-14) == pytest.approx([-17, -21, -25])


def test_closed_spectra_duplicate_free():
    rng = np.random.default_rng(4)
    for sid in systems.system_ids():
        defn = systems.SYSTEMS[sid]
        if defn.meta.quantizes != "energy":
            continue
        p, _ = systems.sample_params(sid, rng)
        p.pop("E", None)
        inst = systems.build(sid, p, branch=defn.branches[0], m=4)
        for rule in inst.spectra:
            vals = np.asarray(rule.values, complex)
            gaps = np.abs(vals[:, None] - vals[None, :]) + np.eye(len(vals))
            assert gaps.min() > 1e-6, (sid, rule.op)


def test_s9_L1_matrix():
    a, b, c = 0.3, 0.4, 0.6
    rep = systems.s9_l1_matrix({"a": a, "b": b, "c": c}, 4)
    M = rep.mat
    assert np.allclose(np.tril(M, -1), 0)
    for n in range(4):
        assert M[n, n] == pytest.approx(-4 * n * (n + a + b + 1) - 2 * (a + 1) * (b + 1) + 0.5)
    assert rep.spill < 1e-10 * np.linalg.norm(M)


def test_s9_spill_vanishes_on_samples():
    rng = np.random.default_rng(8)
    for m in (2, 3, 5):
        p, _ = systems.sample_params("S9", rng)
        p.pop("E", None)
        rep = systems.s9_l1_matrix(p, m)
        assert rep.rel_spill() < 1e-10


def test_e8_L2_eigenvalues_match_closed_form():
    p = systems.SYSTEMS["E8"].defaults
    from qalg.verify import native_reps

    for br in systems.SYSTEMS["E8"].branches:
        inst = systems.build("E8", p, branch=br, m=4)
        vals = eigenpairs(native_reps(inst)["L2"].mat).values
        closed = systems.closed_spectrum("E8", "L2", 4, p, br)
        assert np.sort_complex(np.asarray(vals)) == pytest.approx(np.sort_complex(np.asarray(closed, complex)), abs=1e-8)


def test_e1_parameter_symmetry():
    # the E1 closure energy is symmetric under a -> -a with the branch swapped
    p, q = dict(E1P, a=0.3), dict(E1P, a=-0.3)
    assert systems.quantized_energy("E1", 3, p, "+") == pytest.approx(systems.quantized_energy("E1", 3, q, "-"))


def test_inadmissible_parameters():
    with pytest.raises(systems.InadmissibleParams):
        systems.build("E1", {"omega": 0.0, "a": 0.5, "b": 0.5}, E=1.0)


def test_sampler_is_deterministic():
    a = systems.sample_params("E20", np.random.default_rng(3))
    b = systems.sample_params("E20", np.random.default_rng(3))
    assert a == b
