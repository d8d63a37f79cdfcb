"""Acceptance checks, one marker per criterion.

Checks whose literal target is unattainable are marked ``xfail(strict=True)``
and sit next to a test of the corrected form.
"""
import json
import subprocess
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from qalg import systems, verify
from qalg.matrixrep import eigenpairs
from qalg.opalgebra import SHIFT, LaurentPoly, NonPolynomialResult, apply, compose
from qalg.verify import FAIL, NA, PASS

DRAWS = 20
MS = (2, 3, 4, 6)
SEED = 20240611
QUANTIZING = [sid for sid in systems.system_ids() if systems.SYSTEMS[sid].meta.quantizes is not None]
CASES = [(sid, br) for sid in QUANTIZING for br in systems.SYSTEMS[sid].branches]
LADDER_SYSTEMS = ("E1", "E2", "E20", "S3", "E18")

c = pytest.mark.criterion


def _draw(sid, k):
    rng = np.random.default_rng([SEED, systems.system_ids().index(sid), k])
    p, E = systems.sample_params(sid, rng)
    p.pop("E", None)
    return p, E


def _instance(sid, k, quantized):
    """k-th seeded draw; ``quantized`` puts it on a finite representation."""
    defn = systems.SYSTEMS[sid]
    p, E = _draw(sid, k)
    br = defn.branches[k % len(defn.branches)]
    if not quantized or defn.meta.quantizes is None:
        return systems.build(sid, p, E=E, branch=br)
    m = MS[k % len(MS)]
    if defn.meta.quantizes == "parameter":
        p["a"] = -m
        return systems.build(sid, p, E=1.0, branch=br, m=m)
    return systems.build(sid, p, branch=br, m=m)


@lru_cache(maxsize=None)
def action_records(sid, quantized=False):
    out = []
    for k in range(DRAWS):
        inst = _instance(sid, k, quantized)
        out.append((inst, verify.verify_action(inst), verify.verify_variants(inst)))
    return out


# ------------------------------------------------------------------ 1 ---


@c(1)
@pytest.mark.parametrize("sid", systems.system_ids())
def test_c1_canonical_relations(sid):
    for inst, recs, _ in action_records(sid):
        assert recs
        for r in recs:
            assert r.status == PASS and r.residual < 1e-10, (sid, inst.params, r.name, r.residual)


@c(1)
def test_c1_runtime():
    t0 = time.perf_counter()
    for sid in systems.system_ids():
        for k in range(DRAWS):
            inst = _instance(sid, k, False)
            verify.verify_action(inst)
            verify.verify_variants(inst)
    assert time.perf_counter() - t0 < 10


@c(1)
def test_c1_e1_L2_coefficient_one_variant_passes():
    name = "L2 with (1+b)/3 first-derivative constant"
    for inst, recs, variants in action_records("E1"):
        assert all(r.residual < 1e-10 for r in recs)
        (v,) = [v for v in variants if v.name == name]
        assert v.residual > 1e-3


@c(1)
def test_c1_variants_meet_expectation():
    for sid in systems.system_ids():
        for inst, _, variants in action_records(sid):
            for v in variants:
                assert v.status == PASS, (sid, v.name, v.outcome, v.expect)


def _e20_candidates(m, p):
    al, c = p["alpha"], p["beta"] ** 2 + p["gamma"] ** 2
    model = systems.quantized_energy("E20", m, p, None)
    printed = systems.printed_energy("E20", m, p, None)
    recurrence = ((al + c) / m) ** (2 / 3)
    return {"operator": model, "implicit condition": printed, "recurrence coefficient": recurrence}


@c(1)
def test_c1_e20_alpha_a_exactly_one_candidate_closes():
    for k in range(DRAWS):
        p, _ = _draw("E20", k)
        m = MS[k % len(MS)]
        spills = {}
        for label, E in _e20_candidates(m, p).items():
            spills[label] = verify.closure_spill(systems.build("E20", p, E=E, m=m))
        closing = [lab for lab, s in spills.items() if s < 1e-10]
        assert closing == ["operator"], spills
        assert all(s > 1e-3 for lab, s in spills.items() if lab != "operator"), spills


@c(1)
@pytest.mark.xfail(strict=True, raises=AssertionError, reason="several printed relation forms have wrong signs or constants")
def test_c1_literal_every_printed_form_passes():
    bad = []
    for sid in systems.system_ids():
        for inst, recs, _ in action_records(sid):
            bad += [(sid, r.name) for r in recs if r.printed_residual is not None and r.printed_residual >= 1e-10]
    assert not bad, sorted(set(bad))


# ------------------------------------------------------------------ 2 ---


@c(2)
@pytest.mark.parametrize("sid,branch", CASES)
@pytest.mark.parametrize("m", MS)
def test_c2_closure(sid, branch, m):
    recs = [verify.check_closure(sid, systems.SYSTEMS[sid].defaults, m, branch)]
    for k in range(3):
        p, _ = _draw(sid, k)
        recs.append(verify.check_closure(sid, p, m, branch))
    for rec in recs:
        assert rec.spill_at_E < 1e-10 and rec.spill_detuned > 1e-3, rec


@c(2)
def test_c2_e18_spot_value():
    assert systems.quantized_energy("E18", 2, {"alpha": 2.0}, "-") == pytest.approx(1.0)


E1P = {"omega": 1.0, "a": 0.5, "b": 0.5}
E2P = {"omega": 1.0, "b": 0.0, "c": 0.5}


@c(2)
@pytest.mark.xfail(strict=True, raises=AssertionError, reason="the stated E1 value has the wrong sign; closure happens at +18")
def test_c2_literal_e1_spot_value():
    assert systems.quantized_energy("E1", 4, E1P, "+") == pytest.approx(-18.0)


@c(2)
@pytest.mark.xfail(strict=True, raises=AssertionError, reason="the stated E2 values use 8 w c; closure happens at 4 w m +- 2 w c")
def test_c2_literal_e2_spot_values():
    got = {round(systems.quantized_energy("E2", 1, E2P, br), 9) for br in ("+", "-")}
    assert got == {8.0, 0.0}


@c(2)
def test_c2_e1_spot_value_corrected():
    assert systems.printed_energy("E1", 4, E1P, "+") == pytest.approx(-18.0)
    rec = verify.check_closure("E1", E1P, 4, "+")
    assert rec.status == PASS and rec.energy == pytest.approx(18.0)
    # printed value does not close the representation
    at_printed = systems.build("E1", E1P, E=-18.0, m=4)
    assert verify.closure_spill(at_printed) > 1e-3


@c(2)
def test_c2_e2_spot_values_corrected():
    printed = {br: systems.printed_energy("E2", 1, E2P, br) for br in ("+", "-")}
    assert printed == pytest.approx({"+": 8.0, "-": 0.0})
    closing = {br: verify.check_closure("E2", E2P, 1, br) for br in ("+", "-")}
    assert all(r.status == PASS for r in closing.values())
    assert {br: r.energy for br, r in closing.items()} == pytest.approx({"+": 5.0, "-": 3.0})
    for br, E in printed.items():
        assert verify.closure_spill(systems.build("E2", E2P, E=E, branch=br, m=1)) > 1e-3


# ------------------------------------------------------------------ 3 ---


def _spectrum(inst, op):
    reps = verify.native_reps(inst)
    (rule,) = [r for r in inst.spectra if r.op == op]
    return np.asarray(eigenpairs(verify._rule_matrix(inst, rule, reps)).values)


def _same(vals, expected, tol=1e-9):
    expected = np.asarray(expected, complex)
    scale = max(1.0, np.abs(expected).max())
    return len(vals) == len(expected) and np.allclose(np.sort_complex(vals), np.sort_complex(expected),
                                                      atol=tol * scale, rtol=0)


@c(3)
def test_c3_e1_L2():
    vals = _spectrum(systems.build("E1", E1P, branch="+", m=3), "L2")
    assert _same(vals, [-4, -16, -36])


@c(3)
def test_c3_e10_K1_plus_K2():
    vals = _spectrum(systems.build("E10", {"alpha": 0.0, "beta": 0.0, "gamma": -1.0}, m=2), "K1+K2")
    assert _same(vals, [4, -4])


@c(3)
def test_c3_e20_L2_m2():
    for k in range(DRAWS):
        p, _ = _draw("E20", k)
        inst = systems.build("E20", p, m=2)
        E = inst.E
        lam = 4 * p["beta"] * p["gamma"] / E
        assert _same(_spectrum(inst, "L2"), [lam + np.sqrt(E), lam - np.sqrt(E)])


def _e6_L2(m, ks):
    inst = systems.build("E6", {"a": -m}, E=1.0, m=m)
    return _spectrum(inst, "L2"), [m * m - k * k + k - 0.5 for k in ks]


@c(3)
@pytest.mark.xfail(strict=True, raises=AssertionError, reason="k = 0 and k = 1 give the same value, so the list has a duplicate")
def test_c3_literal_e6_L2_index_from_zero():
    for m in MS:
        vals, expect = _e6_L2(m, range(m))
        assert _same(vals, expect)


@c(3)
def test_c3_e6_L2_index_from_one():
    for m in MS:
        vals, expect = _e6_L2(m, range(1, m + 1))
        assert _same(vals, expect)


@c(3)
def test_c3_s9_L1_diagonal():
    for k in range(DRAWS):
        p, _ = _draw("S9", k)
        a, b = p["a"], p["b"]
        for m in MS:
            M = systems.s9_l1_matrix(p, m).mat
            want = [-4 * n * (n + a + b + 1) - 2 * (a + 1) * (b + 1) + 0.5 for n in range(m)]
            assert np.allclose(np.diag(M), want, atol=1e-9 * max(1, np.abs(want).max()), rtol=0)
            assert np.allclose(np.tril(M, -1), 0)


@c(3)
@pytest.mark.parametrize("sid,branch", CASES)
def test_c3_all_spectrum_rules(sid, branch):
    for m in MS:
        p = dict(systems.SYSTEMS[sid].defaults)
        if systems.SYSTEMS[sid].meta.quantizes == "parameter":
            inst = systems.build(sid, {**p, "a": -m}, E=1.0, branch=branch, m=m)
        else:
            inst = systems.build(sid, p, branch=branch, m=m)
        recs = verify.check_spectra(inst)
        assert recs and all(r.status == PASS for r in recs), recs


# ------------------------------------------------------------------ 4 ---

ORACLES = {
    "E1": "jacobi", "E8": "jacobi", "E10": "product", "E20": "product",
    "E6": "laguerre", "S9": "racah", "S3diff": "dual-hahn",
}


@c(4)
@pytest.mark.parametrize("sid", sorted(ORACLES))
def test_c4_eigenvectors(sid):
    seen = 0
    for k in range(8):
        inst = _instance(sid, k, True)
        for m in MS:
            if inst.m != m:
                continue
            recs = [r for r in verify.check_eigenvectors(inst) if r.oracle == ORACLES[sid]]
            assert recs
            seen += len(recs)
            assert all(r.distance < 1e-8 for r in recs), [(r.index, r.distance) for r in recs]
    assert seen > 0


@c(4)
def test_c4_s3diff_lattice_found():
    for m in MS:
        inst = systems.build("S3diff", systems.SYSTEMS["S3diff"].defaults, m=m)
        assert inst.lattice is not None


# ------------------------------------------------------------------ 5 ---


@c(5)
@pytest.mark.parametrize("sid", LADDER_SYSTEMS)
def test_c5_ladder_relations(sid):
    for k in range(DRAWS):
        inst = _instance(sid, k, sid == "E18")
        recs = verify.verify_action(inst, group="ladders")
        assert recs
        for r in recs:
            assert r.status == PASS and r.residual < 1e-10, (sid, r.name, r.residual)


@c(5)
def test_c5_e18_annihilation():
    for m in (1, 2, 3):
        for alpha in (2.0, 0.7, 3.1):
            assert verify.e18_annihilation(alpha, m).status == PASS


@c(5)
@pytest.mark.xfail(strict=True, raises=AssertionError, reason="several printed ladder forms, e.g. [A,Adag], differ from the operator result")
def test_c5_literal_printed_ladder_forms():
    bad = []
    for sid in LADDER_SYSTEMS:
        for k in range(DRAWS):
            inst = _instance(sid, k, sid == "E18")
            for r in verify.verify_action(inst, group="ladders"):
                if r.printed_residual is not None and r.printed_residual >= 1e-10:
                    bad.append((sid, r.name))
    assert not bad, sorted(set(bad))


# ------------------------------------------------------------------ 6 ---

NORM_CASES = [(m, a, b) for m in (2, 3, 4, 6) for a, b in ((0.5, 0.5), (0.3, 1.7), (1.2, 0.4))]


@c(6)
def test_c6_exactly_one_form_certified():
    for m, a, b in NORM_CASES:
        rec = verify.check_e1_normalization(m, a, b)
        assert rec.certified == "recurrence"
        assert rec.recurrence_err < 1e-10


@c(6)
def test_c6_corrected_kernel():
    for m, a, b in NORM_CASES:
        assert verify.check_e1_normalization(m, a, b).kernel_corrected_err < 1e-10


@c(6)
@pytest.mark.xfail(strict=True, raises=AssertionError, reason="the printed kernel 2F1(-m,-m-a;b;z) is not generated by the certified k_n")
def test_c6_literal_printed_kernel():
    for m, a, b in NORM_CASES:
        assert verify.check_e1_normalization(m, a, b).kernel_printed_err < 1e-10


# ------------------------------------------------------------------ 7 ---


def _verdict(r):
    return "holds" if r < 1e-10 else ("fails" if r > 1e-3 else "gray")


@c(7)
@pytest.mark.parametrize("sid,branch", CASES)
def test_c7_action_matrix_agree(sid, branch):
    pairs = 0
    for k in range(DRAWS):
        inst = _instance(sid, k, True)
        if inst.branch != branch:
            continue
        for group in ("relations", "ladders"):
            if group == "ladders" and not inst.ladders:
                continue
            A = verify.verify_action(inst, group=group)
            M = verify.verify_matrix(inst, group=group)
            assert [a.name for a in A] == [b.name for b in M]
            for a, b in zip(A, M):
                if b.status == NA:
                    continue
                pairs += 1
                assert a.status == b.status, (a, b)
                if a.printed_residual is not None:
                    # printed forms may land in the gray zone in one mode, but never hold in one and fail in the other
                    va, vb = _verdict(a.printed_residual), _verdict(b.printed_residual)
                    assert {va, vb} != {"holds", "fails"}, (a.name, a.printed_residual, b.printed_residual)
    assert pairs > 0


def _monomials(inst):
    if inst.kind == SHIFT:
        return [LaurentPoly.monomial(n) for n in range(0, 13)]
    return [LaurentPoly.monomial(n) for n in range(-4, 13)]


@c(7)
@pytest.mark.parametrize("sid", systems.system_ids())
def test_c7_apply_compose_consistency(sid):
    inst = _instance(sid, 0, False)
    ops = {k: v for k, v in inst.generators.items() if hasattr(v, "kind")}
    checked = 0
    for a in ops.values():
        for b in ops.values():
            ab = compose(a, b)
            for f in _monomials(inst):
                try:
                    lhs, rhs = apply(ab, f), apply(a, apply(b, f))
                except NonPolynomialResult:
                    continue
                diff = (lhs - rhs).norm()
                assert diff <= 1e-10 * (1 + max(lhs.norm(), rhs.norm()))
                checked += 1
    assert checked > 0


# ------------------------------------------------------------------ 8 ---


@c(8)
def test_c8_full_sweep(tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "qalg.cli", "sweep", "--all", "--json", str(path)],
                              capture_output=True, text=True)
        elapsed = time.perf_counter() - t0
        assert proc.returncode == 0, proc.stderr
        assert elapsed < 60
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    data = json.loads(outs[0])
    assert data["ok"] and all(r["ok"] for r in data["runs"])
