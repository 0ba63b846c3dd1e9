import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subproduct_lab import expr, fock, ideal, linalg, reps, systems


def sphere_point(seed, d=2, radius=1.0):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return radius * z / np.linalg.norm(z)


def test_fock_rep_reproduces_shifts(golden):
    rep = reps.fock_rep(golden)
    F = fock.TruncatedFock(golden)
    for n in (1, 2, 3):
        for i in range(golden.fiber_dims[n]):
            np.testing.assert_allclose(rep.T_basis(n, i), F.basis_shift(n, i).to_dense(), atol=1e-13)
    assert rep.consistency.residual <= 1e-12


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_evaluation_rep_monomial_formula(seed):
    X = systems.build_symmetric(2, 5)
    z = sphere_point(seed, radius=0.9)
    rep = reps.evaluation_rep(X, z)
    for n in range(1, 6):
        for c, lab in enumerate(X.fibers[n].labels):
            k = (lab.count("e1"), lab.count("e2"))
            orbit = math.comb(n, k[0])
            want = math.sqrt(orbit) * z[0] ** k[0] * z[1] ** k[1]
            assert abs(rep.T_basis(n, c)[0, 0] - want) <= 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_evaluation_rep_on_sphere_is_coisometric_and_essential(ssp2, seed):
    rep = reps.evaluation_rep(ssp2, sphere_point(seed))
    cls = reps.classify(rep)
    assert cls.fully_coisometric and cls.essential and not cls.pure


@pytest.mark.parametrize("radius", [0.0, 0.3, 1.0])
def test_ttilde_equals_squared_norm(ssp2, radius):
    z = sphere_point(5, radius=radius)
    rep = reps.evaluation_rep(ssp2, z)
    for n in (1, 2, 4):
        _, ttt = reps.ttilde(rep, n)
        assert abs(ttt[0, 0] - radius ** (2 * n)) <= 1e-12


def test_origin_is_pure_and_not_essential(ssp2):
    cls = reps.classify(reps.evaluation_rep(ssp2, np.zeros(2)))
    assert cls.pure and not cls.essential and not cls.fully_coisometric


def test_fock_rep_is_pure_not_essential(fib_quiver):
    cls = reps.classify(reps.fock_rep(fib_quiver))
    assert cls.pure and not cls.essential
    assert cls.evidence["horizon"] == fib_quiver.N + 1


def test_vanishing_symbol_is_killed_on_the_sphere(ssp2):
    rep = reps.evaluation_rep(ssp2, sphere_point(11))
    samples = [("sum-minus-identity", expr.parse_expr("S1[e1]*S1[e1]~ + S1[e2]*S1[e2]~ - I", ssp2)),
               ("commutator", expr.parse_expr("S1[e1]*S1[e2]~ - S1[e2]~*S1[e1]", ssp2))]
    worst, rows = reps.kernel_ideal_check(rep, samples)
    assert worst <= 1e-9 and len(rows) == 2
    F = fock.TruncatedFock(ssp2)
    assert ideal.decay_scan(expr.evaluate(samples[0][1], F)).verdict == "in_ideal"


@pytest.mark.parametrize("P", [[[1, 1], [1, 0]], [[2, 1], [1, 1]], [[0, 1, 1], [1, 0, 1], [1, 1, 0]]])
def test_quiver_coisometric_rep(P):
    X = systems.build_quiver(P, 4)
    rep = reps.quiver_coisometric_rep(X)
    _, t1 = reps.ttilde(rep, 1)
    assert linalg.op_norm(t1 - np.eye(len(P))) <= 1e-12
    assert rep.consistency.residual <= 1e-12
    cls = reps.classify(rep)
    assert cls.fully_coisometric and cls.essential


def test_inconsistent_generators_are_rejected(ssp2_small):
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    b = np.array([[0, 0], [1, 0]], dtype=complex)
    with pytest.raises(reps.RepresentationError, match=r"levels \(1,1\)"):
        reps.rep_from_generators(ssp2_small, [0, 0], [a, b])
    # commuting generators are fine
    reps.rep_from_generators(ssp2_small, [0, 0], [a, 2 * a])


def test_grading_violation_is_rejected(fib_quiver):
    bad = [np.ones((2, 2)) * 0.1 for _ in range(3)]
    with pytest.raises(reps.RepresentationError, match="grading"):
        reps.rep_from_generators(fib_quiver, [0, 1], bad)


def test_shape_checks(ssp2_small):
    with pytest.raises(reps.RepresentationError):
        reps.CovariantRep(ssp2_small, [0], [np.eye(1)])
    with pytest.raises(reps.RepresentationError):
        reps.CovariantRep(ssp2_small, [0], [np.eye(1), np.eye(2)])
    with pytest.raises(reps.RepresentationError):
        reps.evaluation_rep(ssp2_small, [1.0, 0.0, 0.0])


def test_word_map_fallback_matches_cache(ssp2_small, monkeypatch):
    rep = reps.fock_rep(ssp2_small)
    v = np.random.default_rng(1).standard_normal(ssp2_small.paths[4].dim)
    cached = rep.word_map(4, v)
    fresh = reps.fock_rep(ssp2_small)
    monkeypatch.setattr(reps, "PATH_CACHE_LIMIT", 0)
    np.testing.assert_allclose(fresh.word_map(4, v), cached, atol=1e-13)


def block_unitary(rep, rng):
    """Random unitary commuting with the vertex grading."""
    U = np.zeros((rep.dim, rep.dim), dtype=complex)
    for a in range(rep.system.q):
        idx = np.flatnonzero(rep.vertex == a)
        U[np.ix_(idx, idx)] = linalg.random_unitary(len(idx), rng)
    return U


def test_wold_recovers_the_summands(fib_quiver):
    fr = reps.fock_rep(fib_quiver)
    rep = reps.direct_sum(fr, reps.quiver_coisometric_rep(fib_quiver))
    split = reps.wold_decompose(rep)
    e = np.eye(rep.dim)
    assert linalg.subspace_distance(split.induced_subspace, e[:, :fr.dim]) <= 1e-8
    assert linalg.subspace_distance(split.coisometric_subspace, e[:, fr.dim:]) <= 1e-8
    assert split.residuals["hypothesis"] <= 1e-10
    assert split.residuals["coisometric_defect"] <= 1e-10
    assert split.residuals["induced_pure_bound"] <= 1e-10


def test_wold_is_covariant_under_grading_unitaries(fib_quiver, rng):
    fr = reps.fock_rep(fib_quiver)
    base = reps.direct_sum(fr, reps.quiver_coisometric_rep(fib_quiver))
    U = block_unitary(base, rng)
    moved = reps.CovariantRep(fib_quiver, base.vertex, [U @ t @ U.conj().T for t in base.T1])
    split = reps.wold_decompose(moved)
    e = np.eye(base.dim)
    assert linalg.subspace_distance(split.induced_subspace, U @ e[:, :fr.dim]) <= 1e-8
    assert linalg.subspace_distance(split.coisometric_subspace, U @ e[:, fr.dim:]) <= 1e-8


def test_wold_on_symmetric_fock_plus_point(ssp2_small):
    fr = reps.fock_rep(ssp2_small)
    rep = reps.direct_sum(fr, reps.evaluation_rep(ssp2_small, sphere_point(2)))
    split = reps.wold_decompose(rep)
    assert split.induced_subspace.shape[1] == fr.dim
    assert split.coisometric_subspace.shape[1] == 1


def test_wold_trivial_cases():
    X = systems.build_quiver([[1]], 4)
    split = reps.wold_decompose(reps.fock_rep(X))
    assert split.coisometric_subspace.shape[1] == 0
    split = reps.wold_decompose(reps.quiver_coisometric_rep(X))
    assert split.induced_subspace.shape[1] == 0


def test_wold_rejects_failed_hypothesis(ssp2_small):
    rep = reps.evaluation_rep(ssp2_small, sphere_point(3, radius=0.5))
    with pytest.raises(reps.WoldError) as err:
        reps.wold_decompose(rep)
    assert err.value.n == 1


def test_rep_from_json(fib_quiver):
    data = {"dims": [1, 1], "T1": {"f11": [["0.5", 0], [0, 0]], "f12": [[0, "0.5+0j"], [0, 0]],
                                   "f21": [[0, 0], [0.5, 0]]}}
    rep = reps.rep_from_json(data, fib_quiver)
    assert rep.dims == [1, 1]
    with pytest.raises(reps.RepresentationError, match="missing"):
        reps.rep_from_json({"dims": [1, 1], "T1": {"f11": [[0, 0], [0, 0]]}}, fib_quiver)
    with pytest.raises(reps.RepresentationError, match="unknown"):
        reps.rep_from_json({"dims": [1, 1], "T1": dict(data["T1"], g=[[0, 0], [0, 0]])}, fib_quiver)
    with pytest.raises(reps.RepresentationError):
        reps.rep_from_json({"dims": [2], "T1": data["T1"]}, fib_quiver)


def test_direct_sum_requires_shared_system(ssp2_small, golden):
    with pytest.raises(reps.RepresentationError):
        reps.direct_sum(reps.fock_rep(ssp2_small), reps.fock_rep(golden))


@pytest.mark.parametrize("builder", [lambda: systems.build_product(2, 5), lambda: systems.build_symmetric(3, 4),
                                     lambda: systems.build_subshift(2, ["11"], 6),
                                     lambda: systems.build_quiver([[2, 1], [1, 1]], 5)])
def test_fock_reps_are_consistent_contractions(builder):
    X = builder()
    rep = reps.fock_rep(X)
    assert reps.multiplicativity_residual(rep)[0] <= 1e-10
    for n in range(1, X.N + 1):
        assert linalg.op_norm(reps.ttilde(rep, n)[0]) <= 1 + 1e-10


def test_wold_subspaces_are_complementary(fib_quiver):
    rep = reps.direct_sum(reps.fock_rep(fib_quiver), reps.quiver_coisometric_rep(fib_quiver))
    split = reps.wold_decompose(rep)
    V, C = split.induced_subspace, split.coisometric_subspace
    assert V.shape[1] + C.shape[1] == rep.dim
    assert linalg.op_norm(V.conj().T @ C) <= 1e-12
    for n in (1, 2):
        for i in range(fib_quiver.fiber_dims[n]):
            t = rep.T_basis(n, i)
            for B in (V, C):
                P = B @ B.conj().T
                for op in (t, t.conj().T):
                    assert linalg.op_norm((np.eye(rep.dim) - P) @ op @ P) <= 1e-9
