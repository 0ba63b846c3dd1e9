import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subproduct_lab import fock, ideal, linalg, systems


def test_verdict_on_synthetic_sequences():
    assert ideal.decay_verdict([(n, 0.0) for n in range(6)])[0] == "in_ideal"
    assert ideal.decay_verdict([(n, 1.0 / n) for n in range(1, 8)])[0] == "in_ideal"
    assert ideal.decay_verdict([(n, 2.0 ** -n) for n in range(1, 8)])[0] == "in_ideal"
    assert ideal.decay_verdict([(n, 1.0) for n in range(8)])[0] == "not_in_ideal"
    assert ideal.decay_verdict([(n, 1.0 + 0.1 * n) for n in range(8)])[0] == "not_in_ideal"
    # decays, but far too slowly to call
    assert ideal.decay_verdict([(n, n ** -0.1) for n in range(1, 8)])[0] == "inconclusive"


def test_fit_rate_recovers_power_law():
    pts = [(n, 3.0 * n ** -1.5) for n in range(1, 9)]
    assert ideal.fit_rate(pts) == pytest.approx(-1.5)
    assert ideal.fit_rate([(0, 1.0), (1, 0.0)]) is None


def test_commutator_scan(ssp2):
    F = fock.TruncatedFock(ssp2)
    C = fock.commutator(F.basis_shift(1, 0), F.basis_shift(1, 1).adj())
    rep = ideal.decay_scan(C, op="comm")
    assert rep.verdict == "in_ideal"
    assert rep.rate_estimate < -0.5
    exact = [v for n, v, e in rep.norms if e]
    assert len(exact) == 8 and exact[-1] <= 0.2
    d = rep.to_dict()
    assert d["op"] == "comm" and len(d["norms"]) == 9 and d["norms"][8][2] is False


def test_left_unit_is_not_in_ideal(product2):
    F = fock.TruncatedFock(product2)
    rep = ideal.decay_scan(F.left_action([1.0]))
    assert rep.verdict == "not_in_ideal"
    assert all(v == pytest.approx(1.0) for _, v, _ in rep.norms)


def test_tail_norms_dominate_level_norms(golden):
    F = fock.TruncatedFock(golden)
    S = F.basis_shift(1, 0) @ F.basis_shift(1, 1).adj() + F.Q(2)
    rep = ideal.decay_scan(S)
    tails = [v for _, v, _ in rep.tail_norms]
    assert all(a >= b - 1e-14 for a, b in zip(tails, tails[1:]))
    assert all(q <= t + 1e-14 for (_, q, _), t in zip(rep.norms, tails))


def test_scan_needs_an_exact_column():
    X = systems.build_symmetric(2, 2)
    F = fock.TruncatedFock(X)
    S = F.basis_shift(2, 0) @ F.basis_shift(1, 0)
    assert not S.exact.any()
    with pytest.raises(ValueError):
        ideal.decay_scan(S)
    with pytest.raises(ValueError):
        ideal.cp_seminorm(S)


def test_cp_seminorm_uses_exact_tail(ssp2):
    F = fock.TruncatedFock(ssp2)
    S = ideal.symbol_operator(F, [1.0, 0.0, 0.0])
    # S S^* is exact on every column, so the default n* is the top level
    assert ideal.cp_seminorm(S).n_star == 8
    est = ideal.cp_seminorm(S, 7)
    assert est.n_star == 7
    vals = [v for _, v in est.certificate]
    assert all(a >= b - 1e-14 for a, b in zip(vals, vals[1:]))
    assert est.estimate == pytest.approx(1.0, abs=1e-12)
    C = fock.commutator(F.basis_shift(1, 0), F.basis_shift(1, 1).adj())
    assert ideal.cp_seminorm(C).n_star == 7
    with pytest.raises(ValueError):
        ideal.cp_seminorm(C, 8)


def test_exact_tail_norm_oracle(ssp2_small):
    F = fock.TruncatedFock(ssp2_small)
    S = F.basis_shift(1, 1) @ F.basis_shift(1, 0).adj()
    dense = S.to_dense()
    for n in range(F.N + 1):
        cols = np.concatenate([np.arange(F.level_slice(m).start, F.level_slice(m).stop)
                               for m in range(n, F.N + 1) if S.exact[m]] or [np.array([], int)])
        want = linalg.op_norm(dense[:, cols]) if cols.size else 0.0
        assert ideal.exact_tail_norm(S, n) == pytest.approx(want, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 1000))
def test_sphere_points_are_unit_and_reproducible(d, seed):
    a = ideal.sphere_points(d, samples=20, seed=seed, grid=16)
    b = ideal.sphere_points(d, samples=20, seed=seed, grid=16)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-14)
    assert a.shape == (d + 36, d)


def test_symbol_value_examples():
    z = np.array([1.0, 1.0j]) / np.sqrt(2)
    assert ideal.symbol_value([1.0, -1.0, 0.0], z) == pytest.approx(0.0)
    assert ideal.symbol_value([1.0, 1.0, -1.0], z) == pytest.approx(0.0)
    assert ideal.symbol_value([1.0, 0.0, 0.0], np.array([1.0, 0.0])) == 1.0


@pytest.mark.parametrize("coeffs,target", [([1, 0, 0], 1.0), ([1, -1, 0], 1.0), ([1, 1, -1], 0.0)])
def test_sphere_comparison(ssp2, coeffs, target):
    rep = ideal.sphere_compare(2, coeffs, 8, samples=200, seed=3, n_star=7, system=ssp2)
    assert rep.sphere_sup == pytest.approx(target, abs=1e-9)
    assert rep.gap <= 0.1
    if target == 0.0:
        assert rep.estimate <= 0.05


def test_symbol_operator_needs_matching_coefficients(ssp2_small):
    with pytest.raises(ValueError):
        ideal.symbol_operator(fock.TruncatedFock(ssp2_small), [1.0, 2.0])


def test_generated_by_Q_check(ssp2):
    F = fock.TruncatedFock(ssp2)
    C = fock.commutator(F.basis_shift(1, 0), F.basis_shift(1, 1).adj())
    rep = ideal.generated_by_Qn_check(F, [("comm", C), ("unit", F.identity()), ("Q2", F.Q(2))])
    assert rep.applicable and rep.passed
    assert rep.witness_residual <= 1e-12
    rows = {r["op"]: r for r in rep.samples}
    assert rows["unit"]["checked"] is False
    seq = [v for _, v in rows["Q2"]["sequence"]]
    assert seq[2] == 0.0 and seq[0] == pytest.approx(1.0)


def test_reconstructed_tail_projection_on_product(product2):
    F = fock.TruncatedFock(product2)
    for n in range(1, 4):
        got = ideal.reconstruct_tail_projection(F, n).to_dense()
        assert linalg.op_norm(got - F.Rp(n).to_dense()) <= 1e-12


def monomials(F):
    a, b = F.basis_shift(1, 0), F.basis_shift(1, 1)
    return [a, b.adj(), a @ b, F.basis_shift(2, 1).adj(), F.Q(3)]


def test_ideal_is_two_sided(ssp2):
    F = fock.TruncatedFock(ssp2)
    C = fock.commutator(F.basis_shift(1, 0), F.basis_shift(1, 1).adj())
    assert ideal.decay_scan(C).verdict == "in_ideal"
    for T in monomials(F):
        for P in (T @ C, C @ T):
            assert ideal.decay_scan(P).verdict == "in_ideal"


def test_gauge_invariance_of_scans(golden):
    F = fock.TruncatedFock(golden)
    for S in (fock.commutator(F.basis_shift(1, 0), F.basis_shift(1, 1).adj()), F.identity(),
              F.basis_shift(2, 0) @ F.basis_shift(1, 1).adj()):
        base = ideal.decay_scan(S)
        moved = ideal.decay_scan(fock.gauge_conjugate(S, np.exp(0.3j)))
        assert base.verdict == moved.verdict
        for (_, a, _), (_, b, _) in zip(base.norms, moved.norms):
            assert abs(a - b) <= 1e-12


def test_spectral_components_of_ideal_elements(ssp2):
    F = fock.TruncatedFock(ssp2)
    a, b = F.basis_shift(1, 0), F.basis_shift(1, 1)
    S = fock.commutator(a, b.adj()) + fock.commutator(a, b.adj()) @ a + b.adj() @ fock.commutator(b, a.adj())
    assert ideal.decay_scan(S).verdict == "in_ideal"
    for k in (-1, 0, 1):
        part = fock.spectral_component(S, k)
        assert ideal.decay_scan(part).verdict == "in_ideal"
        for n in part.exact_levels():
            assert part.norm_Q(n)[0] <= S.norm_Q(n)[0] + 1e-12
