import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subproduct_lab import expr, fock, systems
from subproduct_lab.expr import Add, Adj, Gen, Ident, Mul, Proj, Scalar, Sub


@pytest.fixture(scope="module")
def X():
    return systems.build_symmetric(2, 6)


@pytest.fixture(scope="module")
def F(X):
    return fock.TruncatedFock(X)


def direct(node, F):
    """Reference evaluation with explicit module calls, independent of expr.evaluate."""
    X = F.system
    match node:
        case Gen(n=n, terms=terms):
            v = sum(c * X.fiber_basis_vector(n, X.fibers[n].labels.index(lab)) for c, lab in terms)
            return F.shift(n, v)
        case Proj(kind="Q", n=n):
            return F.Q(n)
        case Proj(kind="R", n=n):
            return F.R(n)
        case Proj(kind="Rp", n=n):
            return F.Rp(n)
        case Ident():
            return F.identity()
        case Scalar(value=z):
            return F.identity() * z
        case Adj(arg=a):
            return direct(a, F).adj()
        case Add(left=a, right=b):
            return direct(a, F) + direct(b, F)
        case Sub(left=a, right=b):
            return direct(a, F) - direct(b, F)
        case Mul(left=Scalar(value=z), right=b):
            return direct(b, F) * z
        case Mul(left=a, right=Scalar(value=z)):
            return direct(a, F) * z
        case Mul(left=a, right=b):
            return direct(a, F) @ direct(b, F)
    raise TypeError(node)


def test_spec_examples(X):
    node = expr.parse_expr("S1[e1]*S1[e1]~", X)
    assert node == Mul(Gen(1, ((1, "e1"),)), Adj(Gen(1, ((1, "e1"),))))
    assert expr.degrees(node) == {0} and expr.is_monomial(node)
    node = expr.parse_expr("Q0 + (0+0.5i)*I", X)
    assert node == Add(Proj("Q", 0), Mul(Scalar(0.5j), Ident()))
    assert expr.degrees(node) == {0} and not expr.is_monomial(node)
    with pytest.raises(expr.ExprError) as err:
        expr.parse_expr("S1[e1)*", X)
    assert err.value.column == 6


def test_precedence_adjoint_binds_tightest():
    assert expr.parse_expr("Q1 + Q2 * Q3~") == Add(Proj("Q", 1), Mul(Proj("Q", 2), Adj(Proj("Q", 3))))
    assert expr.parse_expr("(Q1 + Q2)~~") == Adj(Adj(Add(Proj("Q", 1), Proj("Q", 2))))
    assert expr.parse_expr("Q1 - Q2 - Q3") == Sub(Sub(Proj("Q", 1), Proj("Q", 2)), Proj("Q", 3))
    assert expr.parse_expr("Rp2*R1") == Mul(Proj("Rp", 2), Proj("R", 1))
    assert expr.parse_expr("  S2 [ 2*e1e2 + e2e2 ] ") == Gen(2, ((2, "e1e2"), (1, "e2e2")))


@pytest.mark.parametrize("text,column,fragment", [
    ("S1[e7]", 4, "unknown fiber label"),
    ("S9[e1]", 2, "exceeds the truncation"),
    ("(Q1 + Q2", 9, "unbalanced"),
    ("Q1 + Q2)", 8, "unbalanced"),
    ("~Q1", 1, "adjoint of nothing"),
    ("Q1 * ~", 6, "adjoint of nothing"),
    ("Q1 +", 5, "end of input"),
    ("S1[2 e1]", 6, "expected '*'"),
])
def test_error_positions(X, text, column, fragment):
    with pytest.raises(expr.ExprError) as err:
        expr.parse_expr(text, X)
    assert err.value.column == column
    assert fragment in str(err.value)


def test_projected_word_labels(X, F):
    # e2e1 is not a basis label of the symmetric fiber; it names p_2(e2 (x) e1)
    v = expr.fiber_vector(X, 2, "e2e1")
    assert np.allclose(v, [0, 1 / np.sqrt(2), 0])
    with pytest.raises(KeyError):
        expr.fiber_vector(X, 2, "e1e3")


def test_quiver_labels():
    Q = systems.build_quiver([[1, 1], [1, 0]], 4)
    node = expr.parse_expr("S2[f12] * S1[f21]~", Q)
    assert expr.degrees(node) == {1}
    with pytest.raises(expr.ExprError):
        expr.parse_expr("S1[f22]", Q)


def test_formatting_of_scalars():
    assert expr.format_scalar(1.5 - 2j) == "(1.5-2.0i)"
    assert expr.format_scalar(complex(0.0, -0.0)) == "(0.0-0.0i)"
    node = expr.parse_expr("(1.5-2.0i) * Q1")
    assert expr.to_text(node) == "(1.5-2.0i) * Q1"


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_print_parse_round_trip(seed):
    X = systems.build_symmetric(2, 4)
    node = expr.random_expr(X, np.random.default_rng(seed), depth=4)
    assert expr.parse_expr(expr.to_text(node), X) == node


def test_evaluation_matches_direct_calls(X, F):
    rng = np.random.default_rng(50)
    for _ in range(50):
        node = expr.random_expr(X, rng, depth=3)
        got, want = expr.evaluate(node, F), direct(node, F)
        np.testing.assert_array_equal(got.to_dense(), want.to_dense())
        np.testing.assert_array_equal(got.exact, want.exact)
        assert got.degrees <= expr.degrees(node)
