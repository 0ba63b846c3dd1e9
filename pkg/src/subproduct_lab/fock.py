"""Truncated Fock module, shift operators and the gauge action.

Operators live on ``X(0) + X(1) + ... + X(N)`` and are stored as blocks
``(target level, source level) -> matrix``.  Every operator is the
compression of an operator on the untruncated Fock module; the boolean
array ``exact`` records, per source level, whether that column of blocks
agrees with the untruncated operator (nothing was lost by cutting at N).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg


@dataclass(frozen=True)
class TruncatedFock:
    system: object

    @property
    def N(self):
        return self.system.N

    @property
    def dims(self):
        return self.system.fiber_dims

    @cached_property
    def offsets(self):
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.dims)[:-1]]))

    @property
    def total_dim(self):
        return int(sum(self.dims))

    def level_slice(self, n):
        start = self.offsets[n]
        return slice(start, start + self.dims[n])

    # -- constructors -----------------------------------------------------

    def operator(self, blocks, degrees, exact=None):
        if exact is None:
            exact = np.ones(self.N + 1, dtype=bool)
        return FockOperator(self, blocks, frozenset(degrees), np.asarray(exact, dtype=bool))

    def zero(self):
        return self.operator({}, ())

    def identity(self):
        return self.operator({(m, m): np.eye(d, dtype=complex) for m, d in enumerate(self.dims)},
                             (0,))

    def shift(self, n, zeta):
        """S_n(zeta): eta in X(m) goes to p_{n+m}(zeta (x) eta) in X(n+m).

        ``n = 0`` gives the left action phi_inf(a) of a vector a in C^q.
        Columns with ``n + m > N`` are dropped and marked inexact.
        """
        if not 0 <= n <= self.N:
            raise ValueError(f"shift level {n} outside 0..{self.N}")
        zeta = np.asarray(zeta, dtype=complex).ravel()
        if zeta.shape[0] != self.dims[n]:
            raise ValueError(f"fiber vector has length {zeta.shape[0]}, X({n}) has dim {self.dims[n]}")
        blocks = {}
        exact = np.zeros(self.N + 1, dtype=bool)
        for m in range(self.N + 1):
            if n + m > self.N:
                continue
            exact[m] = True
            g = self.system.product_tensor(n, m)
            blocks[(n + m, m)] = np.tensordot(g, zeta, axes=([1], [0]))
        return self.operator(blocks, (n,), exact)

    def basis_shift(self, n, i):
        return self.shift(n, self.system.fiber_basis_vector(n, i))

    def left_action(self, a):
        """phi_inf(a) for a in C^q (block diagonal)."""
        return self.shift(0, a)

    def Q(self, n):
        """Projection onto level n."""
        if not 0 <= n <= self.N:
            return self.zero()
        return self.operator({(n, n): np.eye(self.dims[n], dtype=complex)}, (0,))

    def R(self, n):
        """Projection onto levels 0..n."""
        blocks = {(k, k): np.eye(self.dims[k], dtype=complex) for k in range(min(n, self.N) + 1)}
        return self.operator(blocks, (0,))

    def Rp(self, n):
        """Projection onto levels >= n (within the truncation)."""
        blocks = {(k, k): np.eye(self.dims[k], dtype=complex) for k in range(max(n, 0), self.N + 1)}
        return self.operator(blocks, (0,))

    def level_projections(self):
        return ([self.Q(n) for n in range(self.N + 1)],
                [self.R(n) for n in range(self.N + 1)],
                [self.Rp(n) for n in range(self.N + 1)])

    def gauge_unitary(self, lam):
        _check_unimodular(lam)
        return np.diag(np.concatenate([np.full(d, lam ** n, dtype=complex)
                                       for n, d in enumerate(self.dims)]))


def _check_unimodular(lam):
    if abs(abs(lam) - 1.0) > 1e-12:
        raise ValueError(f"gauge parameter must be unimodular, got |lambda| = {abs(lam)}")


class FockOperator:
    """Block operator on a truncated Fock module with degree and exactness data."""

    __array_priority__ = 1000

    def __init__(self, fock, blocks, degrees, exact):
        self.fock = fock
        self.blocks = {k: linalg.cmatrix(v) for k, v in sorted(blocks.items())}
        self.degrees = frozenset(degrees)
        self.exact = exact
        self.exact.setflags(write=False)

    @property
    def N(self):
        return self.fock.N

    def block(self, out, inp):
        if (out, inp) in self.blocks:
            return self.blocks[(out, inp)]
        return np.zeros((self.fock.dims[out], self.fock.dims[inp]), dtype=complex)

    def to_dense(self):
        F = self.fock
        out = np.zeros((F.total_dim, F.total_dim), dtype=complex)
        for (o, i), b in self.blocks.items():
            out[F.level_slice(o), F.level_slice(i)] = b
        return out

    def column(self, m):
        """Column of blocks at source level m, stacked over all target levels."""
        F = self.fock
        out = np.zeros((F.total_dim, F.dims[m]), dtype=complex)
        for (o, i), b in self.blocks.items():
            if i == m:
                out[F.level_slice(o)] = b
        return out

    def norm(self):
        return linalg.op_norm(self.to_dense())

    def norm_Q(self, n):
        """|S Q_n| and whether column n is exact."""
        return linalg.op_norm(self.column(n)), bool(self.exact[n])

    def norm_Rp(self, n):
        """|S R'_n| on the truncation and whether every column >= n is exact."""
        cols = [self.column(m) for m in range(n, self.N + 1)]
        if not cols:
            return 0.0, True
        return linalg.op_norm(np.hstack(cols)), bool(np.all(self.exact[n:]))

    def exact_levels(self):
        return [m for m in range(self.N + 1) if self.exact[m]]

    # -- arithmetic -------------------------------------------------------

    def _same_space(self, other):
        if other.fock.system is not self.fock.system:
            raise ValueError("operators live on different Fock modules")

    def __add__(self, other):
        if np.isscalar(other):
            other = self.fock.identity() * other
        self._same_space(other)
        blocks = dict(self.blocks)
        for k, b in other.blocks.items():
            blocks[k] = blocks[k] + b if k in blocks else b
        return FockOperator(self.fock, blocks, self.degrees | other.degrees,
                            self.exact & other.exact)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return FockOperator(self.fock, {k: b * other for k, b in self.blocks.items()},
                                self.degrees, self.exact.copy())
        return self @ other

    def __rmul__(self, other):
        if np.isscalar(other):
            return self * other
        return NotImplemented

    def __matmul__(self, other):
        self._same_space(other)
        N = self.N
        blocks = {}
        for (l, m), b in other.blocks.items():
            for (o, l2), a in self.blocks.items():
                if l2 != l:
                    continue
                prod = a @ b
                blocks[(o, m)] = blocks[(o, m)] + prod if (o, m) in blocks else prod
        exact = np.zeros(N + 1, dtype=bool)
        for m in range(N + 1):
            if not other.exact[m]:
                continue
            reach = [m + k for k in other.degrees if 0 <= m + k <= N]
            exact[m] = all(self.exact[l] for l in reach)
        degrees = {a + b for a in self.degrees for b in other.degrees}
        return FockOperator(self.fock, blocks, degrees, exact)

    def adj(self):
        N = self.N
        blocks = {(i, o): linalg.adjoint(b) for (o, i), b in self.blocks.items()}
        exact = np.zeros(N + 1, dtype=bool)
        for j in range(N + 1):
            sources = [j - k for k in self.degrees]
            exact[j] = all(s <= N for s in sources) and all(
                self.exact[s] for s in sources if 0 <= s <= N)
        return FockOperator(self.fock, blocks, {-k for k in self.degrees}, exact)

    @property
    def H(self):
        return self.adj()

    def times_Q(self, n):
        return self @ self.fock.Q(n)

    def __repr__(self):
        return (f"FockOperator(degrees={sorted(self.degrees)}, blocks={len(self.blocks)}, "
                f"exact={self.exact.astype(int).tolist()})")


def commutator(a, b):
    return a @ b - b @ a


def gauge_conjugate(S, lam):
    """W_lam S W_lam^*: block (m', m) is scaled by lam^(m' - m)."""
    _check_unimodular(lam)
    blocks = {(o, i): b * lam ** (o - i) for (o, i), b in S.blocks.items()}
    return FockOperator(S.fock, blocks, S.degrees, S.exact.copy())


def spectral_component(S, k):
    """Band of degree k: keep exactly the blocks with m' - m = k."""
    blocks = {(o, i): b for (o, i), b in S.blocks.items() if o - i == k}
    degrees = {k} if k in S.degrees else set()
    return FockOperator(S.fock, blocks, degrees, S.exact.copy())


def fejer(S, n):
    """Cesaro mean sum_{|k|<=n} (1 - |k|/(n+1)) Phi_k(S)."""
    if n < 0:
        raise ValueError("Fejer order must be nonnegative")
    blocks = {}
    for (o, i), b in S.blocks.items():
        k = o - i
        if abs(k) <= n:
            blocks[(o, i)] = b * (1.0 - abs(k) / (n + 1))
    degrees = {k for k in S.degrees if abs(k) <= n}
    return FockOperator(S.fock, blocks, degrees, S.exact.copy())


def adjoint_action_check(F, n, zeta):
    """Max over m of |block (m, n+m) of S_n(zeta)^* - J_m^*(<zeta_E| (x) I)J_{n+m}|.

    The reference side contracts the first n tensor legs of each path of
    length n+m directly, without using the structure tensor.
    """
    X = F.system
    S_star = F.shift(n, zeta).adj()
    zeta_E = X.J[n] @ np.asarray(zeta, dtype=complex)
    worst = 0.0
    for m in range(F.N - n + 1):
        pre, suf = X.split_map(n, m)
        contract = np.zeros((X.paths[m].dim, X.paths[n + m].dim), dtype=complex)
        contract[suf, np.arange(len(pre))] = np.conj(zeta_E[pre])
        ref = linalg.adjoint(X.J[m]) @ contract @ X.J[n + m]
        worst = max(worst, linalg.op_norm(S_star.block(m, n + m) - ref))
    return worst


def semigroup_residual(F, n, m, zeta, eta):
    """|S_n(zeta)S_m(eta) - S_{n+m}(p_{n+m}(zeta (x) eta))| on exact columns."""
    X = F.system
    lhs = F.shift(n, zeta) @ F.shift(m, eta)
    rhs = F.shift(n + m, X.tensor_fibers(zeta, eta, n, m))
    diff = lhs - rhs
    cols = [diff.column(j) for j in range(F.N + 1) if lhs.exact[j]]
    return linalg.op_norm(np.hstack(cols)) if cols else 0.0


def rank_one_sum(F, n, pairs):
    """Sum of S_n(x) S_n(x)^* over the given fiber basis indices of X(n)."""
    total = F.zero()
    for i in pairs:
        s = F.basis_shift(n, i)
        total = total + s @ s.adj()
    return total
