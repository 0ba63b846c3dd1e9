"""Finite Morita context between M_k(C) and C, and the linking system.

Realizations used throughout (y_n := dim Y(n)):

* M = C^k with A-valued rigging x y^* and C-valued rigging sum conj(x_i) y_i.
* X(n) = M (x) Y(n) (x) M~, a k x k matrix of Y(n) vectors (dim k y_n k).
* X(n) (x)_A M is stored in "Y(n) (x) C^k" coordinates, index ``w * k + a``;
  M (x) Y(n) uses index ``a * y_n + w``.  W_n is the shuffle between them.
* A fiber of F_Z' at level m is [Y(m) ; X(m) (x) M]; sector 0 is Y(m),
  sector 1 is X(m) (x) M in Y(m) (x) C^k coordinates.
* An element of Z(n) is given by four corners: ``upper`` in Y(n),
  ``upper_right[w, b]`` for sum_b eta_b (x) e~_b in Y(n) (x) M~,
  ``lower_left[w, a]`` in X(n) (x) M, and ``lower_right[a, w, b]`` in X(n).

Linking shifts are built twice: from the explicit corner formulas with
W shuffles ("direct"), and as (1+k) x (1+k) matrices of Y-side shifts
("matrix" route, Z(n) = M_{1+k}(Y(n))).  The two are compared.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .fock import TruncatedFock
from .ideal import TOL_IDEAL, decay_verdict


def shuffle_index(k, y):
    """Index array s with (W v)[w*k + a] = v[s[w*k + a]] = v[a*y + w]."""
    w, a = np.meshgrid(np.arange(y), np.arange(k), indexing="ij")
    return (a * y + w).ravel()


def shuffle_matrix(k, y):
    s = shuffle_index(k, y)
    W = np.zeros((k * y, k * y))
    W[np.arange(k * y), s] = 1.0
    return W


@dataclass
class MoritaContext:
    k: int
    Y: object
    FY: TruncatedFock
    checks: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.Y.N

    def ydim(self, n):
        return self.Y.fiber_dims[n]

    def x_dim(self, n):
        """Underlying dimension of X(n) = M (x) Y(n) (x) M~."""
        return self.k * self.ydim(n) * self.k

    def z_dim(self, n):
        return (1 + self.k) ** 2 * self.ydim(n)

    def W(self, n):
        return shuffle_matrix(self.k, self.ydim(n))

    def W_index(self, n):
        return shuffle_index(self.k, self.ydim(n))

    def W_inverse_index(self, n):
        return np.argsort(self.W_index(n))

    def embedding(self, n, m):
        """Y(n+m) -> Y(n) (x) Y(m) in fiber coordinates."""
        g = self.Y.product_tensor(n, m)
        return np.conj(g.reshape(g.shape[0], -1)).T

    def sector_size(self, level, sector):
        return self.ydim(level) * (1 if sector == 0 else self.k)


def left_rigging(x, y):
    """A-valued inner product x y^*."""
    return np.outer(x, np.conj(y))


def right_rigging(x, y):
    return complex(np.vdot(x, y))


def composition_residual(ctx, n, m):
    """|(I (x) W_m)(W_n (x) I) (I_k (x) emb) - (emb (x) I_k) W_{n+m}| on Y(n+m)."""
    k, yn, ym = ctx.k, ctx.ydim(n), ctx.ydim(m)
    lhs = np.kron(np.eye(yn), ctx.W(m)) @ np.kron(ctx.W(n), np.eye(ym))
    direct = shuffle_matrix(k, yn * ym)
    emb = ctx.embedding(n, m)
    on_fiber = lhs @ np.kron(np.eye(k), emb) - np.kron(emb, np.eye(k)) @ ctx.W(n + m)
    return max(float(np.max(np.abs(lhs - direct), initial=0.0)),
               float(np.max(np.abs(on_fiber), initial=0.0)))


def build_context(k, Y, tol=1e-12, seed=0):
    """Morita context for M = C^k between M_k(C) and C, with the induced system."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if Y.q != 1:
        raise ValueError("the coefficient system must live over C (one vertex)")
    ctx = MoritaContext(k, Y, TruncatedFock(Y))
    rng = np.random.default_rng(seed)
    imp = 0.0
    for _ in range(10):
        x, y, z = (linalg.random_cmatrix(k, 1, rng).ravel() for _ in range(3))
        imp = max(imp, float(np.max(np.abs(left_rigging(x, y) @ z - x * right_rigging(y, z)))))
    intertwine = 0.0
    for n in range(ctx.N + 1):
        pn = Y.projection(n)
        Wp = shuffle_matrix(k, Y.paths[n].dim)
        r = Wp @ np.kron(np.eye(k), pn) - np.kron(pn, np.eye(k)) @ Wp
        intertwine = max(intertwine, float(np.max(np.abs(r), initial=0.0)))
    comp = max((composition_residual(ctx, n, m) for n in range(ctx.N + 1)
                for m in range(ctx.N + 1 - n)), default=0.0)
    ctx.checks = {"imprimitivity": imp, "intertwining": intertwine, "composition": comp,
                  "passed": imp <= tol and intertwine <= tol and comp <= tol}
    return ctx


def z_subproduct_residual(ctx):
    """Subproduct axiom for Z(n) = M_{1+k}(Y(n)) realized in path coordinates.

    Reported as a Frobenius norm, an upper bound for the operator norm
    that avoids SVDs of the (1+k)^2-fold enlarged path spaces.
    """
    Y, r = ctx.Y, 1 + ctx.k
    worst = 0.0
    for n in range(1, ctx.N):
        for m in range(1, ctx.N - n + 1):
            pn, pm, pnm = Y.projection(n), Y.projection(m), Y.projection(n + m)
            a, b = Y.split_map(n, m)
            pp = pn[np.ix_(a, a)] * pm[np.ix_(b, b)]
            lhs = np.kron(np.kron(np.eye(r), pp @ pnm), np.eye(r))
            rhs = np.kron(np.kron(np.eye(r), pnm), np.eye(r))
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


# -- linking elements ---------------------------------------------------------


@dataclass
class LinkingElement:
    n: int
    upper: np.ndarray
    upper_right: np.ndarray
    lower_left: np.ndarray
    lower_right: np.ndarray

    @classmethod
    def zeros(cls, ctx, n):
        y, k = ctx.ydim(n), ctx.k
        return cls(n, np.zeros(y, complex), np.zeros((y, k), complex),
                   np.zeros((y, k), complex), np.zeros((k, y, k), complex))

    @classmethod
    def random(cls, ctx, n, rng, corners="0123"):
        el = cls.zeros(ctx, n)
        y, k = ctx.ydim(n), ctx.k
        if "0" in corners:
            el.upper = linalg.random_cmatrix(y, 1, rng).ravel()
        if "1" in corners:
            el.upper_right = linalg.random_cmatrix(y, k, rng)
        if "2" in corners:
            el.lower_left = linalg.random_cmatrix(y, k, rng)
        if "3" in corners:
            el.lower_right = linalg.random_cmatrix(k * y, k, rng).reshape(k, y, k)
        return el

    def as_matrix_entries(self, k):
        """Entries (r, c) -> Y(n) vector of the (1+k) x (1+k) matrix form."""
        out = {(0, 0): self.upper}
        for b in range(k):
            out[(0, b + 1)] = self.upper_right[:, b]
        for a in range(k):
            out[(a + 1, 0)] = self.lower_left[:, a]
            for b in range(k):
                out[(a + 1, b + 1)] = self.lower_right[a, :, b]
        return out


class LinkingOperator:
    """Operator on truncated F_Z' stored as blocks ((level, sector), (level, sector)).

    Products accumulate contributions ordered by (sector, level) of the
    middle index, the same order as a (1+k) x (1+k) matrix product of
    level-blocked operators.
    """

    def __init__(self, ctx, blocks, degrees, exact):
        self.ctx = ctx
        self.blocks = dict(sorted(blocks.items()))
        self.degrees = frozenset(degrees)
        self.exact = np.asarray(exact, dtype=bool)

    @property
    def N(self):
        return self.ctx.N

    def layout(self):
        offs, pos = {}, 0
        for lvl in range(self.N + 1):
            for s in (0, 1):
                offs[(lvl, s)] = pos
                pos += self.ctx.sector_size(lvl, s)
        return offs, pos

    def to_dense(self, sectors=(0, 1)):
        offs, pos = {}, 0
        for lvl in range(self.N + 1):
            for s in sectors:
                offs[(lvl, s)] = pos
                pos += self.ctx.sector_size(lvl, s)
        out = np.zeros((pos, pos), dtype=complex)
        for (o, i), b in self.blocks.items():
            if o[1] in sectors and i[1] in sectors:
                out[offs[o]:offs[o] + b.shape[0], offs[i]:offs[i] + b.shape[1]] = b
        return out

    def __matmul__(self, other):
        N = self.N
        terms = {}
        for (mid, src), b in other.blocks.items():
            for (dst, mid2), a in self.blocks.items():
                if mid2 != mid:
                    continue
                terms.setdefault((dst, src), []).append(((mid[1], mid[0]), a @ b))
        blocks = {}
        for key, lst in terms.items():
            lst.sort(key=lambda t: t[0])
            acc = lst[0][1]
            for _, p in lst[1:]:
                acc = acc + p
            blocks[key] = acc
        exact = np.zeros(N + 1, dtype=bool)
        for m in range(N + 1):
            if other.exact[m]:
                exact[m] = all(self.exact[m + d] for d in other.degrees if 0 <= m + d <= N)
        return LinkingOperator(self.ctx, blocks, {a + b for a in self.degrees for b in other.degrees},
                               exact)

    def __add__(self, other):
        blocks = dict(self.blocks)
        for key, b in other.blocks.items():
            blocks[key] = blocks[key] + b if key in blocks else b
        return LinkingOperator(self.ctx, blocks, self.degrees | other.degrees,
                               self.exact & other.exact)

    def __mul__(self, c):
        return LinkingOperator(self.ctx, {key: b * c for key, b in self.blocks.items()},
                               self.degrees, self.exact.copy())

    __rmul__ = __mul__

    def normalized(self):
        nrm = self.norm()
        return self * (1.0 / nrm) if nrm > 0 else self

    def adj(self):
        N = self.N
        exact = np.zeros(N + 1, dtype=bool)
        for j in range(N + 1):
            src = [j - d for d in self.degrees]
            exact[j] = all(s <= N for s in src) and all(self.exact[s] for s in src if s >= 0)
        return LinkingOperator(self.ctx, {(i, o): linalg.adjoint(b) for (o, i), b in self.blocks.items()},
                               {-d for d in self.degrees}, exact)

    def corner(self, out_sector, in_sector):
        blocks = {key: b for key, b in self.blocks.items()
                  if key[0][1] == out_sector and key[1][1] == in_sector}
        return LinkingOperator(self.ctx, blocks, self.degrees, self.exact.copy())

    def norm(self):
        return linalg.op_norm(self.to_dense())

    def sector_column_norm(self, level, sector):
        cols = [b for (o, i), b in self.blocks.items() if i == (level, sector)]
        return linalg.op_norm(np.vstack(cols)) if cols else 0.0


def _kron_unit(S, k, a, b):
    """S (x) E_ab in Y (x) C^k coordinates."""
    E = np.zeros((k, k))
    E[a, b] = 1.0
    return np.kron(S, E)


def _shift_block(ctx, n, m, v):
    return np.tensordot(ctx.Y.product_tensor(n, m), np.asarray(v, dtype=complex), axes=([1], [0]))


def linking_shift(ctx, alpha):
    """S^Z_n(alpha) on F_Z' from the corner formulas.

    Column Y(m):  [S^Y(upper) nu ; (S^X(zeta_1) (x) I) W_m(e_0 (x) nu)], where
    zeta_1 has column 0 equal to the lower-left corner.
    Column X(m) (x) M:  [sum_b S^Y(eta_b) (m_B (x) I)(e~_b (x) W_m^{-1}(mu (x) z)) ;
    (S^X(lower_right) (x) I)(mu (x) z)].
    """
    n, k, N = alpha.n, ctx.k, ctx.N
    blocks = {}
    exact = np.zeros(N + 1, dtype=bool)
    for m in range(N + 1):
        if n + m > N:
            continue
        exact[m] = True
        o = n + m
        ym, yo = ctx.ydim(m), ctx.ydim(o)
        blocks[((o, 0), (m, 0))] = _shift_block(ctx, n, m, alpha.upper)
        # S^X(zeta_1) (x) I_M with zeta_1 = sum_a e_a (x) lower_left[:, a] (x) e~_0
        sx1 = sum(_kron_unit(_shift_block(ctx, n, m, alpha.lower_left[:, a]), k, a, 0)
                  for a in range(k))
        embed0 = np.zeros((k * ym, ym), dtype=complex)
        # W_m(e_0 (x) nu): M (x) Y index 0*ym + w goes to Y (x) C^k index w*k + 0
        embed0[np.arange(ym) * k, np.arange(ym)] = 1.0
        blocks[((o, 1), (m, 0))] = sx1 @ embed0
        inv = ctx.W_inverse_index(m)
        up = np.zeros((yo, k * ym), dtype=complex)
        for b in range(k):
            sel = np.zeros((ym, k * ym), dtype=complex)
            # row b of M (x) Y(m) after W_m^{-1}
            rows = np.arange(b * ym, (b + 1) * ym)
            sel[np.arange(ym), inv[rows]] = 1.0
            up = up + _shift_block(ctx, n, m, alpha.upper_right[:, b]) @ sel
        blocks[((o, 0), (m, 1))] = up
        blocks[((o, 1), (m, 1))] = sum(
            _kron_unit(_shift_block(ctx, n, m, alpha.lower_right[a, :, b]), k, a, b)
            for a in range(k) for b in range(k))
    return LinkingOperator(ctx, blocks, {n}, exact)


def linking_shift_adjoint(ctx, beta):
    """S^Z_n(beta)^* on F_Z' from the adjoint formula, levels m >= n.

    Y(m) column:  [S^Y(upper)^* nu ; sum_b W_{m-n}(e_b (x) S^Y(upper_right[:, b])^* nu)].
    X(m) (x) M column:  [(m_B (x) I)(e~_0 (x) W^{-1}[(S^X(zeta_1)^* (x) I)(mu (x) z)]) ;
    (S^X(lower_right)^* (x) I)(mu (x) z)].
    """
    n, k, N = beta.n, ctx.k, ctx.N
    blocks = {}
    for m in range(n, N + 1):
        o = m - n
        yo, ym = ctx.ydim(o), ctx.ydim(m)
        adj = lambda v: linalg.adjoint(_shift_block(ctx, n, o, v))  # noqa: E731
        blocks[((o, 0), (m, 0))] = adj(beta.upper)
        low = np.zeros((k * yo, ym), dtype=complex)
        widx = ctx.W_index(o)
        for b in range(k):
            lifted = np.zeros((k * yo, ym), dtype=complex)
            lifted[b * yo:(b + 1) * yo] = adj(beta.upper_right[:, b])
            low = low + lifted[widx]
        blocks[((o, 1), (m, 0))] = low
        sx1_star = sum(_kron_unit(adj(beta.lower_left[:, a]), k, 0, a) for a in range(k))
        in_my = sx1_star[ctx.W_inverse_index(o)]
        blocks[((o, 0), (m, 1))] = in_my[:yo]
        blocks[((o, 1), (m, 1))] = sum(_kron_unit(adj(beta.lower_right[a, :, b]), k, b, a)
                                       for a in range(k) for b in range(k))
    return LinkingOperator(ctx, blocks, {-n}, np.ones(N + 1, dtype=bool))


def linking_projection(ctx, sector):
    blocks = {((l, sector), (l, sector)): np.eye(ctx.sector_size(l, sector), dtype=complex)
              for l in range(ctx.N + 1)}
    return LinkingOperator(ctx, blocks, {0}, np.ones(ctx.N + 1, dtype=bool))


def embed_y_operator(ctx, S):
    """A Y-side FockOperator placed in sector 0 of F_Z'."""
    blocks = {((o, 0), (i, 0)): b for (o, i), b in S.blocks.items()}
    return LinkingOperator(ctx, blocks, S.degrees, S.exact.copy())


# -- matrix route -------------------------------------------------------------


class LinkingMatrix:
    """(1+k) x (1+k) matrix of Y-side FockOperators (None for zero entries)."""

    def __init__(self, ctx, entries):
        self.ctx = ctx
        self.entries = entries

    @classmethod
    def shift(cls, ctx, alpha):
        entries = {key: ctx.FY.shift(alpha.n, v)
                   for key, v in alpha.as_matrix_entries(ctx.k).items()}
        return cls(ctx, entries)

    def __matmul__(self, other):
        r = self.ctx.k + 1
        out = {}
        for i in range(r):
            for j in range(r):
                acc = None
                for s in range(r):
                    a, b = self.entries.get((i, s)), other.entries.get((s, j))
                    if a is None or b is None:
                        continue
                    p = a @ b
                    acc = p if acc is None else acc + p
                if acc is not None:
                    out[(i, j)] = acc
        return LinkingMatrix(self.ctx, out)

    def adj(self):
        return LinkingMatrix(self.ctx, {(j, i): v.adj() for (i, j), v in self.entries.items()})

    def y_corner(self):
        e = self.entries.get((0, 0))
        return e if e is not None else self.ctx.FY.zero()

    def dense_block(self, rows, cols):
        """Dense operator on (C^len(rows)) (x) F_Y assembled from the selected entries."""
        d = self.ctx.FY.total_dim
        out = np.zeros((len(rows) * d, len(cols) * d), dtype=complex)
        for a, i in enumerate(rows):
            for b, j in enumerate(cols):
                if (i, j) in self.entries:
                    out[a * d:(a + 1) * d, b * d:(b + 1) * d] = self.entries[(i, j)].to_dense()
        return out

    def x_side_dense(self):
        """sum_ab E_ab (x) T_ab on C^k (x) F_Y, i.e. the X-side operator tensored with I_M."""
        k = self.ctx.k
        return self.dense_block(range(1, k + 1), range(1, k + 1))

    def full_dense(self):
        r = self.ctx.k + 1
        return self.dense_block(range(r), range(r))


def lower_sector_permutation(ctx):
    """Permutation taking C^k (x) F_Y (a-major over the whole Fock space)
    to the concatenation over levels of Y(m) (x) C^k coordinates."""
    FY = ctx.FY
    d = FY.total_dim
    idx = []
    for m in range(ctx.N + 1):
        off = FY.offsets[m]
        for w in range(ctx.ydim(m)):
            for a in range(ctx.k):
                idx.append(a * d + off + w)
    return np.array(idx)


# -- checks -------------------------------------------------------------------


def random_word(ctx, rng, max_len=3, max_level=2, corners="0123"):
    """List of (LinkingElement, is_adjoint) factors."""
    length = int(rng.integers(1, max_len + 1))
    word = []
    for _ in range(length):
        n = int(rng.integers(0, min(max_level, ctx.N) + 1))
        word.append((LinkingElement.random(ctx, n, rng, corners), bool(rng.integers(2))))
    return word


def evaluate_word(ctx, word):
    """Both routes for a word: (direct LinkingOperator, LinkingMatrix)."""
    direct, matrix = None, None
    for alpha, star in word:
        d = linking_shift_adjoint(ctx, alpha) if star else linking_shift(ctx, alpha)
        mtx = LinkingMatrix.shift(ctx, alpha)
        if star:
            mtx = mtx.adj()
        direct = d if direct is None else direct @ d
        matrix = mtx if matrix is None else matrix @ mtx
    return direct, matrix


@dataclass
class CompressionReport:
    p_residual: float
    q_residual: float
    direct_vs_matrix: float
    norm_preservation: float
    invariance: float
    samples: int

    def to_dict(self):
        return dict(self.__dict__)


def _y_sector_dense(op):
    return op.to_dense(sectors=(0,))


def _x_sector_dense(op):
    return op.to_dense(sectors=(1,))


def compression_check(ctx, words):
    """Compare p.word.p with the Y-side word and q.word.q with (X-side word) (x) I_M."""
    perm = lower_sector_permutation(ctx)
    p_res = q_res = full_res = norm_res = inv = 0.0
    for word in words:
        direct, matrix = evaluate_word(ctx, word)
        pwp = _y_sector_dense(direct)
        yw = matrix.y_corner().to_dense()
        p_res = max(p_res, float(np.max(np.abs(pwp - yw), initial=0.0)))
        qwq = _x_sector_dense(direct)
        xw = matrix.x_side_dense()[np.ix_(perm, perm)]
        q_res = max(q_res, float(np.max(np.abs(qwq - xw), initial=0.0)))
        # whole F_Z' picture: the matrix route acts on C^{1+k} (x) F_Y
        full_perm = _fz_prime_permutation(ctx)
        fzp = matrix.full_dense()[np.ix_(full_perm, full_perm)]
        full_res = max(full_res, float(np.max(np.abs(direct.to_dense() - fzp), initial=0.0)))
        # |T (x) I_M| = |T|, T acting on F_X = C^k (x) F_Y (x) C^k
        T_on_FX = np.kron(matrix.x_side_dense(), np.eye(ctx.k))
        norm_res = max(norm_res, abs(linalg.op_norm(qwq) - linalg.op_norm(T_on_FX)))
        inv = max(inv, fz_prime_invariance(ctx, matrix))
    return CompressionReport(p_res, q_res, full_res, norm_res, inv, len(words))


def _fz_prime_permutation(ctx):
    """Permutation from C^{1+k} (x) F_Y (row-major) to the level/sector layout of F_Z'."""
    FY = ctx.FY
    d = FY.total_dim
    idx = []
    for m in range(ctx.N + 1):
        off = FY.offsets[m]
        idx.extend(off + w for w in range(ctx.ydim(m)))
        for w in range(ctx.ydim(m)):
            for a in range(ctx.k):
                idx.append((a + 1) * d + off + w)
    return np.array(idx)


def fz_prime_invariance(ctx, matrix):
    """|(I - P')S P'| and |(I - P')S^* P'| on F_Z = M_{1+k}(F_Y), P' the first-column projection."""
    r = 1 + ctx.k
    S = np.kron(matrix.full_dense(), np.eye(r))
    inside = np.tile(np.arange(r) == 0, S.shape[0] // r)
    out, cols = ~inside, inside
    Sh = linalg.adjoint(S)
    return max(linalg.op_norm(S[np.ix_(out, cols)]), linalg.op_norm(Sh[np.ix_(out, cols)]))


@dataclass
class TransferReport:
    sequence: list
    bound: list
    violations: int
    y_norms: list
    verdict: str
    degree: int

    def to_dict(self):
        return {"sequence": [[n, v, e] for n, v, e in self.sequence],
                "bound": [[n, v] for n, v in self.bound], "violations": self.violations,
                "y_norms": [[n, v, e] for n, v, e in self.y_norms],
                "verdict": self.verdict, "degree": self.degree}


def ideal_transfer_check(ctx, T1, T2, S, tol=1e-10, tol_ideal=TOL_IDEAL):
    """Sequence |(q T1 p) S (p T2 q)(Q^X_n (x) I_M)| against |T1| |S Q^Y_{n+m}| |T2|.

    T1 and T2 are LinkingOperators; T2 must be homogeneous of one degree m.
    """
    if len(T2.degrees) != 1:
        raise ValueError("T2 must be a monomial with a single degree")
    m = next(iter(T2.degrees))
    A = T1.corner(1, 0) @ embed_y_operator(ctx, S) @ T2.corner(0, 1)
    n1, n2 = T1.norm(), T2.norm()
    seq, bound, viol = [], [], 0
    y_norms = [(n,) + S.norm_Q(n) for n in range(ctx.N + 1)]
    for n in range(ctx.N + 1):
        v = A.sector_column_norm(n, 1)
        ex = bool(A.exact[n])
        seq.append((n, v, ex))
        if 0 <= n + m <= ctx.N:
            b = n1 * S.norm_Q(n + m)[0] * n2
        else:
            b = 0.0
        bound.append((n, b))
        if ex and 0 <= n + m <= ctx.N and v > b + tol:
            viol += 1
    exact = [(n, v) for n, v, e in seq if e]
    verdict = decay_verdict(exact, tol_ideal)[0] if exact else "inconclusive"
    return TransferReport(seq, bound, viol, y_norms, verdict, m)
