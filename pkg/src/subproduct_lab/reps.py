"""Covariant representations on finite-dimensional graded Hilbert spaces.

A representation is determined by the images of the edge basis of E:
``T_1(e)`` maps the block of its right vertex to the block of its left
vertex.  A path ``w = e_1 ... e_n`` acts by ``T_w = T_1(e_1) ... T_1(e_n)``
and ``T_n(zeta) = sum_w (J_n zeta)_w T_w``; the representation is
covariant exactly when this map kills the complement of X(n+m) inside
X(n) (x) X(m).
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .fock import TruncatedFock

PATH_CACHE_LIMIT = 2e7
SEED_CUTOFF = 1e-8


class RepresentationError(ValueError):
    pass


class CovariantRep:
    """Representation datum (sigma, T) of a subproduct system on C^dim."""

    def __init__(self, system, vertex, T1):
        self.system = system
        self.vertex = np.asarray(vertex, dtype=int)
        self.dim = len(self.vertex)
        if len(T1) != system.E.total_dim:
            raise RepresentationError(f"need {system.E.total_dim} generator matrices, got {len(T1)}")
        self.T1 = [linalg.cmatrix(t) for t in T1]
        for e, t in enumerate(self.T1):
            if t.shape != (self.dim, self.dim):
                raise RepresentationError(f"generator {system.E.labels[e]} has shape {t.shape}")
        self._ops = {}
        self._split = {}

    @property
    def dims(self):
        return [int(np.count_nonzero(self.vertex == a)) for a in range(self.system.q)]

    @property
    def N(self):
        return self.system.N

    def sigma(self, a):
        return np.diag((self.vertex == a).astype(complex))

    def sigma_vec(self, a):
        """Representation of a vector a in C^q."""
        return np.diag(np.asarray(a, dtype=complex)[self.vertex])

    def grading_residual(self):
        E = self.system.E
        worst = 0.0
        for e, t in enumerate(self.T1):
            graded = self.sigma(E.left[e]) @ t @ self.sigma(E.right[e])
            worst = max(worst, linalg.op_norm(t - graded))
        return worst

    # -- word map -----------------------------------------------------------

    def _last_edge_split(self, n):
        if n not in self._split:
            ps, prev = self.system.paths[n], self.system.paths[n - 1]
            if n == 1:
                prefix = ps.start.copy()
            else:
                prefix = np.array([prev.position[w[:-1]] for w in ps.words])
            last = np.array([w[-1] for w in ps.words])
            self._split[n] = (prefix, last)
        return self._split[n]

    def path_ops(self, n):
        """Array of T_w for all paths w of length n (cached when small)."""
        if n in self._ops:
            return self._ops[n]
        if n == 0:
            ops = np.array([self.sigma(v) for v in range(self.system.q)])
        else:
            prev = self.path_ops(n - 1)
            prefix, last = self._last_edge_split(n)
            ops = np.array([prev[p] @ self.T1[e] for p, e in zip(prefix, last)])
        self._ops[n] = ops
        return ops

    def word_map(self, n, v):
        """sum_w v_w T_w for a path-space vector v of level n."""
        v = np.asarray(v, dtype=complex).ravel()
        if n == 0:
            return self.sigma_vec(v)
        if self.system.paths[n].dim * self.dim ** 2 <= PATH_CACHE_LIMIT:
            return np.tensordot(v, self.path_ops(n), axes=(0, 0))
        prefix, last = self._last_edge_split(n)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for e in range(self.system.E.total_dim):
            mask = last == e
            if not np.any(mask) or not np.any(v[mask]):
                continue
            u = np.zeros(self.system.paths[n - 1].dim, dtype=complex)
            np.add.at(u, prefix[mask], v[mask])
            out += self.word_map(n - 1, u) @ self.T1[e]
        return out

    def T(self, n, zeta):
        """T_n(zeta) for zeta given in X(n) coordinates."""
        if n > self.N:
            raise RepresentationError(f"level {n} exceeds N = {self.N}")
        return self.word_map(n, self.system.J[n] @ np.asarray(zeta, dtype=complex))

    def T_basis(self, n, i):
        return self.T(n, self.system.fiber_basis_vector(n, i))

    def tail_projection(self, n):
        """pi(R'_n) = sum over the X(n) basis of T_n(x)T_n(x)^*."""
        if n == 0:
            return np.eye(self.dim, dtype=complex)
        if n > self.N:
            raise RepresentationError(f"pi(R'_{n}) needs level {n} > N = {self.N}")
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(self.system.fiber_dims[n]):
            t = self.T_basis(n, i)
            total += t @ linalg.adjoint(t)
        return total

    def word_bound(self, n):
        """sum over all paths of length n of T_w T_w^*, an upper bound for T~_n T~_n^*."""
        if n == 0:
            return np.eye(self.dim, dtype=complex)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        prev = self.word_bound(n - 1)
        for t in self.T1:
            out += t @ prev @ linalg.adjoint(t)
        return out

    def compress(self, basis):
        """Restriction to a reducing subspace with orthonormal basis ``basis`` (columns)."""
        basis = linalg.cmatrix(basis)
        proj_vertex = []
        for c in range(basis.shape[1]):
            col = np.abs(basis[:, c]) ** 2
            weights = [col[self.vertex == a].sum() for a in range(self.system.q)]
            proj_vertex.append(int(np.argmax(weights)))
        T1 = [linalg.adjoint(basis) @ t @ basis for t in self.T1]
        return CovariantRep(self.system, proj_vertex, T1)


# -- construction -------------------------------------------------------------


@dataclass
class ConsistencyReport:
    residual: float
    witness: tuple
    grading_residual: float


def multiplicativity_residual(rep):
    """Worst |T_{n+m}(p(zeta (x) eta)) - T_n(zeta)T_m(eta)| over basis pairs.

    Computed as the word map applied to (I - p_{n+m})(J_n zeta (x) J_m eta);
    the witness names (n, m, label of zeta, label of eta).
    """
    X = rep.system
    worst, witness = 0.0, None
    for n in range(1, X.N):
        for m in range(1, X.N - n + 1):
            full = X.tensor_paths(X.J[n], X.J[m], n, m)
            proj = X.projection(n + m)
            defect = full - proj @ full
            dm = X.fiber_dims[m]
            for col in range(defect.shape[1]):
                if not np.any(np.abs(defect[:, col]) > 1e-15):
                    continue
                r = linalg.op_norm(rep.word_map(n + m, defect[:, col]))
                if r > worst:
                    i, j = divmod(col, dm)
                    worst = r
                    witness = (n, m, X.fibers[n].labels[i], X.fibers[m].labels[j])
    return worst, witness


def rep_from_generators(system, vertex, T1, tol=1e-10):
    """Build and validate a covariant representation from edge images."""
    rep = CovariantRep(system, vertex, T1)
    g = rep.grading_residual()
    if g > tol:
        raise RepresentationError(f"generators do not respect the vertex grading (residual {g:.3e})")
    res, witness = multiplicativity_residual(rep)
    if res > tol:
        n, m, a, b = witness
        raise RepresentationError(
            f"inconsistent extension: residual {res:.3e} at levels ({n},{m}) "
            f"for the pair ({a}, {b})")
    rep.consistency = ConsistencyReport(res, witness, g)
    return rep


def fock_rep(system, tol=1e-10):
    """The defining representation T_n(zeta) = S_n(zeta) on the truncated Fock module."""
    F = TruncatedFock(system)
    vertex = np.concatenate([np.asarray(f.left, dtype=int) if n else np.arange(system.q)
                             for n, f in enumerate(system.fibers)])
    T1 = [F.basis_shift(1, e).to_dense() for e in range(system.E.total_dim)]
    return rep_from_generators(system, vertex, T1, tol)


def evaluation_rep(system, z, tol=1e-10):
    """Point evaluation on C: T_1(e_i) = z_i, T_n(zeta) = sum_w z^w (J_n zeta)_w."""
    if system.q != 1:
        raise RepresentationError("evaluation representations need a single-vertex system")
    z = np.asarray(z, dtype=complex)
    if z.shape != (system.E.total_dim,):
        raise RepresentationError(f"point must have {system.E.total_dim} coordinates")
    return rep_from_generators(system, [0], [np.array([[zi]]) for zi in z], tol)


def quiver_coisometric_rep(system, tol=1e-10):
    """One dimension per vertex with T_1(f_ij) = sqrt(P_ji h_j / (rho h_i)).

    h is a Perron eigenvector of P^T with eigenvalue rho; the choice makes
    sum_j |T_1(f_ij)|^2 = 1 on every vertex, hence T~_1 T~_1^* = I.
    """
    if system.label != "quiver":
        raise RepresentationError("needs a quiver system")
    P = np.asarray(system.params["P"], dtype=float)
    vals, vecs = np.linalg.eig(P.T)
    k = int(np.argmax(vals.real))
    rho = float(vals[k].real)
    h = np.abs(vecs[:, k].real)
    if rho <= 0 or np.any(h <= 1e-14):
        raise RepresentationError("P needs a strictly positive Perron eigenvector")
    d = P.shape[0]
    E = system.E
    T1 = []
    for e in range(E.total_dim):
        i, j = E.left[e], E.right[e]
        t = np.zeros((d, d), dtype=complex)
        t[i, j] = np.sqrt(P[j, i] * h[j] / (rho * h[i]))
        T1.append(t)
    return rep_from_generators(system, np.arange(d), T1, tol)


def direct_sum(a, b):
    if a.system is not b.system:
        raise RepresentationError("summands must share a system")
    T1 = []
    for ta, tb in zip(a.T1, b.T1):
        t = np.zeros((a.dim + b.dim, a.dim + b.dim), dtype=complex)
        t[:a.dim, :a.dim] = ta
        t[a.dim:, a.dim:] = tb
        T1.append(t)
    rep = CovariantRep(a.system, np.concatenate([a.vertex, b.vertex]), T1)
    rep.consistency = ConsistencyReport(*multiplicativity_residual(rep), rep.grading_residual())
    return rep


# -- T~_n and classification --------------------------------------------------


def ttilde(rep, n):
    """T~_n : X(n) (x)_sigma H -> H and T~_n T~_n^*.

    X(n) (x)_sigma H has the orthonormal basis x_i (x) h with h in the
    block of the right vertex of x_i; T~_n sends it to T_n(x_i)h.
    """
    X = rep.system
    cols = []
    for i in range(X.fiber_dims[n]):
        t = rep.T_basis(n, i)
        b = X.fibers[n].right[i] if n else i
        cols.append(t[:, rep.vertex == b])
    tt = np.hstack(cols) if cols else np.zeros((rep.dim, 0), dtype=complex)
    return tt, tt @ linalg.adjoint(tt)


@dataclass
class Classification:
    pure: bool
    fully_coisometric: bool
    essential: bool
    evidence: dict = field(default_factory=dict)

    def to_dict(self):
        return {"pure": self.pure, "fully_coisometric": self.fully_coisometric,
                "essential": self.essential, "evidence": self.evidence}


def classify(rep, horizon=None, tol=1e-10):
    """Pure / fully coisometric / essential flags with their evidence.

    Purity uses |T~_n T~_n^*| for n <= N and, past N, the word bound
    sum_{|w|=n} T_w T_w^* (which dominates T~_n T~_n^*); the default horizon
    is N + 1.  Essential means T~_n has rank dim H for all 1 <= n <= min(horizon, N).
    """
    N = rep.N
    horizon = N + 1 if horizon is None else horizon
    norms, ranks = [], []
    for n in range(1, min(horizon, N) + 1):
        tt, ttt = ttilde(rep, n)
        norms.append(linalg.op_norm(ttt))
        ranks.append(linalg.numerical_rank(tt) if tt.size else 0)
    bound = linalg.op_norm(rep.word_bound(horizon)) if horizon > N else norms[-1]
    _, t1 = ttilde(rep, 1)
    cois = linalg.op_norm(t1 - np.eye(rep.dim))
    return Classification(
        pure=bool(bound <= tol),
        fully_coisometric=bool(cois <= tol),
        essential=bool(all(r == rep.dim for r in ranks)),
        evidence={"ttilde_norms": norms, "ranks": ranks, "horizon": horizon,
                  "horizon_bound": bound, "coisometry_defect": cois, "dim": rep.dim},
    )


def kernel_ideal_check(rep, samples):
    """Largest |pi(S)| over sample expressions (ASTs from the expression module)."""
    from . import expr

    worst = 0.0
    rows = []
    for name, node in samples:
        if not isinstance(node, (expr.Gen, expr.Adj, expr.Proj, expr.Ident, expr.Scalar,
                                 expr.Add, expr.Sub, expr.Mul)):
            raise RepresentationError(f"sample {name!r} is not a polynomial in the generators")
        v = linalg.op_norm(expr.evaluate_rep(node, rep))
        rows.append((name, v))
        worst = max(worst, v)
    return worst, rows


# -- Wold decomposition --------------------------------------------------------


class WoldError(RepresentationError):
    def __init__(self, message, n):
        super().__init__(message)
        self.n = n


@dataclass
class WoldSplit:
    induced_subspace: np.ndarray
    coisometric_subspace: np.ndarray
    residuals: dict


def _invariance(rep, V):
    if V.shape[1] == 0:
        return 0.0
    P = linalg.projector(V)
    I = np.eye(rep.dim)
    worst = 0.0
    for t in rep.T1:
        worst = max(worst, linalg.op_norm((I - P) @ t @ P),
                    linalg.op_norm((I - P) @ linalg.adjoint(t) @ P))
    return worst


def wold_decompose(rep, horizon=None, tol=1e-10):
    """Split H into the part generated by the ranges of pi(Q_n) and its complement."""
    N = rep.N
    horizon = N - 1 if horizon is None else min(horizon, N - 1)
    tails = [rep.tail_projection(n) for n in range(N + 1)]
    hyp = 0.0
    for n in range(1, N + 1):
        _, ttt = ttilde(rep, n)
        r = linalg.op_norm(ttt - tails[n])
        r = max(r, linalg.op_norm(tails[n] @ tails[n] - tails[n]))
        hyp = max(hyp, r)
        if r > tol:
            raise WoldError(f"T~_n T~_n^* differs from pi(R'_n) at n = {n} (residual {r:.3e})", n)
    # pi(Q_n) is a projection, so a seed of norm near zero is rounding noise
    seeds = [tails[n] - tails[n + 1] for n in range(horizon + 1)]
    seeds = [s for s in seeds if linalg.op_norm(s) > SEED_CUTOFF]
    V = linalg.orthonormal_range(np.hstack(seeds)) if seeds else np.zeros((rep.dim, 0))
    gens = rep.T1 + [linalg.adjoint(t) for t in rep.T1]
    for _ in range(rep.dim):
        if V.shape[1] == 0:
            break
        W = linalg.orthonormal_range(np.hstack([V] + [g @ V for g in gens]))
        if W.shape[1] == V.shape[1]:
            V = W
            break
        V = W
    if V.shape[1] == 0:
        C = np.eye(rep.dim, dtype=complex)
    elif V.shape[1] == rep.dim:
        C = np.zeros((rep.dim, 0), dtype=complex)
    else:
        C = linalg.orthonormal_range(np.eye(rep.dim) - linalg.projector(V))
    residuals = {
        "hypothesis": hyp,
        "orthogonality": linalg.op_norm(linalg.adjoint(V) @ C) if V.size and C.size else 0.0,
        "span": abs(V.shape[1] + C.shape[1] - rep.dim),
        "induced_invariance": _invariance(rep, V),
        "coisometric_invariance": _invariance(rep, C),
    }
    if V.shape[1]:
        sub = rep.compress(V)
        residuals["induced_pure_bound"] = linalg.op_norm(sub.word_bound(N + 1))
    else:
        residuals["induced_pure_bound"] = 0.0
    if C.shape[1]:
        _, t1 = ttilde(rep, 1)
        residuals["coisometric_defect"] = linalg.op_norm(
            linalg.adjoint(C) @ t1 @ C - np.eye(C.shape[1]))
    else:
        residuals["coisometric_defect"] = 0.0
    return WoldSplit(V, C, residuals)


def rep_from_json(data, system):
    """Representation from {"dims": [...], "T1": {label: matrix}}; entries may be strings like "1+2j"."""
    dims = data["dims"]
    if len(dims) != system.q:
        raise RepresentationError(f"need one dimension per vertex ({system.q})")
    vertex = np.concatenate([np.full(d, a, dtype=int) for a, d in enumerate(dims)])
    T1 = []
    for lab in system.E.labels:
        if lab not in data["T1"]:
            raise RepresentationError(f"missing generator {lab}")
        T1.append(np.array([[complex(x) for x in row] for row in data["T1"][lab]]))
    unknown = set(data["T1"]) - set(system.E.labels)
    if unknown:
        raise RepresentationError(f"unknown generator labels {sorted(unknown)}")
    return rep_from_generators(system, vertex, T1)
