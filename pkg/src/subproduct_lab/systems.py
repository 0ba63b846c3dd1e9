"""Finite-dimensional subproduct systems over the commutative algebra C^q.

A correspondence over C^q is stored through an orthonormal basis in which
every basis vector lives in a single vertex block ``(left, right)``; its
C^q-valued inner product with itself is the unit of coordinate ``right``.
The n-fold internal tensor power E^{(x)n} then has the composable edge
paths of length n as an orthonormal basis, and level 0 is C^q itself with
the vertex units as basis.  A fiber X(n) is stored as an isometry
``J[n]`` from X(n) into the path space of E^{(x)n}.
"""

import itertools
import math
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import linalg

FAMILIES = ("product", "symmetric", "subshift", "quiver", "induced")

DEFAULT_LEVELS = {"product": {2: 8, 3: 6}, "symmetric": {2: 8, 3: 6}, "quiver": 6}


class FaithfulnessError(ValueError):
    """The requested system would have a non-faithful (or empty) fiber."""


@dataclass(frozen=True)
class GradedCorrespondence:
    """Orthonormal basis of a correspondence over C^q, graded by vertex pairs."""

    q: int
    labels: tuple
    left: tuple
    right: tuple

    @property
    def total_dim(self):
        return len(self.labels)

    def block_dims(self):
        dims = {}
        for a, b in zip(self.left, self.right):
            dims[(a, b)] = dims.get((a, b), 0) + 1
        return dims

    def left_action(self, a):
        """Matrix of the left action of the vertex unit ``a``."""
        return np.diag((np.asarray(self.left) == a).astype(np.complex128))

    def right_action(self, b):
        return np.diag((np.asarray(self.right) == b).astype(np.complex128))

    def rigging(self, i, j):
        """C^q-valued inner product of basis vectors i and j."""
        out = np.zeros(self.q)
        if i == j:
            out[self.right[i]] = 1.0
        return out

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None


@dataclass(frozen=True)
class PathSpace:
    """Composable edge paths of a fixed length, in lexicographic order."""

    length: int
    words: tuple
    start: np.ndarray
    end: np.ndarray
    position: dict = field(repr=False)

    @property
    def dim(self):
        return len(self.words)


def _path_spaces(E, N):
    spaces = []
    words = [(v,) for v in range(E.q)]
    start = [v for v in range(E.q)]
    end = list(start)
    spaces.append(_make_paths(0, words, start, end))
    edges_from = {v: [e for e in range(E.total_dim) if E.left[e] == v] for v in range(E.q)}
    cur = [((), None, None)]
    for n in range(1, N + 1):
        nxt = []
        for w, s, t in cur:
            cands = range(E.total_dim) if t is None else edges_from[t]
            for e in cands:
                nxt.append((w + (e,), E.left[e] if s is None else s, E.right[e]))
        cur = nxt
        spaces.append(_make_paths(n, [w for w, _, _ in cur], [s for _, s, _ in cur],
                                  [t for _, _, t in cur]))
    return spaces


def _make_paths(n, words, start, end):
    words = tuple(words)
    return PathSpace(
        length=n,
        words=words,
        start=np.asarray(start, dtype=int),
        end=np.asarray(end, dtype=int),
        position={w: i for i, w in enumerate(words)},
    )


class SubproductSystem:
    """Truncated subproduct system ``X(0), ..., X(N)`` inside E^{(x)n}.

    ``J[n]`` is an isometry from X(n) into the path space of level n, with
    ``J[0]`` and ``J[1]`` identities.  Each column of ``J[n]`` must be
    supported on paths sharing one start and one end vertex, which grades
    X(n) by vertex pairs.  Instances are treated as immutable; derived
    tensors are cached.
    """

    def __init__(self, E, N, J, label, fiber_labels=None, params=None):
        if label not in FAMILIES:
            raise ValueError(f"unknown family {label!r}")
        if N < 1:
            raise ValueError("truncation level N must be at least 1")
        if len(J) != N + 1:
            raise ValueError("need one embedding per level 0..N")
        self.E = E
        self.N = N
        self.q = E.q
        self.label = label
        self.params = dict(params or {})
        self.paths = _path_spaces(E, N)
        self.J = [linalg.cmatrix(j) for j in J]
        for n, j in enumerate(self.J):
            if j.shape[0] != self.paths[n].dim:
                raise ValueError(f"J[{n}] has {j.shape[0]} rows, expected {self.paths[n].dim}")
        self.fibers = [self._grade_fiber(n, fiber_labels[n] if fiber_labels else None)
                       for n in range(N + 1)]
        self._cache = {}

    def _grade_fiber(self, n, labels):
        j = self.J[n]
        ps = self.paths[n]
        left, right = [], []
        for c in range(j.shape[1]):
            support = np.flatnonzero(np.abs(j[:, c]) > 1e-14)
            if support.size == 0:
                raise ValueError(f"J[{n}] has a zero column {c}")
            s = set(ps.start[support].tolist())
            t = set(ps.end[support].tolist())
            if len(s) != 1 or len(t) != 1:
                raise ValueError(f"column {c} of J[{n}] mixes vertex blocks")
            left.append(s.pop())
            right.append(t.pop())
        if labels is None:
            labels = [f"x{n}_{c}" for c in range(j.shape[1])]
        return GradedCorrespondence(self.q, tuple(labels), tuple(left), tuple(right))

    # -- basic data -------------------------------------------------------

    @property
    def fiber_dims(self):
        return tuple(f.total_dim for f in self.fibers)

    def projection(self, n):
        """The projection p_n of E^{(x)n} onto X(n), in path coordinates."""
        key = ("p", n)
        if key not in self._cache:
            self._cache[key] = linalg.projector(self.J[n])
        return self._cache[key]

    def with_embedding(self, n, J_n, fiber_labels=None):
        """Copy of the system with ``J[n]`` replaced (used to build bad systems)."""
        J = list(self.J)
        J[n] = J_n
        labels = [list(f.labels) for f in self.fibers]
        labels[n] = fiber_labels or [f"x{n}_{c}" for c in range(linalg.cmatrix(J_n).shape[1])]
        return SubproductSystem(self.E, self.N, J, self.label, labels, self.params)

    def truncated(self, N):
        """The same system rebuilt at another truncation level."""
        return build_system(dict(self.description(), N=N))

    def description(self):
        desc = {"kind": self.label, "N": self.N}
        desc.update(self.params)
        return desc

    # -- tensor structure -------------------------------------------------

    def concat_map(self, n, m):
        """Index map for the internal tensor product of paths.

        Returns ``(valid, target)``: for the pair index ``a * dim_m + b`` of
        paths ``a`` (length n) and ``b`` (length m), ``valid`` says whether
        they compose and ``target`` is the index of the concatenation.
        """
        key = ("concat", n, m)
        if key not in self._cache:
            pn, pm, pnm = self.paths[n], self.paths[m], self.paths[n + m]
            valid = (pn.end[:, None] == pm.start[None, :]).ravel()
            target = np.full(pn.dim * pm.dim, -1, dtype=int)
            for a, wa in enumerate(pn.words):
                for b, wb in enumerate(pm.words):
                    k = a * pm.dim + b
                    if not valid[k]:
                        continue
                    if n == 0:
                        w = wb
                    elif m == 0:
                        w = wa
                    else:
                        w = wa + wb
                    target[k] = pnm.position[w]
            self._cache[key] = (valid, target)
        return self._cache[key]

    def split_map(self, n, m):
        """For each path of length n+m, the indices of its length-n prefix and length-m suffix."""
        key = ("split", n, m)
        if key not in self._cache:
            valid, target = self.concat_map(n, m)
            dm = self.paths[m].dim
            pairs = np.flatnonzero(valid)
            order = np.argsort(target[pairs])
            pairs = pairs[order]
            self._cache[key] = (pairs // dm, pairs % dm)
        return self._cache[key]

    def tensor_paths(self, x, y, n, m):
        """Internal tensor product in path coordinates.

        ``x`` has ``dim E^n`` rows and ``y`` has ``dim E^m`` rows; both may
        carry several columns, in which case the result has one column per
        pair (column of x slowest).
        """
        x = linalg.cmatrix(x)
        y = linalg.cmatrix(y)
        valid, target = self.concat_map(n, m)
        k = np.kron(x, y)
        out = np.zeros((self.paths[n + m].dim, k.shape[1]), dtype=np.complex128)
        out[target[valid]] = k[valid]
        return out

    def product_tensor(self, n, m):
        """Structure tensor G[r, a, b] = <J_{n+m} e_r, J_n e_a (x) J_m e_b>.

        Contracting with a fiber vector zeta of X(n) gives the level block
        ``sum_a zeta_a G[:, a, :]`` of the shift S_n(zeta) from X(m) to X(n+m).
        """
        key = ("G", n, m)
        if key not in self._cache:
            full = self.tensor_paths(self.J[n], self.J[m], n, m)
            g = linalg.adjoint(self.J[n + m]) @ full
            dn, dm = self.J[n].shape[1], self.J[m].shape[1]
            self._cache[key] = g.reshape(self.J[n + m].shape[1], dn, dm)
        return self._cache[key]

    def tensor_fibers(self, zeta, eta, n, m):
        """p_{n+m}(zeta (x) eta) expressed in the X(n+m) basis."""
        g = self.product_tensor(n, m)
        return np.einsum("rab,a,b->r", g, np.asarray(zeta, dtype=complex),
                         np.asarray(eta, dtype=complex))

    def fiber_vector_from_paths(self, n, v):
        """Coordinates in X(n) of p_n applied to a path-space vector."""
        return linalg.adjoint(self.J[n]) @ np.asarray(v, dtype=complex)

    def word_vector(self, word):
        """Path-space vector of a word of E-basis labels, e.g. ``("e1", "e2")``."""
        n = len(word)
        idx = tuple(self.E.index(w) for w in word)
        v = np.zeros(self.paths[n].dim, dtype=complex)
        if idx in self.paths[n].position:
            v[self.paths[n].position[idx]] = 1.0
        return v

    def fiber_basis_vector(self, n, i):
        v = np.zeros(self.fiber_dims[n], dtype=complex)
        v[i] = 1.0
        return v

    def __repr__(self):
        return f"SubproductSystem({self.label}, q={self.q}, N={self.N}, dims={self.fiber_dims})"


# -- builders ---------------------------------------------------------------


def _letters(d):
    return [f"e{i + 1}" for i in range(d)]


def _single_vertex(labels):
    k = len(labels)
    return GradedCorrespondence(1, tuple(labels), (0,) * k, (0,) * k)


def _word_label(E, word):
    return "".join(E.labels[e] for e in word)


def build_product(d, N):
    """Product system X(n) = (C^d)^{(x)n}."""
    if d < 1:
        raise ValueError("d must be at least 1")
    E = _single_vertex(_letters(d))
    J = [np.eye(d ** n, dtype=complex) for n in range(N + 1)]
    labels = [["1"]] + [[_word_label(E, w) for w in itertools.product(range(d), repeat=n)]
                        for n in range(1, N + 1)]
    return SubproductSystem(E, N, J, "product", labels, {"d": d})


def symmetrizer(d, n):
    """(1/n!) sum over permutations of the tensor factors of (C^d)^{(x)n}.

    Built entrywise: two words are related by a permutation iff they have
    the same letter multiset, and the number of such permutations is the
    stabilizer size, so each entry is 1/|orbit|.
    """
    words = list(itertools.product(range(d), repeat=n))
    keys = [tuple(sorted(w)) for w in words]
    orbit = {}
    for k in keys:
        orbit[k] = orbit.get(k, 0) + 1
    s = np.zeros((len(words), len(words)), dtype=complex)
    by_key = {}
    for i, k in enumerate(keys):
        by_key.setdefault(k, []).append(i)
    for k, idx in by_key.items():
        s[np.ix_(idx, idx)] = 1.0 / orbit[k]
    return s


def _symmetric_basis(d, n):
    words = list(itertools.product(range(d), repeat=n))
    groups = {}
    for i, w in enumerate(words):
        groups.setdefault(tuple(sorted(w)), []).append(i)
    keys = sorted(groups)
    J = np.zeros((len(words), len(keys)), dtype=complex)
    for c, k in enumerate(keys):
        idx = groups[k]
        J[idx, c] = 1.0 / math.sqrt(len(idx))
    return J, keys


def build_symmetric(d, N):
    """Symmetric subproduct system SSP_d.

    X(n) is the range of the symmetrizer; the basis used is the normalized
    orbit sums, labeled by the sorted word (``"e1e1e2"``).
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    E = _single_vertex(_letters(d))
    J = [np.eye(1, dtype=complex)]
    labels = [["1"]]
    for n in range(1, N + 1):
        jn, keys = _symmetric_basis(d, n)
        J.append(jn)
        labels.append([_word_label(E, k) for k in keys])
    return SubproductSystem(E, N, J, "symmetric", labels, {"d": d})


def _parse_forbidden(forbidden, d):
    words = []
    for f in forbidden:
        if isinstance(f, str):
            w = tuple(int(c) for c in f)
        else:
            w = tuple(int(c) for c in f)
        if not w:
            raise ValueError("forbidden words must be nonempty")
        if any(c < 0 or c >= d for c in w):
            raise ValueError(f"forbidden word {f!r} uses a letter outside 0..{d - 1}")
        words.append(w)
    return words


def allowed_words(d, forbidden, n):
    """All words of length n over 0..d-1 avoiding every forbidden factor (brute force)."""
    forb = _parse_forbidden(forbidden, d)
    out = []
    for w in itertools.product(range(d), repeat=n):
        ok = True
        for f in forb:
            L = len(f)
            if any(w[i:i + L] == f for i in range(n - L + 1)):
                ok = False
                break
        if ok:
            out.append(w)
    return out


def build_subshift(d, forbidden, N):
    """Subshift system: X(n) is spanned by the allowed words of length n.

    Letters are written 0..d-1 in forbidden words and labeled e1..ed.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    forbidden = list(forbidden)
    forb = _parse_forbidden(forbidden, d)
    letters = [c for c in range(d) if (c,) not in forb]
    if not letters:
        raise FaithfulnessError("no allowed word of length 1")
    E = _single_vertex([f"e{c + 1}" for c in letters])
    J = [np.eye(1, dtype=complex)]
    labels = [["1"]]
    for n in range(1, N + 1):
        words = allowed_words(d, forbidden, n)
        if not words:
            raise FaithfulnessError(f"the language has no allowed word of length {n}; "
                                    f"X({n}) would be zero")
        # letters of E are re-indexed when single letters are forbidden
        pos = {c: i for i, c in enumerate(letters)}
        paths = [tuple(pos[c] for c in w) for w in words]
        jn = np.zeros((len(letters) ** n, len(words)), dtype=complex)
        for c, p in enumerate(paths):
            idx = 0
            for e in p:
                idx = idx * len(letters) + e
            jn[idx, c] = 1.0
        J.append(jn)
        labels.append(["".join(f"e{c + 1}" for c in w) for w in words])
    return SubproductSystem(E, N, J, "subshift", labels,
                            {"d": d, "forbidden": ["".join(map(str, f)) for f in forb]})


def support_powers(P, N):
    """Boolean supports of P^1..P^N computed with boolean matrix products."""
    A = np.asarray(P) > 0
    out = [np.eye(A.shape[0], dtype=bool), A.copy()]
    for _ in range(2, N + 1):
        out.append((out[-1].astype(int) @ A.astype(int)) > 0)
    return out


@dataclass(frozen=True)
class QuiverData:
    P: np.ndarray
    powers: tuple
    support_powers: tuple

    @classmethod
    def from_matrix(cls, P, N):
        P = np.asarray(P, dtype=float)
        check_quiver_matrix(P)
        powers = [np.eye(P.shape[0])]
        for _ in range(N):
            powers.append(powers[-1] @ P)
        return cls(P, tuple(powers), tuple(support_powers(P, N)))


def check_quiver_matrix(P):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("P must be a square matrix")
    if not np.all(np.isfinite(P)):
        raise ValueError("P must have finite entries")
    if np.any(P < 0):
        raise ValueError("P must be entrywise nonnegative")
    for j in range(P.shape[1]):
        if not np.any(P[:, j] > 0):
            raise FaithfulnessError(
                f"column {j + 1} of P is zero, so the correspondence is not faithful")


def build_quiver(P, N):
    """Subproduct system of a nonnegative matrix P (quiver fibers Y(n)).

    E has basis f_ij for every edge with P[j, i] > 0, the edge running from
    vertex j to vertex i; f_ij has left vertex i and right vertex j.  X(n)
    has basis f_ij for supp(P^n)[j, i] and J_n sends f_ij to the
    normalized sum over paths i = t0 -> ... -> tn = j weighted by
    sqrt(prod_s P[t_{s+1}, t_s]).
    """
    data = QuiverData.from_matrix(P, N)
    P = data.P
    d = P.shape[0]
    edges = [(i, j) for i in range(d) for j in range(d) if P[j, i] > 0]
    E = GradedCorrespondence(d, tuple(f"f{i + 1}{j + 1}" for i, j in edges),
                             tuple(i for i, _ in edges), tuple(j for _, j in edges))
    sys_paths = _path_spaces(E, N)
    J = [np.eye(d, dtype=complex), np.eye(len(edges), dtype=complex)]
    labels = [[f"f{v + 1}" for v in range(d)], list(E.labels)]
    for n in range(2, N + 1):
        ps = sys_paths[n]
        # half log-weights, shifted per column below so tiny entries of P cannot underflow
        logw = np.array([0.5 * math.fsum(math.log(P[E.right[e], E.left[e]]) for e in w)
                         for w in ps.words])
        supp = data.support_powers[n]
        cols, labs = [], []
        for i in range(d):
            for j in range(d):
                if not supp[j, i]:
                    continue
                mask = (ps.start == i) & (ps.end == j)
                col = np.where(mask, np.exp(logw - logw[mask].max()), 0.0)
                col = col / np.linalg.norm(col)
                cols.append(col)
                labs.append(f"f{i + 1}{j + 1}")
        J.append(np.array(cols, dtype=complex).T)
        labels.append(labs)
    return SubproductSystem(E, N, J, "quiver", labels, {"P": P.tolist()})


def quiver_data(system):
    if system.label != "quiver":
        raise ValueError("not a quiver system")
    return QuiverData.from_matrix(system.params["P"], system.N)


# -- validation -------------------------------------------------------------


@dataclass
class ValidationReport:
    subproduct_residual: float
    isometry_residual: float
    worst_pair: tuple
    failures: list
    faithful: bool
    passed: bool

    def to_dict(self):
        return {
            "subproduct_residual": self.subproduct_residual,
            "isometry_residual": self.isometry_residual,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "failures": [list(f) for f in self.failures],
            "faithful": self.faithful,
            "passed": self.passed,
        }


def subproduct_residual(system, n, m):
    """|(p_n (x) p_m) p_{n+m} - p_{n+m}| on E^{(x)(n+m)}."""
    pn, pm, pnm = system.projection(n), system.projection(m), system.projection(n + m)
    a, b = system.split_map(n, m)
    pp = pn[np.ix_(a, a)] * pm[np.ix_(b, b)]
    return linalg.op_norm(pp @ pnm - pnm)


def validate_system(system, tol=1e-10):
    worst, worst_pair, failures = 0.0, None, []
    for n in range(1, system.N):
        for m in range(1, system.N - n + 1):
            r = subproduct_residual(system, n, m)
            if r > worst:
                worst, worst_pair = r, (n, m)
            if r > tol:
                failures.append((n, m, r))
    iso = max(linalg.isometry_defect(j) for j in system.J)
    faithful = all(set(f.left) == set(range(system.q)) for f in system.fibers[1:])
    passed = worst <= tol and iso <= tol and faithful
    return ValidationReport(worst, iso, worst_pair, failures, faithful, passed)


# -- description schema -----------------------------------------------------

SYSTEM_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["product", "symmetric", "subshift", "quiver"]},
        "d": {"type": "integer", "minimum": 1},
        "N": {"type": "integer", "minimum": 1},
        "forbidden": {"type": "array", "items": {"type": "string"}},
        "P": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
    },
    "required": ["kind"],
    "additionalProperties": False,
}


def default_level(desc):
    kind = desc["kind"]
    if kind == "quiver":
        return DEFAULT_LEVELS["quiver"]
    d = desc.get("d", 2)
    return 8 if d <= 2 else 6


def build_system(desc):
    """Build a system from a description dict (see ``SYSTEM_SCHEMA``)."""
    jsonschema.validate(desc, SYSTEM_SCHEMA)
    kind = desc["kind"]
    N = desc.get("N") or default_level(desc)
    if kind == "quiver":
        if "P" not in desc:
            raise ValueError("a quiver description needs P")
        return build_quiver(desc["P"], N)
    if "d" not in desc:
        raise ValueError(f"a {kind} description needs d")
    d = desc["d"]
    if kind == "product":
        return build_product(d, N)
    if kind == "symmetric":
        return build_symmetric(d, N)
    return build_subshift(d, desc.get("forbidden", []), N)
