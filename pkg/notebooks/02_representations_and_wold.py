# %% [markdown]
# # Representations of a quiver system and their Wold splitting
#
# The matrix P = [[1, 1], [1, 0]] gives a two-vertex system with Fibonacci
# growth.  We pair its Fock representation with a one-dimension-per-vertex
# coisometric representation, hide the splitting with a random unitary, and
# recover it.

# %%
import numpy as np

from subproduct_lab import linalg, reps, systems

X = systems.build_quiver([[1, 1], [1, 0]], 6)
print(X, X.E.labels)

# %%
fr = reps.fock_rep(X)
co = reps.quiver_coisometric_rep(X)
for name, r in (("fock", fr), ("coisometric", co)):
    cls = reps.classify(r)
    print(f"{name:12s} pure={cls.pure} fully_coisometric={cls.fully_coisometric} essential={cls.essential}")

# %%
both = reps.direct_sum(fr, co)
rng = np.random.default_rng(0)
U = np.zeros((both.dim, both.dim), dtype=complex)
for v in range(X.q):
    idx = np.flatnonzero(both.vertex == v)
    U[np.ix_(idx, idx)] = linalg.random_unitary(len(idx), rng)
hidden = reps.CovariantRep(X, both.vertex, [U @ t @ U.conj().T for t in both.T1])

split = reps.wold_decompose(hidden)
e = np.eye(both.dim)
print("induced dim", split.induced_subspace.shape[1], "coisometric dim", split.coisometric_subspace.shape[1])
print("angle to the true induced part:", linalg.subspace_distance(split.induced_subspace, U @ e[:, :fr.dim]))
print({k: float(f"{v:.2e}") for k, v in split.residuals.items()})
