# %% [markdown]
# # Shifts on a symmetric Fock space and decay into the compact-type ideal
#
# Build the symmetric system over C^2, look at the creation-type shifts,
# and watch how commutators die off level by level while the unit does not.

# %%
import numpy as np

from subproduct_lab import fock, ideal, systems

X = systems.build_symmetric(2, 8)
print(X)
F = fock.TruncatedFock(X)

# %% [markdown]
# Shifts commute up to the projection onto symmetric tensors, so
# S1(e1) S1(e2) = S1(e2) S1(e1) on every column that survives truncation.

# %%
a, b = F.basis_shift(1, 0), F.basis_shift(1, 1)
diff = a @ b - b @ a
print("exact columns:", diff.exact_levels())
print("max |[S1(e1), S1(e2)]| entry:", np.max(np.abs(diff.to_dense())))

# %%
C = fock.commutator(a, b.adj())
scan = ideal.decay_scan(C, op="[S1(e1), S1(e2)*]")
for n, v, exact in scan.norms:
    print(f"n={n}  |C Q_n| = {v:.5f}  {'exact' if exact else 'truncated'}")
print("verdict:", scan.verdict, "fitted exponent:", round(scan.rate_estimate, 3))

# %%
unit = F.identity()
print("identity:", ideal.decay_scan(unit).verdict)

# %% [markdown]
# The seminorm estimate of a diagonal symbol operator against the supremum
# of its symbol over the unit sphere of C^2.

# %%
for coeffs in ([1, 0, 0], [1, -1, 0], [1, 1, -1], [2, 0.5, 0]):
    rep = ideal.sphere_compare(2, coeffs, 8, samples=500, seed=1, n_star=7, system=X)
    print(coeffs, "estimate", round(rep.estimate, 4), "sphere sup", round(rep.sphere_sup, 4))
