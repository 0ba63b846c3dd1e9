# %% [markdown]
# # The linking system of C^k between M_k(C) and C
#
# Shifts on the linking Fock module are assembled twice: from corner
# formulas and as (1+k) x (1+k) matrices of shifts over the coefficient
# system.  Compressing to a corner should give back the corresponding side.

# %%
import numpy as np

from subproduct_lab import fock, morita, systems

Y = systems.build_symmetric(2, 5)
for k in (1, 2, 3):
    ctx = morita.build_context(k, Y)
    rng = np.random.default_rng(k)
    words = [morita.random_word(ctx, rng) for _ in range(10)]
    comp = morita.compression_check(ctx, words)
    print(k, [ctx.z_dim(n) for n in range(Y.N + 1)], comp.to_dict())

# %% [markdown]
# An element of the ideal on the coefficient side, sandwiched between
# off-diagonal corners, keeps decaying on the matrix side.

# %%
ctx = morita.build_context(2, Y)
F = ctx.FY
S = fock.commutator(F.basis_shift(1, 0), F.basis_shift(1, 1).adj())
rng = np.random.default_rng(3)
T1 = morita.linking_shift(ctx, morita.LinkingElement.random(ctx, 0, rng, "2")).normalized()
T2 = morita.linking_shift(ctx, morita.LinkingElement.random(ctx, 0, rng, "1")).normalized()
tr = morita.ideal_transfer_check(ctx, T1, T2, S)
for (n, v, ex), (_, b) in zip(tr.sequence, tr.bound):
    print(n, round(v, 5), "bound", round(b, 5), "exact" if ex else "")
print("violations:", tr.violations, "verdict:", tr.verdict)
