# %% [markdown]
# # Step lengths and directions of raw mutation vectors
#
# Sampling coordinates independently from a non-Gaussian law gives vectors
# whose length and direction both depend on the law. Here we measure both.

# %%
import numpy as np
from scipy import stats

from ppfes import sampling as sm
from ppfes.experiment import norm_rows

# %% [markdown]
# Mean length relative to sqrt(n) for finite-variance kinds, median length
# relative to n for Cauchy.

# %%
rows = norm_rows(["gaussian", "uniform", "laplace", "cauchy"], [2, 10, 50], samples=10**5, seed=1)
for r in rows:
    if r["statistic"] in ("mean_over_sqrt_n", "median_over_n"):
        print(f"{r['kind']:>9} n={r['n']:<3} {r['statistic']:<17} {r['value']:.4f}")

# %%
print("exact Gaussian E||z||:", [round(sm.expected_norm_gaussian(n), 4) for n in (1, 4, 10, 50)])

# %% [markdown]
# Angles to the all-ones direction in the plane. Only the Gaussian product
# is rotation invariant; swapping in a uniformly random direction restores
# isotropy for every kind while keeping the length distribution. Swapped
# directions come from their own stream, so one seed gives the same angles
# for every kind.

# %%
for mode in ("plain", "normalized", "swapped"):
    for kind in ("gaussian", "cauchy", "uniform"):
        _, freq, counts = sm.angle_to_ones_histogram(kind, 2, 10**5, 64, mode=mode, seed=3)
        p = stats.chisquare(counts).pvalue
        print(f"{mode:>10} {kind:>9} chi2 p={p:.3g} peak bin share={freq.max():.4f}")

# %%
pipe = sm.MutationPipeline("cauchy", "swapped", seed=0)
z = pipe.sample(3, 5)
print(np.round(z, 3))
