# %% [markdown]
# # Six mutation distributions through one quantile function
#
# Every mutation vector in this package starts as open-interval uniform
# deviates pushed through a percent point function. This notebook checks the
# kernels by eye: quantiles, the inverse relation to the CDF, and the
# closed-form entropies.

# %%
import numpy as np

from ppfes import distributions as dists

p = np.array([0.01, 0.25, 0.5, 0.6, 0.75, 0.99])
for d in dists.ALL:
    print(f"{d.name:>9}", np.round(dists.ppf(d, p), 5))

# %% [markdown]
# The CDF undoes the PPF to machine precision, including deep in the tails.

# %%
grid = np.linspace(1e-6, 1 - 1e-6, 10**4)
for d in dists.ALL:
    err = np.abs(dists.cdf(d, dists.ppf(d, grid)) - grid).max()
    print(f"{d.name:>9} max |cdf(ppf(p)) - p| = {err:.1e}")

# %% [markdown]
# Differential entropy and moments. Cauchy is the only kind without a
# finite variance, which is why it needs its own normalizer for
# path-length based step-size control.

# %%
for d in dists.ALL:
    m = dists.moments(d)
    print(f"{d.name:>9} H={dists.entropy(d):.4f} var={m.variance:.4f} finite={d.finite_variance}")

# %%
for n in (2, 10, 50):
    print(n, {d.name: round(dists.norm_normalizer(d, n), 3) for d in dists.ALL})
