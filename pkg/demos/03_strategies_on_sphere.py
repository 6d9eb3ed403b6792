# %% [markdown]
# # Four evolution strategies on the sphere
#
# One run of each strategy per distribution, then a closer look at how the
# (1+1)-ES step size shrinks over a run.

# %%
import numpy as np

from ppfes import strategies as es
from ppfes.experiment import log_decay_slope, sigma_trace
from ppfes.problems import make_instance
from ppfes.sampling import MutationPipeline, substream

# %%
n = 10
for a, alg in enumerate(es.ALGORITHMS):
    line = []
    for k, kind in enumerate(("gaussian", "uniform", "cauchy")):
        obj = es.EvalBudgetedObjective(make_instance("sphere", n, 1))
        es.run(alg, MutationPipeline(kind, seed=substream(0, a, k)), obj)
        line.append(f"{kind}={obj.evals_used if obj.target_hit else 'miss'}")
    print(f"{alg:>13}", " ".join(line))

# %% [markdown]
# Mean sigma over 20 runs. After the first adaptation phase the log of sigma
# falls along a straight line; the heavier the tail, the shallower it is.

# %%
for kind in ("gaussian", "cauchy"):
    evals, sigma = sigma_trace(kind, 10, runs=20, seed=2)
    slope, r2 = log_decay_slope(evals, sigma)
    print(f"{kind:>9} slope={slope:.2e} log10(sigma)/eval R^2={r2:.4f}")

# %% [markdown]
# CMA-ES compares its evolution path length with a reference value. For
# Cauchy steps sqrt(n) is far too small and sigma shrinks too fast.

# %%
for rho in (None, np.sqrt(n)):
    hits = 0
    for r in range(10):
        obj = es.EvalBudgetedObjective(make_instance("sphere", n, r + 1))
        es.run("cma", MutationPipeline("cauchy", seed=substream(1, r)), obj, rho=rho)
        hits += obj.target_hit
    print("rho =", "default" if rho is None else f"{rho:.2f}", "successes", hits, "/ 10")
