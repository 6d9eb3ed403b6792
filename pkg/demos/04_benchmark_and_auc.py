# %% [markdown]
# # A small benchmark and its anytime performance
#
# The runner expands a config into cells, writes one JSONL log per cell and
# the perf module turns logs into EAF-based ECDF curves and AUC values.

# %%
import tempfile

from ppfes import experiment as ex
from ppfes import perf

out = tempfile.mkdtemp()
cfg = ex.ExperimentConfig(
    algorithms=["one-plus-one", "cma"],
    distributions=["gaussian", "cauchy"],
    modes=["plain"],
    functions=["sphere", "rastrigin"],
    dims=[5],
    instances=5,
    budget="2000n",
    output_dir=out,
).validate()
paths = ex.cmd_run(cfg)
logs = perf.read_logs(paths)
print(len(paths), "cells,", len(logs), "runs")

# %%
for row in perf.aggregate(logs, ["algorithm", "distribution", "function_id"]):
    print(row)

# %% [markdown]
# The whole curve, not just its area, for one cell.

# %%
curves = perf.curves([l for l in logs if l.header["function_id"] == "sphere"], points=8)
for row in perf.curve_rows(curves, ["algorithm", "distribution"])[:16]:
    print(row)

# %% [markdown]
# The same study from the command line:
#
#     python -m ppfes run --config study.ini
#     python -m ppfes figure ecdf --input runs --output-dir figs
