"""Test error of the trainer against linear regression and fixed-size nets.

The tolerance is twice the linear model's average training error, the
same rule the ``compare`` command uses.
"""

import numpy as np

from plm import PlmConfig, SynthSpec
from plm.experiments import DataSource, compare

source = DataSource(synth=SynthSpec(200, 5, "teacher", 0.05), train_fraction=0.6)
cfg = PlmConfig(max_outer=20, inner_epochs=50, prune_max_outer=5, prune_inner_epochs=50)
res = compare(source, n_datasets=3, cfg=cfg)

print(res.table())
for model in res.models:
    print(f"{model:<18} test MAE {np.mean(res.test_mae[model]):.4f}")
print("trainer hidden nodes", res.plm_p)
