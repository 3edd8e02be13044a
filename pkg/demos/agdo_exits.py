"""The two ways the adaptive optimizer stops.

Fitting max(x, 0) from a hinge that starts near the answer ends with
every residual inside the tolerance (exit A). Starting from a hinge
that is dead on all inputs leaves only the output bias trainable, so
the learning rate shrinks until it falls below its floor (exit U).
"""

import numpy as np

from plm import AgdoConfig, Batch, TwoLayerNet, agdo_run
from plm import network as nw

X = np.linspace(-1, 1, 8).reshape(-1, 1)
batch = Batch.from_arrays(X, np.maximum(X[:, 0], 0))
cfg = AgdoConfig(epsilon=0.01)

live = TwoLayerNet(np.array([[0.05, 1.1]]), np.array([0.1, 0.9]))
out = agdo_run(live, batch, cfg)
print("live hinge:", out.tag, "steps", out.steps, "max residual", nw.max_abs_residual(out.net, batch))

dead = TwoLayerNet(np.array([[-5.0, 1.0]]), np.array([0.0, 1.0]))
out = agdo_run(dead, batch, cfg)
print("dead hinge:", out.tag, "steps", out.steps, "final eta", out.eta)
print("  output bias", out.net.output[0], "target mean", batch.y.mean())
