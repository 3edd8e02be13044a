"""Cramming a single instance into a small ReLU net.

A random 3-node net is asked to fit one point far off its surface. Three
extra hidden nodes fit that point exactly while every other point keeps
its old output.
"""

import numpy as np

from plm import Batch, TwoLayerNet, cram, find_cram_params

rng = np.random.default_rng(0)
net = TwoLayerNet.random(2, 3, rng, scale=1.0)
X = rng.uniform(-1, 1, size=(12, 2))
y = net(X)
y[5] += 0.8  # the outlier we want to fit

batch = Batch.from_arrays(X, y)
params = find_cram_params(batch, 5, rng)
print("direction", params.gamma, "half-gap zeta", params.zeta)

bigger = cram(net, batch, 5, params)
print("hidden nodes", net.p, "->", bigger.p)
print("new output weights", bigger.output[-3:])

before, after = net(X), bigger(X)
print("target residual", after[5] - y[5])
print("largest change elsewhere", np.max(np.abs(np.delete(after - before, 5))))
