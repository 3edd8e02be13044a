"""One full training run on a synthetic teacher dataset.

Prints the stage log: how many instances each stage covers, which route
fitted the new instance, and how the hidden layer grows and shrinks.
"""

import math

from plm import PlmConfig, SynthSpec, generate_synthetic, train

ds = generate_synthetic(SynthSpec(n_instances=150, n_features=3, target="teacher", noise_sd=0.02, seed=1))
cfg = PlmConfig(epsilon=0.08, seed=1, max_outer=20, inner_epochs=50, prune_max_outer=5, prune_inner_epochs=50)
report = train(ds, cfg)

print("stage    n  route           p_before p_after prunes   D_n")
for s in report.stages:
    print(f"{s.stage:5d} {s.n:4d}  {s.route:<15} {s.p_before:8d} {s.p_after:7d} {s.prunes:6d}  {s.d_n:.4f}")

print("routes (%)", report.route_frequencies)
print("acceptable", report.final_n_acceptable, "of", len(ds), "goal", math.floor(0.97 * len(ds)))
print("final hidden nodes", report.final_net.p)
