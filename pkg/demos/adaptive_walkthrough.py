"""One adaptive run step by step, then a small campaign.

The adaptive strategy re-points the homodyne setting at its latest estimate
so every later step measures near the locally optimal angle. The combined
strategy spends its first step on heterodyne detection to learn which half
of [0, pi) the phase sits in.
"""
import numpy as np

from squeezed_phase import (
    RngStream,
    SqueezedProbe,
    StrategyConfig,
    holevo_variance,
    interior_grid,
    qfi_squeezed_vacuum,
    run_campaign,
    run_strategy,
)

probe = SqueezedProbe(1.01)
aqse = StrategyConfig("aqse_homodyne", N=3705, m=15, probe=probe, root_seed=42)
chh = StrategyConfig("chh", N=3705, m=15, probe=probe, root_seed=42)

trace = run_strategy(aqse, 0.7, RngStream(42, (0, 0)))
print("AQSE, true phase 0.7")
for i, s in enumerate(trace.steps):
    flag = "" if s.stationary else "  (boundary)"
    print(f"  step {i:2d}  setting {s.setting:.5f}  estimate {s.estimate:.5f}  dropped {s.discarded}{flag}")

trace = run_strategy(chh, 2.4, RngStream(42, (0, 0)))
print("\nCHH, true phase 2.4 (outside the homodyne period)")
for i, s in enumerate(trace.steps[:4]):
    print(f"  step {i}  {s.kind:10s} estimate {s.estimate:.5f}")
print(f"  ... final {trace.final.estimate:.5f}")

# normalized Holevo variance: 1 means the quantum Cramer-Rao bound
fq = qfi_squeezed_vacuum(probe.r)
for config, period in ((aqse, np.pi / 2), (chh, np.pi)):
    res = run_campaign(config, interior_grid(6, period), 300)
    norm = [holevo_variance(b) * config.N * fq for b in res.batches]
    print(f"\n{config.kind}: normalized variance " + " ".join(f"{v:.3f}" for v in norm))
