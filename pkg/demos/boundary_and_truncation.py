"""Why the first adaptive step needs a modified estimator.

The closed-form homodyne MLE is the angle whose quadrature variance equals
the sample second moment. When the second moment overshoots the largest
possible variance there is no interior solution and the estimate sticks to
the boundary. The stationary-point probability says how often that
happens, and the truncated estimator shows one way around it.
"""
import numpy as np

from squeezed_phase import (
    SqueezedProbe,
    averaged_nonstationary_prob,
    mle_homodyne_closed_form,
    mle_homodyne_truncated,
    nonstationary_prob,
    optimal_phase,
    sample_homodyne,
)

r = 1.0
print("probability of no interior maximum, by true phase (setting at theta_opt)")
grid = np.linspace(0.05, np.pi / 2 - 0.02, 8)
for nu in (10, 100, 3705):
    row = " ".join(f"{float(nonstationary_prob(t, r, nu)):.3f}" for t in grid)
    print(f"  nu {nu:5d}: {row}")

print("\naveraged over a uniform first setting")
for nu in (1, 10, 100, 1000, 3705):
    print(f"  nu {nu:5d}: {averaged_nonstationary_prob(r, nu):.4f}")

# a phase close to pi/2 pushes plenty of samples over the edge
probe = SqueezedProbe(r)
gen = np.random.default_rng(3)
theta = 1.5
stuck = 0
for _ in range(200):
    batch = sample_homodyne(probe, theta, optimal_phase(r), 50, gen)
    plain = mle_homodyne_closed_form(batch, r, optimal_phase(r))
    # the upper boundary pi/2 is the same point as 0 on this period
    if not plain.stationary:
        trunc = mle_homodyne_truncated(batch, r, optimal_phase(r))
        stuck += 1
        if stuck <= 3:
            print(f"\nboundary hit: plain {plain.estimate:.4f}, truncated {trunc.estimate:.4f} "
                  f"after dropping {trunc.discarded} outcomes (true {theta})")
print(f"\n{stuck}/200 batches of 50 had no interior maximum at theta = {theta} "
      f"(predicted {float(nonstationary_prob(theta, r, 50)):.3f})")
