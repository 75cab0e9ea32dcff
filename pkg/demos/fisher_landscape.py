"""How much phase information a squeezed vacuum probe carries, and where.

Homodyne detection only reaches the quantum Fisher information at one
angle. This walks through that peak, the price of loss, and what a
jittery local oscillator does to it.
"""
import numpy as np

from squeezed_phase import (
    conditional_fisher_lo_noise,
    fisher_heterodyne,
    fisher_homodyne,
    fisher_homodyne_lossy_max,
    optimal_phase,
    qfi_lossy,
    qfi_squeezed_vacuum,
)

r = 1.01
fq = qfi_squeezed_vacuum(r)
t_opt = optimal_phase(r)
print(f"r = {r}: QFI {fq:.4f}, homodyne peak at theta_opt = {t_opt:.6f} rad")

# the homodyne curve touches the QFI once and collapses near pi/2
for theta in np.linspace(0, np.pi / 2, 9, endpoint=False):
    f = float(fisher_homodyne(r, theta))
    print(f"  theta {theta:.3f}  F_X {f:9.4f}  F_X/F_Q {f / fq:.4f}")

print(f"heterodyne gives {fisher_heterodyne(r):.4f} at every angle, "
      f"a factor {fq / fisher_heterodyne(r):.3f} below the QFI")

print("\nloss: best homodyne information vs the lossy QFI")
for t in (1.0, 0.99, 0.95, 0.9, 0.8):
    print(f"  T {t:4.2f}  F_Q^T/F_Q {qfi_lossy(r, t) / fq:.4f}  F_X^T/F_Q {fisher_homodyne_lossy_max(r, t) / fq:.4f}")

print("\nlocal-oscillator jitter (Gaussian, std sigma) at the optimal angle")
for s in (0.0, 0.01, 0.05, 0.1, 0.15, 0.3):
    print(f"  sigma {s:4.2f}  F/F_Q {conditional_fisher_lo_noise(r, s) / fq:.4f}")
