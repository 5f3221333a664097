"""
Discrete dichotomy without a continuous one
===========================================

With ``A = 0`` and a diagonal ``B(t)`` whose stable entry integrates to
zero over half an interval, the one-step maps ``H(n)`` split cleanly into a
contracting and an expanding direction, yet inside each interval the
stable component climbs back to one.  This script builds the reduced
system, certifies its dichotomy and measures how a continuous-time bound
behaves on two window sizes.
"""

import numpy as np

from depcag import experiments as ex
from depcag.dynamics import interval_states

cfg = ex.load_example("counterexample-5.1")
run = ex.solve(cfg)

# One-step maps: constant and diagonal.
print("H(0) =", np.round(run.red.H_at(0).real, 8).tolist())
print("certificate: K = %.6g, rho = %.6g" % (run.cert.K, run.cert.rho))

# The interval operator along the stable direction, sampled on J_0.
ts = np.linspace(0.0, 1.0, 9)
Z = interval_states(run.sys, 0, ts, 1e-12)["Z"]
for t, z in zip(ts, Z):
    print("  t = %.3f   Z_0(t)[0, 0] = %.6f" % (t, z[0, 0].real))

# The bounded solution and its residual against the difference system.
g = run.grid
print("bounded solution on [%d, %d], recursion residual %.2e" % (g.n_lo, g.n_hi, g.residual))

# Required constants for a continuous bound with alpha = 0.05.
rep = ex.falsifier(cfg, run)
for c in rep.candidates:
    if c.label in ("rank0", "rank2", "certificate") or c.growth < 2:
        print("  %-26s M(T) = %-12.6g M(2T) = %-12.6g growth %.3g"
              % (c.label, c.M_short, c.M_long, c.growth))
print("candidates rejected: %d of %d" % (len(rep.rejected), len(rep.candidates)))
