"""
Quasi-periodic coefficients and epsilon-translations
====================================================

Coefficients built from two incommensurate frequencies on a jittered mesh
give a time-varying reduced system.  A dichotomy is certified along a
supplied splitting, and the bounded solution is checked for approximate
periodicity: shifts that move the mesh and the coefficients by at most
``eps`` also move the solution by a bounded multiple of ``eps``.
"""

import numpy as np

from depcag import experiments as ex

cfg = ex.load_example("quasi-periodic-linear")
run = ex.solve(cfg)
H = run.red.H
print("H(n) varies by up to %.3f across the window" % np.abs(H - H[0]).max())
print("certificate: K = %.4f, rho = %.4f" % (run.cert.K, run.cert.rho))

b = ex.bounds(run)
print("|c| = %.4f <= %.4f,  |y| = %.4f <= %.4f" % (b.c_sup, b.c_bound, b.y_sup, b.y_bound))

found, checks = ex.translations(cfg, run)
print("eps = %.2f translations:" % cfg.section("translations")["epsilon"])
for c in checks:
    print("  tau = %8.3f (p = %3d)  sup |y(t+tau) - y(t)| = %.4f  C = %.3f"
          % (c.tau, c.p, c.sup_difference, c.constant))
