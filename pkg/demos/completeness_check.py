"""
Are the Bethe states complete?

Draw random inhomogeneities and boundary data for N = 3, find every
solution of the Gaudin Bethe equations (multistart Newton, completed by
monodromy loops when it falls short), and match the resulting energy
tuples (E_1, E_2, E_3) against the joint spectrum of the three commuting
Hamiltonians.  Then repeat with parallel
boundary fields, where some roots sit at infinity.
"""
import time

import numpy as np

from odba_gaudin import (GaudinBoundary, gaudin_bethe_spectrum, gaudin_exact_spectrum, match_spectra,
                         random_theta)

rng = np.random.default_rng(11)
theta = random_theta(3, rng)
print("theta =", np.round(theta, 4))

for parallel in (False, True):
    g = GaudinBoundary.random(rng, parallel=parallel)
    t0 = time.perf_counter()
    bethe = gaudin_bethe_spectrum(theta, g)
    exact = gaudin_exact_spectrum(theta, g)
    rep = match_spectra(bethe, exact, tol=1e-8)
    label = "parallel" if parallel else "generic"
    print(f"\n{label}: {rep.matched}/{rep.total} states matched, "
          f"max rel. error {rep.max_error:.1e}, {time.perf_counter() - t0:.1f}s")
    for r, _ in bethe:
        print("   finite roots:", np.round(r.lam, 4), " at infinity:", r.n_infinite)
