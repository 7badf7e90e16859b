"""
One-site Gaudin magnet with non-parallel boundary fields.

For a single site the two Bethe solutions can be checked against the
2x2 Hamiltonian directly: H_1 = a + b.sigma, so its eigenvalues are
a +- sqrt(b.b). We solve the Bethe equation, compute E_1 from each root
and compare.
"""
import numpy as np

from odba_gaudin import GaudinBoundary, gaudin_bethe_spectrum, hamiltonian

rng = np.random.default_rng(3)
g = GaudinBoundary.random(rng)
theta = (0.9 + 0.1j,)

print("xi =", g.xi, " xi1 =", g.xi1, " |h21|^2 =", round(g.h21_sq, 4))

for roots, energies in gaudin_bethe_spectrum(theta, g):
    print("lambda =", np.round(roots.lam, 6), " E_1 =", np.round(energies[0], 10))

h = hamiltonian(1, theta, g)
print("eigvals(H_1) =", np.round(np.linalg.eigvals(h), 10))

# closed form: 2t(xi xi1 + t - xi^2/t) +- 2t sqrt(t^2 xi1^2 + (xi^2 - t^2) t^2 |h21|^2)
t = theta[0]
a = 2 * t * (g.xi * g.xi1 + t - g.xi ** 2 / t)
s = 2 * t * np.sqrt(t ** 2 * g.xi1 ** 2 + (g.xi ** 2 - t ** 2) * t ** 2 * g.h21_sq)
print("closed form   =", np.round([a + s, a - s], 10))
