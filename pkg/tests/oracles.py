"""Independent brute-force constructions used as test oracles.

Nothing here touches the package internals beyond plain parameter
containers; every operator is rebuilt from explicit Kronecker products on
the full (auxiliary x chain) space.
"""
import itertools

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def swap(i, j, n):
    """Permutation matrix exchanging tensor factors ``i`` and ``j`` (0-based) of n qubits."""
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    for bits in itertools.product((0, 1), repeat=n):
        b = list(bits)
        b[i], b[j] = b[j], b[i]
        src = int("".join(map(str, bits)), 2)
        dst = int("".join(map(str, b)), 2)
        out[dst, src] = 1.0
    return out


def on_factor(a, i, n):
    mats = [np.eye(2, dtype=complex)] * n
    mats = list(mats)
    mats[i] = np.asarray(a, dtype=complex)
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def r_full(u, eta, i, j, n):
    return u * np.eye(2 ** n, dtype=complex) + eta * swap(i, j, n)


def sigma_dot(h):
    return h[0] * SX + h[1] * SY + h[2] * SZ


def monodromies_full(u, theta, eta):
    """T and That on the (1 + N)-qubit space, auxiliary space is factor 0."""
    n = len(theta)
    tot = n + 1
    t = np.eye(2 ** tot, dtype=complex)
    for i in range(n, 0, -1):  # R_{0N} ... R_{01}
        t = t @ r_full(u - theta[i - 1], eta, 0, i, tot)
    that = np.eye(2 ** tot, dtype=complex)
    for i in range(1, n + 1):  # R_{10} ... R_{N0}
        that = that @ r_full(u + theta[i - 1], eta, i, 0, tot)
    return t, that


def blocks(m, n_sites):
    d = 2 ** n_sites
    return np.array([[m[a * d:(a + 1) * d, b * d:(b + 1) * d] for b in range(2)] for a in range(2)])


def transfer_full(u, theta, eta, xi, xibar, h1, h2):
    n = len(theta)
    t, that = monodromies_full(u, theta, eta)
    km = on_factor(xi * np.eye(2) + u * sigma_dot(h1), 0, n + 1)
    kp = on_factor(xibar * np.eye(2) + (u + eta) * sigma_dot(h2), 0, n + 1)
    m = blocks(kp @ t @ km @ that, n)
    return m[0, 0] + m[1, 1]


def n1_energies(theta, xi, xi1, h21_sq):
    """The two closed-form N = 1 eigenvalues of H_1."""
    t = theta
    a = 2 * t * (xi * xi1 + t - xi ** 2 / t)
    s = 2 * t * np.sqrt(t ** 2 * xi1 ** 2 + (xi ** 2 - t ** 2) * t ** 2 * h21_sq + 0j)
    return np.array([a + s, a - s])


def pauli_eigs(m):
    """Eigenvalues of a 2x2 matrix through its a id + b.sigma decomposition."""
    a = np.trace(m) / 2
    b = np.array([np.trace(m @ s) / 2 for s in (SX, SY, SZ)])
    r = np.sqrt(b @ b + 0j)
    return np.array([a + r, a - r])


def n1_gaudin_root_squares(theta, xi, xi1, h21_sq):
    """Roots in x = lambda^2 of the N = 1 Gaudin equation with denominators cleared.

    (h21_sq / 2) (x - t^2)^2 - 2 (1 - xi1)(x - t^2) + 2 (x - xi^2) = 0.
    """
    t2 = theta ** 2
    c2 = h21_sq / 2
    c1 = -2 * c2 * t2 - 2 * (1 - xi1) + 2
    c0 = c2 * t2 ** 2 + 2 * (1 - xi1) * t2 - 2 * xi ** 2
    return np.roots([c2, c1, c0])


def match_sets(a, b):
    """Max relative distance between two equal-size multisets after optimal pairing."""
    from scipy.optimize import linear_sum_assignment
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    cost = np.abs(a[:, None] - b[None, :]) / np.maximum(np.abs(b)[None, :], 1e-300)
    r, c = linear_sum_assignment(cost)
    return float(np.max(cost[r, c]))
