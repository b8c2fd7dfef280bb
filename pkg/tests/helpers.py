"""Shared builders for randomized test inputs."""

import numpy as np


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_spd(rng, n, cond=1e3):
    """SPD matrix with eigenvalues log-spaced to the requested condition
    number and a Haar-ish random eigenbasis."""
    eigvals = np.exp(rng.uniform(0.0, 1.0, n) * np.log(cond))
    eigvals = eigvals / eigvals.max()
    q = random_orthogonal(rng, n)
    return (q * eigvals) @ q.T


def random_symmetric(rng, n, scale=1.0):
    m = rng.standard_normal((n, n)) * scale
    return 0.5 * (m + m.T)


def random_invertible(rng, n, max_cond=100.0):
    """Invertible matrix with bounded condition number (for congruence tests)."""
    while True:
        g = rng.standard_normal((n, n))
        if np.linalg.cond(g) <= max_cond:
            return g
