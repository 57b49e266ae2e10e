"""Shared generators for the test suite."""

import numpy as np

from ttgda.quadratic import QuadraticGame


def random_spd(rng, n, lo=0.5, hi=2.0):
    """SPD matrix with eigenvalues drawn uniformly from [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (q * rng.uniform(lo, hi, size=n)) @ q.T


def random_psd(rng, n, rank=None, lo=0.5, hi=2.0):
    """PSD matrix of the given rank (full rank by default)."""
    if rank is None:
        rank = n
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = np.zeros(n)
    eig[:rank] = rng.uniform(lo, hi, size=rank)
    return (q * eig) @ q.T


def random_game(rng, n, m, eta, p_scale=1.0, lo=0.5, hi=2.0):
    """Random SPD-block game with P entries scaled by p_scale."""
    return QuadraticGame(
        Q=random_spd(rng, n, lo, hi),
        R=random_spd(rng, m, lo, hi),
        P=p_scale * rng.standard_normal((n, m)),
        eta=eta,
    )
