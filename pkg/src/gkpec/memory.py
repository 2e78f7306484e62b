"""Lossy bosonic line with a memory mode: n signal modes interact in
sequence with one internal mode that partially survives between uses.

Each use couples signal l to the memory on a transmissivity-kappa
beamsplitter after the memory itself decayed toward its own environment
with survival mu.  Unrolling the cascade gives a lower-triangular
input-output matrix over the n uses,

    M[l, l] = sqrt(kappa)
    M[l, j] = -(1 - kappa) sqrt(mu) (sqrt(kappa mu))^(l-1-j),   j < l,

acting identically on q and p, with every environment mode in vacuum, so
the added noise is (I - M M^t)/2 per quadrature.
"""

import numpy as np

from .gaussian import GaussianChannel


def _check_params(n, mu, kappa):
    if n < 1:
        raise ValueError("need at least one use")
    if not (0.0 <= mu <= 1.0 and 0.0 <= kappa <= 1.0):
        raise ValueError("mu and kappa must lie in [0, 1]")


def memory_matrix(n, mu, kappa):
    """The n x n cascade transfer matrix over signal uses."""
    _check_params(n, mu, kappa)
    M = np.zeros((n, n))
    root = np.sqrt(kappa * mu)
    for l in range(n):
        M[l, l] = np.sqrt(kappa)
        for j in range(l):
            M[l, j] = -(1 - kappa) * np.sqrt(mu) * root ** (l - 1 - j)
    return M


def memory_full_channel(n, mu, kappa):
    """The cascade as a 2n-quadrature GaussianChannel."""
    M = memory_matrix(n, mu, kappa)
    T = np.kron(M, np.eye(2))
    N = 0.5 * (np.eye(2 * n) - np.kron(M @ M.T, np.eye(2)))
    return GaussianChannel(T, N)


def memory_sigmas(n, mu, kappa):
    """Exact effective noise STDs of the decoupled cascade, ascending.

    Diagonalizing the cascade by singular value decomposition turns it into
    independent pure-loss channels with transmissivities s_l^2, hence
    effective STDs sqrt(1 - s_l^2).  Returns (sigmas, order) where order[i]
    is the SVD branch (0-based, strongest first) sitting at sorted slot i.
    """
    M = memory_matrix(n, mu, kappa)
    s = np.linalg.svd(M, compute_uv=False)
    sig = np.sqrt(np.maximum(1.0 - s ** 2, 0.0))
    order = np.argsort(sig, kind="stable")
    return sig[order], [int(k) for k in order]


def memory_sigmas_asymptotic(n, mu, kappa):
    """Long-line symbol estimate of the effective STDs, ascending.

    Evaluates the cascade symbol at phases pi l / n, l = 1..n.  Useful as a
    large-n guide; it does not reproduce the exact finite-n values (not even
    the trivial n = 1 case) and is kept separate for that reason.
    """
    _check_params(n, mu, kappa)
    ls = np.arange(1, n + 1)
    z = np.exp(1j * np.pi * ls / n)
    tau = np.abs((np.sqrt(mu) - np.sqrt(kappa) * z)
                 / (1.0 - np.sqrt(kappa * mu) * z)) ** 2
    sig = np.sqrt(np.maximum(1.0 - tau, 0.0))
    order = np.argsort(sig, kind="stable")
    return sig[order], [int(l) for l in ls[order]]


def usable_modes(sigmas, threshold):
    """Indices of modes clean enough to help a code (sigma < threshold)."""
    sigmas = np.asarray(sigmas, dtype=float)
    return [int(i) for i in np.nonzero(sigmas < threshold)[0]]
