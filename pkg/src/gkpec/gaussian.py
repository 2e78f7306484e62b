"""Gaussian channel core: (T, N, d) triples on n modes.

Quadrature ordering is (q1, p1, ..., qn, pn) and the vacuum variance is 1/2
per quadrature.  A channel maps mean and covariance as

    xbar -> T xbar + d,      V -> T V T^t + N.

Unit conversions used by the constructors (all in quadrature-variance units,
vacuum = 1/2):

    loss  eta, N_B   ->  T = sqrt(eta) I,  N = (N_B + (1-eta)/2) I
    amp   G,   N_B   ->  T = sqrt(G) I,    N = (N_B + (G-1)/2) I
    AWGN  sigma^2    ->  T = I,            N = sigma^2 I

so that loss(eta, N_B) composed after amp(1/eta, 0) is AWGN with
sigma^2 = N_B + 1 - eta, and quantum-limited channels preserve the vacuum.
"""

import numpy as np

SYMPLECTIC_TOL = 1e-10
PSD_FLOOR = -1e-9


def omega(n):
    """Symplectic form for n modes in (q1,p1,...,qn,pn) ordering."""
    o = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n), o)


def is_symplectic(S, tol=SYMPLECTIC_TOL):
    n = S.shape[0] // 2
    return np.max(np.abs(S @ omega(n) @ S.T - omega(n))) <= tol


class GaussianChannel:
    """Immutable Gaussian channel with transfer T, noise N, displacement d."""

    def __init__(self, T, N, d=None):
        T = np.asarray(T, dtype=float)
        N = np.asarray(N, dtype=float)
        if T.shape != N.shape or T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("T and N must be equal square matrices")
        if T.shape[0] % 2:
            raise ValueError("matrices must be 2n x 2n")
        if np.max(np.abs(N - N.T)) > 1e-9:
            raise ValueError("N must be symmetric")
        self.n = T.shape[0] // 2
        self.T = T.copy()
        self.N = 0.5 * (N + N.T)
        self.d = np.zeros(2 * self.n) if d is None else np.asarray(d, dtype=float).copy()
        if self.d.shape != (2 * self.n,):
            raise ValueError("d has wrong length")
        self.T.flags.writeable = False
        self.N.flags.writeable = False
        self.d.flags.writeable = False

    def cp_defect(self):
        """Most negative eigenvalue of N + (i/2)(Omega - T Omega T^t).

        Zero for every completely positive channel in the vacuum = 1/2
        units used throughout.
        """
        om = omega(self.n)
        m = self.N + 0.5j * (om - self.T @ om @ self.T.T)
        w = np.linalg.eigvalsh(m)
        return float(min(w.min(), 0.0))

    def is_cp(self, tol=-PSD_FLOOR):
        return self.cp_defect() >= -tol

    def to_json_dict(self):
        return {"n": self.n, "T": self.T.tolist(), "N": self.N.tolist(),
                "d": self.d.tolist()}

    @classmethod
    def from_json_dict(cls, obj):
        d = obj.get("d")
        c = cls(np.array(obj["T"]), np.array(obj["N"]),
                None if d is None else np.array(d))
        if "n" in obj and c.n != obj["n"]:
            raise ValueError("mode count does not match matrix size")
        return c


def identity_channel(n):
    return GaussianChannel(np.eye(2 * n), np.zeros((2 * n, 2 * n)))


def compose(a, b):
    """Channel running b first, then a (i.e. a after b)."""
    if a.n != b.n:
        raise ValueError("mode counts differ")
    return GaussianChannel(a.T @ b.T, a.T @ b.N @ a.T.T + a.N,
                           a.T @ b.d + a.d)


def tensor(a, b):
    """Parallel composition on disjoint mode sets."""
    za = np.zeros((2 * a.n, 2 * b.n))
    T = np.block([[a.T, za], [za.T, b.T]])
    N = np.block([[a.N, za], [za.T, b.N]])
    return GaussianChannel(T, N, np.concatenate([a.d, b.d]))


def apply_to_gaussian_state(c, mean, cov):
    cov = np.asarray(cov, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if np.max(np.abs(cov - cov.T)) > 1e-9:
        raise ValueError("covariance must be symmetric")
    w = np.linalg.eigvalsh(cov + 0.5j * omega(c.n))
    if w.min() < PSD_FLOOR:
        raise ValueError("covariance violates the uncertainty relation")
    return c.T @ mean + c.d, c.T @ cov @ c.T.T + c.N


def unitary_channel(S, d=None, n=None):
    """Noiseless channel from a symplectic matrix (optionally embedded)."""
    S = np.asarray(S, dtype=float)
    if not is_symplectic(S):
        raise ValueError("matrix is not symplectic")
    if n is not None and S.shape[0] != 2 * n:
        raise ValueError("size mismatch")
    return GaussianChannel(S, np.zeros_like(S), d)


def _embed(block_T, block_N, mode_index, n):
    T = np.eye(2 * n)
    N = np.zeros((2 * n, 2 * n))
    i = 2 * mode_index
    T[i:i + 2, i:i + 2] = block_T
    N[i:i + 2, i:i + 2] = block_N
    return GaussianChannel(T, N)


def awgn_channel(sigma2, mode_index=0, n=1):
    """AWGN channel adding variance sigma2 to each quadrature of one mode."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    return _embed(np.eye(2), sigma2 * np.eye(2), mode_index, n)


def awgn_product(sigmas):
    """Independent AWGN channels, one per mode, with the given STDs."""
    sigmas = np.asarray(sigmas, dtype=float)
    n = len(sigmas)
    return GaussianChannel(np.eye(2 * n),
                           np.diag(np.repeat(sigmas ** 2, 2)))


def channel_from_loss(eta, N_B, mode_index=0, n=1):
    if not 0 < eta <= 1:
        raise ValueError("transmissivity must be in (0, 1]")
    if N_B < 0:
        raise ValueError("thermal noise must be nonnegative")
    return _embed(np.sqrt(eta) * np.eye(2),
                  (N_B + (1 - eta) / 2) * np.eye(2), mode_index, n)


def channel_from_amp(G, N_B, mode_index=0, n=1):
    if G < 1:
        raise ValueError("amplifier gain must be >= 1")
    if N_B < 0:
        raise ValueError("thermal noise must be nonnegative")
    return _embed(np.sqrt(G) * np.eye(2),
                  (N_B + (G - 1) / 2) * np.eye(2), mode_index, n)


def squeezer(z, mode_index=0, n=1):
    """Single-mode squeezer q -> z q, p -> p/z."""
    if z <= 0:
        raise ValueError("squeeze factor must be positive")
    S = np.eye(2 * n)
    i = 2 * mode_index
    S[i, i] = z
    S[i + 1, i + 1] = 1.0 / z
    return S


def beamsplitter(t, modes=(0, 1), n=2):
    """Beamsplitter with transmissivity t mixing two modes.

    Acts as (x, y) -> (sqrt(t) x + sqrt(1-t) y, -sqrt(1-t) x + sqrt(t) y)
    on both quadratures.
    """
    if not 0 <= t <= 1:
        raise ValueError("transmissivity must be in [0, 1]")
    c, s = np.sqrt(t), np.sqrt(1 - t)
    S = np.eye(2 * n)
    i, j = 2 * modes[0], 2 * modes[1]
    for k in range(2):
        S[i + k, i + k] = c
        S[i + k, j + k] = s
        S[j + k, i + k] = -s
        S[j + k, j + k] = c
    return S


def random_symplectic(n, rng):
    """Haar-ish random symplectic: passive x local squeeze x passive."""
    k1 = random_orthogonal_symplectic(n, rng)
    k2 = random_orthogonal_symplectic(n, rng)
    z = np.exp(rng.uniform(-0.7, 0.7, n))
    D = np.diag(np.repeat(z, 2) ** np.tile([1.0, -1.0], n))
    return k1 @ D @ k2


def random_orthogonal_symplectic(n, rng):
    """Realification of a Haar random n x n complex unitary."""
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(a)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return realify_unitary(q)


def realify_unitary(u):
    """Map a complex n x n unitary to the 2n x 2n orthogonal symplectic."""
    n = u.shape[0]
    S = np.empty((2 * n, 2 * n))
    S[0::2, 0::2] = u.real
    S[0::2, 1::2] = -u.imag
    S[1::2, 0::2] = u.imag
    S[1::2, 1::2] = u.real
    return S


def complexify(S):
    """Inverse of realify_unitary up to projection: average the 2x2 blocks.

    Returns the complex matrix m with m = (A + D)/2 + i (C - B)/2 for block
    [[A, B], [C, D]] per mode pair; exact when S commutes with the complex
    structure J = realify(iI).
    """
    A = S[0::2, 0::2]
    B = S[0::2, 1::2]
    C = S[1::2, 0::2]
    D = S[1::2, 1::2]
    return 0.5 * (A + D) + 0.5j * (C - B)
