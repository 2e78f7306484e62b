"""Reduction of a multimode Gaussian channel to independent effective
additive-noise channels.

Given a channel (T, N) the reducer searches for symplectics S_post, S_pre,
per-mode scale factors s_k, and a middle noise covariance V with

    T = S_post (diag of s_k I_2) S_pre,     N = S_post V S_post^t.

When V is mode-diagonal and isotropic the channel is exactly a product of
scaled one-mode additive channels sandwiched between Gaussian unitaries.
Per-mode anisotropy is removed exactly with squeezer conjugations that
commute with the middle scaling; those show up in the stage list rather
than happening silently.  Noise correlation across modes with distinct
scale factors cannot be removed this way and is reported as
residual_error, with the isotropic per-mode approximation still returned.

The effective code-frame noise STD of a mode with scale s and isotropic
noise v: lifting the scale to unit gain with a sender-side quantum
amplifier (s < 1) or attenuator (s > 1) costs |1 - s^2|/2 of added noise,
so sigma^2 = v + |1 - s^2|/2.  Scale factors below the erasure floor make
that frame change meaningless; such modes get a large surrogate sigma and
a flag instead.
"""

import numpy as np
import scipy.linalg

from .gaussian import GaussianChannel, complexify, is_symplectic, omega, \
    realify_unitary

ERASURE_SCALE = 1e-12
ERASURE_SIGMA = 10.0
GROUP_RTOL = 1e-9


class IrreducibleChannelError(ValueError):
    """Raised when T admits no symplectic x scaling x symplectic splitting."""


class ReductionResult:
    """Decomposition output; reconstruct with verify_reduction."""

    def __init__(self, post, pre, scales, mid_noise, iso_noise, sigmas,
                 mid_d, stages, flags, residual_error):
        self.post = post
        self.pre = pre
        self.scales = scales
        self.mid_noise = mid_noise
        self.iso_noise = iso_noise
        self.sigmas = sigmas
        self.mid_d = mid_d
        self.stages = stages
        self.flags = flags
        self.residual_error = residual_error

    def to_json_dict(self):
        return {"post": self.post.tolist(), "pre": self.pre.tolist(),
                "scales": self.scales.tolist(),
                "iso_noise": self.iso_noise.tolist(),
                "sigmas": self.sigmas.tolist(),
                "stages": self.stages, "flags": self.flags,
                "residual_error": self.residual_error}


def williamson(V, ridge=0.0):
    """Symplectic diagonalization V = S (diag of nu_k I_2) S^t, V > 0.

    Returns (S, nu).  A nonnegative ridge is added when V is singular so the
    square-root construction stays defined; callers account for it.
    """
    V = 0.5 * (V + V.T)
    if ridge > 0:
        V = V + ridge * np.eye(V.shape[0])
    W = scipy.linalg.sqrtm(V)
    if np.iscomplexobj(W):
        W = W.real
    n = V.shape[0] // 2
    M = W @ omega(n) @ W
    M = 0.5 * (M - M.T)
    Q, B = _antisymmetric_canonical(M)
    nu = np.array([B[2 * k, 2 * k + 1] for k in range(n)])
    if np.any(nu <= 0):
        raise np.linalg.LinAlgError("Williamson needs a positive definite V")
    half = np.repeat(1.0 / np.sqrt(nu), 2)
    S = W @ Q * half[None, :]
    return S, nu


def _antisymmetric_canonical(M):
    """Orthogonal Q with Q^t M Q = diag of [[0, nu], [-nu, 0]], nu >= 0."""
    B, Q = scipy.linalg.schur(M, output="real")
    n = M.shape[0] // 2
    Q = Q.copy()
    for k in range(n):
        i = 2 * k
        if B[i, i + 1] < 0:
            Q[:, [i, i + 1]] = Q[:, [i + 1, i]]
    B = Q.T @ M @ Q
    return Q, B


def _symplectic_eigenbasis(K, om):
    """X symplectic and lam (per mode) with K = X diag(lam_k I_2) X^-1."""
    scale = max(np.max(np.abs(K)), 1e-300)
    w, V = np.linalg.eig(K)
    if np.max(np.abs(w.imag)) > 1e-7 * scale or np.any(w.real <= 0):
        raise IrreducibleChannelError(
            "transfer matrix has no positive symplectic scaling spectrum")
    w = w.real
    order = np.argsort(w, kind="stable")
    w, V = w[order], V[:, order]
    groups = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or abs(w[i] - w[start]) > GROUP_RTOL * max(w[start], 1e-300):
            groups.append((start, i))
            start = i
    pairs = []
    lams = []
    for a, b in groups:
        dim = b - a
        if dim % 2:
            raise IrreducibleChannelError("odd eigenvalue multiplicity")
        raw = np.hstack([V[:, a:b].real, V[:, a:b].imag])
        u, s, _ = np.linalg.svd(raw, full_matrices=False)
        basis = [u[:, j] for j in range(dim)]
        while basis:
            v = basis.pop(0)
            ips = [abs(v @ om @ u2) for u2 in basis]
            if not ips or max(ips) < 1e-10:
                raise IrreducibleChannelError(
                    "degenerate symplectic form on an eigenspace")
            j = int(np.argmax(ips))
            u2 = basis.pop(j)
            u2 = u2 / (v @ om @ u2)
            basis = [x - (v @ om @ x) * u2 + (u2 @ om @ x) * v for x in basis]
            pairs.append((v, u2))
            lams.append(w[a])
    X = np.empty((K.shape[0], K.shape[0]))
    for k, (v, u2) in enumerate(pairs):
        X[:, 2 * k] = v
        X[:, 2 * k + 1] = u2
    if not is_symplectic(X, 1e-6):
        raise IrreducibleChannelError("eigenbasis failed symplectic closure")
    return X, np.array(lams)


def _mode_permutation(order, n):
    P = np.zeros((2 * n, 2 * n))
    for new, old in enumerate(order):
        P[2 * new:2 * new + 2, 2 * old:2 * old + 2] = np.eye(2)
    return P


def _embed_group(S_local, modes, n):
    S = np.eye(2 * n)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    S[np.ix_(idx, idx)] = S_local
    return S


def reduce_channel(channel):
    """Decompose a GaussianChannel into unitaries around scaled AWGN modes.

    Returns a ReductionResult with modes sorted by effective sigma, every
    basis change recorded in stages, and the unremovable part of the noise
    summarized in residual_error.
    """
    n = channel.n
    om = omega(n)
    T = channel.T
    stages = []
    flags = []
    tscale = max(np.max(np.abs(T)), 1e-300)
    if channel.cp_defect() < -1e-6:
        flags.append("not_cp")
    if np.max(np.abs(T @ om - om @ T)) <= 1e-12 * tscale:
        u, s, vh = np.linalg.svd(complexify(T))
        post, pre, scales = realify_unitary(u), realify_unitary(vh), s
        stages.append({"op": "complex_svd"})
    else:
        try:
            K = -om @ (T @ om @ T.T)
            X, lam = _symplectic_eigenbasis(K, om)
            post = np.linalg.inv(X).T
            scales = np.sqrt(lam)
            inv_scales = 1.0 / np.maximum(scales, ERASURE_SCALE)
            pre = np.repeat(inv_scales, 2)[:, None] * (X.T @ T)
            stages.append({"op": "symplectic_svd"})
            if np.any(scales < ERASURE_SCALE):
                flags.append("erasure_clamped")
            if not is_symplectic(pre, 1e-6):
                flags.append("degraded")
        except IrreducibleChannelError:
            # keep the reconstruction exact but say loudly that the "pre"
            # factor is no Gaussian unitary
            post = np.eye(2 * n)
            scales = np.ones(n)
            pre = T.copy()
            stages.append({"op": "identity_fallback"})
            flags += ["irreducible", "degraded"]
    mid = np.linalg.solve(post, np.linalg.solve(post, channel.N).T).T
    mid = 0.5 * (mid + mid.T)
    mid_d = np.linalg.solve(post, channel.d)

    # use the leftover freedom inside equal-scale groups to Williamson-clean
    # the noise; local symplectics there commute with the middle scaling
    order = np.argsort(scales, kind="stable")
    groups = []
    start = 0
    for i in range(1, n + 1):
        if i == n or abs(scales[order[i]] - scales[order[start]]) \
                > GROUP_RTOL * max(scales[order[start]], 1e-300):
            groups.append([int(m) for m in order[start:i]])
            start = i
    iso = np.zeros(n)
    for modes in groups:
        idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
        block = mid[np.ix_(idx, idx)]
        bscale = np.max(np.abs(block))
        if bscale < 1e-14:
            continue
        wmin = np.linalg.eigvalsh(block).min()
        ridge = 0.0 if wmin > 1e-12 * bscale else 1e-12 * bscale - min(wmin, 0)
        if wmin < -1e-6 * bscale:
            flags.append("noise_clamped")
        try:
            S_loc, nu = williamson(block, ridge)
        except np.linalg.LinAlgError:
            flags.append("degraded")
            continue
        E = _embed_group(S_loc, modes, n)
        post = post @ E
        pre = np.linalg.solve(E, pre)
        mid = np.linalg.solve(E, np.linalg.solve(E, mid).T).T
        mid = 0.5 * (mid + mid.T)
        mid_d = np.linalg.solve(E, mid_d)
        for m, v in zip(modes, nu):
            iso[m] = v
        stages.append({"op": "noise_williamson", "modes": modes,
                       "ridge": float(ridge)})
        if len(modes) == 1 and abs(block[0, 0] - block[1, 1]) \
                + abs(block[0, 1]) > 1e-12 * bscale:
            flags.append("symmetrized")

    off = mid - np.kron(np.diag(iso), np.eye(2))
    residual = float(np.max(np.abs(off)))
    if residual > 1e-10 * max(np.max(np.abs(mid)), 1e-300):
        flags.append("correlated_noise")

    lift = 0.5 * np.abs(1.0 - scales ** 2)
    sig2 = iso + np.where(lift < 1e-12, 0.0, lift)
    sigmas = np.sqrt(sig2)
    erased = scales < ERASURE_SCALE
    sigmas[erased] = ERASURE_SIGMA
    if erased.any() and "erasure_clamped" not in flags:
        flags.append("erasure_clamped")

    mode_order = np.argsort(sigmas, kind="stable")
    P = _mode_permutation(mode_order, n)
    post = post @ P.T
    pre = P @ pre
    mid = P @ mid @ P.T
    mid_d = P @ mid_d
    scales = scales[mode_order]
    iso = iso[mode_order]
    sigmas = sigmas[mode_order]
    stages.append({"op": "mode_sort",
                   "order": [int(m) for m in mode_order]})
    return ReductionResult(post, pre, scales, mid, iso, sigmas, mid_d,
                           stages, sorted(set(flags)), residual)


def verify_reduction(channel, result):
    """Max-abs mismatch between the channel and its reassembled pieces."""
    D = np.diag(np.repeat(result.scales, 2))
    T_hat = result.post @ D @ result.pre
    N_hat = result.post @ result.mid_noise @ result.post.T
    d_hat = result.post @ result.mid_d
    return float(max(np.max(np.abs(T_hat - channel.T)),
                     np.max(np.abs(N_hat - channel.N)),
                     np.max(np.abs(d_hat - channel.d))))


def random_channel(n, rng, scale_spread=0.7, noise_scale=0.3, ridge=1e-3):
    """Random reducible test channel.

    T is a random symplectic times per-mode diagonal scaling; N = M M^t plus
    a ridge for a strictly positive noise floor.
    """
    from .gaussian import random_symplectic
    S = random_symplectic(n, rng)
    c = np.exp(rng.uniform(-scale_spread, scale_spread, n))
    T = S @ np.diag(np.repeat(c, 2))
    M = noise_scale * rng.normal(size=(2 * n, 2 * n))
    N = M @ M.T + ridge * np.eye(2 * n)
    return GaussianChannel(T, N)
