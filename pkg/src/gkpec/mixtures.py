"""Residual-noise densities as symmetric mixtures of equal-width Gaussians,
plus the modular arithmetic of ideal GKP measurements.

A mixture is stored as arrays of weights b and means t sharing one component
STD sigma.  All distributions produced by the code-evaluation recursions are
symmetric (for every (b, t) term there is a (b, -t) term), which the update
rules preserve exactly.
"""

import numpy as np
from scipy.special import ndtr, erfc

ROOT_2PI = np.sqrt(2.0 * np.pi)


def modular_reduce(z, s=ROOT_2PI):
    """Reduce z to the representative in [-s/2, s/2) of z + s*Z."""
    if s <= 0:
        raise ValueError("spacing must be positive")
    z = np.asarray(z, dtype=float)
    r = z - np.round(z / s) * s
    # round() ties and the +s/2 edge both map to the -s/2 representative
    r = np.where(r >= s / 2, r - s, r)
    out = np.where(r < -s / 2, r + s, r)
    return out if out.ndim else float(out)


def bin_index(z, s=ROOT_2PI):
    """Lattice index l with z = l*s + modular_reduce(z, s)."""
    z = np.asarray(z, dtype=float)
    out = np.round((z - modular_reduce(z, s)) / s).astype(int)
    return out if out.ndim else int(out)


def interval_mass(lo, hi, mean, sigma):
    """P(lo < X <= hi) for X ~ N(mean, sigma^2), stable in both tails."""
    m1 = (lo - mean) / sigma
    m2 = (hi - mean) / sigma
    # evaluate through whichever tail avoids cancellation of ndtr near 1
    return np.where(m1 + m2 > 0, ndtr(-m1) - ndtr(-m2), ndtr(m2) - ndtr(m1))


def shifted_bin_coeff(l, sigma, shift=0.0, s=ROOT_2PI):
    """Mass of N(-shift, sigma^2) inside the l-th bin ((l-1/2)s, (l+1/2)s]."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    l = np.asarray(l, dtype=float)
    out = interval_mass((l - 0.5) * s, (l + 0.5) * s, -np.asarray(shift, float), sigma)
    return out if out.ndim else float(out)


def gkp_bin_coeff(n, sigma):
    """b_n(sigma): mass of a centered normal in the n-th sqrt(2*pi) bin.

    Equals (1/2)[Erfc((n-1/2) sqrt(pi)/sigma) - Erfc((n+1/2) sqrt(pi)/sigma)].
    """
    return shifted_bin_coeff(n, sigma, 0.0)


def bin_range(shifts, sigma, s=ROOT_2PI, coverage=6.0):
    """Integer bin indices covering all shifted Gaussians to +-coverage*sigma."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    w = int(np.ceil(coverage * sigma / s)) + 2
    lo = int(np.floor(shifts.min() / s)) - w
    hi = int(np.ceil(shifts.max() / s)) + w
    return np.arange(lo, hi + 1)


class GaussianMixture1D:
    """Symmetric mixture sum_k b_k Normal(t_k, sigma^2)."""

    def __init__(self, sigma, weights, means, truncation_mass=0.0):
        self.sigma = float(sigma)
        self.b = np.atleast_1d(np.asarray(weights, dtype=float))
        self.t = np.atleast_1d(np.asarray(means, dtype=float))
        self.truncation_mass = float(truncation_mass)
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.b.shape != self.t.shape:
            raise ValueError("weights and means must have equal length")
        if np.any(self.b < 0):
            raise ValueError("weights must be nonnegative")

    @classmethod
    def single(cls, sigma):
        return cls(sigma, [1.0], [0.0])

    def __len__(self):
        return len(self.b)

    def total_mass(self):
        return float(self.b.sum() + self.truncation_mass)

    def mean(self):
        return float(np.dot(self.b, self.t) / self.b.sum())

    def check_symmetric(self, tol=1e-6):
        # loose enough that a pruned-away half of one far-out +-t pair does
        # not trip it, tight enough to catch sign errors in construction
        return abs(np.dot(self.b, self.t)) <= tol * max(self.b.sum(), 1e-300)

    def variance(self):
        """Second moment sigma^2 + sum b t^2, renormalized over kept mass."""
        if not self.check_symmetric():
            raise ValueError("mixture has a nonzero mean; variance undefined "
                             "under the symmetric-mixture contract")
        return self.sigma ** 2 + float(np.dot(self.b, self.t ** 2) / self.b.sum())

    def std(self):
        return float(np.sqrt(self.variance()))

    def fourth_moment(self):
        """Fourth moment about zero, renormalized over kept mass.

        Useful for exact sampling-error bars on variance estimates: the
        variance of a single draw's square is fourth_moment - variance^2.
        """
        if not self.check_symmetric():
            raise ValueError("mixture has a nonzero mean; moments undefined "
                             "under the symmetric-mixture contract")
        s2 = self.sigma ** 2
        m4 = self.t ** 4 + 6.0 * s2 * self.t ** 2 + 3.0 * s2 ** 2
        return float(np.dot(self.b, m4) / self.b.sum())

    def pdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = (x[:, None] - self.t[None, :]) / self.sigma
        w = self.b / (self.b.sum() * self.sigma * ROOT_2PI)
        return np.exp(-0.5 * z ** 2) @ w

    def cdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = (x[:, None] - self.t[None, :]) / self.sigma
        return ndtr(z) @ (self.b / self.b.sum())

    def sample(self, count, rng):
        idx = rng.choice(len(self.b), size=count, p=self.b / self.b.sum())
        return self.t[idx] + self.sigma * rng.normal(size=count)

    def pruned(self, eps=1e-12, max_terms=None):
        return prune(self, eps, max_terms)

    def to_json_dict(self):
        return {"sigma": self.sigma,
                "terms": [[float(b), float(t)] for b, t in zip(self.b, self.t)],
                "truncated": self.truncation_mass}


def merge_close_terms(mix, tol=1e-12):
    """Add weights of terms whose means coincide within tol."""
    live = mix.b > 0
    if not live.any():
        raise ValueError("mixture has no mass left")
    order = np.argsort(mix.t[live], kind="stable")
    t = mix.t[live][order]
    b = mix.b[live][order]
    if len(t) > 1:
        new_group = np.concatenate([[True], np.diff(t) > tol])
    else:
        new_group = np.array([True])
    gid = np.cumsum(new_group) - 1
    nb = np.zeros(gid[-1] + 1)
    nt = np.zeros(gid[-1] + 1)
    np.add.at(nb, gid, b)
    np.add.at(nt, gid, b * t)
    nt = nt / nb
    return GaussianMixture1D(mix.sigma, nb, nt, mix.truncation_mass)


def prune(mix, eps=1e-12, max_terms=None):
    """Drop the least significant terms, tracking the discarded mass.

    Significance counts both probability mass and contribution to the second
    moment, so far-out light peaks that still carry variance are kept.  A hard
    cap on the term count can be supplied for inner optimizer loops.
    """
    if eps < 0 or eps > 1e-6:
        raise ValueError("eps must be in [0, 1e-6]")
    mix = merge_close_terms(mix)
    b, t = mix.b, mix.t
    keep = np.ones(len(b), dtype=bool)
    if eps > 0:
        total_var = max(float(np.dot(b, t * t)), 1e-300)
        score = b * (1.0 + t * t)
        order = np.argsort(score, kind="stable")
        cum_mass = np.cumsum(b[order])
        cum_var = np.cumsum((b * t * t)[order])
        drop = (cum_mass <= eps) & (cum_var <= eps * total_var)
        keep[order[drop]] = False
    if max_terms is not None and keep.sum() > max_terms:
        score = np.where(keep, b * (1.0 + t * t), -1.0)
        kept_idx = np.argsort(score, kind="stable")[::-1][:max_terms]
        keep = np.zeros(len(b), dtype=bool)
        keep[kept_idx] = True
    dropped = float(b[~keep].sum())
    return GaussianMixture1D(mix.sigma, b[keep], t[keep],
                             mix.truncation_mass + dropped)


def mixture_variance(mix):
    return mix.variance()


def average_std(mix_q, mix_p):
    """sqrt((sigma_Lq^2 + sigma_Lp^2)/2) for a pair of quadrature mixtures."""
    return float(np.sqrt(0.5 * (mix_q.variance() + mix_p.variance())))
