"""Layered concatenation of two-mode codes over heterogeneous noise.

A plan stacks n noisy modes.  Position 1 is the top-level data slot and
position n the innermost layer; evaluation runs bottom-up.  The running state
is the pair of residual-displacement mixtures (q, p) on the surviving mode,
which stays an exact symmetric Gaussian mixture at every stage: each layer
bins the measured syndrome, splits every incoming component over the bins,
and applies the closed-form correction to the component means.

Peak bookkeeping grows geometrically, so updates prune by joint mass and
second-moment significance with an optional hard term cap for optimizer
inner loops.
"""

import numpy as np

from .codes import SrLayerParams, TmsLayerParams
from .mixtures import GaussianMixture1D, ROOT_2PI, average_std, \
    interval_mass, prune

DEFAULT_MAX_TERMS = 4000
MAX_SPLIT_ENTRIES = 4_000_000
MAX_BIN_STD = 50.0


class CodePlan:
    """Code family, channel STDs, stacking permutation, and layer gains.

    sigmas are per-channel noise STDs indexed 1..n in the caller's order.
    permutation[k] is the channel placed at stack position k+1 (position 1
    on top).  gains[i] is the gain of the i-th encoding layer counted from
    the bottom of the stack.
    """

    def __init__(self, family, sigmas, gains, permutation=None):
        if family not in ("tms", "sr"):
            raise ValueError("unknown code family: %r" % (family,))
        self.family = family
        self.sigmas = tuple(float(s) for s in sigmas)
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("channel STDs must be positive")
        n = len(self.sigmas)
        if permutation is None:
            permutation = tuple(range(1, n + 1))
        self.permutation = tuple(int(k) for k in permutation)
        if sorted(self.permutation) != list(range(1, n + 1)):
            raise ValueError("permutation must rearrange 1..n")
        self.gains = tuple(float(g) for g in gains)
        if len(self.gains) != n - 1:
            raise ValueError("need exactly n-1 gains for n modes")
        if family == "tms" and any(g < 1 for g in self.gains):
            raise ValueError("TMS gains must be >= 1")
        if family == "sr" and any(g <= 0 for g in self.gains):
            raise ValueError("SR gains must be positive")

    @property
    def n_modes(self):
        return len(self.sigmas)

    def stacked_sigmas(self):
        """Channel STDs in bottom-to-top evaluation order."""
        return [self.sigmas[k - 1] for k in reversed(self.permutation)]

    def to_json_dict(self):
        return {"family": self.family,
                "sigmas": list(self.sigmas),
                "permutation": list(self.permutation),
                "gains": list(self.gains)}

    @classmethod
    def from_json_dict(cls, d):
        return cls(d["family"], d["sigmas"], d.get("gains", []),
                   d.get("permutation"))


class LayerReport:
    """Per-layer diagnostics collected by evaluate_plan."""

    def __init__(self, index, gain, sigma_fresh, params, mix_q, mix_p):
        self.index = index
        self.gain = gain
        self.sigma_fresh = sigma_fresh
        self.sigma_bin = params.sigma_bin
        self.slope = params.slope
        self.kappa = getattr(params, "kappa", None)
        self.sigma_next = params.sigma_next
        self.peaks_q = len(mix_q)
        self.peaks_p = len(mix_p)

    def to_json_dict(self):
        d = {"layer": self.index, "gain": self.gain,
             "sigma_fresh": self.sigma_fresh, "sigma_bin": self.sigma_bin,
             "slope": self.slope, "sigma_next": self.sigma_next,
             "peaks_q": self.peaks_q, "peaks_p": self.peaks_p}
        if self.kappa is not None:
            d["kappa"] = self.kappa
        return d


class EvalReport:
    """Residual-noise summary of a fully evaluated plan."""

    def __init__(self, plan, mix_q, mix_p, layers):
        self.plan = plan
        self.mixture_q = mix_q
        self.mixture_p = mix_p
        self.layers = layers
        self.sigma_Lq = mix_q.std()
        self.sigma_Lp = mix_p.std()
        self.sigma_L = average_std(mix_q, mix_p)

    def to_json_dict(self, include_mixtures=False):
        d = {"plan": self.plan.to_json_dict(),
             "sigma_Lq": self.sigma_Lq,
             "sigma_Lp": self.sigma_Lp,
             "sigma_L": self.sigma_L,
             "layers": [l.to_json_dict() for l in self.layers]}
        if include_mixtures:
            d["mixture_q"] = self.mixture_q.to_json_dict()
            d["mixture_p"] = self.mixture_p.to_json_dict()
        return d


def _split_over_bins(weights, shifts, extra_mean, slope, sigma_bin, sigma_next,
                     trunc, eps, max_terms):
    """Bin a batch of shifted Gaussians and map components to new means.

    Every incoming component k contributes mass b_k * P(bin l | shift_k) at
    mean extra_mean_k + slope * (shift_k - l*sqrt(2 pi)).  Each component
    gets its own window of bins around its shift, so the grid size is set by
    sigma_bin alone and not by how far the shifts sit from the origin.
    """
    shifts = np.asarray(shifts, dtype=float)
    if sigma_bin > MAX_BIN_STD:
        # dozens of lattice cells wide: the syndrome is essentially uniform
        # and the layer can only inject noise, so refuse early
        raise ValueError("syndrome bin STD is far beyond the lattice "
                         "spacing; the gain is outside the useful range")
    w = int(np.ceil(6.0 * sigma_bin / ROOT_2PI)) + 2
    if len(weights) * (2 * w + 1) > MAX_SPLIT_ENTRIES:
        raise ValueError("syndrome binning grid too large; the gain is far "
                         "outside the useful range for these noise levels")
    ls = np.rint(shifts / ROOT_2PI)[:, None] + np.arange(-w, w + 1)[None, :]
    lo = (ls - 0.5) * ROOT_2PI
    hi = (ls + 0.5) * ROOT_2PI
    B = weights[:, None] * interval_mass(lo, hi, shifts[:, None], sigma_bin)
    M = extra_mean[:, None] + slope * (shifts[:, None] - ROOT_2PI * ls)
    raw = GaussianMixture1D(sigma_next, B.ravel(), M.ravel(), trunc)
    return prune(raw, eps, max_terms)


def tms_layer_update(mix_q, mix_p, sigma_fresh, G, eps=1e-12,
                     max_terms=DEFAULT_MAX_TERMS):
    """One TMS encoding layer applied to the current residual mixtures.

    The incoming mixtures are symmetric and identical across quadratures for
    this family, and the update preserves that, so the q result is reused
    for p.
    """
    params = TmsLayerParams(sigma_fresh, mix_q.sigma, G)
    c, s = np.sqrt(params.G), np.sqrt(params.G - 1)
    new_q = _split_over_bins(mix_q.b, c * mix_q.t, -s * mix_q.t, params.slope,
                             params.sigma_bin, params.sigma_next,
                             mix_q.truncation_mass, eps, max_terms)
    return new_q, new_q, params


def sr_layer_update(mix_q, mix_p, sigma_fresh, G, eps=1e-12,
                    max_terms=DEFAULT_MAX_TERMS, slope_mode="mle"):
    """One SR encoding layer applied to the current residual mixtures."""
    if abs(mix_q.sigma - mix_p.sigma) > 1e-9 * max(mix_q.sigma, 1e-300):
        raise ValueError("q and p mixtures must share one component STD")
    params = SrLayerParams(sigma_fresh, mix_q.sigma, G, slope_mode)
    k, G = params.kappa, params.G
    new_q = _split_over_bins(mix_q.b, (k / G) * mix_q.t,
                             np.zeros(len(mix_q)), params.slope,
                             params.sigma_bin, params.sigma_next,
                             mix_q.truncation_mass, eps, max_terms)
    # p means land on the lattice exactly: G t - kappa ((G/kappa) t - l s) = kappa l s
    new_p = _split_over_bins(mix_p.b, (G / k) * mix_p.t, G * mix_p.t,
                             -params.kappa, params.sigma_bin_p,
                             params.sigma_next, mix_p.truncation_mass,
                             eps, max_terms)
    return new_q, new_p, params


def evaluate_plan(plan, eps=1e-12, max_terms=DEFAULT_MAX_TERMS,
                  sr_slope="mle", collect_layers=True):
    """Exact residual statistics of a layered plan, bottom-up.

    Returns an EvalReport with per-quadrature logical STDs, the final
    mixtures, and per-layer diagnostics.
    """
    order = plan.stacked_sigmas()
    mix_q = GaussianMixture1D.single(order[0])
    mix_p = mix_q
    layers = []
    for i, G in enumerate(plan.gains):
        sigma_fresh = order[i + 1]
        if plan.family == "tms":
            mix_q, mix_p, params = tms_layer_update(mix_q, mix_p, sigma_fresh,
                                                    G, eps, max_terms)
        else:
            mix_q, mix_p, params = sr_layer_update(mix_q, mix_p, sigma_fresh,
                                                   G, eps, max_terms, sr_slope)
        if collect_layers:
            layers.append(LayerReport(i + 1, G, sigma_fresh, params,
                                      mix_q, mix_p))
    return EvalReport(plan, mix_q, mix_p, layers)


def plan_sigma(plan, eps=1e-12, max_terms=DEFAULT_MAX_TERMS, sr_slope="mle"):
    """sigma_L only, skipping report assembly (optimizer inner loop)."""
    return evaluate_plan(plan, eps, max_terms, sr_slope,
                         collect_layers=False).sigma_L


def upsilon(var_a, var_b):
    """Small-noise variance map for one optimally tuned layer.

    upsilon(a, b) = (4 a b / pi) * ln(pi^(3/2) / (2 a b)) on variances.
    """
    prod = var_a * var_b
    arg = np.pi ** 1.5 / (2 * prod)
    if np.any(np.asarray(arg) <= 1.0):
        raise ValueError("variances too large for the asymptotic map")
    return (4 * prod / np.pi) * np.log(arg)


def asymptotic_recursion(sigmas):
    """Leading-order residual STD of a full stack of small noises.

    Folds upsilon pairwise up the stack and returns (sigma_estimate, stages)
    where stages[u] is the running variance after u+2 modes.
    """
    sigmas = [float(s) for s in sigmas]
    if len(sigmas) < 2:
        raise ValueError("need at least two modes")
    v = upsilon(sigmas[0] ** 2, sigmas[1] ** 2)
    stages = [v]
    for s in sigmas[2:]:
        v = upsilon(s ** 2, v)
        stages.append(v)
    return float(np.sqrt(v)), stages


def three_mode_explicit(s1, s2, s3):
    """Closed-form small-noise residual STD for three stacked modes.

    Algebraically identical to folding upsilon twice; kept as an independent
    cross-check of the recursion.
    """
    sbar6 = (s1 * s2 * s3) ** 2
    L1 = np.log(np.pi ** 1.5 / (2 * s1 ** 2 * s2 ** 2))
    var = (16 * sbar6 / np.pi ** 2) * L1 \
        * np.log((np.pi ** 2.5 / (8 * sbar6)) / L1)
    return float(np.sqrt(var))
