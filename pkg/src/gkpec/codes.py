"""Two-mode GKP-stabilized codes: gain-parameterized entangling encoder,
modular syndrome measurement, and minimum-variance correction.

Two families are implemented.  The "tms" family encodes with a two-mode
squeezer of gain G; the "sr" family uses a squeezing + SUM-gate construction
parameterized by (G, kappa), with kappa chosen to balance the residual peak
widths.  Mode 1 is the data slot, mode 2 the measured ancilla slot.

The coefficient and correction helpers below are the single source of truth
for the estimator; both the analytic mixture recursion and the Monte Carlo
pipeline call them, so any disagreement between the two isolates the density
bookkeeping rather than the decoder.
"""

import numpy as np

from .mixtures import (GaussianMixture1D, ROOT_2PI, bin_range, interval_mass,
                       modular_reduce, prune)

SR_MIN_GAIN = 1e-6


def tms_symplectic(G, n=2, modes=(0, 1)):
    """Two-mode-squeezing symplectic with gain G >= 1."""
    if G < 1:
        raise ValueError("TMS gain must be >= 1")
    c, s = np.sqrt(G), np.sqrt(G - 1)
    S = np.eye(2 * n)
    i, j = 2 * modes[0], 2 * modes[1]
    S[i, i] = c; S[i, j] = s
    S[j, i] = s; S[j, j] = c
    S[i + 1, i + 1] = c; S[i + 1, j + 1] = -s
    S[j + 1, i + 1] = -s; S[j + 1, j + 1] = c
    return S


def sr_symplectic(G, kappa, n=2, modes=(0, 1)):
    """Squeezing-repetition symplectic, parameterized by (G, kappa)."""
    if G <= 0 or kappa <= 0:
        raise ValueError("G and kappa must be positive")
    S = np.eye(2 * n)
    i, j = 2 * modes[0], 2 * modes[1]
    S[i, i] = kappa / G
    S[i + 1, i + 1] = G / kappa
    S[i + 1, j + 1] = -G
    S[j, i] = G
    S[j, j] = G / kappa
    S[j + 1, j + 1] = kappa / G
    return S


def sr_balanced_kappa(sigma_data, sigma_anc, G):
    """kappa making every residual peak share one width.

    kappa^2 = (sqrt(G^8 s1^4 + 4 G^4 s2^4) - G^4 s1^2) / (2 s2^2)
    with s1 the data-channel STD and s2 the ancilla STD.
    """
    s1, s2 = sigma_data, sigma_anc
    # conjugate form of (sqrt(G^8 s1^4 + 4 G^4 s2^4) - G^4 s1^2) / (2 s2^2),
    # stable against cancellation at large G
    x = 4 * s2 ** 4 / (G ** 4 * s1 ** 4)
    k2 = 2 * s2 ** 2 / (s1 ** 2 * (np.sqrt(1.0 + x) + 1.0))
    return float(np.sqrt(k2))


class TmsLayerParams:
    """Derived decoding quantities for one TMS layer.

    sigma_bin:   STD of the measured syndrome combination (binning width)
    slope:       estimator gain multiplying the reduced syndrome
    sigma_next:  shared STD of every residual peak
    """

    family = "tms"

    def __init__(self, sigma_data, sigma_anc, G):
        if G < 1:
            raise ValueError("TMS gain must be >= 1")
        if sigma_data <= 0 or sigma_anc <= 0:
            raise ValueError("channel STDs must be positive")
        self.sigma_data = float(sigma_data)
        self.sigma_anc = float(sigma_anc)
        self.G = float(G)
        s1, s2 = self.sigma_data, self.sigma_anc
        self.sigma_bin = np.sqrt((G - 1) * s1 ** 2 + G * s2 ** 2)
        self.slope = np.sqrt(G * (G - 1)) * (s1 ** 2 + s2 ** 2) / self.sigma_bin ** 2
        self.sigma_next = s1 * s2 / self.sigma_bin
        # z = E^-1 xi coefficients over (data, ancilla) noise
        c, s = np.sqrt(G), np.sqrt(G - 1)
        self.zq_data = (c, -s)     # surviving q combination
        self.zq_anc = (-s, c)      # measured q syndrome
        self.zp_data = (c, s)      # surviving p combination
        self.zp_anc = (s, c)       # measured p syndrome
        # q correction adds +slope * reduced syndrome, p subtracts it
        self.slope_q_mc = self.slope
        self.slope_p_mc = self.slope


class SrLayerParams:
    """Derived decoding quantities for one SR layer.

    slope_mode "mle" uses the minimum-variance estimator gain; mode
    "simplified" uses the reduced-form gain under which the published
    multi-layer benchmarks were generated.  The two coincide when
    sigma_data = sigma_anc; only "mle" corresponds to a realizable decoder,
    so the Monte Carlo pipeline always runs "mle".
    """

    family = "sr"

    def __init__(self, sigma_data, sigma_anc, G, slope_mode="mle"):
        if sigma_data <= 0 or sigma_anc <= 0:
            raise ValueError("channel STDs must be positive")
        if slope_mode not in ("mle", "simplified"):
            raise ValueError("slope_mode must be 'mle' or 'simplified'")
        G = max(float(G), SR_MIN_GAIN)
        self.sigma_data = float(sigma_data)
        self.sigma_anc = float(sigma_anc)
        self.G = G
        self.slope_mode = slope_mode
        s1, s2 = self.sigma_data, self.sigma_anc
        self.kappa = sr_balanced_kappa(s1, s2, G)
        k = self.kappa
        D = k ** 2 * s2 ** 2 + G ** 4 * s1 ** 2
        self.sigma_bin = np.sqrt(D) / G              # q-syndrome binning STD
        self.slope_mle = G ** 4 * s1 ** 2 / (k * D)  # equals k (s1/s2)^2 at balance
        self.slope_simplified = k * s1 / s2
        self.slope = self.slope_mle if slope_mode == "mle" else self.slope_simplified
        self.sigma_next = k * s1 / G
        self.sigma_bin_p = (G / k) * s2              # p-syndrome binning STD
        self.zq_data = (G / k, 0.0)
        self.zq_anc = (-G, k / G)
        self.zp_data = (k / G, G)
        self.zp_anc = (0.0, G / k)
        # the p correction subtracts exactly kappa; the realizable q
        # correction always uses the minimum-variance gain
        self.slope_q_mc = self.slope_mle
        self.slope_p_mc = self.kappa


def layer_params(family, sigma_data, sigma_anc, G, sr_slope="mle"):
    if family == "tms":
        return TmsLayerParams(sigma_data, sigma_anc, G)
    if family == "sr":
        return SrLayerParams(sigma_data, sigma_anc, G, sr_slope)
    raise ValueError("unknown code family: %r" % (family,))


def correct_quadratures(params, zq_data, zq_anc, zp_data, zp_anc):
    """Apply the modular estimate-and-displace correction to sample arrays.

    Returns the residual (q, p) displacements on the surviving mode.  This is
    the decoder used by the Monte Carlo pipeline; the analytic recursion uses
    the same slope fields in closed form.
    """
    rq = zq_data + params.slope_q_mc * modular_reduce(zq_anc)
    rp = zp_data - params.slope_p_mc * modular_reduce(zp_anc)
    return rq, rp


def _mixture_from_bins(sigma_comp, weights, means):
    keep = weights > 0
    return GaussianMixture1D(sigma_comp, weights[keep], means[keep])


def tms_residual_mixture(params_or_s1, s2=None, G=None, eps=1e-12):
    """Exact residual PDFs (q, p) of a single TMS layer on Gaussian inputs."""
    p = params_or_s1 if isinstance(params_or_s1, TmsLayerParams) \
        else TmsLayerParams(params_or_s1, s2, G)
    ls = bin_range(0.0, p.sigma_bin)
    b = interval_mass((ls - 0.5) * ROOT_2PI, (ls + 0.5) * ROOT_2PI, 0.0, p.sigma_bin)
    t = p.slope * (0.0 - ROOT_2PI * ls)
    q = prune(_mixture_from_bins(p.sigma_next, b, t), eps)
    return q, q


def sr_residual_mixture(params_or_s1, s2=None, G=None, slope_mode="mle", eps=1e-12):
    """Exact residual PDFs (q, p) of a single SR layer on Gaussian inputs."""
    p = params_or_s1 if isinstance(params_or_s1, SrLayerParams) \
        else SrLayerParams(params_or_s1, s2, G, slope_mode)
    ls = bin_range(0.0, p.sigma_bin)
    bq = interval_mass((ls - 0.5) * ROOT_2PI, (ls + 0.5) * ROOT_2PI, 0.0, p.sigma_bin)
    tq = p.slope * (0.0 - ROOT_2PI * ls)
    ls2 = bin_range(0.0, p.sigma_bin_p)
    bp = interval_mass((ls2 - 0.5) * ROOT_2PI, (ls2 + 0.5) * ROOT_2PI, 0.0,
                       p.sigma_bin_p)
    tp = p.kappa * ROOT_2PI * ls2
    q = prune(_mixture_from_bins(p.sigma_next, bq, tq), eps)
    pp = prune(_mixture_from_bins(p.sigma_next, bp, tp), eps)
    return q, pp


def two_mode_average_std(family, s1, s2, G, sr_slope="mle"):
    q, p = (tms_residual_mixture(s1, s2, G) if family == "tms"
            else sr_residual_mixture(s1, s2, G, sr_slope))
    return float(np.sqrt(0.5 * (q.variance() + p.variance())))


def tms_asymptotic_optimum(s1, s2):
    """Leading-order optimal gain and residual STD for small channel noise."""
    sbar4 = (s1 * s2) ** 2
    arg = np.pi ** 1.5 / (2 * sbar4)
    if arg <= np.e:
        raise ValueError("channel noise too large for the asymptotic form")
    var = (4 * sbar4 / np.pi) * np.log(arg)
    G = ((np.pi / 4) / np.log(np.pi ** 1.5 / (2 * s1 ** 2 * s2 ** 2)) + s1 ** 2) \
        / (s1 ** 2 + s2 ** 2)
    return float(G), float(np.sqrt(var))


def sr_asymptotic_optimum(s1, s2):
    """Leading-order optimal residual STD; s2 is the ancilla channel."""
    sbar4 = (s1 * s2) ** 2
    arg = np.pi ** 1.5 / (2 * sbar4)
    if arg <= np.e:
        raise ValueError("channel noise too large for the asymptotic form")
    var = (4 * sbar4 / np.pi) * (np.log(arg)
                                 + np.log((s1 ** 2 + s2 ** 2) / (2 * s1 ** 2)))
    return float(np.sqrt(var))


def preferred_order(family, sigma_a, sigma_b):
    """Assign the two channels to (data, ancilla) slots favorably.

    The tms family prefers the less noisy channel on the data slot; the sr
    family prefers it on the ancilla slot.
    """
    lo, hi = sorted((sigma_a, sigma_b))
    if family == "tms":
        return lo, hi
    if family == "sr":
        return hi, lo
    raise ValueError("unknown code family: %r" % (family,))
