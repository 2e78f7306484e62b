"""Monte Carlo cross-check of the analytic residual statistics.

Samples are pushed through the same per-layer decoding rule the analytic
recursion encodes: the coefficient tuples and slopes come from the layer
parameter objects, and the correction itself is codes.correct_quadratures,
so the estimator logic cannot drift between the two paths.

Streams are chunked counter-based generators; chunk c of a run uses
SeedSequence(seed, spawn_key=(c,)), so any chunk can be regenerated in
isolation.  Errors are jackknife-over-chunks standard errors.
"""

import numpy as np
import scipy.stats

from .codes import correct_quadratures, layer_params


def _chunk_rng(seed, index):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def _layer_chain(plan, sr_slope):
    """Layer parameter objects exactly as the analytic recursion builds them."""
    order = plan.stacked_sigmas()
    chain = []
    sig_anc = order[0]
    for i, G in enumerate(plan.gains):
        params = layer_params(plan.family, order[i + 1], sig_anc, G, sr_slope)
        chain.append(params)
        sig_anc = params.sigma_next
    return order, chain


def _sample_plan(order, chain, count, rng):
    """Draw count end-to-end residual displacement pairs (rq, rp)."""
    aq = rng.normal(0.0, order[0], count)
    ap = rng.normal(0.0, order[0], count)
    for i, params in enumerate(chain):
        dq = rng.normal(0.0, order[i + 1], count)
        dp = rng.normal(0.0, order[i + 1], count)
        zq_data = params.zq_data[0] * dq + params.zq_data[1] * aq
        zq_anc = params.zq_anc[0] * dq + params.zq_anc[1] * aq
        zp_data = params.zp_data[0] * dp + params.zp_data[1] * ap
        zp_anc = params.zp_anc[0] * dp + params.zp_anc[1] * ap
        aq, ap = correct_quadratures(params, zq_data, zq_anc, zp_data, zp_anc)
    return aq, ap


def _jackknife(totals, per_chunk, reducer):
    """Leave-one-chunk-out standard error of reducer(sums, count)."""
    k = len(per_chunk)
    if k < 2:
        return float("nan")
    loo = np.array([reducer(totals - per_chunk[i], k - 1) for i in range(k)])
    return float(np.sqrt((k - 1) / k * np.sum((loo - loo.mean()) ** 2)))


def mc_residual(plan, samples, seed=12345, chunk=1_000_000, sr_slope="mle",
                hist_bins=80, return_samples=0):
    """Sampled residual statistics of a plan, with jackknife errors.

    Returns a dict with means, second moments about the origin (the
    analytic variance convention for these symmetric codes), sigma_L, their
    standard errors, and a coarse histogram per quadrature.  With
    return_samples > 0 the first chunk's draws are included for
    distribution-level tests.
    """
    order, chain = _layer_chain(plan, sr_slope)
    n_chunks = max(1, int(np.ceil(samples / chunk)))
    m = int(np.ceil(samples / n_chunks))
    sums = np.zeros((n_chunks, 4))
    hist_q = hist_p = None
    span = 6.0 * order[0]
    kept = None
    for c in range(n_chunks):
        rng = _chunk_rng(seed, c)
        rq, rp = _sample_plan(order, chain, m, rng)
        sums[c] = [rq.sum(), (rq ** 2).sum(), rp.sum(), (rp ** 2).sum()]
        if c == 0:
            span = 6.0 * max(rq.std(), rp.std(), 1e-12)
            edges = np.linspace(-span, span, hist_bins + 1)
            hist_q = np.zeros(hist_bins)
            hist_p = np.zeros(hist_bins)
            if return_samples > 0:
                kept = (rq[:return_samples].copy(), rp[:return_samples].copy())
        hist_q += np.histogram(rq, bins=edges)[0]
        hist_p += np.histogram(rp, bins=edges)[0]
    total = sums.sum(axis=0)
    n = n_chunks * m

    def moment(col):
        def red(t, k):
            return t[col] / (k * m)
        return red

    def sigma_red(t, k):
        return np.sqrt(0.5 * (t[1] + t[3]) / (k * m))

    out = {
        "samples": n, "chunks": n_chunks, "chunk_size": m, "seed": seed,
        "mean_q": total[0] / n, "mean_p": total[2] / n,
        "var_q": total[1] / n, "var_p": total[3] / n,
        "sigma_L": float(np.sqrt(0.5 * (total[1] + total[3]) / n)),
        "se_mean_q": _jackknife(total, sums, moment(0)),
        "se_var_q": _jackknife(total, sums, moment(1)),
        "se_mean_p": _jackknife(total, sums, moment(2)),
        "se_var_p": _jackknife(total, sums, moment(3)),
        "se_sigma_L": _jackknife(total, sums, sigma_red),
        "hist_edges": edges.tolist(),
        "hist_q": hist_q.tolist(), "hist_p": hist_p.tolist(),
    }
    if kept is not None:
        out["samples_q"], out["samples_p"] = kept
    return out


def pit_chi2(mixture, values, bins=200):
    """Chi-square goodness of fit of draws against a mixture density.

    The mixture CDF maps its own samples to uniform, so equal-width bins on
    [0, 1] are equal-probability bins.
    """
    u = mixture.cdf(np.asarray(values, dtype=float))
    counts, _ = np.histogram(u, bins=bins, range=(0.0, 1.0))
    expected = len(values) / bins
    stat = float(np.sum((counts - expected) ** 2 / expected))
    return {"statistic": stat, "dof": bins - 1,
            "p_value": float(scipy.stats.chi2.sf(stat, bins - 1))}


def mc_fidelity(plan, r, samples, seed=12345, chunk=1_000_000,
                sr_slope="mle"):
    """Sampled transmission fidelity for a squeezed input at parameter r.

    Averages exp(-(rq^2 e^(2r) + rp^2 e^(-2r)) / 2) over end-to-end residual
    draws; the fidelity is the square root of that average.
    """
    order, chain = _layer_chain(plan, sr_slope)
    n_chunks = max(1, int(np.ceil(samples / chunk)))
    m = int(np.ceil(samples / n_chunks))
    tq, tp = np.exp(2.0 * r), np.exp(-2.0 * r)
    sums = np.zeros((n_chunks, 1))
    for c in range(n_chunks):
        rng = _chunk_rng(seed, c)
        rq, rp = _sample_plan(order, chain, m, rng)
        sums[c, 0] = np.exp(-0.5 * (tq * rq ** 2 + tp * rp ** 2)).sum()
    total = sums.sum(axis=0)
    n = n_chunks * m

    def fid(t, k):
        return np.sqrt(t[0] / (k * m))

    return {"samples": n, "chunks": n_chunks, "seed": seed, "r": r,
            "fidelity": float(np.sqrt(total[0] / n)),
            "se_fidelity": _jackknife(total, sums, fid)}
