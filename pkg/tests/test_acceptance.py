"""End-to-end acceptance gates for the whole package.

Every test here pins a published benchmark number, a closed-form limit, or a
cross-module consistency requirement, with explicit tolerances.  The
squeezing-repetition four-mode benchmark row is expected to fail: the
published value is bracketed by, but not equal to, anything this
implementation can produce, and the assertion message carries the analysis
pointer.
"""

import itertools

import numpy as np
import pytest

from gkpec.analysis import (capacity_lower_bound, db_to_r,
                            fidelity_gaussian_approx, fidelity_no_qec,
                            fidelity_with_qec, threshold_diagonal,
                            two_mode_optimum)
from gkpec.codes import (sr_asymptotic_optimum, tms_asymptotic_optimum,
                         tms_residual_mixture)
from gkpec.concat import (CodePlan, asymptotic_recursion, evaluate_plan,
                          plan_sigma, sr_layer_update, three_mode_explicit,
                          tms_layer_update)
from gkpec.memory import memory_full_channel, memory_sigmas
from gkpec.mixtures import GaussianMixture1D
from gkpec.montecarlo import mc_fidelity, mc_residual, pit_chi2
from gkpec.optimize import (FINAL_MAX_TERMS, optimize_full,
                            optimize_gains_global, optimize_gains_greedy,
                            sample_generator)
from gkpec.reduction import random_channel, reduce_channel, verify_reduction


# -- 1: homogeneous benchmark rows (equal channels, STD 0.1 each) -----------

# (family, slope mode, published gains, published sigma_L, half-window)
BENCH_ROWS = [
    ("tms", "mle", (4.807,), 0.03580, 2e-5),
    ("tms", "mle", (3.541, 6.949), 0.01632, 2e-5),
    ("tms", "mle", (3.037, 5.376, 7.041), 0.008319, 2e-6),
    ("sr", "simplified", (2.933,), 0.03583, 2e-5),
    ("sr", "simplified", (2.532, 2.752), 0.01559, 2e-5),
    ("sr", "simplified", (2.242, 2.529, 2.533), 0.007538, 2e-6),
]


@pytest.mark.parametrize("family,slope,pub_gains,pub_value,tol", BENCH_ROWS,
                         ids=["tms-2", "tms-3", "tms-4", "sr-2", "sr-3",
                              "sr-4"])
def test_homogeneous_benchmark_rows(family, slope, pub_gains, pub_value, tol):
    n = len(pub_gains) + 1
    sigmas = [0.1] * n
    plan, found = optimize_gains_global(family, sigmas, sr_slope=slope)
    # the optimizer must never do worse than the published operating point
    assert found <= pub_value + tol

    at_published = plan_sigma(CodePlan(family, sigmas, pub_gains),
                              max_terms=FINAL_MAX_TERMS, sr_slope=slope)
    value_ok = abs(found - pub_value) <= tol
    published_ok = abs(at_published - pub_value) <= tol
    assert value_ok or published_ok, (
        "published value %.6g is reachable neither as the optimum (%.6g) nor "
        "as the evaluation at the published gains (%.6g) within +-%.0e; "
        "analysis: /root/notes/decisions.md" %
        (pub_value, found, at_published, tol))

    gains_ok = all(abs(g - p) <= 0.05 for g, p in zip(plan.gains, pub_gains))
    assert gains_ok or value_ok


# -- 2: correlated-loss case study (6 uses, mu=0.9, kappa=0.8) --------------

def test_memory_case_study_ordering_sweep():
    sig, _ = memory_sigmas(6, 0.9, 0.8)
    printed = [0.0792, 0.0881, 0.107, 0.150, 0.269, 0.839]
    half_unit = [5e-5, 5e-5, 5e-4, 5e-4, 5e-4, 5e-4]
    for got, want, atol in zip(sig, printed, half_unit):
        assert abs(got - want) <= atol

    thr = threshold_diagonal("tms")
    out = optimize_full("tms", list(sig), permutations="all", jobs=4,
                        sigma_threshold=thr)
    assert out["dropped_modes"] == [6]
    best, second = out["results"][0], out["results"][1]
    assert best["permutation"] == [4, 3, 1, 2, 5]
    assert abs(best["sigma_L"] - 0.008652) <= 2e-5
    assert second["permutation"] == [4, 3, 2, 1, 5]
    assert abs(second["sigma_L"] - 0.008681) <= 2e-5
    # lexicographic rank of the winner among all 120 orderings, 1-based
    ordered = sorted(itertools.permutations(range(1, 6)))
    assert ordered.index(tuple(best["permutation"])) + 1 == 85


# -- 3: equal-noise correction thresholds ------------------------------------

def test_equal_noise_thresholds():
    assert abs(threshold_diagonal("tms") - 0.56) <= 0.02
    assert abs(threshold_diagonal("sr") - 0.41) <= 0.02


# -- 4: small-noise scaling law and capacity floor ---------------------------

def test_small_noise_scaling_and_capacity_floor():
    # the fitted slope approaches n from below with a deficit of roughly
    # (n - 1) / (2 ln(1 / sigma_bar)) from logarithmic prefactors, so each n
    # gets its own band deep enough to bring that bias inside the tolerance
    bands = {2: (-3.0, -2.0), 3: (-4.0, -3.0), 4: (-5.5, -4.5)}
    for n in (2, 3, 4):
        rng = np.random.default_rng(4000 + n)
        lo, hi = bands[n]
        logs_bar, logs_opt = [], []
        for _ in range(50):
            sigmas = sorted(10.0 ** rng.uniform(lo, hi, size=n))
            sigmas = [float(s) for s in sigmas]
            _, v = optimize_gains_global("tms", sigmas, starts=4,
                                         max_evals=800, seed=11)
            floor = capacity_lower_bound(sigmas)["variance_exact"]
            assert v ** 2 >= floor, (sigmas, v ** 2, floor)
            logs_bar.append(np.mean(np.log(sigmas)))
            logs_opt.append(np.log(v))
        slope = np.polyfit(logs_bar, logs_opt, 1)[0]
        assert abs(slope - n) <= 0.15, (n, slope)


# -- 5: asymptotic closed forms vs the exact optimizer -----------------------

def test_asymptotic_formula_consistency():
    G_opt, v_opt = two_mode_optimum("tms", 1e-3, 1e-3)
    G_form, v_form = tms_asymptotic_optimum(1e-3, 1e-3)
    assert abs(G_opt - G_form) / G_form <= 0.10
    assert abs(v_opt - v_form) / v_form <= 0.10

    _, v_sr = two_mode_optimum("sr", 1e-3, 1e-3)
    v_sr_form = sr_asymptotic_optimum(1e-3, 1e-3)
    assert abs(v_sr - v_sr_form) / v_sr_form <= 0.10

    for triple in ((1e-3, 1e-3, 1e-3), (2e-3, 5e-4, 1e-3),
                   (5e-3, 5e-3, 5e-3)):
        rec, _ = asymptotic_recursion(triple)
        exp = three_mode_explicit(*triple)
        assert abs(rec - exp) <= 1e-12 * exp


# -- 6: Monte Carlo oracle equivalence ---------------------------------------

def _exact_se(mix, n):
    return np.sqrt((mix.fourth_moment() - mix.variance() ** 2) / n)


def _check_config(family, sigmas, gains, seed, samples=10_000_000):
    plan = CodePlan(family, sigmas, gains)
    rep = evaluate_plan(plan, sr_slope="mle")
    out = mc_residual(plan, samples, seed=seed, chunk=1_000_000,
                      sr_slope="mle", return_samples=1_000_000)
    for axis, mix in (("q", rep.mixture_q), ("p", rep.mixture_p)):
        # jackknife SE is the reported error bar; the exact-moment SE guards
        # against its downward bias when rare far peaks carry the variance
        se = max(out["se_var_" + axis], _exact_se(mix, samples))
        pull = (out["var_" + axis] - mix.variance()) / se
        assert abs(pull) <= 3.0, (family, sigmas, gains, axis, pull)
        fit = pit_chi2(mix, out["samples_" + axis])
        assert fit["p_value"] > 1e-3, (family, sigmas, gains, axis, fit)


def test_monte_carlo_oracle_equivalence():
    rng = np.random.default_rng(2211)
    for family, lo, hi in (("tms", 1.3, 7.0), ("sr", 0.9, 3.5)):
        for n in (2, 3):
            rows = sample_generator("realistic", n, 20,
                                    seed=6000 + n + (family == "sr"))
            for i, row in enumerate(rows):
                gains = 10.0 ** rng.uniform(np.log10(lo), np.log10(hi),
                                            n - 1)
                _check_config(family, [float(s) for s in row],
                              [float(g) for g in gains], seed=7000 + i)


# -- 7: channel-reduction round trip -----------------------------------------

def test_reduction_round_trip_corpus():
    rng = np.random.default_rng(909)
    for i in range(100):
        n = 1 + i % 4
        c = random_channel(n, rng)
        res = reduce_channel(c)
        assert verify_reduction(c, res) < 1e-8

    c = memory_full_channel(6, 0.9, 0.8)
    res = reduce_channel(c)
    want, _ = memory_sigmas(6, 0.9, 0.8)
    assert np.allclose(res.sigmas, want, atol=1e-6)


# -- 8: fidelity pipeline -----------------------------------------------------

def test_fidelity_criteria():
    r = db_to_r(20.0)
    # bare channel: closed form against the sampling pipeline
    bare = CodePlan("tms", (0.1,), ())
    mc = mc_fidelity(bare, r, 1_000_000, seed=31, chunk=100_000)
    want = fidelity_no_qec(r, 0.1)
    assert abs(mc["fidelity"] - want) <= 3 * mc["se_fidelity"]

    # exact mixture fidelity dominates its Gaussian surrogate on the diagonal
    improvements = {}
    for s in np.linspace(0.05, 0.3, 15):
        G, v = two_mode_optimum("tms", s, s)
        q, p = tms_residual_mixture(s, s, G)
        f_exact = fidelity_with_qec(r, q, p)
        assert f_exact >= fidelity_gaussian_approx(r, v) - 1e-12
        improvements[round(float(s), 4)] = f_exact - fidelity_no_qec(r, s)

    # the improvement region is nonempty and contains the (0.1, 0.1) point
    G, _ = two_mode_optimum("tms", 0.1, 0.1)
    q, p = tms_residual_mixture(0.1, 0.1, G)
    gain_at_point = fidelity_with_qec(r, q, p) - fidelity_no_qec(r, 0.1)
    assert gain_at_point > 0
    assert any(v > 0 for v in improvements.values())


# -- 9: invariant suite over a seeded corpus ----------------------------------

def _layer_masses(plan, sr_slope="mle"):
    order = plan.stacked_sigmas()
    mix_q = GaussianMixture1D.single(order[0])
    mix_p = mix_q
    masses = []
    for i, G in enumerate(plan.gains):
        if plan.family == "tms":
            mix_q, mix_p, _ = tms_layer_update(mix_q, mix_p, order[i + 1], G)
        else:
            mix_q, mix_p, _ = sr_layer_update(mix_q, mix_p, order[i + 1], G,
                                              slope_mode=sr_slope)
        masses.append((mix_q.total_mass(), mix_p.total_mass()))
    return mix_q, mix_p, masses


def test_invariant_suite():
    for family in ("tms", "sr"):
        for n in (2, 3):
            rows = sample_generator("realistic", n, 3,
                                    seed=9000 + n + 7 * (family == "sr"))
            for row in rows:
                sigmas = [float(s) for s in row]
                gplan, _ = optimize_gains_greedy(family, sigmas)
                plan, v_global = optimize_gains_global(
                    family, sigmas, starts=4, max_evals=600, seed=17)
                v_greedy = plan_sigma(gplan, max_terms=FINAL_MAX_TERMS)
                assert v_global <= v_greedy + 1e-12

                mix_q, mix_p, masses = _layer_masses(plan)
                for mq, mp in masses:
                    assert abs(mq - 1.0) < 1e-9
                    assert abs(mp - 1.0) < 1e-9
                assert mix_q.check_symmetric()
                assert mix_p.check_symmetric()
                assert mix_q.truncation_mass < 1e-6

    # identical channels make the stacking order irrelevant
    for family, gains in (("tms", (3.0, 5.0)), ("sr", (2.5, 2.7))):
        vals = [plan_sigma(CodePlan(family, (0.1,) * 3, gains, perm))
                for perm in itertools.permutations((1, 2, 3))]
        assert np.allclose(vals, vals[0], rtol=1e-12)
