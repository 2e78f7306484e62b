"""Channel reduction: factorization accuracy, flags, and special cases."""

import numpy as np
import pytest

from gkpec.gaussian import (GaussianChannel, awgn_product, channel_from_loss,
                            random_symplectic, squeezer, unitary_channel)
from gkpec.memory import memory_full_channel, memory_sigmas
from gkpec.reduction import (ERASURE_SIGMA, random_channel, reduce_channel,
                             verify_reduction, williamson)


def test_williamson_on_random_spd():
    rng = np.random.default_rng(3)
    for n in (1, 2, 3):
        M = rng.normal(size=(2 * n, 2 * n))
        V = M @ M.T + 0.1 * np.eye(2 * n)
        S, nu = williamson(V)
        D = np.kron(np.diag(nu), np.eye(2))
        assert np.allclose(S @ D @ S.T, V, atol=1e-10)
        assert np.all(nu > 0)


def test_awgn_product_reduces_to_itself():
    stds = [0.05, 0.2, 0.4]
    res = reduce_channel(awgn_product(stds))
    assert np.allclose(res.sigmas, sorted(stds), atol=1e-12)
    assert np.allclose(res.scales, 1.0, atol=1e-12)
    assert res.flags == []
    assert verify_reduction(awgn_product(stds), res) < 1e-12


def test_unitary_channel_has_zero_sigmas():
    rng = np.random.default_rng(11)
    c = unitary_channel(random_symplectic(2, rng))
    res = reduce_channel(c)
    assert np.allclose(res.sigmas, 0.0, atol=1e-12)
    assert verify_reduction(c, res) < 1e-8


def test_loss_channel_uses_fast_path():
    c = channel_from_loss(0.81, 0.12)
    res = reduce_channel(c)
    assert res.stages[0]["op"] == "complex_svd"
    assert verify_reduction(c, res) < 1e-12
    # scale sqrt(eta), noise 0.12 + (1-0.81)/2 on top of the scale lift
    want = np.sqrt(0.12 + (1 - 0.81) / 2 + 0.5 * abs(1 - 0.81))
    assert np.isclose(res.sigmas[0], want, rtol=1e-12)


def test_squeezed_transmission_uses_general_path():
    rng = np.random.default_rng(5)
    T = squeezer(1.7) @ random_symplectic(1, rng) * 0.9
    c = GaussianChannel(T, 0.05 * np.eye(2))
    res = reduce_channel(c)
    assert res.stages[0]["op"] == "symplectic_svd"
    assert verify_reduction(c, res) < 1e-9


def test_random_channels_reassemble():
    rng = np.random.default_rng(2024)
    for n in (1, 2, 3, 4):
        for _ in range(8):
            c = random_channel(n, rng)
            res = reduce_channel(c)
            err = verify_reduction(c, res)
            assert err < 1e-8
            # leftover cross-mode correlations must be announced
            if res.residual_error > 1e-8:
                assert "correlated_noise" in res.flags
            # sigmas come out sorted
            assert np.all(np.diff(res.sigmas) >= -1e-12)


def test_memory_channel_reduction_matches_closed_form():
    n, mu, kappa = 5, 0.9, 0.8
    c = memory_full_channel(n, mu, kappa)
    res = reduce_channel(c)
    assert verify_reduction(c, res) < 1e-10
    want, _ = memory_sigmas(n, mu, kappa)
    assert np.allclose(res.sigmas, want, atol=1e-10)


def test_irreducible_transmission_is_flagged():
    # q -> q, p -> -p is antisymplectic; no symplectic factorization exists
    c = GaussianChannel(np.diag([1.0, -1.0]), 0.04 * np.eye(2))
    res = reduce_channel(c)
    assert "irreducible" in res.flags
    assert "degraded" in res.flags
    # the reconstruction itself stays exact through the fallback
    assert verify_reduction(c, res) < 1e-12


def test_erasure_mode_gets_surrogate_sigma():
    c = GaussianChannel(np.zeros((2, 2)), 0.04 * np.eye(2))
    res = reduce_channel(c)
    assert "erasure_clamped" in res.flags
    assert res.sigmas[0] == ERASURE_SIGMA


def test_correlated_noise_flag():
    N = np.array([[0.05, 0.03], [0.03, 0.05]])
    # a single mode Williamson-cleans any 2x2 noise, so correlation needs
    # two modes in one scale group
    T = np.eye(4)
    NN = np.zeros((4, 4))
    NN[:2, :2] = N
    NN[2:, 2:] = N
    NN[0, 2] = NN[2, 0] = 0.02
    c = GaussianChannel(T, NN)
    res = reduce_channel(c)
    assert verify_reduction(c, res) < 1e-10 or res.residual_error > 0
    assert "correlated_noise" in res.flags or res.residual_error < 1e-10


def test_not_cp_flag():
    # bare amplifier with no added noise is not completely positive
    c = GaussianChannel(np.sqrt(2.0) * np.eye(2), np.zeros((2, 2)))
    res = reduce_channel(c)
    assert "not_cp" in res.flags


def test_result_json_dict():
    res = reduce_channel(awgn_product([0.1, 0.2]))
    d = res.to_json_dict()
    for key in ("post", "pre", "scales", "iso_noise", "sigmas", "stages",
                "flags", "residual_error"):
        assert key in d
