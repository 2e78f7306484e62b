"""Memory-mode cascade: transfer matrix, effective noise, mode selection."""

import numpy as np
import pytest

from gkpec.memory import (memory_full_channel, memory_matrix, memory_sigmas,
                          memory_sigmas_asymptotic, usable_modes)

# exact effective STDs of the six-use cascade at mu=0.9, kappa=0.8,
# frozen from the SVD closed form
MEMORY_CASE = [0.0791600442390938, 0.08811527522530357, 0.10737569812161347,
               0.14963292339972395, 0.26915439053617707, 0.8386835537023974]


def test_matrix_entries():
    M = memory_matrix(3, 0.9, 0.8)
    root = np.sqrt(0.72)
    assert np.isclose(M[0, 0], np.sqrt(0.8))
    assert np.isclose(M[2, 0], -(0.2) * np.sqrt(0.9) * root)
    assert np.isclose(M[2, 1], -(0.2) * np.sqrt(0.9))
    assert np.allclose(np.triu(M, 1), 0.0)


def test_matrix_is_contraction():
    # environment in vacuum requires singular values at most 1
    for mu, kappa in ((0.9, 0.8), (0.5, 0.3), (1.0, 1.0), (0.0, 0.7)):
        s = np.linalg.svd(memory_matrix(7, mu, kappa), compute_uv=False)
        assert s.max() <= 1.0 + 1e-12


def test_single_use_is_plain_loss():
    sig, order = memory_sigmas(1, 0.9, 0.8)
    assert order == [0]
    assert np.isclose(sig[0], np.sqrt(1 - 0.8), rtol=1e-12)


def test_frozen_sigmas():
    sig, order = memory_sigmas(6, 0.9, 0.8)
    assert np.allclose(sig, MEMORY_CASE, rtol=1e-12)
    assert sorted(order) == list(range(6))
    assert np.all(np.diff(sig) >= 0)


def test_full_channel_is_cp():
    c = memory_full_channel(6, 0.9, 0.8)
    assert c.n == 6
    assert c.is_cp()


def test_asymptotic_estimate_differs_at_small_n():
    exact, _ = memory_sigmas(6, 0.9, 0.8)
    approx, order = memory_sigmas_asymptotic(6, 0.9, 0.8)
    assert len(approx) == 6
    assert sorted(order) == list(range(1, 7))
    assert not np.allclose(exact, approx, rtol=1e-3)


def test_usable_modes_threshold():
    assert usable_modes(MEMORY_CASE, 0.5584) == [0, 1, 2, 3, 4]
    assert usable_modes(MEMORY_CASE, 0.05) == []


def test_param_validation():
    with pytest.raises(ValueError):
        memory_matrix(0, 0.9, 0.8)
    with pytest.raises(ValueError):
        memory_matrix(3, 1.1, 0.8)
    with pytest.raises(ValueError):
        memory_sigmas_asymptotic(3, 0.9, -0.1)
