import math

import numpy as np
import pytest

from irs_parafac.errors import InfeasibleDesign
from irs_parafac.system_model import (PerturbationConfig, SystemConfig, add_noise,
                                      apply_perturbation, build_multibs_scenario,
                                      build_multiuser_scenario, build_scenario,
                                      composite_theta, draw_channels, load_scenario,
                                      make_dft_matrix, save_scenario, ura_response)
from irs_parafac.tensor_core import khatri_rao, kron, numerical_rank, unfold


def test_dft_examples():
    np.testing.assert_allclose(make_dft_matrix(2, 2), [[1, 1], [1, -1]], atol=1e-15)
    A = make_dft_matrix(4, 2)
    assert np.max(np.abs(A.conj().T @ A - 4 * np.eye(2))) < 1e-14
    np.testing.assert_allclose(np.abs(make_dft_matrix(8, 8)), 1.0, rtol=0, atol=1e-15)
    with pytest.raises(InfeasibleDesign):
        make_dft_matrix(3, 4)


def test_config_validation():
    with pytest.raises(ValueError):
        SystemConfig(N=0)
    with pytest.raises(ValueError):
        SystemConfig(channel_model="geometric", R1=4, M=3)
    with pytest.raises(ValueError):
        SystemConfig(channel_model="nope")
    with pytest.raises(ValueError):
        PerturbationConfig(blockage_fraction=1.0)
    cfg = SystemConfig(perturbation=PerturbationConfig())
    assert SystemConfig.from_dict(cfg.to_dict()) == cfg


def test_iid_channels_reproducible_and_unit_variance():
    cfg = SystemConfig(M=2, L=2, N=2)
    a = draw_channels(cfg, np.random.default_rng(5))
    b = draw_channels(cfg, np.random.default_rng(5))
    assert np.array_equal(a.H, b.H) and np.array_equal(a.G, b.G)
    rng = np.random.default_rng(6)
    samples = np.concatenate([draw_channels(cfg, rng).H.ravel() for _ in range(25000)])
    assert np.mean(np.abs(samples) ** 2) == pytest.approx(1.0, rel=0.02)


def test_geometric_single_path_rank_one():
    cfg = SystemConfig(M=4, L=4, N=16, K=16, T=4, channel_model="geometric")
    for seed in range(10):
        ch = draw_channels(cfg, np.random.default_rng(seed))
        for A in (ch.H, ch.G):
            s = np.linalg.svd(A, compute_uv=False)
            assert s[1] < 1e-12 * s[0]
        geo = ch.geometry
        H = geo["A_IRS"] @ np.diag(geo["alpha"]) @ geo["A_BS"].conj().T
        assert np.array_equal(H, ch.H)


def test_geometric_rank_equals_path_count():
    cfg = SystemConfig(M=6, L=5, N=16, K=16, T=6, channel_model="geometric", R1=3, R2=2)
    for seed in range(10):
        ch = draw_channels(cfg, np.random.default_rng(seed))
        assert numerical_rank(ch.H, 1e-10) == 3
        assert numerical_rank(ch.G, 1e-10) == 2


def test_ura_response_unit_modulus():
    A = ura_response(10, [0.3, -0.2], [0.1, 1.2])
    assert A.shape == (10, 2)
    np.testing.assert_allclose(np.abs(A), 1.0)


def test_noiseless_scenario():
    sc = build_scenario(SystemConfig(), np.random.default_rng(0))
    assert not np.any(sc.noise)
    assert np.array_equal(sc.Y, sc.Y_clean) and sc.sigma2 == 0.0
    assert np.array_equal(sc.S_actual, sc.S_ideal)


@pytest.mark.parametrize("snr", [-5.0, 0.0, 13.7, 40.0])
def test_snr_identity_exact(snr):
    sc = build_scenario(SystemConfig(snr_db=snr), np.random.default_rng(1))
    realized = 10 * np.log10(np.linalg.norm(sc.Y_clean) ** 2 / np.linalg.norm(sc.noise) ** 2)
    assert abs(realized - snr) < 1e-10
    assert sc.sigma2 == pytest.approx(np.linalg.norm(sc.noise) ** 2 / sc.noise.size)
    np.testing.assert_array_equal(sc.Y, sc.Y_clean + sc.noise)


def test_slices_and_unfoldings(rng):
    sc = build_scenario(SystemConfig(M=3, L=2, N=4, K=4, T=3, snr_db=10), rng)
    G, H, S, X = sc.channels.G, sc.channels.H, sc.S_actual, sc.X
    for k in range(4):
        slice_k = G @ np.diag(S[k]) @ H @ X.T
        assert np.max(np.abs(sc.Y_clean[:, :, k] - slice_k)) < 1e-12
    Z = X @ H.T
    assert np.max(np.abs(unfold(sc.Y_clean, 1) - G @ khatri_rao(S, Z).T)) < 1e-12
    assert np.max(np.abs(unfold(sc.Y_clean, 2) - Z @ khatri_rao(S, G).T)) < 1e-12
    assert np.max(np.abs(unfold(sc.Y_clean, 3) - S @ khatri_rao(Z, G).T)) < 1e-12


def test_linear_model_consistency(rng):
    # vec(Y3^T) = (S kron X kron I_L) theta
    sc = build_scenario(SystemConfig(M=2, L=3, N=3, K=4, T=2), rng)
    y = unfold(sc.Y_clean, 3).T.reshape(-1, order="F")
    U = kron(kron(sc.S_actual, sc.X), np.eye(3))
    assert np.max(np.abs(y - U @ sc.theta)) < 1e-12


def test_theta_layout(rng):
    H, G = rng.standard_normal((4, 3)), rng.standard_normal((2, 4))
    th = composite_theta(H, G)
    M, L = 3, 2
    for n in range(4):
        for m in range(M):
            for l in range(L):
                assert th[n * M * L + m * L + l] == H[n, m] * G[l, n]


def test_scenario_determinism():
    cfg = SystemConfig(snr_db=5, perturbation=PerturbationConfig())
    a = build_scenario(cfg, np.random.default_rng(9))
    b = build_scenario(cfg, np.random.default_rng(9))
    for name in ("Y", "S_actual", "X", "noise"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_infeasible_dft_design():
    with pytest.raises(InfeasibleDesign):
        build_scenario(SystemConfig(N=5, K=4), np.random.default_rng(0))
    sc = build_scenario(SystemConfig(N=5, K=4, random_phase_fallback=True),
                        np.random.default_rng(0))
    np.testing.assert_allclose(np.abs(sc.S_ideal), 1.0)


def test_perturbation_statistics():
    S = make_dft_matrix(100, 64)
    zeros = [np.mean(apply_perturbation(S, PerturbationConfig(0.2, 0.01),
                                        np.random.default_rng(s)) == 0) for s in range(5)]
    assert all(abs(z - 0.2) < 0.02 for z in zeros)
    ones = np.ones((1000, 1000))
    P = apply_perturbation(ones, PerturbationConfig(0.0, 0.01), np.random.default_rng(3))
    assert np.mean(np.abs(P) ** 2) == pytest.approx(0.01, rel=0.05)
    assert np.all(P != 0)


def test_add_noise_infinite_snr(rng):
    Y = rng.standard_normal((2, 2, 2)) + 0j
    out, noise, s2 = add_noise(Y, math.inf, rng)
    assert s2 == 0 and not np.any(noise) and np.array_equal(out, Y)


def test_multiuser_matches_per_user_sum():
    cfg = SystemConfig(M=2, L=1, N=2, K=2, T=2, users=2)
    sc = build_multiuser_scenario(cfg, np.random.default_rng(4))
    H = sc.bs_channels[0]
    Xbar = make_dft_matrix(2, 2)
    for k in range(2):
        ref = sum(H.T @ np.diag(sc.S_actual[k]) @ G.T @ Xbar[:, [u]].T
                  for u, G in enumerate(sc.user_channels))
        assert np.max(np.abs(sc.Y_clean[:, :, k] - ref)) < 1e-12
    Gbar = sc.channels.H.T
    for u, G in enumerate(sc.user_channels):
        assert np.array_equal(Gbar[u:u + 1], G)


def test_multiuser_needs_enough_pilots():
    with pytest.raises(InfeasibleDesign):
        build_multiuser_scenario(SystemConfig(M=2, L=2, N=2, K=2, T=3, users=2),
                                 np.random.default_rng(0))


def test_single_user_through_multiuser_builder():
    cfg = SystemConfig(M=3, L=2, N=4, K=4, T=3)
    sc = build_multiuser_scenario(cfg, np.random.default_rng(2))
    H, G = sc.bs_channels[0], sc.user_channels[0]
    ref = np.einsum("mn,tn,kn->mtk", H.T, make_dft_matrix(3, 2) @ G, sc.S_actual)
    assert np.max(np.abs(sc.Y_clean - ref)) < 1e-12


def test_multibs_block_stacking():
    cfg = SystemConfig(M=2, L=1, N=3, K=3, T=2, users=1, bs_count=2)
    sc = build_multibs_scenario(cfg, np.random.default_rng(8))
    Xg = make_dft_matrix(2, 1) @ sc.user_channels[0]
    for p, H in enumerate(sc.bs_channels):
        for k in range(3):
            block = H.T @ np.diag(sc.S_actual[k]) @ Xg.T
            assert np.max(np.abs(sc.Y_clean[2 * p:2 * p + 2, :, k] - block)) < 1e-13


def test_build_scenario_dispatches_multi():
    cfg = SystemConfig(M=2, L=1, N=3, K=3, T=2, users=2)
    sc = build_scenario(cfg, np.random.default_rng(1))
    assert sc.user_channels is not None and len(sc.user_channels) == 2


def test_save_load_roundtrip(tmp_path, rng):
    sc = build_scenario(SystemConfig(snr_db=3.0, perturbation=PerturbationConfig()), rng)
    path = tmp_path / "scn.npz"
    save_scenario(path, sc)
    back = load_scenario(path)
    assert back.config == sc.config and back.sigma2 == sc.sigma2
    for name in ("Y", "Y_clean", "noise", "S_ideal", "S_actual", "X"):
        assert np.array_equal(getattr(back, name), getattr(sc, name))
    assert np.array_equal(back.channels.H, sc.channels.H)
