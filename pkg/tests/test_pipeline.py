"""End-to-end pipeline behavior: aggregation, lossless path, determinism,
tiling, adaptive orchestration, multiband equivalences."""

import numpy as np
import pytest

from circdenoise.config import AdaptiveConfig, DenoiseConfig
from circdenoise.errors import CoordError, DimsError, NumericError, PatchSizeError
from circdenoise.metrics import add_awgn, psnr
from circdenoise.phantoms import filtered_texture, flat, multiband_sine
from circdenoise.pipeline import (
    Accumulator,
    aggregate,
    denoise,
    denoise_multiband,
    denoise_with_stats,
    tile_bounds,
)

RNG = np.random.default_rng


# ------------------------------------------------------------- aggregation

def test_aggregate_single_patch():
    acc = Accumulator.zeros((8, 8, 1))
    est = np.full((4, 4, 1, 1), 9.0)
    aggregate(acc, est, np.array([[2, 2]]))
    out = np.divide(acc.value_sum, acc.weight_sum,
                    out=np.zeros_like(acc.value_sum),
                    where=acc.weight_sum > 0)
    assert out[3, 3, 0] == 9.0
    assert acc.weight_sum[0, 0, 0] == 0.0


def test_aggregate_overlap_averages():
    acc = Accumulator.zeros((6, 6, 1))
    est = np.zeros((4, 4, 1, 2))
    est[:, :, 0, 0] = 10.0
    est[:, :, 0, 1] = 20.0
    aggregate(acc, est, np.array([[0, 0], [2, 2]]))
    out = acc.value_sum / np.maximum(acc.weight_sum, 1)
    assert out[3, 3, 0] == pytest.approx(15.0)   # overlap region
    assert out[0, 0, 0] == pytest.approx(10.0)
    assert out[5, 5, 0] == pytest.approx(20.0)


def test_aggregate_identical_estimates_idempotent_value():
    acc = Accumulator.zeros((4, 4, 1))
    est = np.full((4, 4, 1, 5), 3.5)
    aggregate(acc, est, np.zeros((5, 2), dtype=int))
    out = acc.value_sum / acc.weight_sum
    np.testing.assert_allclose(out, 3.5)


def test_aggregate_out_of_bounds():
    acc = Accumulator.zeros((8, 8, 1))
    with pytest.raises(CoordError):
        aggregate(acc, np.zeros((4, 4, 1, 1)), np.array([[6, 0]]))


# ------------------------------------------------------------ tiling bounds

def test_tile_bounds_exact_and_remainder():
    assert tile_bounds(256, 256, 256) == [(0, 256, 0, 256)]
    # 300 = 256 + 44: the 44-pixel remainder merges into the single tile
    bounds = tile_bounds(300, 256, 256)
    assert bounds == [(0, 300, 0, 256)]
    bounds = tile_bounds(512, 700, 256)
    assert (0, 256, 0, 256) in bounds
    rows = {(r0, r1) for r0, r1, _, _ in bounds}
    cols = {(c0, c1) for _, _, c0, c1 in bounds}
    assert rows == {(0, 256), (256, 512)}
    assert cols == {(0, 256), (256, 700)}


def test_tile_bounds_cover_everything():
    for h, w in [(256, 256), (300, 520), (128, 900)]:
        hit = np.zeros((h, w), dtype=int)
        for r0, r1, c0, c1 in tile_bounds(h, w, 256):
            hit[r0:r1, c0:c1] += 1
        assert (hit == 1).all(), f"{h}x{w}: tiles must partition the image"


# ----------------------------------------------------------- core pipeline

def test_sigma_zero_is_lossless():
    rng = RNG(0)
    img = rng.uniform(0, 255, size=(48, 48, 3))
    out = denoise(img, DenoiseConfig(sigma=0.0))
    assert np.max(np.abs(out - img)) < 1e-6


def test_denoising_raises_psnr():
    clean = filtered_texture(size=64, seed=1)
    noisy = add_awgn(clean, 25.0, seed=2)
    out = denoise(noisy, DenoiseConfig(sigma=25.0))
    assert psnr(clean, out) > psnr(clean, noisy) + 5.0


def test_flat_region_suppression():
    clean = flat(size=64)
    noisy = add_awgn(clean, 25.0, seed=3)
    out = denoise(noisy, DenoiseConfig(sigma=25.0))
    assert float(np.std(out - clean)) < 0.2 * 25.0


def test_output_range_and_finiteness():
    rng = RNG(4)
    img = rng.uniform(-50, 300, size=(32, 32, 1))   # out-of-range input values
    out = denoise(img, DenoiseConfig(sigma=10.0))
    assert np.all(np.isfinite(out))
    assert out.min() >= 0.0 and out.max() <= 255.0


def test_repeat_run_determinism():
    clean = filtered_texture(size=48, seed=5)
    noisy = add_awgn(clean, 25.0, seed=6)
    cfg = DenoiseConfig(sigma=25.0)
    a = denoise(noisy, cfg)
    b = denoise(noisy, cfg)
    np.testing.assert_array_equal(a, b)


def test_thread_count_invariance():
    clean = filtered_texture(size=64, seed=7)
    noisy = add_awgn(clean, 25.0, seed=8)
    out1 = denoise(noisy, DenoiseConfig(sigma=25.0, threads=1))
    out2 = denoise(noisy, DenoiseConfig(sigma=25.0, threads=2))
    out3 = denoise(noisy, DenoiseConfig(sigma=25.0, threads=3))
    np.testing.assert_array_equal(out1, out2)
    np.testing.assert_array_equal(out1, out3)


def test_shared_basis_identity_non_adaptive():
    clean = filtered_texture(size=48, seed=9)
    _, stats = denoise_with_stats(add_awgn(clean, 10.0, seed=0),
                                  DenoiseConfig(sigma=10.0))
    assert len(set(stats.basis_ids)) == 1


def test_input_validation():
    cfg = DenoiseConfig(sigma=10.0)
    with pytest.raises(PatchSizeError):
        denoise(np.zeros((4, 4, 1)), cfg)
    with pytest.raises(DimsError):
        denoise(np.zeros((32, 32, 2)), cfg)          # srgb wants 1 or 3 bands
    with pytest.raises(DimsError):
        denoise(np.zeros((32, 32, 1)), cfg, profile="widefield")
    bad = np.full((32, 32, 1), np.nan)
    with pytest.raises(NumericError):
        denoise(bad, cfg)


def test_config_validation_rejects_bad_group_size():
    with pytest.raises(Exception):
        denoise(np.zeros((32, 32, 1)), DenoiseConfig(sigma=1.0, group_size=12))


# ----------------------------------------------------------- adaptive paths

def test_adaptive_baseline_runs_and_reports():
    clean = filtered_texture(size=64, seed=10)
    noisy = add_awgn(clean, 25.0, seed=11)
    cfg = DenoiseConfig(sigma_source="baseline", adaptive=True, seed=0)
    out, stats = denoise_with_stats(noisy, cfg)
    assert stats.n_tiles == 1
    model = stats.sigma_models[0]
    assert model.source == "baseline-estimator"
    assert abs(model.sigma_est - 25.0) < 5.0
    assert stats.adjusted_fraction in (0.0, 1.0)
    assert np.all(np.isfinite(out))


def test_adaptive_tiles_and_per_tile_basis():
    clean = filtered_texture(size=96, seed=12)
    noisy = add_awgn(clean, 15.0, seed=13)
    acfg = AdaptiveConfig(tile=48)
    cfg = DenoiseConfig(sigma=15.0, adaptive=True, adaptive_cfg=acfg, seed=1)
    out, stats = denoise_with_stats(noisy, cfg)
    assert stats.n_tiles == 4
    assert len(stats.sigma_models) == 4
    assert len(set(stats.basis_ids)) == 4, "adaptive default trains per tile"

    shared = DenoiseConfig(sigma=15.0, adaptive=True, adaptive_cfg=acfg,
                           basis_per_tile=False, seed=1)
    _, stats2 = denoise_with_stats(noisy, shared)
    assert len(set(stats2.basis_ids)) == 1, "explicit override shares one basis"


def test_adaptive_user_sigma_vote_changes_only_scale():
    clean = filtered_texture(size=64, seed=14)
    noisy = add_awgn(clean, 25.0, seed=15)
    cfg = DenoiseConfig(sigma=25.0, adaptive=True, seed=2)
    _, stats = denoise_with_stats(noisy, cfg)
    m = stats.sigma_models[0]
    assert m.sigma_est == 25.0
    assert m.sigma_hat in (25.0, pytest.approx(25.0 / 1.2))
    assert m.source == "user"


def test_external_sigmas_happy_and_mismatch():
    clean = filtered_texture(size=96, seed=16)
    noisy = add_awgn(clean, 20.0, seed=17)
    acfg = AdaptiveConfig(tile=48)
    good = DenoiseConfig(sigma_source="external", external_sigmas=(20.0,) * 4,
                         adaptive=True, adaptive_cfg=acfg)
    _, stats = denoise_with_stats(noisy, good)
    assert [m.source for m in stats.sigma_models] == ["external"] * 4
    assert [m.sigma_est for m in stats.sigma_models] == [20.0] * 4

    bad = DenoiseConfig(sigma_source="external", external_sigmas=(20.0, 20.0),
                        adaptive=True, adaptive_cfg=acfg)
    with pytest.raises(DimsError):
        denoise(noisy, bad)


def test_external_single_sigma_non_adaptive():
    clean = filtered_texture(size=48, seed=18)
    noisy = add_awgn(clean, 20.0, seed=19)
    cfg = DenoiseConfig(sigma_source="external", external_sigmas=(20.0,))
    ref = denoise(noisy, DenoiseConfig(sigma=20.0))
    np.testing.assert_array_equal(denoise(noisy, cfg), ref)


def test_adaptive_determinism():
    clean = filtered_texture(size=64, seed=20)
    noisy = add_awgn(clean, 25.0, seed=21)
    cfg = DenoiseConfig(sigma_source="baseline", adaptive=True, seed=5)
    a = denoise(noisy, cfg)
    b = denoise(noisy, cfg)
    np.testing.assert_array_equal(a, b)


# -------------------------------------------------------------- multiband

def test_multiband_single_band_equals_srgb_gray():
    clean = filtered_texture(size=48, seed=22)
    noisy = add_awgn(clean, 15.0, seed=23)
    cfg = DenoiseConfig(sigma=15.0)
    np.testing.assert_array_equal(denoise_multiband(noisy, cfg),
                                  denoise(noisy, cfg, profile="srgb"))


def test_multiband_three_bands_equals_gcp_off():
    clean = filtered_texture(size=48, seed=24, channels=3)
    noisy = add_awgn(clean, 15.0, seed=25)
    cfg = DenoiseConfig(sigma=15.0, use_gcp=False)
    a = denoise(noisy, cfg, profile="srgb")
    b = denoise_multiband(noisy, cfg)
    np.testing.assert_array_equal(a, b)


def test_multiband_cube_gains_psnr():
    clean = multiband_sine(size=32, bands=8)
    noisy = add_awgn(clean, 20.0, seed=26)
    cfg = DenoiseConfig(sigma=20.0)
    out = denoise_multiband(noisy, cfg)
    assert psnr(clean, out) >= psnr(clean, noisy) + 3.0
