"""Command line surface: subcommands, dispatch, exit codes."""

import json

import numpy as np
import pytest

from circdenoise.cli import main
from circdenoise.fileio import load_image, load_tensor, save_image, save_tensor
from circdenoise.metrics import psnr
from circdenoise.phantoms import filtered_texture


@pytest.fixture()
def clean_png(tmp_path):
    p = tmp_path / "clean.png"
    save_image(p, filtered_texture(48, seed=2))
    return p


def run(*argv) -> int:
    return main([str(a) for a in argv])


# ---------------------------------------------------------------- happy path

def test_addnoise_then_denoise(tmp_path, clean_png):
    noisy = tmp_path / "noisy.png"
    out = tmp_path / "out.png"
    assert run("addnoise", "--input", clean_png, "--output", noisy,
               "--sigma", 25, "--seed", 0) == 0
    assert run("denoise", "--input", noisy, "--output", out,
               "--sigma", 25) == 0
    ref = load_image(clean_png)
    assert psnr(ref, load_image(out)) > psnr(ref, load_image(noisy))


def test_addnoise_seed_reproducible(tmp_path, clean_png):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    run("addnoise", "--input", clean_png, "--output", a, "--sigma", 20, "--seed", 5)
    run("addnoise", "--input", clean_png, "--output", b, "--sigma", 20, "--seed", 5)
    assert a.read_bytes() == b.read_bytes()


def test_report_with_metrics(tmp_path, clean_png):
    noisy = tmp_path / "noisy.png"
    out = tmp_path / "out.png"
    rep = tmp_path / "rep.json"
    run("addnoise", "--input", clean_png, "--output", noisy, "--sigma", 25)
    assert run("denoise", "--input", noisy, "--output", out, "--sigma", 25,
               "--metrics-ref", clean_png, "--report", rep) == 0
    d = json.loads(rep.read_text())
    assert d["sigma_used"] == 25.0
    assert d["wall_time"] > 0
    assert isinstance(d["psnr"], float) and d["psnr"] > 15.0
    assert 0.0 <= d["ssim"] <= 1.0
    assert d["adjusted_fraction"] == 0.0


def test_report_without_ref_omits_quality(tmp_path, clean_png):
    noisy = tmp_path / "noisy.png"
    out = tmp_path / "out.png"
    rep = tmp_path / "rep.json"
    run("addnoise", "--input", clean_png, "--output", noisy, "--sigma", 25)
    assert run("denoise", "--input", noisy, "--output", out, "--sigma", 25,
               "--report", rep) == 0
    d = json.loads(rep.read_text())
    assert d["psnr"] is None and d["ssim"] is None


def test_adaptive_flag(tmp_path, clean_png):
    noisy = tmp_path / "noisy.png"
    out = tmp_path / "out.png"
    rep = tmp_path / "rep.json"
    run("addnoise", "--input", clean_png, "--output", noisy, "--sigma", 25)
    assert run("denoise", "--input", noisy, "--output", out, "--adaptive",
               "--report", rep) == 0
    d = json.loads(rep.read_text())
    # baseline estimator picked the level, not the user
    assert 15.0 < d["sigma_used"] < 40.0


def test_sigma_file(tmp_path, clean_png):
    noisy = tmp_path / "noisy.png"
    out = tmp_path / "out.png"
    sf = tmp_path / "sigmas.txt"
    run("addnoise", "--input", clean_png, "--output", noisy, "--sigma", 25)
    sf.write_text("25.0\n")
    assert run("denoise", "--input", noisy, "--output", out,
               "--sigma-file", sf) == 0
    assert out.exists()


def test_tensor_container_roundtrip(tmp_path):
    t_in = tmp_path / "in.htsv"
    t_out = tmp_path / "out.htsv"
    save_tensor(t_in, filtered_texture(32, seed=1))
    assert run("denoise", "--input", t_in, "--output", t_out, "--sigma", 5) == 0
    assert load_tensor(t_out).shape == (32, 32, 1)


def test_bench_subcommand(tmp_path):
    cfg = tmp_path / "sweep.json"
    csv_path = tmp_path / "rows.csv"
    cfg.write_text(json.dumps({
        "phantoms": ["flat"], "size": 48, "sigmas": [25.0], "seeds": [0],
        "base": {"sigma": 25.0},
    }))
    assert run("bench", "--config", cfg, "--csv", csv_path) == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0].startswith("name,sigma,psnr_noisy,psnr_out,ssim_out,seconds")
    assert len(lines) == 2


def test_tuning_flags_accepted(tmp_path, clean_png):
    out = tmp_path / "out.png"
    assert run("denoise", "--input", clean_png, "--output", out, "--sigma", 10,
               "--ps", 8, "--k", 16, "--window", 12, "--stride", 5,
               "--threads", 2, "--seed", 9) == 0


# --------------------------------------------------------------- exit codes

def test_usage_missing_sigma_choice(tmp_path, clean_png):
    assert run("denoise", "--input", clean_png,
               "--output", tmp_path / "o.png") == 2


def test_usage_conflicting_sigma_choices(tmp_path, clean_png):
    assert run("denoise", "--input", clean_png, "--output", tmp_path / "o.png",
               "--sigma", 10, "--adaptive") == 2


def test_usage_unknown_flag(tmp_path, clean_png):
    assert run("denoise", "--input", clean_png, "--output", tmp_path / "o.png",
               "--sigma", 10, "--turbo") == 2


def test_usage_no_subcommand():
    assert run() == 2


def test_usage_missing_input_file(tmp_path):
    assert run("denoise", "--input", tmp_path / "ghost.png",
               "--output", tmp_path / "o.png", "--sigma", 10) == 2


def test_usage_bad_config_value(tmp_path, clean_png):
    assert run("denoise", "--input", clean_png, "--output", tmp_path / "o.png",
               "--sigma", 10, "--k", 12) == 2


def test_format_corrupt_image(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not a png")
    assert run("denoise", "--input", bad, "--output", tmp_path / "o.png",
               "--sigma", 10) == 3


def test_format_bad_sigma_file(tmp_path, clean_png):
    sf = tmp_path / "sigmas.txt"
    sf.write_text("25.0\npotato\n")
    assert run("denoise", "--input", clean_png, "--output", tmp_path / "o.png",
               "--sigma-file", sf) == 3


def test_format_bad_bench_config(tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text("{broken")
    assert run("bench", "--config", cfg, "--csv", tmp_path / "r.csv") == 3


def test_numeric_nan_input(tmp_path):
    t = tmp_path / "nan.htsv"
    cube = np.full((32, 32, 1), np.nan)
    save_tensor(t, cube)
    assert run("denoise", "--input", t, "--output", tmp_path / "o.htsv",
               "--sigma", 10) == 4
