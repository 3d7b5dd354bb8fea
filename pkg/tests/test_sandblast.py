import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surftex.fixtures import ramp, sandblasted_fixture
from surftex.heightfield import HeightField, stats
from surftex.rng import RandomStream
from surftex.sandblast import SandblastConfig, choose_branch, preprocess_periodic, synthesize_sandblast
from surftex.spectral import autocorrelation, border_jump_energy
from surftex.stationary import rpn


@pytest.fixture(scope="module")
def exemplar():
    return sandblasted_fixture(0)


def test_config_validation():
    with pytest.raises(ValueError):
        SandblastConfig(10, 10, 1.0, method="hb")
    with pytest.raises(ValueError):
        SandblastConfig(10, 10, 1.0, patch_size=64, overlap=64)
    with pytest.raises(ValueError):
        SandblastConfig(10, 10, 1.0, size_strategy="tile")


def test_degenerate_crop_pipeline_is_plain_rpn(exemplar):
    small = HeightField(exemplar.data[:64, :80], exemplar.spacing_um)
    cfg = SandblastConfig(80, 64, small.spacing_um, method="rpn", size_strategy="crop", seed=4)
    out = synthesize_sandblast(small, cfg)
    expected = rpn(preprocess_periodic(small), RandomStream(4).substream("generate"))
    np.testing.assert_array_equal(out.data, expected.data)


def test_downsample_branch_sizes(exemplar):
    cfg = SandblastConfig(171, 171, 5.25)
    assert choose_branch(171, 171, cfg) == "crop"
    out = synthesize_sandblast(exemplar, cfg)
    assert out.shape == (171, 171) and out.spacing_um == 5.25


def test_stitch_branch_sizes(exemplar):
    small = HeightField(exemplar.data[:342, :342], exemplar.spacing_um)
    cfg = SandblastConfig(684, 684, small.spacing_um, patch_size=256, overlap=128)
    assert choose_branch(342, 342, cfg) == "stitch"
    out = synthesize_sandblast(small, cfg)
    assert out.shape == (684, 684) and out.spacing_um == small.spacing_um


def test_finer_target_spacing_rejected(exemplar):
    with pytest.raises(ValueError, match="finer"):
        synthesize_sandblast(exemplar, SandblastConfig(100, 100, 1.0))


def test_stitch_needs_large_enough_input(exemplar):
    small = HeightField(exemplar.data[:100, :100], exemplar.spacing_um)
    with pytest.raises(ValueError):
        synthesize_sandblast(small, SandblastConfig(300, 300, small.spacing_um, patch_size=128, overlap=32))


@given(st.integers(1, 600), st.integers(1, 600), st.integers(1, 600), st.integers(1, 600))
def test_auto_branch_is_pure_size_rule(dw, dh, tw, th):
    cfg = SandblastConfig(tw, th, 1.0)
    expected = "crop" if dw >= tw and dh >= th else "stitch"
    assert choose_branch(dw, dh, cfg) == expected == choose_branch(dw, dh, cfg)


@pytest.mark.parametrize("kw", [
    dict(target_w=171, target_h=171, target_spacing_um=5.25),
    dict(target_w=400, target_h=300, target_spacing_um=1.75, method="adsn"),
    dict(target_w=700, target_h=700, target_spacing_um=1.75, patch_size=256, overlap=128),
    dict(target_w=600, target_h=600, target_spacing_um=1.75, size_strategy="pad"),
])
def test_output_statistics_preserved(exemplar, kw):
    out = synthesize_sandblast(exemplar, SandblastConfig(seed=2, **kw))
    s0, s1 = stats(exemplar), stats(out)
    assert (out.width, out.height) == (kw["target_w"], kw["target_h"])
    assert abs(s1.mean - s0.mean) <= 0.02 * abs(s0.mean)
    assert abs(s1.std - s0.std) <= 0.05 * s0.std


def test_deterministic_and_thread_independent(exemplar):
    small = HeightField(exemplar.data[:300, :300], exemplar.spacing_um)
    cfg = SandblastConfig(500, 500, small.spacing_um, patch_size=128, overlap=48, seed=11)
    a = synthesize_sandblast(small, cfg)
    b = synthesize_sandblast(small, cfg, threads=3)
    np.testing.assert_array_equal(a.data, b.data)
    c = synthesize_sandblast(small, SandblastConfig(500, 500, small.spacing_um, patch_size=128, overlap=48, seed=12))
    assert not np.array_equal(a.data, c.data)


def test_stitch_output_has_no_periodic_repetition(exemplar):
    small = HeightField(exemplar.data[:342, :342], exemplar.spacing_um)
    out = synthesize_sandblast(small, SandblastConfig(684, 684, small.spacing_um, patch_size=256, overlap=128))
    acf = autocorrelation(out).data
    cy, cx = acf.shape[0] // 2, acf.shape[1] // 2
    lag0 = acf[cy, cx]
    for k in (1, 2):
        for dy, dx in ((k * 128, 0), (0, k * 128), (k * 128, k * 128)):
            assert abs(acf[cy + dy, cx + dx]) < 0.5 * lag0


def test_preprocess_periodic_examples(rng):
    y, x = np.mgrid[0:20, 0:20]
    periodic = HeightField(np.sin(2 * np.pi * x / 19) * np.cos(2 * np.pi * 2 * y / 19), 1.0)
    np.testing.assert_allclose(preprocess_periodic(periodic).data, periodic.data, atol=1e-8)
    r = ramp(40, 30)
    assert border_jump_energy(preprocess_periodic(r).data) * 10 <= border_jump_energy(r.data)
    f = HeightField(rng.normal(5, 1, size=(17, 23)), 1.0)
    assert preprocess_periodic(f).data.mean() == pytest.approx(f.data.mean(), abs=1e-9)
