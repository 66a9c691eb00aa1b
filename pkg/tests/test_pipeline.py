import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfrtok.chunking import alignment_to_targets
from vfrtok.core import BoundarySet, FrameSequence, compute_rates
from vfrtok.duration import DurationParams
from vfrtok.errors import InvalidConfig, ModeMismatch
from vfrtok.hazard import BoundaryDecodeConfig, HazardSequence
from vfrtok.pipeline import (
    ClassDurationModel,
    PipelineConfig,
    ToyCompressor,
    decode,
    encode,
    rate_report,
    synth_alignment,
    synth_clustered_latents,
    synth_generate,
    synth_nb_durations,
    synth_periodic,
)
from vfrtok.rad import LatentPool, RadConfig, build_index
from vfrtok.ssq import SsqConfig


def test_compressor_is_orthonormal_and_seeded():
    c = ToyCompressor(64, 8, seed=3)
    np.testing.assert_allclose(c.weights.T @ c.weights, np.eye(8), atol=1e-12)
    assert np.array_equal(c.weights, ToyCompressor(64, 8, seed=3).weights)
    z = c.compress(np.random.default_rng(0).standard_normal((10, 64)))
    np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0)
    wide = ToyCompressor(4, 8, seed=0)
    np.testing.assert_allclose(wide.weights @ wide.weights.T, np.eye(4), atol=1e-12)


def test_encode_token_count():
    x, b = synth_periodic(100, 5, dim=16)
    res = encode(x, PipelineConfig(ssq=SsqConfig(L=8, K=4)), boundaries=b)
    assert res.tokens.num_tokens == 20
    assert res.tokens.durations == (5,) * 20


@pytest.mark.parametrize("T, g", [(100, 7), (64, 4), (10, 3)])
def test_fixed_rate_degenerate(T, g):
    x, _ = synth_periodic(T, g, dim=4)
    cfg = PipelineConfig(ssq=SsqConfig(L=4, K=4), boundary=BoundaryDecodeConfig(0.5, g, g))
    res = encode(x, cfg, hazard=HazardSequence.from_probs(np.full(T, 0.01)))
    assert res.tokens.num_tokens == math.ceil(T / g)


def test_empirical_rate_arithmetic():
    ends = np.linspace(0, 499, 144).round().astype(int)
    ends[-1] = 499
    t = encode(synth_periodic(500, 4, dim=8)[0], PipelineConfig(ssq=SsqConfig(L=32, K=4)),
               boundaries=BoundarySet(tuple(np.unique(ends)))).tokens
    assert t.num_tokens == 144
    r = rate_report(t, 500, 50.0, max_duration=8)
    assert r.frame_rate_hz == pytest.approx(14.4)
    assert r.bitrate_bps == compute_rates(144 / 10.0, 32, 4, 8).bitrate_bps


def test_side_info_per_mode():
    x, b = synth_periodic(30, 3, dim=4)
    for mode, has_d, has_T in [("durations", True, False), ("length", False, True), ("tokens", False, False)]:
        t = encode(x, PipelineConfig(ssq=SsqConfig(L=4, K=4), mode=mode), boundaries=b).tokens
        assert (t.durations is not None, t.total_frames is not None) == (has_d, has_T)


def test_mode_one_round_trip():
    x, b = synth_periodic(60, 4, dim=12, seed=2)
    cfg = PipelineConfig(ssq=SsqConfig(L=6, K=4), identity_quantizer=True)
    res = encode(x, cfg, boundaries=b)
    out = decode(res.tokens, cfg, 12, latents=res.latents)
    assert out.num_frames == 60
    comp = ToyCompressor(12, 6, 0)
    ref = comp.decompress(comp.compress(x.data)).astype(np.float32)
    ends = b.as_array()
    np.testing.assert_array_equal(out.frames.data[ends], ref[ends])


def test_mode_one_quantized_length():
    x, b = synth_periodic(37, 5, dim=8)
    cfg = PipelineConfig(ssq=SsqConfig(L=8, K=4))
    out = decode(encode(x, cfg, boundaries=b).tokens, cfg, 8)
    assert out.num_frames == 37


def test_mode_two_hits_target():
    x, b = synth_periodic(50, 4, dim=8)
    cfg = PipelineConfig(ssq=SsqConfig(L=8, K=4), mode="length")
    t = encode(x, cfg, boundaries=b).tokens
    assert decode(t, cfg, 8).num_frames == 50
    assert decode(t, cfg, 8, target_T=77).num_frames == 77


def test_mode_three_free_length():
    x, b = synth_periodic(40, 4, dim=8)
    cfg = PipelineConfig(ssq=SsqConfig(L=8, K=4), mode="tokens")
    t = encode(x, cfg, boundaries=b).tokens
    mu = np.linspace(0, 4, t.num_tokens)
    out = decode(t, cfg, 8, duration_model=lambda tok: DurationParams(mu))
    assert out.num_frames == int(np.sum(1 + np.rint(mu)))
    assert decode(t, cfg, 8).num_frames == t.num_tokens


def test_mode_mismatch():
    x, b = synth_periodic(20, 4, dim=4)
    t = encode(x, PipelineConfig(ssq=SsqConfig(L=4, K=4), mode="tokens"), boundaries=b).tokens
    with pytest.raises(ModeMismatch):
        decode(t, PipelineConfig(ssq=SsqConfig(L=4, K=4), mode="durations"), 4)
    with pytest.raises(ModeMismatch):
        decode(t, PipelineConfig(ssq=SsqConfig(L=4, K=4), mode="length"), 4)
    with pytest.raises(InvalidConfig):
        PipelineConfig(mode="bogus")
    with pytest.raises(InvalidConfig):
        encode(synth_periodic(20, 4)[0], PipelineConfig())


def test_decode_with_rad():
    x, b = synth_periodic(80, 2, dim=16, seed=5)
    cfg = PipelineConfig(ssq=SsqConfig(L=8, K=4), rad=RadConfig(tau=0.0, n_probe=4))
    res = encode(x, cfg, boundaries=b)
    pool = LatentPool(res.latents)
    idx = build_index(pool, 4, seed=0)
    out = decode(res.tokens, cfg, 16, index=idx, pool=pool)
    assert out.rad.replaced.all()
    assert out.num_frames == 80


def test_class_duration_model():
    x, b = synth_periodic(200, 5, dim=8, seed=1)
    cfg = PipelineConfig(ssq=SsqConfig(L=4, K=2))
    t = encode(x, cfg, boundaries=b).tokens
    model = ClassDurationModel.fit([t])
    params = model(t)
    np.testing.assert_allclose(params.mu_free, 4.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mode_two_length_property(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 120))
    D = int(rng.integers(1, 10))
    x = FrameSequence(rng.standard_normal((T, D)))
    cfg = PipelineConfig(
        ssq=SsqConfig(L=int(rng.integers(1, 9)), K=int(rng.integers(2, 6))),
        boundary=BoundaryDecodeConfig(float(rng.uniform(0.05, 0.95)), int(rng.integers(1, 4))),
        mode="length",
        compressor_seed=int(rng.integers(100)),
    )
    h = HazardSequence(rng.normal(0, 2, T))
    t = encode(x, cfg, hazard=h).tokens
    target = int(rng.integers(t.num_tokens, 3 * T + 2))
    mu = rng.uniform(0, 5, t.num_tokens)
    out = decode(t, cfg, D, target_T=target, duration_model=lambda tok: DurationParams(mu))
    assert out.num_frames == target


def test_synth_generators():
    x, b = synth_generate("periodic", T=64, period=4)
    assert b.num_chunks == 16 and x.num_frames == 64
    d = synth_nb_durations(5.0, 0.5, 10_000, seed=0)
    se = np.sqrt((5.0 + 0.5 * 25.0) / 10_000)
    assert abs(d.mean() - 5.0) <= 3 * se
    pool, labels = synth_clustered_latents(4, 100, L=32)
    assert len(pool) == 100 and np.bincount(labels).tolist() == [25] * 4
    spans = synth_alignment(30, seed=1)
    t = alignment_to_targets(spans)
    assert len(t.labels) == 30
    assert np.array_equal(synth_generate("nb-durations", seed=3, mu=2.0, alpha=1.0, n=10),
                          synth_nb_durations(2.0, 1.0, 10, seed=3))
    with pytest.raises(InvalidConfig):
        synth_generate("nope")
