import numpy as np
import pytest
from conftest import central_diff, random_boundaries, rel_err
from hypothesis import given, settings
from hypothesis import strategies as st

from vfrtok.core import BoundarySet, boundaries_to_durations
from vfrtok.errors import FitDiverged, InvalidConfig, InvalidTargets
from vfrtok.hazard import (
    BoundaryDecodeConfig,
    BoundaryTargets,
    HazardSequence,
    decode_boundaries,
    fit_hazard_logits,
    hazard_nll,
    next_boundary_distribution,
)


def product_form(h, t, k):
    # direct evaluation of prod_{i<k}(1 - h[t+i]) * h[t+k]
    out = 1.0
    for i in range(k):
        out *= 1.0 - h[t + i]
    return out * h[t + k]


def test_next_boundary_example():
    P, surv = next_boundary_distribution([0.1, 0.9, 0.3], 0, 3)
    np.testing.assert_allclose(P, [0.1, 0.81, 0.027], rtol=1e-9)
    assert surv == pytest.approx(0.063, rel=1e-9)


def test_next_boundary_halves():
    P, surv = next_boundary_distribution([0.5, 0.5], 0, 2)
    np.testing.assert_allclose(P, [0.5, 0.25], rtol=1e-9)
    assert surv == pytest.approx(0.25, rel=1e-9)


def test_certain_boundary():
    P, _ = next_boundary_distribution([1 - 1e-12, 0.5, 0.5], 0, 3)
    assert P[0] == pytest.approx(1.0, abs=1e-6)


def test_next_boundary_matches_product_form():
    rng = np.random.default_rng(3)
    h = rng.uniform(0.01, 0.99, 30)
    hs = HazardSequence.from_probs(h)
    for t in (0, 7, 29):
        P, _ = next_boundary_distribution(hs, t, 30 - t)
        expected = [product_form(hs.probs, t, k) for k in range(30 - t)]
        np.testing.assert_allclose(P, expected, rtol=1e-12)


def test_next_boundary_range():
    with pytest.raises(IndexError):
        next_boundary_distribution([0.5, 0.5], 2, 0)
    with pytest.raises(IndexError):
        next_boundary_distribution([0.5, 0.5], 1, 2)


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_normalization(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 128))
    h = HazardSequence(rng.normal(0, 3, T))
    for t in range(T):
        P, surv = next_boundary_distribution(h, t, T - t)
        assert abs(P.sum() + surv - 1.0) <= 1e-12


def test_nll_hand_values():
    nll, _ = hazard_nll([0.5, 0.5], BoundaryTargets.from_boundaries([1]))
    assert nll == pytest.approx(2 * np.log(2), rel=1e-6)
    T, p = 6, 0.3
    nll, _ = hazard_nll(np.full(T, p), BoundaryTargets.from_boundaries(list(range(T))))
    assert nll == pytest.approx(-T * np.log(p), rel=1e-6)


def bernoulli_nll(z, b):
    h = 1 / (1 + np.exp(-z))
    return -np.sum(b * np.log(h) + (1 - b) * np.log1p(-h))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_nll_equals_framewise_bernoulli(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 80))
    z = rng.normal(0, 2, T)
    tg = BoundaryTargets.from_boundaries(random_boundaries(rng, T, 10))
    nll, _ = hazard_nll(HazardSequence(z), tg)
    assert abs(nll - bernoulli_nll(z, tg.indicator(T))) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_nll_gradient(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(2, 40))
    z = rng.normal(0, 2, T)
    tg = BoundaryTargets.from_boundaries(random_boundaries(rng, T, 8))
    _, g = hazard_nll(HazardSequence(z), tg)
    fd = central_diff(lambda v: hazard_nll(HazardSequence(v), tg)[0], z)
    assert rel_err(g, fd) < 1e-5


def test_non_tiling_targets():
    with pytest.raises(InvalidTargets):
        hazard_nll([0.5] * 5, BoundaryTargets((0, 3), (1, 1)))
    with pytest.raises(InvalidTargets):
        hazard_nll([0.5] * 5, BoundaryTargets((0,), (2,)))


def test_clamped_probs():
    h = HazardSequence.from_probs([0.0, 1.0])
    assert 0 < h.probs[0] < 1e-6 and 1 - 1e-6 < h.probs[1] < 1


@pytest.mark.parametrize(
    "h, cfg, ends",
    [
        ([0.2, 0.6, 0.1, 0.7], BoundaryDecodeConfig(0.5, 1), (1, 3)),
        ([0.2, 0.6, 0.1, 0.7], BoundaryDecodeConfig(0.5, 3), (3,)),
        ([0.9] * 6, BoundaryDecodeConfig(0.5, 1), (0, 1, 2, 3, 4, 5)),
        ([0.1] * 10, BoundaryDecodeConfig(0.5, 1, 4), (3, 7, 9)),
    ],
)
def test_decode_examples(h, cfg, ends):
    assert decode_boundaries(h, cfg).ends == ends


def test_config_validation():
    with pytest.raises(InvalidConfig):
        BoundaryDecodeConfig(tau_h=1.0)
    with pytest.raises(InvalidConfig):
        BoundaryDecodeConfig(min_gap=3, max_gap=2)
    with pytest.raises(InvalidConfig):
        BoundaryDecodeConfig(min_gap=0)


configs = st.builds(
    lambda tau, lo, extra, mode, seed: BoundaryDecodeConfig(tau, lo, None if extra < 0 else lo + extra, mode, seed),
    st.floats(0.01, 0.99),
    st.integers(1, 6),
    st.integers(-1, 8),
    st.sampled_from(["greedy", "sample"]),
    st.integers(0, 1000),
)


@settings(max_examples=200)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=120), configs)
def test_chunk_lengths_respect_gaps(h, cfg):
    b = decode_boundaries(h, cfg)
    d = boundaries_to_durations(b, len(h))
    assert np.all(d[:-1] >= cfg.min_gap)
    if cfg.max_gap is not None:
        assert np.all(d <= cfg.max_gap)
    assert decode_boundaries(h, cfg) == b


@settings(max_examples=200)
@given(
    st.lists(st.floats(0.0, 1.0), min_size=1, max_size=120),
    st.floats(0.01, 0.99),
    st.floats(0.01, 0.99),
    st.integers(1, 6),
    st.one_of(st.none(), st.integers(0, 8)),
)
def test_count_monotone_in_threshold(h, t1, t2, min_gap, extra):
    lo, hi = sorted((t1, t2))
    max_gap = None if extra is None else min_gap + extra
    n_lo = len(decode_boundaries(h, BoundaryDecodeConfig(lo, min_gap, max_gap)))
    n_hi = len(decode_boundaries(h, BoundaryDecodeConfig(hi, min_gap, max_gap)))
    assert n_hi <= n_lo


def test_sample_mode_seeded():
    h = np.random.default_rng(0).uniform(size=200)
    a = decode_boundaries(h, BoundaryDecodeConfig(mode="sample", seed=5))
    b = decode_boundaries(h, BoundaryDecodeConfig(mode="sample", seed=5))
    c = decode_boundaries(h, BoundaryDecodeConfig(mode="sample", seed=6))
    assert a == b and a != c


def test_fit_recovers_period_four():
    T = 64
    planted = BoundarySet(tuple(range(3, T, 4)))
    h = fit_hazard_logits(planted, T)
    b = planted.as_array()
    others = np.setdiff1d(np.arange(T), b)
    assert np.all(h.probs[b] >= 0.9) and np.all(h.probs[others] <= 0.1)
    assert decode_boundaries(h, BoundaryDecodeConfig(0.5, 1)) == planted


def test_fit_single_chunk():
    h = fit_hazard_logits(BoundarySet((19,)), 20)
    assert np.all(h.probs[:-1] <= 0.1)


def test_fit_unit_chunks():
    h = fit_hazard_logits(BoundarySet(tuple(range(20))), 20)
    assert np.all(h.probs >= 0.9)


def test_fit_divergence():
    # a negative step ascends the NLL, which the guard must catch
    with pytest.raises(FitDiverged):
        fit_hazard_logits(BoundarySet((3, 7)), 8, steps=100, lr=-0.1)
