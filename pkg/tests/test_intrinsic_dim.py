import numpy as np
import pytest

from frem import datagen
from frem.errors import InsufficientSample, InsufficientSpread, InvalidSettings
from frem.funcspace import Grid, GridFunction
from frem.intrinsic_dim import (
    DimEstimate,
    DimSettings,
    dim_mle_at_point,
    estimate_dim,
    estimate_dim_values,
)

GRID = Grid.regular(0.0, 1.0, 100)


def _linear_patch(n, q, seed, scale=1.0):
    """Curves spanning a q-dimensional linear patch of function space."""
    rng = np.random.default_rng(seed)
    basis = datagen.fourier_basis(GRID.points, q)
    coefs = rng.uniform(0.0, scale, size=(n, q))
    return coefs @ basis


def test_settings_validation():
    with pytest.raises(InvalidSettings):
        DimSettings(k1=1, k2=5)
    with pytest.raises(InvalidSettings):
        DimSettings(k1=10, k2=5)
    with pytest.raises(InvalidSettings):
        DimSettings(regularizer=-0.1)
    with pytest.raises(InvalidSettings):
        DimEstimate(raw=0.0)


def test_rounding_rule():
    assert DimEstimate(raw=0.4).rounded == 1
    assert DimEstimate(raw=1.49).rounded == 1
    assert DimEstimate(raw=1.5).rounded == 2
    assert DimEstimate(raw=2.7).rounded == 3


def test_mle_on_segment():
    # points on a one-dimensional segment xi * phi
    rng = np.random.default_rng(0)
    phi = datagen.fourier_basis(GRID.points, 1)[0]
    values = rng.uniform(0, 1, 500)[:, None] * phi[None, :]
    sample = [GridFunction(GRID, row) for row in values]
    ests = [
        dim_mle_at_point(sample[i], sample, k=15, delta=0.0)
        for i in range(0, 500, 10)
    ]
    assert np.mean(ests) == pytest.approx(1.0, abs=0.2)


def test_mle_identical_points_insufficient_spread():
    values = np.ones((30, len(GRID)))
    sample = [GridFunction(GRID, row) for row in values]
    with pytest.raises(InsufficientSpread):
        dim_mle_at_point(sample[0], sample, k=5, delta=0.1)


def test_mle_insufficient_sample():
    sample = [GridFunction(GRID, np.ones(len(GRID)))] * 3
    with pytest.raises(InsufficientSample):
        dim_mle_at_point(sample[0], sample, k=10, delta=0.0)


def test_mle_circle_embedding():
    s = datagen.gen_circle_example(1000, c=2.0, k_terms=12, seed=3)
    ests = [
        dim_mle_at_point(s.curves[i], s.curves, k=20, delta=0.0)
        for i in range(0, 1000, 25)
    ]
    assert np.mean(ests) == pytest.approx(1.0, abs=0.2)


def test_estimate_dim_insufficient_sample():
    s = datagen.gen_klein(10, seed=0)
    with pytest.raises(InsufficientSample):
        estimate_dim(s.curves, DimSettings(k1=10, k2=20))


def test_estimate_dim_relabeling_invariant():
    s = datagen.gen_klein(80, seed=1)
    perm = np.random.default_rng(2).permutation(80)
    a = estimate_dim_values(s.values, GRID.quad_weights, DimSettings())
    b = estimate_dim_values(s.values[perm], GRID.quad_weights, DimSettings())
    assert a.raw == pytest.approx(b.raw, rel=1e-12)


def test_estimate_dim_shift_invariant():
    s = datagen.gen_klein(80, seed=3)
    shifted = s.values + 5.0
    a = estimate_dim_values(s.values, GRID.quad_weights, DimSettings())
    b = estimate_dim_values(shifted, GRID.quad_weights, DimSettings())
    assert a.raw == pytest.approx(b.raw, rel=1e-9)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_linear_patches(q):
    hits = 0
    for seed in range(20):
        values = _linear_patch(1000, q, seed)
        est = estimate_dim_values(values, GRID.quad_weights, DimSettings())
        hits += est.rounded == q
    assert hits >= 16


def test_noiseless_manifolds_majority():
    # the three closed-manifold generators at n=1000, defaults
    for gen, d in [
        (lambda s: datagen.gen_circle_example(1000, 2.0, 12, s), 1),
        (lambda s: datagen.gen_klein(1000, s), 2),
        (lambda s: datagen.gen_so3(1000, s), 3),
    ]:
        hits = 0
        for seed in range(6):
            sample = datagen.unit_scale(gen(seed))
            est = estimate_dim_values(sample.values, GRID.quad_weights, DimSettings())
            hits += est.rounded == d
        assert hits >= 4


def test_contaminated_klein_within_one():
    # with measurement contamination the estimate inflates; it must stay
    # within one of the truth for the Klein sample at n=1000, m=100, snr 4
    from frem import recovery

    hits = 0
    for seed in range(4):
        s = datagen.unit_scale(datagen.gen_klein(1000, seed))
        obs = datagen.observe(s, 100, 4.0, seed + 100)
        sm = recovery.smooth_all(obs, GRID)
        est = estimate_dim_values(sm, GRID.quad_weights, DimSettings())
        hits += abs(est.rounded - 2) <= 1
    assert hits >= 3
