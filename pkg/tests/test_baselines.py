import numpy as np
import pytest

from frem import datagen
from frem.baselines import (
    FnwModel,
    flr_fit,
    flr_predict,
    fnw_fit,
    fnw_predict,
)
from frem.errors import EmptyWindow, GridMismatch, InvalidSettings
from frem.funcspace import Grid, GridFunction

GRID = Grid.regular(0.0, 1.0, 100)


def _curves(values):
    return [GridFunction(GRID, row) for row in values]


def _three_component_sample(n=80, seed=0, lambdas=(2.0, 1.0, 0.5)):
    basis = datagen.fourier_basis(GRID.points, 3)
    rng = np.random.default_rng(seed)
    scores = rng.standard_normal((n, 3)) * np.sqrt(lambdas)
    values = scores @ basis
    return values, scores, basis


# -- functional Nadaraya-Watson ----------------------------------------------


def test_fnw_single_neighbor():
    values, _, _ = _three_component_sample(5)
    model = FnwModel(_curves(values), np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 1e-6)
    # bandwidth so small that only the queried training curve has weight
    assert fnw_predict(model, _curves(values)[2]) == 3.0


def test_fnw_constant_responses():
    values, _, _ = _three_component_sample(30, seed=1)
    model = FnwModel(_curves(values), np.full(30, 7.5), 10.0)
    assert fnw_predict(model, _curves(values)[4]) == pytest.approx(7.5, abs=1e-10)


def test_fnw_empty_window():
    values, _, _ = _three_component_sample(10, seed=2)
    model = FnwModel(_curves(values), np.zeros(10), 1e-9)
    far = GridFunction(GRID, values[0] + 100.0)
    with pytest.raises(EmptyWindow):
        fnw_predict(model, far)


def test_fnw_prediction_within_response_range():
    values, _, _ = _three_component_sample(60, seed=3)
    rng = np.random.default_rng(4)
    y = rng.uniform(-3.0, 5.0, 60)
    model = fnw_fit(_curves(values), y, seed=5)
    for i in range(0, 60, 7):
        pred = fnw_predict(model, _curves(values)[i])
        assert y.min() - 1e-12 <= pred <= y.max() + 1e-12


def test_fnw_fit_tie_break_and_validation():
    values, _, _ = _three_component_sample(20, seed=6)
    model = fnw_fit(_curves(values), np.full(20, 1.0), h_candidates=[2.0, 3.0], seed=7)
    assert model.bandwidth == 2.0
    with pytest.raises(InvalidSettings):
        fnw_fit(_curves(values), np.ones(20), h_candidates=[-1.0])


# -- functional linear regression --------------------------------------------


def test_flr_exact_linear_recovery():
    values, scores, _ = _three_component_sample(100, seed=8)
    mean = values.mean(axis=0)
    w = GRID.quad_weights
    # build responses from the true first centered score
    centered = values - mean
    basis_est = datagen.fourier_basis(GRID.points, 3)
    s1 = (centered * w) @ basis_est[0]
    y = 2.0 + 3.0 * s1
    model = flr_fit(_curves(values), y, p_candidates=range(1, 6), seed=9)
    preds = np.array([flr_predict(model, c) for c in _curves(values)])
    assert np.max(np.abs(preds - y)) < 1e-6


def test_flr_zero_variance_responses():
    values, _, _ = _three_component_sample(50, seed=10)
    y = np.full(50, 4.25)
    model = flr_fit(_curves(values), y, p_candidates=range(0, 6), seed=11)
    preds = np.array([flr_predict(model, c) for c in _curves(values)])
    assert np.allclose(preds, 4.25, atol=1e-10)
    assert model.p == 0


def test_flr_predict_constructed_cases():
    values, _, _ = _three_component_sample(70, seed=12)
    rng = np.random.default_rng(13)
    y = rng.standard_normal(70)
    model = flr_fit(_curves(values), y, p_candidates=range(1, 4), seed=14)
    mean_curve = GridFunction(GRID, model.mean_values)
    assert flr_predict(model, mean_curve) == pytest.approx(model.intercept, abs=1e-10)
    shifted = GridFunction(GRID, model.mean_values + model.basis_values[0])
    assert flr_predict(model, shifted) == pytest.approx(
        model.intercept + model.slopes[0], abs=1e-8
    )
    # affine in the first-component amplitude
    deltas = []
    for a in (0.5, 1.0, 2.0):
        x = GridFunction(GRID, model.mean_values + a * model.basis_values[0])
        deltas.append((flr_predict(model, x) - model.intercept) / a)
    assert deltas[0] == pytest.approx(deltas[1], abs=1e-10)
    assert deltas[1] == pytest.approx(deltas[2], abs=1e-10)


def test_flr_residuals_orthogonal_to_scores():
    values, _, _ = _three_component_sample(90, seed=15)
    rng = np.random.default_rng(16)
    y = rng.standard_normal(90)
    model = flr_fit(_curves(values), y, p_candidates=[3], seed=17)
    preds = model.intercept + model.scores @ model.slopes
    resid = y - preds
    assert np.allclose(model.scores.T @ resid, 0.0, atol=1e-8)
    assert resid.sum() == pytest.approx(0.0, abs=1e-8)


def test_flr_eigenfunctions_orthonormal():
    values, _, _ = _three_component_sample(60, seed=18)
    y = np.random.default_rng(19).standard_normal(60)
    model = flr_fit(_curves(values), y, p_candidates=[2], seed=20)
    gram = (model.basis_values * GRID.quad_weights) @ model.basis_values.T
    assert np.allclose(gram, np.eye(model.p), atol=1e-8)


def test_flr_grid_mismatch():
    values, _, _ = _three_component_sample(30, seed=21)
    y = np.zeros(30)
    model = flr_fit(_curves(values), y, p_candidates=[1], seed=22)
    other = Grid.regular(0.0, 1.0, 64)
    with pytest.raises(GridMismatch):
        flr_predict(model, GridFunction(other, np.zeros(64)))


def test_flr_requires_enough_samples():
    values, _, _ = _three_component_sample(10, seed=23)
    with pytest.raises(InvalidSettings):
        flr_fit(_curves(values), np.zeros(10), p_candidates=[9])
