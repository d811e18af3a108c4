"""Local linear regression on tangent-space coordinates.

At a query curve x the pipeline builds a tangent frame from the curves in an
L2 ball, projects every training curve onto the frame, and solves a weighted
least squares of the responses on an intercept plus the coordinates centered
at the query's own coordinates. The weights come from the compact kernel
applied to ambient L2 distances, so training curves at distance >= h_reg
carry exactly zero weight. The intercept of the centered fit is the estimate
of the regression functional at x.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllFoldsFailed,
    FremError,
    GridMismatch,
    InsufficientNeighborhood,
    InvalidSettings,
)
from .funcspace import (
    Grid,
    GridFunction,
    improves,
    kernel_eval,
    l2_distances_to,
    pairwise_l2,
    stack_values,
)
from .intrinsic_dim import DimEstimate
from .recovery import DiscreteObservations, smooth_with_defaults
from .tangent import TangentFrame, frame_at

_MODEL_FORMAT = "frem-model"
_MODEL_VERSION = 1


@dataclass
class FitDiagnostics:
    """Bookkeeping from one local fit."""

    effective_neighbors: int
    condition_indicator: float
    ridge_applied: bool


class FremModel:
    """Fitted state: training curves, responses, dimension, and bandwidths."""

    __slots__ = ("grid", "values", "responses", "dim", "h_pca", "h_reg", "_curves")

    def __init__(self, curves, responses, dim: DimEstimate, h_pca: float, h_reg: float):
        if isinstance(curves, np.ndarray):
            raise InvalidSettings("pass a list of grid functions; use from_values for arrays")
        self._init_from(curves[0].grid, stack_values(curves), responses, dim, h_pca, h_reg)
        self._curves = list(curves)

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray, responses, dim: DimEstimate,
                    h_pca: float, h_reg: float) -> "FremModel":
        self = object.__new__(cls)
        self._init_from(grid, np.asarray(values, dtype=float), responses, dim, h_pca, h_reg)
        self._curves = None
        return self

    def _init_from(self, grid, values, responses, dim, h_pca, h_reg):
        responses = np.asarray(responses, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(grid):
            raise InvalidSettings("curve values must be an (n, G) matrix on the grid")
        if responses.shape != (values.shape[0],):
            raise InvalidSettings("one response per curve required")
        if values.shape[0] < dim.rounded + 2:
            raise InvalidSettings(
                f"need at least dim+2={dim.rounded + 2} training curves, have {values.shape[0]}"
            )
        if not (h_pca > 0 and h_reg > 0):
            raise InvalidSettings("bandwidths must be positive")
        self.grid = grid
        self.values = values
        self.responses = responses
        self.dim = dim
        self.h_pca = float(h_pca)
        self.h_reg = float(h_reg)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def curves(self):
        if self._curves is None:
            self._curves = [GridFunction(self.grid, row) for row in self.values]
        return self._curves

    # -- serialization -----------------------------------------------------

    def save(self, path) -> None:
        """Write the model to a versioned JSON container."""
        payload = {
            "format": _MODEL_FORMAT,
            "version": _MODEL_VERSION,
            "grid": self.grid.points.tolist(),
            "curves": self.values.tolist(),
            "responses": self.responses.tolist(),
            "dim": {
                "raw": self.dim.raw,
                "per_k": None if self.dim.per_k is None else list(map(float, self.dim.per_k)),
            },
            "h_pca": self.h_pca,
            "h_reg": self.h_reg,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "FremModel":
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("format") != _MODEL_FORMAT:
            raise InvalidSettings("not a model container")
        if payload.get("version") != _MODEL_VERSION:
            raise InvalidSettings(f"unsupported model version {payload.get('version')}")
        dim = DimEstimate(
            raw=payload["dim"]["raw"],
            per_k=None if payload["dim"]["per_k"] is None else np.array(payload["dim"]["per_k"]),
        )
        return cls.from_values(
            Grid(np.array(payload["grid"])),
            np.array(payload["curves"]),
            np.array(payload["responses"]),
            dim,
            payload["h_pca"],
            payload["h_reg"],
        )


def _wls_intercept(coords: np.ndarray, cx: np.ndarray, y: np.ndarray,
                   kernel_weights: np.ndarray, d: int):
    """Weighted least squares of y on (1, coords - cx); returns the intercept.

    Solved through an orthogonal decomposition of the weighted design; if the
    design is rank deficient, a ridge of 1e-8 times the normal-matrix trace is
    added to the coordinate block (never the intercept, preserving constant
    reproduction) and the ridge flag is set.
    """
    sw = np.sqrt(kernel_weights)
    a = np.empty((y.size, d + 1))
    a[:, 0] = 1.0
    a[:, 1:] = coords - cx[None, :]
    aw = a * sw[:, None]
    yw = y * sw
    beta, _, rank, svals = np.linalg.lstsq(aw, yw, rcond=None)
    cond = float(svals[0] / svals[-1]) if svals[-1] > 0 else float("inf")
    ridge_applied = False
    if rank < d + 1:
        m = aw.T @ aw
        lam = 1e-8 * np.trace(m)
        m[1:, 1:] += lam * np.eye(d)
        rhs = aw.T @ yw
        try:
            beta = np.linalg.solve(m, rhs)
        except np.linalg.LinAlgError:
            beta = np.linalg.lstsq(m, rhs, rcond=None)[0]
        ridge_applied = True
    return float(beta[0]), cond, ridge_applied


def _weighted_fit(responses: np.ndarray, dists: np.ndarray, coords: np.ndarray,
                  cx: np.ndarray, d: int, h_reg: float):
    """Kernel-weighted local linear fit with adaptive bandwidth widening."""
    h = float(h_reg)
    nz = np.flatnonzero(kernel_eval(dists / h) > 0)
    for _ in range(10):
        if nz.size >= d + 2:
            break
        h *= 1.5
        nz = np.flatnonzero(kernel_eval(dists / h) > 0)
    if nz.size < d + 2:
        raise InsufficientNeighborhood(
            f"only {nz.size} curves carry weight within radius {h:g}"
        )
    kw = kernel_eval(dists[nz] / h) / h ** d
    ghat, cond, ridged = _wls_intercept(coords[nz], cx, responses[nz], kw, d)
    return ghat, FitDiagnostics(int(nz.size), cond, ridged)


def _local_fit_values(model: FremModel, x_values: np.ndarray,
                      dists: np.ndarray | None = None):
    grid = model.grid
    w = grid.quad_weights
    if dists is None:
        dists = l2_distances_to(model.values, x_values, w)
    d = model.dim.rounded
    _, _, basis, _, _ = frame_at(
        x_values, model.values, grid, model.h_pca, d, dists=dists
    )
    coords = (model.values * w) @ basis.T
    cx = (x_values * w) @ basis.T
    return _weighted_fit(model.responses, dists, coords, cx, d, model.h_reg)


def fit_local(model: FremModel, x: GridFunction):
    """Estimate of the regression functional at a fully observed query curve.

    Returns (estimate, diagnostics). The tangent frame is built at x with the
    model's h_pca; kernel weights use K(t/h)/h^d on ambient L2 distances with
    the model's h_reg, both adaptively widened when the neighborhood is too
    thin to support a d-dimensional local fit.
    """
    if not x.grid.same_as(model.grid):
        raise GridMismatch("query curve is not on the model grid")
    return _local_fit_values(model, x.values)


def fit_local_with_frame(model: FremModel, x: GridFunction, frame: TangentFrame):
    """Local fit using an externally supplied tangent frame at x.

    Exposed so invariance properties (basis rotations, sign flips) can be
    exercised directly; fit_local is this with the frame built internally.
    """
    if not x.grid.same_as(model.grid):
        raise GridMismatch("query curve is not on the model grid")
    w = model.grid.quad_weights
    dists = l2_distances_to(model.values, x.values, w)
    coords = (model.values * w) @ frame.basis_values.T
    cx = (x.values * w) @ frame.basis_values.T
    return _weighted_fit(model.responses, dists, coords, cx, frame.d, model.h_reg)


def default_candidate_grids(curves, n_candidates: int = 8):
    """Log-spaced bandwidth candidates spanning the 5th to 50th percentile of
    pairwise L2 distances among the training curves; used for both h_pca and
    h_reg."""
    values = stack_values(curves)
    return grids_from_values(values, curves[0].grid.quad_weights, n_candidates)


def grids_from_values(values: np.ndarray, quad_weights: np.ndarray,
                      n_candidates: int = 8):
    if values.shape[0] < 2:
        raise InvalidSettings("need at least two curves to calibrate bandwidths")
    dmat = pairwise_l2(values, values, quad_weights)
    iu = np.triu_indices(values.shape[0], k=1)
    dists = dmat[iu]
    positive = dists[dists > 0]
    if positive.size == 0:
        raise InvalidSettings("all training curves coincide; bandwidths undefined")
    lo, hi = np.percentile(dists, [5.0, 50.0])
    if lo <= 0:
        lo = float(positive.min())
    if hi <= lo:
        hi = lo * 4.0
    cands = np.geomspace(lo, hi, n_candidates)
    return cands, cands.copy()


def select_bandwidths(curves, responses, dim: DimEstimate,
                      h_pca_candidates=None, h_reg_candidates=None,
                      n_folds: int = 5, seed: int = 0):
    """Joint K-fold cross-validation over the (h_pca, h_reg) product grid.

    Returns the pair minimizing the cross-validated squared prediction error;
    ties break toward smaller h_reg, then smaller h_pca. Folds are derived
    deterministically from the seed. A candidate pair that errors on any fold
    is excluded; if every pair is excluded the selection fails.
    """
    values = stack_values(curves)
    return select_bandwidths_values(
        curves[0].grid, values, np.asarray(responses, dtype=float), dim,
        h_pca_candidates, h_reg_candidates, n_folds=n_folds, seed=seed,
    )


def select_bandwidths_values(grid: Grid, values: np.ndarray, responses: np.ndarray,
                             dim: DimEstimate, h_pca_candidates=None,
                             h_reg_candidates=None, n_folds: int = 5, seed: int = 0):
    n = values.shape[0]
    if h_pca_candidates is None or h_reg_candidates is None:
        hp_default, hr_default = grids_from_values(values, grid.quad_weights)
        h_pca_candidates = hp_default if h_pca_candidates is None else h_pca_candidates
        h_reg_candidates = hr_default if h_reg_candidates is None else h_reg_candidates
    hp = np.sort(np.asarray(h_pca_candidates, dtype=float))
    hr = np.sort(np.asarray(h_reg_candidates, dtype=float))
    if hp.size == 0 or hr.size == 0:
        raise InvalidSettings("need at least one candidate per bandwidth")
    if np.any(hp <= 0) or np.any(hr <= 0):
        raise InvalidSettings("bandwidth candidates must be positive")
    if hp.size == 1 and hr.size == 1:
        return float(hp[0]), float(hr[0])
    n_folds = max(2, min(n_folds, n))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = np.array_split(perm, n_folds)

    d = dim.rounded
    w = grid.quad_weights
    sq_err = np.zeros((hp.size, hr.size))
    failed = np.zeros((hp.size, hr.size), dtype=bool)
    for fold in folds:
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        train_values = values[mask]
        train_y = responses[mask]
        if train_values.shape[0] < d + 2:
            failed[:, :] = True
            break
        dist_block = pairwise_l2(values[fold], train_values, w)
        for ip, h_pca in enumerate(hp):
            if failed[ip].all():
                continue
            for j, idx in enumerate(fold):
                x_values = values[idx]
                dists = dist_block[j]
                try:
                    _, _, basis, _, _ = frame_at(
                        x_values, train_values, grid, float(h_pca), d, dists=dists
                    )
                except FremError:
                    failed[ip, :] = True
                    break
                coords = (train_values * w) @ basis.T
                cx = (x_values * w) @ basis.T
                for ir, h_reg in enumerate(hr):
                    if failed[ip, ir]:
                        continue
                    try:
                        pred, _ = _weighted_fit(
                            train_y, dists, coords, cx, d, float(h_reg)
                        )
                    except FremError:
                        failed[ip, ir] = True
                        continue
                    sq_err[ip, ir] += (pred - responses[idx]) ** 2
    if failed.all():
        raise AllFoldsFailed("every bandwidth pair errored during cross-validation")
    best, best_err = None, np.inf
    for ir in range(hr.size):          # h_reg outer: ties prefer smaller h_reg
        for ip in range(hp.size):      # then smaller h_pca
            if failed[ip, ir]:
                continue
            if improves(sq_err[ip, ir], best_err):
                best, best_err = (float(hp[ip]), float(hr[ir])), float(sq_err[ip, ir])
    return best


def fit(curves, responses, dim: DimEstimate | None = None,
        h_pca: float | None = None, h_reg: float | None = None,
        cv_seed: int = 0) -> FremModel:
    """Convenience pipeline: estimate the dimension if not given, select any
    missing bandwidth by cross-validation, and return the fitted model."""
    from .intrinsic_dim import estimate_dim

    if dim is None:
        dim = estimate_dim(curves)
    if h_pca is None or h_reg is None:
        sel_pca, sel_reg = select_bandwidths(curves, responses, dim, seed=cv_seed)
        h_pca = sel_pca if h_pca is None else h_pca
        h_reg = sel_reg if h_reg is None else h_reg
    return FremModel(curves, np.asarray(responses, dtype=float), dim, h_pca, h_reg)


def predict(model: FremModel, query: DiscreteObservations) -> float:
    """Prediction for a discretely observed query predictor.

    The query record is first recovered with the default smoother onto the
    model grid, then evaluated by the local fit.
    """
    x_tilde = smooth_with_defaults(query, model.grid)
    value, _ = fit_local(model, x_tilde)
    return value
