"""Convergence-rate studies: recovery error in m, regression error in n."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import recovery
from ..errors import InvalidSettings, MethodMismatch
from ..funcspace import Grid
from .config import SimulationConfig, mix_seed
from .report import EvalReport
from .simulate import run_simulation


@dataclass
class RateReport:
    """Least-squares slope of log error versus log sample size."""

    mode: str                      # "recovery" or "regression"
    abscissae: np.ndarray          # m values or n values
    mean_rmse: dict                # method (or "recovery") -> per-abscissa means
    slopes: dict                   # method -> slope of log mean vs log abscissa
    bootstrap_se: dict             # method -> bootstrap standard error of slope
    replicate_rmse: dict           # method -> (n_abscissae, replicates) array


def _slope(log_x: np.ndarray, log_y: np.ndarray) -> float:
    return float(np.polyfit(log_x, log_y, 1)[0])


def _bootstrap_se(log_x: np.ndarray, rep_matrix: np.ndarray, seed: int,
                  n_boot: int = 200) -> float:
    rng = np.random.default_rng(seed)
    n_abs, reps = rep_matrix.shape
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        means = np.empty(n_abs)
        for i in range(n_abs):
            take = rng.integers(0, reps, reps)
            means[i] = rep_matrix[i, take].mean()
        slopes[b] = _slope(log_x, np.log(means))
    return float(np.std(slopes, ddof=1))


def recovery_rate_study(m_list, replicates: int, master_seed: int,
                        snr_x: float = 4.0, nu: float = 2.0,
                        grid_size: int = 100, scale: float = 0.5) -> RateReport:
    """Recovery error of the ridged smoother on a sine curve as m grows.

    Each replicate draws m uniform observation times of sin(2 pi t) with
    measurement noise of variance Var_t(sin)/snr_x, smooths with the
    rate-order bandwidth scale * m^(-1/(2 nu + 1)), and records the L2 error
    on the output grid. The default scale 0.5 keeps the bandwidth well below
    the sine's period at the small-m end, so the asymptotic rate is visible
    at desk scale.
    """
    m_list = [int(m) for m in m_list]
    if len(m_list) < 3:
        raise InvalidSettings("need at least three sampling rates")
    grid = Grid.regular(0.0, 1.0, grid_size)
    truth = np.sin(2.0 * np.pi * grid.points)
    sigma = np.sqrt(0.5 / snr_x)   # time-domain variance of sin(2 pi t) is 1/2
    rep_matrix = np.empty((len(m_list), replicates))
    for i, m in enumerate(m_list):
        h = recovery.default_bandwidth(m, nu, scale)
        ridge = recovery.default_ridge(m)
        for r in range(replicates):
            rng = np.random.default_rng(mix_seed(master_seed, m, r))
            times = rng.uniform(0.0, 1.0, m)
            values = np.sin(2.0 * np.pi * times) + rng.standard_normal(m) * sigma
            est = recovery.smooth_values(times, values, h, ridge, grid.points)
            diff = est - truth
            rep_matrix[i, r] = np.sqrt((diff * diff) @ grid.quad_weights)
    log_x = np.log(np.asarray(m_list, dtype=float))
    means = rep_matrix.mean(axis=1)
    return RateReport(
        mode="recovery",
        abscissae=np.asarray(m_list, dtype=float),
        mean_rmse={"recovery": means},
        slopes={"recovery": _slope(log_x, np.log(means))},
        bootstrap_se={"recovery": _bootstrap_se(log_x, rep_matrix,
                                                mix_seed(master_seed, 777))},
        replicate_rmse={"recovery": rep_matrix},
    )


def regression_rate_study(base_config: SimulationConfig, n_list,
                          workers: int | None = None) -> RateReport:
    """Regression rMSE versus n for every configured method.

    Runs the full simulation at each n (same master seed, so replicates pair
    across sample sizes) and fits the log-log slope per method.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3:
        raise InvalidSettings("need at least three sample sizes")
    reports = [
        run_simulation(_with_n(base_config, n), workers=workers) for n in n_list
    ]
    return rate_report_from_runs(n_list, reports, base_config.master_seed)


def rate_report_from_runs(n_list, reports, master_seed: int) -> RateReport:
    log_x = np.log(np.asarray(n_list, dtype=float))
    methods = reports[0].methods
    mean_rmse, slopes, se, rep_mats = {}, {}, {}, {}
    for method in methods:
        rep_matrix = np.vstack([rep.results[method].rmse for rep in reports])
        means = np.array([np.nanmean(row) for row in rep_matrix])
        mean_rmse[method] = means
        slopes[method] = _slope(log_x, np.log(means))
        clean = np.where(np.isnan(rep_matrix), means[:, None], rep_matrix)
        se[method] = _bootstrap_se(log_x, clean, mix_seed(master_seed, 778))
        rep_mats[method] = rep_matrix
    return RateReport(
        mode="regression",
        abscissae=np.asarray(n_list, dtype=float),
        mean_rmse=mean_rmse,
        slopes=slopes,
        bootstrap_se=se,
        replicate_rmse=rep_mats,
    )


def _with_n(config: SimulationConfig, n: int) -> SimulationConfig:
    data = config.to_dict()
    data["n"] = n
    return SimulationConfig.from_dict(data)


def relative_reduction(report_small: EvalReport, report_large: EvalReport,
                       d: int | None = None):
    """Percent rMSE reduction per method between two sample sizes.

    Also emits the theoretical expectation 100 (1 - (n1/n2)^(2/(d+4))) for a
    given intrinsic dimension d (attached to every row for reference).
    """
    if report_small.methods != report_large.methods:
        raise MethodMismatch(
            f"reports cover different methods: {report_small.methods} vs "
            f"{report_large.methods}"
        )
    theoretical = None
    if d is not None:
        ratio = report_small.n / report_large.n
        theoretical = 100.0 * (1.0 - ratio ** (2.0 / (d + 4.0)))
    rows = []
    for method in report_small.methods:
        small = report_small.results[method].mean_rmse
        large = report_large.results[method].mean_rmse
        rows.append({
            "method": method,
            "n_small": report_small.n,
            "n_large": report_large.n,
            "rmse_small": small,
            "rmse_large": large,
            "reduction_pct": 100.0 * (1.0 - large / small),
            "theoretical_pct": theoretical,
        })
    return rows
