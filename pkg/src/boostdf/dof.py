"""Degrees-of-freedom estimators for boosting paths and AIC-style stopping.

Three estimators are provided for the m-iteration squared-error model:

* trace df: trace(B_m), which ignores the cost of searching over components
  and therefore underestimates;
* active-set df: one for the intercept plus the number of distinct columns
  selected in the first m iterations;
* Monte Carlo "true" df: sum_i Cov(yhat_i, y_i) / sigma^2 estimated over
  noise replicates on a fixed design, with the known noise realisations used
  directly (the simulation knows the mean, so this is unbiased).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .boosting import BoostConfig, L2BoostPath, l2boost
from .errors import HatNotTracked, NoAdmissibleIteration


def df_trace(path: L2BoostPath, m: int) -> float:
    """trace(B_m) of a tracked path; m = 0 gives the intercept-only value 1."""
    if path.hat_path is None:
        raise HatNotTracked("run with track_hat=True to use trace df")
    if not 0 <= m <= path.mstop:
        raise ValueError(f"m must be in [0, {path.mstop}], got {m}")
    return path.hat_path[m].trace


def df_actset(path: L2BoostPath, m: int) -> int:
    """Active-set df: intercept plus distinct columns selected up to m."""
    if not 0 <= m <= path.mstop:
        raise ValueError(f"m must be in [0, {path.mstop}], got {m}")
    return 1 + len({step.selected_index for step in path.steps[:m]})


@dataclass(eq=False)
class DfTrueEstimate:
    """Monte Carlo estimate of the covariance df over a grid of iterations."""

    m_grid: np.ndarray
    values: np.ndarray
    se: np.ndarray
    replicates: int


def df_true_mc(spec, config: BoostConfig, m_grid=None, replicates: int = 100) -> DfTrueEstimate:
    """Estimate the covariance df of a boosting rule on a simulation model.

    The design is sampled once from the model's design seed and held fixed;
    for each replicate a fresh noise vector produces y, the full path is
    fitted, and the per-replicate statistic sum_i yhat_i(m) eps_i / sigma^2
    is averaged over replicates. Standard errors are the replicate standard
    deviation divided by sqrt(R).
    """
    from . import sim  # runners live downstream of this module
    from .boosting import prepare_smoothers

    m_grid = _as_m_grid(m_grid, config.mstop)
    X = sim.design_matrix(spec)
    run_config = replace(config, mstop=max(1, int(m_grid.max())), track_hat=False)
    smoothers = prepare_smoothers(X, run_config.learner)
    q = np.empty((replicates, m_grid.shape[0]))
    for rep in range(replicates):
        y, _, eps = sim.draw_response(spec, X, rep)
        path = l2boost(X, y, run_config, smoothers=smoothers)
        q[rep] = path.fitted_path[m_grid] @ eps / spec.sigma_sq
    return DfTrueEstimate(
        m_grid=m_grid,
        values=q.mean(axis=0),
        se=q.std(axis=0, ddof=1) / math.sqrt(replicates),
        replicates=replicates,
    )


def _as_m_grid(m_grid, mstop: int) -> np.ndarray:
    if m_grid is None:
        m_grid = np.arange(1, mstop + 1)
    m_grid = np.asarray(m_grid, dtype=int)
    if m_grid.ndim != 1 or m_grid.size == 0 or m_grid.min() < 0:
        raise ValueError("m_grid must be a nonempty 1-d array of nonnegative iterations")
    return m_grid


@dataclass(eq=False)
class DfCurves:
    """Per-replicate df estimator curves plus the Monte Carlo covariance df.

    ``df_actset`` is None for spline-learner runs, where counting selected
    covariates does not measure model complexity.
    """

    m_grid: np.ndarray
    df_trace: np.ndarray            # (R, M)
    df_actset: np.ndarray | None    # (R, M) ints
    df_true_hat: np.ndarray         # (M,)
    df_true_se: np.ndarray          # (M,)
    sigma_sq: float

    @property
    def replicates(self) -> int:
        return self.df_trace.shape[0]


_AICC_LABELS = ("trace", "actset")


def aic_stop(path: L2BoostPath, df_estimator: str, n: int) -> int:
    """Iteration minimizing the corrected AIC along the path.

    The criterion is log(RSS(m)/n) + (1 + df(m)/n) / (1 - (df(m)+2)/n);
    iterations with df(m) + 2 >= n are excluded and exact ties go to the
    smallest m. ``df_estimator`` selects trace or active-set df.
    """
    if df_estimator not in _AICC_LABELS:
        raise ValueError(f"df_estimator must be one of {_AICC_LABELS}")
    ms = np.arange(path.mstop + 1)
    if df_estimator == "trace":
        df = np.array([df_trace(path, m) for m in ms])
    else:
        df = np.array([df_actset(path, m) for m in ms], dtype=float)
    admissible = df + 2.0 < n
    if not admissible.any():
        raise NoAdmissibleIteration("every iteration has df + 2 >= n")
    with np.errstate(divide="ignore"):
        crit = np.log(path.rss_path / n) + (1.0 + df / n) / (1.0 - (df + 2.0) / n)
    crit[~admissible] = np.inf
    return int(np.argmin(crit))


def aicc_value(rss: float, df: float, n: int) -> float:
    """Corrected-AIC value for a fit with the given residual sum of squares."""
    if df + 2.0 >= n:
        raise NoAdmissibleIteration(f"df + 2 = {df + 2} must stay below n = {n}")
    with np.errstate(divide="ignore"):
        return float(np.log(rss / n) + (1.0 + df / n) / (1.0 - (df + 2.0) / n))
