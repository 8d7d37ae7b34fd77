"""Gradient-boosting engines.

Two losses are implemented. For squared error, :func:`l2boost` starts from
the response mean and adds a step-size-scaled base fit of the current
residual each iteration; with a linear-smoother base learner the fitted
values satisfy yhat^(m) = B_m y for the recursively updated hat operator

    B_0 = (1/n) 11',    B_m = B_{m-1} + nu * H_m (I - B_{m-1}),

where H_m is the hat of the component chosen at iteration m (for the
componentwise linear learner the centered rank-one part only: the intercept
is fitted once at m = 0 and never re-selected).

For binary labels, :func:`binomial_boost` runs functional gradient descent
on the negative binomial log-likelihood. Scores parameterize half the
log-odds, so p = 1 / (1 + exp(-2 f)) and the working response (negative
gradient) is exactly 2 (y - p). No line search is performed; every step is
the plain nu-scaled least-squares fit of the working response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .designs import DesignMatrix, HatOperator, as_design
from .errors import DimensionMismatch, SingleClassInput
from .learners import (
    TreeFit,
    _select_linear,
    _select_spline,
    calibrate_design_smoothers,
    fit_tree,
)
from .splines import natural_spline_eval

#: clamp applied to p before the Newton-style working response is formed
PROB_EPS = 1e-10
#: conventional cap for the Newton-style working response
DEFAULT_WORKING_CAP = 4.0


@dataclass(frozen=True)
class ComponentwiseLinear:
    """Componentwise simple least squares (one column plus intercept)."""


@dataclass(frozen=True)
class ComponentwiseSpline:
    """Componentwise cubic smoothing splines with trace-calibrated df."""

    target_df: float = 4.0


@dataclass(frozen=True)
class StumpLearner:
    """Two-leaf regression tree."""

    min_leaf: int = 1


@dataclass(frozen=True)
class TreeLearner:
    """Best-first regression tree with a terminal-node budget."""

    max_leaves: int = 8
    min_leaf: int = 5


Learner = ComponentwiseLinear | ComponentwiseSpline | StumpLearner | TreeLearner

_LEARNER_NAMES = {
    ComponentwiseLinear: "linear",
    ComponentwiseSpline: "spline",
    StumpLearner: "stump",
    TreeLearner: "tree",
}


def learner_name(learner: Learner) -> str:
    return _LEARNER_NAMES[type(learner)]


@dataclass(frozen=True)
class BoostConfig:
    """Boosting run parameters.

    ``track_hat`` materializes B_m each iteration (O(n^2) memory and time per
    step) and is only defined for linear-smoother learners.
    """

    mstop: int
    learner: Learner
    nu: float = 0.1
    track_hat: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must be in (0, 1], got {self.nu}")
        if self.mstop < 1:
            raise ValueError(f"mstop must be >= 1, got {self.mstop}")
        if self.track_hat and not isinstance(
            self.learner, (ComponentwiseLinear, ComponentwiseSpline)
        ):
            raise ValueError("track_hat requires a linear or spline learner")


# ---------------------------------------------------------------------------
# per-iteration step records; ``predict`` returns the step's contribution to
# the final fit (already step-size scaled)


@dataclass(frozen=True)
class LinearStep:
    selected_index: int
    slope: float        # scaled slope on the centered column
    center: float
    intercept: float = 0.0

    def predict(self, V: np.ndarray) -> np.ndarray:
        return self.intercept + self.slope * (V[:, self.selected_index] - self.center)


@dataclass(frozen=True)
class SplineStep:
    selected_index: int
    knots: np.ndarray
    values: np.ndarray  # scaled base fit at the knots

    def predict(self, V: np.ndarray) -> np.ndarray:
        return natural_spline_eval(self.knots, self.values, V[:, self.selected_index])


@dataclass(frozen=True)
class TreeStep:
    selected_index: int  # root split column
    tree: TreeFit
    scale: float

    def predict(self, V: np.ndarray) -> np.ndarray:
        return self.scale * self.tree.predict(V)


BoostStep = LinearStep | SplineStep | TreeStep


@dataclass(eq=False)
class L2BoostPath:
    """Realized squared-error boosting path on a fixed training set."""

    intercept: float
    nu: float
    steps: list[BoostStep]
    fitted_path: np.ndarray              # (mstop + 1, n), row m = yhat^(m)
    rss_path: np.ndarray                 # (mstop + 1,)
    hat_path: list[HatOperator] | None   # B_0 .. B_mstop when tracked
    n_features: int

    @property
    def mstop(self) -> int:
        return len(self.steps)


@dataclass(eq=False)
class BinomBoostPath:
    """Realized binomial boosting path; scores are half log-odds."""

    offset: float
    nu: float
    steps: list[BoostStep]
    score_path: np.ndarray               # (mstop + 1, n), row m = f^(m)
    n_features: int

    @property
    def mstop(self) -> int:
        return len(self.steps)


def half_logodds_probability(f) -> np.ndarray:
    """p = 1 / (1 + exp(-2 f)), computed overflow-free via tanh."""
    return 0.5 * (1.0 + np.tanh(np.asarray(f, dtype=float)))


def surrogate_loss(y, f) -> float:
    """Mean negative binomial log-likelihood at half-log-odds scores f."""
    sign = 2.0 * np.asarray(y, dtype=float) - 1.0
    return float(np.mean(np.logaddexp(0.0, -2.0 * sign * np.asarray(f, dtype=float))))


def working_response_linear(y, p):
    """Negative gradient of the surrogate loss: 2 (y - p)."""
    return 2.0 * (np.asarray(y, dtype=float) - np.asarray(p, dtype=float))


def working_response_quadratic(y, p, cap: float = DEFAULT_WORKING_CAP):
    """Newton-style working response (y - p) / (2 p (1 - p)), thresholded at +-cap.

    p is clamped away from {0, 1} before dividing, so boundary inputs do not
    blow up; the cap keeps the remaining huge values bounded.
    """
    if cap <= 0:
        raise ValueError(f"cap must be positive, got {cap}")
    p = np.clip(np.asarray(p, dtype=float), PROB_EPS, 1.0 - PROB_EPS)
    z = 0.5 * (np.asarray(y, dtype=float) - p) / (p * (1.0 - p))
    return np.clip(z, -cap, cap)


def _fit_base(X: DesignMatrix, r: np.ndarray, learner: Learner, smoothers, nu: float):
    """Fit one base step to ``r``; returns (step record, unscaled base fit)."""
    if isinstance(learner, ComponentwiseLinear):
        j, slope = _select_linear(X, r)
        rbar = float(r.mean())
        base = rbar + slope * X.centered[:, j]
        step = LinearStep(
            selected_index=j,
            slope=nu * slope,
            center=float(X.col_means[j]),
            intercept=nu * rbar,
        )
        return step, base
    if isinstance(learner, ComponentwiseSpline):
        j, base = _select_spline(X, r, smoothers)
        sm = smoothers[j]
        step = SplineStep(
            selected_index=j, knots=sm.knots, values=nu * base[sm.first_occurrence]
        )
        return step, base
    if isinstance(learner, StumpLearner):
        tree = fit_tree(X, r, max_leaves=2, min_leaf=learner.min_leaf)
    elif isinstance(learner, TreeLearner):
        tree = fit_tree(X, r, max_leaves=learner.max_leaves, min_leaf=learner.min_leaf)
    else:
        raise TypeError(f"unknown learner {learner!r}")
    return TreeStep(selected_index=tree.root.split_index, tree=tree, scale=nu), tree.fitted


def prepare_smoothers(X: DesignMatrix, learner: Learner, smoothers=None):
    """Calibrate per-column smoothers once for a spline learner (else pass through)."""
    if isinstance(learner, ComponentwiseSpline) and smoothers is None:
        return calibrate_design_smoothers(X, learner.target_df)
    return smoothers


def l2boost(X, y, config: BoostConfig, smoothers=None) -> L2BoostPath:
    """Squared-error boosting of ``y`` on a fixed design.

    ``smoothers`` may carry pre-calibrated per-column spline smoothers so
    Monte Carlo replicates on the same design skip recalibration.
    """
    X = as_design(X)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.n,):
        raise ValueError(f"response must have length {X.n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite entries")
    smoothers = prepare_smoothers(X, config.learner, smoothers)
    linear = isinstance(config.learner, ComponentwiseLinear)
    nu = config.nu

    n = X.n
    fitted = np.full(n, y.mean())
    fitted_path = np.empty((config.mstop + 1, n))
    fitted_path[0] = fitted
    rss_path = np.empty(config.mstop + 1)
    rss_path[0] = float(np.sum((y - fitted) ** 2))

    hat_path = None
    b = None
    if config.track_hat:
        b = np.full((n, n), 1.0 / n)
        hat_path = [HatOperator(b.copy())]

    steps: list[BoostStep] = []
    for _ in range(config.mstop):
        r = y - fitted
        if linear:
            # the intercept is fixed at m = 0; the per-iteration base fit is
            # the centered rank-one component only
            j, slope = _select_linear(X, r)
            xc = X.centered[:, j]
            base = slope * xc
            steps.append(
                LinearStep(selected_index=j, slope=nu * slope, center=float(X.col_means[j]))
            )
        else:
            step, base = _fit_base(X, r, config.learner, smoothers, nu)
            steps.append(step)
        fitted = fitted + nu * base
        m = len(steps)
        fitted_path[m] = fitted
        rss_path[m] = float(np.sum((y - fitted) ** 2))
        if b is not None:
            if linear:
                sq = X.centered_col_sq_norms[j]
                b += (nu / sq) * np.outer(xc, xc - b.T @ xc)
            else:
                s = smoothers[steps[-1].selected_index].hat.matrix
                b += nu * (s - s @ b)
            hat_path.append(HatOperator(b.copy()))

    return L2BoostPath(
        intercept=float(y.mean()),
        nu=nu,
        steps=steps,
        fitted_path=fitted_path,
        rss_path=rss_path,
        hat_path=hat_path,
        n_features=X.p,
    )


def binomial_boost(X, y, config: BoostConfig, smoothers=None) -> BinomBoostPath:
    """Binomial boosting of labels ``y`` in {0, 1} on a fixed design."""
    X = as_design(X)
    y = np.asarray(y)
    if y.shape != (X.n,):
        raise ValueError(f"labels must have length {X.n}")
    y = y.astype(float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    pbar = float(y.mean())
    if pbar in (0.0, 1.0):
        raise SingleClassInput("both classes must be present")
    if config.track_hat:
        raise ValueError("hat tracking is defined for squared-error boosting only")
    smoothers = prepare_smoothers(X, config.learner, smoothers)
    nu = config.nu

    offset = 0.5 * math.log(pbar / (1.0 - pbar))
    f = np.full(X.n, offset)
    score_path = np.empty((config.mstop + 1, X.n))
    score_path[0] = f

    steps: list[BoostStep] = []
    for m in range(1, config.mstop + 1):
        p = half_logodds_probability(f)
        z = working_response_linear(y, p)
        step, base = _fit_base(X, z, config.learner, smoothers, nu)
        steps.append(step)
        f = f + nu * base
        score_path[m] = f

    return BinomBoostPath(
        offset=offset, nu=nu, steps=steps, score_path=score_path, n_features=X.p
    )


def _as_values(Xnew, n_features: int) -> np.ndarray:
    V = Xnew.values if isinstance(Xnew, DesignMatrix) else np.asarray(Xnew, dtype=float)
    if V.ndim != 2:
        raise ValueError("prediction input must be a 2-d array")
    if V.shape[1] != n_features:
        raise DimensionMismatch(
            f"expected {n_features} columns, got {V.shape[1]}"
        )
    return V


def _check_m(m: int, mstop: int) -> None:
    if not 0 <= m <= mstop:
        raise ValueError(f"m must be in [0, {mstop}], got {m}")


def predict_l2(path: L2BoostPath, m: int, Xnew) -> np.ndarray:
    """Prediction of the m-iteration squared-error model at new points."""
    _check_m(m, path.mstop)
    V = _as_values(Xnew, path.n_features)
    out = np.full(V.shape[0], path.intercept)
    for step in path.steps[:m]:
        out += step.predict(V)
    return out


def predict_binomial(
    path: BinomBoostPath, m: int, Xnew
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scores, probabilities, and hard labels of the m-iteration classifier.

    The label at exactly f = 0 is 0.
    """
    _check_m(m, path.mstop)
    V = _as_values(Xnew, path.n_features)
    f = np.full(V.shape[0], path.offset)
    for step in path.steps[:m]:
        f += step.predict(V)
    probs = half_logodds_probability(f)
    labels = (f > 0).astype(int)
    return f, probs, labels
