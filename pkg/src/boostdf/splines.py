"""Natural cubic smoothing splines with trace-calibrated smoothness.

For one covariate x the smoother solves the penalized least-squares problem

    minimize  sum_i (r_i - f(x_i))^2  +  lam * integral f''(t)^2 dt

over natural cubic splines f with knots at the unique sorted values of x.
Writing N for the 0/1 matrix that broadcasts knot values to observations,
W = N'N for the diagonal of knot multiplicities and K = Q R^{-1} Q' for the
usual second-difference roughness matrix, the fitted knot values are

    f = (W + lam K)^{-1} N' r,

and the hat matrix on the n original observations is H = N (W + lam K)^{-1} N'.
H is symmetric with eigenvalues in [0, 1], reproduces constant and linear
functions exactly (the null space of the penalty), and its trace decreases
monotonically from the number of knots (lam -> 0) to 2 (lam -> infinity).

The implementation works in the Reinsch form

    S = I - lam * W^{-1} Q (R + lam * Q' W^{-1} Q)^{-1} Q'

(on knot values, S = (W + lam K)^{-1} W) rather than forming K explicitly,
which keeps the affine-reproduction property accurate even when knot gaps
are tiny and K would be badly conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .designs import HatOperator, _freeze
from .errors import CalibrationFailed, TooFewUniqueValues

# log-lambda search range and stopping rule for trace calibration
_LOG_LAM_LO = -20.0
_LOG_LAM_HI = 20.0
_MAX_BISECT = 200
_TRACE_TOL = 1e-6


@dataclass(frozen=True)
class SplineSmoother:
    """Calibrated one-dimensional smoothing-spline hat for a fixed covariate.

    ``hat`` acts on the original n observations; duplicate x values are
    averaged into their knot and the knot fit is broadcast back.
    """

    knots: np.ndarray            # strictly increasing unique x values
    weights: np.ndarray          # per-knot multiplicities
    lam: float                   # smoothing parameter (>= 0)
    hat: HatOperator
    target_df: float
    knot_index: np.ndarray       # observation -> knot position
    first_occurrence: np.ndarray  # knot -> index of one representative observation

    @property
    def n_knots(self) -> int:
        return self.knots.shape[0]


def second_difference_bands(knots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return the (Q, R) band matrices of the natural cubic roughness form.

    Q is K x (K-2) with the divided second differences in its columns and R
    is the (K-2) x (K-2) symmetric tridiagonal Gram matrix, so that the
    roughness penalty of a natural cubic spline with knot values f equals
    f' Q R^{-1} Q' f, and the interior second derivatives solve R g = Q' f.
    """
    h = np.diff(knots)
    k = knots.shape[0]
    if k < 3:
        raise TooFewUniqueValues(f"need at least 3 distinct knots, got {k}")
    if np.any(h <= 0):
        raise ValueError("knots must be strictly increasing")
    q = np.zeros((k, k - 2))
    idx = np.arange(k - 2)
    q[idx, idx] = 1.0 / h[:-1]
    q[idx + 1, idx] = -1.0 / h[:-1] - 1.0 / h[1:]
    q[idx + 2, idx] = 1.0 / h[1:]
    r = np.zeros((k - 2, k - 2))
    r[idx, idx] = (h[:-1] + h[1:]) / 3.0
    off = h[1:-1] / 6.0
    r[idx[:-1], idx[:-1] + 1] = off
    r[idx[:-1] + 1, idx[:-1]] = off
    return q, r


def _knot_setup(x: np.ndarray):
    knots, first, inverse, counts = np.unique(
        x, return_index=True, return_inverse=True, return_counts=True
    )
    return knots, first, inverse, counts.astype(float)


def penalized_hat(x, lam: float) -> HatOperator:
    """Dense smoothing-spline hat on the observations of ``x`` at a fixed lam."""
    x = np.asarray(x, dtype=float)
    knots, _, inverse, weights = _knot_setup(x)
    s_knots = _knot_smoother(knots, weights, lam)
    return _expand_hat(s_knots, weights, inverse)


def _knot_smoother(knots, weights, lam) -> np.ndarray:
    """S = I - lam * W^{-1} Q (R + lam Q' W^{-1} Q)^{-1} Q' on knot values."""
    q, r = second_difference_bands(knots)
    qw = q / weights[:, None]                    # W^{-1} Q
    t = r + lam * (q.T @ qw)
    sol = np.linalg.solve(t, q.T)                # (K-2) x K
    return np.eye(knots.shape[0]) - lam * (qw @ sol)


def _knot_trace(knots, weights, lam) -> float:
    """trace of the observation hat; equals the trace of the knot smoother."""
    q, r = second_difference_bands(knots)
    qw = q / weights[:, None]
    t = r + lam * (q.T @ qw)
    sol = np.linalg.solve(t, q.T)
    # only the diagonal of qw @ sol is needed
    diag = np.einsum("ij,ji->i", qw, sol)
    return float(knots.shape[0] - lam * diag.sum())


def _expand_hat(s_knots, weights, inverse) -> HatOperator:
    # H_ij = (A^{-1})_{k_i, k_j} with A^{-1} = S W^{-1}; symmetrize the
    # knot-level matrix so the observation hat is symmetric by construction.
    a_inv = s_knots / weights[None, :]
    a_inv = 0.5 * (a_inv + a_inv.T)
    return HatOperator(a_inv[np.ix_(inverse, inverse)])


def calibrate_spline(x, target_df: float) -> SplineSmoother:
    """Calibrate lam by bisection so that the hat trace equals ``target_df``.

    The trace is strictly decreasing in lam, from the number of distinct
    knots down to 2, so any target strictly inside that range is bracketed
    by log lam in [-20, 20] for well-scaled data. Raises
    :class:`TooFewUniqueValues` when the knot count cannot support the
    target and :class:`CalibrationFailed` when the bracket does not hold
    (for example for degenerately scaled x).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    knots, first, inverse, weights = _knot_setup(x)
    k = knots.shape[0]
    if not 2.0 < target_df < k:
        raise TooFewUniqueValues(
            f"target_df must lie strictly between 2 and the number of "
            f"distinct values ({k}), got {target_df}"
        )

    lo, hi = _LOG_LAM_LO, _LOG_LAM_HI
    if _knot_trace(knots, weights, math.exp(lo)) < target_df - _TRACE_TOL:
        raise CalibrationFailed(
            f"trace at lam=e^{lo:g} already below target {target_df}"
        )
    if _knot_trace(knots, weights, math.exp(hi)) > target_df + _TRACE_TOL:
        raise CalibrationFailed(
            f"trace at lam=e^{hi:g} still above target {target_df}"
        )

    lam = None
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        tr = _knot_trace(knots, weights, math.exp(mid))
        if abs(tr - target_df) < _TRACE_TOL:
            lam = math.exp(mid)
            break
        if tr > target_df:
            lo = mid
        else:
            hi = mid
    if lam is None:
        raise CalibrationFailed(
            f"bisection did not reach |trace - {target_df}| < {_TRACE_TOL}"
        )

    hat = _expand_hat(_knot_smoother(knots, weights, lam), weights, inverse)
    return SplineSmoother(
        knots=_freeze(knots),
        weights=_freeze(weights),
        lam=lam,
        hat=hat,
        target_df=float(target_df),
        knot_index=_freeze(inverse),
        first_occurrence=_freeze(first),
    )


def natural_spline_second_derivatives(knots, values) -> np.ndarray:
    """Second derivatives at the knots of the natural cubic interpolant."""
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    q, r = second_difference_bands(knots)
    s = np.zeros(knots.shape[0])
    s[1:-1] = np.linalg.solve(r, q.T @ values)
    return s


def natural_spline_eval(knots, values, xq) -> np.ndarray:
    """Evaluate the natural cubic interpolant of (knots, values) at ``xq``.

    Outside the knot range the spline is continued linearly with the
    endpoint slopes, matching the behaviour of the smoothing spline.
    """
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    xq = np.asarray(xq, dtype=float)
    s = natural_spline_second_derivatives(knots, values)
    h = np.diff(knots)

    i = np.clip(np.searchsorted(knots, xq, side="right") - 1, 0, knots.shape[0] - 2)
    hi = h[i]
    a = knots[i + 1] - xq
    b = xq - knots[i]
    out = (
        s[i] * a**3 / (6.0 * hi)
        + s[i + 1] * b**3 / (6.0 * hi)
        + (values[i] / hi - s[i] * hi / 6.0) * a
        + (values[i + 1] / hi - s[i + 1] * hi / 6.0) * b
    )

    # endpoint slopes: f'(t_0) and f'(t_{K-1}) of the natural interpolant
    d_left = (values[1] - values[0]) / h[0] - h[0] * (2.0 * s[0] + s[1]) / 6.0
    d_right = (values[-1] - values[-2]) / h[-1] + h[-1] * (s[-2] + 2.0 * s[-1]) / 6.0
    left = xq < knots[0]
    right = xq > knots[-1]
    if np.any(left):
        out = np.where(left, values[0] + d_left * (xq - knots[0]), out)
    if np.any(right):
        out = np.where(right, values[-1] + d_right * (xq - knots[-1]), out)
    return out
