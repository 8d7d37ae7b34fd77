"""Base procedures: componentwise least squares, componentwise smoothing
splines, stumps, and small best-first regression trees.

Every learner fits a working response by least squares and is a pure,
deterministic function of its inputs. RSS ties are broken by lowest column
index, then smallest threshold, so repeated fits are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .designs import DesignMatrix, HatOperator, as_design
from .errors import AllColumnsConstant, NoValidSplit
from .splines import SplineSmoother, calibrate_spline

#: smallest SSE decrease that counts as an improvement when growing a tree
#: beyond its first split
TREE_GAIN_TOL = 1e-12


@dataclass(frozen=True)
class ComponentFit:
    """One componentwise fit: the winning column and its least-squares fit.

    ``hat`` is present for the linear and spline learners and absent for
    trees; ``coef`` is the (intercept, slope) pair of the linear learner,
    with the slope acting on the centered column.
    """

    selected_index: int
    fitted: np.ndarray
    hat: HatOperator | None = None
    coef: tuple[float, float] | None = None


def _select_linear(X: DesignMatrix, r: np.ndarray) -> tuple[int, float]:
    """Best single centered column for ``r``; returns (index, slope).

    The intercept of each candidate fit is mean(r) regardless of the column,
    so minimizing RSS is the same as maximizing (x~' r)^2 / ||x~||^2.
    """
    if not X.eligible.any():
        raise AllColumnsConstant("every design column is constant")
    c = X.centered.T @ r
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(X.eligible, c * c / X.centered_col_sq_norms, -np.inf)
    j = int(np.argmax(score))
    return j, float(c[j] / X.centered_col_sq_norms[j])


def fit_componentwise_linear(X, r, with_hat: bool = True) -> ComponentFit:
    """Simple least-squares fit of ``r`` on the best single column plus intercept.

    The hat of the winning component is (1/n) 11' + x~ x~' / ||x~||^2 with x~
    the centered column, so a single full fit has trace exactly 2.
    """
    X = as_design(X)
    r = np.asarray(r, dtype=float)
    if r.shape != (X.n,):
        raise ValueError(f"response must have length {X.n}")
    if not np.all(np.isfinite(r)):
        raise ValueError("response contains non-finite entries")
    j, slope = _select_linear(X, r)
    intercept = float(r.mean())
    xc = X.centered[:, j]
    fitted = intercept + slope * xc
    hat = None
    if with_hat:
        n = X.n
        hat = HatOperator(
            np.full((n, n), 1.0 / n)
            + np.outer(xc, xc) / X.centered_col_sq_norms[j]
        )
    return ComponentFit(selected_index=j, fitted=fitted, hat=hat, coef=(intercept, slope))


def calibrate_design_smoothers(
    X, target_df: float = 4.0
) -> list[SplineSmoother | None]:
    """Calibrate one smoother per column of a fixed design.

    Columns that cannot support the target (constant, or with too few
    distinct values) get ``None`` and are skipped during selection.
    """
    X = as_design(X)
    smoothers: list[SplineSmoother | None] = []
    for j in range(X.p):
        if X.eligible[j] and len(np.unique(X.values[:, j])) > target_df:
            smoothers.append(calibrate_spline(X.values[:, j], target_df))
        else:
            smoothers.append(None)
    return smoothers


def _select_spline(
    X: DesignMatrix, r: np.ndarray, smoothers
) -> tuple[int, np.ndarray]:
    best_j = -1
    best_rss = np.inf
    best_fit = None
    for j, sm in enumerate(smoothers):
        if sm is None:
            continue
        fit = sm.hat.matrix @ r
        rss = float(np.sum((r - fit) ** 2))
        if rss < best_rss:
            best_j, best_rss, best_fit = j, rss, fit
    if best_fit is None:
        raise AllColumnsConstant("no column has a calibrated smoother")
    return best_j, best_fit


def fit_componentwise_spline(X, r, smoothers) -> ComponentFit:
    """Apply each column's pre-calibrated smoother to ``r`` and keep the best.

    Selection minimizes ||r - S_j r||^2; the returned hat is the winning
    smoother itself.
    """
    X = as_design(X)
    r = np.asarray(r, dtype=float)
    if len(smoothers) != X.p:
        raise ValueError("need one smoother slot per design column")
    j, fitted = _select_spline(X, r, smoothers)
    return ComponentFit(selected_index=j, fitted=fitted, hat=smoothers[j].hat)


# ---------------------------------------------------------------------------
# trees


@dataclass(frozen=True)
class TreeNode:
    """Binary tree node; a leaf iff ``split_index`` is None."""

    split_index: int | None = None
    threshold: float | None = None
    left: TreeNode | None = None
    right: TreeNode | None = None
    value: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.split_index is None


@dataclass(frozen=True)
class TreeFit:
    """A fitted regression tree: leaf values are member means of the response."""

    root: TreeNode
    n_leaves: int
    fitted: np.ndarray

    def predict(self, V) -> np.ndarray:
        V = np.asarray(V, dtype=float)
        out = np.empty(V.shape[0])
        stack = [(self.root, np.arange(V.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if node.is_leaf:
                out[idx] = node.value
            else:
                go_left = V[idx, node.split_index] <= node.threshold
                stack.append((node.left, idx[go_left]))
                stack.append((node.right, idx[~go_left]))
        return out


def _best_split(V: np.ndarray, r: np.ndarray, min_leaf: int):
    """Exhaustive best split of (V, r) over all columns and midpoints.

    Returns (sse_decrease, column, threshold) or None when no admissible
    split exists. Candidate thresholds are midpoints between consecutive
    distinct sorted values; ties are broken by lowest column, then smallest
    threshold.
    """
    n = V.shape[0]
    if n < 2 * min_leaf or n < 2:
        return None
    order = np.argsort(V, axis=0, kind="stable")
    xs = np.take_along_axis(V, order, axis=0)
    rs = r[order]
    csum = np.cumsum(rs, axis=0)
    total = csum[-1]
    k = np.arange(1, n, dtype=float)[:, None]
    left = csum[:-1]
    right = total - left
    achieved = left**2 / k + right**2 / (n - k)
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        kk = np.arange(1, n)[:, None]
        valid &= (kk >= min_leaf) & (n - kk >= min_leaf)
    if not valid.any():
        return None
    achieved = np.where(valid, achieved, -np.inf)
    # transpose so argmax ties resolve by column first, then threshold
    flat = int(np.argmax(achieved.T))
    j, pos = divmod(flat, n - 1)
    gain = float(achieved[pos, j] - total[j] ** 2 / n)
    threshold = float(0.5 * (xs[pos, j] + xs[pos + 1, j]))
    return gain, j, threshold


class _GrowLeaf:
    __slots__ = ("idx", "split", "birth")

    def __init__(self, idx: np.ndarray, split, birth: int) -> None:
        self.idx = idx
        self.split = split  # (gain, column, threshold) or None
        self.birth = birth


def fit_tree(X, r, max_leaves: int = 8, min_leaf: int = 5) -> TreeFit:
    """Best-first greedy regression tree on (X, r).

    The leaf whose best split decreases SSE the most is split first, until
    ``max_leaves`` is reached or no split improves SSE by more than
    :data:`TREE_GAIN_TOL`; the first split is always made so the result has
    at least two leaves (matching :func:`fit_stump`). ``min_leaf`` bounds
    the observations per leaf. Raises :class:`NoValidSplit` when not even
    the first split is admissible.
    """
    X = as_design(X)
    r = np.asarray(r, dtype=float)
    if max_leaves < 2:
        raise ValueError(f"max_leaves must be >= 2, got {max_leaves}")
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")
    V = X.values

    root_split = _best_split(V, r, min_leaf)
    if root_split is None:
        raise NoValidSplit("no admissible first split (constant columns or leaf bound)")

    leaves = [_GrowLeaf(np.arange(X.n), root_split, 0)]
    children: dict[int, tuple] = {}  # birth -> (column, threshold, left birth, right birth)
    births = 1
    first = True
    while len(leaves) < max_leaves:
        best = None
        for leaf in leaves:
            if leaf.split is None:
                continue
            if not first and leaf.split[0] <= TREE_GAIN_TOL:
                continue
            if best is None or leaf.split[0] > best.split[0]:
                best = leaf
        if best is None:
            break
        first = False
        _, col, thr = best.split
        go_left = V[best.idx, col] <= thr
        left = _GrowLeaf(best.idx[go_left], None, births)
        right = _GrowLeaf(best.idx[~go_left], None, births + 1)
        left.split = _best_split(V[left.idx], r[left.idx], min_leaf)
        right.split = _best_split(V[right.idx], r[right.idx], min_leaf)
        children[best.birth] = (col, thr, left.birth, right.birth)
        births += 2
        leaves[leaves.index(best)] = left
        leaves.append(right)

    fitted = np.empty(X.n)
    values: dict[int, float] = {}
    for leaf in leaves:
        mean = float(r[leaf.idx].mean())
        values[leaf.birth] = mean
        fitted[leaf.idx] = mean

    def build(birth: int) -> TreeNode:
        if birth in children:
            col, thr, lb, rb = children[birth]
            return TreeNode(split_index=col, threshold=thr, left=build(lb), right=build(rb))
        return TreeNode(value=values[birth])

    return TreeFit(root=build(0), n_leaves=len(leaves), fitted=fitted)


def fit_stump(X, r, min_leaf: int = 1) -> TreeFit:
    """The best two-leaf tree: exhaustive search over all column midpoints."""
    return fit_tree(X, r, max_leaves=2, min_leaf=min_leaf)
