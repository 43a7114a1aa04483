"""Honest causal forest for contribution-rate treatment heterogeneity.

Each tree is grown on one random subsample and its leaf effects are
re-estimated on a second, disjoint subsample (honesty: no observation helps
both choose the partition and estimate effects inside it). Treatment is
pooled to a binary indicator, any nudge arm versus control.

Splitting maximizes the squared difference in estimated effects between the
two children, penalized by their estimation variance:

    score = (tau_L - tau_R)^2 / 4 - penalty * (Var_L + Var_R) / 2

where tau is the difference in outcome means between treated and control in
a child and Var its usual two-sample variance (ddof=1 components). A split
must leave at least min_treated treated and min_control control rows on each
side of the growing sample; a node where no candidate scores above zero
becomes a leaf. Candidate thresholds are midpoints between consecutive
distinct feature values; ties on score resolve to the lowest feature index,
then the lowest threshold.

Leaves whose estimation-side sample misses the minimums inherit the estimate
of the nearest ancestor that meets them, and are flagged. Predictions average
leaf estimates across trees.

Features are fixed: the stratification age bucket (ordinal), male and white
indicators, and the pre-period contribution rate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import LeafInheritance, SchemaError
from .experiment import EmployeeRecord, age_bucket

FEATURE_NAMES = ("age_bucket", "male", "white", "pre_rate")
FOREST_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 2000
    split_frac: float = 0.25
    est_frac: float = 0.25
    min_treated: int = 5
    min_control: int = 5
    feature_subsample: float = 0.5
    penalty: float = 1.0
    max_depth: int | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if not 0.0 < self.split_frac or not 0.0 < self.est_frac:
            raise ValueError("subsample fractions must be positive")
        if self.split_frac + self.est_frac > 1.0:
            raise ValueError("split and estimation fractions overlap")
        if self.min_treated < 2 or self.min_control < 2:
            raise ValueError("leaf minimums must be at least 2")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise ValueError("feature_subsample must lie in (0, 1]")
        if self.penalty < 0.0:
            raise ValueError("penalty must be nonnegative")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be at least 1 when set")


@dataclass
class Leaf:
    estimate: float
    n_treated: int
    n_control: int
    inherited: bool = False


@dataclass
class Split:
    feature: int
    threshold: float
    left: "Split | Leaf"
    right: "Split | Leaf"


@dataclass
class CausalTree:
    root: Split | Leaf
    split_ids: np.ndarray | None = None
    estimate_ids: np.ndarray | None = None


@dataclass
class Forest:
    params: ForestParams
    trees: list[CausalTree]
    seed: int | None = None
    feature_names: tuple[str, ...] = FEATURE_NAMES


def feature_matrix(records: list[EmployeeRecord]) -> np.ndarray:
    """Covariate matrix in FEATURE_NAMES order; usable for any record."""
    rows = [
        (
            float(age_bucket(r.age)),
            1.0 if r.gender == "M" else 0.0,
            0.0 if r.disadvantaged else 1.0,
            r.pre_rate,
        )
        for r in records
    ]
    return np.array(rows, dtype=float)


def training_arrays(records: list[EmployeeRecord], outcome: str = "change"):
    """(X, y, w) for assigned, non-attrited records; w pools the nudge arms."""
    if outcome not in ("change", "post"):
        raise ValueError("outcome must be 'change' or 'post'")
    kept = [r for r in records if not r.attrited and r.post_rate is not None]
    if not kept:
        raise ValueError("no usable records")
    if any(not r.treatment for r in kept):
        raise ValueError("records must be assigned before training")
    X = feature_matrix(kept)
    y = np.array(
        [
            r.post_rate - r.pre_rate if outcome == "change" else r.post_rate
            for r in kept
        ]
    )
    w = np.array([0.0 if r.treatment == "control" else 1.0 for r in kept])
    return X, y, w


def _moment_arrays(y: np.ndarray, w: np.ndarray):
    """Per-row contributions used by the cumulative split scan."""
    t = w
    c = 1.0 - w
    return (
        t,
        c,
        t * y,
        c * y,
        t * y * y,
        c * y * y,
    )


def _feature_scores(x: np.ndarray, y: np.ndarray, w: np.ndarray, params: ForestParams):
    """Scores for every feasible threshold of one feature.

    Returns (thresholds, scores), both possibly empty. A threshold is
    feasible when both children keep at least the minimum treated and
    control counts. One cumulative pass over the value-sorted rows yields
    the counts, sums and sums of squares for every left prefix; the right
    side is totals minus left.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    parts = [p[order] for p in _moment_arrays(y, w)]
    cums = [np.cumsum(p) for p in parts]
    cut = np.nonzero(xs[:-1] != xs[1:])[0]
    if cut.size == 0:
        return np.empty(0), np.empty(0)
    thresholds = (xs[cut] + xs[cut + 1]) / 2.0
    nT, nC, sT, sC, qT, qC = [c[cut] for c in cums]
    tot_nT, tot_nC, tot_sT, tot_sC, tot_qT, tot_qC = [c[-1] for c in cums]
    nT_r, nC_r = tot_nT - nT, tot_nC - nC
    feasible = (
        (nT >= params.min_treated)
        & (nC >= params.min_control)
        & (nT_r >= params.min_treated)
        & (nC_r >= params.min_control)
    )
    if not feasible.any():
        return np.empty(0), np.empty(0)
    keep = np.nonzero(feasible)[0]
    nT, nC, sT, sC, qT, qC = nT[keep], nC[keep], sT[keep], sC[keep], qT[keep], qC[keep]
    nT_r, nC_r = nT_r[keep], nC_r[keep]
    sT_r, sC_r = tot_sT - sT, tot_sC - sC
    qT_r, qC_r = tot_qT - qT, tot_qC - qC

    def tau_var(n_t, n_c, s_t, s_c, q_t, q_c):
        tau = s_t / n_t - s_c / n_c
        var_t = np.maximum(q_t - s_t * s_t / n_t, 0.0) / (n_t - 1.0)
        var_c = np.maximum(q_c - s_c * s_c / n_c, 0.0) / (n_c - 1.0)
        return tau, var_t / n_t + var_c / n_c

    tau_l, var_l = tau_var(nT, nC, sT, sC, qT, qC)
    tau_r, var_r = tau_var(nT_r, nC_r, sT_r, sC_r, qT_r, qC_r)
    scores = (tau_l - tau_r) ** 2 / 4.0 - params.penalty * (var_l + var_r) / 2.0
    return thresholds[keep], scores


def split_score(
    x: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    threshold: float,
    params: ForestParams,
) -> float | None:
    """Score of one candidate threshold, None when it is infeasible.

    Shares the cumulative scan with tree growth, so the value is the exact
    float the grower compares.
    """
    thresholds, scores = _feature_scores(
        np.asarray(x, float), np.asarray(y, float), np.asarray(w, float), params
    )
    hits = np.nonzero(thresholds == threshold)[0]
    if hits.size == 0:
        return None
    return float(scores[hits[0]])


def _leaf_from(y: np.ndarray, w: np.ndarray) -> Leaf:
    treated = w > 0
    n_t = int(treated.sum())
    n_c = int(len(w) - n_t)
    if n_t and n_c:
        est = float(y[treated].mean() - y[~treated].mean())
    else:
        est = 0.0
    return Leaf(estimate=est, n_treated=n_t, n_control=n_c)


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    ids: np.ndarray,
    params: ForestParams,
    rng: np.random.Generator,
    depth: int,
) -> Split | Leaf:
    if params.max_depth is not None and depth >= params.max_depth:
        return _leaf_from(y[ids], w[ids])
    n_feat = X.shape[1]
    m = max(1, int(round(params.feature_subsample * n_feat)))
    feats = np.sort(rng.choice(n_feat, size=m, replace=False))
    best = None  # (score, feature, threshold)
    for f in feats:
        thresholds, scores = _feature_scores(X[ids, f], y[ids], w[ids], params)
        if thresholds.size == 0:
            continue
        j = int(np.argmax(scores))  # first max: lowest threshold wins ties
        if best is None or scores[j] > best[0]:
            best = (float(scores[j]), int(f), float(thresholds[j]))
    if best is None or best[0] <= 0.0:
        return _leaf_from(y[ids], w[ids])
    score, feature, threshold = best
    mask = X[ids, feature] <= threshold
    # Left subtree is grown before the right one; together with the single
    # feature draw per node this pins the generator stream.
    left = _grow(X, y, w, ids[mask], params, rng, depth + 1)
    right = _grow(X, y, w, ids[~mask], params, rng, depth + 1)
    return Split(feature=feature, threshold=threshold, left=left, right=right)


def _reestimate(
    node: Split | Leaf,
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    ids: np.ndarray,
    params: ForestParams,
    fallback: float,
) -> tuple[Split | Leaf, int]:
    """Honest re-estimation: replace leaf effects with estimation-side ones.

    `fallback` carries the estimate of the nearest ancestor whose estimation
    sample met the leaf minimums. Returns the rebuilt node and a count of
    leaves that had to inherit.
    """
    sub_w = w[ids]
    n_t = int((sub_w > 0).sum())
    n_c = int(len(ids) - n_t)
    ok = n_t >= params.min_treated and n_c >= params.min_control
    if ok:
        here = _leaf_from(y[ids], w[ids]).estimate
        fallback = here
    if isinstance(node, Leaf):
        if ok:
            return Leaf(estimate=fallback, n_treated=n_t, n_control=n_c), 0
        return (
            Leaf(estimate=fallback, n_treated=n_t, n_control=n_c, inherited=True),
            1,
        )
    mask = X[ids, node.feature] <= node.threshold
    left, n_l = _reestimate(node.left, X, y, w, ids[mask], params, fallback)
    right, n_r = _reestimate(node.right, X, y, w, ids[~mask], params, fallback)
    return Split(node.feature, node.threshold, left, right), n_l + n_r


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    params: ForestParams,
    rng: np.random.Generator,
) -> tuple[CausalTree, int]:
    """Grow one honest tree; returns (tree, number of inheriting leaves).

    The rng drives, in order: the subsample permutation, then one feature
    draw per node in depth-first left-to-right order.
    """
    n = len(y)
    n_split = int(np.floor(n * params.split_frac))
    n_est = int(np.floor(n * params.est_frac))
    if n_split < params.min_treated + params.min_control:
        raise ValueError("growing subsample too small for the leaf minimums")
    perm = rng.permutation(n)
    split_ids = np.sort(perm[:n_split])
    est_ids = np.sort(perm[n_split : n_split + n_est])
    root = _grow(X, y, w, split_ids, params, rng, 0)
    root_fallback = _leaf_from(y[est_ids], w[est_ids]).estimate
    if not (
        (w[est_ids] > 0).sum() >= params.min_treated
        and (w[est_ids] == 0).sum() >= params.min_control
    ):
        # Degenerate estimation sample: fall back to the growing sample.
        root_fallback = _leaf_from(y[split_ids], w[split_ids]).estimate
    root, inherited = _reestimate(root, X, y, w, est_ids, params, root_fallback)
    return CausalTree(root=root, split_ids=split_ids, estimate_ids=est_ids), inherited


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    params: ForestParams | None = None,
    seed: int = 0,
) -> Forest:
    """Train the full forest; tree t uses generator seeded with [seed, t]."""
    params = params or ForestParams()
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    w = np.asarray(w, float)
    if X.ndim != 2 or X.shape[0] != len(y) or len(y) != len(w):
        raise ValueError("X, y, w shapes do not line up")
    if not set(np.unique(w)) <= {0.0, 1.0}:
        raise ValueError("w must be binary")
    trees = []
    inherited_total = 0
    for t in range(params.n_trees):
        rng = np.random.default_rng([seed, t])
        tree, inherited = grow_tree(X, y, w, params, rng)
        trees.append(tree)
        inherited_total += inherited
    if inherited_total:
        warnings.warn(
            f"{inherited_total} leaves inherited ancestor estimates",
            LeafInheritance,
            stacklevel=2,
        )
    return Forest(params=params, trees=trees, seed=seed)


def _apply(node: Split | Leaf, X: np.ndarray, idx: np.ndarray, out: np.ndarray):
    if isinstance(node, Leaf):
        out[idx] = node.estimate
        return
    mask = X[idx, node.feature] <= node.threshold
    _apply(node.left, X, idx[mask], out)
    _apply(node.right, X, idx[~mask], out)


def tree_leaves(node: Split | Leaf) -> list[Leaf]:
    """All leaves of a tree in depth-first left-to-right order."""
    if isinstance(node, Leaf):
        return [node]
    return tree_leaves(node.left) + tree_leaves(node.right)


def tree_predict(tree: CausalTree, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, float)
    out = np.empty(X.shape[0])
    _apply(tree.root, X, np.arange(X.shape[0]), out)
    return out


def predict_cate(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Conditional effect estimates: the mean of leaf estimates over trees."""
    X = np.asarray(X, float)
    if X.ndim != 2 or X.shape[1] != len(forest.feature_names):
        raise SchemaError(
            f"expected {len(forest.feature_names)} feature columns, got "
            f"{X.shape[1] if X.ndim == 2 else X.ndim}"
        )
    total = np.zeros(X.shape[0])
    for tree in forest.trees:
        total += tree_predict(tree, X)
    return total / len(forest.trees)


def cate_summary(forest: Forest, X: np.ndarray) -> dict:
    """Distributional summary of predicted effects over a covariate matrix."""
    cates = predict_cate(forest, X)
    qs = [5, 25, 50, 75, 95]
    pct = np.percentile(cates, qs)
    return {
        "n": int(cates.size),
        "mean": float(cates.mean()),
        "sd": float(cates.std(ddof=1)) if cates.size > 1 else 0.0,
        "min": float(cates.min()),
        "max": float(cates.max()),
        "percentiles": {f"p{q:02d}": float(v) for q, v in zip(qs, pct)},
        "share_positive": float((cates > 0).mean()),
    }


def _node_to_json(node: Split | Leaf) -> dict:
    if isinstance(node, Leaf):
        return {
            "kind": "leaf",
            "estimate": node.estimate,
            "n_treated": node.n_treated,
            "n_control": node.n_control,
            "inherited": node.inherited,
        }
    return {
        "kind": "split",
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_json(node.left),
        "right": _node_to_json(node.right),
    }


def _node_from_json(obj: dict) -> Split | Leaf:
    kind = obj.get("kind")
    if kind == "leaf":
        return Leaf(
            estimate=float(obj["estimate"]),
            n_treated=int(obj["n_treated"]),
            n_control=int(obj["n_control"]),
            inherited=bool(obj.get("inherited", False)),
        )
    if kind == "split":
        return Split(
            feature=int(obj["feature"]),
            threshold=float(obj["threshold"]),
            left=_node_from_json(obj["left"]),
            right=_node_from_json(obj["right"]),
        )
    raise SchemaError(f"unknown node kind {kind!r}")


def forest_to_json(forest: Forest) -> dict:
    p = forest.params
    return {
        "version": FOREST_FORMAT_VERSION,
        "seed": forest.seed,
        "feature_names": list(forest.feature_names),
        "params": {
            "n_trees": p.n_trees,
            "split_frac": p.split_frac,
            "est_frac": p.est_frac,
            "min_treated": p.min_treated,
            "min_control": p.min_control,
            "feature_subsample": p.feature_subsample,
            "penalty": p.penalty,
            "max_depth": p.max_depth,
        },
        "trees": [_node_to_json(t.root) for t in forest.trees],
    }


def forest_from_json(obj: dict) -> Forest:
    try:
        version = obj["version"]
        if version != FOREST_FORMAT_VERSION:
            raise SchemaError(f"unsupported forest format version {version!r}")
        params = ForestParams(**obj["params"])
        trees = [CausalTree(root=_node_from_json(t)) for t in obj["trees"]]
        names = tuple(obj["feature_names"])
        seed = obj.get("seed")
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed forest payload: {exc}") from exc
    if len(trees) != params.n_trees:
        raise SchemaError("tree count does not match params.n_trees")
    return Forest(params=params, trees=trees, seed=seed, feature_names=names)
