"""Treatment-effect estimators for the experimental roster.

Three estimands, all on the contribution-rate outcome:

* itt: OLS of the outcome on assignment indicators with stratum fixed
  effects. The coefficient on an arm is the intention-to-treat effect of
  being assigned that arm, whether or not the person engaged.
* late: two-stage least squares using assignment as the instrument for the
  engagement indicator (clicking the enrollment link). Identifies the effect
  on compliers under the exclusion restriction that assignment moves the
  outcome only through engagement.
* het_effects: OLS with arm-by-group interactions to read off differential
  effects for a binary subgroup.

Standard errors are heteroskedasticity-robust (HC1 sandwich, n/(n-k) small
sample scaling) and 95% intervals use +/- 1.96 se. The residual scale
reported as rmse divides the sum of squared residuals by n-k.

Attrited records are excluded. Strata with a single usable record are pooled
into one sentinel stratum and strata whose records all share one arm are
dropped, each with a warning; a design matrix that is still rank deficient
after that raises instead of returning garbage.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient, SparseStratum, WeakInstrument
from .experiment import ARMS, EmployeeRecord

Z95 = 1.96
WEAK_F_THRESHOLD = 10.0
POOLED_LABEL = "__pooled__"


@dataclass(frozen=True)
class RegressionFit:
    """Coefficients with robust standard errors from one fitted model."""

    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    nobs: int
    rmse: float
    first_stage_f: float | None = None

    def ci95(self) -> np.ndarray:
        """(k, 2) array of 95% confidence bounds."""
        half = Z95 * self.se
        return np.column_stack([self.coef - half, self.coef + half])

    def _index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def coef_for(self, name: str) -> float:
        return float(self.coef[self._index(name)])

    def se_for(self, name: str) -> float:
        return float(self.se[self._index(name)])

    def ci_for(self, name: str) -> tuple[float, float]:
        lo, hi = self.ci95()[self._index(name)]
        return float(lo), float(hi)

    def to_json(self) -> dict:
        ci = self.ci95()
        out = {
            "n": self.nobs,
            "rmse": self.rmse,
            "coefficients": {
                name: {
                    "coef": float(self.coef[i]),
                    "se": float(self.se[i]),
                    "ci95": [float(ci[i, 0]), float(ci[i, 1])],
                }
                for i, name in enumerate(self.names)
            },
        }
        if self.first_stage_f is not None:
            out["first_stage_f"] = self.first_stage_f
        return out


@dataclass(frozen=True)
class BootstrapResult:
    """Point estimate with a percentile bootstrap interval."""

    estimate: float
    lo: float
    hi: float
    draws: int

    def to_json(self) -> dict:
        return {
            "estimate": self.estimate,
            "ci95": [self.lo, self.hi],
            "draws": self.draws,
        }


def _usable(records: list[EmployeeRecord], outcome: str):
    """Drop attrited records and compute the outcome vector."""
    if outcome not in ("change", "post"):
        raise ValueError("outcome must be 'change' or 'post'")
    kept, vals = [], []
    for rec in records:
        if rec.attrited or rec.post_rate is None:
            continue
        if not rec.treatment:
            raise ValueError(f"record {rec.id} has no treatment assignment")
        kept.append(rec)
        vals.append(
            rec.post_rate - rec.pre_rate if outcome == "change" else rec.post_rate
        )
    if not kept:
        raise ValueError("no usable records after dropping attrition")
    return kept, np.array(vals)


def _clean_strata(records: list[EmployeeRecord]):
    """Pool singleton strata, drop single-arm strata; warn on each action.

    Returns (kept record indices, stratum label per kept record).
    """
    labels = [str(rec.stratum()) for rec in records]
    counts: dict[str, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    singles = sorted(lab for lab, c in counts.items() if c == 1)
    if singles:
        warnings.warn(
            f"pooled {len(singles)} singleton strata into {POOLED_LABEL}",
            SparseStratum,
            stacklevel=3,
        )
        labels = [POOLED_LABEL if lab in set(singles) else lab for lab in labels]
    arms_seen: dict[str, set] = {}
    for lab, rec in zip(labels, records):
        arms_seen.setdefault(lab, set()).add(rec.treatment)
    dead = sorted(lab for lab, arms in arms_seen.items() if len(arms) == 1)
    if dead:
        n_dropped = sum(1 for lab in labels if lab in set(dead))
        warnings.warn(
            f"dropped {len(dead)} single-arm strata ({n_dropped} records)",
            SparseStratum,
            stacklevel=3,
        )
    dead_set = set(dead)
    idx = [i for i, lab in enumerate(labels) if lab not in dead_set]
    if not idx:
        raise RankDeficient("no strata with assignment contrast remain")
    return idx, [labels[i] for i in idx]


def _stratum_dummies(labels: list[str]):
    """Indicator columns for every stratum except the first (baseline)."""
    levels = sorted(set(labels))
    cols = [
        np.array([1.0 if lab == lev else 0.0 for lab in labels])
        for lev in levels[1:]
    ]
    names = [f"stratum[{lev}]" for lev in levels[1:]]
    return cols, names


def _arm_dummies(records: list[EmployeeRecord]):
    """Indicator columns for each treated arm present in the data."""
    present = {rec.treatment for rec in records}
    cols, names = [], []
    for arm in ARMS[1:]:
        if arm in present:
            cols.append(
                np.array([1.0 if r.treatment == arm else 0.0 for r in records])
            )
            names.append(arm)
    if not cols:
        raise RankDeficient("no treated arm present in the data")
    return cols, names


def _require_full_rank(X: np.ndarray, what: str) -> None:
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficient(f"{what} matrix is rank deficient")


def _hc1(bread_X: np.ndarray, resid: np.ndarray) -> np.ndarray:
    """HC1 sandwich standard errors given the bread-side design matrix."""
    n, k = bread_X.shape
    if n <= k:
        raise RankDeficient("more parameters than observations")
    xtx_inv = np.linalg.inv(bread_X.T @ bread_X)
    meat = bread_X.T @ (bread_X * resid[:, None] ** 2)
    cov = xtx_inv @ meat @ xtx_inv * (n / (n - k))
    # An exactly-determined coefficient (zero residual variance on its
    # support) can land a hair below zero through cancellation.
    return np.sqrt(np.maximum(np.diag(cov), 0.0))


def _ols_fit(X: np.ndarray, y: np.ndarray, names: tuple[str, ...]) -> RegressionFit:
    _require_full_rank(X, "design")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    n, k = X.shape
    rmse = float(np.sqrt(resid @ resid / (n - k)))
    return RegressionFit(
        names=names,
        coef=coef,
        se=_hc1(X, resid),
        nobs=n,
        rmse=rmse,
    )


def itt(records: list[EmployeeRecord], outcome: str = "change") -> RegressionFit:
    """Intention-to-treat arm effects, OLS with stratum fixed effects."""
    kept, y = _usable(records, outcome)
    idx, labels = _clean_strata(kept)
    kept = [kept[i] for i in idx]
    y = y[idx]
    arm_cols, arm_names = _arm_dummies(kept)
    strat_cols, strat_names = _stratum_dummies(labels)
    X = np.column_stack([np.ones(len(kept)), *arm_cols, *strat_cols])
    names = ("const", *arm_names, *strat_names)
    return _ols_fit(X, y, names)


def late(records: list[EmployeeRecord], outcome: str = "change") -> RegressionFit:
    """Local average treatment effect of engagement, assignment as instrument.

    Two-stage least squares: the engagement indicator is regressed on the
    arm indicators plus exogenous controls, and the outcome on the fitted
    engagement. Robust errors use the actual-regressor residuals with the
    projected-regressor bread. Also reports the classical first-stage F for
    the excluded instruments and warns below the rule-of-thumb threshold.
    """
    kept, y = _usable(records, outcome)
    idx, labels = _clean_strata(kept)
    kept = [kept[i] for i in idx]
    y = y[idx]
    n = len(kept)
    d = np.array([1.0 if r.clicked else 0.0 for r in kept])
    inst_cols, inst_names = _arm_dummies(kept)
    strat_cols, strat_names = _stratum_dummies(labels)
    exog = np.column_stack([np.ones(n), *strat_cols])
    Z = np.column_stack([exog, *inst_cols])
    _require_full_rank(Z, "instrument")

    # First stage and its classical F for the excluded instruments.
    pi, *_ = np.linalg.lstsq(Z, d, rcond=None)
    d_hat = Z @ pi
    ssr_u = float(np.sum((d - d_hat) ** 2))
    gamma, *_ = np.linalg.lstsq(exog, d, rcond=None)
    ssr_r = float(np.sum((d - exog @ gamma) ** 2))
    q = len(inst_cols)
    dof = n - Z.shape[1]
    if dof <= 0:
        raise RankDeficient("more parameters than observations")
    if ssr_u <= 0.0:
        fstat = float("inf")
    else:
        fstat = ((ssr_r - ssr_u) / q) / (ssr_u / dof)
    if fstat < WEAK_F_THRESHOLD:
        warnings.warn(
            f"first-stage F {fstat:.2f} below {WEAK_F_THRESHOLD:.0f}",
            WeakInstrument,
            stacklevel=2,
        )

    X = np.column_stack([np.ones(n), d, *strat_cols])
    X_hat = np.column_stack([np.ones(n), d_hat, *strat_cols])
    names = ("const", "clicked", *strat_names)
    _require_full_rank(X_hat, "projected design")
    beta, *_ = np.linalg.lstsq(X_hat, y, rcond=None)
    resid = y - X @ beta
    k = X.shape[1]
    rmse = float(np.sqrt(resid @ resid / (n - k)))
    return RegressionFit(
        names=names,
        coef=beta,
        se=_hc1(X_hat, resid),
        nobs=n,
        rmse=rmse,
        first_stage_f=fstat,
    )


_GROUP_GETTERS = {
    "male": lambda r: r.gender == "M",
    "disadvantaged": lambda r: r.disadvantaged,
    "min_saver": lambda r: r.min_saver,
}


def het_effects(
    records: list[EmployeeRecord], group: str, outcome: str = "change"
) -> RegressionFit:
    """Arm-by-subgroup interactions for one binary grouping.

    No stratum controls here: the grouping variable is itself part of the
    stratification, so the interaction contrasts stay interpretable. The
    coefficient named 'arm:group' is the differential arm effect for group
    members relative to non-members.
    """
    if group not in _GROUP_GETTERS:
        raise ValueError(f"group must be one of {sorted(_GROUP_GETTERS)}")
    getter = _GROUP_GETTERS[group]
    kept, y = _usable(records, outcome)
    g = np.array([1.0 if getter(r) else 0.0 for r in kept])
    if g.min() == g.max():
        raise RankDeficient(f"group '{group}' is constant in the data")
    arm_cols, arm_names = _arm_dummies(kept)
    cols = [np.ones(len(kept)), *arm_cols, g]
    names = ["const", *arm_names, group]
    for col, arm in zip(arm_cols, arm_names):
        cols.append(col * g)
        names.append(f"{arm}:{group}")
    return _ols_fit(np.column_stack(cols), y, tuple(names))


def arm_outcomes(
    records: list[EmployeeRecord], arm: str, outcome: str = "change"
) -> np.ndarray:
    """Outcome vector for one arm, attrited records excluded."""
    if arm not in ARMS:
        raise ValueError(f"arm must be one of {ARMS}")
    kept, y = _usable(records, outcome)
    mask = np.array([r.treatment == arm for r in kept])
    return y[mask]


def bootstrap_mean_diff(
    y_treat,
    y_ctrl,
    seed: int,
    draws: int = 5000,
) -> BootstrapResult:
    """Percentile bootstrap interval for a difference in means.

    Each resample uses its own generator spawned from the seed, so results
    are bitwise reproducible regardless of how the loop is scheduled.
    """
    if draws < 1000:
        raise ValueError("draws must be at least 1000")
    y1 = np.asarray(y_treat, dtype=float)
    y0 = np.asarray(y_ctrl, dtype=float)
    if y1.size == 0 or y0.size == 0:
        raise ValueError("both samples must be nonempty")
    children = np.random.SeedSequence(seed).spawn(draws)
    stats = np.empty(draws)
    for b, child in enumerate(children):
        rng = np.random.default_rng(child)
        i1 = rng.integers(0, y1.size, y1.size)
        i0 = rng.integers(0, y0.size, y0.size)
        stats[b] = y1[i1].mean() - y0[i0].mean()
    lo, hi = np.percentile(stats, [2.5, 97.5])
    return BootstrapResult(
        estimate=float(y1.mean() - y0.mean()),
        lo=float(lo),
        hi=float(hi),
        draws=draws,
    )
