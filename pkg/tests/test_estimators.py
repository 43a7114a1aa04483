"""Estimators against brute-force normal equations, Wald ratios, and pins."""

import warnings

import numpy as np
import pytest

from conftest import make_record
from retirelab.errors import RankDeficient, SparseStratum, WeakInstrument
from retirelab.estimators import (
    RegressionFit,
    arm_outcomes,
    bootstrap_mean_diff,
    het_effects,
    itt,
    late,
)
from retirelab.experiment import PopulationSpec, simulate_population


def usable(records):
    return [r for r in records if not r.attrited and r.post_rate is not None]


def oracle_itt_design(kept):
    """Independent design build: const, arm dummies, sorted-stratum dummies."""
    y = np.array([r.post_rate - r.pre_rate for r in kept])
    labels = sorted({str(r.stratum()) for r in kept})
    cols = [np.ones(len(kept))]
    for arm in ("email", "email_phone"):
        cols.append(np.array([float(r.treatment == arm) for r in kept]))
    for lab in labels[1:]:
        cols.append(np.array([float(str(r.stratum()) == lab) for r in kept]))
    return np.column_stack(cols), y


def oracle_ols(X, y):
    """Normal equations plus an explicit HC1 sandwich."""
    XtX_inv = np.linalg.inv(X.T @ X)
    beta = XtX_inv @ (X.T @ y)
    e = y - X @ beta
    n, k = X.shape
    V = XtX_inv @ (X.T * e**2) @ X @ XtX_inv * n / (n - k)
    rmse = float(np.sqrt(e @ e / (n - k)))
    return beta, np.sqrt(np.diag(V)), rmse


def assert_cleaning_noop(records):
    """The oracle assumes no stratum is a singleton or single-arm."""
    strata = {}
    for r in usable(records):
        strata.setdefault(str(r.stratum()), set()).add(r.treatment)
    counts = {}
    for r in usable(records):
        counts[str(r.stratum())] = counts.get(str(r.stratum()), 0) + 1
    assert min(counts.values()) >= 2
    assert all(len(arms) >= 2 for arms in strata.values())


class TestItt:
    def test_matches_normal_equations_oracle(self, default_roster):
        assert_cleaning_noop(default_roster)
        X, y = oracle_itt_design(usable(default_roster))
        beta, se, rmse = oracle_ols(X, y)
        fit = itt(default_roster)
        assert np.max(np.abs(fit.coef - beta)) < 1e-8
        assert np.max(np.abs(fit.se - se)) < 1e-8
        assert fit.rmse == pytest.approx(rmse, abs=1e-10)

    def test_attrition_bookkeeping(self, default_roster):
        fit = itt(default_roster)
        assert fit.nobs == 775 - 10

    def test_names_and_accessors(self, default_roster):
        fit = itt(default_roster)
        assert fit.names[:3] == ("const", "email", "email_phone")
        lo, hi = fit.ci_for("email")
        assert lo == pytest.approx(fit.coef_for("email") - 1.96 * fit.se_for("email"))
        assert hi == pytest.approx(fit.coef_for("email") + 1.96 * fit.se_for("email"))
        with pytest.raises(KeyError):
            fit.coef_for("nonsense")

    def test_to_json_shape(self, default_roster):
        j = itt(default_roster).to_json()
        assert j["n"] == 765
        email = j["coefficients"]["email"]
        assert set(email) == {"coef", "se", "ci95"}
        assert email["ci95"][0] < email["coef"] < email["ci95"][1]

    def test_noise_free_effects_are_exact(self):
        # Zero noise, full uptake: arm coefficients equal the pure effects.
        spec = PopulationSpec(
            n=400,
            effect_email=0.8,
            effect_email_phone=1.6,
            uptake_email=1.0,
            uptake_email_phone=1.0,
            noise_sd=0.0,
            share_min=0.0,
            pre_rate_above=(12.0, 17.5),
            attrition_n=0,
        )
        recs = simulate_population(spec, seed=31)
        assert_cleaning_noop(recs)
        fit = itt(recs)
        assert fit.coef_for("email") == pytest.approx(0.8, abs=1e-10)
        assert fit.coef_for("email_phone") == pytest.approx(1.6, abs=1e-10)

    def test_post_outcome_variant(self, default_roster):
        change = itt(default_roster, outcome="change")
        post = itt(default_roster, outcome="post")
        assert change.nobs == post.nobs
        with pytest.raises(ValueError):
            itt(default_roster, outcome="delta")

    def test_unassigned_record_rejected(self):
        # An outcome on a record that was never assigned is a caller bug.
        recs = [
            make_record(0, treatment=""),
            make_record(1, treatment="email"),
        ]
        with pytest.raises(ValueError):
            itt(recs)


class TestStrataCleaning:
    def one_stratum(self, i, n, arm_of, age=30, **kw):
        return [
            make_record(
                i + j,
                age=age,
                treatment=arm_of(j),
                post_rate=9.0 + (j % 3) * 0.2,
                **kw,
            )
            for j in range(n)
        ]

    def test_singletons_pooled_with_warning(self):
        recs = self.one_stratum(0, 12, lambda j: "control" if j % 2 else "email")
        # Two singleton strata in different age buckets, opposite arms so the
        # pooled stratum keeps an assignment contrast.
        recs += self.one_stratum(100, 1, lambda j: "control", age=45)
        recs += self.one_stratum(200, 1, lambda j: "email", age=58, gender="F")
        with pytest.warns(SparseStratum, match="pooled 2 singleton"):
            fit = itt(recs)
        assert fit.nobs == 14

    def test_single_arm_stratum_dropped_with_warning(self):
        recs = self.one_stratum(0, 12, lambda j: "control" if j % 2 else "email")
        recs += self.one_stratum(100, 6, lambda j: "control", age=45)
        with pytest.warns(SparseStratum, match="dropped 1 single-arm"):
            fit = itt(recs)
        assert fit.nobs == 12

    def test_no_contrast_anywhere_raises(self):
        recs = self.one_stratum(0, 8, lambda j: "control")
        with pytest.raises(RankDeficient):
            with pytest.warns(SparseStratum):
                itt(recs)


class TestLate:
    def test_matches_explicit_2sls_oracle(self, default_roster):
        assert_cleaning_noop(default_roster)
        kept = usable(default_roster)
        y = np.array([r.post_rate - r.pre_rate for r in kept])
        d = np.array([float(r.clicked) for r in kept])
        labels = sorted({str(r.stratum()) for r in kept})
        strat_cols = [
            np.array([float(str(r.stratum()) == lab) for r in kept])
            for lab in labels[1:]
        ]
        exog = np.column_stack([np.ones(len(kept))] + strat_cols)
        Z = np.column_stack(
            [
                exog,
                [float(r.treatment == "email") for r in kept],
                [float(r.treatment == "email_phone") for r in kept],
            ]
        )
        X = np.column_stack([np.ones(len(kept)), d] + strat_cols)
        P = Z @ np.linalg.inv(Z.T @ Z) @ Z.T
        Xh = P @ X
        beta = np.linalg.solve(Xh.T @ X, Xh.T @ y)
        e = y - X @ beta
        n, k = X.shape
        bread = np.linalg.inv(Xh.T @ Xh)
        V = bread @ (Xh.T * e**2) @ Xh @ bread * n / (n - k)
        fit = late(default_roster)
        assert np.max(np.abs(fit.coef - beta)) < 1e-10
        assert np.max(np.abs(fit.se - np.sqrt(np.diag(V)))) < 1e-10

    def test_wald_ratio_in_just_identified_case(self):
        # Two arms, one stratum: the 2SLS engagement coefficient must equal
        # the ratio of assignment contrasts in outcome and engagement means.
        rng = np.random.default_rng(55)
        recs = []
        for i in range(120):
            arm = "email" if i < 60 else "control"
            clicked = arm == "email" and rng.random() < 0.4
            post = 9.0 + 1.5 * clicked + rng.normal(0, 0.3)
            recs.append(
                make_record(
                    i, treatment=arm, clicked=clicked, post_rate=max(post, 7.5)
                )
            )
        y = np.array([r.post_rate - r.pre_rate for r in recs])
        z = np.array([r.treatment == "email" for r in recs])
        d = np.array([float(r.clicked) for r in recs])
        wald = (y[z].mean() - y[~z].mean()) / (d[z].mean() - d[~z].mean())
        fit = late(recs)
        assert fit.coef_for("clicked") == pytest.approx(wald, abs=1e-10)

    def test_first_stage_f_matches_r_squared_form(self, default_roster):
        kept = usable(default_roster)
        d = np.array([float(r.clicked) for r in kept])
        labels = sorted({str(r.stratum()) for r in kept})
        strat_cols = [
            np.array([float(str(r.stratum()) == lab) for r in kept])
            for lab in labels[1:]
        ]
        exog = np.column_stack([np.ones(len(kept))] + strat_cols)
        Z = np.column_stack(
            [
                exog,
                [float(r.treatment == "email") for r in kept],
                [float(r.treatment == "email_phone") for r in kept],
            ]
        )
        sst = float(np.sum((d - d.mean()) ** 2))
        bu, *_ = np.linalg.lstsq(Z, d, rcond=None)
        r2_u = 1.0 - float(np.sum((d - Z @ bu) ** 2)) / sst
        br, *_ = np.linalg.lstsq(exog, d, rcond=None)
        r2_r = 1.0 - float(np.sum((d - exog @ br) ** 2)) / sst
        n, k = Z.shape
        f_oracle = ((r2_u - r2_r) / 2) / ((1 - r2_u) / (n - k))
        fit = late(default_roster)
        assert fit.first_stage_f == pytest.approx(f_oracle, rel=1e-10)

    def test_weak_instrument_warning(self):
        rng = np.random.default_rng(56)
        recs = []
        for i in range(150):
            arm = "email" if i < 50 else "control"
            clicked = arm == "email" and i < 2  # two clickers only
            post = 9.0 + rng.normal(0, 0.3)
            recs.append(
                make_record(
                    i, treatment=arm, clicked=clicked, post_rate=max(post, 7.5)
                )
            )
        with pytest.warns(WeakInstrument):
            fit = late(recs)
        assert fit.first_stage_f < 10

    def test_late_scales_itt_by_uptake(self):
        # Homogeneous complier effect: LATE ~ effect, ITT ~ uptake * effect.
        spec = PopulationSpec(
            n=2000,
            effect_email=1.0,
            effect_email_phone=1.0,
            uptake_email=0.3,
            uptake_email_phone=0.6,
            noise_sd=0.2,
            share_min=0.0,
            pre_rate_above=(12.0, 17.5),
            attrition_n=0,
        )
        recs = simulate_population(spec, seed=57)
        fit = late(recs)
        assert fit.coef_for("clicked") == pytest.approx(1.0, abs=0.1)


class TestHetEffects:
    def build(self):
        # Deterministic outcomes: email moves males by 1.0, females by 0.25;
        # phone arm moves everyone by 0.5. Interactions are then exact.
        recs = []
        i = 0
        for gender in ("M", "F"):
            for arm in ("control", "email", "email_phone"):
                for _ in range(10):
                    lift = 0.0
                    if arm == "email":
                        lift = 1.0 if gender == "M" else 0.25
                    elif arm == "email_phone":
                        lift = 0.5
                    recs.append(
                        make_record(
                            i,
                            gender=gender,
                            treatment=arm,
                            clicked=arm != "control",
                            post_rate=9.0 + lift,
                        )
                    )
                    i += 1
        return recs

    def test_interaction_recovers_differential_effect(self):
        fit = het_effects(self.build(), group="male")
        assert fit.coef_for("email:male") == pytest.approx(0.75, abs=1e-10)
        assert fit.coef_for("email_phone:male") == pytest.approx(0.0, abs=1e-10)
        assert fit.coef_for("email") == pytest.approx(0.25, abs=1e-10)
        assert fit.rmse == pytest.approx(0.0, abs=1e-8)

    def test_constant_group_raises(self):
        recs = [r for r in self.build() if r.gender == "M"]
        with pytest.raises(RankDeficient):
            het_effects(recs, group="male")

    def test_unknown_group_rejected(self):
        with pytest.raises(ValueError):
            het_effects(self.build(), group="height")

    def test_group_definitions(self, default_roster):
        for group in ("male", "disadvantaged", "min_saver"):
            fit = het_effects(default_roster, group=group)
            assert f"email:{group}" in fit.names


class TestBootstrap:
    def test_protocol_pinned_bitwise(self):
        rng = np.random.default_rng(58)
        y1 = rng.normal(0.5, 1.0, 90)
        y0 = rng.normal(0.0, 1.0, 150)
        res = bootstrap_mean_diff(y1, y0, seed=99, draws=1000)
        # Re-derive with the documented per-resample stream protocol.
        children = np.random.SeedSequence(99).spawn(1000)
        stats = np.empty(1000)
        for b, child in enumerate(children):
            g = np.random.default_rng(child)
            stats[b] = y1[g.integers(0, 90, 90)].mean() - y0[g.integers(0, 150, 150)].mean()
        lo, hi = np.percentile(stats, [2.5, 97.5])
        assert res.lo == lo and res.hi == hi
        assert res.estimate == y1.mean() - y0.mean()

    def test_deterministic_and_seed_sensitive(self):
        rng = np.random.default_rng(59)
        y1, y0 = rng.normal(1, 1, 50), rng.normal(0, 1, 50)
        a = bootstrap_mean_diff(y1, y0, seed=5, draws=1000)
        b = bootstrap_mean_diff(y1, y0, seed=5, draws=1000)
        c = bootstrap_mean_diff(y1, y0, seed=6, draws=1000)
        assert a == b
        assert (a.lo, a.hi) != (c.lo, c.hi)

    def test_interval_roughly_matches_normal_theory(self):
        rng = np.random.default_rng(60)
        y1, y0 = rng.normal(1, 1, 400), rng.normal(0, 1, 400)
        res = bootstrap_mean_diff(y1, y0, seed=7, draws=3000)
        se = np.sqrt(y1.var(ddof=1) / 400 + y0.var(ddof=1) / 400)
        assert res.lo == pytest.approx(res.estimate - 1.96 * se, abs=0.03)
        assert res.hi == pytest.approx(res.estimate + 1.96 * se, abs=0.03)

    def test_validation(self):
        with pytest.raises(ValueError):
            bootstrap_mean_diff([1.0], [2.0], seed=1, draws=999)
        with pytest.raises(ValueError):
            bootstrap_mean_diff([], [2.0], seed=1)

    def test_arm_outcomes_split(self, default_roster):
        y_ctrl = arm_outcomes(default_roster, "control")
        y_email = arm_outcomes(default_roster, "email")
        y_phone = arm_outcomes(default_roster, "email_phone")
        assert len(y_ctrl) + len(y_email) + len(y_phone) == 765
        with pytest.raises(ValueError):
            arm_outcomes(default_roster, "postcard")
