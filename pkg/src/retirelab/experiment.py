"""Stratified block randomization and synthetic population simulation.

Assignment is blocked within strata defined by minimum-saver status, gender,
an age bucket, and a disadvantaged-group indicator. Each block of four in a
stratum is split 2:1:1 across control, an email nudge, and email plus a phone
call; any remainder smaller than a block draws without replacement from the
pool [control, control, email, email_phone], which preserves the 2:1:1
proportions in expectation and guarantees a control share of exactly one half
for every stratum size in expectation.

The simulator produces rosters shaped like the administrative extract the
estimators expect, with a known treatment structure so that estimator output
can be checked against the truth that generated it: treatment moves outcomes
only through an uptake indicator (clicking the enrollment link), arms differ
only in uptake probability, and a complier moves their contribution rate by a
fixed effect plus noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ARMS = ("control", "email", "email_phone")
AGE_CUTS = (27, 32, 38)
AGE_LABELS = ("<=27", "28-32", "33-38", "39+")
REMAINDER_POOL = ("control", "control", "email", "email_phone")
MIN_RATE = 7.5  # plan minimum, percent of salary


def age_bucket(age: int) -> int:
    """Index into AGE_LABELS: 0 for <=27, 1 for 28-32, 2 for 33-38, 3 for 39+."""
    for i, cut in enumerate(AGE_CUTS):
        if age <= cut:
            return i
    return len(AGE_CUTS)


@dataclass(frozen=True)
class StratumKey:
    min_saver: bool
    gender: str
    age_label: str
    disadvantaged: bool

    def __str__(self):
        parts = [
            "min" if self.min_saver else "above",
            self.gender,
            self.age_label,
            "dis" if self.disadvantaged else "adv",
        ]
        return "|".join(parts)


@dataclass
class EmployeeRecord:
    """One row of the experimental roster.

    treatment is empty until assignment; post_rate is None exactly when the
    record attrited. clicked means the enrollment link was followed.
    """

    id: str
    age: int
    gender: str
    disadvantaged: bool
    tenure: float
    pre_rate: float
    post_rate: float | None = None
    treatment: str = ""
    clicked: bool = False
    attrited: bool = False

    @property
    def min_saver(self) -> bool:
        return self.pre_rate <= MIN_RATE

    def stratum(self) -> StratumKey:
        return StratumKey(
            min_saver=self.min_saver,
            gender=self.gender,
            age_label=AGE_LABELS[age_bucket(self.age)],
            disadvantaged=self.disadvantaged,
        )


def stratify(records: list[EmployeeRecord]) -> dict[StratumKey, list[int]]:
    """Group record indices by stratum, preserving roster order within each."""
    strata: dict[StratumKey, list[int]] = {}
    for i, rec in enumerate(records):
        strata.setdefault(rec.stratum(), []).append(i)
    return strata


def assign_arms(records: list[EmployeeRecord], seed: int) -> list[str]:
    """Arm per record under stratified block randomization.

    Within each stratum, indices are shuffled, then consumed in blocks of
    four assigned [control, control, email, email_phone]; a final partial
    block draws that many arms from the same pool without replacement.
    Deterministic in (roster, seed): strata are processed in sorted key
    order.
    """
    rng = np.random.default_rng(seed)
    arms = [""] * len(records)
    strata = stratify(records)
    for key in sorted(strata, key=str):
        idx = np.array(strata[key])
        rng.shuffle(idx)
        pool = list(REMAINDER_POOL)
        for start in range(0, len(idx) - len(idx) % 4, 4):
            block = idx[start : start + 4]
            for rec_i, arm in zip(block, pool):
                arms[int(rec_i)] = arm
        tail = idx[len(idx) - len(idx) % 4 :]
        if len(tail):
            draw = rng.choice(len(pool), size=len(tail), replace=False)
            for rec_i, pool_i in zip(tail, draw):
                arms[int(rec_i)] = pool[int(pool_i)]
    return arms


def assign(records: list[EmployeeRecord], seed: int) -> list[EmployeeRecord]:
    """assign_arms applied to the roster; returns new records, input untouched."""
    arms = assign_arms(records, seed)
    out = []
    for rec, arm in zip(records, arms):
        out.append(
            EmployeeRecord(
                id=rec.id,
                age=rec.age,
                gender=rec.gender,
                disadvantaged=rec.disadvantaged,
                tenure=rec.tenure,
                pre_rate=rec.pre_rate,
                post_rate=rec.post_rate,
                treatment=arm,
                clicked=rec.clicked,
                attrited=rec.attrited,
            )
        )
    return out


@dataclass(frozen=True)
class PopulationSpec:
    """Data-generating parameters for a synthetic roster.

    Outcome model, in percentage points of contribution rate:

        post = pre + clicked * (effect_arm + noise)

    where clicked is Bernoulli(uptake_arm) for treated arms and always False
    under control. Attrition removes post_rate from attrition_n records drawn
    uniformly after outcomes are realized, independent of everything else.
    """

    n: int = 775
    effect_email: float = 1.0
    effect_email_phone: float = 1.0
    uptake_email: float = 0.27
    uptake_email_phone: float = 0.65
    noise_sd: float = 0.9
    share_min: float = 0.62
    share_male: float = 0.47
    share_disadvantaged: float = 0.71
    age_mean: float = 33.7
    age_sd: float = 7.5
    age_range: tuple[int, int] = (21, 59)
    tenure_mean: float = 5.2
    attrition_n: int = 10
    pre_rate_above: tuple[float, float] = (8.0, 17.5)

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("n must be positive")
        if not 0 <= self.attrition_n <= self.n:
            raise ValueError("attrition_n must lie in [0, n]")
        for p in (
            self.uptake_email,
            self.uptake_email_phone,
            self.share_min,
            self.share_male,
            self.share_disadvantaged,
        ):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


def simulate_covariates(spec: PopulationSpec, seed: int) -> list[EmployeeRecord]:
    """Draw a pre-assignment roster: covariates and pre rates only."""
    rng = np.random.default_rng(seed)
    n = spec.n
    ages = np.clip(
        np.round(rng.normal(spec.age_mean, spec.age_sd, size=n)),
        spec.age_range[0],
        spec.age_range[1],
    ).astype(int)
    male = rng.random(n) < spec.share_male
    dis = rng.random(n) < spec.share_disadvantaged
    tenure = np.round(rng.exponential(spec.tenure_mean, size=n), 1)
    at_min = rng.random(n) < spec.share_min
    lo, hi = spec.pre_rate_above
    pre = np.where(at_min, MIN_RATE, np.round(rng.uniform(lo, hi, size=n), 1))
    records = []
    for i in range(n):
        records.append(
            EmployeeRecord(
                id=f"E{i + 1:05d}",
                age=int(ages[i]),
                gender="M" if male[i] else "F",
                disadvantaged=bool(dis[i]),
                tenure=float(tenure[i]),
                pre_rate=float(pre[i]),
            )
        )
    return records


def simulate_population(
    spec: PopulationSpec,
    seed: int,
    roster: list[EmployeeRecord] | None = None,
) -> list[EmployeeRecord]:
    """Simulate a full experimental roster under the spec's outcome model.

    With roster=None, covariates are drawn and arms assigned first (seeds
    derived from `seed` so the whole pipeline is one-number reproducible).
    Passing an already-assigned roster fills in clicked, post_rate and
    attrition on top of it without touching covariates or arms.
    """
    ss = np.random.SeedSequence(seed)
    cov_seed, assign_seed, outcome_seed = [
        int(s.generate_state(1)[0]) for s in ss.spawn(3)
    ]
    if roster is None:
        roster = assign(simulate_covariates(spec, cov_seed), assign_seed)
    elif any(not r.treatment for r in roster):
        raise ValueError("roster has unassigned records; run assign first")
    rng = np.random.default_rng(outcome_seed)
    n = len(roster)
    uptake = np.zeros(n)
    effect = np.zeros(n)
    for i, rec in enumerate(roster):
        if rec.treatment == "email":
            uptake[i] = spec.uptake_email
            effect[i] = spec.effect_email
        elif rec.treatment == "email_phone":
            uptake[i] = spec.uptake_email_phone
            effect[i] = spec.effect_email_phone
    clicked = rng.random(n) < uptake
    noise = rng.normal(0.0, spec.noise_sd, size=n)
    attrit_idx = set(
        int(i) for i in rng.choice(n, size=spec.attrition_n, replace=False)
    )
    out = []
    for i, rec in enumerate(roster):
        gone = i in attrit_idx
        post = None
        if not gone:
            post = rec.pre_rate + (effect[i] + noise[i]) * clicked[i]
            post = max(post, MIN_RATE)
        out.append(
            EmployeeRecord(
                id=rec.id,
                age=rec.age,
                gender=rec.gender,
                disadvantaged=rec.disadvantaged,
                tenure=rec.tenure,
                pre_rate=rec.pre_rate,
                post_rate=post,
                treatment=rec.treatment,
                clicked=bool(clicked[i]),
                attrited=gone,
            )
        )
    return out


def arm_counts(records: list[EmployeeRecord]) -> dict[str, int]:
    counts = {arm: 0 for arm in ARMS}
    for rec in records:
        if rec.treatment:
            counts[rec.treatment] += 1
    return counts
