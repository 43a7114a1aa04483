"""
A field experiment from roster to estimates
===========================================

Runs the full experimental loop on a synthetic workforce: draw covariates,
stratify and randomize, simulate uptake and outcomes, then estimate the
assignment effect (ITT), the effect on those who actually enrolled (LATE),
a bootstrap interval, and a gender interaction.
"""

import numpy as np

from retirelab import (
    PopulationSpec,
    assign,
    bootstrap_mean_diff,
    het_effects,
    itt,
    late,
    simulate_covariates,
    simulate_population,
    stratify,
)

SEED = 20240901
spec = PopulationSpec()

# Step 1: a pre-assignment roster, covariates only. Nobody has an arm yet.
roster = simulate_covariates(spec, seed=SEED)
print(f"roster: {len(roster)} members, all unassigned")

# Step 2: stratification. Members are grouped by saver status (pre rate at
# the 7.5% minimum or above it), gender, age bucket, and disadvantaged
# status; randomization happens within each cell.
strata = stratify(roster)
sizes = sorted(len(ids) for ids in strata.values())
print(f"strata: {len(strata)} cells, sizes {sizes[0]} to {sizes[-1]}")

# Step 3: arm assignment. Blocks of four inside each stratum carry two
# controls, one email, one email+phone, so arm shares track 2:1:1 no matter
# how covariates cluster.
assigned = assign(roster, seed=SEED)
counts = {arm: 0 for arm in ("control", "email", "email_phone")}
for rec in assigned:
    counts[rec.treatment] += 1
print(f"arms: {counts}")

# Step 4: outcomes. Treated members enroll with arm-specific uptake; those
# who enroll raise their contribution rate; a handful attrit and lose their
# post measurement.
final = simulate_population(spec, seed=SEED, roster=assigned)
n_attr = sum(r.attrited for r in final)
n_click = sum(r.clicked for r in final)
print(f"outcomes: {n_click} enrolled, {n_attr} attrited")

# Step 5: ITT, the effect of being assigned. With 27% and 65% uptake the
# assignment effects are diluted versions of the enrollment effect.
fit = itt(final)
print("\nITT (change in contribution rate, percentage points)")
for arm in ("email", "email_phone"):
    lo, hi = fit.ci_for(arm)
    print(f"  {arm:12s} {fit.coef_for(arm):+.3f}  se {fit.se_for(arm):.3f}  "
          f"95% CI [{lo:+.3f}, {hi:+.3f}]")
print(f"  n = {fit.nobs}")

# Step 6: LATE, the effect among enrollees, instrumenting enrollment with
# assignment. Both arms shift the same behavior, so the rescaled effect
# should sit near the true enrollment effect of 1.0.
iv = late(final)
print(f"\nLATE: {iv.coef_for('clicked'):+.3f}  se {iv.se_for('clicked'):.3f}  "
      f"first-stage F {iv.first_stage_f:.1f}")

# Step 7: a distribution-free check on the pooled contrast. Resampling the
# raw changes gives an interval that should bracket the ITT magnitudes.
changes = [r.post_rate - r.pre_rate for r in final
           if not r.attrited and r.post_rate is not None]
arms = [r.treatment for r in final if not r.attrited and r.post_rate is not None]
y_treat = np.array([c for c, a in zip(changes, arms) if a != "control"])
y_ctrl = np.array([c for c, a in zip(changes, arms) if a == "control"])
boot = bootstrap_mean_diff(y_treat, y_ctrl, seed=SEED, draws=2000)
print(f"\npooled treated-minus-control: {boot.estimate:+.3f}  "
      f"95% CI [{boot.lo:+.3f}, {boot.hi:+.3f}]  ({boot.draws} draws)")

# Step 8: heterogeneity by a stratification variable. The interaction
# coefficients ask whether men respond differently; this DGP says no.
het = het_effects(final, group="male")
for name in het.names:
    if ":" in name:
        print(f"het {name:22s} {het.coef_for(name):+.3f}  "
              f"se {het.se_for(name):.3f}")
