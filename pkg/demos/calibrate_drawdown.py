"""
Deriving the calibrated annuity drawdown rate
=============================================

The projection engine converts a retirement fund into yearly income with a
single drawdown rate. This script derives the interval of rates that make
the reference member's replacement band round to 26% - 39% and land within
5% of the advertised R51 000 - R77 000 income band, then shows where the
committed constant sits inside that interval.
"""

import numpy as np

from retirelab import Assumptions, EmployeeProfile, accumulate_savings
from retirelab.projection import (
    CALIBRATED_DRAWDOWN,
    DRAWDOWN_CEILING,
    DRAWDOWN_FLOOR,
)

# The reference member: 30 years old, retiring at 65, R200 000 salary, an
# existing R70 000 balance, contributing the 7.5% company minimum.
profile = EmployeeProfile(
    age=30, retirement_age=65, salary=200_000.0, balance=70_000.0, rate=0.075
)
assumptions = Assumptions()
years = profile.horizon

# Step 1: the fund at retirement does not depend on the drawdown rate, so
# compute the low and high legs once.
fund_low = accumulate_savings(
    profile.balance, profile.salary, profile.rate, assumptions.real_low, years
)
fund_high = accumulate_savings(
    profile.balance, profile.salary, profile.rate, assumptions.real_high, years
)
final_salary = profile.salary * assumptions.final_salary_factor(years)
print(f"fund at retirement: {fund_low:,.0f} to {fund_high:,.0f}")
print(f"final salary (today's money): {final_salary:,.0f}")

# Step 2: income scales linearly in d, so each constraint is an interval.
# Replacement rounds to 26 iff 0.255 <= fund_low * d / final_salary < 0.265,
# and to 39 iff 0.385 <= fund_high * d / final_salary < 0.395.
lo_26 = 0.255 * final_salary / fund_low
hi_26 = 0.265 * final_salary / fund_low
lo_39 = 0.385 * final_salary / fund_high
hi_39 = 0.395 * final_salary / fund_high
band_lo = max(lo_26, lo_39)
band_hi = min(hi_26, hi_39)
print(f"\nd for a 26% low end:  [{lo_26:.6f}, {hi_26:.6f})")
print(f"d for a 39% high end: [{lo_39:.6f}, {hi_39:.6f})")
print(f"both at once:         [{band_lo:.6f}, {band_hi:.6f})")

# Step 3: intersect with the advertised income band, allowing 5% relative
# slack on each endpoint, and with the regulator's living-annuity limits.
inc_lo = 0.95 * 51_000 / fund_low
inc_hi = 1.05 * 77_000 / fund_high
feasible_lo = max(band_lo, inc_lo, DRAWDOWN_FLOOR)
feasible_hi = min(band_hi, inc_hi, DRAWDOWN_CEILING)
print(f"d for incomes within 5%: [{inc_lo:.6f}, {inc_hi:.6f}]")
print(f"regulator band:          [{DRAWDOWN_FLOOR}, {DRAWDOWN_CEILING}]")
print(f"feasible window:         [{feasible_lo:.6f}, {feasible_hi:.6f})")

# Step 4: the committed constant, a four-decimal rate inside the window,
# so the source reads as a plain annuity quote.
d = CALIBRATED_DRAWDOWN
assert feasible_lo <= d < feasible_hi
print(f"\ncommitted rate: {d}")
print(f"income band at the committed rate: "
      f"{fund_low * d:,.2f} to {fund_high * d:,.2f}")
print(f"replacement band: {fund_low * d / final_salary:.4f} to "
      f"{fund_high * d / final_salary:.4f} "
      f"(rounds to {round(fund_low * d / final_salary * 100)}% - "
      f"{round(fund_high * d / final_salary * 100)}%)")

# Step 5: sanity-scan the window numerically. Every rate on a fine grid
# inside the window must reproduce the rounded band; rates just outside
# must not.
grid = np.linspace(feasible_lo, feasible_hi, 2001)[:-1]
ok = [
    round(fund_low * g / final_salary * 100) == 26
    and round(fund_high * g / final_salary * 100) == 39
    for g in grid
]
assert all(ok)
for outside in (feasible_lo - 1e-4, feasible_hi + 1e-4):
    bad = (
        round(fund_low * outside / final_salary * 100),
        round(fund_high * outside / final_salary * 100),
    )
    print(f"just outside at {outside:.6f}: band rounds to {bad}")
print(f"\n{len(grid)} grid points inside the window all round to 26% - 39%")
