"""
Projecting one member's retirement income
=========================================

Walks a single profile through the projection engine: accumulate the fund,
convert it to an income band, round for display, then answer the planning
questions (what rate reaches 75%? what does a rate bump or a later
retirement buy?).
"""

from retirelab import (
    Assumptions,
    EmployeeProfile,
    accumulate_savings,
    generate_rate_table,
    project_retirement_income,
    real_return,
    required_contribution_rate,
    required_rate_with_balance,
    whatif,
)
from retirelab.dataio import display_block

profile = EmployeeProfile(
    age=30, retirement_age=65, salary=200_000.0, balance=70_000.0, rate=0.075
)
assumptions = Assumptions()

# Step 1: the working rate is real, not nominal. The default nominal band
# of 8% - 10% against 5% inflation gives roughly 2.9% - 4.8% real.
r_low = real_return(assumptions.nominal_low, assumptions.inflation)
r_high = real_return(assumptions.nominal_high, assumptions.inflation)
print(f"real return band: {r_low:.4f} to {r_high:.4f}")

# Step 2: future value of balance plus contributions, low and high legs.
for label, r in (("low", r_low), ("high", r_high)):
    fund = accumulate_savings(
        profile.balance, profile.salary, profile.rate, r, profile.horizon
    )
    print(f"fund at retirement ({label} leg): {fund:,.0f}")

# Step 3: the engine wraps both legs plus the annuity conversion.
proj = project_retirement_income(profile, assumptions)
print(f"\nannual income band: {proj.income_low:,.2f} to {proj.income_high:,.2f}")
print(f"replacement band:   {proj.replacement_low:.4f} to {proj.replacement_high:.4f}")

# Step 4: display rounding, the numbers a member actually sees. Incomes
# round to the nearest thousand, monthly figures to the nearest hundred,
# replacement rates to whole percents.
disp = display_block(proj)
print(f"shown as: R{disp['income_low']:,} - R{disp['income_high']:,} per year")
print(f"          R{disp['monthly_low']:,} - R{disp['monthly_high']:,} per month")
print(f"          {disp['replacement_low_pct']}% - {disp['replacement_high_pct']}% of final salary")

# Step 5: the flagship planning question. 7.5% clearly undershoots the 75%
# benchmark; what rate reaches it over a 40-year career at 4% drawdown and
# 5% real return?
c = required_contribution_rate(replacement=0.75, drawdown=0.04, annual_return=0.05, years=40)
print(f"\nrate for 75% over 40 years: {c * 100:.2f}% of salary")

# Starting balances help. The same member with R70 000 already saved needs
# less from each paycheck.
c_bal = required_rate_with_balance(
    replacement=0.75, drawdown=0.04, annual_return=0.05, years=35,
    salary=profile.salary, balance=profile.balance,
)
print(f"with the existing balance and 35 years: {c_bal * 100:.2f}%")

# Step 6: what-if moves. Doubling the contribution rate doubles the
# contribution stream but not the balance growth, so income rises by less
# than 2x; retiring five years later compounds both.
base, bumped = whatif(profile, assumptions, rate=0.15)
print(f"\nrate 7.5% -> 15%: income low {base.income_low:,.0f} -> {bumped.income_low:,.0f}")
base, later = whatif(profile, assumptions, retirement_age=70)
print(f"retire 65 -> 70:  income low {base.income_low:,.0f} -> {later.income_low:,.0f}")

# Step 7: the required-rate grid over joining and retirement ages. Each
# cell is the percent of salary needed for the 75% benchmark; late joiners
# aiming at 55 need more than their whole salary.
rows, cols, grid = generate_rate_table(0.75, 0.04, 0.05)
header = ["start"] + [str(cob) for cob in cols]
print("\n" + "  ".join(f"{h:>6}" for h in header))
for age, row in zip(rows, grid):
    cells = [f"{v * 100:5.1f}" for v in row]
    print("  ".join(f"{x:>6}" for x in [str(age)] + cells))
