"""Deterministic retirement-income projection engine.

Everything in this module is closed-form annuity arithmetic on real (inflation
adjusted) returns. The central identity is the future value of a level
contribution stream: a fund earning per-period rate r with per-period inflow
s*c accumulates over n periods to

    R = R0 * (1+r)**n + s * c * ((1+r)**n - 1) / r

with the r -> 0 limit R = R0 + s*c*n. Retirement income is the fund times a
drawdown rate d, and the replacement rate divides that income by final salary.
Inverting the identity for c gives the required contribution rate; with a
nonzero starting balance the inversion stays linear in c, so no root finding
is ever needed.

All public callables work in annual terms unless stated otherwise. Salaries
grow with inflation by default, so in real terms the contribution base is
flat; a salary growth assumption different from inflation only rescales the
final-salary denominator of the replacement rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import ContributionCapWarning, ZeroDrawdown

# Statutory and house defaults. The company minimum is the plan's default
# contribution; the cap is where tax deductibility ends (warn, never refuse).
COMPANY_MINIMUM_RATE = 0.075
TAX_DEDUCTIBLE_CAP = 0.275
REPLACEMENT_BENCHMARK = 0.75

# Regulator-published living-annuity drawdown band.
DRAWDOWN_FLOOR = 0.025
DRAWDOWN_CEILING = 0.08

# Single-life level-annuity rate calibrated so a male retiring at 65 maps a
# fund to the advertised income band. See demos/calibrate_drawdown.py for the
# derivation of the feasible interval this value sits in.
CALIBRATED_DRAWDOWN = 0.0477

DEFAULT_INFLATION = 0.05
DEFAULT_NOMINAL_LOW = 0.08
DEFAULT_NOMINAL_HIGH = 0.10


def real_return(nominal: float, inflation: float) -> float:
    """Convert a nominal annual return to a real one (Fisher identity)."""
    if inflation <= -1.0:
        raise ValueError("inflation must exceed -100%")
    return (1.0 + nominal) / (1.0 + inflation) - 1.0


def _accumulation_factor(rate: float, periods: float) -> float:
    """((1+r)**n - 1) / r with the exact r=0 limit."""
    if rate == 0.0:
        return float(periods)
    return ((1.0 + rate) ** periods - 1.0) / rate


def accumulate_savings(
    balance: float,
    salary: float,
    rate: float,
    annual_return: float,
    years: float,
    monthly: bool = False,
) -> float:
    """Future value of a starting balance plus a level contribution stream.

    `rate` is the contribution fraction of salary, `annual_return` is the
    (usually real) annual growth rate. With monthly=True the contribution is
    spread over years*12 periods at the equivalent per-period rate; the
    difference against annual compounding is small but not zero.
    """
    if years < 0:
        raise ValueError("years must be nonnegative")
    if monthly:
        periods = years * 12.0
        per = (1.0 + annual_return) ** (1.0 / 12.0) - 1.0
        inflow = salary * rate / 12.0
    else:
        periods = years
        per = annual_return
        inflow = salary * rate
    growth = (1.0 + per) ** periods
    return balance * growth + inflow * _accumulation_factor(per, periods)


@dataclass(frozen=True)
class EmployeeProfile:
    """Inputs that belong to the person rather than the capital market."""

    age: int
    retirement_age: int
    salary: float
    balance: float = 0.0
    rate: float = COMPANY_MINIMUM_RATE
    gender: str = "M"

    def __post_init__(self):
        if self.retirement_age <= self.age:
            raise ValueError("retirement_age must exceed age")
        if self.salary <= 0:
            raise ValueError("salary must be positive")
        if self.balance < 0:
            raise ValueError("balance must be nonnegative")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must lie in [0, 1]")
        if self.gender not in ("M", "F"):
            raise ValueError("gender must be 'M' or 'F'")

    @property
    def horizon(self) -> int:
        return self.retirement_age - self.age


@dataclass(frozen=True)
class Assumptions:
    """Capital-market and salary-path assumptions, all annual."""

    inflation: float = DEFAULT_INFLATION
    nominal_low: float = DEFAULT_NOMINAL_LOW
    nominal_high: float = DEFAULT_NOMINAL_HIGH
    salary_growth: float | None = None  # None means tracks inflation

    def __post_init__(self):
        if self.nominal_high < self.nominal_low:
            raise ValueError("nominal_high must be >= nominal_low")

    @property
    def real_low(self) -> float:
        return real_return(self.nominal_low, self.inflation)

    @property
    def real_high(self) -> float:
        return real_return(self.nominal_high, self.inflation)

    def final_salary_factor(self, years: float) -> float:
        """Real growth of the salary base over the horizon.

        Salaries tracking inflation are flat in real terms (factor 1). A
        different growth path rescales only the replacement-rate denominator.
        """
        if self.salary_growth is None:
            return 1.0
        g = real_return(self.salary_growth, self.inflation)
        return (1.0 + g) ** years


@dataclass(frozen=True)
class DrawdownSchedule:
    """Annuity rates keyed by (gender, retirement_age), with a flat fallback.

    Only the calibrated (M, 65) point ships by default; other cells fall back
    to the same rate, which keeps comparisons across profiles consistent
    until a richer mortality table is plugged in.
    """

    table: dict = field(default_factory=lambda: {("M", 65): CALIBRATED_DRAWDOWN})
    fallback: float = CALIBRATED_DRAWDOWN

    def lookup(self, gender: str, retirement_age: int) -> float:
        return self.table.get((gender, retirement_age), self.fallback)


@dataclass(frozen=True)
class IncomeProjection:
    """Projected fund and income range for one profile."""

    fund_low: float
    fund_high: float
    income_low: float
    income_high: float
    replacement_low: float
    replacement_high: float
    drawdown: float
    final_salary: float


def project_retirement_income(
    profile: EmployeeProfile,
    assumptions: Assumptions | None = None,
    schedule: DrawdownSchedule | None = None,
    monthly: bool = False,
) -> IncomeProjection:
    """Project the fund at retirement and the income band it buys.

    The low and high legs use the low and high real-return assumptions; the
    drawdown rate comes from the schedule for the profile's gender and
    retirement age. All amounts are in today's money.
    """
    assumptions = assumptions or Assumptions()
    schedule = schedule or DrawdownSchedule()
    _warn_if_over_cap(profile.rate)
    years = profile.horizon
    d = schedule.lookup(profile.gender, profile.retirement_age)
    funds = [
        accumulate_savings(
            profile.balance, profile.salary, profile.rate, r, years, monthly
        )
        for r in (assumptions.real_low, assumptions.real_high)
    ]
    final_salary = profile.salary * assumptions.final_salary_factor(years)
    incomes = [f * d for f in funds]
    return IncomeProjection(
        fund_low=funds[0],
        fund_high=funds[1],
        income_low=incomes[0],
        income_high=incomes[1],
        replacement_low=incomes[0] / final_salary,
        replacement_high=incomes[1] / final_salary,
        drawdown=d,
        final_salary=final_salary,
    )


def required_contribution_rate(
    replacement: float,
    drawdown: float,
    annual_return: float,
    years: float,
) -> float:
    """Contribution rate that funds `replacement` of salary at retirement.

    Solves replacement * salary = drawdown * fund for a zero starting
    balance; salary cancels, leaving

        c = replacement * r / (drawdown * ((1+r)**n - 1))

    with the r=0 limit c = replacement / (drawdown * n).
    """
    if drawdown <= 0.0:
        raise ZeroDrawdown("drawdown rate must be positive")
    if years <= 0:
        raise ValueError("years must be positive")
    if replacement < 0:
        raise ValueError("replacement must be nonnegative")
    c = replacement / (drawdown * _accumulation_factor(annual_return, years))
    _warn_if_over_cap(c)
    return c


def required_rate_with_balance(
    replacement: float,
    drawdown: float,
    annual_return: float,
    years: float,
    salary: float,
    balance: float = 0.0,
) -> float:
    """Required rate when an existing balance already earns the return.

    The target fund is replacement * salary / drawdown; the balance grows on
    its own, and the contribution stream must fund the remainder. Clamped at
    zero when the balance alone overshoots the target.
    """
    if drawdown <= 0.0:
        raise ZeroDrawdown("drawdown rate must be positive")
    if years <= 0:
        raise ValueError("years must be positive")
    if salary <= 0:
        raise ValueError("salary must be positive")
    target = replacement * salary / drawdown
    from_balance = balance * (1.0 + annual_return) ** years
    shortfall = target - from_balance
    if shortfall <= 0.0:
        return 0.0
    c = shortfall / (salary * _accumulation_factor(annual_return, years))
    _warn_if_over_cap(c)
    return c


def generate_rate_table(
    replacement: float,
    drawdown: float,
    annual_return: float,
    start_ages: list[int] | None = None,
    retirement_ages: list[int] | None = None,
):
    """Required-rate grid over start ages (rows) and retirement ages (cols).

    Returns (start_ages, retirement_ages, numpy array of rates). Cells where
    the horizon is not positive are NaN.
    """
    import numpy as np

    start_ages = start_ages if start_ages is not None else [25, 30, 35, 40]
    retirement_ages = (
        retirement_ages if retirement_ages is not None else [55, 60, 65, 70, 75]
    )
    grid = np.full((len(start_ages), len(retirement_ages)), math.nan)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ContributionCapWarning)
        for i, a in enumerate(start_ages):
            for j, ra in enumerate(retirement_ages):
                n = ra - a
                if n > 0:
                    grid[i, j] = required_contribution_rate(
                        replacement, drawdown, annual_return, n
                    )
    return start_ages, retirement_ages, grid


def whatif(
    profile: EmployeeProfile,
    assumptions: Assumptions | None = None,
    schedule: DrawdownSchedule | None = None,
    rate: float | None = None,
    retirement_age: int | None = None,
    monthly: bool = False,
) -> tuple[IncomeProjection, IncomeProjection]:
    """Baseline projection next to one with rate and/or retirement age moved."""
    changed = EmployeeProfile(
        age=profile.age,
        retirement_age=retirement_age
        if retirement_age is not None
        else profile.retirement_age,
        salary=profile.salary,
        balance=profile.balance,
        rate=rate if rate is not None else profile.rate,
        gender=profile.gender,
    )
    base = project_retirement_income(profile, assumptions, schedule, monthly)
    alt = project_retirement_income(changed, assumptions, schedule, monthly)
    return base, alt


def round_replacement(x: float) -> int:
    """Replacement rate as a whole percent, ties away from zero upward."""
    return int(math.floor(x * 100.0 + 0.5))


def round_currency(x: float, unit: int = 1000) -> int:
    """Round a currency amount to the nearest `unit` (default thousand)."""
    return int(math.floor(x / unit + 0.5)) * unit


def _warn_if_over_cap(rate: float) -> None:
    if rate > TAX_DEDUCTIBLE_CAP:
        warnings.warn(
            f"contribution rate {rate:.4f} exceeds the deductible cap "
            f"{TAX_DEDUCTIBLE_CAP:.3f}",
            ContributionCapWarning,
            stacklevel=3,
        )
