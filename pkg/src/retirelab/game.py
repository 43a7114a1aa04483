"""Employer default-setting game, solved by backward induction.

An employer chooses between imposing a high default contribution ("high")
and leaving the status quo ("pass"). Employees come in two behavioral types:
a share y never revisits the default (and is hurt by a bad one, costing the
employer delta in goodwill), the rest re-optimize and land on the outcome
worth 2 to the employer. Imposing the high default yields the employer 1
regardless of type. Every employee type strictly prefers the low personal
effort action whatever the employer does, so the employee stage is trivial
and the equilibrium turns on the employer's comparison

    high:  1
    pass:  y * (-delta) + (1 - y) * 2

"high" is subgame perfect when y * (delta + 2) > 1, "pass" when the
inequality reverses, and at equality every mixture over the two is an
equilibrium. Comparisons run on exact rationals built from the binary values
of the inputs, so classification never flips on float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidPayoffs

HIGH, PASS, MIXED = "high", "pass", "mixed"
LOW_EFFORT = "low"


@dataclass(frozen=True)
class EmployeePayoffs:
    """Payoffs to each employee type from their own action choice.

    Low effort must strictly dominate for both types; that is the premise
    that collapses the employee stage.
    """

    careful_low: float = 2.0
    careful_high: float = 1.0
    inert_low: float = 2.0
    inert_high: float = 0.0

    def __post_init__(self):
        if self.careful_low <= self.careful_high:
            raise InvalidPayoffs("careful type must strictly prefer low effort")
        if self.inert_low <= self.inert_high:
            raise InvalidPayoffs("inert type must strictly prefer low effort")


@dataclass(frozen=True)
class GameParams:
    delta: float
    y: float
    payoffs: EmployeePayoffs = field(default_factory=EmployeePayoffs)

    def __post_init__(self):
        if not 0.0 <= self.y <= 1.0:
            raise ValueError("y must lie in [0, 1]")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")


@dataclass(frozen=True)
class Equilibrium:
    employer: str
    employee: tuple[str, str]
    employer_value: float
    high_payoff: float
    pass_payoff: float
    q_range: tuple[float, float] | None = None

    def to_json(self) -> dict:
        out = {
            "employer": self.employer,
            "employee": list(self.employee),
            "employer_value": self.employer_value,
            "high_payoff": self.high_payoff,
            "pass_payoff": self.pass_payoff,
        }
        if self.q_range is not None:
            out["q_range"] = list(self.q_range)
        return out


def employer_expected_payoff(action: str, params: GameParams) -> Fraction:
    """Exact expected employer payoff of a pure action."""
    if action == HIGH:
        return Fraction(1)
    if action == PASS:
        y = Fraction(params.y)
        return y * Fraction(-params.delta) + (1 - y) * Fraction(2)
    raise ValueError(f"action must be '{HIGH}' or '{PASS}'")


def employee_best_response(payoffs: EmployeePayoffs) -> tuple[str, str]:
    """Both types play low effort; dominance is enforced at construction."""
    return (LOW_EFFORT, LOW_EFFORT)


def indifference_share(delta: float) -> float:
    """Inert share y at which the employer is exactly indifferent."""
    return float(Fraction(1) / (Fraction(delta) + 2))


def spe(params: GameParams) -> Equilibrium:
    """Subgame-perfect equilibrium of the default-setting game."""
    hi = employer_expected_payoff(HIGH, params)
    pa = employer_expected_payoff(PASS, params)
    employee = employee_best_response(params.payoffs)
    if hi > pa:
        action, value, q = HIGH, hi, None
    elif hi < pa:
        action, value, q = PASS, pa, None
    else:
        # Indifference: any probability q on "high" is an equilibrium.
        action, value, q = MIXED, hi, (0.0, 1.0)
    return Equilibrium(
        employer=action,
        employee=employee,
        employer_value=float(value),
        high_payoff=float(hi),
        pass_payoff=float(pa),
        q_range=q,
    )


def sweep(deltas, ys, payoffs: EmployeePayoffs | None = None) -> list[dict]:
    """Equilibrium region over a (delta, y) grid, one row per cell."""
    payoffs = payoffs or EmployeePayoffs()
    rows = []
    for d in deltas:
        for y in ys:
            eq = spe(GameParams(delta=float(d), y=float(y), payoffs=payoffs))
            rows.append(
                {
                    "delta": float(d),
                    "y": float(y),
                    "employer": eq.employer,
                    "employer_value": eq.employer_value,
                }
            )
    return rows
