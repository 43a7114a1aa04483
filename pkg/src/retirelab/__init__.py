"""Retirement-income projection engine and field-experiment toolkit."""

__version__ = "0.1.0"

from .projection import (  # noqa: F401
    Assumptions,
    DrawdownSchedule,
    EmployeeProfile,
    IncomeProjection,
    accumulate_savings,
    generate_rate_table,
    project_retirement_income,
    real_return,
    required_contribution_rate,
    required_rate_with_balance,
    whatif,
)
from .experiment import (  # noqa: F401
    EmployeeRecord,
    PopulationSpec,
    assign,
    simulate_covariates,
    simulate_population,
    stratify,
)
from .estimators import (  # noqa: F401
    BootstrapResult,
    RegressionFit,
    bootstrap_mean_diff,
    het_effects,
    itt,
    late,
)
from .forest import (  # noqa: F401
    Forest,
    ForestParams,
    cate_summary,
    predict_cate,
    train_forest,
)
from .game import Equilibrium, GameParams, spe, sweep  # noqa: F401
