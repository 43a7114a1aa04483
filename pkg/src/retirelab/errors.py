"""Semantic exceptions and warning categories shared across the package."""


class RetirelabError(Exception):
    """Base class for all errors raised by this package."""


class ZeroDrawdown(RetirelabError):
    """A drawdown rate of zero makes the required-rate problem unsolvable."""


class InvalidPayoffs(RetirelabError):
    """Employee payoff table violates the low > high dominance ordering."""


class RankDeficient(RetirelabError):
    """Design matrix is rank deficient after cleaning; coefficients not identified."""


class SchemaMismatch(RetirelabError):
    """Covariates do not match the forest's feature schema."""


class SchemaError(RetirelabError):
    """A file's header or top-level structure does not match the expected schema."""


class RowError(RetirelabError):
    """A CSV row failed validation. Collected per line, fatal only past a threshold."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class NotFound(RetirelabError):
    """Requested scenario id does not exist in the store."""


class StoreCorrupt(RetirelabError):
    """A persisted store line failed schema validation."""


class InfeasibleSplit(RetirelabError):
    """A candidate split leaves a child below the minimum treated/control counts."""


class ValidationError(RetirelabError):
    """Input payload validation failed; carries (path, message) pairs per field."""

    def __init__(self, field_errors: list[tuple[str, str]]):
        msg = "; ".join(f"{p}: {m}" for p, m in field_errors) or "invalid input"
        super().__init__(msg)
        self.field_errors = list(field_errors)


class ContributionCapWarning(UserWarning):
    """Contribution rate exceeds the 27.5% tax-deductibility cap."""


class WeakInstrument(UserWarning):
    """First-stage F statistic below the rule-of-thumb threshold of 10."""


class SparseStratum(UserWarning):
    """Strata merged or dropped before fitting (singletons or single-arm strata)."""


class LeafInheritance(UserWarning):
    """A leaf's estimation sample missed the minimums; ancestor estimate used."""
