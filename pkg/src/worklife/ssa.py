"""Social Security retirement-benefit machinery.

AIME is carried annualized (thousand dollars per year).  The claiming-age
adjustment is folded into the stored AIME once, in the first benefit year,
so that later years need no record of the claiming age.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import InsuranceType, Occupation, StateVector


class RuleViolationError(ValueError):
    """A benefit operation was invoked outside the rules' domain."""


@dataclass(frozen=True)
class PolicyRules:
    """Social Security regime plus the budget-constraint constants."""

    fra: int = 66
    # 5/9 of one percent per month: 1/15 per year, not the rounded 6.67%.
    early_rate_first3: float = 0.2 / 3.0
    early_rate_rest: float = 0.05
    delayed_credit: float = 0.08
    delayed_credit_max_age: int = 70
    earliest_claim_age: int = 62
    # PIA percentages/bend points are not published in the paper; these are
    # shipped as a documented preset (bend points annualized, thousand $/yr).
    pia_percentages: tuple = (0.90, 0.32, 0.15)
    pia_bendpoints: tuple = (6.372, 38.424)
    consumption_floor: float = 4.0
    asset_floor: float = -5.0
    interest_rate: float = 0.03
    name: str = "fra66_baseline"

    def __post_init__(self):
        p1, p2, p3 = self.pia_percentages
        if not (0 < p3 < p2 < p1 <= 1.0):
            raise ValueError("PIA percentages must be strictly decreasing in (0, 1]")
        b1, b2 = self.pia_bendpoints
        if not (0 < b1 < b2):
            raise ValueError("PIA bend points must be positive and increasing")
        if not (self.earliest_claim_age <= self.fra <= self.delayed_credit_max_age):
            raise ValueError("need earliest_claim_age <= fra <= delayed_credit_max_age")
        if self.consumption_floor <= 0:
            raise ValueError("consumption floor must be positive")

    def with_updates(self, **kwargs) -> "PolicyRules":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class BenefitState:
    """Benefit bookkeeping carried alongside the state vector."""

    claimed: bool = False
    first_claim_year: bool = False
    adjusted: bool = False  # claiming-age factor already folded into AIME

    def __post_init__(self):
        if self.adjusted and not self.claimed:
            raise ValueError("adjusted implies claimed")


def adjustment_factor(claim_age: int, rules: PolicyRules) -> float:
    """Fraction of PIA paid for benefits first drawn at ``claim_age``.

    Early claiming is reduced 6.67%/yr for the first three years below FRA
    and 5%/yr beyond; delayed claiming is credited 8%/yr up to age 70.
    """
    if claim_age < rules.earliest_claim_age:
        raise RuleViolationError(
            f"claim age {claim_age} before earliest eligibility "
            f"{rules.earliest_claim_age}")
    if claim_age < rules.fra:
        years_early = rules.fra - claim_age
        return (1.0
                - rules.early_rate_first3 * min(years_early, 3)
                - rules.early_rate_rest * max(years_early - 3, 0))
    credited = min(claim_age, rules.delayed_credit_max_age) - rules.fra
    return 1.0 + rules.delayed_credit * max(credited, 0)


def aime_update(aime: float, wage: float, rules: PolicyRules) -> float:
    """One working year's AIME accrual under the alpha_t = 1 approximation."""
    if aime < 0 or wage < 0:
        raise ValueError("aime and wage must be nonnegative")
    return aime + max(0.0, wage - aime) / 35.0


def pia(aime, rules: PolicyRules):
    """Primary Insurance Amount: progressive piecewise-linear transform of AIME."""
    a = np.asarray(aime, dtype=float)
    if np.any(a < 0):
        raise ValueError("AIME must be nonnegative")
    p1, p2, p3 = rules.pia_percentages
    b1, b2 = rules.pia_bendpoints
    out = (p1 * np.minimum(a, b1)
           + p2 * np.clip(a - b1, 0.0, b2 - b1)
           + p3 * np.maximum(a - b2, 0.0))
    return float(out) if np.isscalar(aime) else out


def ss_benefit(state: StateVector, benefit: BenefitState,
               rules: PolicyRules) -> tuple:
    """Annual retirement benefit and the post-payment benefit bookkeeping.

    Returns ``(benefit_amount, new_aime, new_benefit_state)``.  In the first
    claim year the claiming-age factor is folded into the stored AIME; later
    years read the already-adjusted AIME with no further change.
    """
    if not benefit.claimed:
        return 0.0, state.aime, benefit
    if benefit.first_claim_year and not benefit.adjusted:
        factor = adjustment_factor(state.age, rules)
        new_aime = factor * state.aime
        return (pia(new_aime, rules), new_aime,
                replace(benefit, adjusted=True))
    return pia(state.aime, rules), state.aime, benefit


def ssdi_benefit(aime: float, rules: PolicyRules) -> float:
    """SSDI pays the unreduced PIA; applies only before the age-65 conversion."""
    return pia(aime, rules)


def private_pension(occupation: Occupation, aime: float, rules: PolicyRules,
                    replacement_rates=(0.15, 0.25, 0.35)) -> float:
    """Private pension approximated as an occupation-specific share of PIA."""
    rho = replacement_rates[int(occupation)]
    if rho < 0:
        raise ValueError("replacement rate must be nonnegative")
    return rho * pia(aime, rules)


def insurance_transition(current: InsuranceType, age: int, d: int) -> InsuranceType:
    """Next-period insurance type given this period's age and work choice."""
    if age + 1 >= 65:
        return InsuranceType.MEDICARE
    if current == InsuranceType.RETIREE_COVERED:
        return InsuranceType.RETIREE_COVERED
    if current == InsuranceType.TIED:
        return InsuranceType.TIED if d else InsuranceType.NONE
    return InsuranceType.NONE
