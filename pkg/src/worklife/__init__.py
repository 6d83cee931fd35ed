"""Life-cycle retirement model: solver, simulator, estimation, experiments."""

from .core import (Education, InsuranceType, JointHealth, Occupation,
                   PreferenceParams, StateVector, bequest_utility,
                   crra_utility, nonpecuniary_utility)
from .processes import (ExpenseModel, HealthTransitionModel, ModelParams,
                        MortalityModel, ShockSpec, SpousalIncomeModel,
                        SSDIModel, WageModel, discretize_income_shock)
from .solver import DecisionTables, GridSpec, emax_and_ccp, solve
from .ssa import (BenefitState, PolicyRules, adjustment_factor, aime_update,
                  insurance_transition, pia, private_pension, ss_benefit,
                  ssdi_benefit)

__all__ = [
    "Education", "InsuranceType", "JointHealth", "Occupation",
    "PreferenceParams", "StateVector", "bequest_utility", "crra_utility",
    "nonpecuniary_utility", "ExpenseModel", "HealthTransitionModel",
    "ModelParams", "MortalityModel", "ShockSpec", "SpousalIncomeModel",
    "SSDIModel", "WageModel", "discretize_income_shock", "DecisionTables",
    "GridSpec", "emax_and_ccp", "solve", "BenefitState", "PolicyRules",
    "adjustment_factor", "aime_update", "insurance_transition", "pia",
    "private_pension", "ss_benefit", "ssdi_benefit",
]

__version__ = "0.1.0"
