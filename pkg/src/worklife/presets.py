"""Shipped parameter presets.

``paper_estimates`` carries the published preference estimates and the
published wage health penalties and education premia.  Quantities the source
tables do not pin down (wage constants and the manual/clerical age profiles,
all first-stage transition and expense coefficients, the PIA schedule) are
calibrated here to the published descriptive statistics and marked as such;
they are configuration defaults, not published values.
"""

from __future__ import annotations

import numpy as np

from .core import PreferenceParams
from .processes import (AGE_MAX, AGE_MIN, ExpenseModel, HealthTransitionModel,
                        ModelParams, MortalityModel, N_HEALTH_FEATURES,
                        ShockSpec, SpousalIncomeModel, SSDIModel, WageModel)
from .ssa import PolicyRules


def paper_preferences() -> PreferenceParams:
    """Published second-stage preference estimates (defaults of the class)."""
    return PreferenceParams()


def baseline_rules() -> PolicyRules:
    return PolicyRules(name="fra66_baseline")


def reform_rules() -> PolicyRules:
    """FRA raised to 70 with full benefits there and no further delay credit."""
    return PolicyRules(fra=70, delayed_credit=0.0, delayed_credit_max_age=70,
                       name="fra70_reform")


def default_life_table() -> np.ndarray:
    """Gompertz-shaped male one-year death rates, forced to 1 at the horizon."""
    ages = np.arange(AGE_MIN, AGE_MAX + 1)
    q = 0.0055 * np.exp(0.085 * (ages - AGE_MIN))
    q[-1] = 1.0
    return np.minimum(q, 1.0)


# Anchor shares of the four joint health states (order 00, 01, 10, 11) at
# ages 51 / 70 / 90; quadratics are fit exactly through the three points.
_ALIVE_ANCHORS = {
    51: (0.72, 0.13, 0.09, 0.06),
    70: (0.55, 0.18, 0.14, 0.13),
    90: (0.30, 0.25, 0.15, 0.30),
}
_DYING_ANCHORS = {
    51: (0.35, 0.20, 0.20, 0.25),
    70: (0.28, 0.21, 0.20, 0.31),
    90: (0.18, 0.24, 0.17, 0.41),
}


def _quadratic_through(anchors: dict) -> np.ndarray:
    ages = np.array(sorted(anchors))
    coeffs = np.empty((4, 3))
    for h in range(4):
        vals = np.array([anchors[a][h] for a in ages])
        c2, c1, c0 = np.polyfit(ages, vals, 2)
        coeffs[h] = (c0, c1, c2)
    return coeffs


def default_mortality_model(q: np.ndarray | None = None) -> MortalityModel:
    if q is None:
        q = default_life_table()
    return MortalityModel.from_shifter_polys(
        q, dying_coeffs=_quadratic_through(_DYING_ANCHORS),
        alive_coeffs=_quadratic_through(_ALIVE_ANCHORS))


def _expand_centered(b0: float, b1: float, b2: float = 0.0,
                     center: float = 70.0) -> tuple:
    """Rewrite b0 + b1*(age-c) + b2*(age-c)^2 on the raw-age basis."""
    return (b0 - b1 * center + b2 * center ** 2,
            b1 - 2.0 * b2 * center,
            b2)


def _transition_block(rows: list) -> np.ndarray:
    """Assemble one (3, n_features) logit block.

    Each row: (centered intercept/slope/curvature, education shifts (hs, sc,
    cp), occupation-x-work shifts (manual, clerical, professional)).
    """
    block = np.zeros((3, N_HEALTH_FEATURES))
    for i, (b0, b1, b2, edu, work) in enumerate(rows):
        block[i, 0:3] = _expand_centered(b0, b1, b2)
        block[i, 3:6] = edu
        block[i, 6:9] = work
    return block


def default_health_transitions() -> HealthTransitionModel:
    """Synthetic transition logits: worsening accelerates with age (faster on
    the cognitive margin), education and work are protective, poor states are
    persistent.  Patterns only; not published values."""
    edu_protect = (-0.15, -0.25, -0.40)
    work_protect = (-0.15, -0.20, -0.25)
    none3 = (0.0, 0.0, 0.0)
    blocks = (
        # from {good, good}: logits of next 01, 10, 11
        _transition_block([
            (-2.70, 0.035, 0.0006, edu_protect, work_protect),
            (-2.90, 0.030, 0.0000, edu_protect, work_protect),
            (-4.60, 0.050, 0.0008, edu_protect, work_protect),
        ]),
        # from {good phys, poor cog}
        _transition_block([
            (1.20, 0.030, 0.0, none3, none3),
            (-2.50, 0.030, 0.0, edu_protect, work_protect),
            (-2.00, 0.045, 0.0006, edu_protect, work_protect),
        ]),
        # from {poor phys, good cog}
        _transition_block([
            (-2.60, 0.030, 0.0006, edu_protect, work_protect),
            (1.40, 0.025, 0.0, none3, none3),
            (-1.80, 0.040, 0.0004, edu_protect, work_protect),
        ]),
        # from {poor, poor}
        _transition_block([
            (-0.10, 0.020, 0.0, none3, none3),
            (0.10, 0.000, 0.0, none3, none3),
            (1.80, 0.030, 0.0, none3, none3),
        ]),
    )
    return HealthTransitionModel(coeffs=blocks)


def default_wage_model() -> WageModel:
    """Wage equation preset.

    Health penalties and education premia are the published first-stage
    values.  Constants (all occupations) and the manual/clerical age terms
    are calibrated so predicted levels track the descriptive wage means;
    the professional age profile is the published one.
    """
    coeffs = np.array([
        # const, age, age^2, edu_hs, edu_sc, edu_cp, poor_phys, poor_cog
        [3.4572, 0.020, -0.00035, 0.151, 0.186, 0.259, -0.074, -0.073],
        [3.3314, 0.025, -0.00035, 0.232, 0.356, 0.459, -0.109, -0.154],
        [4.5226, 0.010, -0.00030, -0.007, 0.155, 0.289, -0.042, -0.189],
    ])
    return WageModel(coeffs=coeffs)


def default_expense_model() -> ExpenseModel:
    return ExpenseModel()


def default_ssdi_model() -> SSDIModel:
    return SSDIModel()


def default_spousal_model() -> SpousalIncomeModel:
    return SpousalIncomeModel(
        prob_coeffs=(3.0125, -0.375, 0.0, 0.0, 0.10, 0.15, 0.20),
        amount_coeffs=(24.0, -2.0, 0.0, 0.0, 2.0, 3.5, 6.0))


def paper_estimates(shock_spec: ShockSpec | None = None) -> ModelParams:
    """The full default bundle used by the CLI presets and the tests."""
    return ModelParams(
        prefs=paper_preferences(),
        wage=default_wage_model(),
        expense=default_expense_model(),
        ssdi=default_ssdi_model(),
        spousal=default_spousal_model(),
        transitions=default_health_transitions(),
        mortality=default_mortality_model(),
        shocks=shock_spec if shock_spec is not None else ShockSpec(),
        pension_rates=(0.15, 0.25, 0.35),
    )
