"""Randomized tiny model instances for oracle-equivalence testing."""

import numpy as np

from worklife.core import InsuranceType, PreferenceParams
from worklife.presets import default_mortality_model
from worklife.processes import (ExpenseModel, HealthTransitionModel,
                                ModelParams, N_HEALTH_FEATURES, ShockSpec,
                                SpousalIncomeModel, SSDIModel, WageModel)
from worklife.solver import GridSpec
from worklife.ssa import PolicyRules


def toy_transitions(rng):
    """Random transition blocks with only the cognitive margin active, so the
    effective dynamics run on two health states."""
    blocks = []
    for _ in range(4):
        b = np.zeros((3, N_HEALTH_FEATURES))
        b[0, 0] = rng.uniform(-2.0, 1.0)        # next state {good, poor cog}
        b[0, 3:9] = rng.uniform(-0.3, 0.1, 6)
        b[1:, 0] = -60.0                         # physical-poor states off
        blocks.append(b)
    return HealthTransitionModel(coeffs=tuple(blocks))


def toy_params(rng):
    nu = float(rng.choice([1.0, 1.318, 2.0]))
    iota1 = float(rng.choice([0.0, 2.5, 8.476]))
    sigma = float(rng.choice([0.0, 0.0, 0.0, 2.0]))
    prefs = PreferenceParams(
        nu=nu, beta=float(rng.uniform(0.90, 0.99)),
        lambda1=tuple(rng.uniform(-1.2, 0.2, 3)),
        lambda2=tuple(rng.uniform(-0.8, 0.0, 3)),
        lambda3=tuple(rng.uniform(-0.8, 0.0, 3)),
        iota1=iota1, iota2=10.0,
        sigma_zeta=sigma, ev_scale=1.0)
    wage_coeffs = np.zeros((3, 8))
    wage_coeffs[:, 0] = rng.uniform(2.8, 3.6, 3)
    wage_coeffs[:, 3:6] = rng.uniform(0.0, 0.3, (3, 3))
    wage_coeffs[:, 6] = rng.uniform(-0.3, 0.0, 3)
    wage_coeffs[:, 7] = rng.uniform(-0.3, 0.0, 3)
    return ModelParams(
        prefs=prefs,
        wage=WageModel(coeffs=wage_coeffs),
        expense=ExpenseModel(base=float(rng.uniform(0.5, 2.0)), age_slope=0.02),
        ssdi=SSDIModel(),
        spousal=SpousalIncomeModel(
            prob_coeffs=(float(rng.uniform(-0.5, 1.0)), 0, 0, 0, 0, 0, 0),
            amount_coeffs=(float(rng.uniform(5.0, 15.0)), 0, 0, 0, 0, 0, 0)),
        transitions=toy_transitions(rng),
        mortality=default_mortality_model(),
        shocks=ShockSpec(sigma=sigma, n_nodes=3),
        pension_rates=(0.15, 0.25, 0.35))


def toy_grid(rng, full_search=True):
    n_periods = int(rng.integers(2, 4))
    age_min = int(rng.choice([61, 74]))
    return GridSpec(asset_nodes=np.array([-5.0, 60.0]),
                    aime_nodes=np.array([0.0, 60.0]),
                    n_cons=12, warm_window=5, full_search=full_search,
                    age_min=age_min, age_max=age_min + n_periods - 1,
                    work_age_max=75, name="toy")


def toy_start_cells(rng, grid, n=6):
    cells = []
    for _ in range(n):
        edu = int(rng.integers(0, 4))
        occ = int(rng.integers(0, 3))
        hlt = int(rng.integers(0, 2))   # two-state health dynamics
        worked = int(rng.integers(0, 2))
        if grid.age_min >= 65:
            ins = int(InsuranceType.MEDICARE)
        else:
            ins = int(rng.choice([InsuranceType.NONE, InsuranceType.TIED,
                                  InsuranceType.RETIREE_COVERED]))
        cells.append((edu, occ, hlt, ins, worked))
    return cells
