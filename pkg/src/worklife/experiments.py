"""Counterfactual engine: channel shutdowns, requirement swaps, the
retirement-age reform, response-type taxonomy, and welfare accounting."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np
import pandas as pd

from .processes import ModelParams
from .simulate import Panel, simulate_lifecycle
from .solver import DecisionTables, GridSpec, choice_specific_value, solve
from .ssa import PolicyRules


class ResponseType(IntEnum):
    NEVER_TAKER = 0
    COMPLIER = 1
    DEFIER = 2
    ALWAYS_TAKER = 3


@dataclass(frozen=True)
class ChannelMask:
    """Flags muting a health dimension's loadings; applied to a cloned
    parameter bundle, never in place."""

    disutility_physical: bool = False
    disutility_cognitive: bool = False
    wage_physical: bool = False
    wage_cognitive: bool = False
    expense_physical: bool = False
    expense_cognitive: bool = False
    mortality_physical: bool = False
    mortality_cognitive: bool = False
    ssdi_physical: bool = False
    ssdi_cognitive: bool = False

    @classmethod
    def physical(cls) -> "ChannelMask":
        return cls(disutility_physical=True, wage_physical=True,
                   expense_physical=True, mortality_physical=True,
                   ssdi_physical=True)

    @classmethod
    def cognitive(cls) -> "ChannelMask":
        return cls(disutility_cognitive=True, wage_cognitive=True,
                   expense_cognitive=True, mortality_cognitive=True,
                   ssdi_cognitive=True)

    @classmethod
    def all_health(cls) -> "ChannelMask":
        return cls(**{f.name: True for f in cls.__dataclass_fields__.values()})

    @property
    def empty(self) -> bool:
        return not any(getattr(self, f) for f in self.__dataclass_fields__)


def _marginalize_mortality(model, over_physical: bool, over_cognitive: bool):
    """Make the mortality shifter flat along the muted health margins while
    keeping total probability over the joint states."""
    pd_, pa = model.p_health_dying.copy(), model.p_health_alive.copy()
    idx = np.arange(4)
    groups = idx.copy()
    if over_physical:
        groups = groups % 2          # collapse the physical bit
    if over_cognitive:
        groups = groups // 2 * 2     # collapse the cognitive bit
    ratio = np.ones_like(pd_)
    for g in np.unique(groups):
        members = np.nonzero(groups == g)[0]
        num = pd_[:, members].sum(axis=1)
        den = pa[:, members].sum(axis=1)
        ratio[:, members] = (num / den)[:, None]
    new_dying = pa * ratio
    return replace(model, p_health_dying=new_dying)


def apply_mask(params: ModelParams, mask: ChannelMask) -> ModelParams:
    """Zero the masked loadings on a copy of the parameter bundle."""
    prefs = params.prefs
    if mask.disutility_physical:
        prefs = prefs.with_updates(lambda2=(0.0, 0.0, 0.0))
    if mask.disutility_cognitive:
        prefs = prefs.with_updates(lambda3=(0.0, 0.0, 0.0))

    wage = params.wage
    if mask.wage_physical or mask.wage_cognitive:
        coeffs = np.array(wage.coeffs, dtype=float, copy=True)
        if mask.wage_physical:
            coeffs[:, 6] = 0.0
        if mask.wage_cognitive:
            coeffs[:, 7] = 0.0
        wage = replace(wage, coeffs=coeffs)

    expense = params.expense
    if mask.expense_physical or mask.expense_cognitive:
        updates = {"both_poor": 0.0}
        if mask.expense_physical:
            updates["poor_physical"] = 0.0
        if mask.expense_cognitive:
            updates["poor_cognitive"] = 0.0
        expense = replace(expense, **updates)

    ssdi = params.ssdi
    if mask.ssdi_physical or mask.ssdi_cognitive:
        coeffs = list(ssdi.coeffs)
        if mask.ssdi_physical:
            coeffs[3] = 0.0
        if mask.ssdi_cognitive:
            coeffs[4] = 0.0
        ssdi = replace(ssdi, coeffs=tuple(coeffs))

    mortality = params.mortality
    if mask.mortality_physical or mask.mortality_cognitive:
        mortality = _marginalize_mortality(mortality, mask.mortality_physical,
                                           mask.mortality_cognitive)

    return params.with_updates(prefs=prefs, wage=wage, expense=expense,
                               ssdi=ssdi, mortality=mortality)


def swap_requirements(params: ModelParams, donor: int, recipient: int,
                      dimension: str = "both") -> ModelParams:
    """Give ``recipient`` the ability requirements of ``donor``: the work
    disutility and wage loadings of the chosen health dimension."""
    if dimension not in ("physical", "cognitive", "both"):
        raise ValueError("dimension must be physical, cognitive, or both")
    prefs = params.prefs
    lam2 = list(prefs.lambda2)
    lam3 = list(prefs.lambda3)
    coeffs = np.array(params.wage.coeffs, dtype=float, copy=True)
    if dimension in ("physical", "both"):
        lam2[recipient] = lam2[donor]
        coeffs[recipient, 6] = coeffs[donor, 6]
    if dimension in ("cognitive", "both"):
        lam3[recipient] = lam3[donor]
        coeffs[recipient, 7] = coeffs[donor, 7]
    return params.with_updates(
        prefs=prefs.with_updates(lambda2=tuple(lam2), lambda3=tuple(lam3)),
        wage=replace(params.wage, coeffs=coeffs))


@dataclass
class CounterfactualRun:
    base_panel: Panel
    cf_panel: Panel
    base_tables: DecisionTables
    cf_tables: DecisionTables


def run_counterfactual(params: ModelParams, rules: PolicyRules,
                       grid: GridSpec, population: dict, seed: int,
                       mask: ChannelMask | None = None,
                       cf_rules: PolicyRules | None = None,
                       swap: tuple | None = None,
                       with_mortality: bool = False,
                       base_tables: DecisionTables | None = None) -> CounterfactualRun:
    """Re-solve under modified parameters or rules and re-simulate the same
    population under common random numbers, returning aligned panels.

    ``swap`` is (donor, recipient, dimension).  Channel masks may combine
    with a rules change (the reform-under-no-constraint experiments); the
    welfare default is the no-attrition sample.
    """
    cf_params = params
    if mask is not None and not mask.empty:
        cf_params = apply_mask(cf_params, mask)
    if swap is not None:
        cf_params = swap_requirements(cf_params, *swap)
    rules_cf = cf_rules if cf_rules is not None else rules

    if base_tables is None:
        base_tables = solve(params, rules, grid)
    cf_tables = base_tables
    if cf_params is not params or rules_cf is not rules:
        cf_tables = solve(cf_params, rules_cf, grid)

    base_panel = simulate_lifecycle(population, base_tables, params, rules,
                                    seed=seed, with_mortality=with_mortality)
    cf_panel = simulate_lifecycle(population, cf_tables, cf_params, rules_cf,
                                  seed=seed, with_mortality=with_mortality)
    return CounterfactualRun(base_panel=base_panel, cf_panel=cf_panel,
                             base_tables=base_tables, cf_tables=cf_tables)


# ---------------------------------------------------------------------------
# Descriptive statistics on paired panels
# ---------------------------------------------------------------------------

def lfp_by_age(panel: Panel, occupation: int | None = None) -> pd.Series:
    df = panel.df
    if occupation is not None:
        df = df[df["occupation"] == occupation]
    return df.groupby("age")["d"].mean()


def employment_decline_share(base: Panel, cf: Panel, age_lo: int = 51,
                             age_hi: int = 70,
                             occupation: int | None = None) -> float:
    """Share of the age-51-to-70 employment decline explained by the muted
    channels; NaN when the baseline decline is not positive."""
    lfp_b = lfp_by_age(base, occupation)
    lfp_c = lfp_by_age(cf, occupation)
    decline_b = lfp_b.loc[age_lo] - lfp_b.loc[age_hi]
    decline_c = lfp_c.loc[age_lo] - lfp_c.loc[age_hi]
    if decline_b <= 0:
        return float("nan")
    return float((decline_b - decline_c) / decline_b)


def relative_impact_profile(base: Panel, cf_cognitive: Panel,
                            cf_physical: Panel,
                            denom_floor: float = 1e-4) -> pd.DataFrame:
    """Per-age labor-supply gain from muting cognitive channels relative to
    muting physical channels; tiny denominators emit missing."""
    b = lfp_by_age(base)
    num = lfp_by_age(cf_cognitive) - b
    den = lfp_by_age(cf_physical) - b
    ratio = num / den.where(den.abs() >= denom_floor)
    return pd.DataFrame({"age": b.index, "gain_cognitive": num.values,
                         "gain_physical": den.values,
                         "relative_impact": ratio.values})


def average_retirement_age(panel: Panel, occupation: int | None = None) -> float:
    """Mean age at the transition out of the labor force.

    The retirement age of an individual is the first age with d = 0 after a
    working year; individuals never observed retiring are censored at their
    last working age + 1.
    """
    df = panel.df
    if occupation is not None:
        df = df[df["occupation"] == occupation]
    df = df.sort_values(["id", "age"])
    ages = []
    for _, g in df.groupby("id"):
        d = g["d"].to_numpy()
        age = g["age"].to_numpy()
        if d.max() == 0:
            continue  # never observed working
        idx = np.nonzero(d == 1)[0]
        last_work = idx[-1]
        if last_work + 1 < len(d):
            ages.append(age[last_work + 1])
        else:
            ages.append(age[last_work] + 1)
    return float(np.mean(ages)) if ages else float("nan")


def classify_response(d_base, d_reform) -> np.ndarray:
    """Potential-outcome taxonomy per (individual, age) pair."""
    d0 = np.asarray(d_base, dtype=int)
    d1 = np.asarray(d_reform, dtype=int)
    out = np.where((d0 == 1) & (d1 == 1), ResponseType.ALWAYS_TAKER,
                   np.where((d0 == 0) & (d1 == 0), ResponseType.NEVER_TAKER,
                            np.where(d1 > d0, ResponseType.COMPLIER,
                                     ResponseType.DEFIER)))
    return out


def response_type_shares(base: Panel, reform: Panel) -> pd.DataFrame:
    """Shares of the four response types at every age (rows sum to one)."""
    merged = base.df[["id", "age", "d"]].merge(
        reform.df[["id", "age", "d"]], on=["id", "age"],
        suffixes=("_base", "_reform"))
    merged["type"] = classify_response(merged["d_base"], merged["d_reform"])
    counts = merged.groupby(["age", "type"]).size().unstack(fill_value=0)
    for rt in ResponseType:
        if rt not in counts.columns:
            counts[int(rt)] = 0
    counts = counts[[int(r) for r in ResponseType]]
    shares = counts.div(counts.sum(axis=1), axis=0)
    shares.columns = [r.name.lower() for r in ResponseType]
    return shares.reset_index()


# ---------------------------------------------------------------------------
# Surplus decomposition and welfare
# ---------------------------------------------------------------------------

def work_surplus_decomposition(state, zeta, tables, params, rules) -> dict:
    """Split the work-retire value gap into pecuniary, nonpecuniary, and
    expected-future surplus; the parts recombine to the solver's gap."""
    retire = choice_specific_value(state, 0, zeta, tables, params, rules)
    work = choice_specific_value(state, 1, zeta, tables, params, rules)
    ps = work["pecuniary"] - retire["pecuniary"]
    nps = work["nonpecuniary"]
    es = work["continuation"] - retire["continuation"]
    return {"PS": ps, "NPS": nps, "ES": es,
            "gap": work["value"] - retire["value"],
            "p_work": 1.0 / (1.0 + np.exp(-(work["value"] - retire["value"])
                                          / params.prefs.ev_scale))}


def pdv_utility(panel: Panel, from_age: int, params: ModelParams,
                horizon_age: int = 90) -> pd.Series:
    """Discounted utility flow per individual from ``from_age`` on, adding
    the bequest at death (or at the horizon's certain death)."""
    prefs = params.prefs
    beta = prefs.beta
    df = panel.df[panel.df["age"] >= from_age]
    present = set(df[df["age"] == from_age]["id"])
    df = df[df["id"].isin(present)].sort_values(["id", "age"])

    disc = beta ** (df["age"].to_numpy(float) - from_age)
    flow = disc * df["utility_flow"].to_numpy(float)
    out = pd.Series(flow).groupby(df["id"].to_numpy()).sum()

    last = df.groupby("id").last()
    ended = last[(last["survived"] == 0) | (last["age"] == horizon_age)]
    if len(ended) and prefs.iota1 > 0:
        b = prefs.iota1 * (((ended["assets_next"] + prefs.iota2)
                            ** (1.0 - prefs.nu) - 1.0) / (1.0 - prefs.nu)
                           if abs(prefs.nu - 1.0) > 1e-12
                           else np.log(ended["assets_next"] + prefs.iota2))
        out = out.add(beta ** (ended["age"] - from_age + 1.0) * b,
                      fill_value=0.0)
    return out


@dataclass
class CompensatingVariation:
    tau: float
    achieved_gap: float
    bracketed: bool
    iterations: int


def compensating_variation(base_states: dict, base_tables: DecisionTables,
                           reform_tables: DecisionTables, params: ModelParams,
                           reform_params: ModelParams, rules: PolicyRules,
                           reform_rules: PolicyRules, from_age: int,
                           seed: int, tau_max: float = 300.0,
                           tol: float = 1e-6,
                           max_iter: int = 100) -> CompensatingVariation:
    """Lump-sum transfer at ``from_age`` equalizing mean discounted utility
    between the reform and the baseline, found by bisection."""

    def mean_pdv(tables, prm, rls, tau):
        init = {k: np.array(v) for k, v in base_states.items()}
        init["assets"] = init["assets"] + tau
        panel = simulate_lifecycle(init, tables, prm, rls, seed=seed,
                                   with_mortality=False)
        return float(pdv_utility(panel, from_age, prm).mean())

    target = mean_pdv(base_tables, params, rules, 0.0)
    lo, f_lo = 0.0, mean_pdv(reform_tables, reform_params, reform_rules, 0.0) \
        - target
    if abs(f_lo) < tol:
        return CompensatingVariation(tau=0.0, achieved_gap=f_lo,
                                     bracketed=True, iterations=0)
    if f_lo > 0:
        # the reform raises welfare; compensation is zero by convention
        return CompensatingVariation(tau=0.0, achieved_gap=f_lo,
                                     bracketed=True, iterations=0)
    hi = tau_max
    f_hi = mean_pdv(reform_tables, reform_params, reform_rules, hi) - target
    if f_hi < 0:
        return CompensatingVariation(tau=hi, achieved_gap=f_hi,
                                     bracketed=False, iterations=1)
    it = 0
    f_mid = f_lo
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        f_mid = mean_pdv(reform_tables, reform_params, reform_rules, mid) \
            - target
        if abs(f_mid) < tol or (hi - lo) < 1e-10:
            return CompensatingVariation(tau=mid, achieved_gap=f_mid,
                                         bracketed=True, iterations=it + 1)
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    return CompensatingVariation(tau=0.5 * (lo + hi), achieved_gap=f_mid,
                                 bracketed=True, iterations=it)


def states_at_age(panel: Panel, age: int) -> dict:
    """Extract the start-of-period cross-section at one age from a panel."""
    rows = panel.df[panel.df["age"] == age]
    if len(rows) == 0:
        raise ValueError(f"no rows at age {age}")
    claimed_prev = rows["claimed"].to_numpy(bool) \
        & ~rows["first_claim_year"].to_numpy(bool)
    return {
        "id": rows["id"].to_numpy(np.int64),
        "age": np.full(len(rows), age, dtype=np.int64),
        "education": rows["education"].to_numpy(np.int64),
        "occupation": rows["occupation"].to_numpy(np.int64),
        "health": (2 * rows["physical_poor"].to_numpy(np.int64)
                   + rows["cognitive_poor"].to_numpy(np.int64)),
        "insurance": rows["insurance"].to_numpy(np.int64),
        "assets": rows["assets"].to_numpy(float),
        "aime": rows["aime"].to_numpy(float),
        "worked_last": rows["worked_last"].to_numpy(np.int64),
        "claimed": claimed_prev,
        "type_index": rows["type_index"].to_numpy(np.int64),
    }


def subsidy_back_of_envelope(subsidies, shares) -> float:
    """Employment-share-weighted subsidy; shares may sum below one when a
    residual category is left out."""
    subsidies = np.asarray(subsidies, dtype=float)
    shares = np.asarray(shares, dtype=float)
    if np.any(shares < 0):
        raise ValueError("occupation shares must be nonnegative")
    total = shares.sum()
    if total <= 0 or total > 1 + 1e-9:
        raise ValueError("occupation shares must sum to (0, 1]")
    return float((shares * subsidies).sum() / total)
