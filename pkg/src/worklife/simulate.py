"""Forward simulation of panels from solved decision tables, synthetic
initial populations, and panel aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .core import InsuranceType
from .processes import ModelParams
from .solver import (DecisionTables, _insurance_next, _interp_weights,
                     cash_on_hand, cell_index, income_components)
from .ssa import PolicyRules

PANEL_COLUMNS = [
    "id", "age", "education", "occupation", "physical_poor", "cognitive_poor",
    "insurance", "assets", "aime", "worked_last", "claimed",
    "first_claim_year", "type_index", "d", "consumption", "wage", "ss",
    "pension", "spousal", "ssdi", "zeta", "transfer", "medical",
    "assets_next", "aime_next", "survived", "utility_flow", "pwork",
]


@dataclass
class Panel:
    """Simulated or ingested individual-by-age records."""

    df: pd.DataFrame
    clamp_count: int = 0
    seed: int | None = None
    with_mortality: bool = True

    def to_csv(self, path) -> None:
        self.df.to_csv(path, index=False, columns=PANEL_COLUMNS)

    @classmethod
    def from_csv(cls, path) -> "Panel":
        df = pd.read_csv(path)
        missing = [c for c in PANEL_COLUMNS if c not in df.columns]
        if missing:
            raise ValueError(f"panel file missing columns: {missing}")
        return cls(df=df[PANEL_COLUMNS].copy())


@dataclass(frozen=True)
class InitialPopulationSpec:
    """Sampling design for the age-51..61 starting population."""

    n: int
    age_low: int = 51
    age_high: int = 61
    occupation_shares: tuple = (0.4815, 0.1583, 0.3602)
    education_by_occ: tuple = (
        (0.24, 0.45, 0.24, 0.07),
        (0.07, 0.27, 0.35, 0.31),
        (0.02, 0.13, 0.19, 0.66),
    )
    poor_physical_by_occ: tuple = (0.15, 0.11, 0.06)
    poor_cognitive_by_occ: tuple = (0.22, 0.13, 0.06)
    health_odds_ratio: float = 2.5
    insurance_by_occ: tuple = (  # shares of (none, tied, retiree-covered)
        (0.34, 0.29, 0.37),
        (0.40, 0.24, 0.36),
        (0.27, 0.30, 0.43),
    )
    assets_mean_sd_by_occ: tuple = ((184.85, 509.30), (382.41, 979.25),
                                    (628.55, 1444.42))
    assets_cap: float = 1400.0
    aime_mean_sd_by_occ: tuple = ((34.27, 18.26), (39.40, 19.13),
                                  (47.18, 22.14))
    aime_cap: float = 120.0
    worked_share: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("population size must be positive")
        if not 51 <= self.age_low <= self.age_high <= 61:
            raise ValueError("initial ages must lie in 51..61")
        if sum(self.occupation_shares) <= 0:
            raise ValueError("occupation shares have zero mass")
        for probs in (self.poor_physical_by_occ, self.poor_cognitive_by_occ):
            if any(not 0.0 <= p <= 1.0 for p in probs):
                raise ValueError("health shares must be probabilities")


def joint_from_marginals(p_phys: float, p_cog: float,
                         odds_ratio: float) -> np.ndarray:
    """2x2 joint of (physical poor, cognitive poor) from marginals and an OR."""
    if odds_ratio <= 0:
        raise ValueError("odds ratio must be positive")
    if odds_ratio == 1.0:
        p11 = p_phys * p_cog
    else:
        a = odds_ratio - 1.0
        b = (odds_ratio - 1.0) * (p_phys + p_cog) + 1.0
        c = odds_ratio * p_phys * p_cog
        p11 = (b - np.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    p10 = p_phys - p11
    p01 = p_cog - p11
    p00 = 1.0 - p11 - p10 - p01
    joint = np.array([p00, p01, p10, p11])  # index = 2*phys + cog
    if np.any(joint < -1e-12):
        raise ValueError("inconsistent marginals / odds ratio")
    return np.clip(joint, 0.0, 1.0)


def generate_population(spec: InitialPopulationSpec, seed: int) -> dict:
    """Draw the starting cross-section; reproducible for a given seed."""
    rng = np.random.default_rng(seed)
    n = spec.n
    occ_p = np.asarray(spec.occupation_shares, dtype=float)
    occ = rng.choice(3, size=n, p=occ_p / occ_p.sum())
    age = rng.integers(spec.age_low, spec.age_high + 1, size=n)

    edu = np.empty(n, dtype=np.int64)
    hlt = np.empty(n, dtype=np.int64)
    ins = np.empty(n, dtype=np.int64)
    assets = np.empty(n)
    aime = np.empty(n)
    for j in range(3):
        m = occ == j
        k = int(m.sum())
        if k == 0:
            continue
        ep = np.asarray(spec.education_by_occ[j], dtype=float)
        edu[m] = rng.choice(4, size=k, p=ep / ep.sum())
        joint = joint_from_marginals(spec.poor_physical_by_occ[j],
                                     spec.poor_cognitive_by_occ[j],
                                     spec.health_odds_ratio)
        hlt[m] = rng.choice(4, size=k, p=joint / joint.sum())
        ip = np.asarray(spec.insurance_by_occ[j], dtype=float)
        ins[m] = rng.choice([int(InsuranceType.NONE), int(InsuranceType.TIED),
                             int(InsuranceType.RETIREE_COVERED)],
                            size=k, p=ip / ip.sum())
        mean, sd = spec.assets_mean_sd_by_occ[j]
        sigma2 = np.log(1.0 + (sd / mean) ** 2)
        mu = np.log(mean) - sigma2 / 2.0
        assets[m] = np.minimum(rng.lognormal(mu, np.sqrt(sigma2), size=k),
                               spec.assets_cap)
        am, asd = spec.aime_mean_sd_by_occ[j]
        aime[m] = np.clip(rng.normal(am, asd, size=k), 0.0, spec.aime_cap)

    worked = (rng.random(n) < spec.worked_share).astype(np.int64)
    return {
        "id": np.arange(n, dtype=np.int64),
        "age": age.astype(np.int64),
        "education": edu, "occupation": occ, "health": hlt,
        "insurance": ins, "assets": assets, "aime": aime,
        "worked_last": worked,
        "claimed": np.zeros(n, dtype=bool),
        "type_index": np.zeros(n, dtype=np.int64),
    }


def draw_shock_matrix(seed: int, ids: np.ndarray, n_ages: int) -> np.ndarray:
    """Uniform draws keyed by (seed, individual, age slot, shock kind).

    Shared by the life-cycle and one-period-ahead simulators so that, for
    the same seed, both see identical randomness at every (id, age).
    Kind order: zeta node, work choice, health transition, mortality.
    """
    out = np.empty((len(ids), n_ages, 4))
    for row, ident in enumerate(np.asarray(ids, dtype=np.int64)):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed),
                                                            int(ident)]))
        out[row] = rng.random((n_ages, 4))
    return out


def _bilinear(table_slice, asset_nodes, aime_nodes, assets, aime):
    """table_slice: (n, nA, nM) gathered per row; interp at (assets, aime)."""
    ai, aw = _interp_weights(asset_nodes, assets)
    mi, mw = _interp_weights(aime_nodes, aime)
    rows = np.arange(table_slice.shape[0])
    v00 = table_slice[rows, ai, mi]
    v01 = table_slice[rows, ai, mi + 1]
    v10 = table_slice[rows, ai + 1, mi]
    v11 = table_slice[rows, ai + 1, mi + 1]
    lo = v00 + mw * (v01 - v00)
    hi = v10 + mw * (v11 - v10)
    return lo + aw * (hi - lo)


def _period_step(age: int, state: dict, shocks: np.ndarray,
                 tables: DecisionTables, params: ModelParams,
                 rules: PolicyRules) -> dict:
    """One simulated year for a batch of individuals at a common age.

    Returns the realized rows plus next-period state pieces.  This single
    code path serves both simulators, which makes one-period-ahead
    predictions reproduce life-cycle realizations exactly at matching
    seeds and states.
    """
    grid = tables.grid
    prefs = params.prefs
    it = tables.age_slot(age)
    n = len(state["id"])
    edu, occ, hlt = state["education"], state["occupation"], state["health"]
    ins, worked = state["insurance"], state["worked_last"]
    assets, aime = state["assets"], state["aime"]
    claimed = state["claimed"]
    ty = state["type_index"]

    cells = cell_index(edu, occ, hlt, ins, worked)

    # transitory income shock: draw the quadrature node
    cum_w = np.cumsum(tables.zeta_weights)
    iz = np.minimum(np.searchsorted(cum_w, shocks[:, 0], side="right"),
                    len(cum_w) - 1)
    zeta = tables.zeta_nodes[iz]

    clamp = int(np.sum((assets < grid.asset_nodes[0] - 1e-9)
                       | (assets > grid.asset_nodes[-1] + 1e-9)
                       | (aime < grid.aime_nodes[0] - 1e-9)
                       | (aime > grid.aime_nodes[-1] + 1e-9)))

    p_work = _bilinear(tables.pwork[it, ty, cells, :, :, iz],
                       grid.asset_nodes, grid.aime_nodes, assets, aime)
    can_work = (worked == 1) & (age <= grid.work_age_max)
    d = ((shocks[:, 1] < p_work) & can_work).astype(np.int64)

    cons_plane = tables.cons[it, ty, cells, d, :, :, iz]
    consumption = _bilinear(cons_plane, grid.asset_nodes, grid.aime_nodes,
                            assets, aime)

    inc = income_components(age=age, d=d, aime=aime, claimed_prev=claimed,
                            education=edu, occupation=occ, health_index=hlt,
                            worked_last=worked, params=params, rules=rules)
    medical = params.expense.expense(age, ins, hlt)
    cash, c_max, transfer = cash_on_hand(assets, inc["income_ex_zeta"], zeta,
                                         medical, rules)
    floored = transfer > 0.0
    consumption = np.where(floored, rules.consumption_floor,
                           np.clip(consumption, rules.consumption_floor,
                                   np.maximum(c_max, rules.consumption_floor)))
    assets_next = np.where(floored, rules.asset_floor, cash - consumption)

    lam1 = np.asarray(prefs.lambda1_for_type(0))
    hp = hlt // 2
    hc = hlt % 2
    work_term = (lam1[occ] + np.asarray(prefs.lambda2)[occ] * hp
                 + np.asarray(prefs.lambda3)[occ] * hc)
    if params.n_types > 1:
        work_term = work_term + prefs.lambda1_type_shift * (ty > 0)
    labor = work_term * d
    if abs(prefs.nu - 1.0) < 1e-12:
        u_cons = np.log(consumption)
    else:
        u_cons = (consumption ** (1.0 - prefs.nu) - 1.0) / (1.0 - prefs.nu)
    utility = u_cons + labor

    probs = params.transitions.probs(age, edu, occ, d, hlt)
    hlt_next = (probs.cumsum(axis=1) < shocks[:, 2][:, None]).sum(axis=1)

    if age < grid.age_max:
        p_surv = params.mortality.survival_prob(np.full(n, age), hlt)
        survive = shocks[:, 3] < p_surv
    else:
        survive = np.zeros(n, dtype=bool)

    first_claim = np.asarray(inc["first_claim"], dtype=bool)
    return {
        "iz": iz, "zeta": zeta, "d": d, "consumption": consumption,
        "p_work": p_work, "income": inc, "medical": medical,
        "transfer": transfer, "assets_next": assets_next,
        "aime_next": np.asarray(inc["aime_next"], dtype=float),
        "hlt_next": hlt_next,
        "ins_next": _insurance_next(ins, age, d),
        "claimed_next": claimed | first_claim,
        "first_claim": first_claim,
        "survive": survive, "utility": utility, "clamp": clamp,
    }


def simulate_lifecycle(init: dict, tables: DecisionTables, params: ModelParams,
                       rules: PolicyRules, seed: int,
                       with_mortality: bool = True) -> Panel:
    """Simulate each individual from the starting cross-section to the
    horizon (or death), drawing shocks from per-individual substreams."""
    grid = tables.grid
    n = len(init["id"])
    n_ages = len(grid.ages)
    shocks = draw_shock_matrix(seed, init["id"], n_ages)

    state = {k: np.array(v) for k, v in init.items()}
    if "health" not in state and "health_index" in state:
        state["health"] = state.pop("health_index")
    alive = np.ones(n, dtype=bool)
    started = np.zeros(n, dtype=bool)

    chunks = []
    clamp_total = 0
    for age in grid.ages:
        started |= state["age"] == age
        active = started & alive
        if not np.any(active):
            continue
        idx = np.nonzero(active)[0]
        sub = {k: v[idx] for k, v in state.items()}
        step = _period_step(int(age), sub, shocks[idx, age - grid.age_min],
                            tables, params, rules)
        clamp_total += step["clamp"]
        inc = step["income"]
        chunks.append(pd.DataFrame({
            "id": sub["id"], "age": np.full(len(idx), age, dtype=np.int64),
            "education": sub["education"], "occupation": sub["occupation"],
            "physical_poor": sub["health"] // 2,
            "cognitive_poor": sub["health"] % 2,
            "insurance": sub["insurance"], "assets": sub["assets"],
            "aime": sub["aime"], "worked_last": sub["worked_last"],
            "claimed": (sub["claimed"] | step["first_claim"]).astype(np.int64),
            "first_claim_year": step["first_claim"].astype(np.int64),
            "type_index": sub["type_index"], "d": step["d"],
            "consumption": step["consumption"],
            "wage": np.asarray(inc["wage"], dtype=float),
            "ss": np.asarray(inc["ss"], dtype=float),
            "pension": np.asarray(inc["pension"], dtype=float),
            "spousal": np.asarray(inc["spousal"], dtype=float),
            "ssdi": np.asarray(inc["ssdi"], dtype=float),
            "zeta": step["zeta"], "transfer": step["transfer"],
            "medical": np.asarray(step["medical"], dtype=float),
            "assets_next": step["assets_next"],
            "aime_next": step["aime_next"],
            "survived": step["survive"].astype(np.int64),
            "utility_flow": step["utility"], "pwork": step["p_work"],
        }))
        # advance the state
        state["assets"][idx] = step["assets_next"]
        state["aime"][idx] = step["aime_next"]
        state["health"][idx] = step["hlt_next"]
        state["insurance"][idx] = step["ins_next"]
        state["worked_last"][idx] = step["d"]
        state["claimed"][idx] = step["claimed_next"]
        state["age"][idx] = age + 1
        if with_mortality:
            alive[idx] &= step["survive"]
        elif age == grid.age_max:
            alive[idx] = False

    df = pd.concat(chunks, ignore_index=True)
    df = df.sort_values(["id", "age"], kind="stable").reset_index(drop=True)
    return Panel(df=df[PANEL_COLUMNS], clamp_count=clamp_total, seed=seed,
                 with_mortality=with_mortality)


def simulate_one_period_ahead(panel: Panel, tables: DecisionTables,
                              params: ModelParams, rules: PolicyRules,
                              seed: int) -> pd.DataFrame:
    """Predict (d, consumption, next assets) row by row from observed states.

    Conditions on each row's observed state rather than simulated history;
    with the generating seed and tables this reproduces the life-cycle
    realizations exactly.
    """
    df = panel.df
    required = ["id", "age", "education", "occupation", "physical_poor",
                "cognitive_poor", "insurance", "assets", "aime",
                "worked_last", "claimed", "type_index"]
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise ValueError(f"panel is missing state columns: {missing}")

    grid = tables.grid
    ids = df["id"].to_numpy(dtype=np.int64)
    uniq, inv = np.unique(ids, return_inverse=True)
    shocks_all = draw_shock_matrix(seed, uniq, len(grid.ages))

    ages = df["age"].to_numpy(dtype=np.int64)
    out_d = np.zeros(len(df), dtype=np.int64)
    out_c = np.zeros(len(df))
    out_p = np.zeros(len(df))
    out_a = np.zeros(len(df))
    for age in np.unique(ages):
        mask = ages == age
        rows = np.nonzero(mask)[0]
        hlt = (2 * df["physical_poor"].to_numpy()[rows]
               + df["cognitive_poor"].to_numpy()[rows]).astype(np.int64)
        # Panel rows carry contemporaneous claiming; the step conditions on
        # collection having started in an earlier year.
        claimed_prev = df["claimed"].to_numpy(bool)[rows]
        if "first_claim_year" in df.columns:
            claimed_prev = claimed_prev \
                & ~df["first_claim_year"].to_numpy(bool)[rows]
        sub = {
            "id": ids[rows],
            "education": df["education"].to_numpy(np.int64)[rows],
            "occupation": df["occupation"].to_numpy(np.int64)[rows],
            "health": hlt,
            "insurance": df["insurance"].to_numpy(np.int64)[rows],
            "worked_last": df["worked_last"].to_numpy(np.int64)[rows],
            "assets": df["assets"].to_numpy(float)[rows],
            "aime": df["aime"].to_numpy(float)[rows],
            "claimed": claimed_prev,
            "type_index": df["type_index"].to_numpy(np.int64)[rows],
        }
        step = _period_step(int(age), sub,
                            shocks_all[inv[rows], int(age) - grid.age_min],
                            tables, params, rules)
        out_d[rows] = step["d"]
        out_c[rows] = step["consumption"]
        out_p[rows] = step["p_work"]
        out_a[rows] = step["assets_next"]

    pred = df[required].copy()
    pred["d_pred"] = out_d
    pred["consumption_pred"] = out_c
    pred["pwork_pred"] = out_p
    pred["assets_next_pred"] = out_a
    return pred


def aggregate_profiles(panel: Panel) -> dict:
    """Age profiles: LFP by occupation/education, asset-change means, and
    asset tertiles in five-year bins (nearest-rank)."""
    df = panel.df
    if len(df) == 0:
        raise ValueError("empty panel")

    def lfp_table(group_col):
        g = df.groupby(["age", group_col])["d"]
        out = g.agg(rate="mean", count="size").reset_index()
        return out

    overall = df.groupby("age")["d"].agg(rate="mean", count="size").reset_index()

    changes = df.assign(dA=df["assets_next"] - df["assets"]) \
        .groupby("age")["dA"].agg(mean="mean", count="size").reset_index()

    bins = [(51, 55), (55, 60), (60, 65), (65, 70), (70, 75)]
    rows = []
    for lo, hi in bins:
        block = df[(df["age"] >= lo) & (df["age"] < hi)]["assets"]
        if len(block) == 0:
            rows.append({"bin": f"[{lo},{hi})", "lower_tertile": np.nan,
                         "upper_tertile": np.nan, "count": 0})
            continue
        rows.append({"bin": f"[{lo},{hi})",
                     "lower_tertile": nearest_rank(block.to_numpy(), 1 / 3),
                     "upper_tertile": nearest_rank(block.to_numpy(), 2 / 3),
                     "count": len(block)})
    tertiles = pd.DataFrame(rows)
    return {"lfp_by_occupation": lfp_table("occupation"),
            "lfp_by_education": lfp_table("education"),
            "lfp_overall": overall, "asset_changes": changes,
            "asset_tertiles": tertiles}


def nearest_rank(values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile: the ceil(q*n)-th smallest value."""
    v = np.sort(np.asarray(values))
    k = int(np.ceil(q * len(v)))
    return float(v[max(k - 1, 0)])
