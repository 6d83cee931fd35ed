"""Backward-induction solution of the life-cycle problem.

State layout: a flat "cell" index runs over the discrete part of the state
(education x occupation x joint health x insurance x lagged work), and each
cell carries an (assets x AIME x income-shock-node) lattice.  Labor supply is
chosen while lagged work is 1 and age <= the last work age; retirement is
absorbing, and benefit collection starts mechanically in the first non-work
year at 62 or later, with the claiming-age factor folded into AIME at that
transition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import EULER_GAMMA, InsuranceType, StateVector
from .processes import ModelParams, discretize_income_shock
from .ssa import PolicyRules, pia

N_EDU, N_OCC, N_HLT, N_INS, N_WORK = 4, 3, 4, 4, 2
N_CELLS = N_EDU * N_OCC * N_HLT * N_INS * N_WORK


def cell_index(edu, occ, hlt, ins, worked):
    """Flat index of the discrete state (vectorized)."""
    return (((np.asarray(edu) * N_OCC + occ) * N_HLT + hlt) * N_INS + ins) \
        * N_WORK + np.asarray(worked).astype(int)


def cell_fields() -> dict:
    """Component arrays (edu, occ, hlt, ins, worked) of every cell index."""
    idx = np.arange(N_CELLS)
    worked = idx % N_WORK
    rest = idx // N_WORK
    ins = rest % N_INS
    rest //= N_INS
    hlt = rest % N_HLT
    rest //= N_HLT
    occ = rest % N_OCC
    edu = rest // N_OCC
    return {"edu": edu, "occ": occ, "hlt": hlt, "ins": ins, "worked": worked}


def make_asset_grid(a_min: float, a_max: float, n: int,
                    linear_upto: float = 50.0) -> np.ndarray:
    """Linear low-end segment followed by log spacing up to ``a_max``."""
    n_lin = max(2, n // 4)
    lin = np.linspace(a_min, linear_upto, n_lin)
    log = np.geomspace(linear_upto, a_max, n - n_lin + 1)[1:]
    grid = np.concatenate([lin, log])
    grid[0] = a_min
    return grid


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the continuous state and the consumption search."""

    asset_nodes: np.ndarray
    aime_nodes: np.ndarray
    n_cons: int = 64
    warm_window: int = 5
    full_search: bool = False
    age_min: int = 51
    work_age_max: int = 75
    age_max: int = 90
    name: str = "custom"

    def __post_init__(self):
        for nodes in (self.asset_nodes, self.aime_nodes):
            arr = np.asarray(nodes, dtype=float)
            if arr.ndim != 1 or len(arr) < 2 or np.any(np.diff(arr) <= 0):
                raise ValueError("grid nodes must be strictly increasing, >= 2")
        if self.warm_window < 1:
            raise ValueError("warm-start window must be >= 1")
        if self.age_min > self.age_max:
            raise ValueError("need age_min <= age_max")
        object.__setattr__(self, "asset_nodes",
                           np.asarray(self.asset_nodes, dtype=float))
        object.__setattr__(self, "aime_nodes",
                           np.asarray(self.aime_nodes, dtype=float))

    @property
    def ages(self) -> np.ndarray:
        return np.arange(self.age_min, self.age_max + 1)

    def state_points(self, n_zeta: int, n_types: int = 1) -> int:
        return (len(self.ages) * n_types * N_CELLS
                * len(self.asset_nodes) * len(self.aime_nodes) * n_zeta)

    @classmethod
    def desk(cls, asset_floor: float = -5.0) -> "GridSpec":
        return cls(asset_nodes=make_asset_grid(asset_floor, 1500.0, 16),
                   aime_nodes=np.linspace(0.0, 120.0, 8), n_cons=64,
                   name="desk")

    @classmethod
    def coarse(cls, asset_floor: float = -5.0) -> "GridSpec":
        """Reduced lattice for estimation loops and quick experiments."""
        return cls(asset_nodes=make_asset_grid(asset_floor, 1500.0, 8),
                   aime_nodes=np.linspace(0.0, 120.0, 4), n_cons=48,
                   name="coarse")

    @classmethod
    def full(cls, asset_floor: float = -5.0) -> "GridSpec":
        """Benchmark-scale lattice approximating the production run size."""
        return cls(asset_nodes=make_asset_grid(asset_floor, 2000.0, 40),
                   aime_nodes=np.linspace(0.0, 150.0, 50), n_cons=64,
                   name="full")


GRID_PRESETS = {"desk": GridSpec.desk, "coarse": GridSpec.coarse,
                "full": GridSpec.full}


@dataclass
class DecisionTables:
    """Solved policy and value tables, indexed [age, type, cell, a, m, z]."""

    grid: GridSpec
    zeta_nodes: np.ndarray
    zeta_weights: np.ndarray
    value: np.ndarray       # Emax over taste shocks
    v_choice: np.ndarray    # [..., d, a, m, z]; -inf where infeasible
    cons: np.ndarray        # optimal consumption per choice
    cons_idx: np.ndarray    # share-grid index of the optimum
    pwork: np.ndarray
    schema_version: int = 1

    @property
    def ages(self) -> np.ndarray:
        return self.grid.ages

    def age_slot(self, age: int) -> int:
        if not self.grid.age_min <= age <= self.grid.age_max:
            raise ValueError(f"age {age} outside solved range")
        return int(age - self.grid.age_min)


# ---------------------------------------------------------------------------
# Budget pieces (shared with the simulator)
# ---------------------------------------------------------------------------

def income_components(age, d, aime, claimed_prev, education, occupation,
                      health_index, worked_last, params: ModelParams,
                      rules: PolicyRules) -> dict:
    """Income flows excluding the transitory shock, plus the post-period AIME.

    ``claimed_prev`` marks benefit collection already under way (AIME then
    already carries the claiming-age factor).  Retiring at 62+ without a
    prior claim triggers the first benefit year: the factor for the current
    age is folded into AIME once and the benefit is the PIA of the folded
    AIME.  SSDI and spousal income enter at their conditional expectations.
    """
    d = np.asarray(d)
    aime = np.asarray(aime, dtype=float)
    working = d == 1
    wage = np.where(working,
                    params.wage.wage(age, education, occupation, health_index),
                    0.0)

    first_claim = (~working) & (~np.asarray(claimed_prev, dtype=bool)) \
        & (np.asarray(age) >= rules.earliest_claim_age)
    adj = _adjustment_vector(age, rules)
    aime_folded = np.where(first_claim, adj * aime, aime)
    ss = np.where(working, 0.0,
                  np.where(np.asarray(claimed_prev, dtype=bool) | first_claim,
                           pia(aime_folded, rules), 0.0))

    rho = np.asarray(params.pension_rates)[np.asarray(occupation)]
    pension = np.where(working, 0.0, rho * pia(aime, rules))

    spousal = params.spousal.expected(age, education)
    ssdi = params.ssdi.prob(age, health_index, worked_last, occupation) \
        * pia(aime, rules)

    aime_next = np.where(working,
                         aime + np.maximum(0.0, wage - aime) / 35.0,
                         aime_folded)
    income = wage + ss + pension + spousal + ssdi
    return {"wage": wage, "ss": ss, "pension": pension, "spousal": spousal,
            "ssdi": ssdi, "income_ex_zeta": income, "aime_next": aime_next,
            "first_claim": first_claim}


def _adjustment_vector(age, rules: PolicyRules) -> np.ndarray:
    """Vectorized claiming-age factor, defined from the earliest claim age."""
    a = np.asarray(age, dtype=float)
    a = np.maximum(a, rules.earliest_claim_age)
    years_early = rules.fra - a
    early = (1.0 - rules.early_rate_first3 * np.minimum(years_early, 3)
             - rules.early_rate_rest * np.maximum(years_early - 3, 0))
    credited = np.maximum(np.minimum(a, rules.delayed_credit_max_age)
                          - rules.fra, 0)
    late = 1.0 + rules.delayed_credit * credited
    return np.where(years_early > 0, early, late)


def cash_on_hand(assets, income_ex_zeta, zeta, medical, rules: PolicyRules):
    """Budget identity pieces: cash, the consumption cap, and the transfer.

    Returns (total cash, c_max, government transfer).  When the floor binds
    the transfer tops resources up so that consuming the floor leaves assets
    exactly at the borrowing limit.
    """
    cash = (1.0 + rules.interest_rate) * np.asarray(assets, dtype=float) \
        + income_ex_zeta + zeta - medical
    c_max = cash - rules.asset_floor
    transfer = np.maximum(0.0, rules.consumption_floor - c_max)
    return cash, c_max, transfer


def emax_and_ccp(v_retire, v_work, scale: float = 1.0):
    """Closed forms under extreme-value taste shocks.

    Emax includes the Euler-constant term (the mean of the realized shock),
    so it matches a Monte Carlo average of max(v_d + eps_d).  An infeasible
    choice enters as -inf and drops out of both expressions.
    """
    v0 = np.asarray(v_retire, dtype=float)
    v1 = np.asarray(v_work, dtype=float)
    emax = scale * np.logaddexp(v0 / scale, v1 / scale) + scale * EULER_GAMMA
    p_work = expit((v1 - v0) / scale)
    return emax, p_work


# ---------------------------------------------------------------------------
# Consumption grid search
# ---------------------------------------------------------------------------

def warm_start_search(previous_best: int, window: int, n_cons: int) -> tuple:
    """Index range searched around the next period's optimal index."""
    lo = max(0, previous_best - window)
    hi = min(n_cons - 1, previous_best + window)
    return lo, hi


def _interp_weights(nodes: np.ndarray, q: np.ndarray):
    """Bracketing index and weight for piecewise-linear interpolation.

    Queries are clamped to the node hull.
    """
    idx = np.searchsorted(nodes, q, side="right") - 1
    idx = np.clip(idx, 0, len(nodes) - 2)
    denom = nodes[idx + 1] - nodes[idx]
    w = np.clip((q - nodes[idx]) / denom, 0.0, 1.0)
    return idx, w


def windowed_argmax(eval_fn, n_states: int, n_shares: int, start_idx=None,
                    window: int = 5, max_recenter: int | None = None):
    """Grid search over consumption-share indices with warm-start windows.

    ``eval_fn(state_sel, idx)`` evaluates candidate share indices ``idx``
    (n_sel, w) for the selected flat states and returns values of the same
    shape.  Without ``start_idx`` the full grid is searched.  When the best
    candidate sits on the edge of its window, the window is re-centered
    there and the search repeats, which escapes the non-concave regions the
    consumption floor can create.
    """
    states = np.arange(n_states)
    if start_idx is None:
        best_val = np.full(n_states, -np.inf)
        best_idx = np.zeros(n_states, dtype=np.int64)
        block = max(1, min(n_shares, 16))
        for lo in range(0, n_shares, block):
            idx = np.arange(lo, min(lo + block, n_shares))
            vals = eval_fn(states, np.broadcast_to(idx, (n_states, len(idx))))
            cand_best = vals.argmax(axis=1)
            cand_val = np.take_along_axis(vals, cand_best[:, None], 1)[:, 0]
            better = cand_val > best_val
            best_val = np.where(better, cand_val, best_val)
            best_idx = np.where(better, idx[cand_best], best_idx)
        return best_idx, best_val

    if max_recenter is None:
        max_recenter = n_shares // max(window, 1) + 2
    center = np.clip(np.asarray(start_idx, dtype=np.int64), 0, n_shares - 1)
    offsets = np.arange(-window, window + 1)
    best_val = np.full(n_states, -np.inf)
    best_idx = np.zeros(n_states, dtype=np.int64)
    active = states
    for _ in range(max_recenter):
        idx = np.clip(center[active][:, None] + offsets, 0, n_shares - 1)
        vals = eval_fn(active, idx)
        pos = vals.argmax(axis=1)
        val = np.take_along_axis(vals, pos[:, None], 1)[:, 0]
        cand = np.take_along_axis(idx, pos[:, None], 1)[:, 0]
        # Ties resolve to the lower index, matching full-grid argmax.
        improve = (val > best_val[active]) \
            | ((val == best_val[active]) & (cand < best_idx[active]))
        not_worse = val >= best_val[active]
        best_val[active] = np.where(improve, val, best_val[active])
        best_idx[active] = np.where(improve, cand, best_idx[active])
        # Re-center where the optimum hit a window edge that is not a grid edge.
        at_edge = ((cand <= idx[:, 0]) | (cand >= idx[:, -1])) \
            & (cand > 0) & (cand < n_shares - 1) & not_worse
        if not np.any(at_edge):
            break
        center[active[at_edge]] = cand[at_edge]
        active = active[at_edge]
    return best_idx, best_val


# ---------------------------------------------------------------------------
# The solver
# ---------------------------------------------------------------------------

def _crra_vec(c: np.ndarray, nu: float) -> np.ndarray:
    if abs(nu - 1.0) < 1e-12:
        return np.log(c)
    return (c ** (1.0 - nu) - 1.0) / (1.0 - nu)


def _insurance_next(ins: np.ndarray, age: int, d: int) -> np.ndarray:
    nxt = np.where(ins == InsuranceType.RETIREE_COVERED,
                   InsuranceType.RETIREE_COVERED,
                   np.where((ins == InsuranceType.TIED) & (d == 1),
                            InsuranceType.TIED, InsuranceType.NONE))
    if age + 1 >= 65:
        nxt = np.full_like(np.asarray(ins), InsuranceType.MEDICARE)
    return nxt


def solve(params: ModelParams, rules: PolicyRules, grid: GridSpec) -> DecisionTables:
    """Solve the model backward from ``grid.age_max`` and fill the tables.

    Labor supply is restricted to cells with lagged work and ages up to
    ``grid.work_age_max``; past the terminal age only the bequest remains
    (the solver treats the horizon as certain death regardless of the life
    table's last row).  Deterministic given inputs.
    """
    prefs = params.prefs
    if rules.asset_floor + prefs.iota2 <= 0:
        raise ValueError("bequest shifter must exceed the borrowing limit")
    if not np.isclose(grid.asset_nodes[0], rules.asset_floor):
        raise ValueError("asset grid must start exactly at the asset floor")

    asset_nodes = grid.asset_nodes
    aime_nodes = grid.aime_nodes
    zeta_nodes, zeta_weights = discretize_income_shock(params.shocks)
    nA, nM, nZ = len(asset_nodes), len(aime_nodes), len(zeta_nodes)
    S = grid.n_cons
    shares = np.linspace(0.0, 1.0, S)
    ages = grid.ages
    T = len(ages)
    ntypes = params.n_types
    scale = prefs.ev_scale
    beta = prefs.beta
    nu = prefs.nu
    c_min = rules.consumption_floor
    a_min = rules.asset_floor

    cells = cell_fields()
    edu_c, occ_c = cells["edu"], cells["occ"]
    hlt_c, ins_c, work_c = cells["hlt"], cells["ins"], cells["worked"]
    hp_c = (hlt_c // 2).astype(float)
    hc_c = (hlt_c % 2).astype(float)

    shape = (T, ntypes, N_CELLS, nA, nM, nZ)
    value = np.zeros(shape)
    pwork = np.zeros(shape)
    v_choice = np.full((T, ntypes, N_CELLS, 2, nA, nM, nZ), -np.inf)
    cons = np.full((T, ntypes, N_CELLS, 2, nA, nM, nZ), np.nan)
    cons_idx = np.zeros((T, ntypes, N_CELLS, 2, nA, nM, nZ), dtype=np.int32)

    def bequest(a_next):
        if prefs.iota1 == 0.0:
            return np.zeros_like(a_next)
        return prefs.iota1 * _crra_vec(a_next + prefs.iota2, nu)

    for ty in range(ntypes):
        lam1 = np.asarray(prefs.lambda1_for_type(ty))
        for it in range(T - 1, -1, -1):
            t = int(ages[it])
            terminal = it == T - 1
            if not terminal:
                v_next_zc = value[it + 1, ty] @ zeta_weights  # (cells, nA, nM)
                p_surv = params.mortality.survival_prob(
                    np.full(N_CELLS, t), hlt_c)
            else:
                v_next_zc = None
                p_surv = np.zeros(N_CELLS)

            for d in (0, 1):
                if d == 1:
                    if t > grid.work_age_max:
                        continue
                    sub = np.nonzero(work_c == 1)[0]
                else:
                    sub = np.arange(N_CELLS)
                n_sub = len(sub)

                claimed_prev = (work_c[sub] == 0) & (t >= rules.earliest_claim_age + 1)
                inc = income_components(
                    age=np.full((n_sub, 1), t), d=d,
                    aime=np.broadcast_to(aime_nodes, (n_sub, nM)),
                    claimed_prev=claimed_prev[:, None],
                    education=edu_c[sub, None], occupation=occ_c[sub, None],
                    health_index=hlt_c[sub, None],
                    worked_last=work_c[sub, None], params=params, rules=rules)
                income = inc["income_ex_zeta"]          # (n_sub, nM)
                aime_next = inc["aime_next"]            # (n_sub, nM)
                medical = params.expense.expense(t, ins_c[sub], hlt_c[sub])

                cash = ((1.0 + rules.interest_rate) * asset_nodes[None, :, None, None]
                        + income[:, None, :, None] + zeta_nodes[None, None, None, :]
                        - medical[:, None, None, None])
                c_max = cash - a_min
                floor = c_max < c_min
                span = np.maximum(c_max - c_min, 0.0)

                if d == 1:
                    labor_term = (lam1[occ_c[sub]]
                                  + np.asarray(prefs.lambda2)[occ_c[sub]] * hp_c[sub]
                                  + np.asarray(prefs.lambda3)[occ_c[sub]] * hc_c[sub])
                else:
                    labor_term = np.zeros(n_sub)

                if not terminal:
                    ph = params.transitions.probs(
                        np.full(n_sub, t), edu_c[sub], occ_c[sub], d, hlt_c[sub])
                    ins_next = _insurance_next(ins_c[sub], t, d)
                    nxt_cells = cell_index(edu_c[sub, None], occ_c[sub, None],
                                           np.arange(N_HLT)[None, :],
                                           ins_next[:, None], d)
                    cont_grid = np.einsum("ch,chan->can", ph,
                                          v_next_zc[nxt_cells])  # (n_sub,nA,nM)
                    mi, mw = _interp_weights(aime_nodes, aime_next)  # (n_sub,nM)
                    lo = np.take_along_axis(cont_grid, mi[:, None, :], axis=2)
                    hi = np.take_along_axis(cont_grid, mi[:, None, :] + 1, axis=2)
                    cont_a = lo + mw[:, None, :] * (hi - lo)  # (n_sub,nA_nodes,nM)
                    curves = np.ascontiguousarray(
                        cont_a.transpose(0, 2, 1).reshape(n_sub * nM, nA))
                else:
                    curves = None

                # Flatten the (cell, a, m, z) lattice for the grid search.
                n_states = n_sub * nA * nM * nZ
                cash_f = cash.reshape(n_states)
                span_f = span.reshape(n_states)
                floor_f = floor.reshape(n_states)
                p_f = np.broadcast_to(p_surv[sub][:, None, None, None],
                                      cash.shape).reshape(n_states)
                l_f = np.broadcast_to(labor_term[:, None, None, None],
                                      cash.shape).reshape(n_states)
                if curves is not None:
                    g_f = np.broadcast_to(
                        (np.arange(n_sub)[:, None, None, None] * nM
                         + np.arange(nM)[None, None, :, None]),
                        cash.shape).reshape(n_states)

                def eval_candidates(sel, idx):
                    cc = c_min + shares[idx] * span_f[sel, None]
                    a_next = np.where(floor_f[sel, None], a_min,
                                      cash_f[sel, None] - cc)
                    val = _crra_vec(cc, nu) + l_f[sel, None]
                    if curves is None:
                        val = val + beta * bequest(a_next)
                    else:
                        ai, aw = _interp_weights(asset_nodes, a_next)
                        rows = g_f[sel, None]
                        clo = curves[rows, ai]
                        chi = curves[rows, ai + 1]
                        cont = clo + aw * (chi - clo)
                        psel = p_f[sel, None]
                        val = val + beta * (psel * cont
                                            + (1.0 - psel) * bequest(a_next))
                    return val

                use_full = grid.full_search or terminal
                start = None
                if not use_full:
                    nxt_idx = cons_idx[it + 1, ty][sub, :, :, :, :]
                    d_next = d if (d == 1 and t + 1 <= grid.work_age_max) else 0
                    start = nxt_idx[:, d_next].reshape(n_states)
                best_idx, best_val = windowed_argmax(
                    eval_candidates, n_states, S, start_idx=start,
                    window=grid.warm_window)

                best_share = shares[best_idx]
                best_cons = c_min + best_share * span_f

                lat = (n_sub, nA, nM, nZ)
                v_choice[it, ty, sub, d] = best_val.reshape(lat)
                cons[it, ty, sub, d] = best_cons.reshape(lat)
                cons_idx[it, ty, sub, d] = best_idx.reshape(lat).astype(np.int32)

            emax, p = emax_and_ccp(v_choice[it, ty, :, 0],
                                   v_choice[it, ty, :, 1], scale)
            value[it, ty] = emax
            pwork[it, ty] = p

    return DecisionTables(grid=grid, zeta_nodes=zeta_nodes,
                          zeta_weights=zeta_weights, value=value,
                          v_choice=v_choice, cons=cons, cons_idx=cons_idx,
                          pwork=pwork)


# ---------------------------------------------------------------------------
# Single-state evaluation (used by the decomposition and the tests)
# ---------------------------------------------------------------------------

def choice_specific_value(state: StateVector, d: int, zeta: float,
                          tables: DecisionTables, params: ModelParams,
                          rules: PolicyRules) -> dict:
    """Evaluate one choice at one state against the solved continuation.

    Full-grid consumption search; returns the value, the optimal consumption,
    and the utility/continuation pieces used by the surplus decomposition.
    """
    grid = tables.grid
    it = tables.age_slot(state.age)
    prefs = params.prefs
    t = state.age
    terminal = t == grid.age_max
    if d == 1 and (not state.worked_last or t > grid.work_age_max):
        raise ValueError("work is infeasible at this state")

    claimed_prev = (not state.worked_last) and t >= rules.earliest_claim_age + 1
    inc = income_components(age=t, d=d, aime=state.aime,
                            claimed_prev=claimed_prev,
                            education=int(state.education),
                            occupation=int(state.occupation),
                            health_index=state.health.index,
                            worked_last=int(state.worked_last),
                            params=params, rules=rules)
    medical = params.expense.expense(t, int(state.insurance), state.health.index)
    cash, c_max, transfer = cash_on_hand(state.assets, inc["income_ex_zeta"],
                                         zeta, medical, rules)
    floor = c_max < rules.consumption_floor
    span = max(c_max - rules.consumption_floor, 0.0)
    shares = np.linspace(0.0, 1.0, grid.n_cons)
    cc = rules.consumption_floor + shares * span
    a_next = np.where(floor, rules.asset_floor, cash - cc)

    nu = prefs.nu
    u = _crra_vec(cc, nu)
    if prefs.iota1 == 0.0:
        beq = np.zeros_like(a_next)
    else:
        beq = prefs.iota1 * _crra_vec(a_next + prefs.iota2, nu)

    if terminal:
        p = 0.0
        cont = np.zeros_like(a_next)
    else:
        p = float(params.mortality.survival_prob(t, state.health.index))
        v_next_zc = tables.value[it + 1, state.type_index] @ tables.zeta_weights
        ph = params.transitions.probs(t, int(state.education),
                                      int(state.occupation), d,
                                      state.health.index)
        ins_next = int(_insurance_next(np.array([int(state.insurance)]), t, d)[0])
        curves = np.zeros((N_HLT, len(grid.asset_nodes)))
        mi, mw = _interp_weights(grid.aime_nodes,
                                 np.asarray([float(inc["aime_next"])]))
        for h in range(N_HLT):
            nxt = int(cell_index(int(state.education), int(state.occupation),
                                 h, ins_next, d))
            sl = v_next_zc[nxt]  # (nA, nM)
            curves[h] = sl[:, mi[0]] + mw[0] * (sl[:, mi[0] + 1] - sl[:, mi[0]])
        curve = ph @ curves  # (nA,)
        ai, aw = _interp_weights(grid.asset_nodes, a_next)
        cont = curve[ai] + aw * (curve[ai + 1] - curve[ai])

    labor = 0.0
    if d == 1:
        j = int(state.occupation)
        labor = (prefs.lambda1_for_type(state.type_index)[j]
                 + prefs.lambda2[j] * int(state.health.physical_poor)
                 + prefs.lambda3[j] * int(state.health.cognitive_poor))

    total = u + labor + prefs.beta * (p * cont + (1.0 - p) * beq)
    best = int(np.argmax(total))
    return {
        "value": float(total[best]),
        "consumption": float(cc[best]),
        "pecuniary": float(u[best]),
        "nonpecuniary": float(labor),
        "continuation": float(prefs.beta * (p * cont[best]
                                            + (1.0 - p) * beq[best])),
        "transfer": float(transfer),
        "c_max": float(c_max),
        "income": {k: float(np.asarray(v)) for k, v in inc.items()
                   if k not in ("first_claim",)},
    }
