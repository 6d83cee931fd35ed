"""Indirect inference: auxiliary regressions, the simulated-distance
objective under common random numbers, simplex search, and sandwich
standard errors."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.optimize import minimize
from scipy.special import expit
from scipy.stats import norm

from .processes import ModelParams
from .simulate import Panel, nearest_rank, simulate_one_period_ahead
from .solver import GridSpec, solve
from .ssa import PolicyRules


class AuxiliaryError(ValueError):
    """Auxiliary design failure (rank deficiency, empty subsample)."""


# ---------------------------------------------------------------------------
# Regression helpers
# ---------------------------------------------------------------------------

def ols_hc0(X: np.ndarray, y: np.ndarray, names) -> tuple:
    """Least squares with heteroskedasticity-robust variance diagonal.

    Raises AuxiliaryError naming the dependent columns when the design is
    rank deficient.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    bad = diag < 1e-10 * max(diag.max(), 1.0)
    if bad.any():
        culprits = [names[i] for i in np.nonzero(bad)[0]]
        raise AuxiliaryError(f"collinear design columns: {culprits}")
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ (X.T @ y)
    resid = y - X @ beta
    meat = (X * resid[:, None] ** 2).T @ X
    var = np.diag(xtx_inv @ meat @ xtx_inv)
    return beta, var


def within_transform(X: np.ndarray, y: np.ndarray, ids: np.ndarray) -> tuple:
    """Demean columns and outcome within individuals (fixed-effects sweep)."""
    df = pd.DataFrame(np.column_stack([X, y]))
    means = df.groupby(np.asarray(ids)).transform("mean")
    demeaned = df.to_numpy() - means.to_numpy()
    return demeaned[:, :-1], demeaned[:, -1]


# ---------------------------------------------------------------------------
# Auxiliary model set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuxiliaryModelSet:
    """Registry of auxiliary regressions computed identically on real and
    simulated panels (single shared code path)."""

    age_lo: int = 51
    age_hi: int = 75
    use_age_dummies: bool = True
    use_lfp_regression: bool = True
    lfp_fixed_effects: bool = True
    use_asset_changes: bool = True
    use_asset_tertiles: bool = True
    use_initial_conditions: bool = False  # mixture-variant targets
    use_longrun_gaps: bool = False


@dataclass
class AuxiliaryEstimates:
    theta: np.ndarray
    variance: np.ndarray
    names: list


LFP_REGRESSORS = ["phys", "cog", "age", "log_assets", "neg_assets"]


def _lfp_design(df: pd.DataFrame) -> np.ndarray:
    log_assets = np.log(np.maximum(df["assets"].to_numpy(float), 1e-3))
    return np.column_stack([
        df["physical_poor"].to_numpy(float),
        df["cognitive_poor"].to_numpy(float),
        df["age"].to_numpy(float),
        log_assets,
        (df["assets"].to_numpy(float) < 0).astype(float),
    ])


def estimate_auxiliary(panel: Panel, spec: AuxiliaryModelSet) -> AuxiliaryEstimates:
    """Stack every enabled auxiliary statistic into one coefficient vector."""
    df = panel.df
    df = df[(df["age"] >= spec.age_lo) & (df["age"] <= spec.age_hi)]
    if len(df) == 0:
        raise AuxiliaryError("no rows in the auxiliary age window")
    theta, var, names = [], [], []

    if spec.use_age_dummies:
        for j in range(3):
            sub = df[df["occupation"] == j]
            rates = sub.groupby("age")["d"].agg(["mean", "size"])
            for age, row in rates.iterrows():
                p, n = row["mean"], row["size"]
                theta.append(p)
                var.append(max(p * (1 - p), 1e-4) / n)
                names.append(f"lfp_age:occ{j}:{int(age)}")

    if spec.use_lfp_regression:
        for j in range(3):
            sub = df[(df["occupation"] == j) & (df["worked_last"] == 1)]
            if len(sub) < 50:
                raise AuxiliaryError(f"occupation {j}: too few staying-on rows")
            X = _lfp_design(sub)
            y = sub["d"].to_numpy(float)
            if spec.lfp_fixed_effects:
                Xd, yd = within_transform(X, y, sub["id"].to_numpy())
                labels = list(LFP_REGRESSORS)
            else:
                Xd = np.column_stack([np.ones(len(sub)), X])
                yd = y
                labels = ["const"] + list(LFP_REGRESSORS)
            # Degenerate regressors (e.g. an all-zero negative-asset flag)
            # are excluded; states are shared with the simulated panel, so
            # both sides drop the same columns and designs stay aligned.
            keep = Xd.std(axis=0) > 1e-12
            if not spec.lfp_fixed_effects:
                keep[0] = True
            if not keep.any():
                raise AuxiliaryError(f"occupation {j}: no varying regressors")
            labels = [l for l, k in zip(labels, keep) if k]
            beta, v = ols_hc0(Xd[:, keep], yd, labels)
            for name, b, s2 in zip(labels, beta, v):
                theta.append(b)
                var.append(max(s2, 1e-12))
                names.append(f"lfp_reg:occ{j}:{name}")

    if spec.use_asset_changes:
        change = df["assets_next"] - df["assets"]
        stats = change.groupby(df["age"]).agg(["mean", "var", "size"])
        for age, row in stats.iterrows():
            theta.append(row["mean"])
            var.append(max(row["var"], 1e-8) / row["size"])
            names.append(f"asset_change:{int(age)}")

    if spec.use_asset_tertiles:
        for lo in range(spec.age_lo, spec.age_hi, 5):
            hi = min(lo + 5, spec.age_hi)
            block = df[(df["age"] >= lo) & (df["age"] < hi)]["assets_next"]
            if len(block) == 0:
                continue
            vals = block.to_numpy(float)
            n = len(vals)
            s = max(vals.std(), 1e-6)
            for q, tag in ((1 / 3, "lower"), (2 / 3, "upper")):
                quantile = nearest_rank(vals, q)
                dens = norm.pdf((quantile - vals.mean()) / s) / s
                theta.append(quantile)
                var.append(q * (1 - q) / (n * max(dens, 1e-8) ** 2))
                names.append(f"asset_tertile:{tag}:[{lo},{hi})")

    if spec.use_initial_conditions or spec.use_longrun_gaps:
        first = df.sort_values(["id", "age"]).groupby("id").first()
        init = first[["age", "education", "physical_poor", "cognitive_poor",
                      "assets", "occupation"]].rename(
            columns=lambda c: f"init_{c}")
        merged = df.join(init, on="id")
        if spec.use_initial_conditions:
            for k in (1, 2, 3):
                rows = merged[merged["age"] == merged["init_age"] + k]
                if len(rows) < 50:
                    continue
                X = np.column_stack([
                    np.ones(len(rows)),
                    rows["init_education"].to_numpy(float),
                    rows["init_physical_poor"].to_numpy(float),
                    rows["init_cognitive_poor"].to_numpy(float),
                    np.log(np.maximum(rows["init_assets"].to_numpy(float),
                                      1e-3)),
                    (rows["init_assets"].to_numpy(float) < 0).astype(float),
                ])
                labels = ["const", "educ", "phys0", "cog0", "log_a0", "neg_a0"]
                keep = X.std(axis=0) > 1e-12
                keep[0] = True
                labels = [l for l, k in zip(labels, keep) if k]
                beta, v = ols_hc0(X[:, keep], rows["d"].to_numpy(float), labels)
                for name, b, s2 in zip(labels, beta, v):
                    theta.append(b)
                    var.append(max(s2, 1e-12))
                    names.append(f"init_lfp:k{k}:{name}")
        if spec.use_longrun_gaps:
            for col, tag in (("init_physical_poor", "phys0"),
                             ("init_cognitive_poor", "cog0")):
                g = merged.groupby(["age", merged[col] > 0])["d"].mean()
                for age in sorted(merged["age"].unique()):
                    try:
                        gap = g[(age, False)] - g[(age, True)]
                    except KeyError:
                        continue
                    theta.append(gap)
                    var.append(1e-2)
                    names.append(f"lfp_gap:{tag}:{int(age)}")

    return AuxiliaryEstimates(theta=np.asarray(theta, dtype=float),
                              variance=np.asarray(var, dtype=float),
                              names=names)


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------

PARAM_SETTERS = ("nu", "beta", "iota1", "iota2",
                 "lambda1_0", "lambda1_1", "lambda1_2",
                 "lambda2_0", "lambda2_1", "lambda2_2",
                 "lambda3_0", "lambda3_1", "lambda3_2")


def apply_phi(base: ModelParams, names, phi) -> ModelParams:
    """Return a parameter bundle with the named preference entries replaced."""
    prefs = base.prefs
    updates = {}
    vectors = {"lambda1": list(prefs.lambda1), "lambda2": list(prefs.lambda2),
               "lambda3": list(prefs.lambda3)}
    for name, value in zip(names, phi):
        if name in ("nu", "beta", "iota1", "iota2"):
            updates[name] = float(value)
        elif "_" in name and name.rsplit("_", 1)[0] in vectors:
            vec, idx = name.rsplit("_", 1)
            vectors[vec][int(idx)] = float(value)
        else:
            raise ValueError(f"unknown structural parameter: {name}")
    for vec, vals in vectors.items():
        updates[vec] = tuple(vals)
    return base.with_updates(prefs=prefs.with_updates(**updates))


@dataclass(frozen=True)
class ObjectiveSpec:
    """Wald-style quadratic distance with a diagonal weighting matrix."""

    weights: str = "inverse_variance"  # or "variance" / "identity"

    def build(self, variance: np.ndarray) -> np.ndarray:
        if self.weights == "inverse_variance":
            w = 1.0 / np.maximum(variance, 1e-12)
        elif self.weights == "variance":
            w = np.maximum(variance, 1e-12)
        elif self.weights == "identity":
            w = np.ones_like(variance)
        else:
            raise ValueError(f"unknown weighting mode: {self.weights}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be strictly positive and finite")
        return w


class IndirectInferenceObjective:
    """Loss phi -> (theta_data - theta_sim(phi))' W (theta_data - theta_sim(phi)).

    Simulation is one-period-ahead on the data panel's observed states with
    a fixed seed (common random numbers), so the loss is deterministic in
    phi and exactly zero at the generating parameters under the generating
    seed.
    """

    def __init__(self, data_panel: Panel, base_params: ModelParams,
                 rules: PolicyRules, grid: GridSpec, param_names,
                 aux: AuxiliaryModelSet | None = None,
                 spec: ObjectiveSpec | None = None, sim_seed: int = 0):
        self.data_panel = data_panel
        self.base_params = base_params
        self.rules = rules
        self.grid = grid
        self.param_names = list(param_names)
        self.aux = aux if aux is not None else AuxiliaryModelSet()
        self.sim_seed = sim_seed
        data_est = estimate_auxiliary(data_panel, self.aux)
        self.theta_data = data_est.theta
        self.target_names = data_est.names
        self.weights = (spec or ObjectiveSpec()).build(data_est.variance)
        self.data_variance = data_est.variance
        self.n_evals = 0
        self._cache = {}

    def theta_sim(self, phi) -> np.ndarray:
        params = apply_phi(self.base_params, self.param_names, phi)
        tables = solve(params, self.rules, self.grid)
        pred = simulate_one_period_ahead(self.data_panel, tables, params,
                                         self.rules, self.sim_seed)
        sim_df = self.data_panel.df.copy()
        sim_df["d"] = pred["d_pred"].to_numpy()
        sim_df["consumption"] = pred["consumption_pred"].to_numpy()
        sim_df["assets_next"] = pred["assets_next_pred"].to_numpy()
        sim_est = estimate_auxiliary(Panel(df=sim_df), self.aux)
        if sim_est.names != self.target_names:
            raise AuxiliaryError("simulated panel produced a different "
                                 "auxiliary design than the data panel")
        return sim_est.theta

    def __call__(self, phi) -> float:
        key = np.asarray(phi, dtype=float).tobytes()
        if key in self._cache:
            return self._cache[key]
        gap = self.theta_data - self.theta_sim(phi)
        loss = float(gap @ (self.weights * gap))
        self.n_evals += 1
        self._cache[key] = loss
        return loss


# ---------------------------------------------------------------------------
# Search and standard errors
# ---------------------------------------------------------------------------

@dataclass
class EstimationResult:
    phi: np.ndarray
    loss: float
    converged: bool
    n_evals: int
    param_names: list
    covariance: np.ndarray | None = None
    se: np.ndarray | None = None
    fit_table: pd.DataFrame | None = None


def search(objective, start, n_restarts: int = 2, perturb: float = 0.25,
           maxfev: int = 120, xatol: float = 1e-3, fatol: float = 1e-9,
           seed: int = 0) -> EstimationResult:
    """Nelder-Mead simplex search with perturbed restarts.

    Records the best point ever visited; flags the result non-converged if
    no restart met the simplex tolerances within its evaluation budget.
    """
    start = np.asarray(start, dtype=float)
    rng = np.random.default_rng(seed)
    best = {"phi": start.copy(), "loss": np.inf}
    total_evals = 0
    converged = False

    def tracked(phi):
        val = objective(phi)
        if val < best["loss"]:
            best["loss"] = val
            best["phi"] = np.asarray(phi, dtype=float).copy()
        return val

    starts = [start]
    for _ in range(max(n_restarts - 1, 0)):
        scale = 1.0 + perturb * rng.uniform(-1.0, 1.0, size=start.shape)
        starts.append(start * scale + 0.01 * rng.standard_normal(start.shape))
    for x0 in starts:
        res = minimize(tracked, x0, method="Nelder-Mead",
                       options={"maxfev": maxfev, "xatol": xatol,
                                "fatol": fatol, "adaptive": True})
        total_evals += res.nfev
        converged = converged or bool(res.success)
    return EstimationResult(phi=best["phi"], loss=best["loss"],
                            converged=converged, n_evals=total_evals,
                            param_names=getattr(objective, "param_names",
                                                None) or [])


def sandwich_cov(G: np.ndarray, Omega: np.ndarray,
                 Lambda: np.ndarray) -> np.ndarray:
    """(G'ΩG)^{-1} (G'ΩΛΩG) (G'ΩG)^{-1} with a conditioning guard."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    Omega = np.asarray(Omega, dtype=float)
    Lambda = np.asarray(Lambda, dtype=float)
    bread_inner = G.T @ Omega @ G
    cond = np.linalg.cond(bread_inner)
    if not np.isfinite(cond) or cond > 1e12:
        raise np.linalg.LinAlgError(
            f"bread matrix G'ΩG ill-conditioned (cond = {cond:.3e})")
    bread = np.linalg.inv(bread_inner)
    meat = G.T @ Omega @ Lambda @ Omega @ G
    return bread @ meat @ bread


def sandwich_se(objective: IndirectInferenceObjective, phi_hat,
                rel_step: float = 1e-3) -> tuple:
    """Finite-difference Jacobian of the simulated targets, then the sandwich.

    Central differences with a relative step; common random numbers keep the
    differences clean of simulation noise.
    """
    phi_hat = np.asarray(phi_hat, dtype=float)
    k = len(phi_hat)
    base_cols = []
    for j in range(k):
        h = rel_step * max(abs(phi_hat[j]), 1e-2)
        up, dn = phi_hat.copy(), phi_hat.copy()
        up[j] += h
        dn[j] -= h
        base_cols.append((objective.theta_sim(up)
                          - objective.theta_sim(dn)) / (2 * h))
    G = np.column_stack(base_cols)
    Omega = np.diag(objective.weights)
    Lambda = np.diag(objective.data_variance)
    cov = sandwich_cov(G, Omega, Lambda)
    return cov, np.sqrt(np.maximum(np.diag(cov), 0.0))


def fit_table(objective: IndirectInferenceObjective, phi) -> pd.DataFrame:
    """Per-target comparison of data and simulated auxiliary coefficients."""
    sim = objective.theta_sim(phi)
    return pd.DataFrame({
        "target": objective.target_names,
        "data": objective.theta_data,
        "simulated": sim,
        "weight": objective.weights,
        "weighted_sq_gap": objective.weights * (objective.theta_data - sim) ** 2,
    })


# ---------------------------------------------------------------------------
# Unobserved-type mixture variant
# ---------------------------------------------------------------------------

def type_probability(work_pref, education, init_physical_poor,
                     init_cognitive_poor, init_log_assets,
                     coeffs=(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)) -> np.ndarray:
    """Probability of the work-averse type from initial conditions."""
    c = np.asarray(coeffs, dtype=float)
    z = (c[0] + c[1] * np.asarray(work_pref, dtype=float)
         + c[2] * np.asarray(education, dtype=float)
         + c[3] * np.asarray(init_physical_poor, dtype=float)
         + c[4] * np.asarray(init_cognitive_poor, dtype=float)
         + c[5] * np.asarray(init_log_assets, dtype=float))
    p = expit(z)
    return float(p) if np.ndim(p) == 0 else p
