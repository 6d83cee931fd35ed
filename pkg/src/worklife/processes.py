"""Exogenous laws of motion: health transitions, mortality, wages, medical
expenses, spousal income, SSDI eligibility, and the income-shock quadrature,
plus maximum-likelihood fitters used on synthetic data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, softmax
from scipy.stats import norm

from .core import (ALL_HEALTH_STATES, Education, InsuranceType, JointHealth,
                   N_HEALTH_STATES, Occupation)

AGE_MIN, AGE_MAX = 51, 90


class ConvergenceError(RuntimeError):
    """A first-stage fitter failed to converge; message carries diagnostics."""


# ---------------------------------------------------------------------------
# Health transitions (multinomial logit per current joint state)
# ---------------------------------------------------------------------------

# Covariates of the transition logits: constant, age, age^2, education
# dummies (baseline: less than high school), and occupation-x-work dummies
# (baseline: not working).
HEALTH_DESIGN_NAMES = (
    "const", "age", "age_sq",
    "edu_hs", "edu_sc", "edu_cp",
    "work_manual", "work_clerical", "work_professional",
)
N_HEALTH_FEATURES = len(HEALTH_DESIGN_NAMES)


def health_design_matrix(age, education, occupation, d) -> np.ndarray:
    """Stack transition-logit covariates for array-valued inputs."""
    age, edu, occ, work = np.broadcast_arrays(
        np.asarray(age, dtype=float), np.asarray(education, dtype=int),
        np.asarray(occupation, dtype=int), np.asarray(d, dtype=int))
    age = np.atleast_1d(age)
    edu = np.atleast_1d(edu)
    occ = np.atleast_1d(occ)
    work = np.atleast_1d(work)
    cols = [np.ones_like(age), age, age ** 2,
            (edu == Education.HIGH_SCHOOL).astype(float),
            (edu == Education.SOME_COLLEGE).astype(float),
            (edu == Education.COLLEGE_PLUS).astype(float),
            ((occ == Occupation.MANUAL) & (work == 1)).astype(float),
            ((occ == Occupation.CLERICAL) & (work == 1)).astype(float),
            ((occ == Occupation.PROFESSIONAL) & (work == 1)).astype(float)]
    return np.column_stack(cols)


@dataclass(frozen=True)
class HealthTransitionModel:
    """One multinomial-logit block per current joint health state.

    ``coeffs[s]`` has shape (3, n_features): logits of next states 1..3
    relative to next state 0 ({good, good}), conditional on current state s.
    """

    coeffs: tuple  # 4 arrays, each (3, N_HEALTH_FEATURES)

    def __post_init__(self):
        if len(self.coeffs) != N_HEALTH_STATES:
            raise ValueError("need one coefficient block per current state")
        for block in self.coeffs:
            if np.asarray(block).shape != (N_HEALTH_STATES - 1, N_HEALTH_FEATURES):
                raise ValueError("coefficient block has wrong shape")

    def probs(self, age, education, occupation, d, current_index) -> np.ndarray:
        """Next-period joint-state probabilities; rows sum to one.

        Ages outside the model support are clamped with a warning.
        """
        age = np.asarray(age, dtype=float)
        if np.any((age < AGE_MIN) | (age > AGE_MAX)):
            warnings.warn("age outside transition-model support; clamping",
                          RuntimeWarning, stacklevel=2)
            age = np.clip(age, AGE_MIN, AGE_MAX)
        x = health_design_matrix(age, education, occupation, d)
        cur = np.asarray(current_index, dtype=int)
        scalar = cur.ndim == 0 and np.ndim(age) == 0
        cur = np.broadcast_to(np.atleast_1d(cur), (x.shape[0],))
        logits = np.zeros((x.shape[0], N_HEALTH_STATES))
        for s in range(N_HEALTH_STATES):
            mask = cur == s
            if np.any(mask):
                B = np.asarray(self.coeffs[s])
                logits[mask, 1:] = x[mask] @ B.T
        p = softmax(logits, axis=1)
        return p[0] if scalar else p


# ---------------------------------------------------------------------------
# Mortality (life table plus Bayes health shifters)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MortalityModel:
    """Unconditional one-year death rates shifted by joint health.

    The quadratic-in-age health-share polynomials are evaluated and
    renormalized on the age grid at load time, so total probability over the
    four joint states holds exactly at every age.
    """

    q: np.ndarray                 # death probability, index age-AGE_MIN
    p_health_dying: np.ndarray    # (n_ages, 4), rows sum to 1
    p_health_alive: np.ndarray    # (n_ages, 4), rows sum to 1

    @classmethod
    def from_shifter_polys(cls, q: np.ndarray, dying_coeffs, alive_coeffs,
                           floor: float = 1e-6) -> "MortalityModel":
        """Build the normalized shift tables from quadratic coefficients.

        ``dying_coeffs``/``alive_coeffs`` are (4, 3) arrays of (const, age,
        age^2) rows; predicted shares are floored and renormalized per age.
        """
        ages = np.arange(AGE_MIN, AGE_MAX + 1, dtype=float)
        basis = np.column_stack([np.ones_like(ages), ages, ages ** 2])

        def normalize(coeffs):
            raw = basis @ np.asarray(coeffs, dtype=float).T  # (n_ages, 4)
            raw = np.maximum(raw, floor)
            return raw / raw.sum(axis=1, keepdims=True)

        q = np.asarray(q, dtype=float)
        if q.shape != ages.shape:
            raise ValueError(f"life table must cover ages {AGE_MIN}..{AGE_MAX}")
        if np.any((q < 0) | (q > 1)):
            raise ValueError("death probabilities must lie in [0, 1]")
        return cls(q=q, p_health_dying=normalize(dying_coeffs),
                   p_health_alive=normalize(alive_coeffs))

    def shifter(self, age, health_index) -> np.ndarray:
        i = np.asarray(age, dtype=int) - AGE_MIN
        h = np.asarray(health_index, dtype=int)
        alive = self.p_health_alive[i, h]
        if np.any(alive < 1e-10):
            raise ValueError("degenerate health distribution among the living")
        return self.p_health_dying[i, h] / alive

    def survival_prob(self, age, health_index) -> np.ndarray:
        """p_t = 1 - q(age) * P(h|dying)/P(h|alive), clamped to [0, 1]."""
        i = np.asarray(age, dtype=int) - AGE_MIN
        if np.any(i < 0) or np.any(i >= len(self.q)):
            raise ValueError("age outside mortality table")
        p = 1.0 - self.q[i] * self.shifter(age, health_index)
        out = np.clip(p, 0.0, 1.0)
        return float(out) if np.ndim(age) == 0 and np.ndim(health_index) == 0 else out


def load_life_table(path) -> np.ndarray:
    """Read an ``age,q`` CSV covering ages 51..90 and return the q vector."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    ages = data["age"].astype(int)
    expected = np.arange(AGE_MIN, AGE_MAX + 1)
    if not np.array_equal(np.sort(ages), expected):
        raise ValueError(f"life table must contain exactly ages "
                         f"{AGE_MIN}..{AGE_MAX}: {path}")
    q = np.empty(len(expected))
    q[ages - AGE_MIN] = data["q"]
    return q


# ---------------------------------------------------------------------------
# Wages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WageModel:
    """Log-linear earnings equation per occupation.

    Rows of ``coeffs``: (constant, age, age^2, edu_hs, edu_sc, edu_cp,
    poor_physical, poor_cognitive).  The constant bundles the log skill
    price with the human-capital intercept.
    """

    coeffs: np.ndarray  # (3, 8)

    def __post_init__(self):
        if np.asarray(self.coeffs).shape != (3, 8):
            raise ValueError("wage coefficients must be (3 occupations, 8 terms)")

    def log_wage(self, age, education, occupation, health_index) -> np.ndarray:
        age, edu, occ, h = np.broadcast_arrays(
            np.asarray(age, dtype=float), np.asarray(education, dtype=int),
            np.asarray(occupation, dtype=int), np.asarray(health_index, dtype=int))
        hp = (h // 2).astype(float)
        hc = (h % 2).astype(float)
        C = np.asarray(self.coeffs)
        x = np.stack([np.ones_like(age), age, age ** 2,
                      (edu == Education.HIGH_SCHOOL).astype(float),
                      (edu == Education.SOME_COLLEGE).astype(float),
                      (edu == Education.COLLEGE_PLUS).astype(float),
                      hp, hc], axis=-1)
        return np.einsum("...k,...k->...", x, C[occ])

    def wage(self, age, education, occupation, health_index) -> np.ndarray:
        out = np.exp(self.log_wage(age, education, occupation, health_index))
        return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Medical expenses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpenseModel:
    """Deterministic out-of-pocket expense by health, insurance, and age."""

    base: float = 1.0
    age_slope: float = 0.06
    age_ref: float = 60.0
    poor_physical: float = 1.8
    poor_cognitive: float = 0.6
    both_poor: float = 0.4
    insurance_offsets: tuple = (1.2, 0.4, 0.2, 0.0)  # None, Tied, Retiree, Medicare

    def expense(self, age, insurance, health_index) -> np.ndarray:
        age = np.asarray(age, dtype=float)
        ins = np.asarray(insurance, dtype=int)
        h = np.asarray(health_index, dtype=int)
        hp = (h // 2).astype(float)
        hc = (h % 2).astype(float)
        offsets = np.asarray(self.insurance_offsets)
        me = (self.base + self.age_slope * (age - self.age_ref)
              + self.poor_physical * hp + self.poor_cognitive * hc
              + self.both_poor * hp * hc + offsets[ins])
        out = np.maximum(me, 0.0)
        return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# SSDI eligibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SSDIModel:
    """Logistic eligibility probability before the age-65 conversion.

    Coefficient order: (const, age-55, (age-55)^2, poor_physical,
    poor_cognitive, worked_last, occ_clerical, occ_professional).
    """

    coeffs: tuple = (-3.2, 0.04, 0.0, 1.8, 1.2, -1.0, -0.1, -0.3)

    def prob(self, age, health_index, worked_last, occupation) -> np.ndarray:
        age = np.asarray(age, dtype=float)
        h = np.asarray(health_index, dtype=int)
        occ = np.asarray(occupation, dtype=int)
        hp = (h // 2).astype(float)
        hc = (h % 2).astype(float)
        a = age - 55.0
        c = self.coeffs
        z = (c[0] + c[1] * a + c[2] * a ** 2 + c[3] * hp + c[4] * hc
             + c[5] * np.asarray(worked_last, dtype=float)
             + c[6] * (occ == Occupation.CLERICAL)
             + c[7] * (occ == Occupation.PROFESSIONAL))
        p = np.where(age >= 65, 0.0, expit(z))
        return float(p) if np.ndim(p) == 0 else p


# ---------------------------------------------------------------------------
# Spousal income (two-part model)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpousalIncomeModel:
    """Two-part spousal income: logistic incidence and conditional amount.

    Coefficient order for both parts: (const, age, age^2, age^3, edu_hs,
    edu_sc, edu_cp); ages enter scaled by 1/10 to keep cubics tame.
    """

    prob_coeffs: tuple
    amount_coeffs: tuple

    def _design(self, age, education):
        a, edu = np.broadcast_arrays(np.asarray(age, dtype=float),
                                     np.asarray(education, dtype=int))
        a = a / 10.0
        return np.stack([np.ones_like(a), a, a ** 2, a ** 3,
                         (edu == Education.HIGH_SCHOOL).astype(float),
                         (edu == Education.SOME_COLLEGE).astype(float),
                         (edu == Education.COLLEGE_PLUS).astype(float)], axis=-1)

    def prob_positive(self, age, education) -> np.ndarray:
        x = self._design(age, education)
        return expit(x @ np.asarray(self.prob_coeffs))

    def amount(self, age, education) -> np.ndarray:
        x = self._design(age, education)
        return np.maximum(x @ np.asarray(self.amount_coeffs), 0.0)

    def expected(self, age, education) -> np.ndarray:
        return self.prob_positive(age, education) * self.amount(age, education)

    def draw(self, age, education, u) -> np.ndarray:
        """Realize the two-part outcome from a uniform variate."""
        p = self.prob_positive(age, education)
        amt = self.amount(age, education)
        out = np.where(np.asarray(u) < p, amt, 0.0)
        return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Income-shock quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShockSpec:
    """Discretization of the N(0, sigma^2) income shock."""

    sigma: float = 3.0
    n_nodes: int = 3

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.sigma > 0 and self.n_nodes < 3:
            raise ValueError("need at least 3 quadrature nodes")


def discretize_income_shock(spec: ShockSpec) -> tuple:
    """Gauss-Hermite nodes and weights matching N(0, sigma^2).

    Weights sum to one; with sigma = 0 the single node 0 carries all mass.
    """
    if spec.sigma == 0.0:
        return np.array([0.0]), np.array([1.0])
    x, w = np.polynomial.hermite.hermgauss(spec.n_nodes)
    nodes = np.sqrt(2.0) * spec.sigma * x
    weights = w / np.sqrt(np.pi)
    return nodes, weights / weights.sum()


# ---------------------------------------------------------------------------
# Fitters (used on synthetic data only)
# ---------------------------------------------------------------------------

def fit_multinomial_logit(X: np.ndarray, y: np.ndarray, n_classes: int,
                          max_iter: int = 200, grad_tol: float = 1e-6,
                          ridge: float = 0.0) -> np.ndarray:
    """Newton-Raphson ML fit of a multinomial logit with baseline class 0.

    Returns coefficients of shape (n_classes - 1, n_features).  The log
    likelihood is monotone across iterations (step halving enforces it);
    separation or a singular Hessian raises ConvergenceError.  The design is
    column-scaled internally and the convergence criterion is the maximum
    per-observation score, so the tolerance is scale-free.
    """
    X_raw = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n, k = X_raw.shape
    col_scale = np.abs(X_raw).max(axis=0)
    col_scale[col_scale == 0] = 1.0
    X = X_raw / col_scale
    counts = np.bincount(y, minlength=n_classes)
    if np.any(counts == 0):
        raise ConvergenceError(
            f"every outcome class needs observations; counts={counts.tolist()}")

    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    B = np.zeros((n_classes - 1, k))

    def loglik_probs(B):
        logits = np.zeros((n, n_classes))
        logits[:, 1:] = X @ B.T
        P = softmax(logits, axis=1)
        ll = np.sum(Y * np.log(np.maximum(P, 1e-300)))
        if ridge:
            ll -= 0.5 * ridge * np.sum(B ** 2)
        return ll, P

    ll, P = loglik_probs(B)
    for it in range(max_iter):
        G = (Y[:, 1:] - P[:, 1:]).T @ X  # (K-1, k)
        if ridge:
            G = G - ridge * B
        gnorm = np.max(np.abs(G)) / n
        if gnorm < grad_tol:
            return B / col_scale[None, :]
        # Block Hessian of the multinomial log likelihood.
        dim = (n_classes - 1) * k
        H = np.zeros((dim, dim))
        for a in range(n_classes - 1):
            for b in range(a, n_classes - 1):
                w = P[:, a + 1] * ((a == b) - P[:, b + 1])
                block = (X * w[:, None]).T @ X
                H[a * k:(a + 1) * k, b * k:(b + 1) * k] = block
                if a != b:
                    H[b * k:(b + 1) * k, a * k:(a + 1) * k] = block
        if ridge:
            H += ridge * np.eye(dim)
        try:
            step = np.linalg.solve(H, G.ravel()).reshape(B.shape)
        except np.linalg.LinAlgError as err:
            raise ConvergenceError(
                f"singular Hessian at iteration {it} (separation or "
                f"collinear design): {err}") from err
        # Step halving keeps the log likelihood nondecreasing.
        scale = 1.0
        for _ in range(40):
            ll_new, P_new = loglik_probs(B + scale * step)
            if ll_new >= ll - 1e-12:
                break
            scale *= 0.5
        else:
            raise ConvergenceError(f"no ascent direction at iteration {it}")
        B = B + scale * step
        ll, P = ll_new, P_new
        if np.max(np.abs(B)) > 50.0:
            raise ConvergenceError(
                "coefficients diverging (separated classes?); "
                f"max |coef| = {np.max(np.abs(B)):.1f}")
    raise ConvergenceError(
        f"no convergence in {max_iter} iterations; |grad| = {gnorm:.2e}")


def fit_health_transitions(age, education, occupation, d, current_index,
                           next_index, **kwargs) -> HealthTransitionModel:
    """Fit the four per-state transition blocks from a long-format panel."""
    X = health_design_matrix(age, education, occupation, d)
    cur = np.asarray(current_index, dtype=int)
    nxt = np.asarray(next_index, dtype=int)
    blocks = []
    for s in range(N_HEALTH_STATES):
        mask = cur == s
        if mask.sum() == 0:
            raise ConvergenceError(f"no transitions observed from state {s}")
        blocks.append(fit_multinomial_logit(X[mask], nxt[mask],
                                            N_HEALTH_STATES, **kwargs))
    return HealthTransitionModel(coeffs=tuple(blocks))


@dataclass(frozen=True)
class ModelParams:
    """Everything the solver needs apart from the policy rules and grid:
    preferences plus all fitted first-stage equations."""

    prefs: "object"              # PreferenceParams
    wage: WageModel
    expense: ExpenseModel
    ssdi: SSDIModel
    spousal: SpousalIncomeModel
    transitions: HealthTransitionModel
    mortality: MortalityModel
    shocks: ShockSpec = field(default_factory=ShockSpec)
    pension_rates: tuple = (0.15, 0.25, 0.35)
    n_types: int = 1

    def with_updates(self, **kwargs) -> "ModelParams":
        return replace(self, **kwargs)


def fit_censored_regression(X: np.ndarray, y: np.ndarray,
                            lower: float = 0.0) -> tuple:
    """Tobit ML fit for a left-censored outcome; returns (beta, sigma).

    Used to recover expense-equation coefficients from synthetic censored
    samples; censored observations sit exactly at ``lower``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    cens = y <= lower + 1e-12
    if cens.all():
        raise ConvergenceError("all observations censored")

    beta0, *_ = np.linalg.lstsq(X[~cens], y[~cens], rcond=None)
    resid = y[~cens] - X[~cens] @ beta0
    log_sigma0 = np.log(max(resid.std(), 1e-3))

    def nll(theta):
        beta, log_sigma = theta[:-1], theta[-1]
        sigma = np.exp(log_sigma)
        mu = X @ beta
        ll_unc = norm.logpdf(y[~cens], mu[~cens], sigma)
        ll_cen = norm.logcdf((lower - mu[cens]) / sigma)
        return -(ll_unc.sum() + ll_cen.sum())

    res = minimize(nll, np.append(beta0, log_sigma0), method="BFGS")
    if not np.isfinite(res.fun):
        raise ConvergenceError("censored-regression likelihood diverged")
    return res.x[:-1], float(np.exp(res.x[-1]))
