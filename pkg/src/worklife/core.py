"""Domain types and period-utility primitives for the retirement model.

Monetary unit throughout the package: thousands of 1999 dollars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

# Both health flags are binary; the joint state is indexed 0..3 as
# 2*physical_poor + cognitive_poor.
N_HEALTH_STATES = 4

EULER_GAMMA = 0.5772156649015329


class Occupation(IntEnum):
    MANUAL = 0
    CLERICAL = 1
    PROFESSIONAL = 2


class Education(IntEnum):
    LESS_HIGH_SCHOOL = 0
    HIGH_SCHOOL = 1
    SOME_COLLEGE = 2
    COLLEGE_PLUS = 3


class InsuranceType(IntEnum):
    NONE = 0
    TIED = 1          # employer insurance, lapses when not working
    RETIREE_COVERED = 2  # employer insurance kept until Medicare
    MEDICARE = 3


@dataclass(frozen=True)
class JointHealth:
    """Joint physical/cognitive health, encoded as a pair of poor-health flags."""

    physical_poor: bool
    cognitive_poor: bool

    @property
    def index(self) -> int:
        return 2 * int(self.physical_poor) + int(self.cognitive_poor)

    @classmethod
    def from_index(cls, idx: int) -> "JointHealth":
        if not 0 <= idx <= 3:
            raise ValueError(f"joint health index out of range: {idx}")
        return cls(physical_poor=bool(idx // 2), cognitive_poor=bool(idx % 2))


ALL_HEALTH_STATES = tuple(JointHealth.from_index(i) for i in range(N_HEALTH_STATES))


@dataclass(frozen=True)
class StateVector:
    """Observed individual state at the start of a model year.

    ``claimed`` means benefit collection started in an earlier year (so the
    stored AIME already carries the claiming-age adjustment).  The year in
    which collection begins is identified inside the period from the labor
    choice and recorded in panels as the ``first_claim_year`` row.
    """

    age: int
    education: Education
    occupation: Occupation
    health: JointHealth
    assets: float
    aime: float
    insurance: InsuranceType
    worked_last: bool
    claimed: bool = False
    first_claim_year: bool = False
    type_index: int = 0

    def validate(self, asset_floor: float = -5.0) -> None:
        if not 51 <= self.age <= 90:
            raise ValueError(f"age {self.age} outside model range 51..90")
        if self.assets < asset_floor - 1e-9:
            raise ValueError(f"assets {self.assets} below floor {asset_floor}")
        if self.aime < 0:
            raise ValueError(f"negative AIME {self.aime}")
        if self.age >= 65 and self.insurance != InsuranceType.MEDICARE:
            raise ValueError("insurance must be Medicare from age 65")
        if self.claimed and self.age <= 62:
            raise ValueError("benefit collection cannot predate eligibility at 62")
        if self.first_claim_year and not self.claimed:
            raise ValueError("first_claim_year requires claimed")


@dataclass(frozen=True)
class PreferenceParams:
    """Structural preference parameters.

    ``lambda1/2/3`` are stored as signed utility contributions per occupation
    (negative values are disutility); published tables that report positive
    "disutility of work" entries are negated on load.
    """

    nu: float = 1.318
    beta: float = 0.97
    lambda1: tuple = (-0.410, 0.085, -0.101)
    lambda2: tuple = (-0.633, -0.292, -0.162)
    lambda3: tuple = (-0.015, -0.364, -0.437)
    iota1: float = 8.476
    iota2: float = 10.0
    sigma_zeta: float = 3.0
    ev_scale: float = 1.0
    # Work-disutility shift for the optional second unobserved type; the
    # mixture variant is off unless type probabilities are configured.
    lambda1_type_shift: float = 0.0

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        # beta = 0 (pure myopia) is admitted as a degenerate test case.
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if self.iota1 < 0 or self.iota2 < 0:
            raise ValueError("bequest parameters must be nonnegative")
        if self.sigma_zeta < 0:
            raise ValueError("sigma_zeta must be nonnegative")
        if self.ev_scale <= 0:
            raise ValueError("ev_scale must be positive")
        for name in ("lambda1", "lambda2", "lambda3"):
            if len(getattr(self, name)) != 3:
                raise ValueError(f"{name} must have one entry per occupation")

    def lambda1_for_type(self, type_index: int) -> tuple:
        if type_index == 0:
            return self.lambda1
        return tuple(v + self.lambda1_type_shift for v in self.lambda1)

    def with_updates(self, **kwargs) -> "PreferenceParams":
        return replace(self, **kwargs)


_NU_LOG_TOL = 1e-12


def crra_utility(c, nu: float):
    """CRRA felicity (c^(1-nu) - 1)/(1-nu), with the log limit at nu = 1.

    The -1 in the numerator keeps the function continuous in nu around 1.
    Accepts scalars or arrays; consumption must be strictly positive.
    """
    c_arr = np.asarray(c, dtype=float)
    if np.any(c_arr <= 0.0):
        raise ValueError("consumption must be strictly positive")
    if abs(nu - 1.0) < _NU_LOG_TOL:
        out = np.log(c_arr)
    else:
        out = (c_arr ** (1.0 - nu) - 1.0) / (1.0 - nu)
    return float(out) if np.isscalar(c) else out


def nonpecuniary_utility(d: int, health: JointHealth, occ: Occupation,
                         prefs: PreferenceParams, type_index: int = 0) -> float:
    """Leisure/work utility term: 0 when not working, lambda terms when working."""
    if not d:
        return 0.0
    j = int(occ)
    lam1 = prefs.lambda1_for_type(type_index)[j]
    return (lam1
            + prefs.lambda2[j] * int(health.physical_poor)
            + prefs.lambda3[j] * int(health.cognitive_poor))


def bequest_utility(a_next, prefs: PreferenceParams):
    """Luxury-good bequest utility iota1 * CRRA(a_next + iota2).

    A positive iota2 damps the bequest motive at low asset levels.
    """
    shifted = np.asarray(a_next, dtype=float) + prefs.iota2
    if np.any(shifted <= 0.0):
        raise ValueError("bequest argument must satisfy a_next + iota2 > 0")
    if prefs.iota1 == 0.0:
        out = np.zeros_like(shifted)
    else:
        out = prefs.iota1 * np.asarray(crra_utility(shifted, prefs.nu))
    return float(out) if np.isscalar(a_next) else out


def flow_utility(c, d: int, health: JointHealth, occ: Occupation,
                 prefs: PreferenceParams, type_index: int = 0):
    """Full period utility u(c) + L(d, health, occupation)."""
    return crra_utility(c, prefs.nu) + nonpecuniary_utility(d, health, occ, prefs,
                                                            type_index)
