"""Core ACC traffic model: control law, regime switching, eigenstructure.

The model couples a constant time-headway (CTH) spacing policy with linear
feedback on spacing and relative speed,

    a = k_s * (s - (tau*v + L)) + k_v * (v_lead - v),

active in the congested regime and switched off while cruising at the
free-flow speed.  The induced macroscopic system is strictly hyperbolic
in the congested regime with characteristic speeds

    lambda1 = v,            lambda2 = v - k_v / rho,

so information never travels faster than the vehicles themselves.

All functions here are pure and accept scalars or numpy arrays
elementwise (broadcasting follows numpy rules).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Tuple, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

__all__ = [
    "ControlParams",
    "TrafficState",
    "Regime",
    "EigenStructure",
    "DEFAULT_PARAMS",
    "regime_of",
    "effective_gains",
    "acc_acceleration",
    "eigenstructure",
    "momentum_residual",
    "ptm_equivalent_kv",
    "linear_degeneracy_indicator",
    "constant_gain",
    "density_gain",
]


@dataclass(frozen=True)
class ControlParams:
    """ACC law constants and regime thresholds.

    Attributes:
        tau: time headway [s].
        L: standstill distance [m].
        k_s: spacing gain [1/s^2].
        k_v: speed-difference gain [1/s].
        v_f: free-flow (cruise) speed [m/s].
    """

    tau: float = 1.2
    L: float = 5.0
    k_s: float = 0.8
    k_v: float = 1.4
    v_f: float = 15.0

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.v_f <= 0:
            raise ValueError(f"v_f must be positive, got {self.v_f}")
        if self.k_s < 0 or self.k_v < 0:
            raise ValueError("gains k_s, k_v must be non-negative")

    @property
    def s_c(self) -> float:
        """Critical spacing at which a cruiser engages: tau*v_f + L [m]."""
        return self.tau * self.v_f + self.L

    @property
    def rho_c(self) -> float:
        """Critical density 1/s_c [veh/m]."""
        return 1.0 / self.s_c

    @property
    def rho_j(self) -> float:
        """Jam density bound 1/L [veh/m] (spacing cannot fall below L)."""
        return 1.0 / self.L

    def desired_spacing(self, v: ArrayLike) -> ArrayLike:
        """CTH desired spacing s* = tau*v + L."""
        return self.tau * v + self.L

    def equilibrium_speed(self, s: ArrayLike) -> ArrayLike:
        """Speed on the equilibrium manifold for spacing s: (s - L)/tau."""
        return (s - self.L) / self.tau


DEFAULT_PARAMS = ControlParams()


@dataclass(frozen=True)
class TrafficState:
    """Macroscopic state (density, speed).

    Speed may be any finite value: the linear oscillation cases can dip
    below zero and the theory stays exact, so no v >= 0 check is applied.
    """

    rho: ArrayLike
    v: ArrayLike

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.rho) <= 0):
            raise ValueError("density must be positive (non-vacuum)")

    @property
    def s(self) -> ArrayLike:
        """Mean spacing 1/rho [m]."""
        return 1.0 / self.rho

    @property
    def q(self) -> ArrayLike:
        """Flow rho*v [veh/s]."""
        return self.rho * self.v


class Regime(Enum):
    FREE_FLOW = "FreeFlow"
    CONGESTED = "Congested"


@dataclass(frozen=True)
class EigenStructure:
    """Eigenvalues/eigenvectors of the congested-regime flux Jacobian."""

    lambda1: ArrayLike
    lambda2: ArrayLike
    r1: Tuple[ArrayLike, ArrayLike]
    r2: Tuple[ArrayLike, ArrayLike]


def regime_of(state: TrafficState, params: ControlParams, eps_v: float = 1e-9) -> Regime:
    """Classify a state as FreeFlow or Congested.

    FreeFlow requires both low density (rho below rho_c, i.e. spacing
    above the critical spacing) and cruising speed (|v - v_f| <= eps_v).
    The boundary rho = rho_c with v = v_f counts as Congested: the
    controller is considered engaged exactly at the critical spacing,
    which keeps engagement times well defined.

    Args:
        state: traffic state to classify.
        params: ACC constants.
        eps_v: tolerance on "v equals v_f"; tighten for exact simulations,
            loosen (e.g. 0.1 m/s) for noisy empirical data.
    """
    if eps_v < 0:
        raise ValueError("eps_v must be non-negative")
    rho = float(np.asarray(state.rho))
    v = float(np.asarray(state.v))
    if rho < params.rho_c and abs(v - params.v_f) <= eps_v:
        return Regime.FREE_FLOW
    return Regime.CONGESTED


def effective_gains(regime: Regime, params: ControlParams) -> Tuple[float, float]:
    """Gains active in a regime: (0, 0) while cruising, (k_s, k_v) engaged."""
    if regime is Regime.FREE_FLOW:
        return (0.0, 0.0)
    return (params.k_s, params.k_v)


def acc_acceleration(
    s: float,
    v: float,
    v_lead: float,
    params: ControlParams,
    eps_v: float = 1e-9,
) -> float:
    """Commanded acceleration of the ACC law for one vehicle pair.

    Returns k_s*(s - s*) + k_v*(v_lead - v) with s* = tau*v + L when the
    follower's local state (rho = 1/s) is congested, and 0 in cruise mode.
    """
    if s <= 0:
        raise ValueError(f"spacing must be positive, got {s}")
    regime = regime_of(TrafficState(rho=1.0 / s, v=v), params, eps_v=eps_v)
    k_s, k_v = effective_gains(regime, params)
    return k_s * (s - params.desired_spacing(v)) + k_v * (v_lead - v)


def eigenstructure(state: TrafficState, k_v_eff: ArrayLike) -> EigenStructure:
    """Characteristic structure for a state under an effective gain.

    lambda1 = v with r1 = (1, 0); lambda2 = v - k_v/rho with
    r2 = (1, -k_v/rho^2).  Strict hyperbolicity lambda1 > lambda2 holds
    whenever k_v > 0, and lambda2 <= lambda1 = v (anisotropy) always.
    """
    rho, v = state.rho, state.v
    lam2 = v - k_v_eff / rho
    one = np.ones_like(np.asarray(v, dtype=float))
    return EigenStructure(
        lambda1=v,
        lambda2=lam2,
        r1=(one, np.zeros_like(one)),
        r2=(one, -k_v_eff / rho**2),
    )


def momentum_residual(
    v_t: ArrayLike,
    v_x: ArrayLike,
    state: TrafficState,
    params: ControlParams,
) -> ArrayLike:
    """Residual of the congested-regime momentum equation.

    For exact solutions, v_t + (v - k_v*s)*v_x + (tau*v + L - s)*k_s = 0
    with s = 1/rho; the returned value measures how far given fields are
    from satisfying it.
    """
    s = 1.0 / state.rho
    return v_t + (state.v - params.k_v * s) * v_x + (-s + state.v * params.tau + params.L) * params.k_s


def ptm_equivalent_kv(rho: ArrayLike, v: ArrayLike, V: ArrayLike, Vp: ArrayLike) -> ArrayLike:
    """Speed-difference gain that makes lambda2 match a PTM-type model.

    Given an equilibrium speed value V = V(rho) and its density derivative
    Vp = V'(rho), returns k_v = -rho*[v + (rho*Vp/V)*v - V].  With this
    gain the second characteristic speed of the ACC model coincides with
    the corresponding pressure-based model eigenvalue.
    """
    if np.any(np.asarray(V) == 0):
        raise ValueError("equilibrium speed V must be nonzero")
    if np.any(np.asarray(rho) <= 0):
        raise ValueError("density must be positive")
    return -rho * (v + (rho * Vp / V) * v - V)


GainFn = Callable[[float, float], Tuple[float, float, float]]


def constant_gain(k_v: float) -> GainFn:
    """Gain function for a constant k_v (zero partials)."""

    def fn(rho: float, v: float) -> Tuple[float, float, float]:
        return (k_v, 0.0, 0.0)

    return fn


def density_gain(k_v_of_rho: Callable[[float], float], dk_v_drho: Callable[[float], float]) -> GainFn:
    """Gain function for a density-only k_v(rho) with given derivative."""

    def fn(rho: float, v: float) -> Tuple[float, float, float]:
        return (k_v_of_rho(rho), dk_v_drho(rho), 0.0)

    return fn


def linear_degeneracy_indicator(field: int, state: TrafficState, k_v_fn: GainFn) -> float:
    """Directional derivative grad(lambda_i) . r_i for field i in {1, 2}.

    Field 1 is linearly degenerate by construction (exactly 0, a contact
    field).  Field 2 returns -(1/rho)*dk_v/drho + (k_v/rho^3)*dk_v/dv,
    which vanishes for constant gains and equals -k_v'(rho)/rho for
    density-only gains.

    Args:
        field: 1 or 2.
        state: evaluation state.
        k_v_fn: callable (rho, v) -> (k_v, dk_v/drho, dk_v/dv).
    """
    if field == 1:
        return 0.0
    if field != 2:
        raise ValueError(f"field must be 1 or 2, got {field}")
    rho = float(np.asarray(state.rho))
    v = float(np.asarray(state.v))
    k_v, dk_drho, dk_dv = k_v_fn(rho, v)
    return -dk_drho / rho + (k_v / rho**3) * dk_dv
