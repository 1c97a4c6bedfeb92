"""Disturbance-path tracing over platoon trajectories.

Four kinds of propagation path are traced in the (t, x) plane:

* characteristic paths, integrating dx/dt = W(t) where W is the
  pair-local wave speed v_lead - k_v*(x_lead - x_follower);
* constant-speed paths (the first-order baseline, default slope -L/tau);
* shock fronts at the Rankine-Hugoniot speed of the conserved mass;
* engagement fronts connecting the per-vehicle ACC activation points.

All tracing is read-only over immutable trajectories; paths record every
trajectory crossing as (vehicle, t, x, v) tuples for the deviation
metric downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .model import ControlParams, TrafficState
from .microsim import EngagementEvent, Trajectory, detect_engagement

__all__ = [
    "PathKind",
    "Crossing",
    "WavePath",
    "ShockSegment",
    "EngagementFront",
    "DegenerateJumpError",
    "PhaseTransition",
    "pair_wave_speed",
    "trace_characteristic_path",
    "constant_speed_path",
    "shock_speed",
    "engagement_front",
    "engagement_path",
    "trace_phase_transition",
    "LWR_BASELINE_SPEED",
]


class PathKind(Enum):
    CHARACTERISTIC = "Characteristic"
    CONSTANT_SPEED = "ConstantSpeed"
    SHOCK = "Shock"
    ENGAGEMENT = "Engagement"


class Crossing(NamedTuple):
    vehicle_id: int
    t: float
    x: float
    v: float


@dataclass(frozen=True)
class WavePath:
    """One traced path: an origin point plus ordered trajectory crossings.

    Crossings advance strictly rearward through the platoon (the order
    the trajectories were supplied in).  `truncated` marks paths cut
    short by the time window or by shock overtaking, not an error.
    """

    kind: PathKind
    origin_t: float
    origin_x: float
    origin_v: float
    crossings: Tuple[Crossing, ...]
    truncated: bool = False

    @property
    def speeds(self) -> np.ndarray:
        """Speed sequence V_p along the path: origin speed, then crossings."""
        return np.array([self.origin_v] + [c.v for c in self.crossings])


@dataclass(frozen=True)
class ShockSegment:
    left: TrafficState
    right: TrafficState
    speed: float
    span: Tuple[float, float]

    def __post_init__(self) -> None:
        if self.left.rho == self.right.rho:
            raise DegenerateJumpError("shock segment needs distinct densities")
        if not math.isfinite(self.speed):
            raise ValueError("shock speed must be finite")


@dataclass(frozen=True)
class EngagementFront:
    """ACC activation points of successive vehicles and the speeds of the
    straight segments connecting them."""

    events: Tuple[EngagementEvent, ...]
    segment_speeds: Tuple[float, ...]

    @property
    def has_infinite_segment(self) -> bool:
        return any(math.isinf(c) for c in self.segment_speeds)


class DegenerateJumpError(ValueError):
    pass


def lwr_baseline_speed(params: ControlParams) -> float:
    """Slope dq/drho of the congested branch q = (1 - rho*L)/tau: -L/tau."""
    return -params.L / params.tau


LWR_BASELINE_SPEED = lwr_baseline_speed(ControlParams())


# ---------------------------------------------------------------------------
# Pair-local wave speed
# ---------------------------------------------------------------------------

def pair_wave_speed(t, leader: Trajectory, follower: Trajectory, params: ControlParams,
                    eps_v: float = 1e-9):
    """Wave speed W(t) = v_lead - k_v*(x_lead - x_follower) of one pair.

    The gain is gated by the follower's local regime (density 1/s and
    speed v against the switching rule), so a free-flow follower yields
    the degenerate W = v_lead.  Accepts scalar or array t.
    """
    t_arr = np.asarray(t, dtype=float)
    x_l = leader.position_at(t_arr)
    x_f = follower.position_at(t_arr)
    v_l = leader.speed_at(t_arr)
    v_f = follower.speed_at(t_arr)
    s = x_l - x_f
    congested = (1.0 / s >= params.rho_c) | (np.abs(v_f - params.v_f) > eps_v)
    w = v_l - np.where(congested, params.k_v, 0.0) * s
    return float(w) if np.isscalar(t) or t_arr.ndim == 0 else w


# ---------------------------------------------------------------------------
# Path tracing
# ---------------------------------------------------------------------------

def _bisect_crossing(
    t0: float, x0: float, t1: float, x1: float, traj: Trajectory, tol: float = 1e-9
) -> Tuple[float, float]:
    """Root of x_path(t) - x_traj(t) on [t0, t1], both linear in t."""

    def f(t: float) -> float:
        xp = x0 + (x1 - x0) * (t - t0) / (t1 - t0)
        return xp - float(traj.position_at(t))

    lo, hi = t0, t1
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t_c = 0.5 * (lo + hi)
    return t_c, float(traj.position_at(t_c))


SpeedRule = Callable[[float, Trajectory, Trajectory], float]


def _trace(
    origin_t: float,
    origin_x: float,
    origin_v: float,
    trajectories: Sequence[Trajectory],
    first_target: int,
    speed_rule: SpeedRule,
    kind: PathKind,
    terminator: Optional[Callable[[float, float], bool]] = None,
) -> WavePath:
    """Shared Euler tracer: march at trajectory dt, bisect each crossing.

    Between crossings the propagation speed comes from `speed_rule`
    applied to the bracketing pair (last crossed vehicle, next vehicle).
    `terminator(t, x)` ends the path early (flagged truncated).
    """
    crossings: List[Crossing] = []
    t, x = origin_t, origin_x
    idx = first_target
    truncated = False
    while idx < len(trajectories):
        fol = trajectories[idx]
        lead = trajectories[idx - 1]
        dt = fol.dt
        t_end = min(lead.t_end, fol.t_end)
        if t >= t_end:
            truncated = True
            break
        if terminator is not None and terminator(t, x):
            truncated = True
            break
        w = speed_rule(t, lead, fol)
        t1 = min(t + dt, t_end)
        x1 = x + w * (t1 - t)
        f0 = x - float(fol.position_at(t))
        f1 = x1 - float(fol.position_at(t1))
        if f0 > 0.0 and f1 <= 0.0:
            t_c, x_c = _bisect_crossing(t, x, t1, x1, fol)
            crossings.append(Crossing(fol.vehicle_id, t_c, x_c, float(fol.speed_at(t_c))))
            t, x = t_c, x_c
            idx += 1
            continue
        t, x = t1, x1
    return WavePath(kind, origin_t, origin_x, origin_v, tuple(crossings), truncated)


def trace_characteristic_path(
    origin_t: float,
    trajectories: Sequence[Trajectory],
    params: ControlParams,
    eps_v: float = 1e-9,
) -> WavePath:
    """Trace a characteristic path from a point on the lead trajectory.

    The path starts at (origin_t, x_0(origin_t)) and integrates
    dx/dt = W of the pair currently being traversed, re-anchoring on
    each crossed trajectory.  Tracing stops at the last vehicle or the
    end of the common time window (then flagged truncated).
    """
    lead = trajectories[0]
    if not lead.covers(origin_t):
        raise ValueError("origin time outside the lead trajectory")
    origin_x = float(lead.position_at(origin_t))
    origin_v = float(lead.speed_at(origin_t))

    def rule(t: float, lead_traj: Trajectory, fol_traj: Trajectory) -> float:
        return pair_wave_speed(t, lead_traj, fol_traj, params, eps_v)

    return _trace(origin_t, origin_x, origin_v, trajectories, 1, rule, PathKind.CHARACTERISTIC)


def constant_speed_path(
    origin_t: float,
    trajectories: Sequence[Trajectory],
    w_const: float,
) -> WavePath:
    """Straight-line path of slope w_const from a point on the lead trajectory."""
    lead = trajectories[0]
    if not lead.covers(origin_t):
        raise ValueError("origin time outside the lead trajectory")
    origin_x = float(lead.position_at(origin_t))
    origin_v = float(lead.speed_at(origin_t))
    return _trace(
        origin_t, origin_x, origin_v, trajectories, 1,
        lambda t, le, fo: w_const, PathKind.CONSTANT_SPEED,
    )


# ---------------------------------------------------------------------------
# Shocks and engagement fronts
# ---------------------------------------------------------------------------

def shock_speed(left: TrafficState, right: TrafficState) -> float:
    """Rankine-Hugoniot speed of the mass jump: (q_r - q_l)/(rho_r - rho_l)."""
    if left.rho == right.rho:
        raise DegenerateJumpError("equal densities: jump speed undefined")
    return (right.rho * right.v - left.rho * left.v) / (right.rho - left.rho)


def engagement_front(events: Sequence[EngagementEvent]) -> EngagementFront:
    """Connect successive activation points into a piecewise-linear front.

    Segment speed between events i-1 and i is dx/dt of the connecting
    chord; coincident engagement times give an infinite-speed segment
    (flagged via has_infinite_segment, not an error).
    """
    if len(events) < 2:
        raise ValueError("an engagement front needs at least two events")
    speeds = []
    for prev, nxt in zip(events, events[1:]):
        dt = prev.t_star - nxt.t_star
        if dt == 0.0:
            speeds.append(math.inf)
        else:
            speeds.append((prev.x_star - nxt.x_star) / dt)
    return EngagementFront(tuple(events), tuple(speeds))


def engagement_path(front: EngagementFront, trajectories: Sequence[Trajectory]) -> WavePath:
    """The engagement front as a WavePath (crossing speeds read from the
    engaged vehicles' trajectories at their activation times)."""
    by_id = {tr.vehicle_id: tr for tr in trajectories}
    first = front.events[0]
    origin_v = float(by_id[first.vehicle_id].speed_at(first.t_star))
    crossings = tuple(
        Crossing(ev.vehicle_id, ev.t_star, ev.x_star, float(by_id[ev.vehicle_id].speed_at(ev.t_star)))
        for ev in front.events[1:]
    )
    return WavePath(PathKind.ENGAGEMENT, first.t_star, first.x_star, origin_v, crossings)


# ---------------------------------------------------------------------------
# Free-flow -> congested transition composite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseTransition:
    """Composite wave description of a free-flow-to-congested transition."""

    events: Tuple[EngagementEvent, ...]
    front: Optional[EngagementFront]
    engagement: Optional[WavePath]
    shock: Optional[WavePath]
    characteristics: Tuple[WavePath, ...]
    shock_speed: Optional[float]
    t_complete: Optional[float]

    def paths(self) -> List[WavePath]:
        out: List[WavePath] = []
        if self.engagement is not None:
            out.append(self.engagement)
        if self.shock is not None:
            out.append(self.shock)
        out.extend(self.characteristics)
        return out


def _first_spacing_reach(lead: Trajectory, fol: Trajectory, target: float) -> Optional[float]:
    t_lo = max(lead.t0, fol.t0)
    t_hi = min(lead.t_end, fol.t_end)
    n = int(math.floor((t_hi - t_lo) / fol.dt)) + 1
    tt = t_lo + np.arange(n) * fol.dt
    gap = lead.position_at(tt) - fol.position_at(tt)
    hit = np.nonzero(gap <= target)[0]
    if hit.size == 0:
        return None
    k = int(hit[0])
    if k == 0:
        return float(tt[0])
    # linear interpolation of the crossing inside the bracketing step
    g0, g1 = float(gap[k - 1]), float(gap[k])
    frac = (g0 - target) / (g0 - g1)
    return float(tt[k - 1] + frac * fol.dt)


def trace_phase_transition(
    trajectories: Sequence[Trajectory],
    params: ControlParams,
    v_e: float,
    origin_spacing: float = 1.0,
    eps_v: float = 1e-9,
) -> PhaseTransition:
    """Build the composite wave set of a free-flow-to-congested scenario.

    The engagement front joins the per-vehicle activation points; a
    shock launched at the first activation point travels at the
    Rankine-Hugoniot speed between the pre-engagement state
    (1/s_c, v_f) and the final equilibrium (1/s_e, v_e); characteristic
    paths start on the lead trajectory at multiples of `origin_spacing`
    once every vehicle's spacing has first come down to s_e, and each
    one terminates when the shock front catches it (the characteristic
    falls back faster than the shock).

    A scenario that never transitions returns an empty composite.
    """
    events = detect_engagement(trajectories, params)
    if not events:
        return PhaseTransition((), None, None, None, (), None, None)

    front = engagement_front(events) if len(events) >= 2 else None
    eng_path = engagement_path(front, trajectories) if front is not None else None

    s_c = params.s_c
    s_e = params.desired_spacing(v_e)
    c_sh = shock_speed(TrafficState(1.0 / s_c, params.v_f), TrafficState(1.0 / s_e, v_e))
    t_sh, x_sh = events[0].t_star, events[0].x_star

    # shock path: straight line from the first activation point across the rest
    first_idx = next(
        i for i, tr in enumerate(trajectories) if tr.vehicle_id == events[0].vehicle_id
    )
    by_id = {tr.vehicle_id: tr for tr in trajectories}
    origin_v_sh = float(by_id[events[0].vehicle_id].speed_at(t_sh))
    shock_path = _trace(
        t_sh, x_sh, origin_v_sh, trajectories, first_idx + 1,
        lambda t, le, fo: c_sh, PathKind.SHOCK,
    ) if first_idx + 1 < len(trajectories) else None

    # transition completes once every pair's spacing has reached s_e
    reach_times = []
    for lead, fol in zip(trajectories, trajectories[1:]):
        t_r = _first_spacing_reach(lead, fol, s_e)
        if t_r is None:
            reach_times = []
            break
        reach_times.append(t_r)
    t_complete = max(reach_times) if reach_times else None

    chars: List[WavePath] = []
    if t_complete is not None:
        def overtaken(t: float, x: float) -> bool:
            return x <= x_sh + c_sh * (t - t_sh)

        lead = trajectories[0]
        t_o = math.ceil(t_complete / origin_spacing) * origin_spacing
        while t_o < lead.t_end:
            origin_x = float(lead.position_at(t_o))
            origin_v = float(lead.speed_at(t_o))
            path = _trace(
                t_o, origin_x, origin_v, trajectories, 1,
                lambda t, le, fo: pair_wave_speed(t, le, fo, params, eps_v),
                PathKind.CHARACTERISTIC,
                terminator=overtaken,
            )
            chars.append(path)
            t_o += origin_spacing

    return PhaseTransition(
        tuple(events), front, eng_path, shock_path, tuple(chars), c_sh, t_complete
    )
