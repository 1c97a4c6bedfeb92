"""Microscopic ACC platoon simulation on open road and ring.

The lead vehicle follows exact closed-form kinematics (cruise segments,
constant-acceleration segments, sinusoidal oscillation, or a recorded
trajectory); followers integrate the linear ACC law with semi-implicit
Euler (speed first, then position).  Keeping the leader formula-driven
means engagement-time tests are not polluted by integrator error, and
cruising followers (zero acceleration) are integrated exactly as well.

The module also carries the exact solution of the vehicle-pair error
dynamics

    z' = A_d z + D_d a_lead,   A_d = [[-tau*k_s, 1 - tau*k_v],
                                      [-k_s,     -k_v       ]],

used as an independent oracle against the time-stepped simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .model import ControlParams

__all__ = [
    "OscillationSpec",
    "VehicleSample",
    "Trajectory",
    "CutIn",
    "Cruise",
    "ConstAccel",
    "Oscillate",
    "LeaderProfile",
    "Scenario",
    "PlatoonResult",
    "EngagementEvent",
    "CollisionError",
    "PiecewiseConstantAccel",
    "PairErrorState",
    "leader_motion",
    "simulate_platoon",
    "pair_state_analytic",
    "spacing_analytic",
    "detect_engagement",
    "ring_setup",
]


@dataclass(frozen=True)
class OscillationSpec:
    """Equilibrium speed plus sinusoidal modes (A_m, omega_m, phi_m).

    The implied leader motion is
        x(t) = v_e t + sum A_m sin(w_m t + phi_m),
        v(t) = v_e + sum A_m w_m cos(w_m t + phi_m).
    """

    v_e: float
    modes: Tuple[Tuple[float, float, float], ...] = ()

    def __post_init__(self) -> None:
        for A, om, _phi in self.modes:
            if A < 0:
                raise ValueError("mode amplitude must be non-negative")
            if om <= 0:
                raise ValueError("mode frequency must be positive")


class VehicleSample(NamedTuple):
    t: float
    x: float
    v: float
    a: float


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled motion of one vehicle."""

    vehicle_id: int
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        if len(self.t) < 2:
            raise ValueError("trajectory needs at least two samples")
        steps = np.diff(self.t)
        if np.any(steps <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def covers(self, t: float) -> bool:
        return self.t[0] <= t <= self.t[-1]

    def position_at(self, t) -> np.ndarray:
        return np.interp(t, self.t, self.x)

    def speed_at(self, t) -> np.ndarray:
        return np.interp(t, self.t, self.v)

    def sample(self, i: int) -> VehicleSample:
        return VehicleSample(float(self.t[i]), float(self.x[i]), float(self.v[i]), float(self.a[i]))


@dataclass(frozen=True)
class CutIn:
    """A vehicle merging into the platoon at a given time.

    The merging vehicle is placed `gap` metres behind the vehicle it now
    follows (i.e. it leaves `gap` to its new leader), cuts in directly
    ahead of follower `ahead_of`, adopts that follower's current speed,
    and runs the ACC law immediately.
    """

    time: float
    gap: float
    ahead_of: int


@dataclass(frozen=True)
class Cruise:
    duration: Optional[float]


@dataclass(frozen=True)
class ConstAccel:
    duration: Optional[float]
    accel: float


@dataclass(frozen=True)
class Oscillate:
    """Oscillation about the phase-entry speed: v = v0 + sum A w cos(w t' + phi)."""

    duration: Optional[float]
    modes: Tuple[Tuple[float, float, float], ...]


LeaderPhase = Union[Cruise, ConstAccel, Oscillate]


@dataclass(frozen=True)
class LeaderProfile:
    """Piecewise leader kinematics: initial speed plus a chain of phases.

    Only the final phase may have duration None (open-ended).  Position
    and speed are continuous across phase boundaries by construction;
    acceleration may jump.
    """

    v0: float
    phases: Tuple[LeaderPhase, ...]

    def __post_init__(self) -> None:
        for ph in self.phases[:-1]:
            if ph.duration is None:
                raise ValueError("only the last phase may be open-ended")


LeaderSpec = Union[OscillationSpec, LeaderProfile, Trajectory]


@dataclass(frozen=True)
class Scenario:
    """One platoon experiment.

    For open topology, `leader` drives the front of the platoon and
    `n_followers` ACC vehicles trail it.  Followers start on the
    equilibrium manifold for `initial_speeds` unless `initial_gaps`
    overrides (free-flow approach scenarios use gaps above s_c).  For
    ring topology there is no external leader: `initial_speeds` lists
    every vehicle and `leader` is ignored.
    """

    params: ControlParams
    n_followers: int
    leader: Optional[LeaderSpec]
    duration: float
    dt: float = 0.01
    topology: str = "open"
    cut_ins: Tuple[CutIn, ...] = ()
    initial_speeds: Union[float, Sequence[float], None] = None
    initial_gaps: Union[float, Sequence[float], None] = None
    eps_v: float = 1e-9

    def __post_init__(self) -> None:
        if self.topology not in ("open", "ring"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.duration <= 0 or self.dt <= 0:
            raise ValueError("duration and dt must be positive")
        n_total = self.n_followers + (1 if self.topology == "open" else 0)
        if n_total < 2:
            raise ValueError("a platoon needs at least two vehicles")
        if self.topology == "open" and self.leader is None:
            raise ValueError("open-road scenarios need a leader spec")
        if self.topology == "ring" and self.initial_speeds is None:
            raise ValueError("ring scenarios need explicit initial speeds")


@dataclass(frozen=True)
class PlatoonResult:
    """Trajectories in platoon order (front to rear) plus ring metadata."""

    trajectories: List[Trajectory]
    ring_length: Optional[float] = None


class EngagementEvent(NamedTuple):
    vehicle_id: int
    t_star: float
    x_star: float


class CollisionError(RuntimeError):
    def __init__(self, t: float, follower_index: int):
        super().__init__(f"vehicle collision (spacing <= 0) at t={t:.3f} s, follower {follower_index}")
        self.t = t
        self.follower_index = follower_index


# ---------------------------------------------------------------------------
# Leader kinematics
# ---------------------------------------------------------------------------

def leader_motion(spec: OscillationSpec, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact leader position/speed/acceleration under an oscillation spec."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("time must be non-negative")
    x = spec.v_e * t_arr
    v = np.full_like(t_arr, spec.v_e)
    a = np.zeros_like(t_arr)
    for A, om, phi in spec.modes:
        arg = om * t_arr + phi
        x = x + A * np.sin(arg)
        v = v + A * om * np.cos(arg)
        a = a - A * om**2 * np.sin(arg)
    return x, v, a


def _profile_motion(profile: LeaderProfile, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.empty_like(t)
    v = np.empty_like(t)
    a = np.empty_like(t)
    t0, x0, v0 = 0.0, 0.0, profile.v0
    remaining = np.ones(t.shape, dtype=bool)
    for k, ph in enumerate(profile.phases):
        last = k == len(profile.phases) - 1
        if ph.duration is None:
            mask = remaining
        else:
            mask = remaining & (t < t0 + ph.duration) if not last else remaining & (t <= t0 + ph.duration)
        dt_ph = t[mask] - t0
        if isinstance(ph, Cruise):
            x[mask] = x0 + v0 * dt_ph
            v[mask] = v0
            a[mask] = 0.0
            end_v = v0
            end_x = x0 + v0 * (ph.duration or 0.0)
        elif isinstance(ph, ConstAccel):
            x[mask] = x0 + v0 * dt_ph + 0.5 * ph.accel * dt_ph**2
            v[mask] = v0 + ph.accel * dt_ph
            a[mask] = ph.accel
            d = ph.duration or 0.0
            end_v = v0 + ph.accel * d
            end_x = x0 + v0 * d + 0.5 * ph.accel * d**2
        elif isinstance(ph, Oscillate):
            xs = x0 + v0 * dt_ph
            vs = np.full_like(dt_ph, v0)
            acc = np.zeros_like(dt_ph)
            d = ph.duration or 0.0
            end_x = x0 + v0 * d
            end_v = v0
            for A, om, phi in ph.modes:
                arg = om * dt_ph + phi
                xs = xs + A * (np.sin(arg) - math.sin(phi))
                vs = vs + A * om * np.cos(arg)
                acc = acc - A * om**2 * np.sin(arg)
                end_x += A * (math.sin(om * d + phi) - math.sin(phi))
                end_v += A * om * math.cos(om * d + phi)
            x[mask], v[mask], a[mask] = xs, vs, acc
        else:  # pragma: no cover
            raise TypeError(f"unknown phase {ph!r}")
        remaining = remaining & ~mask
        if ph.duration is None:
            break
        t0, x0, v0 = t0 + ph.duration, end_x, end_v
    if np.any(remaining):
        raise ValueError("leader profile ends before the scenario does; make the last phase open-ended")
    return x, v, a


def _leader_arrays(leader: LeaderSpec, times: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(leader, OscillationSpec):
        return leader_motion(leader, times)
    if isinstance(leader, LeaderProfile):
        return _profile_motion(leader, times)
    if isinstance(leader, Trajectory):
        if times[0] < leader.t[0] - 1e-12 or times[-1] > leader.t[-1] + 1e-12:
            raise ValueError("recorded leader trajectory does not cover the scenario window")
        return (
            np.interp(times, leader.t, leader.x),
            np.interp(times, leader.t, leader.v),
            np.interp(times, leader.t, leader.a),
        )
    raise TypeError(f"unsupported leader spec {leader!r}")


def _leader_initial_speed(leader: LeaderSpec) -> float:
    if isinstance(leader, OscillationSpec):
        return leader.v_e
    if isinstance(leader, LeaderProfile):
        return leader.v0
    return float(leader.v[0])


# ---------------------------------------------------------------------------
# Platoon integration
# ---------------------------------------------------------------------------

def simulate_platoon(scenario: Scenario) -> PlatoonResult:
    """Integrate a platoon scenario and return per-vehicle trajectories.

    Open topology: vehicle 0 is the formula-driven leader; followers run
    the ACC law whenever their local state is congested (spacing at or
    below s_c, or speed off v_f) and cruise otherwise.  Ring topology:
    every vehicle follows its predecessor with wrap-around gaps on a
    ring of length sum(tau*v_i(0) + L).

    Raises CollisionError if any spacing reaches zero.
    """
    if scenario.topology == "ring":
        return _simulate_ring(scenario)
    return _simulate_open(scenario)


def _follower_accels(
    gaps: np.ndarray,
    v: np.ndarray,
    lead_v: np.ndarray,
    p: ControlParams,
    eps_v: float,
) -> np.ndarray:
    engaged = (gaps <= p.s_c) | (np.abs(v - p.v_f) > eps_v)
    raw = p.k_s * (gaps - (p.tau * v + p.L)) + p.k_v * (lead_v - v)
    return np.where(engaged, raw, 0.0)


def _simulate_open(sc: Scenario) -> PlatoonResult:
    p = sc.params
    n_steps = int(round(sc.duration / sc.dt))
    times = np.arange(n_steps + 1) * sc.dt
    lx, lv, la = _leader_arrays(sc.leader, times)

    n_f = sc.n_followers
    v0_lead = _leader_initial_speed(sc.leader)
    if sc.initial_speeds is None:
        init_v = np.full(n_f, v0_lead)
    else:
        init_v = np.broadcast_to(np.asarray(sc.initial_speeds, dtype=float), (n_f,)).copy()
    if sc.initial_gaps is None:
        init_gaps = p.tau * init_v + p.L
    else:
        init_gaps = np.broadcast_to(np.asarray(sc.initial_gaps, dtype=float), (n_f,)).copy()

    # Column layout: original followers 0..n_f-1, cut-in vehicles appended.
    cut_ins = sorted(sc.cut_ins, key=lambda c: c.time)
    cut_steps = [int(round(c.time / sc.dt)) for c in cut_ins]
    for c, k in zip(cut_ins, cut_steps):
        if not (0 < k < n_steps):
            raise ValueError(f"cut-in time {c.time} outside the scenario window")
        if not (1 <= c.ahead_of <= n_f):
            raise ValueError(f"cut-in ahead_of must name a follower 1..{n_f}")

    n_cols = n_f + len(cut_ins)
    X = np.full((n_steps + 1, n_cols), np.nan)
    V = np.full((n_steps + 1, n_cols), np.nan)
    A = np.full((n_steps + 1, n_cols), np.nan)

    x = np.empty(n_f)
    x[0] = lx[0] - init_gaps[0]
    for i in range(1, n_f):
        x[i] = x[i - 1] - init_gaps[i]
    v = init_v.copy()

    # order maps platoon position (front to rear, followers only) -> column
    order: List[int] = list(range(n_f))
    born = [0] * n_f
    X[0, :n_f], V[0, :n_f] = x, v

    active_x = x
    active_v = v
    pending = list(zip(cut_ins, cut_steps, range(n_f, n_cols)))

    for k in range(n_steps + 1):
        lead_pos = np.empty(len(order))
        lead_spd = np.empty(len(order))
        lead_pos[0], lead_spd[0] = lx[k], lv[k]
        lead_pos[1:] = active_x[:-1]
        lead_spd[1:] = active_v[:-1]
        gaps = lead_pos - active_x
        if np.any(gaps <= 0):
            bad = int(np.argmax(gaps <= 0))
            raise CollisionError(times[k], bad)
        acc = _follower_accels(gaps, active_v, lead_spd, p, sc.eps_v)
        A[k, order] = acc
        if k == n_steps:
            break
        active_v = active_v + sc.dt * acc
        active_x = active_x + sc.dt * active_v
        X[k + 1, order] = active_x
        V[k + 1, order] = active_v

        while pending and pending[0][1] == k + 1:
            cut, _, col = pending.pop(0)
            pos_in_order = cut.ahead_of - 1  # insert ahead of this follower
            new_leader_pos = lx[k + 1] if pos_in_order == 0 else active_x[pos_in_order - 1]
            new_x = new_leader_pos - cut.gap
            new_v = active_v[pos_in_order]
            active_x = np.insert(active_x, pos_in_order, new_x)
            active_v = np.insert(active_v, pos_in_order, new_v)
            order.insert(pos_in_order, col)
            born.append(k + 1)
            X[k + 1, col] = new_x
            V[k + 1, col] = new_v

    trajs: List[Trajectory] = [
        Trajectory(vehicle_id=0, t=times, x=lx, v=lv, a=la, dt=sc.dt)
    ]
    for pos, col in enumerate(order):
        b = born[col]
        trajs.append(
            Trajectory(
                vehicle_id=col + 1,
                t=times[b:],
                x=X[b:, col],
                v=V[b:, col],
                a=A[b:, col],
                dt=sc.dt,
            )
        )
    return PlatoonResult(trajectories=trajs, ring_length=None)


def _simulate_ring(sc: Scenario) -> PlatoonResult:
    p = sc.params
    init_v = np.asarray(sc.initial_speeds, dtype=float)
    n = len(init_v)
    if n < 2:
        raise ValueError("ring needs at least two vehicles")
    L_x, x0 = ring_setup(n, p, init_v)
    n_steps = int(round(sc.duration / sc.dt))
    times = np.arange(n_steps + 1) * sc.dt

    X = np.empty((n_steps + 1, n))
    V = np.empty((n_steps + 1, n))
    A = np.empty((n_steps + 1, n))
    x = x0.copy()
    v = init_v.copy()
    X[0], V[0] = x, v

    for k in range(n_steps + 1):
        lead_pos = np.empty(n)
        lead_spd = np.empty(n)
        lead_pos[1:] = x[:-1]
        lead_spd[1:] = v[:-1]
        lead_pos[0] = x[-1] + L_x
        lead_spd[0] = v[-1]
        gaps = lead_pos - x
        if np.any(gaps <= 0):
            bad = int(np.argmax(gaps <= 0))
            raise CollisionError(times[k], bad)
        acc = _follower_accels(gaps, v, lead_spd, p, sc.eps_v)
        A[k] = acc
        if k == n_steps:
            break
        v = v + sc.dt * acc
        x = x + sc.dt * v
        X[k + 1], V[k + 1] = x, v

    trajs = [
        Trajectory(vehicle_id=i, t=times, x=X[:, i], v=V[:, i], a=A[:, i], dt=sc.dt)
        for i in range(n)
    ]
    return PlatoonResult(trajectories=trajs, ring_length=L_x)


def ring_setup(
    n: int,
    params: ControlParams,
    initial_speeds: Sequence[float],
) -> Tuple[float, np.ndarray]:
    """Ring length and initial positions from the time-headway manifold.

    Each vehicle's initial gap to its predecessor is tau*v_i(0) + L; the
    ring length is the sum of all gaps.  Vehicle 0 sits at x = 0 and the
    rest stack behind it; vehicle 0 wraps around to follow the last one.
    """
    if n < 2:
        raise ValueError("ring needs at least two vehicles")
    v = np.asarray(initial_speeds, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"expected {n} initial speeds, got shape {v.shape}")
    gaps = params.tau * v + params.L
    L_x = float(np.sum(gaps))
    x = np.empty(n)
    x[0] = 0.0
    for i in range(1, n):
        x[i] = x[i - 1] - gaps[i]
    return L_x, x


# ---------------------------------------------------------------------------
# Exact vehicle-pair solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairErrorState:
    """Spacing error s - s* and speed difference v_lead - v of one pair."""

    e_s: float
    e_v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.e_s, self.e_v], dtype=float)


@dataclass(frozen=True)
class PiecewiseConstantAccel:
    """Leader acceleration held constant between breakpoints.

    a(t) = values[j] on [times[j], times[j+1]), zero before times[0],
    and values[-1] from times[-1] on.
    """

    times: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("times and values must be equal-length and non-empty")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    def integral(self, t0: float, t1: float) -> float:
        """Integral of a(t) over [t0, t1]."""
        if t1 < t0:
            raise ValueError("t1 must be >= t0")
        total = 0.0
        for (a, b), val in self._segments():
            lo, hi = max(a, t0), min(b, t1)
            if hi > lo:
                total += val * (hi - lo)
        return total

    def _segments(self):
        for j, val in enumerate(self.values):
            a = self.times[j]
            b = self.times[j + 1] if j + 1 < len(self.times) else math.inf
            yield (a, b), val


AccelProfile = Union[None, PiecewiseConstantAccel, Tuple[np.ndarray, np.ndarray]]


def pair_dynamics_matrix(params: ControlParams) -> np.ndarray:
    """Closed-loop error dynamics matrix A_d (det A_d = k_s)."""
    return np.array(
        [[-params.tau * params.k_s, 1.0 - params.tau * params.k_v],
         [-params.k_s, -params.k_v]]
    )


def _expm2(A: np.ndarray, t: float) -> np.ndarray:
    """exp(A t) for a real 2x2 matrix, in closed form.

    Split A = mu*I + B with B traceless; then B^2 = Delta^2 * I with
    Delta^2 = mu^2 - det(A), and exp(At) = e^{mu t}(cosh(Delta t) I +
    sinh(Delta t)/Delta * B), with the sinh/Delta factor continued as
    (sin/|Delta|) for complex Delta and as t at the defective point.
    """
    mu = 0.5 * (A[0, 0] + A[1, 1])
    B = A - mu * np.eye(2)
    disc = mu * mu - (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
    if abs(disc) < 1e-20:
        ch, sh_over = 1.0, t
    elif disc > 0:
        d = math.sqrt(disc)
        ch, sh_over = math.cosh(d * t), math.sinh(d * t) / d
    else:
        d = math.sqrt(-disc)
        ch, sh_over = math.cos(d * t), (math.sin(d * t) / d if d > 0 else t)
    return math.exp(mu * t) * (ch * np.eye(2) + sh_over * B)


_D_VEC = np.array([0.0, 1.0])


def pair_state_analytic(
    z0: PairErrorState,
    a_lead: AccelProfile,
    t0: float,
    t: float,
    params: ControlParams,
) -> PairErrorState:
    """Exact pair error state z(t) = e^{A(t-t0)} z0 + convolution term.

    The forcing convolution is evaluated segment-analytically for
    piecewise-constant leader acceleration (using A^{-1}(e^{A dt_a} -
    e^{A dt_b}) D per segment) and by trapezoidal quadrature for sampled
    (t_array, a_array) profiles.  a_lead=None means zero forcing.
    """
    if t < t0:
        raise ValueError("t must be >= t0")
    A = pair_dynamics_matrix(params)
    z = _expm2(A, t - t0) @ z0.as_array()
    if a_lead is None or t == t0:
        return PairErrorState(*(z.tolist()))
    if isinstance(a_lead, PiecewiseConstantAccel):
        det = params.k_s
        if det < 1e-12:
            z = z + _convolve_sampled(A, a_lead, t0, t)
        else:
            Ainv = np.linalg.inv(A)
            for (a, b), val in a_lead._segments():
                lo, hi = max(a, t0), min(b, t)
                if hi > lo and val != 0.0:
                    inc = Ainv @ (_expm2(A, t - lo) - _expm2(A, t - hi)) @ _D_VEC
                    z = z + val * inc
    else:
        ts, vals = a_lead
        z = z + _trapezoid_convolution(A, np.asarray(ts, float), np.asarray(vals, float), t0, t)
    return PairErrorState(*(z.tolist()))


def _trapezoid_convolution(A: np.ndarray, ts: np.ndarray, vals: np.ndarray, t0: float, t: float) -> np.ndarray:
    mask = (ts >= t0) & (ts <= t)
    tt = ts[mask]
    aa = vals[mask]
    if tt.size == 0 or tt[0] > t0:
        tt = np.insert(tt, 0, t0)
        aa = np.insert(aa, 0, np.interp(t0, ts, vals))
    if tt[-1] < t:
        tt = np.append(tt, t)
        aa = np.append(aa, np.interp(t, ts, vals))
    integrand = np.empty((tt.size, 2))
    for i, phi in enumerate(tt):
        integrand[i] = _expm2(A, t - phi) @ _D_VEC * aa[i]
    return np.array(
        [np.trapezoid(integrand[:, 0], tt), np.trapezoid(integrand[:, 1], tt)]
    )


def _convolve_sampled(A: np.ndarray, prof: PiecewiseConstantAccel, t0: float, t: float, n: int = 2000) -> np.ndarray:
    tt = np.linspace(t0, t, n + 1)
    vals = np.empty_like(tt)
    for i, phi in enumerate(tt):
        j = np.searchsorted(prof.times, phi, side="right") - 1
        vals[i] = prof.values[max(j, 0)] if phi >= prof.times[0] else 0.0
    return _trapezoid_convolution(A, tt, vals, t0, t)


def spacing_analytic(
    z0: PairErrorState,
    a_lead: AccelProfile,
    v_lead0: float,
    t0: float,
    t: float,
    params: ControlParams,
) -> float:
    """Absolute spacing of the pair at time t from the exact error state.

    s(t) = (e_s - tau*e_v)(t) + tau*(v_lead0 + int a_lead) + L, which
    reconstructs s from the error coordinates and the leader's speed
    history.
    """
    z = pair_state_analytic(z0, a_lead, t0, t, params)
    if a_lead is None:
        inc = 0.0
    elif isinstance(a_lead, PiecewiseConstantAccel):
        inc = a_lead.integral(t0, t)
    else:
        ts, vals = a_lead
        tt = np.asarray(ts, float)
        mask = (tt >= t0) & (tt <= t)
        inc = float(np.trapezoid(np.asarray(vals, float)[mask], tt[mask])) if mask.sum() >= 2 else 0.0
    v_lead = v_lead0 + inc
    return z.e_s - params.tau * z.e_v + params.tau * v_lead + params.L


# ---------------------------------------------------------------------------
# Engagement detection
# ---------------------------------------------------------------------------

def detect_engagement(
    trajectories: Sequence[Trajectory],
    params: ControlParams,
    tol: float = 1e-6,
) -> List[EngagementEvent]:
    """First time each follower's gap reaches the critical spacing s_c.

    Works on the sampled gap series of each consecutive pair: brackets
    the first down-crossing of s_c, then bisects the linearly
    interpolated gap to `tol` seconds.  Vehicles whose gap never crosses
    (or that start already at or below s_c) produce no event.
    """
    events: List[EngagementEvent] = []
    s_c = params.s_c
    for lead, fol in zip(trajectories, trajectories[1:]):
        t_lo = max(lead.t0, fol.t0)
        t_hi = min(lead.t_end, fol.t_end)
        n = int(math.floor((t_hi - t_lo) / fol.dt)) + 1
        tt = t_lo + np.arange(n) * fol.dt
        gap = lead.position_at(tt) - fol.position_at(tt)
        above = gap > s_c
        if not above[0]:
            continue
        crossings = np.nonzero(above[:-1] & ~above[1:])[0]
        if crossings.size == 0:
            continue
        k = int(crossings[0])
        lo, hi = float(tt[k]), float(tt[k + 1])

        def gap_at(time: float) -> float:
            return float(lead.position_at(time) - fol.position_at(time))

        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if gap_at(mid) > s_c:
                lo = mid
            else:
                hi = mid
        t_star = 0.5 * (lo + hi)
        events.append(EngagementEvent(fol.vehicle_id, t_star, float(fol.position_at(t_star))))
    return events
