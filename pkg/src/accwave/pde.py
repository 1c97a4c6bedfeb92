"""Finite-volume solver for the congested-regime balance law on a ring.

The mass equation is advanced conservatively with the Rusanov (local
Lax-Friedrichs) flux; the speed equation is split into an upwind
convective update at the second characteristic speed a = v - k_v/rho
followed by an explicit relaxation source toward the time-headway
manifold, evaluated with the already-updated density.  Time steps obey
a CFL condition on the largest characteristic speed.

Also provides the piecewise-constant mapping from ring trajectories to
Eulerian (rho, v) fields: each vehicle owns the stretch of road from its
own position up to its leader's, carrying rho = 1/spacing and its own
speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .model import ControlParams, TrafficState
from .microsim import Trajectory

__all__ = [
    "Grid",
    "EulerianField",
    "PositivityError",
    "local_wave_bound",
    "rusanov_flux",
    "advection_speed",
    "step",
    "solve",
    "micro_to_eulerian",
    "pde_initial_from_micro",
]

SourceFn = Optional[Callable[[np.ndarray, float], np.ndarray]]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of n_x cells on a ring of length L_x."""

    L_x: float
    n_x: int
    periodic: bool = True

    def __post_init__(self) -> None:
        if self.L_x <= 0:
            raise ValueError("ring length must be positive")
        if self.n_x < 4:
            raise ValueError("need at least 4 cells")
        if not self.periodic:
            raise ValueError("only periodic domains are supported")

    @property
    def dx(self) -> float:
        return self.L_x / self.n_x

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_x) + 0.5) * self.dx


@dataclass(frozen=True)
class EulerianField:
    """Cell-averaged (rho, v) snapshots on a grid at recorded times."""

    grid: Grid
    times: np.ndarray          # (n_t,)
    rho: np.ndarray            # (n_t, n_x)
    v: np.ndarray              # (n_t, n_x)

    def __post_init__(self) -> None:
        n_t = len(self.times)
        if self.rho.shape != (n_t, self.grid.n_x) or self.v.shape != self.rho.shape:
            raise ValueError("field arrays must be (n_times, n_cells)")
        if np.any(self.rho <= 0):
            raise ValueError("density must be positive everywhere")

    def mass(self, k: int = -1) -> float:
        return float(np.sum(self.rho[k]) * self.grid.dx)


class PositivityError(RuntimeError):
    def __init__(self, t: float, cell: int, rho: float):
        super().__init__(
            f"density non-positive after update: cell {cell}, t={t:.6f}, rho={rho:.3e} "
            "(refine dx or lower cfl)"
        )
        self.t = t
        self.cell = cell
        self.rho = rho


# ---------------------------------------------------------------------------
# Local building blocks
# ---------------------------------------------------------------------------

def _char_bound(rho, v, k_v: float):
    """max(|lambda1|, |lambda2|) per state = max(|v|, |v - k_v/rho|)."""
    return np.maximum(np.abs(v), np.abs(v - k_v / rho))


def local_wave_bound(left: TrafficState, right: TrafficState, params: ControlParams) -> float:
    """Largest characteristic speed magnitude over the two interface states."""
    return float(
        max(
            _char_bound(left.rho, left.v, params.k_v),
            _char_bound(right.rho, right.v, params.k_v),
        )
    )


def rusanov_flux(left: TrafficState, right: TrafficState, params: ControlParams) -> float:
    """Rusanov mass flux: central average minus local-wave-bound dissipation."""
    alpha = local_wave_bound(left, right, params)
    return 0.5 * (left.rho * left.v + right.rho * right.v) - 0.5 * alpha * (right.rho - left.rho)


def advection_speed(state: TrafficState, params: ControlParams) -> float:
    """Convective speed of the v-equation, a = v - k_v/rho (= lambda2)."""
    return float(state.v - params.k_v / state.rho)


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

def step(
    rho: np.ndarray,
    v: np.ndarray,
    grid: Grid,
    params: ControlParams,
    cfl: float = 0.5,
    t: float = 0.0,
    dt: Optional[float] = None,
    mass_source: SourceFn = None,
    momentum_source: SourceFn = None,
) -> Tuple[np.ndarray, np.ndarray, float]:
    """One finite-volume step; returns (rho_new, v_new, dt_used).

    Stages: CFL time step from the global wave bound (unless `dt` caps
    it); conservative Rusanov mass update with periodic wrap; upwind
    convective update of v with interface speed a_{i+1/2} = (a_i +
    a_{i+1})/2 and donor cell chosen by its sign; relaxation source
    using the updated density.  Optional source callbacks (x, t) ->
    per-cell rates support manufactured-solution testing.
    """
    if not 0.0 < cfl < 1.0:
        raise ValueError("cfl must lie in (0, 1)")
    k_v, k_s, tau, L = params.k_v, params.k_s, params.tau, params.L
    dx = grid.dx

    bound = float(np.max(_char_bound(rho, v, k_v)))
    dt_cfl = cfl * dx / bound
    h = dt_cfl if dt is None else min(dt, dt_cfl)

    rho_r = np.roll(rho, -1)
    v_r = np.roll(v, -1)
    alpha = np.maximum(_char_bound(rho, v, k_v), _char_bound(rho_r, v_r, k_v))
    flux = 0.5 * (rho * v + rho_r * v_r) - 0.5 * alpha * (rho_r - rho)
    rho_new = rho - (h / dx) * (flux - np.roll(flux, 1))
    if mass_source is not None:
        rho_new = rho_new + h * mass_source(grid.centers, t)
    if np.any(rho_new <= 0):
        cell = int(np.argmin(rho_new))
        raise PositivityError(t + h, cell, float(rho_new[cell]))

    a = v - k_v / rho
    a_if = 0.5 * (a + np.roll(a, -1))          # interface i+1/2
    dv_up = v - np.roll(v, 1)                  # v_i - v_{i-1}
    dv_dn = np.roll(v, -1) - v                 # v_{i+1} - v_i
    a_left = np.roll(a_if, 1)                  # interface i-1/2
    v_star = v - (h / dx) * (
        np.maximum(a_left, 0.0) * dv_up + np.minimum(a_if, 0.0) * dv_dn
    )
    if momentum_source is not None:
        v_star = v_star + h * momentum_source(grid.centers, t)

    v_new = v_star + h * k_s * (1.0 / rho_new - tau * v_star - L)
    return rho_new, v_new, h


def solve(
    rho0: np.ndarray,
    v0: np.ndarray,
    grid: Grid,
    params: ControlParams,
    t_end: float,
    cfl: float = 0.5,
    output_times: Optional[Sequence[float]] = None,
    mass_source: SourceFn = None,
    momentum_source: SourceFn = None,
) -> EulerianField:
    """March the scheme to t_end, sampling output at the requested times.

    Each requested time is matched to the nearest completed step and the
    actual step time is recorded.  With no request list, only the
    initial and final states are kept.  The final step is clamped to
    land exactly on t_end.
    """
    rho = np.asarray(rho0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    if rho.shape != (grid.n_x,) or v.shape != rho.shape:
        raise ValueError("initial arrays must match the grid")
    if np.any(rho <= 0):
        raise ValueError("initial density must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")

    requests = None if output_times is None else sorted(float(x) for x in output_times)
    rec_t: List[float] = []
    rec_rho: List[np.ndarray] = []
    rec_v: List[np.ndarray] = []

    def record(t_now: float) -> None:
        rec_t.append(t_now)
        rec_rho.append(rho.copy())
        rec_v.append(v.copy())

    t = 0.0
    ptr = 0
    if requests is None:
        record(t)
    else:
        while ptr < len(requests) and requests[ptr] <= 0.0:
            record(t)
            ptr += 1

    prev_t = t
    while t < t_end - 1e-12:
        prev_rho, prev_v, prev_t = rho, v, t
        rho, v, h = step(
            rho, v, grid, params, cfl, t=t, dt=t_end - t,
            mass_source=mass_source, momentum_source=momentum_source,
        )
        t += h
        if requests is None:
            continue
        while ptr < len(requests) and requests[ptr] <= t:
            # nearest completed step to the requested time
            if abs(requests[ptr] - prev_t) < abs(requests[ptr] - t) and rec_t and rec_t[-1] != prev_t:
                rec_t.append(prev_t)
                rec_rho.append(prev_rho.copy())
                rec_v.append(prev_v.copy())
            elif not rec_t or rec_t[-1] != t:
                record(t)
            ptr += 1
    if requests is None:
        if rec_t[-1] != t:
            record(t)
    else:
        while ptr < len(requests):
            if not rec_t or rec_t[-1] != t:
                record(t)
            ptr += 1

    return EulerianField(
        grid=grid,
        times=np.array(rec_t),
        rho=np.vstack(rec_rho) if rec_rho else np.empty((0, grid.n_x)),
        v=np.vstack(rec_v) if rec_v else np.empty((0, grid.n_x)),
    )


# ---------------------------------------------------------------------------
# Micro -> Eulerian mapping
# ---------------------------------------------------------------------------

def micro_to_eulerian(
    trajectories: Sequence[Trajectory],
    ring_length: float,
    grid: Grid,
    t: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Piecewise-constant (rho, v) at time t from ring trajectories.

    Vehicle i owns the road from its own position up to its leader's
    (wrap-around); every cell whose center falls in that stretch takes
    rho = 1/s_i(t) and v = v_i(t).  Trajectories are in platoon order:
    vehicle i follows i-1, vehicle 0 follows the last one across the
    seam.
    """
    n = len(trajectories)
    if n < 2:
        raise ValueError("need at least two vehicles")
    if abs(ring_length - grid.L_x) > 1e-9:
        raise ValueError("grid length must match the ring length")
    x = np.array([float(tr.position_at(t)) for tr in trajectories])
    v = np.array([float(tr.speed_at(t)) for tr in trajectories])
    lead_x = np.empty(n)
    lead_x[1:] = x[:-1]
    lead_x[0] = x[-1] + ring_length
    gaps = lead_x - x
    if np.any(gaps <= 0):
        raise ValueError("non-positive spacing on the ring")

    pos = np.mod(x, ring_length)
    order = np.argsort(pos)
    sorted_pos = pos[order]
    centers = grid.centers
    # owner of a center = vehicle with the largest wrapped position <= center,
    # wrapping to the topmost vehicle below the first one
    idx = np.searchsorted(sorted_pos, centers, side="right") - 1
    idx[idx < 0] = n - 1
    owners = order[idx]
    return 1.0 / gaps[owners], v[owners]


def pde_initial_from_micro(
    trajectories: Sequence[Trajectory],
    ring_length: float,
    grid: Grid,
) -> Tuple[np.ndarray, np.ndarray]:
    """Initial PDE data: the micro-derived field at the first sample time."""
    t0 = max(tr.t0 for tr in trajectories)
    return micro_to_eulerian(trajectories, ring_length, grid, t0)
