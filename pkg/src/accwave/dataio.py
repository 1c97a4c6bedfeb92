"""CSV import/export, parameter draws, and scenario configuration.

All exports default to 6 significant digits (full precision on
request).  Trajectory files use the flat schema `t,vehicle_id,x,v,a`
sorted by (t, vehicle_id); wave-path files carry one row per crossing
with the path origin marked by vehicle_id = -1.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, asdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .metrics import DeviationStats, Histogram
from .microsim import Trajectory
from .model import ControlParams
from .pde import EulerianField
from .tracker import WavePath
from .waves import transfer_function

__all__ = [
    "ParamSample",
    "ScenarioConfig",
    "fmt",
    "write_trajectories",
    "ingest_trajectories",
    "write_wave_paths",
    "write_stats",
    "write_histogram",
    "write_field",
    "write_bode",
    "load_draws",
    "sample_params",
    "load_config",
    "save_config",
]


@dataclass(frozen=True)
class ParamSample:
    """One calibrated controller draw."""

    tau: float
    L: float
    k_s: float
    k_v: float

    def __post_init__(self) -> None:
        if min(self.tau, self.L, self.k_s, self.k_v) <= 0:
            raise ValueError(f"draw fields must be positive, got {self}")


def fmt(x: float, full_precision: bool = False) -> str:
    if full_precision:
        return repr(float(x))
    return f"{x:.6g}"


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

def write_trajectories(
    path: str, trajectories: Sequence[Trajectory], full_precision: bool = False
) -> None:
    """Flat trajectory export sorted by (t, vehicle_id)."""
    rows = []
    for tr in trajectories:
        for k in range(len(tr.t)):
            rows.append((float(tr.t[k]), tr.vehicle_id, float(tr.x[k]), float(tr.v[k]), float(tr.a[k])))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "vehicle_id", "x", "v", "a"])
        for t, vid, x, v, a in rows:
            w.writerow([fmt(t, full_precision), vid, fmt(x, full_precision),
                        fmt(v, full_precision), fmt(a, full_precision)])


def ingest_trajectories(path: str, dt_jitter: float = 1e-6) -> List[Trajectory]:
    """Read a trajectory CSV into per-vehicle Trajectory objects.

    Rows may appear in any order.  Each vehicle must be uniformly
    sampled (time jitter above `dt_jitter` or a skipped sample raises,
    naming the offending data row).  A missing `a` column is
    reconstructed by central differences of v.
    """
    by_vehicle: Dict[int, List[Tuple[float, float, float, Optional[float], int]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        cols = [c.strip() for c in header]
        if cols[:4] != ["t", "vehicle_id", "x", "v"] or (len(cols) > 4 and cols[4] != "a"):
            raise ValueError(f"{path}: expected header t,vehicle_id,x,v[,a], got {header}")
        has_a = len(cols) > 4
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t = float(row[0])
                vid = int(row[1])
                x = float(row[2])
                v = float(row[3])
                a = float(row[4]) if has_a else None
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: malformed row {row_no}: {row}") from exc
            by_vehicle.setdefault(vid, []).append((t, x, v, a, row_no))

    out: List[Trajectory] = []
    for vid in sorted(by_vehicle):
        recs = sorted(by_vehicle[vid], key=lambda r: r[0])
        t = np.array([r[0] for r in recs])
        if len(t) < 2:
            raise ValueError(f"{path}: vehicle {vid} has fewer than two samples")
        steps = np.diff(t)
        dt = float(np.median(steps))
        bad = np.nonzero(np.abs(steps - dt) > dt_jitter)[0]
        if bad.size:
            k = int(bad[0])
            raise ValueError(
                f"{path}: vehicle {vid} not uniformly sampled near data row "
                f"{recs[k + 1][4]} (step {steps[k]:.6g} vs dt {dt:.6g})"
            )
        x = np.array([r[1] for r in recs])
        v = np.array([r[2] for r in recs])
        if any(r[3] is None for r in recs):
            a = np.gradient(v, dt)
        else:
            a = np.array([r[3] for r in recs])
        out.append(Trajectory(vehicle_id=vid, t=t, x=x, v=v, a=a, dt=dt))
    return out


# ---------------------------------------------------------------------------
# Wave paths, stats, histograms, fields, frequency response
# ---------------------------------------------------------------------------

def write_wave_paths(
    path: str, paths: Sequence[WavePath], full_precision: bool = False
) -> None:
    """One row per crossing; the origin point is the row with vehicle_id -1."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path_id", "kind", "vehicle_id", "t_cross", "x_cross", "v_at_cross"])
        for pid, wp in enumerate(paths):
            w.writerow([pid, wp.kind.value, -1, fmt(wp.origin_t, full_precision),
                        fmt(wp.origin_x, full_precision), fmt(wp.origin_v, full_precision)])
            for c in wp.crossings:
                w.writerow([pid, wp.kind.value, c.vehicle_id, fmt(c.t, full_precision),
                            fmt(c.x, full_precision), fmt(c.v, full_precision)])


def write_stats(
    path: str,
    rows: Sequence[Tuple[str, str, DeviationStats]],
    full_precision: bool = False,
) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case", "method", "mean", "median", "q1", "q3", "max", "min"])
        for case, method, st in rows:
            w.writerow([case, method] + [fmt(v, full_precision) for v in st.as_row()])


def write_histogram(path: str, hist: Histogram, full_precision: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_center", "density"])
        for c, d in zip(hist.bin_centers, hist.density):
            w.writerow([fmt(float(c), full_precision), fmt(float(d), full_precision)])


def write_field(path: str, fld: EulerianField, full_precision: bool = False) -> None:
    """Heatmap-ready field export: one row per (time, cell center)."""
    centers = fld.grid.centers
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "rho", "v"])
        for k, t in enumerate(fld.times):
            for m, x in enumerate(centers):
                w.writerow([fmt(float(t), full_precision), fmt(float(x), full_precision),
                            fmt(float(fld.rho[k, m]), full_precision),
                            fmt(float(fld.v[k, m]), full_precision)])


def write_bode(
    path: str,
    params: ControlParams,
    omegas: Sequence[float],
    full_precision: bool = False,
) -> None:
    """Frequency response export: omega, gain magnitude, phase."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "gain_mag", "phase"])
        for om in omegas:
            te = transfer_function(float(om), params)
            w.writerow([fmt(float(om), full_precision), fmt(te.gain_mag, full_precision),
                        fmt(te.phase, full_precision)])


# ---------------------------------------------------------------------------
# Calibrated parameter draws
# ---------------------------------------------------------------------------

def load_draws(path: str) -> List[ParamSample]:
    """Read a draws file (header tau,L,k_s,k_v, one row per sample)."""
    out: List[ParamSample] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty draws file")
        if [c.strip() for c in header] != ["tau", "L", "k_s", "k_v"]:
            raise ValueError(f"{path}: expected header tau,L,k_s,k_v, got {header}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append(ParamSample(float(row[0]), float(row[1]), float(row[2]), float(row[3])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: malformed draw at row {row_no}: {row}") from exc
    if not out:
        raise ValueError(f"{path}: no draws found")
    return out


def sample_params(draws: Sequence[ParamSample], count: int, seed: int) -> List[ParamSample]:
    """Seeded uniform resampling with replacement from the provided draws."""
    if not draws:
        raise ValueError("cannot sample from an empty draw set")
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(draws), size=count)
    return [draws[int(i)] for i in idx]


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a CLI run needs; YAML-serializable and strict on keys."""

    case: int = 1
    dt: float = 0.01
    duration: float = 60.0
    origin_spacing: float = 1.0
    baseline_speed: Optional[float] = None
    # controller (used by simulate/wave/metrics when not running a case)
    tau: float = 1.2
    L: float = 5.0
    k_s: float = 0.8
    k_v: float = 1.4
    v_f: float = 15.0
    v_e: float = 10.0
    modes: Tuple[Tuple[float, float, float], ...] = ()
    n_followers: int = 4
    # PDE / ring validation
    n_cells: int = 200
    cfl: float = 0.5
    sample_every: float = 0.5
    ring_vehicles: int = 40
    # signal tools
    fft_modes: int = 10
    # empirical sweep
    draws_file: Optional[str] = None
    leader_file: Optional[str] = None
    n_draws: int = 200
    seed: int = 0
    # output
    out_dir: Optional[str] = None
    full_precision: bool = False

    def params(self) -> ControlParams:
        return ControlParams(tau=self.tau, L=self.L, k_s=self.k_s, k_v=self.k_v, v_f=self.v_f)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modes"] = [list(m) for m in self.modes]
        return d


def _coerce_modes(raw) -> Tuple[Tuple[float, float, float], ...]:
    modes = []
    for m in raw:
        if len(m) != 3:
            raise ValueError(f"each mode needs [amplitude, omega, phase], got {m}")
        modes.append((float(m[0]), float(m[1]), float(m[2])))
    return tuple(modes)


def config_from_dict(data: dict) -> ScenarioConfig:
    known = set(ScenarioConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "modes" in data and data["modes"] is not None:
        data = dict(data)
        data["modes"] = _coerce_modes(data["modes"])
    return ScenarioConfig(**data)


def load_config(path: str) -> ScenarioConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    try:
        return config_from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from exc


def save_config(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)


def default_out_dir() -> str:
    return os.environ.get("ACCWAVE_OUT_DIR", "out")
