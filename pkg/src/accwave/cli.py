"""Command-line front end.

Subcommands: simulate, wave, pde, metrics, fft, validate, case,
empirical.  A YAML config supplies defaults (see configs/example.yaml);
flags override config keys.  Outputs are CSV files in --out-dir (or
$ACCWAVE_OUT_DIR, default ./out), identical byte-for-byte for identical
inputs and seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

import numpy as np

from . import dataio
from .dataio import ScenarioConfig, default_out_dir, load_config
from .fourier import fourier_decompose, periodic_reconstruct
from .metrics import deviation_set, histogram, summary_stats
from .microsim import OscillationSpec, Scenario, simulate_platoon
from .pde import Grid, pde_initial_from_micro, solve
from .scenarios import (
    TABLE_PARAMS,
    case_scenario,
    ring_initial_speeds,
    run_case,
    run_empirical,
    run_ring_validation,
)
from .tracker import constant_speed_path, lwr_baseline_speed, trace_characteristic_path
from .waves import string_stability_class, wave_speed_closed_form

_CONFIG_FLAG_KEYS = (
    "dt", "duration", "origin_spacing", "baseline_speed", "n_cells",
    "cfl", "seed", "fft_modes", "out_dir", "full_precision", "n_draws",
)


def _merged_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    for key in _CONFIG_FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            overrides[key] = val
    if overrides:
        d = cfg.to_dict()
        d.update(overrides)
        cfg = dataio.config_from_dict(d)
    return cfg


def _out_dir(cfg: ScenarioConfig) -> str:
    path = cfg.out_dir or default_out_dir()
    os.makedirs(path, exist_ok=True)
    return path


def _custom_scenario(cfg: ScenarioConfig) -> Scenario:
    return Scenario(
        params=cfg.params(),
        n_followers=cfg.n_followers,
        leader=OscillationSpec(v_e=cfg.v_e, modes=cfg.modes),
        duration=cfg.duration,
        dt=cfg.dt,
    )


# ---------------------------------------------------------------------------
# Subcommand bodies
# ---------------------------------------------------------------------------

def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _merged_config(args)
    sc = case_scenario(args.case, dt=cfg.dt, duration=cfg.duration) if args.case else _custom_scenario(cfg)
    res = simulate_platoon(sc)
    out = os.path.join(_out_dir(cfg), "trajectories.csv")
    dataio.write_trajectories(out, res.trajectories, cfg.full_precision)
    print(f"wrote {out} ({len(res.trajectories)} vehicles, dt={sc.dt})")
    return 0


def _cmd_wave(args: argparse.Namespace) -> int:
    cfg = _merged_config(args)
    p = cfg.params()
    omegas = np.logspace(-2, 2, 400)
    out = os.path.join(_out_dir(cfg), "bode.csv")
    dataio.write_bode(out, p, omegas, cfg.full_precision)
    stab = string_stability_class(p)
    print(f"wrote {out}")
    print(f"string stability: {stab.classification.value} "
          f"(sup|G|={stab.sup_gain:.6f} at omega={stab.argmax_omega:.4g} rad/s)")
    spec = OscillationSpec(v_e=cfg.v_e, modes=cfg.modes)
    if spec.modes:
        for n in range(1, cfg.n_followers + 1):
            w = wave_speed_closed_form(n, spec, p)
            amps = ", ".join(f"R={R:.4f} phase={th0 + phw:.4f}" for R, phw, om, th0 in w.modes)
            print(f"pair {n}: nominal {w.nominal:.4f} m/s; {amps}")
    return 0


def _cmd_pde(args: argparse.Namespace) -> int:
    cfg = _merged_config(args)
    speeds = ring_initial_speeds(args.case, cfg.ring_vehicles)
    sc = Scenario(
        params=TABLE_PARAMS, n_followers=cfg.ring_vehicles, leader=None,
        duration=cfg.duration, dt=cfg.dt, topology="ring", initial_speeds=speeds,
    )
    res = simulate_platoon(sc)
    n_cells = cfg.n_cells if args.dx is None else max(4, int(round(res.ring_length / args.dx)))
    grid = Grid(res.ring_length, n_cells)
    rho0, v0 = pde_initial_from_micro(res.trajectories, res.ring_length, grid)
    wanted = np.arange(0.0, cfg.duration + 1e-9, cfg.sample_every)
    fld = solve(rho0, v0, grid, TABLE_PARAMS, cfg.duration, cfl=cfg.cfl, output_times=wanted)
    out = os.path.join(_out_dir(cfg), f"field_case{args.case}.csv")
    dataio.write_field(out, fld, cfg.full_precision)
    print(f"wrote {out} ({len(fld.times)} snapshots x {grid.n_x} cells)")
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    cfg = _merged_config(args)
    trajs = dataio.ingest_trajectories(args.input)
    if len(trajs) < 2:
        raise ValueError("need at least two vehicles to trace waves")
    p = cfg.params()
    t0 = trajs[0].t0 + args.warmup
    t1 = trajs[0].t_end - args.end_margin
    if t1 <= t0:
        raise ValueError("empty origin window; lower --warmup/--end-margin")
    origins = np.arange(t0, t1 + 1e-9, cfg.origin_spacing)
    w_base = cfg.baseline_speed if cfg.baseline_speed is not None else lwr_baseline_speed(p)
    proposed = [trace_characteristic_path(float(t), trajs, p) for t in origins]
    baseline = [constant_speed_path(float(t), trajs, w_base) for t in origins]
    out = _out_dir(cfg)
    dev_p, dev_b = deviation_set(proposed), deviation_set(baseline)
    dataio.write_wave_paths(os.path.join(out, "paths_proposed.csv"), proposed, cfg.full_precision)
    dataio.write_wave_paths(os.path.join(out, "paths_baseline.csv"), baseline, cfg.full_precision)
    dataio.write_stats(
        os.path.join(out, "stats.csv"),
        [("custom", "proposed", summary_stats(dev_p)), ("custom", "baseline", summary_stats(dev_b))],
        cfg.full_precision,
    )
    dataio.write_histogram(os.path.join(out, "hist_proposed.csv"), histogram(dev_p), cfg.full_precision)
    dataio.write_histogram(os.path.join(out, "hist_baseline.csv"), histogram(dev_b), cfg.full_precision)
    print(f"wrote stats and paths for {len(origins)} origins to {out}")
    return 0


def _cmd_fft(args: argparse.Namespace) -> int:
    cfg = _merged_config(args)
    trajs = dataio.ingest_trajectories(args.input)
    by_id = {tr.vehicle_id: tr for tr in trajs}
    if args.vehicle not in by_id:
        raise ValueError(f"vehicle {args.vehicle} not in {sorted(by_id)}")
    tr = by_id[args.vehicle]
    spec = fourier_decompose(tr.v, tr.dt, cfg.fft_modes)
    _, rmse = periodic_reconstruct(tr.v, tr.dt, cfg.fft_modes)
    out = os.path.join(_out_dir(cfg), "modes.csv")
    with open(out, "w", newline="") as fh:
        fh.write("amplitude,omega,phase\n")
        for A, om, phi in spec.modes:
            fh.write(f"{dataio.fmt(A, cfg.full_precision)},{dataio.fmt(om, cfg.full_precision)},"
                     f"{dataio.fmt(phi, cfg.full_precision)}\n")
    print(f"v_e = {spec.v_e:.6g} m/s, {len(spec.modes)} modes, reconstruction RMSE = {rmse:.6g} m/s")
    print(f"wrote {out}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _merged_config(args)
    r = run_ring_validation(
        args.case, n_vehicles=cfg.ring_vehicles, duration=cfg.duration, dt=cfg.dt,
        n_cells=cfg.n_cells, cfl=cfg.cfl, sample_every=cfg.sample_every,
    )
    out = _out_dir(cfg)
    dataio.write_field(os.path.join(out, f"validate_case{args.case}_micro.csv"), r.micro, cfg.full_precision)
    dataio.write_field(os.path.join(out, f"validate_case{args.case}_pde.csv"), r.pde, cfg.full_precision)
    print(f"case {args.case}: RMSE_v = {r.rmse_v:.4f} m/s, RMSE_rho = {r.rmse_rho:.6f} veh/m")
    return 0


def _cmd_case(args: argparse.Namespace) -> int:
    cfg = _merged_config(args)
    run = run_case(args.case, dt=cfg.dt, duration=cfg.duration,
                   origin_spacing=cfg.origin_spacing, baseline_speed=cfg.baseline_speed)
    out = _out_dir(cfg)
    tag = f"case{args.case}"
    dataio.write_trajectories(os.path.join(out, f"{tag}_trajectories.csv"),
                              run.trajectories, cfg.full_precision)
    dataio.write_wave_paths(os.path.join(out, f"{tag}_paths_proposed.csv"),
                            run.proposed, cfg.full_precision)
    dataio.write_wave_paths(os.path.join(out, f"{tag}_paths_baseline.csv"),
                            run.baseline, cfg.full_precision)
    dataio.write_stats(
        os.path.join(out, f"{tag}_stats.csv"),
        [(tag, "proposed", run.proposed_stats), (tag, "baseline", run.baseline_stats)],
        cfg.full_precision,
    )
    dataio.write_histogram(os.path.join(out, f"{tag}_hist_proposed.csv"),
                           histogram(deviation_set(run.proposed)), cfg.full_precision)
    dataio.write_histogram(os.path.join(out, f"{tag}_hist_baseline.csv"),
                           histogram(deviation_set(run.baseline)), cfg.full_precision)
    ps, bs = run.proposed_stats, run.baseline_stats
    print(f"{tag}: proposed mean |dev| = {ps.mean:.3f} m/s, baseline = {bs.mean:.3f} m/s")
    print(f"wrote 6 CSVs to {out}")
    return 0


def _cmd_empirical(args: argparse.Namespace) -> int:
    cfg = _merged_config(args)
    draws_file = args.draws or cfg.draws_file
    leader_file = args.leader or cfg.leader_file
    if not draws_file or not leader_file:
        raise ValueError("empirical needs --draws and --leader (or config keys)")
    draws = dataio.sample_params(dataio.load_draws(draws_file), cfg.n_draws, cfg.seed)
    leader = dataio.ingest_trajectories(leader_file)[0]
    r = run_empirical(leader, draws, dt=cfg.dt if cfg.dt != 0.01 else 0.05,
                      origin_spacing=cfg.origin_spacing if cfg.origin_spacing != 1.0 else 2.0,
                      baseline_speed=cfg.baseline_speed)
    out = _out_dir(cfg)
    dataio.write_stats(
        os.path.join(out, "empirical_stats.csv"),
        [("empirical", "proposed", r.proposed_stats), ("empirical", "baseline", r.baseline_stats)],
        cfg.full_precision,
    )
    ps, bs = r.proposed_stats, r.baseline_stats
    print(f"{r.n_draws} draws, {r.n_deviations} deviations")
    print(f"proposed:  mean={ps.mean:.3f} median={ps.median:.3f} q1={ps.q1:.3f} q3={ps.q3:.3f}")
    print(f"baseline:  mean={bs.mean:.3f} median={bs.median:.3f} q1={bs.q1:.3f} q3={bs.q3:.3f}")
    print(f"wrote {os.path.join(out, 'empirical_stats.csv')}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="YAML config file")
    sp.add_argument("--out-dir", dest="out_dir", help="output directory")
    sp.add_argument("--full-precision", dest="full_precision", action="store_true",
                    default=None, help="write full-precision floats")
    sp.add_argument("--dt", type=float, default=None, help="simulation time step [s]")
    sp.add_argument("--duration", type=float, default=None, help="scenario length [s]")
    sp.add_argument("--seed", type=int, default=None, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="accwave",
        description="Traffic-wave simulation and analysis for ACC platoons",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run a platoon scenario, write trajectories")
    _add_common(sp)
    sp.add_argument("--case", type=int, choices=(1, 2, 3, 4), default=None,
                    help="preset case (omit to use config scenario)")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("wave", help="frequency response, stability, closed-form waves")
    _add_common(sp)
    sp.set_defaults(func=_cmd_wave)

    sp = sub.add_parser("pde", help="solve the ring balance law, write the field")
    _add_common(sp)
    sp.add_argument("--case", type=int, choices=(1, 2, 3), default=1)
    sp.add_argument("--dx", type=float, default=None, help="target cell size [m]")
    sp.add_argument("--cfl", type=float, default=None)
    sp.set_defaults(func=_cmd_pde)

    sp = sub.add_parser("metrics", help="trace waves on a trajectory CSV, write stats")
    _add_common(sp)
    sp.add_argument("--input", required=True, help="trajectory CSV (t,vehicle_id,x,v[,a])")
    sp.add_argument("--origin-spacing", dest="origin_spacing", type=float, default=None)
    sp.add_argument("--baseline-speed", dest="baseline_speed", type=float, default=None)
    sp.add_argument("--warmup", type=float, default=0.0, help="skip this much lead time [s]")
    sp.add_argument("--end-margin", dest="end_margin", type=float, default=5.0)
    sp.set_defaults(func=_cmd_metrics)

    sp = sub.add_parser("fft", help="decompose a vehicle's speed series")
    _add_common(sp)
    sp.add_argument("--input", required=True, help="trajectory CSV")
    sp.add_argument("--vehicle", type=int, default=0)
    sp.add_argument("--modes", dest="fft_modes", type=int, default=None, help="mode count K")
    sp.set_defaults(func=_cmd_fft)

    sp = sub.add_parser("validate", help="micro-vs-PDE ring comparison")
    _add_common(sp)
    sp.add_argument("--case", type=int, choices=(1, 2, 3), default=1)
    sp.add_argument("--cfl", type=float, default=None)
    sp.set_defaults(func=_cmd_validate)

    sp = sub.add_parser("case", help="full pipeline for one preset case")
    _add_common(sp)
    sp.add_argument("case", type=int, choices=(1, 2, 3, 4))
    sp.add_argument("--origin-spacing", dest="origin_spacing", type=float, default=None)
    sp.add_argument("--baseline-speed", dest="baseline_speed", type=float, default=None)
    sp.set_defaults(func=_cmd_case)

    sp = sub.add_parser("empirical", help="calibrated-draw sweep over a recorded leader")
    _add_common(sp)
    sp.add_argument("--draws", help="draws CSV (tau,L,k_s,k_v)")
    sp.add_argument("--leader", help="recorded leader trajectory CSV")
    sp.add_argument("--n-draws", dest="n_draws", type=int, default=None)
    sp.set_defaults(func=_cmd_empirical)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
