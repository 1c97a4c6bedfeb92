"""Regenerate the committed synthetic data stand-ins.

The empirical pipeline expects (a) a recorded lead-vehicle trajectory
with a pronounced speed dip and (b) a file of calibrated controller
draws.  Real recordings are not redistributable here, so the repo ships
synthetic equivalents: a smooth dip profile with mild secondary
oscillations, and draws scattered around published calibrated values.
Both files are deterministic (fixed seed); rerun this script only to
change their shape, then commit the result.

Usage: python scripts/gen_standins.py [out_dir]
"""

from __future__ import annotations

import csv
import sys
import pathlib

import numpy as np

SEED = 20250819
DT = 0.1
DURATION = 120.0


def leader_profile() -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(0.0, DURATION + DT / 2, DT)
    # asymmetric dip: congestion builds faster than it clears
    width = np.where(t < 57.0, 13.0, 23.0)
    dip = 4.8 / np.cosh((t - 57.0) / width) ** 2
    wiggle = (
        1.40 * np.sin(0.50 * t)
        + 0.65 * np.sin(0.58 * t + 1.3)
        + 0.45 * np.sin(0.44 * t + 0.7)
    )
    v = 9.5 - dip + wiggle
    return t, v


def main() -> None:
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path("data")
    out.mkdir(parents=True, exist_ok=True)

    t, v = leader_profile()
    x = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))))
    a = np.gradient(v, DT)
    with open(out / "leader_dip.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "vehicle_id", "x", "v", "a"])
        for k in range(t.size):
            w.writerow([repr(float(t[k])), 0, repr(float(x[k])), repr(float(v[k])), repr(float(a[k]))])

    rng = np.random.default_rng(SEED)
    n = 200
    # mild correlation: calibration trades the speed gain off against the
    # headway, so low-k_v draws tend to come with high tau / high k_s
    u = rng.normal(0.0, 1.0, n)
    tau = np.clip(0.97 - 0.030 * u + rng.normal(0.0, 0.055, n), 0.84, 1.14)
    L = np.clip(rng.normal(9.5, 0.45, n), 8.4, 10.6)
    k_s = np.clip(0.26 - 0.025 * u + rng.normal(0.0, 0.032, n), 0.18, 0.35)
    k_v = np.clip(0.54 + 0.048 * u, 0.455, 0.66)
    with open(out / "calibrated_draws.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "L", "k_s", "k_v"])
        for i in range(n):
            w.writerow([repr(float(tau[i])), repr(float(L[i])), repr(float(k_s[i])), repr(float(k_v[i]))])

    print(f"wrote {out/'leader_dip.csv'} ({t.size} samples) and {out/'calibrated_draws.csv'} ({n} draws)")


if __name__ == "__main__":
    main()
