#!/usr/bin/env python3
"""Shot-noise and sample-count scaling of the single-qubit estimators.

Writes per-repeat rows and per-cell summaries as CSV and prints the log-log
slopes of direction RMSE against N_E and of frequency error against N_S.

    python3 scripts/scaling_study.py --out results/scaling --repeats 50
"""

import argparse
import csv
from pathlib import Path

from bellprobe.cli import fmt
from bellprobe.dynamics import SingleQubitHamiltonian
from bellprobe.spectral import loglog_slope, scaling_study, summarize


def write(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(rows[0].keys())
        w.writerows([fmt(v) for v in r.values()] for r in rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/scaling")
    ap.add_argument("--repeats", type=int, default=50)
    ap.add_argument("--seed", type=int, default=20241015)
    ap.add_argument("--j", type=float, nargs=3, default=(0.48, 0.6, 0.64), metavar=("JX", "JY", "JZ"))
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h = SingleQubitHamiltonian(tuple(args.j))
    n_s = [16, 32, 64, 128]
    n_e = [10**3, 10**4, 10**5, 10**6]

    rows = scaling_study(h, n_s, n_e, args.repeats, args.seed)
    summary = summarize(rows)
    write(out / "scaling.csv", rows)
    write(out / "scaling_summary.csv", summary)

    cell = {(r["N_S"], r["N_E"]): r for r in summary}
    print(f"{'N_S':>5} {'N_E':>9} {'rms dJ/J':>11} {'RMSE |J_a|':>11}")
    for r in summary:
        print(f"{r['N_S']:>5} {r['N_E']:>9} {r['rms_rel_freq_error']:>11.3e} {r['rmse_direction']:>11.3e}")
    print()
    for ns in n_s:
        s = loglog_slope(n_e, [cell[(ns, ne)]["rmse_direction"] for ne in n_e])
        print(f"direction RMSE vs N_E at N_S={ns}: slope {s:+.3f}")
    for ne in n_e:
        s = loglog_slope(n_s, [cell[(ns, ne)]["rms_rel_freq_error"] for ns in n_s])
        print(f"frequency error vs N_S at N_E={ne}: slope {s:+.3f}")


if __name__ == "__main__":
    main()
