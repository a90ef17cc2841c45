#!/usr/bin/env python3
"""End-to-end demonstration of every estimator on exact and sampled records."""

import argparse
import math

import numpy as np

from bellprobe.dcqd import PreparationConfig, normalizer_statistics_from_record, outcome_probabilities, sample_outcomes
from bellprobe.dynamics import ExchangeHamiltonian, RelaxationParams, SingleQubitHamiltonian, hamiltonian_channel, relaxation_channel
from bellprobe.estimate import (
    estimate_anisotropic_couplings,
    estimate_direction_magnitudes,
    estimate_isotropic_coupling,
    estimate_relaxation,
    reconstruct_direction_signs,
    solve_offdiagonal,
)


def measure(kind, channel, t, shots, seed):
    rec = outcome_probabilities(PreparationConfig(kind), channel, t)
    return sample_outcomes(rec, shots, seed) if shots else rec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", type=int, default=0, help="0 for exact probabilities")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    n, seed = args.shots, args.seed
    np.set_printoptions(precision=6, suppress=True)

    h, t = SingleQubitHamiltonian((1 / 3, -2 / 3, 2 / 3)), 0.9
    ch = hamiltonian_channel(h, t)
    bell = measure("BellZ", ch, t, n, seed)
    mags = estimate_direction_magnitudes(bell)
    sols = [
        solve_offdiagonal(normalizer_statistics_from_record(measure(k, ch, t, n, seed)), bell)
        for k in ("NonMaxZ", "NonMaxX", "NonMaxY")
    ]
    d = reconstruct_direction_signs(mags, sols, t, j_max=1.2)
    print("single qubit   true", np.array(h.direction), " estimate", d.vector, " +-", d.stderr)

    p, t = RelaxationParams(2.0, 1.0, 0.3), 0.5
    r = estimate_relaxation(measure("BellZ", relaxation_channel(p, t), t, n, seed))
    print(f"relaxation     T1 {r.T1:.6f} +- {r.stderr_T1:.2e} (true 2)   T2 {r.T2:.6f} +- {r.stderr_T2:.2e} (true 1)")

    t = math.pi / 8
    iso = estimate_isotropic_coupling(measure("DoubleBell", hamiltonian_channel(ExchangeHamiltonian(1, 1, 1), t), t, n, seed))
    print(f"isotropic      |J| {iso.abs_J:.6f} (true 1)  sin(2|J|t) {iso.sin_2Jt:.6f}")

    hx, t = ExchangeHamiltonian(0.8, 0.8, -1.3), 0.3
    an = estimate_anisotropic_couplings(measure("DoubleBell", hamiltonian_channel(hx, t), t, n, seed))
    print("XXZ            |J|", an.abs_J, "(true [0.8 0.8 1.3])")


if __name__ == "__main__":
    main()
