"""Time-sampling schedules, periodogram frequency extraction and the shot-noise study.

Measured signals are cos^2(J t)-type Bell probabilities, which oscillate at
angular frequency 2J, i.e. at f = J/pi. All band-limit bookkeeping uses that
doubled frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dcqd import PreparationConfig, make_rng, outcome_probabilities, sample_outcomes
from .dynamics import SingleQubitHamiltonian, hamiltonian_channel
from .errors import DegenerateTimeError, NoSignalError, ParameterError
from .estimate import estimate_direction_magnitudes

ZERO_PAD = 8
NOISE_FACTOR = 20.0


def signal_frequency(j: float) -> float:
    """Ordinary frequency of cos^2(J t): 2J / (2 pi)."""
    return abs(j) / math.pi


@dataclass(frozen=True)
class SamplingSchedule:
    n_samples: int
    tau: float
    j_max: float
    oversample: float

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(1, self.n_samples + 1)

    @property
    def f_sample(self) -> float:
        return 1.0 / self.tau

    @property
    def f_max(self) -> float:
        return signal_frequency(self.j_max)

    @property
    def nyquist_margin(self) -> float:
        """f_S / (2 f_max); at least 1 when the declared band is resolvable."""
        return self.f_sample / (2 * self.f_max)

    @property
    def aliased_risk(self) -> bool:
        return self.oversample <= 2


def make_schedule(j_max: float, n_samples: int, oversample: float = 4.0) -> SamplingSchedule:
    """Uniform schedule t_k = k tau, k = 1..N_S, with f_S = oversample * 2 J_max / (2 pi)."""
    if not j_max > 0:
        raise ParameterError(f"J_max must be positive, got {j_max}")
    if int(n_samples) != n_samples or n_samples < 4:
        raise ParameterError(f"need at least 4 samples, got {n_samples}")
    if oversample < 2:
        raise ParameterError(f"oversample {oversample} < 2 violates the Nyquist criterion")
    tau = math.pi / (oversample * j_max)
    return SamplingSchedule(int(n_samples), tau, float(j_max), float(oversample))


@dataclass(frozen=True)
class FrequencyEstimate:
    f: float
    delta_f: float
    aliased: bool
    peak_power: float = 0.0

    @property
    def coupling(self) -> float:
        """J for a cos^2(J t) signal."""
        return math.pi * self.f


def _quadratic_peak(power: np.ndarray, k: int) -> float:
    a, b, c = power[k - 1], power[k], power[k + 1]
    den = a - 2 * b + c
    return 0.5 * (a - c) / den if den != 0 else 0.0


def extract_frequency(times, values, stderr=None, j_max: float | None = None, pad: int = ZERO_PAD) -> FrequencyEstimate:
    """Dominant frequency of a uniformly sampled series.

    Mean-removed periodogram, zero-padded ``pad`` times, peak refined by a
    parabola through the three bins around the maximum. ``delta_f`` follows
    the shot-noise model 1/(N_S tau sqrt(N_E)), with 1/sqrt(N_E) taken from
    the per-point standard errors (2 * rms stderr); for noise-free input it is
    the padded bin width. ``aliased`` is raised when the declared band limit
    ``j_max`` puts the signal at or beyond f_S/2, or the peak sits on the
    Nyquist bin.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 4 or t.shape != v.shape:
        raise ParameterError("need at least 4 (time, value) pairs")
    tau = t[1] - t[0]
    if not tau > 0 or not np.allclose(np.diff(t), tau, rtol=1e-9, atol=0):
        raise ParameterError("sample times must be uniformly spaced and increasing")
    se = np.zeros(n) if stderr is None else np.asarray(stderr, dtype=float)

    x = v - v.mean()
    power = np.abs(np.fft.rfft(x, n * pad)) ** 2
    k = int(np.argmax(power[1:])) + 1
    peak = float(power[k])
    floor = NOISE_FACTOR * float(np.sum(se**2))
    f_nyq = 0.5 / tau
    band_aliased = j_max is not None and signal_frequency(j_max) >= f_nyq
    if peak <= max(floor, (1e-9 * n) ** 2):
        hint = "; declared J_max is beyond Nyquist, the signal may have folded onto DC" if band_aliased else ""
        raise NoSignalError(f"periodogram peak {peak:.3g} does not clear the noise floor {floor:.3g}{hint}")
    edge = k >= len(power) - 1
    shift = 0.0 if edge else _quadratic_peak(power, k)
    f = (k + shift) / (n * pad * tau)

    rms = float(np.sqrt(np.mean(se**2)))
    delta_f = 2 * rms / (n * tau) if rms > 0 else 1.0 / (n * pad * tau)
    aliased = bool(edge or band_aliased)
    return FrequencyEstimate(float(f), float(delta_f), aliased, peak)


def select_alias(candidates, j_max: float):
    """Pick the unique candidate in [0, J_max].

    Returns (value, flagged); ``flagged`` is True when zero or several
    candidates survive, in which case the value is None.
    """
    inside = [c for c in candidates if 0 <= c <= j_max * (1 + 1e-12)]
    if len(inside) == 1:
        return inside[0], False
    return None, True


def single_qubit_series(h: SingleQubitHamiltonian, schedule: SamplingSchedule, shots: int | None = None, seed: int = 0):
    """BellZ records over a schedule; sampled when ``shots`` is given."""
    cfg = PreparationConfig("BellZ")
    records = []
    for i, t in enumerate(schedule.times):
        rec = outcome_probabilities(cfg, hamiltonian_channel(h, t), t, time_index=i)
        if shots is not None:
            rec = sample_outcomes(rec, shots, seed)
        records.append(rec)
    return records


def coupling_from_records(records, j_max: float | None = None) -> FrequencyEstimate:
    """Frequency of p_Phi+(t) = cos^2(J t) from a BellZ time series."""
    times = np.array([r.time for r in records])
    vals = np.array([r.frequencies[0] for r in records])
    if records[0].is_sampled:
        se = np.sqrt(vals * (1 - vals) / records[0].shots)
    else:
        se = None
    return extract_frequency(times, vals, se, j_max=j_max)


def _cell_seed(seed: int, *key: int) -> int:
    return int(make_rng(seed, *key).integers(0, 2**63 - 1))


def scaling_study(
    h: SingleQubitHamiltonian,
    n_s_list,
    n_e_list,
    repeats: int,
    seed: int,
    j_max: float | None = None,
    oversample: float = 4.0,
):
    """Simulate-sample-estimate over a (N_S, N_E) grid.

    Each repeat draws fresh shot noise from a stream keyed by
    (seed, N_S, N_E, repeat), extracts J from the cos^2(J t) series and the
    direction magnitudes at the time point with the largest observed
    1 - p_I. Returns one row per (N_S, N_E, repeat).
    """
    if not isinstance(h, SingleQubitHamiltonian):
        raise ParameterError("scaling study is defined for single-qubit Hamiltonians")
    if not list(n_s_list) or not list(n_e_list):
        raise ParameterError("scaling grid must be nonempty")
    J = h.magnitude
    if J == 0:
        raise ParameterError("scaling study needs J > 0")
    j_max = 1.25 * J if j_max is None else float(j_max)
    truth = np.abs(np.array(h.direction))
    rows = []
    for n_s in n_s_list:
        schedule = make_schedule(j_max, n_s, oversample)
        exact = single_qubit_series(h, schedule)
        for n_e in n_e_list:
            for r in range(repeats):
                cell = _cell_seed(seed, n_s, n_e, r)
                recs = [sample_outcomes(rec, n_e, cell) for rec in exact]
                row = {"N_S": int(n_s), "N_E": int(n_e), "repeat": r, "seed": int(seed), "J_true": J}
                try:
                    fe = coupling_from_records(recs, j_max=j_max)
                    row.update(J_est=fe.coupling, rel_freq_error=(fe.coupling - J) / J, delta_f=fe.delta_f)
                except NoSignalError:
                    row.update(J_est=math.nan, rel_freq_error=math.nan, delta_f=math.nan)
                best = max(recs, key=lambda rec: 1 - rec.frequencies[0])
                try:
                    d = estimate_direction_magnitudes(best)
                    errs = d.magnitudes - truth
                except DegenerateTimeError:
                    errs = np.full(3, math.nan)
                row.update(t_direction=best.time, dir_err_x=errs[0], dir_err_y=errs[1], dir_err_z=errs[2])
                rows.append(row)
    return rows


def summarize(rows):
    """Per-cell mean |dJ|/J, rms dJ/J and RMSE of the direction magnitudes."""
    cells = {}
    for row in rows:
        cells.setdefault((row["N_S"], row["N_E"]), []).append(row)
    out = []
    for (n_s, n_e), rs in sorted(cells.items()):
        rel = np.array([r["rel_freq_error"] for r in rs], dtype=float)
        dirs = np.array([[r["dir_err_x"], r["dir_err_y"], r["dir_err_z"]] for r in rs], dtype=float)
        out.append(
            {
                "N_S": n_s,
                "N_E": n_e,
                "repeats": len(rs),
                "mean_abs_rel_freq_error": float(np.nanmean(np.abs(rel))),
                "rms_rel_freq_error": float(np.sqrt(np.nanmean(rel**2))),
                "rmse_direction": float(np.sqrt(np.nanmean(dirs**2))),
            }
        )
    return out


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
