"""Config-driven experiment runner.

    bellprobe <subcommand> --config <path> [--seed <u64>] [--out <dir>]

Subcommands: single-qubit, relaxation, exchange-iso, exchange-aniso, scaling,
validate. Configs are INI files (one level of sections); see README.md for the
keys each experiment reads. Results go to ``records.csv`` and
``estimates.csv`` (``scaling.csv`` and ``scaling_summary.csv`` for the
scaling study); failures are reported on stderr and in ``errors.csv``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dcqd, estimate, spectral
from .dynamics import (
    EXCHANGE_CLASSES,
    ExchangeHamiltonian,
    RelaxationParams,
    SingleQubitHamiltonian,
    hamiltonian_channel,
    process_oracle,
    relaxation_channel,
)
from .errors import EXIT_CODES, BellProbeError, NoSignalError

EXPERIMENTS = ("single-qubit", "relaxation", "exchange-iso", "exchange-aniso", "scaling")
RECORD_COLUMNS = ["experiment", "t", "outcome_label", "probability", "count", "N_E", "seed", "config_hash"]
ESTIMATE_COLUMNS = [
    "experiment", "parameter", "true_value", "estimate", "stderr", "mode", "N_E", "N_S", "notes", "seed", "config_hash",
]
ERROR_COLUMNS = ["category", "experiment", "config_hash", "message"]


class ConfigError(BellProbeError):
    category = "CONFIG"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.9g}"
    return str(x)


@dataclass
class ExperimentConfig:
    kind: str
    mode: str
    shots: int | None
    seed: int
    t: float | None
    output: str
    config_hash: str
    params: dict = field(default_factory=dict)

    @property
    def sampled(self) -> bool:
        return self.mode == "sampled"


def _get(cp, section, key, conv=float, required=True, default=None):
    if not cp.has_option(section, key):
        if required:
            raise ConfigError(f"[{section}] {key}: missing required field")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} ({exc})") from None


def _int_list(raw):
    return [int(float(v)) for v in raw.replace(";", ",").split(",") if v.strip()]


def _bool(raw):
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def config_hash(cp: configparser.ConfigParser) -> str:
    canon = "\n".join(
        f"[{s}]\n" + "\n".join(f"{k}={cp.get(s, k).strip()}" for k in sorted(cp.options(s)))
        for s in sorted(cp.sections())
    )
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def load_config(path, kind: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Parse and validate a config; every module precondition is checked here."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    if not cp.has_section("experiment"):
        raise ConfigError("[experiment]: missing section")

    declared = _get(cp, "experiment", "kind", str, required=False)
    if kind is None:
        kind = declared
    elif declared is not None and declared != kind:
        raise ConfigError(f"[experiment] kind: config declares {declared!r} but subcommand is {kind!r}")
    if kind not in EXPERIMENTS:
        raise ConfigError(f"[experiment] kind: unknown experiment kind {kind!r}; expected one of {EXPERIMENTS}")

    mode = _get(cp, "experiment", "mode", str, required=False, default="exact")
    if mode not in ("exact", "sampled"):
        raise ConfigError(f"[experiment] mode: expected 'exact' or 'sampled', got {mode!r}")
    shots = _get(cp, "experiment", "shots", lambda v: int(float(v)), required=mode == "sampled" and kind != "scaling")
    if shots is not None and shots < 1:
        raise ConfigError("[experiment] shots: must be >= 1")
    cfg_seed = _get(cp, "experiment", "seed", int, required=False, default=0)
    seed = cfg_seed if seed is None else seed
    if not 0 <= seed < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    t = _get(cp, "experiment", "t", float, required=kind != "scaling")
    if t is not None and not t > 0:
        raise ConfigError("[experiment] t: must be positive")
    output = _get(cp, "experiment", "output", str, required=False, default="results")
    cfg = ExperimentConfig(kind, mode, shots, seed, t, output, config_hash(cp))

    try:
        if kind in ("single-qubit", "scaling"):
            sec = "hamiltonian"
            h = SingleQubitHamiltonian(tuple(_get(cp, sec, k) for k in ("jx", "jy", "jz")))
            cfg.params["hamiltonian"] = h
            j_max = _get(cp, sec, "j_max", required=False)
            if j_max is not None:
                if not 0 < j_max * (t or 0) < math.pi / 2:
                    raise ConfigError(f"[{sec}] j_max: sign recovery needs 0 < j_max*t < pi/2, got {j_max * (t or 0):.4g}")
                if j_max < h.magnitude:
                    raise ConfigError(f"[{sec}] j_max: bound {j_max} below |J| = {h.magnitude:.6g}")
            cfg.params["j_max"] = j_max
        if kind == "single-qubit" and cp.has_section("schedule"):
            cfg.params["schedule"] = spectral.make_schedule(
                _get(cp, "schedule", "j_max"),
                _get(cp, "schedule", "n_s", lambda v: int(float(v))),
                _get(cp, "schedule", "oversample", required=False, default=4.0),
            )
        if kind == "relaxation":
            cfg.params["relaxation"] = RelaxationParams(
                _get(cp, "relaxation", "t1"), _get(cp, "relaxation", "t2"), _get(cp, "relaxation", "a_inf", required=False, default=0.5)
            )
        if kind in ("exchange-iso", "exchange-aniso"):
            cls = _get(cp, "exchange", "class", str, required=False)
            if cls is not None and cls not in EXCHANGE_CLASSES:
                raise ConfigError(f"[exchange] class: unknown class {cls!r}")
            cfg.params["exchange"] = ExchangeHamiltonian(
                _get(cp, "exchange", "jx"), _get(cp, "exchange", "jy"), _get(cp, "exchange", "jz"), cls
            )
            cfg.params["oracle_signs"] = _get(cp, "exchange", "oracle_signs", _bool, required=False, default=False)
        if kind == "scaling":
            sec = "scaling"
            n_s = _get(cp, sec, "n_s", _int_list)
            n_e = _get(cp, sec, "n_e", _int_list)
            if not n_s or not n_e:
                raise ConfigError(f"[{sec}] grid must be nonempty")
            if min(n_s) < 4 or min(n_e) < 1:
                raise ConfigError(f"[{sec}] n_s entries must be >= 4 and n_e entries >= 1")
            repeats = _get(cp, sec, "repeats", int, required=False, default=1)
            if repeats < 1:
                raise ConfigError(f"[{sec}] repeats: must be >= 1")
            cfg.params.update(
                n_s=n_s,
                n_e=n_e,
                repeats=repeats,
                scaling_j_max=_get(cp, sec, "j_max", required=False),
                oversample=_get(cp, sec, "oversample", required=False, default=4.0),
            )
            spectral.make_schedule(cfg.params["scaling_j_max"] or 1.0, min(n_s), cfg.params["oversample"])
    except ConfigError:
        raise
    except BellProbeError as exc:
        raise ConfigError(f"invariant violated: {exc}") from None
    return cfg


class Collector:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.records = []
        self.estimates = []

    def record(self, rec: dcqd.MeasurementRecord):
        for i, label in enumerate(rec.labels):
            self.records.append(
                [
                    self.cfg.kind, rec.time, f"{rec.config.kind}:{label}", rec.probabilities[i],
                    rec.counts[i] if rec.is_sampled else None, rec.shots, self.cfg.seed, self.cfg.config_hash,
                ]
            )

    def estimate(self, parameter, true_value, value, stderr=None, n_s=None, notes=""):
        self.estimates.append(
            [
                self.cfg.kind, parameter, true_value, value, stderr, self.cfg.mode,
                self.cfg.shots if self.cfg.sampled else None, n_s, notes, self.cfg.seed, self.cfg.config_hash,
            ]
        )


def _measure(cfg, config, channel, t, time_index=0):
    rec = dcqd.outcome_probabilities(config, channel, t, time_index=time_index)
    if cfg.sampled:
        rec = dcqd.sample_outcomes(rec, cfg.shots, cfg.seed)
    return rec


def run_single_qubit(cfg: ExperimentConfig, out: Collector):
    h = cfg.params["hamiltonian"]
    t = cfg.t
    channel = hamiltonian_channel(h, t)
    bell = _measure(cfg, dcqd.PreparationConfig("BellZ"), channel, t)
    out.record(bell)
    truth = np.array(h.direction) if h.direction else np.zeros(3)
    mags = estimate.estimate_direction_magnitudes(bell)
    for ax, name in enumerate("xyz"):
        out.estimate(f"abs_Jhat_{name}", abs(truth[ax]), mags.magnitudes[ax], mags.stderr[ax])

    j_max = cfg.params.get("j_max")
    if j_max is not None:
        sols = []
        for kind in dcqd.NONMAX_KINDS:
            rec = _measure(cfg, dcqd.PreparationConfig(kind), channel, t)
            out.record(rec)
            sols.append(estimate.solve_offdiagonal(dcqd.normalizer_statistics_from_record(rec), bell))
        from .dynamics import chi_from_unitary

        chi = chi_from_unitary(channel.kraus[0])
        for s in sols:
            j, l = s.pair
            out.estimate(f"Im_chi_0{s.axis}", chi[0, s.axis].imag, s.im_0k, s.im_0k_stderr, notes=f"cond={s.condition_number:.4g}")
            out.estimate(f"Re_chi_{j}{l}", chi[j, l].real, s.re_pair, s.re_pair_stderr, notes=f"cond={s.condition_number:.4g}")
        two = estimate.reconstruct_direction_signs(mags, sols[:2], t, j_max)
        three = estimate.reconstruct_direction_signs(mags, sols, t, j_max)
        for ax, name in enumerate("xyz"):
            out.estimate(f"Jhat_{name}[Z+X]", truth[ax], two.vector[ax], two.stderr[ax], notes=f"global_sign_fixed={fmt(two.global_sign_fixed)}")
        for ax, name in enumerate("xyz"):
            out.estimate(f"Jhat_{name}", truth[ax], three.vector[ax], three.stderr[ax], notes=f"global_sign_fixed={fmt(three.global_sign_fixed)}")

    schedule = cfg.params.get("schedule")
    if schedule is not None:
        recs = []
        for i, tk in enumerate(schedule.times, start=1):
            rec = _measure(cfg, dcqd.PreparationConfig("BellZ"), hamiltonian_channel(h, tk), tk, time_index=i)
            out.record(rec)
            recs.append(rec)
        fe = spectral.coupling_from_records(recs, j_max=schedule.j_max)
        notes = f"aliased={fmt(fe.aliased)};tau_S={fmt(schedule.tau)};nyquist_margin={fmt(schedule.nyquist_margin)}"
        out.estimate("J", h.magnitude, fe.coupling, math.pi * fe.delta_f, n_s=schedule.n_samples, notes=notes)


def run_relaxation(cfg: ExperimentConfig, out: Collector):
    p = cfg.params["relaxation"]
    rec = _measure(cfg, dcqd.PreparationConfig("BellZ"), relaxation_channel(p, cfg.t), cfg.t)
    out.record(rec)
    est = estimate.estimate_relaxation(rec)
    notes = "T2>2T1" if est.flagged else ""
    out.estimate("T1", p.T1, est.T1, est.stderr_T1, notes=notes)
    out.estimate("T2", p.T2, est.T2, est.stderr_T2, notes=notes)


def _exchange_record(cfg, out):
    h = cfg.params["exchange"]
    rec = _measure(cfg, dcqd.PreparationConfig("DoubleBell"), hamiltonian_channel(h, cfg.t), cfg.t)
    out.record(rec)
    return h, rec


def run_exchange_iso(cfg: ExperimentConfig, out: Collector):
    h, rec = _exchange_record(cfg, out)
    est = estimate.estimate_isotropic_coupling(rec)
    true_j = abs(h.Jx)
    aliases = ";".join(fmt(a) for a in est.aliases)
    out.estimate("sin_2Jt", math.sin(2 * true_j * cfg.t), est.sin_2Jt, est.stderr_sin)
    out.estimate("abs_J", true_j, est.abs_J, est.stderr_J, notes=f"principal;aliases={aliases}")
    out.estimate("P_PhiPlus_PhiPlus_residual", 0.0, est.consistency_residual)


def run_exchange_aniso(cfg: ExperimentConfig, out: Collector):
    h, rec = _exchange_record(cfg, out)
    est = estimate.estimate_anisotropic_couplings(rec, kind=h.kind)
    for ax, name in enumerate("xyz"):
        aliases = ";".join(fmt(a) for a in est.aliases[ax])
        out.estimate(f"abs_J{name}", abs(h.couplings[ax]), est.abs_J[ax], est.stderr[ax], notes=f"principal;aliases={aliases}")
    relative = None
    if cfg.params["oracle_signs"]:
        chi = process_oracle(hamiltonian_channel(h, cfg.t))
        relative, _ = estimate.exchange_relative_signs(chi, cfg.t)
    candidates = estimate.exchange_spectrum(est, relative=relative)
    truth = h.bell_energies()
    for c, energies in enumerate(candidates):
        for label, e, e_true in zip(dcqd.BELL_LABELS, energies, truth):
            out.estimate(f"E_{label}[{c}]", e_true, e, notes=f"candidates={len(candidates)}")


def run_scaling(cfg: ExperimentConfig, out_dir: Path):
    p = cfg.params
    rows = spectral.scaling_study(
        p["hamiltonian"], p["n_s"], p["n_e"], p["repeats"], cfg.seed, j_max=p["scaling_j_max"], oversample=p["oversample"]
    )
    cols = ["N_S", "N_E", "repeat", "seed", "J_true", "J_est", "rel_freq_error", "delta_f",
            "t_direction", "dir_err_x", "dir_err_y", "dir_err_z"]
    _write_csv(out_dir / "scaling.csv", cols + ["config_hash"], [[r[c] for c in cols] + [cfg.config_hash] for r in rows])
    summary = spectral.summarize(rows)
    scols = list(summary[0].keys())
    _write_csv(out_dir / "scaling_summary.csv", scols + ["seed", "config_hash"],
               [[r[c] for c in scols] + [cfg.seed, cfg.config_hash] for r in summary])


RUNNERS = {
    "single-qubit": run_single_qubit,
    "relaxation": run_relaxation,
    "exchange-iso": run_exchange_iso,
    "exchange-aniso": run_exchange_aniso,
}


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())


def _report_error(out_dir: Path | None, category: str, kind, chash, message: str) -> int:
    print(f"error [{category}]: {message}", file=sys.stderr)
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            _write_csv(out_dir / "errors.csv", ERROR_COLUMNS, [[category, kind or "", chash or "", message]])
        except OSError:
            pass
    return EXIT_CODES.get(category, 1)


def run(command: str, config_path, seed: int | None = None, out: str | None = None) -> int:
    """Execute one subcommand; returns the process exit status."""
    kind = None if command == "validate" else command
    out_dir = Path(out) if out is not None else None
    try:
        cfg = load_config(config_path, kind, seed)
    except BellProbeError as exc:
        return _report_error(out_dir, exc.category, kind, None, str(exc))
    if out_dir is None:
        out_dir = Path(cfg.output)
    if command == "validate":
        print(f"config ok: {cfg.kind} ({cfg.mode}), hash {cfg.config_hash}")
        return 0
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if cfg.kind == "scaling":
            run_scaling(cfg, out_dir)
        else:
            col = Collector(cfg)
            RUNNERS[cfg.kind](cfg, col)
            _write_csv(out_dir / "records.csv", RECORD_COLUMNS, col.records)
            _write_csv(out_dir / "estimates.csv", ESTIMATE_COLUMNS, col.estimates)
    except (BellProbeError, NoSignalError) as exc:
        return _report_error(out_dir, exc.category, cfg.kind, cfg.config_hash, str(exc))
    stale = out_dir / "errors.csv"
    if stale.exists():
        stale.unlink()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellprobe", description="Bell-measurement Hamiltonian and relaxation estimation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("validate",):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
        p.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.seed, args.out)


if __name__ == "__main__":
    sys.exit(main())
