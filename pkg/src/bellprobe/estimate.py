"""Inversion of Bell-measurement statistics into physical parameters.

All estimators accept exact or sampled ``MeasurementRecord``s. Standard errors
are 1-sigma delta-method propagations of the multinomial covariance and are
zero in exact mode.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dcqd import LAYOUTS, NONMAX_KINDS, MeasurementRecord, NormalizerStats
from .dynamics import ChiMatrix
from .errors import (
    ConditioningError,
    DegenerateTimeError,
    InconsistencyError,
    ModelViolationError,
    OutOfRangeError,
    ParameterError,
)

EPS_DENOM_EXACT = 1e-6
EPS_COND = 1e-6
MAX_CONDITION = 1e6
EXACT_TOL = 1e-9
N_SIGMA = 4.0

# joint outcome indices of the double-Bell record
PHI_PLUS_PAIR, PSI_PLUS_PAIR, PSI_MINUS_PAIR, PHI_MINUS_PAIR = 0, 5, 10, 15


def _require(record: MeasurementRecord, kind: str):
    if record.config.kind != kind:
        raise ParameterError(f"estimator needs a {kind} record, got {record.config.kind}")


def _slack(stderr: float) -> float:
    return max(EXACT_TOL, N_SIGMA * stderr)


def denominator_floor(record: MeasurementRecord) -> float:
    return 10.0 / record.shots if record.is_sampled else EPS_DENOM_EXACT


@dataclass(frozen=True)
class DirectionEstimate:
    magnitudes: np.ndarray
    stderr: np.ndarray
    signs: tuple | None = None
    global_sign_fixed: bool = False
    time: float | None = None

    @property
    def vector(self) -> np.ndarray | None:
        """Signed unit direction, or None when signs are unresolved."""
        if self.signs is None:
            return None
        return self.magnitudes * np.array(self.signs, dtype=float)


def estimate_direction_magnitudes(record: MeasurementRecord) -> DirectionEstimate:
    """|J_hat_a| = sqrt(p_a / (1 - p_I)) from one BellZ record.

    Outcome Psi+ reads the x axis, Psi- the y axis and Phi- the z axis.
    """
    _require(record, "BellZ")
    f = record.frequencies
    moved = float(f[1:].sum())
    floor = denominator_floor(record)
    if moved < floor:
        raise DegenerateTimeError(
            f"1 - p_I = {moved:.3g} is below {floor:.3g}; no detectable evolution at t={record.time}"
        )
    ratio = f[1:] / moved
    mags = np.sqrt(ratio)
    if record.is_sampled:
        var_ratio = ratio * (1 - ratio) / (record.shots * moved)
        # at ratio = 0 the square root is not differentiable; report sqrt of the ratio error
        with np.errstate(divide="ignore", invalid="ignore"):
            se = np.where(ratio > 0, np.sqrt(var_ratio) / (2 * mags), np.sqrt(np.sqrt(1.0 / (record.shots * moved))))
    else:
        se = np.zeros(3)
    return DirectionEstimate(mags, se, time=record.time)


@dataclass(frozen=True)
class OffDiagonalSolution:
    """Linear-inversion output for one non-maximally entangled configuration.

    ``im_0k`` is Im chi_{0,axis}; ``re_pair`` is Re chi_{pair}.
    """

    kind: str
    chi_diagonal: np.ndarray
    im_0k: float
    re_pair: float
    axis: int
    pair: tuple
    condition_number: float
    stderr: np.ndarray = field(repr=False)
    residual: float = 0.0

    @property
    def im_0k_stderr(self) -> float:
        return float(self.stderr[4])

    @property
    def re_pair_stderr(self) -> float:
        return float(self.stderr[5])


def solve_offdiagonal(stats: NormalizerStats, diagonal: MeasurementRecord | np.ndarray) -> OffDiagonalSolution:
    """Least-squares solve of one configuration's four equations plus chi_ii.

    A single configuration only fixes chi_00 + chi_kk, chi_jj + chi_ll and two
    mixed combinations, so the diagonal (from a BellZ record, or given
    directly) completes the system. Unknowns are
    (chi_00, chi_11, chi_22, chi_33, Im chi_0k, Re chi_jl).
    """
    if stats.kind not in NONMAX_KINDS:
        raise ParameterError(f"no off-diagonal layout for {stats.kind}")
    lay = LAYOUTS[stats.kind]
    if isinstance(diagonal, MeasurementRecord):
        _require(diagonal, "BellZ")
        d_val, d_cov = diagonal.frequencies, diagonal.covariance()
    else:
        d_val, d_cov = np.asarray(diagonal, dtype=float), np.zeros((4, 4))
    if abs(stats.b) < EPS_COND:
        raise ConditioningError(f"|b| = {abs(stats.b):.3g} too small to resolve the imaginary/real parts")

    a, b = stats.a, stats.b
    k = lay.axis
    j, l = lay.pair
    A = np.zeros((8, 6))
    A[0, [0, k]] = 1
    A[1, [j, l]] = 1
    A[2, 0], A[2, k], A[2, 4] = a, -a, b
    A[3, j], A[3, l], A[3, 5] = a, -a, lay.re_sign * b
    A[4:, :4] = np.eye(4)
    y = np.concatenate([stats.measured, d_val])
    cond = float(np.linalg.cond(A))
    if not cond < MAX_CONDITION:
        raise ConditioningError(f"condition number {cond:.3g} exceeds {MAX_CONDITION:.0e} (a={a:.3g}, b={b:.3g})")
    pinv = np.linalg.pinv(A)
    x = pinv @ y
    cov_y = np.zeros((8, 8))
    cov_y[:4, :4] = stats.covariance if stats.covariance is not None else 0.0
    cov_y[4:, 4:] = d_cov
    cov_x = pinv @ cov_y @ pinv.T
    se = np.sqrt(np.clip(np.diag(cov_x), 0, None))
    resid = float(np.linalg.norm(A @ x - y))
    return OffDiagonalSolution(stats.kind, x[:4], float(x[4]), float(x[5]), k, (j, l), cond, se, resid)


def _significant(value: float, se: float) -> bool:
    return abs(value) > max(1e-12, 3 * se)


def reconstruct_direction_signs(
    mags: DirectionEstimate,
    sols,
    t: float,
    j_max: float | None,
) -> DirectionEstimate:
    """Attach signs to the direction magnitudes.

    With 0 < J_max t < pi/2 we have sin(Jt) cos(Jt) > 0, so
    sign(J_hat_a) = sign(Im chi_0a) wherever a configuration reads axis a
    directly, and Re chi_ab = sin^2(Jt) J_hat_a J_hat_b links pairs of axes.
    Signs are fixed greedily: the constraint with the largest |value|/stderr
    is applied first. All standard errors scale together with the shot count,
    so that ordering (and every recovered sign) is unchanged when all counts
    are multiplied by a common factor. Afterwards every significant Re chi_ab
    is cross-checked against the sign product.

    ``global_sign_fixed`` is True only when every axis was read directly
    (all three configurations); otherwise the overall orientation rests on a
    partial set of direct reads and is reported as not fixed.
    """
    if j_max is None:
        return mags
    if not 0 < j_max * t < math.pi / 2:
        raise ParameterError(f"sign recovery needs 0 < J_max*t < pi/2, got {j_max * t:.4g}")
    sols = list(sols)
    kinds = {s.kind for s in sols}
    if len(kinds) < 2 or len(kinds) != len(sols):
        raise ParameterError("sign recovery needs solutions from at least two distinct configurations")

    m, mse = mags.magnitudes, mags.stderr
    direct = {s.axis - 1: (s.im_0k, s.im_0k_stderr) for s in sols}
    rel = {tuple(sorted((s.pair[0] - 1, s.pair[1] - 1))): (s.re_pair, s.re_pair_stderr) for s in sols}

    def strength(v, se):
        return abs(v) / max(se, 1e-300)

    signs = [1 if m[ax] <= 1e-12 else None for ax in range(3)]
    while any(sg is None for sg in signs):
        best = None
        for ax in range(3):
            if signs[ax] is not None:
                continue
            cands = []
            if ax in direct and abs(direct[ax][0]) > 1e-12:
                cands.append((strength(*direct[ax]), 1 if direct[ax][0] > 0 else -1))
            for pr, (v, se) in rel.items():
                other = pr[0] if pr[1] == ax else pr[1] if pr[0] == ax else None
                if other is not None and signs[other] is not None and abs(v) > 1e-12:
                    cands.append((strength(v, se), signs[other] * (1 if v > 0 else -1)))
            for z, sg in cands:
                if best is None or z > best[0]:
                    best = (z, sg, ax)
        if best is None:
            raise InconsistencyError(f"could not resolve every sign from the supplied configurations ({sorted(kinds)})")
        signs[best[2]] = best[1]

    for (p, q), (v, se) in rel.items():
        if _significant(v, se) and _significant(m[p], mse[p]) and _significant(m[q], mse[q]):
            if (v > 0) != (signs[p] * signs[q] > 0):
                raise InconsistencyError(
                    f"Re chi_{p + 1}{q + 1} = {v:.3g} contradicts signs {signs[p]:+d}, {signs[q]:+d}"
                )
    return DirectionEstimate(m, mse, tuple(signs), len(direct) == 3, mags.time)


@dataclass(frozen=True)
class RelaxationEstimate:
    T1: float
    T2: float
    rate1: float
    rate2: float
    stderr_T1: float
    stderr_T2: float
    time: float
    flagged: bool = False


def estimate_relaxation(record: MeasurementRecord, t: float | None = None) -> RelaxationEstimate:
    """Single-time T1/T2 from one BellZ record.

    1/T2 = -ln(p_Phi+ - p_Phi-)/t and 1/T1 = -ln(1 - 2(p_Psi+ + p_Psi-))/t.
    The T1 logarithm takes 1 - 2(p_Psi+ + p_Psi-) = exp(-t/T1); the
    alternative ordering 2(...) - 1 equals -exp(-t/T1) and is always negative.
    """
    _require(record, "BellZ")
    t = record.time if t is None else float(t)
    if not t > 0:
        raise ParameterError("relaxation estimation needs t > 0")
    f = record.frequencies
    x = float(f[1] + f[2])
    y = float(f[0] - f[3])
    arg1, arg2 = 1 - 2 * x, y
    for name, arg in (("T1", arg1), ("T2", arg2)):
        if not 0 < arg <= 1 + 1e-12:
            raise OutOfRangeError(
                f"{name} log argument {arg:.4g} outside (0, 1]; use a smaller t or more shots"
            )
    rate1 = max(-math.log(min(arg1, 1.0)) / t, 0.0)
    rate2 = max(-math.log(min(arg2, 1.0)) / t, 0.0)
    if record.is_sampled:
        n = record.shots
        se_rate1 = 2 * math.sqrt(x * (1 - x) / n) / (arg1 * t)
        se_rate2 = math.sqrt(max(f[0] + f[3] - y * y, 0.0) / n) / (arg2 * t)
    else:
        se_rate1 = se_rate2 = 0.0
    T1 = 1 / rate1 if rate1 > 0 else math.inf
    T2 = 1 / rate2 if rate2 > 0 else math.inf
    se1 = se_rate1 / rate1**2 if rate1 > 0 else math.inf
    se2 = se_rate2 / rate2**2 if rate2 > 0 else math.inf
    # T2 <= 2 T1  <=>  rate2 >= rate1 / 2
    flagged = rate2 < rate1 / 2 - _slack(math.hypot(se_rate2, se_rate1 / 2))
    return RelaxationEstimate(T1, T2, rate1, rate2, se1, se2, t, bool(flagged))


def _alias_set(principal_angle: float, scale: float, n_alias: int):
    """Nonnegative {(k pi +- angle) * scale : k = 0..n_alias}, sorted."""
    vals = {round(principal_angle * scale, 15)}
    for k in range(n_alias + 1):
        for v in (k * math.pi + principal_angle, k * math.pi - principal_angle):
            if v >= 0:
                vals.add(round(v * scale, 15))
    return tuple(sorted(vals))


def _sin_from_pair_prob(p: float, n: int | None):
    """2 sqrt(p) and its standard error (d(2 sqrt p)/dp = 1/sqrt p)."""
    y = 2 * math.sqrt(max(p, 0.0))
    se = math.sqrt(max(1 - p, 0.0) / n) if n else 0.0
    return y, se


@dataclass(frozen=True)
class IsotropicEstimate:
    abs_J: float
    sin_2Jt: float
    stderr_sin: float
    stderr_J: float
    components: tuple
    aliases: tuple
    consistency_residual: float
    time: float


def estimate_isotropic_coupling(record: MeasurementRecord, t: float | None = None, n_alias: int = 3) -> IsotropicEstimate:
    """|J| of an isotropic exchange coupling from one double-Bell record.

    sin(2|J|t) = 2 sqrt(P(Phi-,Phi-)) = 2 sqrt(P(Psi+,Psi+)) = 2 sqrt(P(Psi-,Psi-)),
    combined with inverse-variance weights; P(Phi+,Phi+) = 1 - 3 s^2 c^2 is
    checked as a model test.
    """
    _require(record, "DoubleBell")
    t = record.time if t is None else float(t)
    if not t > 0:
        raise ParameterError("coupling estimation needs t > 0")
    f = record.frequencies
    n = record.shots if record.is_sampled else None
    comps = [_sin_from_pair_prob(f[i], n) for i in (PHI_MINUS_PAIR, PSI_PLUS_PAIR, PSI_MINUS_PAIR)]
    ys = np.array([c[0] for c in comps])
    ses = np.array([c[1] for c in comps])
    if n:
        w = 1 / np.maximum(ses, 1e-12) ** 2
        y = float(np.sum(w * ys) / np.sum(w))
        se_y = float(1 / math.sqrt(np.sum(w)))
    else:
        y, se_y = float(ys.mean()), 0.0
    if y > 1 + _slack(se_y):
        raise ModelViolationError(f"2 sqrt(p) = {y:.6g} > 1: statistics not generated by isotropic exchange")
    y = min(y, 1.0)
    predicted = 1 - 0.75 * y * y
    se_pred = 1.5 * y * se_y
    se_p00 = math.sqrt(f[PHI_PLUS_PAIR] * (1 - f[PHI_PLUS_PAIR]) / n) if n else 0.0
    resid = float(f[PHI_PLUS_PAIR] - predicted)
    if abs(resid) > _slack(math.hypot(se_pred, se_p00)):
        raise ModelViolationError(
            f"P(Phi+,Phi+) = {f[PHI_PLUS_PAIR]:.6g} but isotropic model predicts {predicted:.6g}"
        )
    angle = math.asin(y)
    cos2 = math.sqrt(max(1 - y * y, 0.0))
    se_J = se_y / (2 * t * cos2) if cos2 > 0 else math.inf
    return IsotropicEstimate(
        abs_J=angle / (2 * t),
        sin_2Jt=y,
        stderr_sin=se_y,
        stderr_J=se_J if n else 0.0,
        components=tuple(float(v) for v in ys),
        aliases=_alias_set(angle, 1 / (2 * t), n_alias),
        consistency_residual=resid,
        time=t,
    )


@dataclass(frozen=True)
class ExchangeEstimate:
    """|Jx|, |Jy|, |Jz| (principal branches) with alias sets per axis."""

    abs_J: np.ndarray
    stderr: np.ndarray
    aliases: tuple
    time: float
    assumed_class: str = "Jx=Jy"


def estimate_anisotropic_couplings(
    record: MeasurementRecord,
    t: float | None = None,
    kind: str | None = None,
    n_alias: int = 3,
) -> ExchangeEstimate:
    """Exchange magnitudes for the Jx = Jy family (isotropic, XY, XXZ).

    sin(2|Jx|t) = 2 sqrt(P(Psi+,Psi+)) and sin(2|Jy|t) = 2 sqrt(P(Psi-,Psi-));
    with s_x = sin(|Jx|t), c_x = cos(|Jx|t),

        cos(|Jz| t) = sqrt((P(Phi+,Phi+) - s_x^4) / (c_x^4 - s_x^4)).

    For Jx = Jy the radicand equals cos^2(Jz t) exactly, so the angle on the
    left is |Jz| t, not 2|Jz| t. General XYZ couplings do not satisfy these
    relations and are refused, either by tag or because
    P(Psi+,Psi+) != P(Psi-,Psi-).
    """
    _require(record, "DoubleBell")
    t = record.time if t is None else float(t)
    if not t > 0:
        raise ParameterError("coupling estimation needs t > 0")
    if kind == "XYZ":
        raise ModelViolationError("the double-Bell magnitude relations hold only for Jx = Jy couplings; XYZ refused")
    f = record.frequencies
    n = record.shots if record.is_sampled else None
    yx, sex = _sin_from_pair_prob(f[PSI_PLUS_PAIR], n)
    yy, sey = _sin_from_pair_prob(f[PSI_MINUS_PAIR], n)
    gap = f[PSI_PLUS_PAIR] - f[PSI_MINUS_PAIR]
    se_gap = math.sqrt((f[PSI_PLUS_PAIR] + f[PSI_MINUS_PAIR] - gap**2) / n) if n else 0.0
    if abs(gap) > _slack(se_gap):
        raise ModelViolationError(
            f"P(Psi+,Psi+) - P(Psi-,Psi-) = {gap:.3g}: couplings are not in the Jx = Jy family"
        )
    for y, se in ((yx, sex), (yy, sey)):
        if y > 1 + _slack(se):
            raise ModelViolationError(f"2 sqrt(p) = {y:.6g} > 1: not an exchange-generated record")
    yx, yy = min(yx, 1.0), min(yy, 1.0)
    ax, ay = math.asin(yx), math.asin(yy)
    jx_t = ax / 2
    sx2, cx2 = math.sin(jx_t) ** 2, math.cos(jx_t) ** 2
    denom = cx2**2 - sx2**2
    if abs(denom) < EPS_COND:
        raise DegenerateTimeError(f"|Jx| t = {jx_t:.6g} is at pi/4: c_x^4 - s_x^4 vanishes")
    rad = (f[PHI_PLUS_PAIR] - sx2**2) / denom
    se_rad = math.sqrt(f[PHI_PLUS_PAIR] * (1 - f[PHI_PLUS_PAIR]) / n) / abs(denom) if n else 0.0
    if rad < -_slack(se_rad) or rad > 1 + _slack(se_rad):
        raise ModelViolationError(f"Jz radicand {rad:.6g} outside [0, 1]")
    rad = min(max(rad, 0.0), 1.0)
    az = math.acos(math.sqrt(rad))

    def se_from_sin(y, se, scale):
        c = math.sqrt(max(1 - y * y, 0.0))
        return se * scale / c if c > 0 else math.inf

    if n:
        r = math.sqrt(rad)
        se_z = se_rad / (2 * r * math.sqrt(max(1 - rad, 0.0)) * t) if 0 < rad < 1 else math.inf
        se = np.array([se_from_sin(yx, sex, 1 / (2 * t)), se_from_sin(yy, sey, 1 / (2 * t)), se_z])
    else:
        se = np.zeros(3)
    aliases = (
        _alias_set(ax, 1 / (2 * t), n_alias),
        _alias_set(ay, 1 / (2 * t), n_alias),
        _alias_set(az, 1 / t, n_alias),
    )
    return ExchangeEstimate(np.array([ax / (2 * t), ay / (2 * t), az / t]), se, aliases, t)


def bell_energies(jx: float, jy: float, jz: float):
    """Exchange eigenvalues on (Phi+, Psi+, Psi-, Phi-)."""
    return (jx - jy + jz, jx + jy - jz, -jx - jy - jz, -jx + jy + jz)


def exchange_spectrum(est, signs=None, relative=None):
    """Candidate exchange spectra from coupling magnitudes.

    ``est`` is an ``ExchangeEstimate`` or a magnitude triple. With ``signs``
    (a +-1 triple) the single spectrum is returned. Otherwise every sign
    assignment consistent with ``relative`` (a dict such as ``{"yz": +1,
    "xz": -1}`` holding sign products) is enumerated. Each spectrum is a tuple
    of energies in Bell order (Phi+, Psi+, Psi-, Phi-); within each sign
    assignment the energies take the form +-|J_a| +- |J_b -+ J_c|.
    """
    mags = np.abs(np.asarray(getattr(est, "abs_J", est), dtype=float))
    if signs is not None:
        return [tuple(float(e) for e in bell_energies(*(mags * np.array(signs))))]
    relative = relative or {}
    axis = {"x": 0, "y": 1, "z": 2}
    out = []
    for combo in itertools.product((1, -1), repeat=3):
        ok = all(combo[axis[k[0]]] * combo[axis[k[1]]] == v for k, v in relative.items())
        if ok:
            energies = tuple(float(e) + 0.0 for e in bell_energies(*(mags * np.array(combo))))
            if energies not in out:
                out.append(energies)
    return out


def exchange_relative_signs(chi: ChiMatrix, t: float, j_max: float | None = None):
    """Sign information carried by chi_{0,5} and chi_{0,10} of an exchange unitary.

    Re chi_{0,5} = sin(2 Jy t) sin(2 Jz t)/4 and Re chi_{0,10} =
    sin(2 Jx t) sin(2 Jz t)/4, so for max|J_a| t < pi/2 they give the products
    sign(Jy Jz) and sign(Jx Jz). Im chi_{0,5} = cos(Jx t) sin(Jx t)
    (cos^2 Jy t cos^2 Jz t - sin^2 Jy t sin^2 Jz t) also fixes sign(Jx) once
    max|J_a| t < pi/4; that absolute sign is returned only when ``j_max``
    certifies it.
    """
    if len(chi.basis) != 16:
        raise ValueError("exchange sign read-out needs a two-qubit chi matrix")
    if j_max is not None and not j_max * t < math.pi / 2:
        raise ParameterError("relative sign read-out needs J_max t < pi/2")
    c05, c010 = chi[0, 5], chi[0, 10]
    rel = {}
    if abs(c05.real) > 1e-12:
        rel["yz"] = 1 if c05.real > 0 else -1
    if abs(c010.real) > 1e-12:
        rel["xz"] = 1 if c010.real > 0 else -1
    if "yz" in rel and "xz" in rel:
        rel["xy"] = rel["yz"] * rel["xz"]
    absolute = None
    if j_max is not None and j_max * t < math.pi / 4 and abs(c05.imag) > 1e-12:
        absolute = {"x": 1 if c05.imag > 0 else -1}
    return rel, absolute
