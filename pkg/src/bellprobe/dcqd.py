"""Probe preparations, Bell-state measurements and finite-ensemble sampling.

Register layout:

* two-qubit configurations: qubit 0 = system A, qubit 1 = ancilla B;
* ``DoubleBell``: qubits (A1, B1, A2, B2), the channel acts on (A1, A2).

Bell outcomes are always listed in the order (Phi+, Psi+, Psi-, Phi-), which is
also the Pauli-error order (I, X, Y, Z). Joint outcomes for ``DoubleBell`` are
indexed ``4*j + k`` with j the A1B1 label and k the A2B2 label, so outcome
(sigma_a, sigma_b) lands on the two-qubit Pauli index of sigma_a (x) sigma_b.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import qcore
from .dynamics import Channel
from .errors import DegenerateBranchError, ParameterError
from .qcore import BELL_LABELS, BELL_PROJECTORS, BELL_STATES, PAULIS, STRUCT_TOL

CONFIG_KINDS = ("BellZ", "NonMaxZ", "NonMaxX", "NonMaxY", "DoubleBell")
CONFIG_IDS = {kind: i for i, kind in enumerate(CONFIG_KINDS)}
NONMAX_KINDS = ("NonMaxZ", "NonMaxX", "NonMaxY")

DEFAULT_ALPHA = 0.8
DEFAULT_BETA = 0.6 * cmath.exp(1j * math.pi / 4)
MARGIN = 1e-6
BRANCH_FLOOR = 1e-12

JOINT_LABELS = tuple(f"{a}|{b}" for a in BELL_LABELS for b in BELL_LABELS)

_PLUS_X = np.array([1, 1], dtype=complex) / math.sqrt(2)
_MINUS_X = np.array([1, -1], dtype=complex) / math.sqrt(2)
_PLUS_Y = np.array([1, 1j], dtype=complex) / math.sqrt(2)
_MINUS_Y = np.array([1, -1j], dtype=complex) / math.sqrt(2)
_ZERO = np.array([1, 0], dtype=complex)
_ONE = np.array([0, 1], dtype=complex)

_XX = np.kron(PAULIS[1], PAULIS[1])
_ZZ = np.kron(PAULIS[3], PAULIS[3])


@dataclass(frozen=True)
class NormalizerLayout:
    """How one non-maximally entangled configuration reads chi.

    ``plus``/``minus`` are the Bell indices spanning the two stabilizer
    branches (input state lives in ``plus``); within each branch the first
    label has normalizer eigenvalue +1 and the second -1. The configuration
    constrains chi_00 + chi_kk, chi_jj + chi_ll, Im chi_0k and Re chi_jl, with
    ``re_sign`` the sign multiplying b in front of Re chi_jl.
    """

    axis: int
    normalizer: np.ndarray = field(repr=False)
    plus: tuple
    minus: tuple
    pair: tuple
    re_sign: int


LAYOUTS = {
    "NonMaxZ": NormalizerLayout(3, _XX, (0, 3), (1, 2), (1, 2), -1),
    "NonMaxX": NormalizerLayout(1, _ZZ, (0, 1), (3, 2), (3, 2), +1),
    "NonMaxY": NormalizerLayout(2, _ZZ, (3, 1), (0, 2), (3, 1), -1),
}


@dataclass(frozen=True)
class PreparationConfig:
    kind: str
    alpha: complex | None = None
    beta: complex | None = None

    def __post_init__(self):
        if self.kind not in CONFIG_KINDS:
            raise ParameterError(f"unknown preparation config {self.kind!r}; expected one of {CONFIG_KINDS}")
        if self.kind in NONMAX_KINDS:
            alpha = DEFAULT_ALPHA if self.alpha is None else complex(self.alpha)
            beta = DEFAULT_BETA if self.beta is None else complex(self.beta)
        else:
            if self.alpha is not None or self.beta is not None:
                raise ParameterError(f"{self.kind} uses fixed maximally entangled amplitudes")
            alpha = beta = complex(1 / math.sqrt(2))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        norm = abs(alpha) ** 2 + abs(beta) ** 2
        if abs(norm - 1) > 1e-12:
            raise ParameterError(f"|alpha|^2 + |beta|^2 = {norm!r}, must equal 1")
        if self.kind in NONMAX_KINDS:
            if min(abs(alpha), abs(beta)) < MARGIN:
                raise ParameterError("alpha and beta must both be nonzero")
            if abs(abs(alpha) - abs(beta)) < MARGIN:
                raise ParameterError("|alpha| must differ from |beta| for a non-maximally entangled probe")
            if abs((alpha.conjugate() * beta).imag) < MARGIN:
                raise ParameterError("Im(conj(alpha) beta) must be nonzero")

    @property
    def config_id(self) -> int:
        return CONFIG_IDS[self.kind]

    @property
    def n_outcomes(self) -> int:
        return 16 if self.kind == "DoubleBell" else 4

    @property
    def outcome_labels(self):
        return JOINT_LABELS if self.kind == "DoubleBell" else BELL_LABELS

    @property
    def n_qubits(self) -> int:
        return 4 if self.kind == "DoubleBell" else 2

    @property
    def targets(self):
        return (0, 2) if self.kind == "DoubleBell" else (0,)


def prepare_input(config: PreparationConfig) -> np.ndarray:
    """Pure input state as a density matrix."""
    a, b = config.alpha, config.beta
    if config.kind == "BellZ":
        psi = BELL_STATES[0]
    elif config.kind == "NonMaxZ":
        psi = a * np.kron(_ZERO, _ZERO) + b * np.kron(_ONE, _ONE)
    elif config.kind == "NonMaxX":
        psi = a * np.kron(_PLUS_X, _PLUS_X) + b * np.kron(_MINUS_X, _MINUS_X)
    elif config.kind == "NonMaxY":
        psi = a * np.kron(_PLUS_Y, _PLUS_Y) + b * np.kron(_MINUS_Y, _MINUS_Y)
    else:
        psi = np.kron(BELL_STATES[0], BELL_STATES[0])
    return qcore.projector(psi)


def measurement_projectors(config: PreparationConfig):
    if config.kind == "DoubleBell":
        return [np.kron(p, q) for p in BELL_PROJECTORS for q in BELL_PROJECTORS]
    return list(BELL_PROJECTORS)


def evolve(config: PreparationConfig, channel: Channel) -> np.ndarray:
    """(E (x) id)(rho_in): channel on the system qubit(s), ancillas idle."""
    if channel.n_qubits != len(config.targets):
        raise ValueError(
            f"{config.kind} needs a channel on {len(config.targets)} qubit(s), got {channel.n_qubits}"
        )
    return channel.apply_to(prepare_input(config), config.targets, config.n_qubits)


@dataclass(frozen=True)
class MeasurementRecord:
    """Bell-measurement statistics for one configuration at one time point.

    ``probabilities`` are always the exact outcome probabilities. In sampled
    mode ``counts`` holds the simulated tallies and estimators read
    ``frequencies`` (= counts / shots).
    """

    config: PreparationConfig
    time: float
    probabilities: np.ndarray = field(repr=False)
    mode: str = "exact"
    counts: np.ndarray | None = field(default=None, repr=False)
    shots: int | None = None
    seed: int | None = None
    time_index: int = 0

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.shape != (self.config.n_outcomes,):
            raise ValueError(f"expected {self.config.n_outcomes} probabilities, got shape {p.shape}")
        if p.min() < -STRUCT_TOL or abs(p.sum() - 1) > STRUCT_TOL:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        if self.mode == "sampled":
            c = np.array(self.counts, dtype=np.int64)
            if c.shape != p.shape or c.min() < 0 or c.sum() != self.shots:
                raise ValueError("counts must be nonnegative and sum to the number of shots")
            c.setflags(write=False)
            object.__setattr__(self, "counts", c)
        elif self.mode != "exact":
            raise ValueError(f"unknown record mode {self.mode!r}")

    @property
    def labels(self):
        return self.config.outcome_labels

    @property
    def frequencies(self) -> np.ndarray:
        if self.mode == "sampled":
            return self.counts / self.shots
        return np.clip(self.probabilities, 0.0, None)

    @property
    def is_sampled(self) -> bool:
        return self.mode == "sampled"

    def covariance(self) -> np.ndarray:
        """Multinomial covariance of ``frequencies`` (zero in exact mode)."""
        if not self.is_sampled:
            return np.zeros((len(self.probabilities),) * 2)
        f = self.frequencies
        return (np.diag(f) - np.outer(f, f)) / self.shots


def outcome_probabilities(config: PreparationConfig, channel: Channel, t: float, time_index: int = 0) -> MeasurementRecord:
    """Exact p_k = tr[P_k (E (x) id)(rho)] for every Bell (or joint Bell) outcome."""
    rho = evolve(config, channel)
    p = np.array([np.real(np.trace(proj @ rho)) for proj in measurement_projectors(config)])
    # round-off can leave -1e-17 entries; renormalise after clipping
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    return MeasurementRecord(config, float(t), p, time_index=time_index)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``seed`` and an integer tuple."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def sample_outcomes(record: MeasurementRecord, shots: int, seed: int) -> MeasurementRecord:
    """Multinomial tallies for ``shots`` repetitions.

    The generator is keyed by (seed, config id, time index), so the same
    record/shots/seed triple always reproduces the same counts regardless of
    the order in which time points are simulated.
    """
    shots = int(shots)
    if shots < 1:
        raise ValueError("need at least one shot")
    rng = make_rng(seed, record.config.config_id, record.time_index)
    p = np.clip(record.probabilities, 0.0, None)
    counts = rng.multinomial(shots, p / p.sum())
    return replace(record, mode="sampled", counts=counts, shots=shots, seed=int(seed))


@dataclass(frozen=True)
class NormalizerStats:
    """Stabilizer-branch weights and normalizer correlations of one configuration.

    c_plus / c_minus are p_(+-) tr(N rho_(+-)), i.e. tr(N P E(rho) P), which stays
    well defined when a branch is empty. ``covariance`` is the 4x4 covariance of
    (p_plus, p_minus, c_plus, c_minus).
    """

    kind: str
    p_plus: float
    p_minus: float
    c_plus: float
    c_minus: float
    a: float
    b: float
    shots: int | None = None
    covariance: np.ndarray | None = field(default=None, repr=False)

    @property
    def layout(self) -> NormalizerLayout:
        return LAYOUTS[self.kind]

    @property
    def measured(self) -> np.ndarray:
        return np.array([self.p_plus, self.p_minus, self.c_plus, self.c_minus])

    def branch_expectation(self, branch: str) -> float:
        """tr(N rho_(+-)) on the normalised post-measurement branch state."""
        p, c = (self.p_plus, self.c_plus) if branch == "+" else (self.p_minus, self.c_minus)
        if p < BRANCH_FLOOR:
            raise DegenerateBranchError(f"branch {branch} has probability {p:.3g}; conditional state undefined")
        return c / p


def preparation_constants(config: PreparationConfig):
    """a = tr(N rho) and b = 2i tr(sigma_k^A N rho); both real."""
    lay = LAYOUTS[config.kind]
    rho = prepare_input(config)
    a = np.trace(lay.normalizer @ rho)
    sk = np.kron(PAULIS[lay.axis], PAULIS[0])
    b = 2j * np.trace(sk @ lay.normalizer @ rho)
    return float(np.real(a)), float(np.real(b))


def _require_nonmax(config):
    if config.kind not in NONMAX_KINDS:
        raise ParameterError(f"normalizer statistics need a non-maximally entangled config, got {config.kind}")


def normalizer_statistics(config: PreparationConfig, channel: Channel, t: float) -> NormalizerStats:
    """Exact branch weights and normalizer correlations from the evolved state."""
    _require_nonmax(config)
    lay = LAYOUTS[config.kind]
    rho = evolve(config, channel)
    pp = BELL_PROJECTORS[lay.plus[0]] + BELL_PROJECTORS[lay.plus[1]]
    pm = BELL_PROJECTORS[lay.minus[0]] + BELL_PROJECTORS[lay.minus[1]]
    n = lay.normalizer
    p_plus = float(np.real(np.trace(pp @ rho)))
    p_minus = float(np.real(np.trace(pm @ rho)))
    c_plus = float(np.real(np.trace(n @ pp @ rho @ pp)))
    c_minus = float(np.real(np.trace(n @ pm @ rho @ pm)))
    a, b = preparation_constants(config)
    return NormalizerStats(config.kind, p_plus, p_minus, c_plus, c_minus, a, b, None, np.zeros((4, 4)))


def _stats_map(kind: str) -> np.ndarray:
    lay = LAYOUTS[kind]
    m = np.zeros((4, 4))
    m[0, list(lay.plus)] = 1
    m[1, list(lay.minus)] = 1
    m[2, lay.plus[0]], m[2, lay.plus[1]] = 1, -1
    m[3, lay.minus[0]], m[3, lay.minus[1]] = 1, -1
    return m


def normalizer_statistics_from_record(record: MeasurementRecord) -> NormalizerStats:
    """Normalizer statistics read off a Bell-measurement record.

    Bell states are joint eigenstates of the stabilizer and the normalizer, so
    one Bell outcome fixes both the branch and the normalizer value; the
    second-stage normalizer measurement on a branch is therefore a relabelling
    of the Bell tallies of that branch.
    """
    config = record.config
    _require_nonmax(config)
    m = _stats_map(config.kind)
    y = m @ record.frequencies
    cov = m @ record.covariance() @ m.T
    a, b = preparation_constants(config)
    return NormalizerStats(config.kind, *map(float, y), a, b, record.shots, cov)
